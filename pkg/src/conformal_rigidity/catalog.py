"""Built-in immersions with closed forms, for any ``n >= 3``.

With ``d = n - 1`` parameters ``u = (u1 .. ud)`` and ``|u|^2 = sum u_i^2``:

``paraboloid``
    ``(u, |u|^2 / 2)`` on ``[-0.5, 0.5]^d``.  Umbilical only at ``u = 0``.
``graph-cubic``
    ``(u, f)`` with ``f = sum_i i u_i^2 / 2 + sum_i u_i^3 / 6 + u1 u2 ud / 2``
    on ``[-0.5, 0.5]^d``.  At the origin ``g = I`` and ``h = diag(1..d) - mean``.
``sphere-stereographic``
    Inverse stereographic chart of the unit sphere,
    ``(2u, |u|^2 - 1) / (1 + |u|^2)`` on ``[-1, 1]^d``.  Umbilical everywhere.
``ellipsoid-graph``
    Lower sheet ``-c sqrt(1 - sum u_i^2 / a_i^2)`` with ``a_i = 1 + i/2``
    (``i = 0 .. d-1``) and ``c = 1.2`` on ``[-0.4, 0.4]^d``.
``pseudo-graph``
    In signature ``(n-1, 1)``: ``(u, 0.3 f)`` with ``f`` the graph-cubic
    function on ``[-0.4, 0.4]^d``, the last coordinate being the timelike one.
    The surface is spacelike with timelike normal (``epsilon = -1``).
"""
from __future__ import annotations

from .errors import InvalidParameter
from .hypersurface import Immersion
from .mobius import AmbientSpace

CATALOG = ("paraboloid", "graph-cubic", "sphere-stereographic", "ellipsoid-graph", "pseudo-graph")


def _vars(d):
    return [f"u{i}" for i in range(1, d + 1)]


def _cubic_graph(d):
    u = _vars(d)
    quad = " + ".join(f"{i}*{v}^2/2" for i, v in enumerate(u, start=1))
    cube = " + ".join(f"{v}^3/6" for v in u)
    return f"{quad} + {cube} + {u[0]}*{u[1]}*{u[-1]}/2"


def _expressions(name: str, d: int):
    u = _vars(d)
    norm2 = " + ".join(f"{v}^2" for v in u)
    if name == "paraboloid":
        return u + [f"({norm2})/2"], [(-0.5, 0.5)] * d
    if name == "graph-cubic":
        return u + [_cubic_graph(d)], [(-0.5, 0.5)] * d
    if name == "sphere-stereographic":
        den = f"(1 + {norm2})"
        comps = [f"2*{v}/{den}" for v in u] + [f"({norm2} - 1)/{den}"]
        return comps, [(-1.0, 1.0)] * d
    if name == "ellipsoid-graph":
        terms = " + ".join(f"{v}^2/{(1 + 0.5 * i) ** 2!r}" for i, v in enumerate(u))
        return u + [f"-1.2*sqrt(1 - ({terms}))"], [(-0.4, 0.4)] * d
    if name == "pseudo-graph":
        return u + [f"0.3*({_cubic_graph(d)})"], [(-0.4, 0.4)] * d
    raise InvalidParameter(f"unknown catalog surface {name!r}; choose from {', '.join(CATALOG)}")


def default_space(name: str, n: int = 4) -> AmbientSpace:
    if name == "pseudo-graph":
        return AmbientSpace.of(n - 1, 1)
    return AmbientSpace.of(n, 0)


def catalog_surface(name: str, n: int = 4, space: AmbientSpace = None) -> Immersion:
    """Catalog immersion ``name`` into ``space`` (default per surface, dimension ``n``)."""
    if space is None:
        space = default_space(name, n)
    if space.n < 3:
        raise InvalidParameter("catalog surfaces need n >= 3")
    if name == "pseudo-graph" and space.metric[-1, -1] > 0:
        raise InvalidParameter("pseudo-graph needs a timelike last coordinate (q >= 1)")
    comps, domain = _expressions(name, space.n - 1)
    return Immersion.from_strings(space, comps, domain, name)
