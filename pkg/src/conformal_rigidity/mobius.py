"""Light-cone (Darboux) model of the flat conformal space ``R^{p,q}``.

Ambient vectors are arrays of length ``n + 2`` in the null-pair basis
``(e_minus, e_1 .. e_n, e_plus)`` with ``<e_minus, e_plus> = -1``:

    <X, Y> = G(x_s, y_s) - x_minus * y_plus - x_plus * y_minus

A point ``x`` lifts to the null vector ``e_minus + x + G(x, x)/2 e_plus``,
so ``<lift(0), e_plus> = -1``.  Hyperspheres are non-null vectors; a point
lies on a sphere iff the two are orthogonal.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bilinear import Signature, as_form
from .errors import DimensionMismatch, InvalidParameter, PointAtInfinity


@dataclass(frozen=True)
class AmbientSpace:
    signature: Signature

    @classmethod
    def of(cls, p: int, q: int = 0) -> "AmbientSpace":
        return cls(Signature(p, q))

    @property
    def n(self) -> int:
        return self.signature.n

    @property
    def p(self) -> int:
        return self.signature.p

    @property
    def q(self) -> int:
        return self.signature.q

    @property
    def metric(self) -> np.ndarray:
        return self.signature.metric()

    @property
    def gram(self) -> np.ndarray:
        """Gram matrix ``Q`` of the ambient form, signature ``(p+1, q+1)``."""
        n = self.n
        Q = np.zeros((n + 2, n + 2))
        Q[1 : n + 1, 1 : n + 1] = self.metric
        Q[0, n + 1] = Q[n + 1, 0] = -1.0
        return Q

    def flat(self, x, y) -> float:
        """Flat-model bilinear form ``G(x, y)``."""
        return float(np.dot(np.asarray(x, float) * self.metric.diagonal(), y))

    @property
    def e_minus(self) -> np.ndarray:
        v = np.zeros(self.n + 2)
        v[0] = 1.0
        return v

    @property
    def e_plus(self) -> np.ndarray:
        v = np.zeros(self.n + 2)
        v[-1] = 1.0
        return v

    def embed(self, v) -> np.ndarray:
        """Spatial vector ``v`` as an ambient vector with zero null-pair parts."""
        out = np.zeros(self.n + 2)
        out[1:-1] = self._point(v)
        return out

    def _point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DimensionMismatch(f"expected a {self.n}-vector, got shape {x.shape}")
        return x


def inner(space: AmbientSpace, X, Y) -> float:
    """Ambient scalar product ``<X, Y>``."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    Gd = space.metric.diagonal()
    return float(np.dot(X[1:-1] * Gd, Y[1:-1]) - X[0] * Y[-1] - X[-1] * Y[0])


def lift_point(space: AmbientSpace, x) -> np.ndarray:
    x = space._point(x)
    X = np.empty(space.n + 2)
    X[0] = 1.0
    X[1:-1] = x
    X[-1] = 0.5 * space.flat(x, x)
    return X


def project_point(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if not abs(X[0]) > 1e-12 * np.linalg.norm(X):
        raise PointAtInfinity("ambient vector has no e_minus component")
    return X[1:-1] / X[0]


def sphere_vector(space: AmbientSpace, center, radius_sq: float) -> np.ndarray:
    """Vector of the hypersphere ``G(x - c, x - c) = radius_sq``."""
    S = lift_point(space, center)
    S[-1] -= 0.5 * radius_sq
    return S


def plane_vector(space: AmbientSpace, normal, offset: float) -> np.ndarray:
    """Vector of the hyperplane ``G(x, normal) = offset`` (a sphere through infinity)."""
    S = space.embed(normal)
    S[-1] = offset
    return S


def incidence(space: AmbientSpace, X, S) -> float:
    return inner(space, X, S)


def quadric_residual(space: AmbientSpace, coords, g_frame) -> float:
    """Left side of the hyperquadric equation in frame coordinates.

    ``coords = (x^0, x^1 .. x^{n-1}, x^n, x^{n+1})`` relative to a frame whose
    Gram matrix is the normalized one with first fundamental form ``g_frame``.
    """
    x = np.asarray(coords, dtype=float)
    g = as_form(g_frame)
    n = space.n
    if x.shape != (n + 2,) or g.shape != (n - 1, n - 1):
        raise DimensionMismatch("coordinates or form do not match the space")
    xi = x[1:n]
    return float(xi @ g @ xi + x[n] ** 2 - 2.0 * x[0] * x[n + 1])


# -- the group ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MobiusMap:
    """Element of ``O(p+1, q+1)`` acting on the light cone."""

    space: AmbientSpace
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        k = self.space.n + 2
        if m.shape != (k, k):
            raise DimensionMismatch(f"expected a {k}x{k} matrix, got {m.shape}")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, space: AmbientSpace) -> "MobiusMap":
        return cls(space, np.eye(space.n + 2))

    def __matmul__(self, other: "MobiusMap") -> "MobiusMap":
        return compose(self, other)

    def __call__(self, x) -> np.ndarray:
        return apply_to_ambient_point(self, x)

    def conformal_factor(self, x) -> float:
        """Metric scale ``|d phi|`` at ``x``; pulled-back metric is factor^2 G."""
        Y = self.matrix @ lift_point(self.space, x)
        if Y[0] == 0:
            raise PointAtInfinity("point is sent to infinity")
        return 1.0 / abs(Y[0])


def compose(a: MobiusMap, b: MobiusMap) -> MobiusMap:
    """The map ``a ∘ b`` (apply ``b`` first)."""
    if a.space != b.space:
        raise DimensionMismatch("maps act on different spaces")
    return MobiusMap(a.space, a.matrix @ b.matrix)


def apply_to_ambient_point(m: MobiusMap, x) -> np.ndarray:
    return project_point(m.matrix @ lift_point(m.space, x))


def orthogonality_residual(m: MobiusMap) -> float:
    """``||M^T Q M - Q|| / ||Q||`` in the Frobenius norm."""
    Q = m.space.gram
    M = m.matrix
    return float(np.linalg.norm(M.T @ Q @ M - Q) / np.linalg.norm(Q))


def translation(space: AmbientSpace, v) -> MobiusMap:
    v = space._point(v)
    n = space.n
    M = np.eye(n + 2)
    M[1:-1, 0] = v
    M[-1, 1:-1] = v * space.metric.diagonal()
    M[-1, 0] = 0.5 * space.flat(v, v)
    return MobiusMap(space, M)


def rotation(space: AmbientSpace, i: int, j: int, angle: float) -> MobiusMap:
    """Rotation in the coordinate plane ``(i, j)`` (0-based).

    When one axis is positive and the other negative this is a boost with
    rapidity ``angle``.
    """
    n = space.n
    if not (0 <= i < n and 0 <= j < n) or i == j:
        raise InvalidParameter(f"bad rotation plane ({i}, {j}) for n = {n}")
    G = space.metric.diagonal()
    R = np.eye(n)
    if G[i] == G[j]:
        c, s = np.cos(angle), np.sin(angle)
        R[i, i], R[i, j], R[j, i], R[j, j] = c, -s, s, c
    else:
        c, s = np.cosh(angle), np.sinh(angle)
        R[i, i], R[i, j], R[j, i], R[j, j] = c, s, s, c
    M = np.eye(n + 2)
    M[1:-1, 1:-1] = R
    return MobiusMap(space, M)


def dilation(space: AmbientSpace, r: float) -> MobiusMap:
    if r == 0 or not np.isfinite(r):
        raise InvalidParameter("dilation factor must be finite and nonzero")
    M = np.eye(space.n + 2)
    M[0, 0] = 1.0 / r
    M[-1, -1] = r
    return MobiusMap(space, M)


def inversion(space: AmbientSpace, radius_sq: float) -> MobiusMap:
    """Inversion ``x -> radius_sq * x / G(x, x)`` in the sphere centred at 0."""
    if radius_sq == 0 or not np.isfinite(radius_sq):
        raise InvalidParameter("inversion radius_sq must be finite and nonzero")
    n = space.n
    M = np.zeros((n + 2, n + 2))
    M[1:-1, 1:-1] = np.eye(n)
    M[0, -1] = 2.0 / radius_sq
    M[-1, 0] = 0.5 * radius_sq
    return MobiusMap(space, M)


GENERATOR_KINDS = ("translation", "rotation", "dilation", "inversion")


def make_generator(space: AmbientSpace, kind: str, **params) -> MobiusMap:
    """Build a generator from a keyword description.

    ``translation(vector)``, ``rotation(i, j, angle)``, ``dilation(r)``,
    ``inversion(radius_sq)``.
    """
    try:
        if kind == "translation":
            return translation(space, params["vector"])
        if kind == "rotation":
            return rotation(space, int(params["i"]), int(params["j"]), float(params["angle"]))
        if kind == "dilation":
            return dilation(space, float(params["r"]))
        if kind == "inversion":
            return inversion(space, float(params["radius_sq"]))
    except KeyError as exc:
        raise InvalidParameter(f"{kind} needs parameter {exc.args[0]!r}") from None
    raise InvalidParameter(f"unknown generator kind {kind!r}")


def random_mobius(space: AmbientSpace, rng: np.random.Generator, count: int = 4):
    """A random composition of ``count`` generators and its description."""
    n = space.n
    steps = []
    for _ in range(count):
        kind = GENERATOR_KINDS[rng.integers(len(GENERATOR_KINDS))]
        if kind == "translation":
            params = {"vector": rng.normal(scale=0.5, size=n).tolist()}
        elif kind == "rotation":
            i, j = rng.choice(n, size=2, replace=False)
            params = {"i": int(i), "j": int(j), "angle": float(rng.uniform(-0.8, 0.8))}
        elif kind == "dilation":
            params = {"r": float(rng.choice([-1, 1]) * rng.uniform(0.5, 2.0))}
        else:
            params = {"radius_sq": float(rng.choice([-1, 1]) * rng.uniform(0.5, 2.0))}
        steps.append({"kind": kind, **params})
    return compose_steps(space, steps), steps


def compose_steps(space: AmbientSpace, steps) -> MobiusMap:
    """Compose generator descriptions; the first step is applied first."""
    m = MobiusMap.identity(space)
    for step in steps:
        params = {k: v for k, v in step.items() if k != "kind"}
        m = compose(make_generator(space, step["kind"], **params), m)
    return m
