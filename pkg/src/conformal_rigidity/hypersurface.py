"""Fundamental forms and the conformal quadratic element of a hypersurface.

An :class:`Immersion` is ``n`` expressions in ``d = n - 1`` parameters.  At a
parameter point its 2-jet gives the first fundamental form ``g`` (induced by
the flat metric), the normal ``nu`` with ``|G(nu, nu)| = 1``, the second form
``lam_ij = G(x_ij, nu)`` and the trace-free part ``h = lam - lam_mean * g``.
When the normal is timelike (``epsilon = -1``) the ambient form is negated, so
``g`` is stored as ``-G(t_i, t_j)``; ``h`` is unaffected by the flip.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import expr as ex
from .bilinear import DET_EPS, as_form, contract, det_threshold, evaluate_form, invert_form
from .errors import (
    DegenerateForm,
    DimensionMismatch,
    DomainError,
    IsotropicDirection,
    IsotropicPoint,
    NullNormal,
)
from .mobius import AmbientSpace, MobiusMap

UMBILIC_TOL = 1e-8
DOMAIN_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class Immersion:
    space: AmbientSpace
    components: tuple
    domain: tuple  # ((lo, hi),) * d
    name: str = "custom"

    def __post_init__(self):
        n = self.space.n
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "domain", tuple((float(lo), float(hi)) for lo, hi in self.domain))
        if len(self.components) != n:
            raise DimensionMismatch(f"{len(self.components)} components for an immersion into R^{n}")
        if len(self.domain) != n - 1:
            raise DimensionMismatch(f"domain has {len(self.domain)} axes, expected {n - 1}")
        for lo, hi in self.domain:
            if not lo < hi:
                raise DimensionMismatch(f"empty domain interval [{lo}, {hi}]")
        for c in self.components:
            if ex.max_variable(c) > n - 1:
                raise DimensionMismatch(f"component uses a parameter beyond u{n - 1}")

    @classmethod
    def from_strings(cls, space: AmbientSpace, texts: Sequence[str], domain, name="custom"):
        d = space.n - 1
        return cls(space, tuple(ex.parse(t, d) for t in texts), domain, name)

    @property
    def d(self) -> int:
        return self.space.n - 1

    def expressions(self) -> list:
        return [ex.unparse(c) for c in self.components]

    def contains(self, u, margin: float = 0.0) -> bool:
        u = np.asarray(u, dtype=float)
        lo = np.array([a for a, _ in self.domain]) + margin - DOMAIN_SLACK
        hi = np.array([b for _, b in self.domain]) - margin + DOMAIN_SLACK
        return bool(np.all((u >= lo) & (u <= hi), axis=-1).all())

    def point(self, u) -> np.ndarray:
        return jet_at(self, u).x

    def grid(self, resolution) -> np.ndarray:
        """Tensor grid over the domain in C order, shape ``(m, d)``."""
        res = np.broadcast_to(np.asarray(resolution, dtype=int), (self.d,))
        axes = [np.linspace(lo, hi, int(k)) for (lo, hi), k in zip(self.domain, res)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def interior_grid(self, resolution, margin: float = 0.1) -> np.ndarray:
        """Grid over the domain shrunk by ``margin`` of each width."""
        shrunk = []
        for lo, hi in self.domain:
            w = hi - lo
            shrunk.append((lo + margin * w, hi - margin * w))
        return Immersion(self.space, self.components, shrunk, self.name).grid(resolution)

    def scaled(self, r: float) -> "Immersion":
        return Immersion(
            self.space,
            tuple(ex.BinOp("*", ex.Num(float(r)), c) for c in self.components),
            self.domain,
            f"{self.name}*{r!r}",
        )

    def transformed(self, m: MobiusMap) -> "Immersion":
        """The composed immersion ``phi ∘ x`` as expressions."""
        if m.space != self.space:
            raise DimensionMismatch("map and immersion live in different spaces")
        comps = compose_expressions(self.space, m.matrix, self.components)
        return Immersion(self.space, comps, self.domain, f"mobius({self.name})")


def _linear(coeffs, nodes):
    """Expression ``sum c_k * node_k`` skipping exact zeros."""
    out = None
    for c, node in zip(coeffs, nodes):
        if c == 0:
            continue
        term = node if c == 1 else ex.BinOp("*", ex.Num(float(c)), node)
        out = term if out is None else ex.BinOp("+", out, term)
    return ex.Num(0.0) if out is None else out


def compose_expressions(space: AmbientSpace, M: np.ndarray, components) -> tuple:
    """Components of ``project(M · lift(x))`` built from the expressions of ``x``.

    Subexpressions are shared, so jet evaluation reuses them.
    """
    Gd = space.metric.diagonal()
    sq = [ex.Pow(c, 2) for c in components]
    half_norm = _linear([0.5 * g for g in Gd], sq)
    lifted = [ex.Num(1.0), *components, half_norm]
    rows = [_linear(M[a], lifted) for a in range(space.n + 1)]
    denom = rows[0]
    return tuple(ex.BinOp("/", rows[k], denom) for k in range(1, space.n + 1))


@dataclass(frozen=True, eq=False)
class SurfaceJet:
    x: np.ndarray  # (n,)
    tangents: np.ndarray  # (d, n), row i = dx/du_i
    second: np.ndarray  # (d, d, n)
    u: Optional[np.ndarray] = None


def _jets_to_surface(jets, u) -> SurfaceJet:
    x = np.array([float(j.value) for j in jets])
    tangents = np.stack([j.grad for j in jets], axis=-1)
    second = np.stack([j.hess for j in jets], axis=-1)
    return SurfaceJet(x, tangents, second, np.array(u, dtype=float))


def jet_at(imm: Immersion, u) -> SurfaceJet:
    u = np.asarray(u, dtype=float)
    if u.shape != (imm.d,):
        raise DimensionMismatch(f"parameter point of shape {u.shape}, expected ({imm.d},)")
    if not imm.contains(u):
        raise DomainError(f"parameter point {u.tolist()} outside the domain")
    return _jets_to_surface(ex.eval_jets(imm.components, u), u)


def jets_on_grid(imm: Immersion, grid) -> list:
    """Surface jets at every row of ``grid``, evaluated in one batch."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if grid.shape[1] != imm.d:
        raise DimensionMismatch(f"grid of width {grid.shape[1]}, expected {imm.d}")
    if not imm.contains(grid):
        raise DomainError("grid leaves the parameter domain")
    jets = ex.eval_jets(imm.components, grid)
    return [_jets_to_surface([j[k] for j in jets], grid[k]) for k in range(len(grid))]


@dataclass(frozen=True, eq=False)
class FundamentalData:
    g: np.ndarray
    g_inv: np.ndarray
    normal: np.ndarray
    epsilon: int
    lam: np.ndarray
    lam_mean: float
    h: np.ndarray

    @property
    def d(self) -> int:
        return self.g.shape[0]


def unit_normal(space: AmbientSpace, tangents: np.ndarray, reference=None, tol: float = 1e-12):
    """Normal ``nu`` with ``G(nu, t_i) = 0`` and ``|G(nu, nu)| = 1``.

    Oriented so that its largest-magnitude component is positive, or to agree
    with ``reference`` when one is given.
    """
    Gd = space.metric.diagonal()
    # G(nu, t_i) = 0  <=>  (t_i * Gd) . nu = 0
    _, s, vt = np.linalg.svd(tangents * Gd)
    nu = vt[-1]
    if s.size and s[-1] <= 1e-12 * s[0]:
        raise IsotropicPoint("tangent vectors are linearly dependent")
    norm = float(np.dot(nu * Gd, nu))
    if abs(norm) <= tol:
        raise NullNormal("normal vector is null")
    nu = nu / np.sqrt(abs(norm))
    if reference is not None:
        if np.dot(nu, reference) < 0:
            nu = -nu
    elif nu[np.argmax(np.abs(nu))] < 0:
        nu = -nu
    return nu, (1 if norm > 0 else -1)


def fundamental_forms(
    space: AmbientSpace,
    jet: SurfaceJet,
    det_eps: float = DET_EPS,
    reference_normal=None,
) -> FundamentalData:
    Gd = space.metric.diagonal()
    T = jet.tangents
    d = T.shape[0]
    if d != space.n - 1:
        raise DimensionMismatch("jet does not belong to a hypersurface of this space")
    g = as_form((T * Gd) @ T.T)
    if not abs(np.linalg.det(g)) > det_threshold(g, det_eps):
        raise IsotropicPoint(f"degenerate first fundamental form (det = {np.linalg.det(g):.3e})")
    nu, eps = unit_normal(space, T, reference_normal)
    if eps < 0:
        g = -g
    g_inv = invert_form(g, det_eps)
    lam = as_form(np.einsum("ijk,k->ij", jet.second, nu * Gd))
    lam_mean = contract(g_inv, lam) / d
    h = as_form(lam - lam_mean * g)
    return FundamentalData(g, g_inv, nu, eps, lam, lam_mean, h)


def invariant_I(data: FundamentalData, w) -> float:
    """Conformal quadratic element ``h(w)^2 / g(w)`` on a parameter direction."""
    w = np.asarray(w, dtype=float)
    gw = evaluate_form(data.g, w)
    if abs(gw) <= 1e-12 * np.linalg.norm(data.g) * float(np.dot(w, w)):
        raise IsotropicDirection("direction is isotropic for g")
    return evaluate_form(data.h, w) ** 2 / gw


@dataclass(frozen=True, eq=False)
class InvariantElement:
    g_hat: np.ndarray
    h_hat: np.ndarray
    gauge_sign: int

    def distance(self, other: "InvariantElement") -> float:
        return float(max(np.max(np.abs(self.g_hat - other.g_hat)), np.max(np.abs(self.h_hat - other.h_hat))))


def canonical_element(data: FundamentalData, zero_tol: float = 1e-9) -> InvariantElement:
    """Representative of ``(g, h)`` modulo ``(g, h) -> (r^2 g, r h)``.

    ``g`` is scaled to ``|det| = 1`` and the sign of ``h`` is fixed so that
    its first non-negligible entry (row-major) is positive.
    """
    g, h = data.g, data.h
    d = g.shape[0]
    det = abs(np.linalg.det(g))
    if not det > 0:
        raise DegenerateForm("first fundamental form is degenerate")
    g_hat = as_form(g / det ** (1.0 / d))
    h_hat = h / det ** (1.0 / (2 * d))
    sign = 1
    flat = h_hat.ravel()
    big = np.flatnonzero(np.abs(flat) > zero_tol * max(np.max(np.abs(flat)), 1e-300))
    if big.size and flat[big[0]] < 0:
        sign = -1
    return InvariantElement(g_hat, as_form(sign * h_hat), sign)


def is_umbilical(data: FundamentalData, tol: float = UMBILIC_TOL) -> bool:
    return bool(np.linalg.norm(data.h) / np.linalg.norm(data.g) < tol)


def umbilic_ratio(data: FundamentalData) -> float:
    return float(np.linalg.norm(data.h) / np.linalg.norm(data.g))
