"""Conformal equivalence of two hypersurfaces under a given correspondence.

Equality of the conformal quadratic elements of two non-umbilical
hypersurfaces (``n >= 4``) forces ``g_bar = sigma^2 g`` and
``h_bar = sigma h`` pointwise; this is checked directly on a parameter grid,
and a Möbius map realising the equivalence is then fitted to the point
correspondence and verified on held-out points.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bilinear import DET_EPS
from .errors import (
    DegenerateConfiguration,
    DimensionMismatch,
    DimensionTooSmall,
    GridContainsUmbilics,
    NotProportional,
    PointAtInfinity,
    Refusal,
    UmbilicalPoint,
)
from .hypersurface import (
    UMBILIC_TOL,
    FundamentalData,
    Immersion,
    fundamental_forms,
    is_umbilical,
    jets_on_grid,
)
from .mobius import (
    AmbientSpace,
    MobiusMap,
    apply_to_ambient_point,
    dilation,
    lift_point,
    orthogonality_residual,
    translation,
)

FACTOR_TOL = 1e-6


@dataclass(frozen=True)
class EquivalenceConfig:
    umbilic_tol: float = UMBILIC_TOL
    factor_tol: float = FACTOR_TOL
    det_eps: float = DET_EPS
    reconstruct: bool = True


@dataclass(frozen=True, eq=False)
class CorrespondencePair:
    """Two immersions over a shared chart, matched by equal parameters."""

    surface: Immersion
    surface_bar: Immersion
    grid: np.ndarray

    def __post_init__(self):
        grid = np.atleast_2d(np.asarray(self.grid, dtype=float))
        object.__setattr__(self, "grid", grid)
        if self.surface.space != self.surface_bar.space:
            raise DimensionMismatch("surfaces live in spaces of different signature")
        if grid.size == 0:
            raise DimensionMismatch("correspondence grid is empty")
        if grid.shape[1] != self.surface.d:
            raise DimensionMismatch(f"grid of width {grid.shape[1]}, expected {self.surface.d}")

    @property
    def space(self) -> AmbientSpace:
        return self.surface.space


@dataclass(eq=False)
class EquivalenceVerdict:
    equivalent: bool
    sigma: np.ndarray = field(default_factory=lambda: np.zeros(0))
    max_g_residual: float = math.nan
    max_h_residual: float = math.nan
    reconstructed: Optional[MobiusMap] = None
    map_residual: Optional[float] = None
    refusal_reason: Optional[str] = None
    sigma_sign_consistent: bool = True
    umbilic_points: list = field(default_factory=list)

    @property
    def refused(self) -> bool:
        return self.refusal_reason is not None


# -- pointwise factorization -------------------------------------------------

def factor_residuals(data: FundamentalData, data_bar: FundamentalData):
    """``(sigma, g_residual, h_residual)`` for the best pointwise factor.

    ``sigma^2`` comes from the determinants; its sign makes the largest entry
    of ``h`` agree with ``h_bar``.  Residuals are relative Frobenius norms of
    ``g_bar / sigma^2 - g`` and ``h_bar / sigma - h``.
    """
    g, gb, h, hb = data.g, data_bar.g, data.h, data_bar.h
    if g.shape != gb.shape:
        raise DimensionMismatch("fundamental data of different dimensions")
    d = g.shape[0]
    ratio = abs(np.linalg.det(gb)) / abs(np.linalg.det(g))
    sigma = ratio ** (0.5 / d)
    k = np.unravel_index(np.argmax(np.abs(h)), h.shape)
    if h[k] * hb[k] < 0:
        sigma = -sigma
    g_res = float(np.linalg.norm(gb / sigma**2 - g) / np.linalg.norm(g))
    hn = np.linalg.norm(h)
    h_res = float(np.linalg.norm(hb / sigma - h) / hn) if hn > 0 else math.inf
    return float(sigma), g_res, h_res


def sigma_factor(
    data: FundamentalData,
    data_bar: FundamentalData,
    tol: float = FACTOR_TOL,
    umbilic_tol: float = UMBILIC_TOL,
) -> float:
    """The factor ``sigma`` with ``g_bar = sigma^2 g`` and ``h_bar = sigma h``."""
    if is_umbilical(data, umbilic_tol) or is_umbilical(data_bar, umbilic_tol):
        raise UmbilicalPoint("factorization is undefined at an umbilical point")
    sigma, g_res, h_res = factor_residuals(data, data_bar)
    if g_res > tol or h_res > tol:
        raise NotProportional(
            f"forms are not proportional (g residual {g_res:.3e}, h residual {h_res:.3e})",
            g_res,
            h_res,
        )
    return sigma


# -- Möbius reconstruction ---------------------------------------------------

def _normalizer(space: AmbientSpace, pts: np.ndarray) -> MobiusMap:
    """Similarity taking ``pts`` to zero centroid and unit RMS radius."""
    c = pts.mean(axis=0)
    s = float(np.sqrt(np.mean(np.sum((pts - c) ** 2, axis=1))))
    if s == 0:
        raise DegenerateConfiguration("all points coincide")
    return dilation(space, 1.0 / s) @ translation(space, -c)


def project_to_group(space: AmbientSpace, M: np.ndarray, iterations: int = 8) -> np.ndarray:
    """Rescale ``M`` so ``M^T Q M = Q`` and polish it onto the group.

    Uses the Newton iteration ``N <- N (3 I - N^+ N) / 2`` with the
    ``Q``-adjoint ``N^+ = Q N^T Q``.
    """
    Q = space.gram
    k = M.shape[0]
    mu = np.trace(Q @ M.T @ Q @ M) / k
    if not mu > 0:
        raise DegenerateConfiguration("fitted matrix does not preserve the light cone")
    N = M / np.sqrt(mu)
    eye = np.eye(k)
    for _ in range(iterations):
        N = 0.5 * N @ (3 * eye - Q @ N.T @ Q @ N)
    big = np.unravel_index(np.argmax(np.abs(N)), N.shape)
    return -N if N[big] < 0 else N


def fit_mobius(space: AmbientSpace, points, points_bar) -> MobiusMap:
    """Homogeneous least-squares Möbius map with ``M lift(x_k) ∝ lift(x_bar_k)``."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    Y = np.atleast_2d(np.asarray(points_bar, dtype=float))
    N = space.n + 2
    if X.shape != Y.shape or X.shape[1] != space.n:
        raise DimensionMismatch("point sets must both be (m, n)")
    # each pair gives N - 1 equations for the N^2 - 1 unknowns of M up to scale
    if len(X) < N + 1:
        raise DegenerateConfiguration(f"need at least {N + 1} correspondences, got {len(X)}")
    T = _normalizer(space, X)
    S = _normalizer(space, Y)
    Xl = np.array([T.matrix @ lift_point(space, x) for x in X])
    Yl = np.array([S.matrix @ lift_point(space, y) for y in Y])
    Xl /= Xl[:, :1]
    Yl /= Yl[:, :1]
    rows = []
    for x, y in zip(Xl, Yl):
        for a in range(1, N):
            r = np.zeros((N, N))
            r[a] = x
            r[0] -= y[a] * x
            rows.append(r.ravel())
    A = np.array(rows)
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    _, s, vt = np.linalg.svd(A, full_matrices=False)
    if s[-2] <= 1e-8 * s[0]:
        raise DegenerateConfiguration("correspondence does not determine a unique map")
    Mn = vt[-1].reshape(N, N)
    S_inv = np.linalg.inv(S.matrix)
    M = project_to_group(space, S_inv @ Mn @ T.matrix)
    fitted = MobiusMap(space, M)
    if orthogonality_residual(fitted) > 1e-6:
        raise DegenerateConfiguration("fitted matrix is not a Möbius transformation")
    return fitted


def split_grid(m: int):
    """Deterministic 50/50 split: even indices fit, odd indices are held out."""
    idx = np.arange(m)
    return idx[::2], idx[1::2]


def reconstruct_mobius(pair: CorrespondencePair, grid=None) -> MobiusMap:
    grid = pair.grid if grid is None else np.atleast_2d(np.asarray(grid, dtype=float))
    x = np.array([j.x for j in jets_on_grid(pair.surface, grid)])
    xb = np.array([j.x for j in jets_on_grid(pair.surface_bar, grid)])
    return fit_mobius(pair.space, x, xb)


def map_residual(m: MobiusMap, points, points_bar, scale: float) -> float:
    worst = 0.0
    for x, y in zip(points, points_bar):
        try:
            err = float(np.linalg.norm(apply_to_ambient_point(m, x) - y))
        except PointAtInfinity:
            return math.inf
        worst = max(worst, err)
    return worst / scale


# -- the decision ------------------------------------------------------------

def test_equivalence(pair: CorrespondencePair, config: EquivalenceConfig = EquivalenceConfig(), strict: bool = False):
    """Decide whether the pair is related by a conformal transformation.

    Refusals (``n = 3``, umbilical grid points) come back as a verdict with
    ``refusal_reason`` set, or are raised when ``strict`` is true.
    """
    try:
        return _decide(pair, config)
    except Refusal as exc:
        if strict:
            raise
        pts = getattr(exc, "points", [])
        return EquivalenceVerdict(False, refusal_reason=str(exc), umbilic_points=pts)


test_equivalence.__test__ = False  # not a pytest test


def _decide(pair: CorrespondencePair, config: EquivalenceConfig) -> EquivalenceVerdict:
    space = pair.space
    if space.n < 4:
        raise DimensionTooSmall(
            f"n = {space.n}: equality of the quadratic element certifies equivalence only for "
            "n >= 4; for n = 3 third-order invariants would be required"
        )
    grid = pair.grid
    jets = jets_on_grid(pair.surface, grid)
    jets_bar = jets_on_grid(pair.surface_bar, grid)
    data = [fundamental_forms(space, j, config.det_eps) for j in jets]
    data_bar = [fundamental_forms(space, j, config.det_eps) for j in jets_bar]
    umbilics = [
        grid[k].tolist()
        for k in range(len(grid))
        if is_umbilical(data[k], config.umbilic_tol) or is_umbilical(data_bar[k], config.umbilic_tol)
    ]
    if umbilics:
        raise GridContainsUmbilics(
            f"{len(umbilics)} grid point(s) are umbilical; the theorem assumes no umbilical points",
            umbilics,
        )
    factors = [factor_residuals(a, b) for a, b in zip(data, data_bar)]
    sigma = np.array([f[0] for f in factors])
    g_res = max(f[1] for f in factors)
    h_res = max(f[2] for f in factors)
    equivalent = bool(g_res <= config.factor_tol and h_res <= config.factor_tol)
    verdict = EquivalenceVerdict(
        equivalent,
        sigma=sigma,
        max_g_residual=g_res,
        max_h_residual=h_res,
        sigma_sign_consistent=bool(np.all(sigma > 0) or np.all(sigma < 0)),
    )
    if equivalent and config.reconstruct:
        fit_idx, hold_idx = split_grid(len(grid))
        x = np.array([j.x for j in jets])
        xb = np.array([j.x for j in jets_bar])
        m = fit_mobius(space, x[fit_idx], xb[fit_idx])
        lo, hi = xb.min(axis=0), xb.max(axis=0)
        scale = float(np.linalg.norm(hi - lo)) or 1.0
        verdict.reconstructed = m
        verdict.map_residual = map_residual(m, x[hold_idx], xb[hold_idx], scale)
    return verdict


# -- non-factorizability of the quadratic element ----------------------------

def _monomials(d: int, degree: int):
    return list(itertools.combinations_with_replacement(range(d), degree))


def quartic_coefficients(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Monomial coefficients of the product of two quadratic forms."""
    d = a.shape[0]
    index = {m: k for k, m in enumerate(_monomials(d, 4))}
    out = np.zeros(len(index))
    t = np.einsum("ij,kl->ijkl", a, b)
    for ijkl in itertools.product(range(d), repeat=4):
        out[index[tuple(sorted(ijkl))]] += t[ijkl]
    return out


def lemma_residual(data: FundamentalData, umbilic_tol: float = UMBILIC_TOL) -> float:
    """Relative distance of ``h^2`` from the multiples ``g * theta`` of ``g``.

    Zero at umbilical points; positive when the quadratic element is not a
    quadratic form.
    """
    g, h = data.g, data.h
    d = g.shape[0]
    if d < 2:
        raise DimensionMismatch("needs at least two parameters")
    if is_umbilical(data, umbilic_tol):
        return 0.0
    target = quartic_coefficients(h, h)
    cols = []
    for i, j in itertools.combinations_with_replacement(range(d), 2):
        e = np.zeros((d, d))
        e[i, j] = e[j, i] = 1.0
        cols.append(quartic_coefficients(g, e))
    A = np.array(cols).T
    theta, *_ = np.linalg.lstsq(A, target, rcond=None)
    return float(np.linalg.norm(A @ theta - target) / np.linalg.norm(target))
