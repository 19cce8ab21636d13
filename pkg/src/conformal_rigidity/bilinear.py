"""Signed symmetric bilinear forms on small dense spaces.

Forms are plain ``numpy`` arrays; :func:`as_form` validates shape and
stores them exactly symmetric.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateForm, DimensionMismatch, InvalidParameter

RANK_TOL = 1e-9
DET_EPS = 1e-12


@dataclass(frozen=True)
class Signature:
    """Counts of +1 and -1 directions of a flat metric."""

    p: int
    q: int = 0

    def __post_init__(self):
        if self.p < 1 or self.q < 0:
            raise InvalidParameter(f"signature needs p >= 1, q >= 0, got ({self.p}, {self.q})")

    @property
    def n(self) -> int:
        return self.p + self.q

    def metric(self) -> np.ndarray:
        return np.diag([1.0] * self.p + [-1.0] * self.q)


@dataclass(frozen=True)
class FormClass:
    rank: int
    plus: int
    minus: int
    decomposable: bool


def as_form(a) -> np.ndarray:
    """Return ``a`` as a float array that is exactly symmetric."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    return 0.5 * (a + a.T)


def det_threshold(g: np.ndarray, det_eps: float = DET_EPS) -> float:
    """Scale-aware degeneracy threshold ``det_eps * (max row norm)^d``."""
    d = g.shape[0]
    scale = float(np.max(np.linalg.norm(g, axis=1))) if d else 1.0
    return det_eps * scale**d


def invert_form(g, det_eps: float = DET_EPS) -> np.ndarray:
    g = as_form(g)
    det = np.linalg.det(g)
    if not abs(det) > det_threshold(g, det_eps):
        raise DegenerateForm(f"form is degenerate (det = {det:.3e})")
    return as_form(np.linalg.inv(g))


def _check_same_dim(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes differ: {a.shape} vs {b.shape}")


def contract(g_inv, h) -> float:
    """Full contraction ``sum_ij g^{ij} h_{ij}``."""
    g_inv = np.asarray(g_inv, dtype=float)
    h = np.asarray(h, dtype=float)
    _check_same_dim(g_inv, h)
    return float(np.sum(g_inv * h))


def evaluate_form(g, v) -> float:
    """Value ``g_ij v^i v^j`` of the quadratic form on a direction."""
    g = np.asarray(g, dtype=float)
    v = np.asarray(v, dtype=float)
    if v.shape != (g.shape[0],):
        raise DimensionMismatch(f"direction of shape {v.shape} for a {g.shape[0]}-dim form")
    return float(v @ g @ v)


def _spectrum(q: np.ndarray, tol: float):
    if tol <= 0:
        raise InvalidParameter("tol must be positive")
    mu, vecs = np.linalg.eigh(as_form(q))
    top = np.max(np.abs(mu)) if mu.size else 0.0
    keep = np.abs(mu) > tol * top if top > 0 else np.zeros(mu.shape, dtype=bool)
    return mu, vecs, keep


def classify_form(q, tol: float = RANK_TOL) -> FormClass:
    mu, _, keep = _spectrum(q, tol)
    plus = int(np.sum(mu[keep] > 0))
    minus = int(np.sum(mu[keep] < 0))
    rank = plus + minus
    decomposable = rank <= 1 or (rank == 2 and plus == 1)
    return FormClass(rank=rank, plus=plus, minus=minus, decomposable=decomposable)


def is_decomposable(q, tol: float = RANK_TOL) -> bool:
    """True iff ``q`` is a product of two real linear forms."""
    return classify_form(q, tol).decomposable


def linear_factors(q, tol: float = RANK_TOL):
    """Return linear forms ``(alpha, beta)`` with ``q = sym(alpha ⊗ beta)``.

    Raises :class:`DegenerateForm` when ``q`` has no real factorization.
    """
    mu, vecs, keep = _spectrum(q, tol)
    d = len(mu)
    idx = np.flatnonzero(keep)
    if idx.size == 0:
        return np.zeros(d), np.zeros(d)
    if idx.size == 1:
        k = idx[0]
        return mu[k] * vecs[:, k], vecs[:, k].copy()
    if idx.size == 2 and mu[idx[0]] * mu[idx[1]] < 0:
        # mu_a x^2 - |mu_b| y^2 = (sqrt|mu_a| x - sqrt|mu_b| y)(sqrt|mu_a| x + sqrt|mu_b| y)
        a, b = (idx[0], idx[1]) if mu[idx[0]] > 0 else (idx[1], idx[0])
        x = np.sqrt(mu[a]) * vecs[:, a]
        y = np.sqrt(-mu[b]) * vecs[:, b]
        return x - y, x + y
    raise DegenerateForm("form is not a product of real linear factors")
