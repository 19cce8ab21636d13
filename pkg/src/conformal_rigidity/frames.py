"""Conformal moving frames along a hypersurface and their connection forms.

A frame is stored as the rows ``A_0, A_1 .. A_d, A_n, A_{n+1}`` of an
``(n+2) x (n+2)`` matrix.  The row convention ``dF = Omega_k F du^k`` is used
throughout, so the structure equations read

    d_k Omega_l - d_l Omega_k = Omega_k Omega_l - Omega_l Omega_k.

Frame scalar products are taken in ``epsilon * Q``: for a timelike normal the
ambient form and ``A_0`` are negated so that ``(A_n, A_n) = 1`` and
``(A_0, A_{n+1}) = -1`` still hold.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, SingularFrame
from .hypersurface import FundamentalData, Immersion, SurfaceJet, fundamental_forms, jet_at
from .mobius import AmbientSpace, lift_point

DEFAULT_STEP = 1e-4


@dataclass(frozen=True, eq=False)
class ConformalFrame:
    space: AmbientSpace
    A0: np.ndarray
    Ai: np.ndarray  # (d, n+2)
    An: np.ndarray
    An1: np.ndarray
    epsilon: int = 1
    Cn: Optional[np.ndarray] = None

    @property
    def order(self) -> int:
        return 1 if self.Cn is None else 2

    @property
    def metric(self) -> np.ndarray:
        return self.epsilon * self.space.gram

    def matrix(self) -> np.ndarray:
        """Rows ``A_0, A_i, (A_n or C_n), A_{n+1}``."""
        tangent = self.An if self.Cn is None else self.Cn
        return np.vstack([self.A0, self.Ai, tangent, self.An1])

    def product(self, X, Y) -> float:
        return float(X @ self.metric @ Y)

    def transformed(self, M: np.ndarray) -> "ConformalFrame":
        """Apply an ambient linear map to every frame vector."""
        return ConformalFrame(
            self.space,
            M @ self.A0,
            self.Ai @ M.T,
            M @ self.An,
            M @ self.An1,
            self.epsilon,
            None if self.Cn is None else M @ self.Cn,
        )


def build_frame(space: AmbientSpace, jet: SurfaceJet, data: FundamentalData, order: int = 1) -> ConformalFrame:
    """First- or second-order conformal frame at a surface point.

    ``A_0`` is the lifted point, ``A_i`` the hyperspheres through ``A_0`` and
    infinity orthogonal to the surface along ``t_i``, ``A_n`` the tangent
    hyperplane and ``A_{n+1} = e_plus``.  At order 2 the tangent sphere is
    replaced by the central sphere ``C_n = A_n + lam_mean A_0`` and
    ``A_{n+1}`` is moved to ``e_plus + lam A_n + lam^2/2 A_0`` so that it
    stays on ``C_n``.
    """
    if order not in (1, 2):
        raise ValueError("frame order must be 1 or 2")
    eps = data.epsilon
    Gd = space.metric.diagonal()
    x = jet.x
    A0 = eps * lift_point(space, x)
    Ai = np.zeros((jet.tangents.shape[0], space.n + 2))
    Ai[:, 1:-1] = jet.tangents
    Ai[:, -1] = jet.tangents @ (Gd * x)
    An = space.embed(data.normal)
    An[-1] = float(np.dot(Gd * x, data.normal))
    An1 = space.e_plus
    frame = ConformalFrame(space, A0, Ai, An, An1, eps)
    if order == 1:
        return frame
    lam = data.lam_mean
    Cn = central_sphere(frame, lam)
    An1 = An1 + lam * An + 0.5 * lam * lam * A0
    return ConformalFrame(space, A0, Ai, An, An1, eps, Cn)


def central_sphere(frame: ConformalFrame, lambda_mean: float) -> np.ndarray:
    return frame.An + lambda_mean * frame.A0


@dataclass(frozen=True)
class FrameResiduals:
    """Largest violation of each group of frame conditions."""

    incidence: float  # null points, incidences and (A_i, A_n) = 0
    normalization: float  # (A_0, A_{n+1}) = -1
    metric: float  # (A_i, A_j) = g_ij
    tangent_unit: float  # (A_n, A_n) = 1

    def max(self) -> float:
        return max(self.incidence, self.normalization, self.metric, self.tangent_unit)


def frame_residuals(frame: ConformalFrame, g) -> FrameResiduals:
    P = frame.product
    tangent = frame.An if frame.Cn is None else frame.Cn
    A0, An1 = frame.A0, frame.An1
    zero = [P(A0, A0), P(An1, An1), P(A0, tangent), P(An1, tangent)]
    for Ai in frame.Ai:
        zero += [P(A0, Ai), P(An1, Ai), P(Ai, tangent)]
    gram = frame.Ai @ frame.metric @ frame.Ai.T
    return FrameResiduals(
        incidence=float(np.max(np.abs(zero))),
        normalization=abs(P(A0, An1) + 1.0),
        metric=float(np.max(np.abs(gram - np.asarray(g)))),
        tangent_unit=abs(P(tangent, tangent) - 1.0),
    )


# -- connection forms by finite differences ----------------------------------

def _frame_matrix(imm: Immersion, u, order: int, reference_normal=None):
    jet = jet_at(imm, u)
    data = fundamental_forms(imm.space, jet, reference_normal=reference_normal)
    return build_frame(imm.space, jet, data, order).matrix(), data


def _connection(imm: Immersion, u, step: float, order: int, reference_normal):
    u = np.asarray(u, dtype=float)
    F, data = _frame_matrix(imm, u, order, reference_normal)
    if reference_normal is None:
        reference_normal = data.normal
    try:
        F_inv = np.linalg.inv(F)
    except np.linalg.LinAlgError:
        raise SingularFrame("frame vectors are linearly dependent") from None
    if np.linalg.cond(F) > 1e12:
        raise SingularFrame("frame matrix is numerically singular")
    omegas = []
    for k in range(imm.d):
        e = np.zeros(imm.d)
        e[k] = step
        Fp, _ = _frame_matrix(imm, u + e, order, reference_normal)
        Fm, _ = _frame_matrix(imm, u - e, order, reference_normal)
        dF = (Fp - Fm) / (2.0 * step)
        omegas.append(dF @ F_inv)
    return np.array(omegas), data


@dataclass(frozen=True, eq=False)
class ConnectionSlice:
    """Connection matrices ``Omega_k = omega(d/du^k)`` at one point.

    Index layout: 0 is ``A_0``, ``1 .. d`` the ``A_i``, ``n = d + 1`` the
    tangent sphere, ``n + 1`` the second point.
    """

    omegas: np.ndarray  # (d, n+2, n+2)
    data: FundamentalData
    order: int
    step: float

    @property
    def n(self) -> int:
        return self.omegas.shape[1] - 2

    def coframe(self) -> np.ndarray:
        """``W[j, k] = omega_0^j(d/du^k)``."""
        d = self.n - 1
        return self.omegas[:, 0, 1 : d + 1].T

    def tangency_defect(self) -> float:
        """``max_k |omega_0^n(d/du^k)|``, zero for a first-order frame."""
        return float(np.max(np.abs(self.omegas[:, 0, self.n])))

    def second_form(self) -> np.ndarray:
        """Coefficients ``X_ij`` of ``omega_i^n = X_ij omega^j``.

        Equals ``lam`` for a first-order frame and ``h`` for a second-order one.
        """
        d = self.n - 1
        Wn = self.omegas[:, 1 : d + 1, self.n].T  # [i, k] = omega_i^n(d_k)
        return Wn @ np.linalg.inv(self.coframe())

    def relation_residuals(self) -> dict:
        """Violations of the first-order relations among the forms."""
        n, d = self.n, self.n - 1
        W = self.coframe()
        X = self.second_form()
        out = {
            "omega_0^{n+1}": float(np.max(np.abs(self.omegas[:, 0, n + 1]))),
            "omega_n^n": float(np.max(np.abs(self.omegas[:, n, n]))),
            "omega_i^{n+1} - g_ij omega^j": float(
                np.max(np.abs(self.omegas[:, 1 : d + 1, n + 1].T - self.data.g @ W))
            ),
            "omega_0^n": self.tangency_defect(),
            "second form asymmetry": float(np.max(np.abs(X - X.T))),
        }
        return out


def default_step(imm: Immersion) -> float:
    width = max(hi - lo for lo, hi in imm.domain)
    return DEFAULT_STEP * width


def connection_at(imm: Immersion, u, step: float = None, order: int = 1) -> ConnectionSlice:
    """Connection matrices from central differences of the frame field."""
    if step is None:
        step = default_step(imm)
    if not imm.contains(u, margin=step):
        raise DomainError("point is closer than one step to the domain boundary")
    omegas, data = _connection(imm, u, step, order, None)
    return ConnectionSlice(omegas, data, order, step)


def structure_residual(imm: Immersion, u, step: float = None, order: int = 1) -> float:
    """``max_{k<l} || d_k Omega_l - d_l Omega_k - [Omega_k, Omega_l] ||``.

    Every derivative is a central difference with the same ``step``, so the
    value is ``O(step^2)``.
    """
    if step is None:
        step = default_step(imm)
    u = np.asarray(u, dtype=float)
    if not imm.contains(u, margin=2 * step):
        raise DomainError("point is closer than two steps to the domain boundary")
    omegas, data = _connection(imm, u, step, order, None)
    ref = data.normal
    d = imm.d
    dOmega = np.empty((d,) + omegas.shape)  # dOmega[k, l] = d_k Omega_l
    for k in range(d):
        e = np.zeros(d)
        e[k] = step
        op, _ = _connection(imm, u + e, step, order, ref)
        om, _ = _connection(imm, u - e, step, order, ref)
        dOmega[k] = (op - om) / (2.0 * step)
    worst = 0.0
    for k in range(d):
        for l in range(k + 1, d):
            lhs = dOmega[k, l] - dOmega[l, k]
            rhs = omegas[k] @ omegas[l] - omegas[l] @ omegas[k]
            worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return worst
