"""Phase-space metric induced by the coherent states (Fubini-Study pullback)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coherent import coherent_batch
from .fiducial import FiducialState


@dataclass(frozen=True)
class MetricRecord:
    D: float
    D_prime: float
    c_alpha: float
    A_alpha: float
    cross_bound: float

    @property
    def q_scale(self) -> float:
        """Factor turning ``q`` into the flat coordinate ``q_alpha = sqrt|A_alpha| q``."""
        return math.sqrt(abs(self.A_alpha))

    def to_dict(self) -> dict:
        return {
            "D": self.D,
            "D_prime": self.D_prime,
            "c_alpha": self.c_alpha,
            "A_alpha": self.A_alpha,
            "cross_bound": self.cross_bound,
            "q_scale": self.q_scale,
        }


def cross_term_bound(fid: FiducialState) -> float:
    """Allowed size of the ``dp dq`` coefficient.

    In the continuum the cross coefficient vanishes identically; on the
    discretized circle it is driven by the seam value
    ``|eta(pi)|^2 = N^2 (1-b)^{2k}``, scaled by the metric magnitude.
    """
    spec = fid.spec
    mom = fid.moments
    seam = fid.norm_constant**2 * (1.0 - spec.b) ** (2 * spec.k)
    scale = 2.0 * math.pi * (mom.var_Q + mom.mean_P2 / spec.hbar**2 + 1.0)
    return max(1e-8, seam * scale)


def metric_coefficients(fid: FiducialState) -> MetricRecord:
    mom = fid.moments
    a_prime = fid.spec.alpha_prime
    D = mom.var_Q
    return MetricRecord(
        D=D,
        D_prime=mom.mean_P2,
        c_alpha=D,
        A_alpha=(mom.mean_P2 - a_prime**2) / D,
        cross_bound=cross_term_bound(fid),
    )


def fs_form(fid: FiducialState, p: float, q: float, displacements) -> np.ndarray:
    """``1 - |<p,q|p+dp,q+dq>|^2`` for each ``(dp, dq)`` in ``displacements``."""
    d = np.asarray(displacements, dtype=float).reshape(-1, 2)
    ps = np.concatenate(([p], p + d[:, 0]))
    qs = np.concatenate(([q], q + d[:, 1]))
    rows = coherent_batch(fid, ps, qs)
    ov = rows[1:] @ rows[0].conj()
    return 1.0 - np.abs(ov) ** 2


def analytic_form(fid: FiducialState, dp, dq):
    """``[(D' - alpha'^2) dq^2 + D dp^2] / hbar^2``."""
    rec = metric_coefficients(fid)
    a_prime = fid.spec.alpha_prime
    return ((rec.D_prime - a_prime**2) * np.square(dq) + rec.D * np.square(dp)) / fid.spec.hbar**2


@dataclass
class FSCheck:
    p: float
    q: float
    dp: float
    dq: float
    fd_value: float
    analytic_value: float
    rel_error: float
    cross_coefficient: float | None
    cross_bound: float

    @property
    def cross_ok(self) -> bool:
        return self.cross_coefficient is None or abs(self.cross_coefficient) <= self.cross_bound


def fubini_study_fd_check(fid: FiducialState, p: float, q: float, dp: float, dq: float) -> FSCheck:
    """Compare the overlap form with the diagonal metric at displacement ``(dp, dq)``.

    When both displacements are non-zero the cross coefficient ``g_pq`` (in
    ``hbar^2``-scaled units, like ``D`` and ``D'``) is estimated from
    ``F(dp, dq) - F(dp, -dq) = -4 g_pq dp dq / hbar^2``.
    """
    displacements = [(dp, dq)]
    if dp != 0 and dq != 0:
        displacements.append((dp, -dq))
    F = fs_form(fid, p, q, displacements)
    exact = float(analytic_form(fid, dp, dq))
    cross = None
    if len(F) == 2:
        cross = float(-(F[0] - F[1]) * fid.spec.hbar**2 / (4.0 * dp * dq))
    return FSCheck(
        p=p,
        q=q,
        dp=dp,
        dq=dq,
        fd_value=float(F[0]),
        analytic_value=exact,
        rel_error=abs(float(F[0]) - exact) / exact if exact else float("inf"),
        cross_coefficient=cross,
        cross_bound=cross_term_bound(fid),
    )
