"""
The fiducial vector ``eta(theta) = N e^{i alpha theta} (1 + b cos theta)^k``.

``k = r / hbar`` is a positive integer, so ``eta`` is ``e^{i alpha theta}`` times a
trigonometric polynomial of degree ``k``: it is exactly band-limited in the
twisted basis, and every moment below is exact once the grid resolves it.
"""
from __future__ import annotations

import math
import warnings
from fractions import Fraction
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import AliasingWarning, ConsistencyError
from .hilbert import (
    CircleGrid,
    GridFunction,
    ModeVector,
    analyze,
    check_alpha,
    check_hbar,
    exact_position_moment,
    make_grid,
)

TAIL_THRESHOLD = 1e-14


@dataclass(frozen=True)
class FiducialSpec:
    alpha: float
    k: int
    b: float
    hbar: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        object.__setattr__(self, "hbar", check_hbar(self.hbar))
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        object.__setattr__(self, "k", int(self.k))
        if not (0.0 < self.b < 1.0):
            raise ValueError(f"b must lie in (0,1), got {self.b}")
        object.__setattr__(self, "b", float(self.b))

    @property
    def r(self) -> float:
        return self.k * self.hbar

    @property
    def alpha_prime(self) -> float:
        return self.hbar * self.alpha

    @classmethod
    def from_r(cls, alpha: float, r: float, k: int, b: float) -> FiducialSpec:
        """Spec at fixed ``r`` with ``hbar = r / k`` (classical-limit sweeps)."""
        return cls(alpha=alpha, k=k, b=b, hbar=r / k)


def _series(k: int, z):
    total = term = type(z)(1)
    for j in range(2 * k):
        term *= (Fraction(1, 2) + j if isinstance(z, Fraction) else 0.5 + j) * (j - 2 * k) * z / ((j + 1) ** 2)
        total += term
    return total


def hyp2F1_terminating(k: int, z: float) -> float:
    """``2F1(1/2, -2k; 1; z)``, a polynomial of degree ``2k`` in ``z``.

    Summed by the term recurrence
    ``t_{j+1} = t_j (1/2 + j)(j - 2k) z / (j + 1)^2``, whose terms all share one
    sign for ``z <= 0``.  For ``0 < z < 1`` the Pfaff transformation
    ``(1-z)^{2k} 2F1(1/2, -2k; 1; z/(z-1))`` restores that; for ``z >= 1`` the
    alternating sum is done in exact rational arithmetic.
    """
    if int(k) != k or k < 0:
        raise ValueError(f"k must be a non-negative integer, got {k}")
    k = int(k)
    z = float(z)
    if z <= 0.0:
        return _series(k, z)
    if z < 1.0:
        return (1.0 - z) ** (2 * k) * _series(k, z / (z - 1.0))
    return float(_series(k, Fraction(z)))


def _log_norm_bracket(k: int, b: float) -> float:
    """log of ``(1-b)^{2k} 2F1(1/2,-2k;1;-2b/(1-b))`` without overflow.

    Term ``j`` of the scaled series is ``c_j (1-b)^{2k-j} (2b)^j`` with
    ``c_j = (1/2)_j (2k)! / ((2k-j)! j!^2)`` > 0, so a log-sum-exp is safe.
    """
    n = 2 * k
    j = np.arange(n + 1)
    log_poch_half = np.concatenate(([0.0], np.cumsum(np.log(0.5 + j[:-1]))))
    log_c = (
        log_poch_half
        + math.lgamma(n + 1)
        - np.array([math.lgamma(n - jj + 1) for jj in j])
        - 2.0 * np.array([math.lgamma(jj + 1) for jj in j])
    )
    log_terms = log_c + (n - j) * math.log1p(-b) + j * math.log(2.0 * b)
    top = log_terms.max()
    return float(top + math.log(np.exp(log_terms - top).sum()))


def normalization_constant(spec: FiducialSpec) -> float:
    log_bracket = math.log(2.0 * math.pi) + _log_norm_bracket(spec.k, spec.b)
    if not math.isfinite(log_bracket):
        raise ConsistencyError(f"non-finite normalization bracket for {spec}")
    return math.exp(-0.5 * log_bracket)


def default_resolution(spec: FiducialSpec, p_max: float = 0.0) -> tuple[int, int]:
    """Grid size ``M`` (power of two) and ``n_max = M/2 - 1`` for ``spec``.

    Leaves room for the fiducial's ``2k+1`` modes, momentum boosts up to
    ``|p| <= p_max`` and a margin of 16 modes, and keeps every ``chi_n``,
    ``n <= 2k``, exact on the grid.
    """
    boost = int(math.ceil(abs(p_max) / spec.hbar))
    need = max(2 * (spec.k + boost + 16) + 2, 4 * spec.k + 2)
    M = 1 << max(6, (need - 1).bit_length())
    return M, M // 2 - 1


@dataclass(frozen=True)
class MomentRecord:
    mean_Q: float
    mean_P: float
    var_Q: float
    mean_P2: float
    chi: np.ndarray = field(repr=False)
    sin_moments: np.ndarray = field(repr=False)

    @property
    def momentum_variance(self) -> float:
        return self.mean_P2 - self.mean_P**2


@dataclass(frozen=True, eq=False)
class FiducialState:
    spec: FiducialSpec
    grid_form: GridFunction
    mode_form: ModeVector
    norm_constant: float

    @property
    def grid(self) -> CircleGrid:
        return self.grid_form.grid

    @property
    def n_max(self) -> int:
        return self.mode_form.n_max

    @cached_property
    def density(self) -> np.ndarray:
        """``|eta|^2`` on the grid, from the real envelope (alpha-independent to the bit)."""
        envelope = self.norm_constant * _envelope(self.spec, self.grid.theta)
        return envelope * envelope

    @cached_property
    def moments(self) -> MomentRecord:
        return moments(self)

    def compatible(self, other: FiducialState) -> bool:
        return self is other or (
            self.spec == other.spec and self.grid == other.grid and self.n_max == other.n_max
        )


def _envelope(spec: FiducialSpec, theta) -> np.ndarray:
    return np.exp(spec.k * np.log1p(spec.b * np.cos(theta)))


def fiducial_values(spec: FiducialSpec, theta, norm: float | None = None) -> np.ndarray:
    """Analytic ``eta(theta)`` at arbitrary angles."""
    N = normalization_constant(spec) if norm is None else norm
    theta = np.asarray(theta, dtype=float)
    return N * np.exp(1j * spec.alpha * theta) * _envelope(spec, theta)


def build_fiducial(
    spec: FiducialSpec,
    grid: CircleGrid | None = None,
    n_max: int | None = None,
    *,
    p_max: float = 0.0,
) -> FiducialState:
    if grid is None or n_max is None:
        M, nm = default_resolution(spec, p_max)
        grid = grid if grid is not None else make_grid(M)
        n_max = n_max if n_max is not None else min(nm, (grid.M - 2) // 2)
    if grid.M < 2 * spec.k + 1 or n_max < spec.k:
        warnings.warn(
            f"grid M={grid.M}, n_max={n_max} cannot hold the {2 * spec.k + 1} fiducial modes",
            AliasingWarning,
            stacklevel=2,
        )
    N = normalization_constant(spec)
    grid_form = GridFunction(grid, fiducial_values(spec, grid.theta, N))
    mode_form = analyze(grid_form, spec.alpha, n_max)
    return FiducialState(spec, grid_form, mode_form, N)


def mode_tail(state: FiducialState, n_cut: int | None = None) -> float:
    """Weight ``sum |c_n|^2`` over ``|n| > n_cut`` (default: the envelope degree ``k``)."""
    n_cut = state.spec.k if n_cut is None else n_cut
    mask = np.abs(state.mode_form.n) > n_cut
    return float(np.sum(np.abs(state.mode_form.coeffs[mask]) ** 2))


def cos_attenuation(state: FiducialState, n: int) -> float:
    """``chi_n = int cos(n theta) |eta|^2 dtheta``; exact on the grid for ``n < M - 2k``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    g = state.grid
    return float(g.weight * np.sum(np.cos(n * g.theta) * state.density))


def moments(state: FiducialState, m_max: int | None = None) -> MomentRecord:
    """First and second moments of Q and P_alpha, plus ``<cos nQ>`` and ``<sin nQ>``.

    Q moments use the exact sawtooth kernel in the twisted basis; P moments are
    diagonal sums over modes; harmonic moments are grid sums (exact trig
    polynomials of degree ``2k + n``).
    """
    spec = state.spec
    m_max = 2 * spec.k if m_max is None else m_max
    v = state.mode_form
    weights = np.abs(v.coeffs) ** 2
    kn = spec.hbar * (v.n + spec.alpha)
    mean_Q = exact_position_moment(v, 1)
    mean_Q2 = exact_position_moment(v, 2)
    theta = state.grid.theta
    w = state.grid.weight
    harmonics = np.arange(m_max + 1)
    chi = w * np.cos(np.outer(harmonics, theta)) @ state.density
    sin_m = w * np.sin(np.outer(harmonics, theta)) @ state.density
    return MomentRecord(
        mean_Q=mean_Q,
        mean_P=float(np.sum(kn * weights)),
        var_Q=mean_Q2 - mean_Q**2,
        mean_P2=float(np.sum(kn * kn * weights)),
        chi=chi,
        sin_moments=sin_m,
    )


def grid_position_moments(state: FiducialState) -> tuple[float, float]:
    """``(<Q>, <Q^2>)`` by the trapezoid rule on the grid (independent of the mode route)."""
    g = state.grid
    theta = g.theta
    q1 = theta.copy()
    q1[0] = 0.0
    rho = state.density
    return float(g.weight * np.sum(q1 * rho)), float(g.weight * np.sum(theta**2 * rho))


@dataclass
class WidthScalingReport:
    b: float
    r: float
    k: list
    second_moment: list
    scaled: list
    limit: float
    max_relative_deviation: float
    passes: bool
    envelope_bound_holds: bool
    envelope_bound_max_violation: float
    notes: str = ""


def width_scaling_check(b: float, r: float, k_list, alpha: float = 0.0) -> WidthScalingReport:
    """Second moment of the angle versus ``k`` at fixed ``r``.

    Confirms ``<theta^2> k -> (1+b)/(2b)``, i.e. the fiducial width shrinks as
    ``sqrt(hbar / r)``.  Also evaluates the pointwise Gaussian majorant
    ``|eta(theta)|^2 <= |eta(0)|^2 exp(-k b theta^2 / (1+b))`` on the grid and
    reports its largest violation; the majorant is only a small-angle statement.
    """
    limit = (1.0 + b) / (2.0 * b)
    ks, m2, scaled = [], [], []
    worst_violation = 0.0
    for k in k_list:
        spec = FiducialSpec.from_r(alpha, r, int(k), b)
        state = build_fiducial(spec)
        var = state.moments.var_Q
        ks.append(int(k))
        m2.append(var)
        scaled.append(var * k)
        theta = state.grid.theta
        log_ratio = 2 * k * (np.log1p(b * np.cos(theta)) - math.log1p(b))
        log_bound = -k * b * theta**2 / (1.0 + b)
        worst_violation = max(worst_violation, float(np.max(log_ratio - log_bound)))
    dev = [abs(s - limit) / limit for s, k in zip(scaled, ks) if k >= 32]
    max_dev = max(dev) if dev else float("nan")
    return WidthScalingReport(
        b=b,
        r=r,
        k=ks,
        second_moment=m2,
        scaled=scaled,
        limit=limit,
        max_relative_deviation=max_dev,
        passes=bool(dev) and max_dev < 0.15,
        envelope_bound_holds=worst_violation <= 0.0,
        envelope_bound_max_violation=worst_violation,
        notes="envelope bound compared in log form: 2k[log(1+b cos t) - log(1+b)] vs -k b t^2/(1+b)",
    )
