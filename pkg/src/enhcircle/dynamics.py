"""
Enhanced classical dynamics generated by the symbol, restricted actions along
coherent-state paths, and a split-step Schrodinger propagator used as an
independent probe of the same Hamiltonian.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .coherent import coherent_batch
from .errors import ResolutionWarning, StepSizeError
from .fiducial import FiducialState
from .hamiltonian import (
    PotentialSpec,
    check_pairing,
    classical_symbol,
    closed_form_gradient,
    kinetic_offset,
    symbol_closed_form_array,
    symbol_direct_batch,
)
from .hilbert import ModeVector, check_hbar


def winding_numbers(q) -> np.ndarray:
    return np.floor((np.asarray(q, dtype=float) + math.pi) / (2.0 * math.pi)).astype(int)


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    p: np.ndarray
    q: np.ndarray
    winding: np.ndarray = field(repr=False)

    @classmethod
    def from_path(cls, times, p, q) -> Trajectory:
        times = np.asarray(times, dtype=float)
        p = np.broadcast_to(np.asarray(p, dtype=float), times.shape).copy()
        q = np.broadcast_to(np.asarray(q, dtype=float), times.shape).copy()
        steps = np.diff(q)
        if steps.size and np.max(np.abs(steps)) >= math.pi:
            raise StepSizeError("unwrapped q jumps by pi or more between samples")
        return cls(times, p, q, winding_numbers(q))

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def q_reduced(self) -> np.ndarray:
        return self.q - 2.0 * math.pi * self.winding

    def __len__(self):
        return len(self.times)


def eom_rhs(p, q, fid: FiducialState, V: PotentialSpec):
    """``(dq/dt, dp/dt)`` of Hamilton's equations for the closed-form symbol."""
    dH_dp, dH_dq = closed_form_gradient(fid, V, p, q)
    return dH_dp, -dH_dq


def integrate(p0: float, q0: float, T: float, dt: float, fid: FiducialState, V: PotentialSpec) -> Trajectory:
    """Stormer-Verlet (kick-drift-kick) integration of the enhanced equations.

    ``T`` must be an integer multiple of ``dt``.  Raises :class:`StepSizeError`
    if a single drift moves the angle by pi or more.
    """
    check_pairing(fid.spec, V)
    if not dt > 0:
        raise ValueError("dt must be positive")
    n_steps = int(round(T / dt))
    if n_steps < 1 or abs(n_steps * dt - T) > 1e-9 * max(1.0, abs(T)):
        raise ValueError(f"T={T} is not a positive integer multiple of dt={dt}")
    a_prime = fid.spec.alpha_prime

    def force(q):
        return eom_rhs(0.0, q, fid, V)[1]

    p = np.empty(n_steps + 1)
    q = np.empty(n_steps + 1)
    p[0], q[0] = p0, q0
    f = float(force(q0))
    for i in range(n_steps):
        p_half = p[i] + 0.5 * dt * f
        dq = dt * 2.0 * (p_half + a_prime)
        if abs(dq) >= math.pi:
            speed = 2.0 * abs(p_half + a_prime)
            raise StepSizeError(
                f"step {i}: |dq|={abs(dq):.3g} >= pi; use dt < {math.pi / speed:.3g}",
                suggested_dt=0.5 * math.pi / speed,
            )
        q[i + 1] = q[i] + dq
        f = float(force(q[i + 1]))
        p[i + 1] = p_half + 0.5 * dt * f
    times = dt * np.arange(n_steps + 1)
    return Trajectory(times, p, q, winding_numbers(q))


def energy_drift(traj: Trajectory, fid: FiducialState, V: PotentialSpec) -> float:
    H = symbol_closed_form_array(fid, V, traj.p, traj.q)
    return float(np.max(np.abs(H - H[0])))


@dataclass
class KineticOverlapReport:
    max_deviation: float
    max_deviation_coarse: float
    convergence_ratio: float
    times: np.ndarray = field(repr=False)
    overlap_term: np.ndarray = field(repr=False)
    predicted: np.ndarray = field(repr=False)
    imag_residue: float = 0.0


def _overlap_derivative(states: np.ndarray, hbar: float, dt: float, stride: int):
    """``i hbar <s_i|(s_{i+s} - s_{i-s})> / (2 s dt)`` at interior rows."""
    s = stride
    centre = states[s:-s]
    diff = states[2 * s:] - states[: -2 * s]
    return 1j * hbar * np.sum(centre.conj() * diff, axis=1) / (2 * s * dt)


def kinetic_overlap_check(traj: Trajectory, fid: FiducialState) -> KineticOverlapReport:
    """Finite-difference ``<p,q| i hbar d/dt |p,q>`` against ``(hbar alpha + p) qdot``.

    Central differences with spacing ``dt`` and ``2 dt`` are formed from the same
    samples; their error ratio measures the convergence order (4 for second order).
    """
    if len(traj) < 5:
        raise ValueError("need at least 5 trajectory samples")
    hbar, a_prime = fid.spec.hbar, fid.spec.alpha_prime
    dt = traj.dt
    states = coherent_batch(fid, traj.p, traj.q)

    def deviation(stride):
        lhs = _overlap_derivative(states, hbar, dt, stride)
        qdot = (traj.q[2 * stride:] - traj.q[: -2 * stride]) / (2 * stride * dt)
        rhs = (a_prime + traj.p[stride:-stride]) * qdot
        return lhs, rhs

    lhs1, rhs1 = deviation(1)
    lhs2, rhs2 = deviation(2)
    # compare at the common interior points i = 2..n-3
    dev1 = np.abs(lhs1[1:-1].real - rhs1[1:-1])
    dev2 = np.abs(lhs2.real - rhs2)
    m1, m2 = float(dev1.max()), float(dev2.max())
    return KineticOverlapReport(
        max_deviation=m1,
        max_deviation_coarse=m2,
        convergence_ratio=m2 / m1 if m1 > 0 else float("inf"),
        times=traj.times[2:-2],
        overlap_term=lhs1[1:-1].real,
        predicted=rhs1[1:-1],
        imag_residue=float(np.max(np.abs(lhs1.imag))),
    )


def _trapezoid(y, dt):
    return float(dt * (np.sum(y) - 0.5 * (y[0] + y[-1])))


def _simpson(y, dt):
    """Composite Simpson; falls back to a trapezoid on the last panel for odd panel counts."""
    n = len(y) - 1
    if n < 2:
        return _trapezoid(y, dt)
    m = n - (n % 2)
    s = dt / 3.0 * (y[0] + y[m] + 4.0 * np.sum(y[1:m:2]) + 2.0 * np.sum(y[2:m - 1:2]))
    if m < n:
        s += 0.5 * dt * (y[m] + y[n])
    return float(s)


@dataclass
class ActionReport:
    A_QR: float
    A_C: float
    surface_term: float
    residual: float
    delta_q: float
    winding: int
    kinetic_constant: float
    offset_integral: float
    offset_integral_oracle: float
    quadrature_error_estimate: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def action_compare(traj: Trajectory, fid: FiducialState, V: PotentialSpec) -> ActionReport:
    """Restricted quantum action versus the classical action along ``traj``.

    ``p dq`` is integrated along the polygon of unwrapped angles (trapezoid in
    time), so the twist contribution telescopes to ``hbar alpha (q_end - q_0)``.
    ``A_QR - A_C - surface = -int (H_alpha - H_cl) dt``; the right-hand side is
    recomputed by Simpson's rule on the direct-route symbol as an oracle.
    """
    a_prime = fid.spec.alpha_prime
    dt = traj.dt
    dq = np.diff(traj.q)
    p_mid = 0.5 * (traj.p[1:] + traj.p[:-1])
    pdq = float(np.sum(p_mid * dq))
    surface = a_prime * float(np.sum(dq))
    H_alpha = symbol_closed_form_array(fid, V, traj.p, traj.q)
    H_cl = classical_symbol(V, traj.p, traj.q, a_prime)
    A_QR = pdq + surface - _trapezoid(H_alpha, dt)
    A_C = pdq - _trapezoid(H_cl, dt)
    gap = H_alpha - H_cl
    H_direct = symbol_direct_batch(fid, V, traj.p, traj.q).real
    oracle = -_simpson(H_direct - H_cl, dt)
    return ActionReport(
        A_QR=A_QR,
        A_C=A_C,
        surface_term=surface,
        residual=A_QR - A_C - surface,
        delta_q=float(traj.q[-1] - traj.q[0]),
        winding=int(traj.winding[-1] - traj.winding[0]),
        kinetic_constant=kinetic_offset(fid),
        offset_integral=-_trapezoid(gap, dt),
        offset_integral_oracle=oracle,
        quadrature_error_estimate=abs(_trapezoid(gap, dt) - _simpson(gap, dt)),
    )


@dataclass
class AlphaShiftReport:
    max_q_deviation: float
    max_momentum_offset_error: float
    hbar_alpha: float


def alpha_shift_equivalence(
    p0: float,
    q0: float,
    T: float,
    dt: float,
    V: PotentialSpec,
    fid_alpha: FiducialState,
    fid_zero: FiducialState,
) -> AlphaShiftReport:
    """Compare the ``(alpha, p0)`` trajectory with the ``(0, p0 + hbar alpha)`` one."""
    sa, s0 = fid_alpha.spec, fid_zero.spec
    if (sa.k, sa.b, sa.hbar) != (s0.k, s0.b, s0.hbar) or s0.alpha != 0.0:
        raise ValueError("fiducials must share (k, b, hbar) and the second must have alpha = 0")
    shift = sa.alpha_prime
    ta = integrate(p0, q0, T, dt, fid_alpha, V)
    t0 = integrate(p0 + shift, q0, T, dt, fid_zero, V)
    return AlphaShiftReport(
        max_q_deviation=float(np.max(np.abs(ta.q - t0.q))),
        max_momentum_offset_error=float(np.max(np.abs((t0.p - ta.p) - shift))),
        hbar_alpha=shift,
    )


class SplitStepPropagator:
    """Strang splitting ``e^{-iK dt/2} e^{-iV dt} e^{-iK dt/2}`` (``K = P^2``, ``hbar`` units).

    Works on an odd grid of ``2 n_max + 1`` points so the mode <-> grid map is a
    bijection and every step is exactly unitary.
    """

    def __init__(self, alpha: float, n_max: int, V: PotentialSpec, hbar: float, dt: float):
        self.hbar = check_hbar(hbar)
        self.alpha = alpha
        self.n_max = n_max
        self.dt = float(dt)
        n = np.arange(-n_max, n_max + 1)
        self._n = n
        self.M = M = 2 * n_max + 1
        theta = -math.pi + 2.0 * math.pi * np.arange(M) / M
        kin = self.hbar * (n + alpha) ** 2  # K/hbar
        self._half_kinetic = np.exp(-0.5j * self.dt * kin)
        self._potential = np.exp(-1j * self.dt * V(theta) / self.hbar)
        self._slot = n % M
        self._shift = np.exp(-1j * math.pi * n)  # theta_0 = -pi
        bound = self.dt * self.hbar**2 * (n_max + 1) ** 2
        if bound >= 0.5:
            warnings.warn(
                f"dt * hbar^2 (n_max+1)^2 = {bound:.3g} >= 0.5; kinetic phase under-resolved",
                ResolutionWarning,
                stacklevel=2,
            )

    def _to_grid(self, c):
        slots = np.empty(self.M, dtype=complex)
        slots[self._slot] = c * self._shift
        return np.fft.ifft(slots)

    def _to_modes(self, g):
        return np.fft.fft(g)[self._slot] * self._shift.conj()

    def step(self, c: np.ndarray) -> np.ndarray:
        c = self._half_kinetic * c
        c = self._to_modes(self._potential * self._to_grid(c))
        return self._half_kinetic * c

    def run(self, c: np.ndarray, n_steps: int, observe=None) -> np.ndarray:
        c = np.asarray(c, dtype=complex)
        if observe is not None:
            observe(0, c)
        for i in range(n_steps):
            c = self.step(c)
            if observe is not None:
                observe(i + 1, c)
        return c


def evolve_quantum(state: ModeVector, V: PotentialSpec, hbar: float, T: float, dt: float) -> ModeVector:
    n_steps = int(round(T / dt))
    if n_steps < 0 or abs(n_steps * dt - T) > 1e-9 * max(1.0, abs(T)):
        raise ValueError(f"T={T} is not a non-negative integer multiple of dt={dt}")
    prop = SplitStepPropagator(state.alpha, state.n_max, V, hbar, dt)
    return state.with_coeffs(prop.run(state.coeffs, n_steps))


@dataclass
class EhrenfestReport:
    times: np.ndarray = field(repr=False)
    quantum_P: np.ndarray = field(repr=False)
    quantum_angle: np.ndarray = field(repr=False)
    classical_P: np.ndarray = field(repr=False)
    classical_q: np.ndarray = field(repr=False)
    max_momentum_deviation: float = 0.0
    max_angle_deviation: float = 0.0


def ehrenfest_compare(
    fid: FiducialState, V: PotentialSpec, p0: float, q0: float, T: float, dt: float
) -> EhrenfestReport:
    """Quantum ``<P_alpha>(t)``, ``arg <e^{iQ}>(t)`` versus the enhanced classical trajectory.

    The classical momentum is compared as ``p(t) + hbar alpha`` (the coherent-state
    expectation of ``P_alpha``).
    """
    spec = fid.spec
    traj = integrate(p0, q0, T, dt, fid, V)
    start = coherent_batch(fid, [p0], [q0])[0]
    prop = SplitStepPropagator(spec.alpha, fid.n_max, V, spec.hbar, dt)
    kn = spec.hbar * (prop._n + spec.alpha)
    P_t = np.empty(len(traj))
    angle = np.empty(len(traj))

    def observe(i, c):
        w = np.abs(c) ** 2
        P_t[i] = np.sum(kn * w)
        # <e^{iQ}> = sum_n conj(c_{n+1}) c_n
        angle[i] = np.angle(np.sum(c[1:].conj() * c[:-1]))

    prop.run(start, len(traj) - 1, observe)
    dev_angle = np.angle(np.exp(1j * (angle - traj.q)))
    cl_P = traj.p + spec.alpha_prime
    return EhrenfestReport(
        times=traj.times,
        quantum_P=P_t,
        quantum_angle=angle,
        classical_P=cl_P,
        classical_q=traj.q,
        max_momentum_deviation=float(np.max(np.abs(P_t - cl_P))),
        max_angle_deviation=float(np.max(np.abs(dev_angle))),
    )

