"""
``H = P_alpha^2 + V(Q)`` with a trigonometric-polynomial potential, and its
coherent-state symbol ``H_alpha(p, q) = <p,q|H|p,q>``.

Mass units obey ``1/(2 mu) = 1``.  The symbol is evaluated three ways:

* ``direct``      -- build ``|p,q>`` and take the expectation of ``H``;
* ``shifted``     -- ``<eta| (P+p)^2 + V(Q+q) |eta>`` from fiducial moments;
* ``closed_form`` -- ``(p+a')^2 + (<P^2> - a'^2) + a0 + sum chi_n (a_n cos nq + b_n sin nq)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coherent import coherent_batch, make_coherent
from .errors import ConstraintError
from .fiducial import FiducialSpec, FiducialState, build_fiducial
from .hilbert import (
    CircleGrid,
    GridFunction,
    ModeVector,
    analyze,
    check_hbar,
    make_grid,
    synthesize,
)


@dataclass(frozen=True)
class PotentialSpec:
    a0: float = 0.0
    a: tuple = ()
    b: tuple = ()

    def __post_init__(self):
        a = tuple(float(x) for x in self.a)
        b = tuple(float(x) for x in self.b)
        m = max(len(a), len(b))
        object.__setattr__(self, "a", a + (0.0,) * (m - len(a)))
        object.__setattr__(self, "b", b + (0.0,) * (m - len(b)))
        object.__setattr__(self, "a0", float(self.a0))

    @property
    def m(self) -> int:
        return len(self.a)

    def __call__(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        out = np.full(theta.shape, self.a0)
        for n, (an, bn) in enumerate(zip(self.a, self.b), start=1):
            out = out + an * np.cos(n * theta) + bn * np.sin(n * theta)
        return out

    def derivative(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape)
        for n, (an, bn) in enumerate(zip(self.a, self.b), start=1):
            out = out - n * an * np.sin(n * theta) + n * bn * np.cos(n * theta)
        return out


def check_pairing(spec: FiducialSpec, V: PotentialSpec):
    if not V.m < spec.k:
        raise ConstraintError(
            f"potential bandwidth m={V.m} requires k > m, got k={spec.k} (r/hbar must exceed m)"
        )


def apply_V(f: GridFunction, V: PotentialSpec) -> GridFunction:
    return GridFunction(f.grid, V(f.grid.theta) * f.values)


def apply_H(
    v: ModeVector,
    V: PotentialSpec,
    hbar: float,
    grid: CircleGrid | None = None,
    *,
    k: int | None = None,
) -> ModeVector:
    """Kinetic part in mode space, potential on the grid, summed in mode space."""
    hbar = check_hbar(hbar)
    if k is not None and V.m >= k:
        raise ConstraintError(f"potential bandwidth m={V.m} requires k > m, got k={k}")
    kinetic = v.with_coeffs((hbar * (v.n + v.alpha)) ** 2 * v.coeffs)
    if V.m == 0:
        return kinetic + v * V.a0
    grid = grid if grid is not None else make_grid(2 * v.n_max + 2)
    potential = analyze(apply_V(synthesize(v, grid), V), v.alpha, v.n_max)
    return kinetic + potential


def hamiltonian_matrix(alpha: float, n_max: int, V: PotentialSpec, hbar: float) -> np.ndarray:
    """Dense ``<n|H|n'>`` in the truncated twisted basis (exact Toeplitz potential)."""
    n = np.arange(-n_max, n_max + 1)
    H = np.diag((hbar * (n + alpha)) ** 2).astype(complex)
    H += V.a0 * np.eye(len(n))
    for m, (am, bm) in enumerate(zip(V.a, V.b), start=1):
        # cos(m t) = (e^{imt} + e^{-imt})/2, sin(m t) = (e^{imt} - e^{-imt})/(2i)
        up = 0.5 * am + 0.5j * -bm  # coefficient of e^{+imt}: a/2 + b/(2i)
        down = 0.5 * am + 0.5j * bm
        H += np.diag(np.full(len(n) - m, up), -m) + np.diag(np.full(len(n) - m, down), m)
    return H


@dataclass(frozen=True)
class SymbolValue:
    value: float
    route: str
    imag_residue: float = 0.0


def classical_symbol(V: PotentialSpec, p, q, alpha_prime: float):
    """``H_cl(p, q) = (p + alpha')^2 + V(q)``, the hbar -> 0 limit at fixed label."""
    return (np.asarray(p) + alpha_prime) ** 2 + V(q)


def kinetic_offset(fid: FiducialState) -> float:
    """``<eta|P^2|eta> - alpha'^2``, the constant the symbol carries beyond ``(p+alpha')^2``."""
    return fid.moments.mean_P2 - fid.spec.alpha_prime**2


def symbol_direct(fid: FiducialState, V: PotentialSpec, p: float, q: float) -> SymbolValue:
    check_pairing(fid.spec, V)
    s = make_coherent(fid, p, q)
    h = s.modes.vdot(apply_H(s.modes, V, fid.spec.hbar, fid.grid))
    return SymbolValue(float(h.real), "direct", float(h.imag))


def symbol_direct_batch(fid: FiducialState, V: PotentialSpec, p_values, q_values) -> np.ndarray:
    """Vectorized :func:`symbol_direct` over ``(p_i, q_i)`` pairs; returns complex values."""
    check_pairing(fid.spec, V)
    spec, grid = fid.spec, fid.grid
    rows = coherent_batch(fid, p_values, q_values)
    n = fid.mode_form.n
    kinetic = np.sum((spec.hbar * (n + spec.alpha)) ** 2 * np.abs(rows) ** 2, axis=1)
    if V.m == 0:
        return kinetic + V.a0 * np.sum(np.abs(rows) ** 2, axis=1)
    M = grid.M
    slots = np.zeros((rows.shape[0], M), dtype=complex)
    np.add.at(slots, (slice(None), n % M), rows * np.exp(-1j * math.pi * n))
    samples = np.fft.ifft(slots, axis=1) * M  # |psi|^2 is insensitive to the alpha phase
    dens = np.abs(samples) ** 2 / (2.0 * math.pi)
    pot = grid.weight * dens @ V(grid.theta)
    return kinetic + pot


def symbol_shifted(fid: FiducialState, V: PotentialSpec, p: float, q: float) -> SymbolValue:
    check_pairing(fid.spec, V)
    mom = fid.moments
    value = mom.mean_P2 + 2.0 * p * mom.mean_P + p * p + V.a0
    for n, (an, bn) in enumerate(zip(V.a, V.b), start=1):
        c, s = mom.chi[n], mom.sin_moments[n]
        cos_shift = math.cos(n * q) * c - math.sin(n * q) * s
        sin_shift = math.sin(n * q) * c + math.cos(n * q) * s
        value += an * cos_shift + bn * sin_shift
    return SymbolValue(float(value), "shifted")


def symbol_closed_form(fid: FiducialState, V: PotentialSpec, p, q):
    check_pairing(fid.spec, V)
    return SymbolValue(float(_closed_form(fid, V, p, q)), "closed_form")


def _closed_form(fid: FiducialState, V: PotentialSpec, p, q):
    a_prime = fid.spec.alpha_prime
    chi = fid.moments.chi
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    value = (p + a_prime) ** 2 + kinetic_offset(fid) + V.a0
    for n, (an, bn) in enumerate(zip(V.a, V.b), start=1):
        value = value + chi[n] * (an * np.cos(n * q) + bn * np.sin(n * q))
    return value


def symbol_closed_form_array(fid: FiducialState, V: PotentialSpec, p, q) -> np.ndarray:
    check_pairing(fid.spec, V)
    return _closed_form(fid, V, p, q)


def closed_form_gradient(fid: FiducialState, V: PotentialSpec, p, q):
    """``(dH/dp, dH/dq)`` of the closed-form symbol."""
    chi = fid.moments.chi
    q = np.asarray(q, dtype=float)
    dH_dp = 2.0 * (np.asarray(p, dtype=float) + fid.spec.alpha_prime)
    dH_dq = np.zeros(q.shape)
    for n, (an, bn) in enumerate(zip(V.a, V.b), start=1):
        dH_dq = dH_dq + n * chi[n] * (-an * np.sin(n * q) + bn * np.cos(n * q))
    return dH_dp, dH_dq


@dataclass
class SymbolTable:
    p: np.ndarray
    q: np.ndarray
    direct: np.ndarray
    shifted: np.ndarray
    closed: np.ndarray
    classical: np.ndarray
    imag_residue: float

    @property
    def residual(self) -> np.ndarray:
        return self.direct - self.classical

    def max_route_discrepancy(self, relative: bool = True) -> float:
        routes = (self.direct, self.shifted, self.closed)
        worst = 0.0
        for i in range(3):
            for j in range(i + 1, 3):
                diff = np.abs(routes[i] - routes[j])
                if relative:
                    diff = diff / np.maximum(1.0, np.maximum(np.abs(routes[i]), np.abs(routes[j])))
                worst = max(worst, float(diff.max()))
        return worst


def symbol_table(fid: FiducialState, V: PotentialSpec, p_values, q_values) -> SymbolTable:
    """All three routes on the lattice ``p_values x q_values`` (row-major in ``p``)."""
    P, Q = np.meshgrid(np.asarray(p_values, float), np.asarray(q_values, float), indexing="ij")
    P, Q = P.ravel(), Q.ravel()
    direct = symbol_direct_batch(fid, V, P, Q)
    shifted = np.array([symbol_shifted(fid, V, p, q).value for p, q in zip(P, Q)])
    closed = symbol_closed_form_array(fid, V, P, Q)
    return SymbolTable(
        p=P,
        q=Q,
        direct=direct.real,
        shifted=shifted,
        closed=closed,
        classical=classical_symbol(V, P, Q, fid.spec.alpha_prime),
        imag_residue=float(np.max(np.abs(direct.imag))),
    )


@dataclass
class ScalingReport:
    k: list
    hbar: list
    residual: list
    slope: float | None
    intercept: float | None
    profiles: list = field(repr=False, default_factory=list)
    kinetic_offsets: list = field(default_factory=list)


def fit_loglog(x, y):
    """Least-squares slope and intercept of ``log y`` against ``log x``; ``None`` if < 2 points."""
    if len(x) < 2:
        return None, None
    slope, intercept = np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)
    return float(slope), float(intercept)


def scaling_residual_study(
    alpha: float,
    b: float,
    r: float,
    V: PotentialSpec,
    k_list,
    pq_lattice,
    *,
    threads: int = 1,
) -> ScalingReport:
    """Lattice-max of ``|H_alpha - H_cl|`` for each ``k`` at fixed ``r`` (``hbar = r/k``).

    ``H_alpha`` is taken from the direct route.  The slope of ``log R`` against
    ``log k`` is -1 when the remainder is linear in hbar.
    """
    p_values, q_values = pq_lattice
    p_max = float(np.max(np.abs(p_values))) if len(p_values) else 0.0

    def one(k):
        spec = FiducialSpec.from_r(alpha, r, int(k), b)
        check_pairing(spec, V)
        fid = build_fiducial(spec, p_max=p_max)
        table = symbol_table(fid, V, p_values, q_values)
        res = np.abs(table.residual)
        return float(res.max()), res.reshape(len(p_values), len(q_values)), kinetic_offset(fid), spec.hbar

    ks = [int(k) for k in k_list]
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, ks))
    else:
        results = [one(k) for k in ks]
    R = [res[0] for res in results]
    slope, intercept = fit_loglog(ks, R)
    return ScalingReport(
        k=ks,
        hbar=[res[3] for res in results],
        residual=R,
        slope=slope,
        intercept=intercept,
        profiles=[res[1] for res in results],
        kinetic_offsets=[res[2] for res in results],
    )
