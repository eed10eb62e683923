"""Coherent states ``|p,q> = exp(-i q P_alpha / hbar) exp(i p Q / hbar) |eta>``."""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import AliasingWarning
from .fiducial import TAIL_THRESHOLD, FiducialState
from .hilbert import (
    SQRT_2PI,
    ModeVector,
    analyze,
    apply_exp_ipQ,
    apply_P,
    apply_Q,
    inner_product,
    synthesize,
    translate_modes,
)

EDGE_MODES = 8


@dataclass(frozen=True, eq=False)
class CoherentState:
    p: float
    q: float
    modes: ModeVector
    fiducial: FiducialState = field(repr=False)

    @property
    def winding(self) -> int:
        return int(math.floor((self.q + math.pi) / (2.0 * math.pi)))

    @property
    def q_reduced(self) -> float:
        return self.q - 2.0 * math.pi * self.winding

    def norm(self) -> float:
        return self.modes.norm()


def boosted_modes(fid: FiducialState, p: float) -> ModeVector:
    """Modes of ``exp(i p Q / hbar) |eta>`` (grid multiply, then analyze)."""
    boosted = apply_exp_ipQ(fid.grid_form, p, fid.spec.hbar)
    return analyze(boosted, fid.spec.alpha, fid.n_max)


def boosted_modes_batch(fid: FiducialState, p_values) -> np.ndarray:
    """Rows of mode coefficients of ``exp(i p Q/hbar)|eta>`` for many ``p`` at once."""
    spec, grid = fid.spec, fid.grid
    M = grid.M
    p_values = np.asarray(p_values, dtype=float)
    theta = grid.theta
    j = np.arange(M)
    samples = np.exp(1j * np.outer(p_values, theta) / spec.hbar) * fid.grid_form.values
    spectrum = np.fft.fft(samples * np.exp(-2j * math.pi * spec.alpha * j / M), axis=1)
    n = fid.mode_form.n
    return (SQRT_2PI / M) * np.exp(1j * math.pi * (n + spec.alpha)) * spectrum[:, n % M]


def _check_edges(coeffs: np.ndarray, p: float, hbar: float):
    edge = np.sum(np.abs(coeffs[:EDGE_MODES]) ** 2) + np.sum(np.abs(coeffs[-EDGE_MODES:]) ** 2)
    if edge > TAIL_THRESHOLD:
        warnings.warn(
            f"coherent state at p={p} (p/hbar={p / hbar:.3g}) has edge weight {edge:.2e}; "
            "increase n_max",
            AliasingWarning,
            stacklevel=3,
        )


def make_coherent(fid: FiducialState, p: float, q: float) -> CoherentState:
    # boost first, translate second: the reverse order differs by a phase
    modes = translate_modes(boosted_modes(fid, p), q)
    _check_edges(modes.coeffs, p, fid.spec.hbar)
    return CoherentState(float(p), float(q), modes, fid)


def coherent_batch(fid: FiducialState, p_values, q_values) -> np.ndarray:
    """Coefficient rows for ``(p_i, q_i)`` pairs; same construction as :func:`make_coherent`."""
    q_values = np.asarray(q_values, dtype=float)
    rows = boosted_modes_batch(fid, p_values)
    phases = np.exp(-1j * np.outer(q_values, fid.mode_form.n + fid.spec.alpha))
    return rows * phases


def overlap(s1: CoherentState, s2: CoherentState) -> complex:
    if not s1.fiducial.compatible(s2.fiducial):
        raise ValueError("overlap between coherent states built on different fiducials")
    return s1.modes.vdot(s2.modes)


@dataclass(frozen=True)
class CoherentExpectations:
    exp_P: float
    exp_Q_approx: float


def coherent_expectations(s: CoherentState) -> CoherentExpectations:
    """``<P_alpha>`` by the mode sum and ``<Q>`` by the grid rule.

    The sawtooth expectation is only meaningful for states concentrated away
    from the seam at theta = +-pi.
    """
    fid = s.fiducial
    hbar = fid.spec.hbar
    exp_P = s.modes.vdot(apply_P(s.modes, hbar)).real
    f = synthesize(s.modes, fid.grid)
    exp_Q = inner_product(f, apply_Q(f)).real
    return CoherentExpectations(exp_P=float(exp_P), exp_Q_approx=float(exp_Q))


@dataclass
class ResolutionReport:
    P_max: float
    n_p: int
    n_q: int
    pairs: list
    errors: list
    max_abs_error: float

    def to_dict(self) -> dict:
        return {
            "P_max": self.P_max,
            "n_p": self.n_p,
            "n_q": self.n_q,
            "pairs": [list(p) for p in self.pairs],
            "errors": list(self.errors),
            "max_abs_error": self.max_abs_error,
        }


def resolution_check(
    fid: FiducialState,
    test_vectors,
    P_max: float,
    n_p: int,
    n_q: int,
    pairs=None,
) -> ResolutionReport:
    """Quadrature of ``int <psi|p,q><p,q|phi> dp dq / (2 pi hbar)`` against ``<psi|phi>``.

    ``p`` runs over ``n_p`` trapezoid nodes on ``[-P_max, P_max]`` and ``q`` over
    ``n_q`` uniform nodes on ``[-pi, pi)``.  ``pairs`` defaults to every
    unordered pair (including diagonal) of ``test_vectors``.
    """
    if n_p < 2 or n_q < 1:
        raise ValueError("need n_p >= 2 and n_q >= 1")
    vecs = [np.asarray(v.coeffs) for v in test_vectors]
    if pairs is None:
        pairs = list(itertools.combinations_with_replacement(range(len(vecs)), 2))
    hbar = fid.spec.hbar
    p_nodes = np.linspace(-P_max, P_max, n_p)
    w_p = np.full(n_p, p_nodes[1] - p_nodes[0])
    w_p[0] *= 0.5
    w_p[-1] *= 0.5
    q_nodes = -math.pi + 2.0 * math.pi * np.arange(n_q) / n_q
    w_q = 2.0 * math.pi / n_q
    rows = boosted_modes_batch(fid, p_nodes)
    E = np.exp(-1j * np.outer(q_nodes, fid.mode_form.n + fid.spec.alpha))
    # proj[v][p, q] = <v|p,q>
    proj = [(rows * v.conj()) @ E.T for v in vecs]
    scale = 1.0 / (2.0 * math.pi * hbar)
    errors = []
    for i, j in pairs:
        integrand = proj[i] * proj[j].conj()
        value = scale * w_q * np.sum(w_p @ integrand)
        errors.append(float(abs(value - np.vdot(vecs[i], vecs[j]))))
    return ResolutionReport(
        P_max=float(P_max),
        n_p=int(n_p),
        n_q=int(n_q),
        pairs=[tuple(p) for p in pairs],
        errors=errors,
        max_abs_error=max(errors) if errors else 0.0,
    )


def default_resolution_settings(fid: FiducialState, test_band: int) -> dict:
    """Reference quadrature: spacing hbar/2 over ``|p| <= (k + band + 16) hbar``.

    The integrand is the squared modulus of a Fourier transform of a function
    supported on a circle, so the uniform rule is exact for spacing < hbar and
    only the cutoff matters.
    """
    hbar = fid.spec.hbar
    P_max = (fid.spec.k + test_band + 16) * hbar
    n_p = int(round(2 * P_max / (0.5 * hbar))) + 1
    n_q = 2 * (test_band + fid.spec.k) + 8
    return {"P_max": P_max, "n_p": n_p, "n_q": n_q}
