"""
Vectors of L^2([-pi, pi)) in two dual representations.

A :class:`GridFunction` holds samples on the uniform grid
``theta_j = -pi + 2 pi j / M``; a :class:`ModeVector` holds coefficients in
the alpha-twisted orthonormal basis ``e^{i(n+alpha) theta} / sqrt(2 pi)``,
``n = -N_max..N_max``.  Operators diagonal in position act on grid samples,
operators diagonal in momentum act on mode coefficients; conversion between
the two is an explicit FFT.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AliasingWarning

SQRT_2PI = math.sqrt(2.0 * math.pi)


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 <= alpha < 1.0):
        raise ValueError(f"alpha must lie in [0,1), got {alpha}")
    return alpha


def check_hbar(hbar: float) -> float:
    hbar = float(hbar)
    if not (hbar > 0.0 and math.isfinite(hbar)):
        raise ValueError(f"hbar must be a positive finite real, got {hbar}")
    return hbar


@dataclass(frozen=True)
class CircleGrid:
    """Uniform grid on [-pi, pi) with ``M`` points, left endpoint included."""

    M: int

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"grid size M must be a positive integer, got {self.M}")

    @property
    def spacing(self) -> float:
        return 2.0 * math.pi / self.M

    @property
    def weight(self) -> float:
        return 2.0 * math.pi / self.M

    @property
    def theta(self) -> np.ndarray:
        return -math.pi + self.spacing * np.arange(self.M)


def make_grid(M: int) -> CircleGrid:
    return CircleGrid(M)


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: CircleGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.M,):
            raise ValueError(f"expected {self.grid.M} samples, got shape {vals.shape}")
        object.__setattr__(self, "values", vals)

    def __mul__(self, scalar):
        return GridFunction(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __add__(self, other: GridFunction):
        _same_grid(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: GridFunction):
        _same_grid(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def norm(self) -> float:
        return math.sqrt(inner_product(self, self).real)


@dataclass(frozen=True, eq=False)
class ModeVector:
    """Coefficients ``c_n``, ``n = -n_max..n_max`` stored in increasing ``n``."""

    alpha: float
    n_max: int
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        if self.n_max < 0:
            raise ValueError("n_max must be non-negative")
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (2 * self.n_max + 1,):
            raise ValueError(f"expected {2 * self.n_max + 1} coefficients, got shape {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @property
    def n(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    @classmethod
    def zeros(cls, alpha: float, n_max: int) -> ModeVector:
        return cls(alpha, n_max, np.zeros(2 * n_max + 1, dtype=complex))

    @classmethod
    def unit(cls, n: int, alpha: float, n_max: int) -> ModeVector:
        if abs(n) > n_max:
            raise ValueError(f"mode {n} outside truncation |n| <= {n_max}")
        c = np.zeros(2 * n_max + 1, dtype=complex)
        c[n + n_max] = 1.0
        return cls(alpha, n_max, c)

    def coefficient(self, n: int) -> complex:
        return complex(self.coeffs[n + self.n_max]) if abs(n) <= self.n_max else 0j

    def with_coeffs(self, coeffs) -> ModeVector:
        return ModeVector(self.alpha, self.n_max, coeffs)

    def __mul__(self, scalar):
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def __add__(self, other: ModeVector):
        _same_basis(self, other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: ModeVector):
        _same_basis(self, other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def vdot(self, other: ModeVector) -> complex:
        _same_basis(self, other)
        return complex(np.vdot(self.coeffs, other.coeffs))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def evaluate(self, theta) -> np.ndarray:
        """Evaluate the expansion at arbitrary angles (not restricted to a grid)."""
        theta = np.asarray(theta, dtype=float)
        phases = np.exp(1j * np.multiply.outer(theta, self.n + self.alpha))
        return phases @ self.coeffs / SQRT_2PI


def _same_grid(f: GridFunction, g: GridFunction):
    if f.grid != g.grid:
        raise ValueError(f"grid mismatch: M={f.grid.M} vs M={g.grid.M}")


def _same_basis(u: ModeVector, v: ModeVector):
    if u.alpha != v.alpha or u.n_max != v.n_max:
        raise ValueError(
            f"basis mismatch: (alpha={u.alpha}, n_max={u.n_max}) vs (alpha={v.alpha}, n_max={v.n_max})"
        )


def inner_product(f: GridFunction, g: GridFunction) -> complex:
    """Rectangle-rule approximation of the integral of conj(f) g over the circle."""
    _same_grid(f, g)
    return complex(f.grid.weight * np.vdot(f.values, g.values))


def mode_function(n: int, alpha: float, grid: CircleGrid) -> GridFunction:
    theta = grid.theta
    return GridFunction(grid, np.exp(1j * (n + alpha) * theta) / SQRT_2PI)


def analyze(f: GridFunction, alpha: float, n_max: int) -> ModeVector:
    """Project grid samples onto twisted modes ``|n| <= n_max`` with the grid rule."""
    alpha = check_alpha(alpha)
    M = f.grid.M
    if 2 * n_max + 1 > M:
        warnings.warn(
            f"n_max={n_max} needs at least {2 * n_max + 1} grid points, grid has {M}; modes alias",
            AliasingWarning,
            stacklevel=2,
        )
    j = np.arange(M)
    n = np.arange(-n_max, n_max + 1)
    spectrum = np.fft.fft(f.values * np.exp(-2j * math.pi * alpha * j / M))
    coeffs = (SQRT_2PI / M) * np.exp(1j * math.pi * (n + alpha)) * spectrum[n % M]
    return ModeVector(alpha, n_max, coeffs)


def synthesize(v: ModeVector, grid: CircleGrid) -> GridFunction:
    M = grid.M
    n = v.n
    slots = np.zeros(M, dtype=complex)
    np.add.at(slots, n % M, v.coeffs * np.exp(-1j * math.pi * n))
    # the exp(-i pi n) factor above accounts for theta_0 = -pi
    values = np.exp(1j * v.alpha * grid.theta) * np.fft.ifft(slots) * M / SQRT_2PI
    return GridFunction(grid, values)


def position_multiplier(grid: CircleGrid) -> np.ndarray:
    """Sawtooth ``theta_j``, with the jump at -pi replaced by its midpoint value 0.

    The periodic sawtooth is discontinuous at the seam; taking the average of the
    one-sided limits there makes the grid rule the trapezoid rule on [-pi, pi],
    so ``<f|Q|f> = 0`` exactly whenever ``|f|`` is even.
    """
    x = grid.theta.copy()
    x[0] = 0.0
    return x


def apply_Q(f: GridFunction) -> GridFunction:
    return GridFunction(f.grid, position_multiplier(f.grid) * f.values)


def apply_exp_ipQ(f: GridFunction, p: float, hbar: float) -> GridFunction:
    """Multiply by ``exp(i p theta / hbar)``; unitary on the grid."""
    hbar = check_hbar(hbar)
    return GridFunction(f.grid, np.exp(1j * p * f.grid.theta / hbar) * f.values)


def apply_P(v: ModeVector, hbar: float) -> ModeVector:
    hbar = check_hbar(hbar)
    return v.with_coeffs(hbar * (v.n + v.alpha) * v.coeffs)


def translate_modes(v: ModeVector, q: float) -> ModeVector:
    """Apply ``exp(-i q P_alpha / hbar)``: phases ``exp(-i q (n + alpha))``."""
    return v.with_coeffs(np.exp(-1j * q * (v.n + v.alpha)) * v.coeffs)


def position_kernel(j: np.ndarray, power: int) -> np.ndarray:
    """Exact ``(1/2pi) int theta^power e^{i j theta} dtheta`` over [-pi, pi] for integer ``j``."""
    j = np.asarray(j)
    sign = np.where(j % 2 == 0, 1.0, -1.0)
    safe = np.where(j == 0, 1, j)
    if power == 1:
        return np.where(j == 0, 0.0, -1j * sign / safe)
    if power == 2:
        return np.where(j == 0, math.pi**2 / 3.0, 2.0 * sign / safe**2).astype(complex)
    raise ValueError("only powers 1 and 2 are tabulated")


def exact_position_moment(v: ModeVector, power: int) -> float:
    """``<v|Q^power|v>`` for the sawtooth Q, exact within the truncated basis.

    Uses ``<n|Q^p|n'> = position_kernel(n' - n)``; no grid and no seam ambiguity.
    """
    c = v.coeffs
    # auto[j] = sum_n conj(c_n) c_{n+j}, j = -(L-1)..(L-1)
    auto = np.correlate(c, c, mode="full")
    lags = np.arange(-(len(c) - 1), len(c))
    return float(np.real(np.sum(auto * position_kernel(lags, power))))
