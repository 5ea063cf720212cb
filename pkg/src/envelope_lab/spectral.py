"""Periodic grids, Fourier multipliers, projections, norms and energies.

Spectral coefficients follow the convention

    u_hat[j] = (1/n) * sum_m u(x_m) exp(-i xi_j x_m),

so that a single Fourier mode ``exp(i xi_j x)`` has coefficient exactly one.
Arrays are kept in FFT order (``numpy.fft.fftfreq``), i.e. the retained
signed mode indices are ``0, 1, ..., n/2 - 1, -n/2, ..., -1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence, Union

import numpy as np
import scipy.fft as sfft

TWO_PI = 2.0 * np.pi

Symbol = Union[Callable[[np.ndarray], np.ndarray], np.ndarray, float, complex]


def japanese(x):
    """Japanese bracket <x> = sqrt(1 + x^2)."""
    return np.sqrt(1.0 + np.square(x))


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid on [0, length) with ``n`` collocation points.

    ``length`` must be an integer multiple of 2*pi so that every integer
    frequency (in particular the carrier k = 1) is a lattice frequency.
    """

    length: float
    n: int

    def __post_init__(self):
        if self.n < 16 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 16, got {self.n}")
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length}")
        periods = self.length / TWO_PI
        if abs(periods - round(periods)) > 1e-9 * max(1.0, periods) or round(periods) < 1:
            raise ValueError(f"length must be 2*pi*P for a positive integer P, got {self.length}")

    @classmethod
    def from_periods(cls, periods: int, n: int) -> "TorusGrid":
        return cls(TWO_PI * periods, n)

    @property
    def periods(self) -> int:
        """P such that length = 2*pi*P; also the lattice index of xi = 1."""
        return int(round(self.length / TWO_PI))

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def dxi(self) -> float:
        return TWO_PI / self.length

    @cached_property
    def x(self) -> np.ndarray:
        x = np.arange(self.n) * self.dx
        x.setflags(write=False)
        return x

    @cached_property
    def modes(self) -> np.ndarray:
        """Signed integer mode indices in FFT order."""
        k = np.fft.fftfreq(self.n, 1.0 / self.n).astype(np.int64)
        k.setflags(write=False)
        return k

    @cached_property
    def xi(self) -> np.ndarray:
        xi = self.modes * self.dxi
        xi.setflags(write=False)
        return xi

    @property
    def xi_max(self) -> float:
        """Largest retained positive frequency."""
        return (self.n // 2 - 1) * self.dxi

    def lattice_index(self, freq: float) -> int:
        """Signed mode index of ``freq``; raises if it is not on the lattice."""
        k = freq / self.dxi
        if abs(k - round(k)) > 1e-9 * max(1.0, abs(k)):
            raise ValueError(f"frequency {freq} is not a lattice frequency of {self}")
        return int(round(k))


def to_spectrum(values: np.ndarray) -> np.ndarray:
    return sfft.fft(values) / values.shape[-1]


def to_physical(coeffs: np.ndarray) -> np.ndarray:
    return sfft.ifft(coeffs) * coeffs.shape[-1]


class Field:
    """Complex samples of a function on a :class:`TorusGrid`.

    A Field is immutable. Either the physical samples or the spectrum may be
    supplied; the other view is computed on first access. ``real=True``
    marks real-valued functions; their physical view is returned as a float
    array.
    """

    __slots__ = ("grid", "real", "_values", "_spectrum")

    def __init__(self, grid: TorusGrid, values=None, *, spectrum=None, real: bool = False):
        if (values is None) == (spectrum is None):
            raise ValueError("pass exactly one of values or spectrum")
        self.grid = grid
        self.real = bool(real)
        self._values = None
        self._spectrum = None
        if values is not None:
            arr = np.array(values, dtype=float if real else complex)
            if arr.shape != (grid.n,):
                raise ValueError(f"expected {grid.n} samples, got shape {arr.shape}")
            if real and not np.isrealobj(values) and np.any(np.imag(values)):
                raise ValueError("real Field given complex samples")
            arr.setflags(write=False)
            self._values = arr
        else:
            arr = np.array(spectrum, dtype=complex)
            if arr.shape != (grid.n,):
                raise ValueError(f"expected {grid.n} coefficients, got shape {arr.shape}")
            arr.setflags(write=False)
            self._spectrum = arr

    @classmethod
    def from_function(cls, grid: TorusGrid, func, real: bool = False) -> "Field":
        return cls(grid, func(grid.x), real=real)

    @classmethod
    def zeros(cls, grid: TorusGrid, real: bool = False) -> "Field":
        return cls(grid, np.zeros(grid.n), real=real)

    @classmethod
    def mode(cls, grid: TorusGrid, freq: float, amplitude: complex = 1.0) -> "Field":
        """The single Fourier mode ``amplitude * exp(i freq x)``."""
        c = np.zeros(grid.n, dtype=complex)
        c[grid.lattice_index(freq) % grid.n] = amplitude
        return cls(grid, spectrum=c)

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            v = to_physical(self._spectrum)
            if self.real:
                v = v.real.copy()
            v.setflags(write=False)
            self._values = v
        return self._values

    @property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            c = to_spectrum(self._values)
            c.setflags(write=False)
            self._spectrum = c
        return self._spectrum

    def with_spectrum(self, coeffs, real: bool | None = None) -> "Field":
        return Field(self.grid, spectrum=coeffs, real=self.real if real is None else real)

    def conj(self) -> "Field":
        return Field(self.grid, np.conj(self.values), real=self.real)

    def real_part(self) -> "Field":
        return Field(self.grid, np.real(self.values), real=True)

    def _check(self, other: "Field"):
        if other.grid != self.grid:
            raise ValueError(f"grid mismatch: {self.grid} vs {other.grid}")

    def __add__(self, other):
        if isinstance(other, Field):
            self._check(other)
            real = self.real and other.real
            if self._spectrum is not None and other._spectrum is not None:
                return Field(self.grid, spectrum=self._spectrum + other._spectrum, real=real)
            return Field(self.grid, self.values + other.values, real=real)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Field):
            return self + (-1.0) * other
        return NotImplemented

    def __mul__(self, scalar):
        if isinstance(scalar, Field):
            return NotImplemented
        real = self.real and np.isrealobj(scalar)
        if self._spectrum is not None:
            return Field(self.grid, spectrum=self._spectrum * scalar, real=real)
        return Field(self.grid, self.values * scalar, real=real)

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def __repr__(self):
        return f"Field(grid={self.grid}, real={self.real})"


def resample(f: Field, n: int) -> Field:
    """Spectral zero-padding or truncation of ``f`` to ``n`` points on the same torus."""
    grid = TorusGrid(f.grid.length, n)
    return Field(grid, spectrum=change_size(f.spectrum, n), real=f.real)


def change_size(coeffs: np.ndarray, m: int) -> np.ndarray:
    """Re-embed FFT-ordered coefficients into an array of length ``m``.

    Modes that do not fit are dropped; new modes are zero.
    """
    n = coeffs.shape[-1]
    out = np.zeros(coeffs.shape[:-1] + (m,), dtype=complex)
    h = min(n, m) // 2
    out[..., :h] = coeffs[..., :h]
    out[..., m - h:] = coeffs[..., n - h:]
    return out


# Fourier multipliers -------------------------------------------------------

def _symbol_values(symbol: Symbol, xi: np.ndarray) -> np.ndarray:
    if callable(symbol):
        vals = np.asarray(symbol(xi))
    else:
        vals = np.asarray(symbol)
    return np.broadcast_to(vals, xi.shape)


def apply_multiplier(f: Field, symbol: Symbol) -> Field:
    """Return the field with spectrum ``symbol(xi_j) * f_hat[j]``."""
    vals = _symbol_values(symbol, f.grid.xi)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        j = int(np.flatnonzero(bad)[0])
        raise ValueError(f"symbol is not finite at xi = {float(f.grid.xi[j])!r}")
    real = f.real and np.isrealobj(vals) and _is_even(vals, f.grid)
    return Field(f.grid, spectrum=vals * f.spectrum, real=real)


def _is_even(vals: np.ndarray, grid: TorusGrid) -> bool:
    neg = (-grid.modes) % grid.n
    return bool(np.array_equal(vals[1:], vals[neg][1:]))


# Littlewood-Paley pieces ---------------------------------------------------

def _smoothstep(t):
    # C^2 quintic ramp from 0 (t <= 0) to 1 (t >= 1)
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


_PHI_FLAT = 1.0
_PHI_EDGE = 1.75


def lp_phi(xi):
    """Radial cutoff: 1 on |xi| <= 1, 0 on |xi| >= 7/4, C^2 in between."""
    a = np.abs(xi)
    return 1.0 - _smoothstep((a - _PHI_FLAT) / (_PHI_EDGE - _PHI_FLAT))


def lp_chi(xi):
    """Dyadic bump chi(xi) = phi(xi/2) - phi(xi).

    Supported in 1 <= |xi| <= 7/2, identically 1 on 7/4 <= |xi| <= 2, and
    sum over N in 2^Z of chi(xi/N) telescopes to 1 for xi != 0.
    """
    return lp_phi(np.asarray(xi) / 2.0) - lp_phi(xi)


LP_MODES = ("band", "low", "high")


def lp_symbol(xi, N: float, mode: str, sharp: bool = True):
    """Multiplier of the projection selected by ``mode`` at scale ``N``."""
    if not N > 0:
        raise ValueError(f"N must be positive, got {N}")
    if mode not in LP_MODES:
        raise ValueError(f"mode must be one of {LP_MODES}, got {mode!r}")
    a = np.abs(np.asarray(xi, dtype=float))
    if sharp:
        if mode == "high":
            return (a > N).astype(float)
        if mode == "low":
            return (a <= N).astype(float)
        return ((a >= N) & (a < 2 * N)).astype(float)
    if mode == "band":
        return lp_chi(a / N)
    # smooth P_{>N} = sum_{M > N/2} P_M and P_{<=N} = identity - P_{>N}
    M0 = 2.0 ** (math.floor(math.log2(N / 2.0)) + 1)
    high = 1.0 - lp_phi(a / M0)
    return high if mode == "high" else 1.0 - high


def lp_project(f: Field, N: float, mode: str = "high", sharp: bool = True) -> Field:
    """Frequency projection of ``f``.

    ``mode`` is ``"band"`` (|xi| ~ N), ``"low"`` (|xi| <= N) or ``"high"``
    (|xi| > N). The sharp variants are indicator functions, the high one
    being exactly ``1_{|xi| > N}``; the smooth ones are built from
    :func:`lp_chi`.
    """
    return apply_multiplier(f, lp_symbol(f.grid.xi, N, mode, sharp))


def m_symbol(xi, N: float):
    """m_N(xi) = min(|xi| / N, 1)."""
    if not N > 0:
        raise ValueError(f"N must be positive, got {N}")
    return np.minimum(np.abs(xi) / N, 1.0)


def m_multiplier(f: Field, N: float) -> Field:
    return apply_multiplier(f, m_symbol(f.grid.xi, N))


# Norms ---------------------------------------------------------------------

@dataclass(frozen=True)
class NormSpec:
    """Which norm to take: rescaled Sobolev ``H_eps^s`` or Lebesgue ``L^r``."""

    s: float = 0.0
    eps: float = 1.0
    flavor: str = "sobolev"
    r: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.eps <= 1.0:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")
        if self.flavor not in ("sobolev", "lebesgue"):
            raise ValueError(f"unknown norm flavor {self.flavor!r}")
        if self.flavor == "lebesgue" and not self.r >= 1.0:
            raise ValueError(f"Lebesgue exponent must be >= 1, got {self.r}")


def sobolev_norm(f: Field, s: float = 0.0, eps: float = 1.0) -> float:
    """||<eps D>^s f||_{L^2}, computed from the spectrum."""
    w = japanese(eps * f.grid.xi) ** (2.0 * s) if s else 1.0
    return float(np.sqrt(f.grid.length * np.sum(w * np.abs(f.spectrum) ** 2)))


def lebesgue_norm(f: Field, r: float = 2.0) -> float:
    """Rectangle-rule L^r norm; spectrally accurate for smooth periodic data."""
    a = np.abs(f.values)
    if np.isinf(r):
        return float(a.max())
    return float((np.sum(a ** r) * f.grid.dx) ** (1.0 / r))


def norm(f: Field, spec: NormSpec = NormSpec()) -> float:
    if not np.all(np.isfinite(f.spectrum if f._values is None else f.values)):
        raise ValueError("field has non-finite entries")
    if spec.flavor == "sobolev":
        return sobolev_norm(f, spec.s, spec.eps)
    return lebesgue_norm(f, spec.r)


def w_norm(f: Field, s: float, r: float, eps: float = 1.0) -> float:
    """||<eps D>^s f||_{L^r}."""
    return lebesgue_norm(apply_multiplier(f, japanese(eps * f.grid.xi) ** s), r)


# Dealiased products --------------------------------------------------------

def padded_size(n: int, extra: int = 0) -> int:
    """FFT length that holds all cubic products of n retained modes alias-free.

    Products of three fields (conjugated or not) occupy |k| <= 3n/2; with a
    further frequency shift of up to ``extra`` modes the retained window
    stays clean once the padded length exceeds 2n + extra.
    """
    return sfft.next_fast_len(2 * n + extra + 2)


def cubic_coeffs(a, b, c, conj=(False, False, False), pad: int | None = None):
    """Dealiased coefficients of the product a*b*c (with optional conjugations)."""
    n = a.shape[-1]
    M = pad or padded_size(n)
    vals = []
    for arr, cj in zip((a, b, c), conj):
        v = sfft.ifft(change_size(arr, M)) * M
        vals.append(np.conj(v) if cj else v)
    prod = vals[0] * vals[1] * vals[2]
    return change_size(sfft.fft(prod) / M, n)


def dealiased_cubic(f: Field, g: Field, h: Field, conj: Sequence[bool] = (False, False, False)) -> Field:
    """Exact (alias-free) truncation of the pointwise product f*g*h.

    ``conj`` selects which factors are complex-conjugated.
    """
    f._check(g)
    f._check(h)
    coeffs = cubic_coeffs(f.spectrum, g.spectrum, h.spectrum, tuple(conj))
    real = f.real and g.real and h.real
    if real:
        coeffs = _hermitian(coeffs)
    return Field(f.grid, spectrum=coeffs, real=real)


def _hermitian(c):
    # enforce c[-k] = conj(c[k]); the unpaired Nyquist mode is made real
    n = c.shape[-1]
    neg = (-np.arange(n)) % n
    return 0.5 * (c + np.conj(c[neg]))


def derivative(f: Field, order: int = 1) -> Field:
    return apply_multiplier(f, (1j * f.grid.xi) ** order)


# Energies ------------------------------------------------------------------

def _require_real(*fields: Field):
    for f in fields:
        if not f.real:
            raise ValueError("energy functionals take real-valued fields")


def energy_physical(u: Field, u_t: Field) -> float:
    """1/2 (||u_x||^2 + ||u_t||^2 + ||u||^2) + 1/4 ||u||_{L^4}^4."""
    _require_real(u, u_t)
    L = u.grid.length
    uh = np.abs(u.spectrum) ** 2
    grad = L * np.sum(u.grid.xi ** 2 * uh)
    mass = L * np.sum(uh)
    kin = L * np.sum(np.abs(u_t.spectrum) ** 2)
    return float(0.5 * (grad + kin + mass) + 0.25 * lebesgue_norm(u, 4) ** 4)


def energy_rescaled(v: Field, v_t: Field, eps: float) -> float:
    """eps^2/2 ||v_x||^2 + 1/2 ||v||^2 + eps^4/2 ||v_t||^2 + eps^2/4 ||v||_{L^4}^4."""
    _require_real(v, v_t)
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    L = v.grid.length
    vh = np.abs(v.spectrum) ** 2
    grad = L * np.sum(v.grid.xi ** 2 * vh)
    mass = L * np.sum(vh)
    kin = L * np.sum(np.abs(v_t.spectrum) ** 2)
    quartic = lebesgue_norm(v, 4) ** 4
    return float(0.5 * eps ** 2 * grad + 0.5 * mass + 0.5 * eps ** 4 * kin + 0.25 * eps ** 2 * quartic)
