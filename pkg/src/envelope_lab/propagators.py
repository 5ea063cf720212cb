"""Linear flows: rescaled Klein-Gordon, Schroedinger, physical Klein-Gordon, transport.

The rescaled flow S_eps(t) = exp(-i t p_eps(D)) acts on the amplitude of a
wave packet with carrier k = 1 viewed in the frame moving at the group
velocity; as eps -> 0 it approaches the Schroedinger flow with symbol
xi^2 / (4 sqrt 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import Field, TorusGrid, japanese, lp_symbol

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class WavePacketParams:
    """Small parameter and carrier data; k = 1 is fixed by scaling."""

    eps: float
    k: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.eps <= 1.0:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")
        if self.k != 1.0:
            raise ValueError("the carrier wavenumber is fixed at k = 1")

    @property
    def omega(self) -> float:
        return float(japanese(self.k))

    @property
    def group_velocity(self) -> float:
        return self.k / self.omega


def p_symbol(xi, eps: float):
    """p_eps(xi) = eps^-2 (<1 + eps xi> - sqrt2 - eps xi / sqrt2).

    For eps*xi > -1 the difference is rewritten as

        z^2 (2 + z) / (sqrt2 (s + sqrt2) (sqrt2 (1 + z) + s)),   z = eps xi, s = <1 + z>,

    which has no cancellation as z -> 0. Below z = -1 the direct formula is
    used; there the symbol is bounded away from zero.
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    xi = np.asarray(xi, dtype=float)
    z = eps * xi
    s = japanese(1.0 + z)
    with np.errstate(divide="ignore", invalid="ignore"):
        stable = z * z * (2.0 + z) / (SQRT2 * (s + SQRT2) * (SQRT2 * (1.0 + z) + s))
    direct = s - SQRT2 - z / SQRT2
    out = np.where(z > -1.0, stable, direct) / eps ** 2
    return out if out.ndim else float(out)


def schrodinger_symbol(xi):
    """q(xi) = xi^2 / (4 sqrt2)."""
    xi = np.asarray(xi, dtype=float)
    out = xi * xi / (4.0 * SQRT2)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Flow:
    """A diagonal unitary flow exp(-i t symbol(D))."""

    kind: str
    eps: float | None = None
    speed: float = 0.0

    def symbol(self, xi):
        if self.kind == "kg_rescaled":
            return p_symbol(xi, self.eps)
        if self.kind == "schrodinger":
            return schrodinger_symbol(xi)
        if self.kind == "kg_physical":
            return japanese(np.asarray(xi, dtype=float))
        if self.kind == "translation":
            return self.speed * np.asarray(xi, dtype=float)
        raise ValueError(f"unknown flow {self.kind!r}")


def kg_rescaled(eps: float) -> Flow:
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    return Flow("kg_rescaled", eps=eps)


def schrodinger() -> Flow:
    return Flow("schrodinger")


def kg_physical() -> Flow:
    return Flow("kg_physical")


def translation(speed: float) -> Flow:
    """Rigid transport exp(-i t speed D): f(x) -> f(x - speed * t)."""
    return Flow("translation", speed=float(speed))


def evolve_linear(f: Field, t: float, flow: Flow) -> Field:
    if not np.isfinite(t):
        raise ValueError(f"time must be finite, got {t}")
    phase = np.exp(-1j * t * flow.symbol(f.grid.xi))
    return Field(f.grid, spectrum=phase * f.spectrum)


def linear_deviation(u0: Field, eps: float, t_window: float = 1.0, samples: int = 257) -> float:
    """max over t in [0, t_window] of ||S_eps(t) u0 - exp(i t/(4 sqrt2) d_x^2) u0||_{L^2}.

    Both flows are diagonal, so the deviation at time t is
    sqrt(L sum_j 4 sin^2(t d_j / 2) |u0_hat_j|^2) with d = p_eps - q.
    """
    if not t_window > 0:
        raise ValueError("t_window must be positive")
    if samples < 2:
        raise ValueError("need at least two time samples")
    xi = u0.grid.xi
    d = p_symbol(xi, eps) - schrodinger_symbol(xi)
    w = np.abs(u0.spectrum) ** 2
    keep = w > 0
    d, w = d[keep], w[keep]
    best = 0.0
    for chunk in np.array_split(np.linspace(0.0, t_window, samples), max(1, samples // 64)):
        s = np.sin(0.5 * np.outer(chunk, d))
        vals = 4.0 * (s * s) @ w
        best = max(best, float(vals.max()))
    return math.sqrt(u0.grid.length * best)


# Dispersive decay ----------------------------------------------------------

class WrapAroundError(ValueError):
    """The dispersed wave reached the far side of the torus."""

    def __init__(self, time: float, fraction: float):
        super().__init__(f"wrap-around at t = {time:g}: {fraction:.3g} of the mass is near the boundary")
        self.time = time
        self.fraction = fraction


def group_velocity_range(eps: float, lo: float, hi: float, samples: int = 2001):
    """Range of p_eps'(xi) for xi in [lo, hi]."""
    xi = np.linspace(lo, hi, samples)
    z = eps * xi
    v = ((1.0 + z) / japanese(1.0 + z) - 1.0 / SQRT2) / eps
    return float(v.min()), float(v.max())


def decay_grid(N: float, eps: float, t_max: float) -> tuple[TorusGrid, float]:
    """Torus and source position large enough for the decay probe up to ``t_max``.

    Returns the grid and the initial centre of the bump.
    """
    lo, hi = -3.5 * N, 3.5 * N
    vmin, vmax = group_velocity_range(eps, lo, hi)
    vmin, vmax = min(vmin, 0.0), max(vmax, 0.0)
    spread = (vmax - vmin) * t_max
    # keep the whole dispersed packet inside the central half of the torus
    needed = 2.0 * spread + 400.0 / N
    periods = 1 << max(0, math.ceil(math.log2(needed / (2 * np.pi))))
    length = 2 * np.pi * periods
    n = 1 << max(4, math.ceil(math.log2(2.0 * 8 * N * 1.25 * length / (2 * np.pi))))
    x0 = 0.5 * length - 0.5 * (vmin + vmax) * t_max
    return TorusGrid(length, n), x0


def near_delta(grid: TorusGrid, N: float, x0: float = 0.0) -> Field:
    """Unit-mass bump centred at x0 whose spectrum is flat on |xi| <= 8N."""
    c = np.where(np.abs(grid.xi) <= 8 * N, 1.0 / grid.length, 0.0) * np.exp(-1j * grid.xi * x0)
    return Field(grid, spectrum=c, real=True)


def decay_probe(N: float, eps: float, times, grid: TorusGrid | None = None, x0: float | None = None,
                boundary_tol: float = 1e-6) -> np.ndarray:
    """||S_eps(t) P_N u0||_{L^inf} at each requested time.

    ``u0`` is the band-limited near-delta of :func:`near_delta` and ``P_N``
    the smooth dyadic projection. Raises :class:`WrapAroundError` if more
    than ``boundary_tol`` of the mass sits in the quarter of the torus
    opposite the source.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise ValueError("times must be positive and increasing")
    if grid is None:
        grid, auto_x0 = decay_grid(N, eps, float(times[-1]))
        x0 = auto_x0 if x0 is None else x0
    elif x0 is None:
        x0 = 0.5 * grid.length
    u0 = near_delta(grid, N, x0)
    proj = lp_symbol(grid.xi, N, "band", sharp=False) * u0.spectrum
    p = p_symbol(grid.xi, eps)
    # distance from the source measured around the torus
    dist = np.abs((grid.x - x0 + 0.5 * grid.length) % grid.length - 0.5 * grid.length)
    far = dist > 0.375 * grid.length
    out = np.empty(times.size)
    for i, t in enumerate(times):
        vals = np.fft.ifft(np.exp(-1j * t * p) * proj) * grid.n
        mass = np.abs(vals) ** 2
        frac = mass[far].sum() / mass.sum()
        if frac > boundary_tol:
            raise WrapAroundError(float(t), float(frac))
        out[i] = np.abs(vals).max()
    return out


def symbol_consistency_constant(eps_list, xi_max: float = 8.0, samples: int = 801) -> float:
    """Smallest C with |p_eps(xi) - q(xi)| <= C eps |xi|^3 over the sampled grid."""
    xi = np.linspace(-xi_max, xi_max, samples)
    xi = xi[xi != 0]
    return max(float(np.max(np.abs(p_symbol(xi, e) - schrodinger_symbol(xi)) / (e * np.abs(xi) ** 3)))
               for e in eps_list)


__all__ = [
    "WavePacketParams", "p_symbol", "schrodinger_symbol", "Flow", "kg_rescaled", "schrodinger",
    "kg_physical", "translation", "evolve_linear", "linear_deviation", "decay_probe", "decay_grid",
    "near_delta", "WrapAroundError", "group_velocity_range", "symbol_consistency_constant",
]
