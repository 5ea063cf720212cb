"""Wave-packet initial data, profile families and the NLS approximant.

Two grids are used throughout. The slow grid (length L_s) carries NLS and
amplitude profiles; the physical grid has length L_s / eps and the same
number of points or more. A slow mode with index k becomes the physical
mode k + P_phys (P_phys = lattice index of the carrier k = 1), so moving
between the two is an exact re-indexing of Fourier coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .propagators import schrodinger_symbol
from .solvers import KGState, Trajectory, decomplexify, modulate, unscale_state
from .spectral import Field, TorusGrid, lp_symbol, sobolev_norm

SQRT2 = math.sqrt(2.0)
GROUP_VELOCITY = 1.0 / SQRT2
FAMILIES = ("gaussian", "sech", "fourier_tail", "highfreq_contaminated")


@dataclass(frozen=True)
class ProfileSpec:
    """A family of slow profiles, normalised to ``amplitude`` in H_eps^1.

    ``s`` and ``cutoff`` are used by ``fourier_tail`` (and ``s`` is recorded
    for the others); ``contamination`` and ``contamination_factor`` by
    ``highfreq_contaminated``, whose bump sits near
    contamination_factor * eps^(-1/3).
    """

    family: str = "gaussian"
    amplitude: float = 1.0
    width: float = 1.0
    s: float = math.inf
    cutoff: float | None = None
    contamination: float = 0.5
    contamination_factor: float = 2.5
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if not self.amplitude >= 0:
            raise ValueError("amplitude must be nonnegative")
        if not self.width > 0:
            raise ValueError("width must be positive")
        if self.family == "fourier_tail" and not (0 <= self.s < math.inf):
            raise ValueError("fourier_tail needs a finite s >= 0")


@dataclass(frozen=True)
class ErrorFunctionalSpec:
    """Sup-in-time error: ``h1`` divides the H^1 error by sqrt(eps), ``l2`` is plain L^2."""

    norm: str = "l2"
    T: float = 1.0
    samples: int = 64

    def __post_init__(self):
        if self.norm not in ("h1", "l2"):
            raise ValueError(f"norm must be 'h1' or 'l2', got {self.norm!r}")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.samples < 1:
            raise ValueError("samples must be positive")


def _localizing_window(grid: TorusGrid) -> np.ndarray:
    width = grid.length / 16.0
    return np.exp(-0.5 * ((grid.x - 0.5 * grid.length) / width) ** 2)


def tail_cutoff(spec: ProfileSpec, grid: TorusGrid) -> float:
    return spec.cutoff if spec.cutoff is not None else 0.5 * grid.xi_max


def _fourier_tail(spec: ProfileSpec, grid: TorusGrid) -> Field:
    cutoff = tail_cutoff(spec, grid)
    K = int(math.floor(cutoff / grid.dxi))
    if K >= grid.n // 2 - 1:
        raise ValueError(f"tail cutoff {cutoff} is not resolved by {grid}")
    # draw phases mode by mode from -K to K so the profile does not depend on n
    rng = np.random.default_rng(spec.seed)
    phases = np.exp(2j * np.pi * rng.random(2 * K + 1))
    k = np.arange(-K, K + 1)
    xi = k * grid.dxi
    mags = (1.0 + xi * xi) ** (-(spec.s + 0.5 + 0.01) / 2.0)
    coeffs = np.zeros(grid.n, dtype=complex)
    coeffs[k % grid.n] = mags * phases
    raw = Field(grid, spectrum=coeffs)
    return Field(grid, raw.values * _localizing_window(grid))


def contamination_frequency(spec: ProfileSpec, grid: TorusGrid, eps: float) -> float:
    """Lattice frequency closest to contamination_factor * eps^(-1/3)."""
    target = spec.contamination_factor * eps ** (-1.0 / 3.0)
    return round(target / grid.dxi) * grid.dxi


def make_profile(spec: ProfileSpec, grid: TorusGrid, eps: float = 1.0) -> Field:
    """Centred profile with ||psi0||_{H_eps^1} = spec.amplitude."""
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    y = (grid.x - 0.5 * grid.length) / spec.width
    if spec.family == "gaussian":
        f = Field(grid, np.exp(-0.5 * y * y), real=True)
    elif spec.family == "sech":
        f = Field(grid, 1.0 / np.cosh(y), real=True)
    elif spec.family == "fourier_tail":
        f = _fourier_tail(spec, grid)
    else:
        base = np.exp(-0.5 * y * y)
        base = base / sobolev_norm(Field(grid, base), 1.0, eps)
        xi_c = contamination_frequency(spec, grid, eps)
        if xi_c >= grid.xi_max - 8.0 / spec.width:
            raise ValueError(f"contamination frequency {xi_c} is not resolved by {grid}")
        bump = Field(grid, np.exp(-0.5 * (y / 4.0) ** 2) * np.exp(1j * xi_c * grid.x))
        bump = bump.values / sobolev_norm(bump, 1.0, eps)
        f = Field(grid, base + spec.contamination * bump)
    if abs(f.values[0]) > 1e-12 * np.abs(f.values).max():
        raise ValueError("profile is not localized inside the torus; enlarge the grid or shrink the width")
    top = np.abs(f.spectrum[grid.n // 2 - 8: grid.n // 2 + 8]).max()
    if top > 1e-10 * np.abs(f.spectrum).max():
        raise ValueError("profile is not resolved by the grid")
    if spec.amplitude == 0:
        return Field.zeros(grid, real=f.real)
    return f * (spec.amplitude / sobolev_norm(f, 1.0, eps))


def physical_grid_for(slow: TorusGrid, eps: float, n: int | None = None) -> TorusGrid:
    """Physical torus of length L_s / eps; by default n = n_s / eps rounded to a power of two."""
    if n is None:
        n = 1 << math.ceil(math.log2(slow.n / eps - 1e-9))
    return TorusGrid(slow.length / eps, n)


def _check_commensurate(slow: TorusGrid, eps: float, phys: TorusGrid):
    if not math.isclose(phys.length * eps, slow.length, rel_tol=1e-12):
        raise ValueError(f"physical length {phys.length} is not L_s/eps = {slow.length / eps}")
    P = phys.periods
    if not math.isclose(P * eps, round(P * eps), abs_tol=1e-9):
        raise ValueError("slow and physical lattices are incommensurate")


def packet_state(psi_slow: Field, t_phys: float, eps: float, phys_grid: TorusGrid) -> KGState:
    """Physical half-wave state W = eps psi(eps(x - c_g t)) exp(i(x - sqrt2 t))."""
    _check_commensurate(psi_slow.grid, eps, phys_grid)
    slow_big = TorusGrid(psi_slow.grid.length, phys_grid.n)
    return unscale_state(modulate(psi_slow, eps * eps * t_phys, eps, slow_big))


def build_initial_data(psi0_slow: Field, eps: float, phys_grid: TorusGrid) -> tuple[Field, Field]:
    """(u0, u_t0) = (eps psi0(eps x) e^{ix} + c.c., <D>(-i eps psi0(eps x) e^{ix} + c.c.))."""
    return decomplexify(packet_state(psi0_slow, 0.0, eps, phys_grid).W)


def free_schrodinger(psi: Field, t: float) -> Field:
    return Field(psi.grid, spectrum=psi.spectrum * np.exp(-1j * t * schrodinger_symbol(psi.grid.xi)))


def nls_at(traj: Trajectory, s: float, tol: float = 1e-9) -> Field:
    """NLS profile at slow time s: a stored snapshot, or two-point interpolation.

    Between snapshots s0 < s < s1 both neighbours are carried to s by the
    free flow and blended linearly.
    """
    times = traj.times
    span = max(1.0, abs(times[-1]))
    if s < times[0] - tol * span or s > times[-1] + tol * span:
        raise ValueError(f"slow time {s} outside the trajectory range [{times[0]}, {times[-1]}]")
    j = int(np.argmin(np.abs(times - s)))
    if abs(times[j] - s) <= tol * span:
        return traj[j].psi
    i = int(np.searchsorted(times, s)) - 1
    s0, s1 = times[i], times[i + 1]
    w = (s - s0) / (s1 - s0)
    a = free_schrodinger(traj[i].psi, s - s0)
    b = free_schrodinger(traj[i + 1].psi, s - s1)
    return (1.0 - w) * a + w * b


def nls_approximant(nls_traj: Trajectory, t_phys: float, eps: float, phys_grid: TorusGrid) -> Field:
    """eps psi_NLS(eps^2 t, eps(x - c_g t)) e^{i(x - sqrt2 t)} + c.c. on the physical grid."""
    psi = nls_at(nls_traj, eps * eps * t_phys)
    return 2.0 * packet_state(psi, t_phys, eps, phys_grid).W.real_part()


def field_error(u: Field, v: Field, norm: str, eps: float) -> float:
    d = u - v
    if norm == "l2":
        return sobolev_norm(d, 0.0)
    return sobolev_norm(d, 1.0) / math.sqrt(eps)


def approximation_error(kg_traj: Trajectory, nls_traj: Trajectory, eps: float,
                        spec: ErrorFunctionalSpec = ErrorFunctionalSpec()) -> float:
    """max over KG sample times t <= T/eps^2 of ||u(t) - approximant(t)||."""
    t_end = spec.T / eps ** 2
    times = kg_traj.times
    if times[-1] < t_end * (1 - 1e-12):
        raise ValueError(f"Klein-Gordon run ends at {times[-1]}, before T/eps^2 = {t_end}")
    if nls_traj.times[-1] < spec.T * (1 - 1e-12):
        raise ValueError(f"NLS run ends at {nls_traj.times[-1]}, before T = {spec.T}")
    used = [s for s in kg_traj if s.t <= t_end * (1 + 1e-12)]
    if len(used) < min(spec.samples, 2):
        raise ValueError("too few Klein-Gordon samples in the time window")
    worst = 0.0
    for st in used:
        if st.eps is not None:
            raise ValueError("expected physical Klein-Gordon states")
        u = 2.0 * st.W.real_part()
        approx = nls_approximant(nls_traj, st.t, eps, st.W.grid)
        worst = max(worst, field_error(u, approx, spec.norm, eps))
    return worst


def high_tail(psi: Field, N: float) -> float:
    """||1_{|D| > N} psi||_{L^2}."""
    return sobolev_norm(Field(psi.grid, spectrum=lp_symbol(psi.grid.xi, N, "high") * psi.spectrum))


__all__ = [
    "ProfileSpec", "ErrorFunctionalSpec", "FAMILIES", "make_profile", "physical_grid_for",
    "packet_state", "build_initial_data", "free_schrodinger", "nls_at", "nls_approximant",
    "field_error", "approximation_error", "high_tail", "contamination_frequency", "tail_cutoff",
    "GROUP_VELOCITY",
]
