"""Quadrature of the resonance kernel integrals I^+ and I^-.

    I^pm(tau, xi) = double integral over |xi1|, |xi2|, |xi - xi1 - xi2| <= a of
                    <tau + eps^-2 (pm <1 + eps xi1> + <1 + eps xi2> + <1 + eps (xi - xi1 - xi2)>)>^(-2(1 - eta))

with a = 1/(50 eps). The region is a hexagon; for fixed outer variable the
inner one runs over [max(-a, xi - x - a), min(a, xi - x + a)], which has a
kink at x = xi, so the outer interval is split there.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class KernelSample:
    eps: float
    eta: float
    sign: int
    tau: float
    xi: float
    value: float
    bound: float
    ratio: float
    converged: bool
    panels: int
    alt_value: float

    def to_dict(self):
        return asdict(self)


def _bracket(x):
    return np.sqrt(1.0 + x * x)


def kernel_integrand(xi1, xi2, tau, xi, eps, eta, sign):
    y = tau + (sign * _bracket(1.0 + eps * xi1) + _bracket(1.0 + eps * xi2)
               + _bracket(1.0 + eps * (xi - xi1 - xi2))) / eps ** 2
    return (1.0 + y * y) ** (-(1.0 - eta))


def _gl_nodes(lo, hi, panels, nodes, base):
    """Composite Gauss-Legendre nodes and weights on [lo, hi] (arrays broadcast)."""
    x0, w0 = base
    edges = np.linspace(0.0, 1.0, panels + 1)
    h = np.diff(edges)
    t = (edges[:-1, None] + 0.5 * h[:, None] * (x0 + 1.0)).ravel()
    w = (0.5 * h[:, None] * w0).ravel()
    lo = np.asarray(lo)[..., None]
    hi = np.asarray(hi)[..., None]
    return lo + (hi - lo) * t, (hi - lo) * w


def _integrate(tau, xi, eps, eta, sign, panels, nodes, swap):
    a = 1.0 / (50.0 * eps)
    base = np.polynomial.legendre.leggauss(nodes)
    lo, hi = max(-a, xi - 2 * a), min(a, xi + 2 * a)
    if lo >= hi:
        return 0.0
    pieces = [(lo, hi)] if not lo < xi < hi else [(lo, xi), (xi, hi)]
    total = 0.0
    for p_lo, p_hi in pieces:
        X, WX = _gl_nodes(p_lo, p_hi, panels, nodes, base)
        ilo = np.maximum(-a, xi - X - a)
        ihi = np.minimum(a, xi - X + a)
        Y, WY = _gl_nodes(ilo, ihi, panels, nodes, base)
        Xb = X[:, None]
        f = kernel_integrand(Y, Xb, tau, xi, eps, eta, sign) if swap else \
            kernel_integrand(Xb, Y, tau, xi, eps, eta, sign)
        total += float(np.sum(WX * np.sum(WY * f, axis=1)))
    return total


def kernel_integral(tau, xi, eps, eta, sign, tol=1e-4, nodes=8, start=2, max_panels=256, swap=False):
    """Adaptive composite quadrature; returns (value, converged, panels).

    The panel count doubles until two successive values agree to ``tol``
    relative. ``swap`` integrates in the other order (xi2 outer).
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    panels = start
    prev = _integrate(tau, xi, eps, eta, sign, panels, nodes, swap)
    while panels < max_panels:
        panels *= 2
        cur = _integrate(tau, xi, eps, eta, sign, panels, nodes, swap)
        if abs(cur - prev) <= tol * abs(cur):
            return cur, True, panels
        prev = cur
    return prev, False, panels


def resonance_offset(sign: int) -> float:
    """2 sqrt2 + sqrt2 for I^+, 2 sqrt2 - sqrt2 for I^-."""
    return 2 * SQRT2 + sign * SQRT2


def kernel_bound(tau, eps, eta, sign):
    c = resonance_offset(sign)
    vals = [(1.0 + (tau + (c + d) / eps ** 2) ** 2) ** (-(1.0 - 2.0 * eta) / 2.0) for d in (0.1, -0.1)]
    return max(vals)


def sample_grid(eps, sign, points=17):
    """17 x 17 (by default) uniform samples around the resonance."""
    centre = -resonance_offset(sign) / eps ** 2
    taus = np.linspace(centre - 4.0 / eps ** 2, centre + 4.0 / eps ** 2, points)
    xis = np.linspace(-3.0 / (50.0 * eps), 3.0 / (50.0 * eps), points)
    return taus, xis


def kernel_samples(eps, eta, sign, points=17, tol=1e-4, max_panels=256):
    if not 0 < eta < 0.25:
        raise ValueError(f"eta must lie in (0, 0.25), got {eta}")
    taus, xis = sample_grid(eps, sign, points)
    out = []
    for tau in taus:
        for xi in xis:
            val, ok, panels = kernel_integral(tau, xi, eps, eta, sign, tol, max_panels=max_panels)
            alt, ok2, _ = kernel_integral(tau, xi, eps, eta, sign, tol, max_panels=max_panels, swap=True)
            agree = abs(val - alt) <= 10 * tol * max(abs(val), 1e-300)
            bound = kernel_bound(tau, eps, eta, sign)
            out.append(KernelSample(eps, eta, sign, float(tau), float(xi), val, bound, val / bound,
                                    bool(ok and ok2 and agree), panels, alt))
    return out
