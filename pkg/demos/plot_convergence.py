"""
How fast does the envelope ansatz converge?
===========================================

The gap between the Klein-Gordon solution and its NLS ansatz, measured in
L^2 over the window t <= 1/eps^2, shrinks like a power of eps.  The exponent
depends on how smooth the initial envelope is.  This script sweeps eps for a
Gaussian and for a rough profile with a power-law Fourier tail, then fits the
log-log slopes.

Takes about a minute.  ``python demos/plot_convergence.py``
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from envelope_lab.ansatz import ProfileSpec
from envelope_lab.experiments.config import RunConfig
from envelope_lab.experiments.studies import run_linear_convergence, run_main_convergence

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

profiles = {"gaussian": ProfileSpec("gaussian"), "tail s=1.5": ProfileSpec("fourier_tail", s=1.5)}

fig, ax = plt.subplots(figsize=(6, 4.5))
for name, prof in profiles.items():
    rep = run_main_convergence(RunConfig(study="converge-main", profile=prof))
    print(f"{name:12s} L2 slope {rep.slope:.3f} (predicted {rep.predicted:.3f}), "
          f"H1/sqrt(eps) values {[round(v, 4) for v in rep.series['h1']]}")
    ax.loglog(rep.eps, rep.values, "o-", label=f"{name}: slope {rep.slope:.2f}")
ax.set_xlabel("eps")
ax.set_ylabel("max L2 error")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "convergence.png", dpi=120)

###############################################################################
# The same question for the linear flows alone.  Only the symbol mismatch
# between <eps xi> and its quadratic expansion matters here, so the smooth
# profile converges faster than the tail profile.
for name, prof in profiles.items():
    cfg = RunConfig(study="converge-linear", eps_list=(0.25, 0.125, 0.0625, 1 / 32, 1 / 64), profile=prof)
    rep = run_linear_convergence(cfg)
    print(f"{name:12s} linear slope {rep.slope:.3f}")
