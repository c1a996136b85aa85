"""Recovering trap frequencies from a simulated dipole-trap interferogram.

The axial motion is propagated exactly on a grid while the transversal
axes are handled analytically. The scan starts in |2>, with state |2>
feeling 0.8 g_E. Its resonances come in two families: quasi-Gaussian
peaks that recur with the state-|1> period and oscillating ones that
recur with the state-|2> period. The scan is split at the predicted
resonance centres. Normalized cross-correlation between resonances of one
family gives the recurrence delay, and hence the frequency.

Takes about ten seconds. Run with ``python demos/03_frequency_extraction.py``.
"""

import numpy as np

from mzitrap.extraction import OSCILLATING, QUASI_GAUSSIAN
from mzitrap.pipeline import analyse_configuration

an = analyse_configuration(0.8, initial_state=2)
setup = an.setup
print(f"separation of the minima: {setup.separation * 1e6:.3f} um")
print(f"scan: {an.series.T[0] * 1e3:.2f} .. {an.series.T[-1] * 1e3:.2f} ms, {an.series.T.size} points")
for kind in (QUASI_GAUSSIAN, OSCILLATING):
    segs = an.segments[kind]
    print(f"{kind}: {len(segs)} resonances at "
          + ", ".join(f"{s.center * 1e3:.2f}" for s in segs) + " ms")
    print(f"  pair delays (ms): " + ", ".join(f"{t * 1e3:.5f}" for t in an.pair_delays[kind]))
for e in an.estimates:
    w = setup.omega_z[int(e.source[-1]) - 1]
    print(f"{e.source}: {e.omega / (2 * np.pi):.3f} Hz (harmonic value {w / (2 * np.pi):.3f} Hz)")
