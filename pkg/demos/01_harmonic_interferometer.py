"""Interferometer signal of two state-dependent harmonic traps.

State |1> sits in a 100 Hz trap, state |2> in a 100/sqrt(2) Hz trap, and a
weak force (0.1 g_E) displaces both minima. A pi/2 - pi - pi/2 sequence
splits the packet between the traps. Whenever the pulse separation T is a
multiple of one trap's period the two arms overlap again and the signal
shows a resonance. The phase slope at those resonances is almost entirely
the centre-of-mass term, which sets the sensitivity to the trap frequency.

Run with ``python demos/01_harmonic_interferometer.py``.
"""

import numpy as np

from mzitrap.mzi import MziConfig, find_crossing, scan, sensitivity, signal_1d, slope_cm_for
from mzitrap.trapmodel import detuning_delta, table1_pair

pair = table1_pair(0.1)
T1 = pair.trap1.axis("z").period
T2 = pair.trap2.axis("z").period
print(f"trap periods: T1 = {T1 * 1e3:.4f} ms, T2 = {T2 * 1e3:.4f} ms")

# resonances: full revival at multiples of T1, half population at multiples of T2
plain = MziConfig(pair, initial_state=2, delta_phi=0.0)
quarter = MziConfig(pair, initial_state=2, delta_phi=np.pi / 2)
for n in (1, 2, 3):
    print(f"n={n}: P2(n T1, dphi=0) = {signal_1d(n * T1, plain):.12f}   "
          f"P2(n T2, dphi=pi/2) = {signal_1d(n * T2, quarter):.12f}")

# between resonances the arms no longer overlap and P2 sits at 1/2
T = np.linspace(0.003e-3, 30e-3, 10001)
series = scan(plain, T, dims=1)
flat = series.P2[(T > 4e-3) & (T < 8e-3)]
print(f"max |P2 - 0.5| on (4, 8) ms: {np.max(np.abs(flat - 0.5)):.2e}")

# sensitivity at the fifth T2 resonance with 5e5 atoms
s = slope_cm_for(quarter, 5)
print(f"phase slope at 5 T2: {s:.1f} rad/s;  d(omega2)/omega2 = {sensitivity(s, 5, T2, 5e5):.2e}")

# in 3D the transversal breathing adds a force-independent phase; comparing two
# forces removes it, and their signals cross exactly at 5 T2
Tc = np.linspace(49e-3, 51e-3, 401)
a = scan(MziConfig(table1_pair(0.1), 2, np.pi / 2), Tc, dims=3)
b = scan(MziConfig(table1_pair(0.15), 2, np.pi / 2), Tc, dims=3)
t_cross = find_crossing(a, b, (Tc[0], Tc[-1]))
print(f"3D crossing at {t_cross * 1e3:.9f} ms (5 T2 = {5 * T2 * 1e3:.9f} ms)")

# finite Rabi pulses only behave when the position-dependent detuning is small
Om = 2 * np.pi * 25e3
for g in (0.1, 1.0):
    print(f"g = {g:>3} g_E: delta / Omega = {detuning_delta(table1_pair(g)) / Om:.3f}")
