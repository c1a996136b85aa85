"""Extrapolating to zero separation and bounding the anharmonicity.

The extraction of the previous demo is repeated for g2 = 0.7 .. 0.9 g_E
and both initial states. Each family's frequencies are fitted against the
separation of the trap minima. The state-|1> families use k1 + k3 dz^2;
the state-|2> families, whose trap moves with g2, use a full quadratic.
The intercepts estimate the harmonic frequency. A negative curvature k3
bounds the cubic and quartic coefficients.

Takes up to a minute. Run with ``python demos/04_fit_and_bounds.py``.
"""

import numpy as np

from mzitrap.dipole import characterize, reference_dipole_config
from mzitrap.pipeline import run_pipeline

res = run_pipeline(workers=4)
for key, fit in res.fits.items():
    k = fit.k
    print(f"{key:36s} k1/2pi = {k['k1'] / (2 * np.pi):.4f} Hz  k2 = {k['k2']:.3e}  k3 = {k['k3']:.3e}")
print(f"mean intercept: {res.intercept_mean / (2 * np.pi):.4f} Hz, "
      f"harmonic value {res.omega_reference / (2 * np.pi):.4f} Hz, "
      f"relative deviation {res.relative_deviation:.2e}")
r = characterize(reference_dipole_config())
b = res.bounds
print(f"|alpha| < {b.alpha_max:.3e} (true {r.alpha:.3e}),  |beta| < {b.beta_max:.3e} (true {r.beta:.3e})")
print("true values inside the bounds:", b.contains(r.alpha, r.beta))
