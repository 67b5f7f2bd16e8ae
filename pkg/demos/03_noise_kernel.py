"""The qubit's noise is a two-dimensional Gaussian in disguise.

The effective noise pair (lambda_q, lambda_p) has a two-time covariance
kernel with a stationary part, weighted by (1-p)^2 + p^2, and a
non-stationary tau+tau' part, weighted by 2p(1-p), that exists only for
superposition states.  Because the kernel is analytically rank <= 2, exact
sampling needs just two Gaussians per trajectory.  This script draws 1e5
realisations per state and compares the empirical covariance against the
closed-form kernel, then shows the rank collapse at the equator.
"""

import numpy as np

from qubitkick import QubitState, kernel_rank_check
from qubitkick.noise import empirical_covariance_from_zetas, kernel_block_matrix, sample_zetas

grid = np.linspace(0.0, 4 * np.pi, 33)

for p, phi in ((0.0, 0.0), (0.3, 1.0), (0.5, 0.0)):
    state = QubitState(p, phi)
    zetas = sample_zetas(state, seed=2024, indices=range(100_000))
    emp = empirical_covariance_from_zetas(zetas, grid)
    kern = kernel_block_matrix(grid, state)
    info = kernel_rank_check(np.linspace(0, 4 * np.pi, 64), state)
    print(f"state (p={p}, phi={phi}):")
    print(f"   max |empirical - kernel|   = {np.max(np.abs(emp - kern)):.4f}  (1e5 draws)")
    print(f"   discretised kernel rank    = {info['rank']}")
    print(f"   smallest eigenvalue        = {info['min_eigenvalue']:.2e}")
    k = 2 * p * (1 - p)
    print(f"   non-stationary weight 2p(1-p) = {k:.2f}"
          + ("   <- vanishes: stationary noise only" if k == 0 else ""))
    print()

print("Pole states (p = 0 or 1) have purely stationary noise; the tau+tau'")
print("component switches on exactly when the qubit is in a superposition.")
