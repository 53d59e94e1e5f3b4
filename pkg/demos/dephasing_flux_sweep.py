"""How spin-bath dephasing erases flux sensitivity.

Only path pairs that differ by whole loops around the ring feel the
flux, and each extra loop also collects N phase kicks on every bath
spin.  The bath average therefore weights the flux-sensitive terms by
the influence function at whole-ring argument, exp(-lambda (N pbar)^2 / 2)
for the Gaussian ensemble, while leaving the flux-blind terms alone.
The script sweeps lambda and prints, side by side, that winding weight
and the largest observable difference between zero and quarter flux:
the two columns collapse together.
"""

import numpy as np

from ringbath import (
    DensityMatrix,
    GaussianEnsemble,
    RingConfig,
    TimeGrid,
    density_reduced,
    influence_phase_factor,
)


def flux_sensitivity(n: int, lam: float, grid: TimeGrid) -> float:
    """Largest |P_j(t)| difference between flux 0 and flux pi/2."""
    rho_in = DensityMatrix.site_state(n, 0)
    bath = GaussianEnsemble(lam)
    stacks = []
    for flux in (0.0, np.pi / 2.0):
        cfg = RingConfig(n_sites=n, flux=flux)
        states = density_reduced(cfg, bath, rho_in, grid)
        stacks.append(np.array([rho.probabilities() for rho in states]))
    return float(np.max(np.abs(stacks[0] - stacks[1])))


def main() -> None:
    n = 3
    grid = TimeGrid(np.linspace(0.0, 20.0, 41))
    print(f"{n}-site ring, particle starts at site 0, times up to hop t = 20\n")
    print(f"{'lambda':>8}  {'F(N)':>10}  {'flux sensitivity':>17}")
    for lam in (0.0, 0.01, 0.05, 0.1, 0.5, 1.0):
        weight = influence_phase_factor(GaussianEnsemble(lam), n).real
        sens = flux_sensitivity(n, lam, grid)
        print(f"{lam:8.2f}  {weight:10.3e}  {sens:17.3e}")
    print(
        "\nF(N) is the weight of the first whole-ring winding pair; once it"
        "\nis negligible, no observable on the ring can tell the flux values"
        "\napart.  The sensitivity falls in step with F(N), and pushing it"
        "\nall the way to 1e-6 takes lambda of a few."
    )


if __name__ == "__main__":
    main()
