"""Bond currents: conservation and the strong-decoherence closed form.

The current from site j to j+1 is defined so that each site's
probability changes exactly by inflow minus outflow.  The script first
verifies that balance numerically for free and dephased evolution, then
shows the strong-decoherence limit, where coherences die instantly and
current only flows where the initial density is inhomogeneous, following
(2 sqrt(3)/3) hop (rho_jj - rho_j+1,j+1) J_1(2 sqrt(3) hop t) on a
3-site ring.
"""

import numpy as np
from scipy.special import jv

from ringbath import (
    DensityMatrix,
    FixedCouplings,
    GaussianEnsemble,
    RingConfig,
    TimeGrid,
    current_free,
    current_reduced,
    density_free,
    density_reduced,
)


def continuity_residual() -> None:
    cfg = RingConfig(n_sites=4, flux=0.9)
    rho_in = DensityMatrix.site_state(4, 1)
    bath = FixedCouplings((0.3, 0.2))
    step = 1e-4
    worst_free = worst_bath = 0.0
    for t in np.linspace(0.5, 10.0, 11):
        stencil = TimeGrid([t - step, t, t + step])
        before, now, after = density_free(cfg, rho_in, stencil)
        dprob = (after.probabilities() - before.probabilities()) / (2.0 * step)
        flows = np.array([current_free(cfg, now, j) for j in range(4)])
        worst_free = max(worst_free, float(np.max(np.abs(dprob - (np.roll(flows, 1) - flows)))))

        before, _, after = density_reduced(cfg, bath, rho_in, stencil)
        dprob = (after.probabilities() - before.probabilities()) / (2.0 * step)
        flows = np.array([current_reduced(cfg, bath, rho_in, j, t) for j in range(4)])
        worst_bath = max(worst_bath, float(np.max(np.abs(dprob - (np.roll(flows, 1) - flows)))))
    print("continuity |dP_j/dt - (inflow - outflow)| on a 4-site ring:")
    print(f"  free evolution: {worst_free:.3e}")
    print(f"  two-spin bath:  {worst_bath:.3e}\n")


def strong_decoherence_current() -> None:
    cfg = RingConfig(n_sites=3, flux=0.7)
    bath = GaussianEnsemble(5.0)
    probs = np.array([0.5, 0.3, 0.2])
    rho_in = DensityMatrix.from_entries(np.diag(probs).astype(complex))
    scale = 2.0 * np.sqrt(3.0) / 3.0
    print("strong decoherence (lambda = 5): current on bond 0 -> 1")
    print(f"  {'hop t':>6}  {'simulated':>10}  {'closed form':>11}")
    for t in np.linspace(0.5, 5.0, 10):
        observed = current_reduced(cfg, bath, rho_in, 0, t)
        expected = scale * cfg.hop * (probs[0] - probs[1]) * jv(1, 2.0 * np.sqrt(3.0) * cfg.hop * t)
        print(f"  {t:6.2f}  {observed:10.6f}  {expected:11.6f}")
    print(
        "\nThe current is flux-blind here and driven purely by the initial"
        "\npopulation imbalance; it rings at the band-edge frequency"
        "\n2 sqrt(3) hop and decays with the Bessel envelope."
    )


def main() -> None:
    continuity_residual()
    strong_decoherence_current()


if __name__ == "__main__":
    main()
