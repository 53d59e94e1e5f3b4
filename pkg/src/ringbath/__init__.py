"""Exact dynamics of a charged particle on a flux-threaded tight-binding
ring, dephased by a bath of spins that couple through the link phases.

The package is organized bottom-up:

* :mod:`ringbath.besselsum` -- Bessel evaluation and certified winding-sum
  truncation for the path ladders.
* :mod:`ringbath.ring` -- ring geometry, free propagators (double and
  collapsed single winding sums), site probabilities, bond currents.
* :mod:`ringbath.bath` -- influence functions of fixed-coupling and
  Gaussian-ensemble spin baths.
* :mod:`ringbath.reduced` -- bath-averaged propagators, probabilities,
  long-time asymptotics, and currents.
* :mod:`ringbath.wavepacket` -- two-wave-packet interference, free and
  decohered.
* :mod:`ringbath.oracle` -- brute-force cross-checks (sector average,
  joint-space matrix exponential, Monte Carlo coupling sampler).
* :mod:`ringbath.verification` -- self-check suite behind ``verify``.
* :mod:`ringbath.cli` -- command line front end.
"""

from .bath import (
    BathSpec,
    FixedCouplings,
    GaussianEnsemble,
    InfluenceTable,
    build_influence_table,
    influence_fixed,
    influence_gaussian,
    influence_phase_factor,
    topological_lambda,
)
from .besselsum import (
    BesselOrderRange,
    WindingTruncation,
    bessel_j,
    bessel_j_batch,
    choose_truncation,
    negligible_order,
)
from .reduced import (
    AsymptoticRegimeWarning,
    ReducedPropagator,
    current_reduced,
    density_reduced,
    dephasing_matrix,
    prob_asymptotic_n3,
    prob_reduced,
    propagator_reduced,
    return_amplitude,
)
from .oracle import (
    FullStateVector,
    SectorDecomposition,
    evolve_dense_oracle,
    evolve_full_state,
    evolve_sector_oracle,
    sample_gaussian_ensemble,
    sector_decomposition,
)
from .ring import (
    DEFAULT_TOL,
    DensityMatrix,
    RingConfig,
    SumForm,
    TimeGrid,
    current_free,
    density_free,
    dispersion,
    green_free,
    green_free_winding,
    momentum_occupations,
    momentum_transform,
    prob_free,
    propagator_free,
    propagator_table_free,
)
from .wavepacket import (
    InitialState,
    WavepacketSpec,
    build_state,
    circular_centroid,
    crossing_times,
    packet_occupations,
    packet_width,
    prob_wavepacket_decohered,
    prob_wavepacket_free,
    profile_wavepacket_decohered,
    profile_wavepacket_free,
)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticRegimeWarning",
    "BathSpec",
    "BesselOrderRange",
    "DEFAULT_TOL",
    "DensityMatrix",
    "FixedCouplings",
    "FullStateVector",
    "GaussianEnsemble",
    "InfluenceTable",
    "InitialState",
    "ReducedPropagator",
    "RingConfig",
    "SectorDecomposition",
    "SumForm",
    "TimeGrid",
    "WavepacketSpec",
    "WindingTruncation",
    "bessel_j",
    "bessel_j_batch",
    "build_influence_table",
    "build_state",
    "choose_truncation",
    "circular_centroid",
    "crossing_times",
    "current_free",
    "current_reduced",
    "density_free",
    "density_reduced",
    "dephasing_matrix",
    "dispersion",
    "evolve_dense_oracle",
    "evolve_full_state",
    "evolve_sector_oracle",
    "green_free",
    "green_free_winding",
    "influence_fixed",
    "influence_gaussian",
    "influence_phase_factor",
    "momentum_occupations",
    "momentum_transform",
    "negligible_order",
    "packet_occupations",
    "packet_width",
    "prob_asymptotic_n3",
    "prob_free",
    "prob_reduced",
    "prob_wavepacket_decohered",
    "prob_wavepacket_free",
    "profile_wavepacket_decohered",
    "profile_wavepacket_free",
    "propagator_free",
    "propagator_reduced",
    "propagator_table_free",
    "return_amplitude",
    "sample_gaussian_ensemble",
    "sector_decomposition",
    "topological_lambda",
    "__version__",
]
