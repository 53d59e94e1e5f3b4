"""Self-check harness behind the command line ``verify`` subcommand.

Each check exercises one guaranteed property of the simulator (oracle
agreement, sum-form equivalence, conservation laws, closed forms,
asymptotics, Monte-Carlo consistency) and reports the observed deviation
against its tolerance.  The ``quick`` suite contains every check that a
correct build satisfies and finishes in a few seconds; ``full`` adds the
seeded Monte-Carlo cross-check and two documented out-of-regime checks
(the moderate-dephasing flux-independence bound and the short-time
quarter-flux asymptote bound) that fail honestly on this implementation
because the underlying closed forms have not yet converged at the
requested parameters.

The Hermiticity check deliberately evaluates the raw, unsymmetrized
momentum-route product for a spin-polarized bath: that is the one place
where a sign error in the influence function would surface, so perturbing
the influence convention trips this check rather than passing silently.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import jv

from .bath import BathSpec, FixedCouplings, GaussianEnsemble
from .oracle import (
    evolve_dense_oracle,
    evolve_sector_oracle,
    sample_gaussian_ensemble,
)
from .reduced import (
    AsymptoticRegimeWarning,
    current_reduced,
    dephasing_matrix,
    density_reduced,
    prob_asymptotic_n3,
    prob_reduced,
    return_amplitude,
)
from .ring import (
    DensityMatrix,
    RingConfig,
    SumForm,
    TimeGrid,
    current_free,
    density_free,
    momentum_occupations,
    momentum_transform,
)
from .wavepacket import WavepacketSpec, profile_wavepacket_decohered

__all__ = ["CheckResult", "run_suite", "QUICK_CHECKS", "FULL_ONLY_CHECKS"]

DEFAULT_SEED = 20260816


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one verification check.

    ``require`` is 'below' when the observed deviation must stay under the
    tolerance and 'above' when it must exceed it (sensitivity checks that
    guard against trivially saturated comparisons).
    """

    name: str
    tolerance: float
    observed: float
    require: str
    passed: bool
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "tolerance": self.tolerance,
            "observed": self.observed,
            "require": self.require,
            "passed": self.passed,
            "detail": self.detail,
        }


def _result(
    name: str, tolerance: float, observed: float, require: str = "below", detail: str = ""
) -> CheckResult:
    observed = float(observed)
    passed = observed < tolerance if require == "below" else observed > tolerance
    return CheckResult(
        name=name,
        tolerance=float(tolerance),
        observed=observed,
        require=require,
        passed=bool(passed),
        detail=detail,
    )


def _random_pure(rng: np.random.Generator, n: int) -> DensityMatrix:
    vec = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return DensityMatrix.from_pure(vec)


def _max_entry_diff(a: DensityMatrix, b: DensityMatrix) -> float:
    return float(np.max(np.abs(a.entries - b.entries)))


# ---------------------------------------------------------------------------
# Conservation collector
# ---------------------------------------------------------------------------


class _ConservationTracker:
    """Accumulates conservation-law deviations over evolved states."""

    def __init__(self) -> None:
        self.trace_dev = 0.0
        self.herm_dev = 0.0
        self.eig_floor = 0.0
        self.prob_sum_dev = 0.0
        self.occupation_drift = 0.0

    def record(
        self,
        cfg: RingConfig,
        rho_in: DensityMatrix,
        states: list[DensityMatrix],
        bath: BathSpec | None,
    ) -> None:
        occ0 = momentum_occupations(cfg, rho_in)
        for rho in states:
            mat = rho.entries
            self.trace_dev = max(self.trace_dev, abs(mat.trace().real - 1.0))
            self.trace_dev = max(self.trace_dev, abs(mat.trace().imag))
            self.herm_dev = max(self.herm_dev, float(np.max(np.abs(mat - mat.conj().T))))
            self.eig_floor = max(
                self.eig_floor, max(0.0, -float(np.linalg.eigvalsh(mat).min()))
            )
            self.prob_sum_dev = max(
                self.prob_sum_dev, abs(float(np.sum(rho.probabilities())) - 1.0)
            )
            occ = momentum_occupations(cfg, rho)
            self.occupation_drift = max(
                self.occupation_drift, float(np.max(np.abs(occ - occ0)))
            )

    def record_raw(self, cfg: RingConfig, bath: BathSpec, rho_in: DensityMatrix, t: float) -> None:
        """Hermiticity of the unsymmetrized momentum-route product.

        Bypasses the symmetrization that the public evolution applies, so a
        perturbed influence sign convention shows up here as a large
        Hermiticity deviation instead of being folded away.
        """
        n = cfg.n_sites
        lam_mat, _ = dephasing_matrix(cfg, bath, t)
        rho_k = momentum_transform(cfg, rho_in.entries)
        k = cfg.momenta()
        modes = np.exp(1j * np.outer(k, np.arange(n))) / math.sqrt(n)
        raw = modes.conj().T @ (lam_mat * rho_k) @ modes
        self.herm_dev = max(self.herm_dev, float(np.max(np.abs(raw - raw.conj().T))))

    def results(self) -> list[CheckResult]:
        return [
            _result("conservation_trace", 1e-10, self.trace_dev),
            _result("conservation_hermiticity", 1e-10, self.herm_dev),
            _result("conservation_positivity", 1e-10, self.eig_floor),
            _result("conservation_prob_sum", 1e-10, self.prob_sum_dev),
            _result("conservation_momentum_occupations", 1e-9, self.occupation_drift),
        ]


# ---------------------------------------------------------------------------
# Individual checks
# ---------------------------------------------------------------------------


def _check_oracle_equivalence(seed: int, tracker: _ConservationTracker) -> CheckResult:
    rng = np.random.default_rng(seed)
    times = np.linspace(0.0, 20.0, 41)
    grid = TimeGrid(times)
    worst = 0.0
    for n in (3, 4, 5):
        for n_spins in (1, 2, 3):
            alphas = rng.uniform(0.0, 0.5, n_spins)
            bath = FixedCouplings(alphas)
            for flux in (0.0, math.pi / 2.0, 1.234):
                cfg = RingConfig(n_sites=n, hop=1.0, flux=flux)
                for rho_in in (DensityMatrix.site_state(n, 0), _random_pure(rng, n)):
                    states = density_reduced(cfg, bath, rho_in, grid)
                    tracker.record(cfg, rho_in, states, bath)
                    for t, rho in zip(grid, states):
                        ref = evolve_sector_oracle(cfg, bath, rho_in, t)
                        worst = max(worst, _max_entry_diff(rho, ref))
    return _result(
        "oracle_equivalence_sector",
        1e-9,
        worst,
        detail="reduced dynamics vs sector-averaged oracle, N in {3,4,5}",
    )


def _check_oracle_polarized(seed: int, tracker: _ConservationTracker) -> CheckResult:
    """Production dynamics vs sector oracle for a spin-polarized bath.

    Thermal baths have a real influence function, so only a polarized one
    exposes the sign of its imaginary part; a globally conjugated influence
    convention shows up here as a first-order-in-polarization deviation.
    """
    rng = np.random.default_rng(seed + 4)
    cfg = RingConfig(n_sites=4, hop=1.0, flux=1.1)
    bath = FixedCouplings((0.35, 0.2), polarizations=(0.7, -0.4))
    times = np.linspace(0.0, 10.0, 21)
    grid = TimeGrid(times)
    worst = 0.0
    for rho_in in (DensityMatrix.site_state(4, 0), _random_pure(rng, 4)):
        states = density_reduced(cfg, bath, rho_in, grid)
        tracker.record(cfg, rho_in, states, bath)
        for t, rho in zip(grid, states):
            ref = evolve_sector_oracle(cfg, bath, rho_in, t)
            worst = max(worst, _max_entry_diff(rho, ref))
    return _result(
        "oracle_equivalence_polarized",
        1e-9,
        worst,
        detail="reduced dynamics vs sector oracle for a polarized bath, N=4",
    )


def _check_dense_vs_sector(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed + 1)
    times = np.linspace(0.0, 10.0, 21)
    worst = 0.0
    cfg = RingConfig(n_sites=3, hop=1.0, flux=0.8)
    for bath in (
        FixedCouplings(rng.uniform(0.0, 0.5, 2)),
        FixedCouplings((0.35, 0.2), polarizations=(0.6, -0.3)),
    ):
        for rho_in in (DensityMatrix.site_state(3, 1), _random_pure(rng, 3)):
            for t in times:
                dense = evolve_dense_oracle(cfg, bath, rho_in, None, t)
                sector = evolve_sector_oracle(cfg, bath, rho_in, t)
                worst = max(worst, _max_entry_diff(dense, sector))
    return _result(
        "oracle_equivalence_dense",
        1e-10,
        worst,
        detail="dense joint-space oracle vs sector oracle, N=3, two spins",
    )


def _check_free_sum_forms(seed: int, tracker: _ConservationTracker) -> CheckResult:
    rng = np.random.default_rng(seed + 2)
    grid = TimeGrid(np.linspace(0.0, 30.0, 31))
    worst = 0.0
    for n in range(3, 9):
        cfg = RingConfig(n_sites=n, hop=1.0, flux=0.37 * n)
        rho_in = _random_pure(rng, n)
        single = density_free(cfg, rho_in, grid, SumForm("single"))
        double = density_free(cfg, rho_in, grid, SumForm("double"))
        tracker.record(cfg, rho_in, single, None)
        worst = max(
            worst, max(_max_entry_diff(a, b) for a, b in zip(single, double))
        )
    return _result(
        "free_single_vs_double",
        1e-10,
        worst,
        detail="resummed single winding sum vs double sum, N up to 8",
    )


def _flux_spread(lam: float, times: np.ndarray, tracker: _ConservationTracker | None) -> float:
    """Max deviation of every site probability across 16 flux values."""
    bath = GaussianEnsemble(lam)
    fluxes = 2.0 * math.pi * np.arange(16) / 16.0
    probs = np.empty((16, times.size, 3))
    for i, flux in enumerate(fluxes):
        cfg = RingConfig(n_sites=3, hop=1.0, flux=flux)
        rho_in = DensityMatrix.site_state(3, 0)
        if tracker is not None and i in (0, 5):
            states = density_reduced(cfg, bath, rho_in, TimeGrid(times))
            tracker.record(cfg, rho_in, states, bath)
        for it, t in enumerate(times):
            for j in range(3):
                probs[i, it, j] = prob_reduced(cfg, bath, j, t)
    return float(np.max(probs.max(axis=0) - probs.min(axis=0)))


def _check_flux_independence_strong(tracker: _ConservationTracker) -> CheckResult:
    times = np.linspace(0.0, 20.0, 21)
    return _result(
        "flux_independence_strong_decoherence",
        1e-6,
        _flux_spread(5.0, times, tracker),
        detail="site probabilities across 16 fluxes at lambda=5, N=3",
    )


def _check_flux_sensitivity_weak(tracker: _ConservationTracker) -> CheckResult:
    times = np.linspace(0.0, 20.0, 21)
    return _result(
        "flux_sensitivity_weak_bath",
        1e-3,
        _flux_spread(0.02, times, tracker),
        require="above",
        detail="lambda=0.02 must retain visible flux dependence",
    )


def _check_flux_independence_moderate() -> CheckResult:
    times = np.linspace(0.0, 20.0, 21)
    return _result(
        "flux_independence_moderate_decoherence",
        1e-6,
        _flux_spread(0.5, times, None),
        detail=(
            "lambda=0.5 leaves a residual whole-ring interference weight "
            "exp(-9 lambda/2) ~ 0.1, so the 1e-6 bound is out of regime here"
        ),
    )


def _asymptote_deviation(flux: float, t_lo: float, t_hi: float) -> float:
    cfg = RingConfig(n_sites=3, hop=1.0, flux=flux)
    bath = GaussianEnsemble(0.02)
    worst = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AsymptoticRegimeWarning)
        for t in np.linspace(t_lo, t_hi, 26):
            exact = prob_reduced(cfg, bath, 0, t)
            asym = prob_asymptotic_n3(cfg, bath, t)
            worst = max(worst, abs(exact - asym))
    return worst


def _check_asymptote_zero_flux() -> CheckResult:
    return _result(
        "asymptote_accuracy_zero_flux",
        0.01,
        _asymptote_deviation(0.0, 50.0, 100.0),
        detail="return probability vs leading asymptote, lambda=0.02, flux=0",
    )


def _check_asymptote_quarter_flux() -> CheckResult:
    return _result(
        "asymptote_accuracy_quarter_flux",
        0.01,
        _asymptote_deviation(math.pi / 2.0, 50.0, 100.0),
        detail=(
            "at flux pi/2 the subleading Bessel corrections of the retained "
            "winding terms add coherently and only drop below 0.01 past "
            "hop*t ~ 70, so the bound fails over [50, 100] by design of the "
            "leading-order formula"
        ),
    )


def _check_asymptote_amplitude_ordering() -> CheckResult:
    bath = GaussianEnsemble(0.02)
    a_zero = return_amplitude(RingConfig(n_sites=3, flux=0.0), bath)
    a_quarter = return_amplitude(RingConfig(n_sites=3, flux=math.pi / 2.0), bath)
    return _result(
        "asymptote_amplitude_ordering",
        0.0,
        a_quarter - a_zero,
        require="above",
        detail="oscillation amplitude must grow from flux 0 to pi/2",
    )


def _check_continuity(tracker: _ConservationTracker) -> CheckResult:
    step = 1e-4
    times = np.linspace(0.5, 10.0, 11)
    worst = 0.0

    cfg = RingConfig(n_sites=4, hop=1.0, flux=0.9)
    rho_in = DensityMatrix.site_state(4, 1)
    for t in times:
        before, now, after = density_free(
            cfg, rho_in, TimeGrid([t - step, t, t + step])
        )
        dprob = (after.probabilities() - before.probabilities()) / (2.0 * step)
        flows = np.array([current_free(cfg, now, j) for j in range(4)])
        for j in range(4):
            worst = max(worst, abs(dprob[j] - (flows[j - 1] - flows[j])))

    bath = FixedCouplings((0.3, 0.2))
    for t in times:
        before, now, after = density_reduced(
            cfg, bath, rho_in, TimeGrid([t - step, t, t + step])
        )
        tracker.record(cfg, rho_in, [now], bath)
        dprob = (after.probabilities() - before.probabilities()) / (2.0 * step)
        flows = np.array(
            [current_reduced(cfg, bath, rho_in, j, t) for j in range(4)]
        )
        for j in range(4):
            worst = max(worst, abs(dprob[j] - (flows[j - 1] - flows[j])))

    return _result(
        "current_continuity",
        1e-6,
        worst,
        detail="site-probability rate vs bond-current divergence, N=4",
    )


def _check_strong_decoherence_current() -> CheckResult:
    cfg = RingConfig(n_sites=3, hop=1.0, flux=0.7)
    bath = GaussianEnsemble(5.0)
    diag = np.diag([0.5, 0.3, 0.2]).astype(complex)
    rho_in = DensityMatrix.from_entries(diag)
    worst = 0.0
    scale = 2.0 * math.sqrt(3.0) / 3.0
    for t in np.linspace(0.0, 10.0, 21):
        envelope = jv(1, 2.0 * math.sqrt(3.0) * cfg.hop * t)
        for j in range(3):
            expected = (
                scale * cfg.hop * (diag[j, j].real - diag[(j + 1) % 3, (j + 1) % 3].real)
                * envelope
            )
            got = current_reduced(cfg, bath, rho_in, j, t)
            worst = max(worst, abs(got - expected))
    return _result(
        "strong_decoherence_current",
        1e-4,
        worst,
        detail="bond current vs gradient closed form at lambda=5, N=3",
    )


def _check_wavepacket_routes(sizes: tuple[int, ...]) -> CheckResult:
    worst = 0.0
    for n in sizes:
        spec = WavepacketSpec(n_sites=n, width=4.0, offset=n // 2)
        cfg = RingConfig(n_sites=n, hop=1.0, flux=0.6)
        for lam in (0.0, 0.1):
            bath = GaussianEnsemble(lam)
            for t in (0.8, 2.5):
                direct = profile_wavepacket_decohered(cfg, bath, spec, t, route="direct")
                prop = profile_wavepacket_decohered(
                    cfg, bath, spec, t, route="propagator"
                )
                worst = max(worst, float(np.max(np.abs(direct - prop))))
    return _result(
        "wavepacket_route_equivalence",
        1e-10,
        worst,
        detail=f"momentum-pair sum vs full propagator, N in {sorted(sizes)}",
    )


def _check_wavepacket_flux_independence() -> CheckResult:
    n = 12
    spec = WavepacketSpec(n_sites=n, width=4.0, offset=n // 2)
    bath = GaussianEnsemble(40.0)
    profiles = []
    for flux in (0.0, math.pi / 2.0, 1.234):
        cfg = RingConfig(n_sites=n, hop=1.0, flux=flux)
        profiles.append(profile_wavepacket_decohered(cfg, bath, spec, 2.0))
    stack = np.array(profiles)
    spread = float(np.max(stack.max(axis=0) - stack.min(axis=0)))
    return _result(
        "wavepacket_flux_independence",
        1e-6,
        spread,
        detail="packet profiles across fluxes in the strong-decoherence regime",
    )


def _check_monte_carlo(seed: int) -> CheckResult:
    cfg = RingConfig(n_sites=3, hop=1.0, flux=0.9)
    bath = GaussianEnsemble(0.1)
    rho_in = DensityMatrix.site_state(3, 0)
    t = 5.0
    mc, stderr = sample_gaussian_ensemble(
        cfg, 0.1, 4, 100_000, seed, rho_in, t, with_stderr=True
    )
    exact = density_reduced(cfg, bath, rho_in, TimeGrid([t]))[0]
    ratio = np.abs(mc.entries - exact.entries) / np.maximum(stderr, 1e-300)
    return _result(
        "monte_carlo_gaussian",
        3.0,
        float(ratio.max()),
        detail="sampled ensemble vs closed form, in units of standard errors",
    )


def _check_flux_periodicity() -> CheckResult:
    worst = 0.0
    grid = TimeGrid(np.linspace(0.0, 10.0, 11))
    for n in (3, 5):
        sites = np.arange(n)
        mixed = np.diag(np.linspace(1.0, 2.0, n) / np.sum(np.linspace(1.0, 2.0, n)))
        for rho_in in (
            DensityMatrix.site_state(n, 0),
            DensityMatrix.from_entries(mixed.astype(complex)),
        ):
            for flux in (0.4, 1.9):
                cfg_a = RingConfig(n_sites=n, hop=1.0, flux=flux)
                cfg_b = RingConfig(n_sites=n, hop=1.0, flux=flux + 2.0 * math.pi)
                states_a = density_free(cfg_a, rho_in, grid)
                states_b = density_free(cfg_b, rho_in, grid)
                offs = sites[:, None] - sites[None, :]
                dress_a = np.exp(1j * flux * offs / n)
                dress_b = np.exp(1j * (flux + 2.0 * math.pi) * offs / n)
                for a, b in zip(states_a, states_b):
                    worst = max(
                        worst,
                        float(np.max(np.abs(dress_a * a.entries - dress_b * b.entries))),
                    )
    return _result(
        "flux_periodicity",
        1e-10,
        worst,
        detail="gauge-dressed density matrix invariant under flux + 2 pi",
    )


# ---------------------------------------------------------------------------
# Suite assembly
# ---------------------------------------------------------------------------

QUICK_CHECKS = (
    "oracle_equivalence_sector",
    "oracle_equivalence_polarized",
    "oracle_equivalence_dense",
    "free_single_vs_double",
    "flux_independence_strong_decoherence",
    "flux_sensitivity_weak_bath",
    "asymptote_accuracy_zero_flux",
    "asymptote_amplitude_ordering",
    "current_continuity",
    "strong_decoherence_current",
    "wavepacket_route_equivalence",
    "wavepacket_flux_independence",
    "flux_periodicity",
    "conservation_trace",
    "conservation_hermiticity",
    "conservation_positivity",
    "conservation_prob_sum",
    "conservation_momentum_occupations",
)

FULL_ONLY_CHECKS = (
    "flux_independence_moderate_decoherence",
    "asymptote_accuracy_quarter_flux",
    "monte_carlo_gaussian",
)


def _run_safely(results: list[CheckResult], name: str, fn) -> None:
    """Append the check's result; convert a raised exception into a failure.

    A broken build must still yield one entry per check (the mutation
    canary relies on the report surviving invalid intermediate states), so
    a check that raises is recorded as failed with an infinite deviation.
    """
    try:
        results.append(fn())
    except Exception as exc:
        results.append(
            CheckResult(
                name=name,
                tolerance=0.0,
                observed=math.inf,
                require="below",
                passed=False,
                detail=f"check raised {type(exc).__name__}: {exc}",
            )
        )


def run_suite(level: str = "quick", seed: int = DEFAULT_SEED) -> list[CheckResult]:
    """Run the verification checks and return one result per check.

    ``quick`` runs every check a correct build passes; ``full`` widens the
    wave-packet sizes and adds the Monte-Carlo cross-check plus the two
    out-of-regime bounds documented in the module docstring.
    """
    if level not in ("quick", "full"):
        raise ValueError(f"level must be 'quick' or 'full', got {level!r}")
    tracker = _ConservationTracker()
    results: list[CheckResult] = []
    _run_safely(
        results, "oracle_equivalence_sector", lambda: _check_oracle_equivalence(seed, tracker)
    )
    _run_safely(
        results, "oracle_equivalence_polarized", lambda: _check_oracle_polarized(seed, tracker)
    )
    _run_safely(results, "oracle_equivalence_dense", lambda: _check_dense_vs_sector(seed))
    _run_safely(
        results, "free_single_vs_double", lambda: _check_free_sum_forms(seed, tracker)
    )
    _run_safely(
        results,
        "flux_independence_strong_decoherence",
        lambda: _check_flux_independence_strong(tracker),
    )
    _run_safely(
        results, "flux_sensitivity_weak_bath", lambda: _check_flux_sensitivity_weak(tracker)
    )
    _run_safely(results, "asymptote_accuracy_zero_flux", _check_asymptote_zero_flux)
    _run_safely(
        results, "asymptote_amplitude_ordering", _check_asymptote_amplitude_ordering
    )
    if level == "full":
        _run_safely(
            results,
            "flux_independence_moderate_decoherence",
            _check_flux_independence_moderate,
        )
        _run_safely(
            results, "asymptote_accuracy_quarter_flux", _check_asymptote_quarter_flux
        )

    # The raw-product Hermiticity probe needs a polarized bath: only there
    # does the influence function acquire an imaginary part whose sign
    # convention matters.
    canary_cfg = RingConfig(n_sites=4, hop=1.0, flux=1.1)
    canary_bath = FixedCouplings((0.4, 0.25), polarizations=(0.7, -0.5))
    canary_rho = _random_pure(np.random.default_rng(seed + 3), 4)
    tracker.record_raw(canary_cfg, canary_bath, canary_rho, 3.0)
    try:
        tracker.record(
            canary_cfg,
            canary_rho,
            density_reduced(canary_cfg, canary_bath, canary_rho, TimeGrid([1.0, 3.0])),
            canary_bath,
        )
    except Exception:
        # The evolved state failed its own physicality validation; the
        # positivity entry reports that instead of aborting the suite.
        tracker.eig_floor = math.inf

    _run_safely(results, "current_continuity", lambda: _check_continuity(tracker))
    _run_safely(results, "strong_decoherence_current", _check_strong_decoherence_current)
    _run_safely(
        results,
        "wavepacket_route_equivalence",
        lambda: _check_wavepacket_routes((20, 40) if level == "full" else (20,)),
    )
    _run_safely(
        results, "wavepacket_flux_independence", _check_wavepacket_flux_independence
    )
    if level == "full":
        _run_safely(results, "monte_carlo_gaussian", lambda: _check_monte_carlo(seed))
    _run_safely(results, "flux_periodicity", _check_flux_periodicity)
    results.extend(tracker.results())
    return results
