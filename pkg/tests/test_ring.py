"""Free ring dynamics: oracle cross-checks, closed forms, conservation laws."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from ringbath.besselsum import bessel_j
from ringbath.ring import (
    DensityMatrix,
    RingConfig,
    SumForm,
    TimeGrid,
    current_free,
    density_free,
    dispersion,
    green_free,
    green_free_winding,
    prob_free,
    propagator_free,
    propagator_table_free,
)


def ring_hamiltonian(cfg):
    """Independent dense Hamiltonian: <j|H|j+1> = hop * e^{i flux/N}."""
    n = cfg.n_sites
    h = np.zeros((n, n), dtype=complex)
    phase = np.exp(1j * cfg.flux / n)
    for j in range(n):
        h[j, (j + 1) % n] = cfg.hop * phase
        h[(j + 1) % n, j] = cfg.hop * np.conj(phase)
    return h


def evolve_dense(cfg, rho, t):
    u = expm(-1j * ring_hamiltonian(cfg) * t)
    return u @ rho @ u.conj().T


# ---------------------------------------------------------------------------
#

class TestTypes:
    def test_ring_config_validation(self):
        with pytest.raises(ValueError):
            RingConfig(2)
        with pytest.raises(ValueError):
            RingConfig(4, hop=0.0)
        with pytest.raises(ValueError):
            RingConfig(4, hop=-1.0)
        with pytest.raises(ValueError):
            RingConfig(4, flux=math.inf)

    def test_time_grid_validation(self):
        with pytest.raises(ValueError):
            TimeGrid([-0.1])
        with pytest.raises(ValueError):
            TimeGrid([1.0, 0.5])
        assert list(TimeGrid([0.0, 0.5, 0.5, 2.0])) == [0.0, 0.5, 0.5, 2.0]

    def test_density_matrix_validation(self):
        good = DensityMatrix.site_state(3, 0)
        assert good.probabilities().tolist() == [1.0, 0.0, 0.0]
        with pytest.raises(ValueError):
            DensityMatrix.from_entries(np.array([[0.5, 0.3], [0.1, 0.5]]))
        with pytest.raises(ValueError):
            DensityMatrix.from_entries(np.eye(3))  # trace 3
        bad = np.diag([1.5, -0.5, 0.0]).astype(complex)
        with pytest.raises(ValueError):
            DensityMatrix.from_entries(bad)

    def test_density_matrix_immutable(self):
        rho = DensityMatrix.site_state(3, 1)
        with pytest.raises(ValueError):
            rho.entries[0, 0] = 1.0

    def test_sum_form(self):
        with pytest.raises(ValueError):
            SumForm("triple")
        assert SumForm("auto").resolve(3, 10) == "double"    # 30 <= 32
        assert SumForm("auto").resolve(3, 11) == "single"    # 33 > 32
        assert SumForm("double").resolve(100, 100) == "double"


class TestDispersion:
    def test_examples(self):
        assert dispersion(RingConfig(4), 0) == pytest.approx(2.0)
        assert dispersion(RingConfig(4), 1) == pytest.approx(0.0, abs=1e-15)
        val = dispersion(RingConfig(3, flux=np.pi / 2), 0)
        assert val == pytest.approx(2.0 * math.cos(np.pi / 6), abs=1e-14)

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            dispersion(RingConfig(4), 4)
        with pytest.raises(IndexError):
            dispersion(RingConfig(4), -1)


class TestGreen:
    def test_identity_at_t0(self):
        cfg = RingConfig(5, 0.7, 1.3)
        for j in range(5):
            for jp in range(5):
                want = 1.0 if j == jp else 0.0
                assert green_free(cfg, j, jp, 0.0) == pytest.approx(want, abs=1e-14)

    def test_three_site_value(self):
        # (1/3)(e^{-2i} + 2 e^{i}) for N=3, hop=1, flux=0, t=1
        cfg = RingConfig(3)
        want = (np.exp(-2j) + 2.0 * np.exp(1j)) / 3.0
        assert green_free(cfg, 0, 0, 1.0) == pytest.approx(want, abs=1e-14)

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            green_free(RingConfig(3), 0, 0, -1.0)

    def test_site_out_of_range(self):
        with pytest.raises(IndexError):
            green_free(RingConfig(3), 3, 0, 1.0)

    @pytest.mark.parametrize(
        "n,flux,t", [(3, 0.0, 1.0), (3, 1.234, 2.7), (5, 0.7, 8.0), (8, 2.0, 30.0)]
    )
    def test_spectral_vs_winding_vs_dense(self, n, flux, t):
        cfg = RingConfig(n, 1.0, flux)
        u = expm(-1j * ring_hamiltonian(cfg) * t)
        for j in range(n):
            for jp in range(n):
                spectral = green_free(cfg, j, jp, t)
                winding = green_free_winding(cfg, j, jp, t, tol=1e-14)
                assert abs(spectral - winding) < 1e-12, (j, jp)
                assert abs(spectral - u[j, jp]) < 1e-12, (j, jp)

    @given(
        n=st.integers(min_value=3, max_value=8),
        flux=st.floats(min_value=-7.0, max_value=7.0, allow_nan=False),
        t=st.floats(min_value=0.0, max_value=30.0, allow_nan=False),
    )
    @settings(max_examples=40, deadline=None)
    def test_spectral_vs_winding_property(self, n, flux, t):
        cfg = RingConfig(n, 1.0, flux)
        for j in (0, n - 1):
            diff = green_free(cfg, j, 0, t) - green_free_winding(cfg, j, 0, t, 1e-14)
            assert abs(diff) < 1e-12


class TestPropagator:
    def test_identity_at_t0(self):
        cfg = RingConfig(3, 1.0, 0.9)
        k4 = propagator_free(cfg, 0.0)
        n = cfg.n_sites
        for j in range(n):
            for jp in range(n):
                for l in range(n):
                    for lp in range(n):
                        want = 1.0 if (j == l and jp == lp) else 0.0
                        assert k4[j, jp, l, lp] == pytest.approx(want, abs=1e-13)

    def test_factorizes_into_green(self):
        cfg = RingConfig(3, 1.0, 1.1)
        k4 = propagator_free(cfg, 2.0)
        g = np.array(
            [[green_free(cfg, j, l, 2.0) for l in range(3)] for j in range(3)]
        )
        ref = np.einsum("jl,mp->jmlp", g, g.conj())
        assert np.max(np.abs(k4 - ref)) < 1e-12

    @pytest.mark.parametrize(
        "n,flux,t",
        [(3, 0.0, 0.7), (3, 1.1, 2.0), (5, 2.5, 11.0), (8, 0.9, 30.0)],
    )
    def test_single_equals_double(self, n, flux, t):
        cfg = RingConfig(n, 1.0, flux)
        td = propagator_table_free(cfg, t, SumForm("double"))
        ts = propagator_table_free(cfg, t, SumForm("single"))
        assert np.max(np.abs(td - ts)) < 1e-10

    def test_propagation_preserves_invariants(self):
        cfg = RingConfig(4, 1.0, 2.2)
        rng = np.random.default_rng(11)
        vec = rng.normal(size=4) + 1j * rng.normal(size=4)
        rho = DensityMatrix.from_pure(vec)
        for t in (0.5, 3.0, 12.0):
            out = density_free(cfg, rho, TimeGrid([t]))[0]
            assert abs(out.entries.trace() - 1.0) < 1e-12
            assert np.min(np.linalg.eigvalsh(out.entries)) > -1e-10


class TestProbability:
    def test_origin_at_t0(self):
        assert prob_free(RingConfig(3), 0, 0.0) == pytest.approx(1.0)

    def test_three_site_value(self):
        want = abs((np.exp(-2j) + 2.0 * np.exp(1j)) / 3.0) ** 2
        assert prob_free(RingConfig(3), 0, 1.0) == pytest.approx(want, abs=1e-14)
        assert want == pytest.approx(0.115558890399802, abs=1e-14)

    @given(
        flux=st.floats(min_value=-7.0, max_value=7.0, allow_nan=False),
        t=st.floats(min_value=0.0, max_value=25.0, allow_nan=False),
        n=st.integers(min_value=3, max_value=9),
    )
    @settings(max_examples=60, deadline=None)
    def test_unitarity(self, flux, t, n):
        cfg = RingConfig(n, 1.0, flux)
        total = sum(prob_free(cfg, j, t) for j in range(n))
        assert total == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("flux", [0.0, 1.234, np.pi / 2, 4.0])
    def test_three_site_closed_form(self, flux):
        # P_j(t) = (1/3)[1 + (3 delta_{j0} - 1)(J_0(w) + 2 sum_p J_{6p}(w)
        #   cos(2 p flux)) + (delta_{j1} - delta_{j2}) 2 sqrt(3)
        #   sum_p J_{6p-3}(w) sin((2p-1) flux)],  w = 2 sqrt(3) t
        cfg = RingConfig(3, 1.0, flux)
        for t in (0.0, 0.3, 1.0, 2.7, 6.0, 15.0):
            w = 2.0 * math.sqrt(3.0) * t
            even = bessel_j(0, w) + 2.0 * sum(
                bessel_j(6 * p, w) * math.cos(2 * p * flux) for p in range(1, 40)
            )
            odd = sum(
                bessel_j(6 * p - 3, w) * math.sin((2 * p - 1) * flux)
                for p in range(1, 40)
            )
            for j in range(3):
                sgn = {0: 0.0, 1: 1.0, 2: -1.0}[j]
                closed = (
                    1.0
                    + (3.0 * (j == 0) - 1.0) * even
                    + sgn * 2.0 * math.sqrt(3.0) * odd
                ) / 3.0
                assert prob_free(cfg, j, t) == pytest.approx(
                    closed, abs=1e-12
                ), (j, t)

    def test_large_ring_short_time_is_line_limit(self):
        # Before the wavefront wraps, the ring is indistinguishable from an
        # infinite chain: P_j(t) = J_j(2t)^2.
        cfg = RingConfig(101, 1.0, 0.0)
        for t in (0.5, 2.5, 5.0):
            for j in list(range(12)) + [45, 50]:
                want = bessel_j(j, 2.0 * t) ** 2
                assert prob_free(cfg, j, t) == pytest.approx(want, abs=1e-10)


class TestCurrent:
    def test_diagonal_state_carries_no_current(self):
        cfg = RingConfig(4, 1.0, 2.0)
        rho = DensityMatrix.from_entries(np.diag([0.4, 0.3, 0.2, 0.1]).astype(complex))
        for j in range(4):
            assert current_free(cfg, rho, j) == 0.0

    @pytest.mark.parametrize("flux", [0.0, 1.234, np.pi / 2])
    def test_three_site_closed_form(self, flux):
        # I_{0,1}(t) = (2/3) sum_p J_{3p+1}(w) K(p), w = 2 sqrt(3) t,
        # K(p) = sqrt(3) cos(p flux) for even p, -sin(p flux) for odd p.
        cfg = RingConfig(3, 1.0, flux)
        rho0 = DensityMatrix.site_state(3, 0)
        for t in (0.1, 1.0, 2.7, 8.0):
            w = 2.0 * math.sqrt(3.0) * t
            total = 0.0
            for p in range(-40, 41):
                kernel = (
                    -math.sin(p * flux)
                    if p % 2
                    else math.sqrt(3.0) * math.cos(p * flux)
                )
                total += bessel_j(3 * p + 1, w) * kernel
            closed = 2.0 / 3.0 * total
            rho_t = density_free(cfg, rho0, TimeGrid([t]))[0]
            assert current_free(cfg, rho_t, 0) == pytest.approx(
                closed, abs=1e-10
            ), t

    @pytest.mark.parametrize("n,flux", [(3, 0.0), (4, 1.3), (5, 2.9)])
    def test_continuity(self, n, flux):
        # dP_j/dt = I_{j-1,j} - I_{j,j+1} by central difference
        cfg = RingConfig(n, 1.0, flux)
        rho0 = DensityMatrix.site_state(n, 0)
        h = 1e-4
        for t in (0.8, 3.7, 9.6):
            rm, rt, rp = density_free(cfg, rho0, TimeGrid([t - h, t, t + h]))
            for j in range(n):
                dpdt = (
                    rp.entries[j, j].real - rm.entries[j, j].real
                ) / (2.0 * h)
                net = current_free(cfg, rt, (j - 1) % n) - current_free(cfg, rt, j)
                assert abs(dpdt - net) < 1e-6, (j, t)


class TestDensityEvolution:
    def test_t0_returns_input(self):
        cfg = RingConfig(4, 1.0, 0.7)
        rng = np.random.default_rng(3)
        vec = rng.normal(size=4) + 1j * rng.normal(size=4)
        rho = DensityMatrix.from_pure(vec)
        out = density_free(cfg, rho, TimeGrid([0.0]))[0]
        assert np.max(np.abs(out.entries - rho.entries)) < 1e-13

    def test_origin_start_diagonal_matches_prob(self):
        cfg = RingConfig(5, 1.0, 1.9)
        rho0 = DensityMatrix.site_state(5, 0)
        for t in (0.9, 4.4):
            rho_t = density_free(cfg, rho0, TimeGrid([t]))[0]
            for j in range(5):
                assert rho_t.entries[j, j].real == pytest.approx(
                    prob_free(cfg, j, t), abs=1e-12
                )

    def test_exact_period_three_sites_zero_flux(self):
        # At flux 0 all eigenvalue gaps are multiples of 3 hop.
        cfg = RingConfig(3, 1.0, 0.0)
        rho0 = DensityMatrix.site_state(3, 0)
        period = 2.0 * np.pi / 3.0
        for t in (0.4, 1.1):
            a, b = density_free(cfg, rho0, TimeGrid([t, t + period]))
            assert np.max(np.abs(a.entries - b.entries)) < 1e-10

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(21)
        for n, flux, t in [(3, 1.234, 2.0), (5, 0.6, 7.5)]:
            cfg = RingConfig(n, 1.0, flux)
            vec = rng.normal(size=n) + 1j * rng.normal(size=n)
            rho = DensityMatrix.from_pure(vec)
            mine = density_free(cfg, rho, TimeGrid([t]))[0].entries
            ref = evolve_dense(cfg, rho.entries, t)
            assert np.max(np.abs(mine - ref)) < 1e-12

    def test_single_form_matches_double(self):
        cfg = RingConfig(7, 1.0, 1.7)
        vec = np.exp(2j * np.pi * np.arange(7) / 7) / np.sqrt(7.0)
        rho = DensityMatrix.from_pure(vec)
        rd = density_free(cfg, rho, TimeGrid([3.3]), SumForm("double"))[0]
        rs = density_free(cfg, rho, TimeGrid([3.3]), SumForm("single"))[0]
        assert np.max(np.abs(rd.entries - rs.entries)) < 1e-10

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            density_free(RingConfig(4), DensityMatrix.site_state(3, 0), TimeGrid([1.0]))

    @pytest.mark.parametrize("n", [3, 5])
    def test_flux_periodicity(self, n):
        # e^{i flux (j-j')/N} rho_{jj'}(t; flux) is 2 pi periodic in flux.
        base = 0.77
        j = np.arange(n)
        for t in (1.7, 9.3):
            rows = []
            for flux in (base, base + 2.0 * np.pi):
                cfg = RingConfig(n, 1.0, flux)
                rho = density_free(
                    cfg, DensityMatrix.site_state(n, 0), TimeGrid([t])
                )[0].entries
                gauge = np.exp(1j * flux * (j[:, None] - j[None, :]) / n)
                rows.append(gauge * rho)
            assert np.max(np.abs(rows[0] - rows[1])) < 1e-10
