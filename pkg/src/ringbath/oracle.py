"""Independent brute-force verifiers for the analytic reduced dynamics.

Three routes to the same physics, sharing no code with the production sums:

* sector oracle -- every bath spin's coupling operator commutes with the
  rest of the Hamiltonian, so each joint spin configuration ("sector") sees
  the ring with its flux shifted by N times the summed link phases.  The
  reduced density matrix is the weighted average of free evolutions over
  all 2^{N_s} sectors.
* dense oracle -- build the full particle (x) bath Hamiltonian with the
  per-link phase operator, exponentiate it, evolve the joint density
  matrix, trace the bath out.  No structure is exploited.
* Gaussian Monte-Carlo -- draw coupling magnitudes from the Gaussian
  ensemble and one thermal sign per spin per draw, average free evolutions;
  converges to the closed-form Gaussian influence result as 1/sqrt(n).

These are the ground truth the analytic propagators are tested against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .bath import BathSpec, FixedCouplings, GaussianEnsemble
from .ring import DensityMatrix, RingConfig, _green_matrix

__all__ = [
    "SectorDecomposition",
    "FullStateVector",
    "sector_decomposition",
    "evolve_sector_oracle",
    "evolve_dense_oracle",
    "evolve_full_state",
    "sample_gaussian_ensemble",
]

_MAX_SECTOR_SPINS = 20
_MAX_DENSE_DIM = 4096
_MAX_STATE_SPINS = 12


@dataclass(frozen=True)
class SectorDecomposition:
    """Effective-flux sectors of a fixed-coupling bath with their weights."""

    sectors: tuple[tuple[float, float], ...]  # (effective_flux, weight)

    def __post_init__(self) -> None:
        total = sum(w for _, w in self.sectors)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"sector weights sum to {total}, expected 1")
        if any(w < 0.0 for _, w in self.sectors):
            raise ValueError("sector weights must be non-negative")


@dataclass(frozen=True)
class FullStateVector:
    """Joint particle (x) bath pure state on N * 2^{N_s} amplitudes."""

    n_sites: int
    n_spins: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.n_spins > _MAX_STATE_SPINS:
            raise ValueError(
                f"n_spins {self.n_spins} exceeds the {_MAX_STATE_SPINS}-spin guard"
            )
        amps = np.array(self.amplitudes, dtype=complex)
        dim = self.n_sites * 2**self.n_spins
        if amps.shape != (dim,):
            raise ValueError(f"amplitude shape {amps.shape}, expected ({dim},)")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state norm {norm} is not 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)


def _spin_signs(n_spins: int) -> np.ndarray:
    """signs[k, s] = +-1 value of spin k in joint basis state s (bit 0 of s
    is the last spin; set bit means -1)."""
    m = 2**n_spins
    signs = np.empty((n_spins, m), dtype=float)
    for k in range(n_spins):
        block = m >> (k + 1)
        signs[k] = np.tile(np.repeat([1.0, -1.0], block), 2**k)
    return signs


def _sector_arrays(
    cfg: RingConfig, bath: FixedCouplings
) -> tuple[np.ndarray, np.ndarray]:
    """Per-sector effective fluxes and weights, in joint-basis order."""
    n_spins = bath.n_spins
    if n_spins > _MAX_SECTOR_SPINS:
        raise ValueError(
            f"{n_spins} bath spins exceed the {_MAX_SECTOR_SPINS}-spin sector guard"
        )
    signs = _spin_signs(n_spins)
    alphas = np.asarray(bath.alphas)
    pols = np.asarray(bath.polarizations)
    xi = alphas @ signs if n_spins else np.zeros(1)
    weights = np.prod((1.0 + signs * pols[:, None]) / 2.0, axis=0) if n_spins else np.ones(1)
    return cfg.flux + cfg.n_sites * xi, weights


def sector_decomposition(cfg: RingConfig, bath: FixedCouplings) -> SectorDecomposition:
    """Enumerate the effective-flux sectors of a fixed-coupling bath."""
    if not isinstance(bath, FixedCouplings):
        raise TypeError("sector decomposition requires a FixedCouplings bath")
    fluxes, weights = _sector_arrays(cfg, bath)
    return SectorDecomposition(
        sectors=tuple((float(f), float(w)) for f, w in zip(fluxes, weights))
    )


def _evolve_at_fluxes(
    cfg: RingConfig,
    rho_in: np.ndarray,
    fluxes: np.ndarray,
    weights: np.ndarray,
    t: float,
    chunk: int = 65536,
) -> np.ndarray:
    """Weighted average of free evolutions of rho_in at the given fluxes."""
    n = cfg.n_sites
    k = 2.0 * np.pi * np.arange(n) / n
    d = np.arange(n)
    dft = np.exp(-1j * np.outer(d, k)) / n  # g = dft @ phases
    jrow = np.arange(n)
    ladder = (jrow[:, None] - jrow[None, :]) % n
    out = np.zeros((n, n), dtype=complex)
    for lo in range(0, fluxes.size, chunk):
        fl = fluxes[lo : lo + chunk]
        wt = weights[lo : lo + chunk]
        eps = 2.0 * cfg.hop * np.cos(k[None, :] - fl[:, None] / n)
        g = np.exp(-1j * eps * t) @ dft.T  # (samples, N) ladder amplitudes
        gm = g[:, ladder]  # (samples, N, N) Green matrices
        rho_t = np.einsum("sjl,lm,skm->sjk", gm, rho_in, gm.conj(), optimize=True)
        out += np.einsum("s,sjk->jk", wt, rho_t)
    return out


def evolve_sector_oracle(
    cfg: RingConfig, bath: FixedCouplings, rho_in: DensityMatrix, t: float
) -> DensityMatrix:
    """Reduced density matrix at time t by explicit sector averaging.

    Each joint bath configuration contributes a free evolution at its
    effective flux Phi + N sum_k s_k |alpha_k|, weighted by
    prod_k (1 + s_k m_k)/2 (equal weights 2^{-N_s} for a thermal bath).
    """
    if not isinstance(bath, FixedCouplings):
        raise TypeError("sector oracle requires a FixedCouplings bath")
    if rho_in.dim != cfg.n_sites:
        raise ValueError("density matrix dimension does not match the ring")
    fluxes, weights = _sector_arrays(cfg, bath)
    out = _evolve_at_fluxes(cfg, rho_in.entries, fluxes, weights, float(t))
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(dim=cfg.n_sites, entries=out)


# ---------------------------------------------------------------------------
# Dense joint-space oracle
# ---------------------------------------------------------------------------


def _joint_hamiltonian(cfg: RingConfig, bath: FixedCouplings) -> np.ndarray:
    """Full particle (x) bath Hamiltonian with per-link phase operators."""
    n = cfg.n_sites
    m = 2**bath.n_spins
    signs = _spin_signs(bath.n_spins)
    alphas = np.asarray(bath.alphas)
    xi = alphas @ signs if bath.n_spins else np.zeros(m)
    link = np.exp(1j * (cfg.link_phase() + xi))  # diagonal bath operator
    shift = np.zeros((n, n), dtype=complex)
    for j in range(n):
        shift[j, (j + 1) % n] = 1.0  # |j><j+1|
    hop_block = cfg.hop * np.kron(shift, np.diag(link))
    return hop_block + hop_block.conj().T


def _bath_density(bath: FixedCouplings, bath_state) -> np.ndarray:
    """Diagonal bath density matrix in the coupling basis.

    bath_state may be None (use the bath's own polarizations, which
    default to zero, i.e. thermal), a sequence of per-spin axis
    polarizations, or an explicit vector of 2^{N_s} diagonal weights.
    """
    m = 2**bath.n_spins
    if bath_state is None:
        pols = np.asarray(bath.polarizations)
    else:
        bath_state = np.asarray(bath_state, dtype=float)
        if bath_state.shape == (m,):
            if abs(bath_state.sum() - 1.0) > 1e-12 or bath_state.min() < 0.0:
                raise ValueError("bath weights must be a distribution")
            return np.diag(bath_state.astype(complex))
        if bath_state.shape != (bath.n_spins,):
            raise ValueError(
                f"bath_state must have {bath.n_spins} polarizations or {m} weights"
            )
        pols = bath_state
    signs = _spin_signs(bath.n_spins)
    weights = (
        np.prod((1.0 + signs * pols[:, None]) / 2.0, axis=0)
        if bath.n_spins
        else np.ones(1)
    )
    return np.diag(weights.astype(complex))


def evolve_dense_oracle(
    cfg: RingConfig,
    bath: FixedCouplings,
    rho_in: DensityMatrix,
    bath_state,
    t: float,
) -> DensityMatrix:
    """Exact joint evolution and bath trace-out, exploiting no structure.

    Builds the dense N 2^{N_s} Hamiltonian, applies the matrix exponential
    to rho_in (x) rho_bath, and partial-traces the bath.
    """
    if not isinstance(bath, FixedCouplings):
        raise TypeError("dense oracle requires a FixedCouplings bath")
    n = cfg.n_sites
    m = 2**bath.n_spins
    if n * m > _MAX_DENSE_DIM:
        raise ValueError(
            f"joint dimension {n * m} exceeds the {_MAX_DENSE_DIM} guard"
        )
    if rho_in.dim != n:
        raise ValueError("density matrix dimension does not match the ring")
    h = _joint_hamiltonian(cfg, bath)
    u = expm(-1j * h * float(t))
    joint0 = np.kron(rho_in.entries, _bath_density(bath, bath_state))
    joint = u @ joint0 @ u.conj().T
    reduced = joint.reshape(n, m, n, m).trace(axis1=1, axis2=3)
    reduced = 0.5 * (reduced + reduced.conj().T)
    return DensityMatrix(dim=n, entries=reduced)


def evolve_full_state(
    cfg: RingConfig, bath: FixedCouplings, state: FullStateVector, t: float
) -> FullStateVector:
    """Evolve a joint pure state through the dense Hamiltonian."""
    if state.n_sites != cfg.n_sites or state.n_spins != bath.n_spins:
        raise ValueError("state dimensions do not match ring/bath")
    h = _joint_hamiltonian(cfg, bath)
    amps = expm(-1j * h * float(t)) @ state.amplitudes
    return FullStateVector(
        n_sites=state.n_sites, n_spins=state.n_spins, amplitudes=amps
    )


# ---------------------------------------------------------------------------
# Gaussian-ensemble Monte-Carlo
# ---------------------------------------------------------------------------


def sample_gaussian_ensemble(
    cfg: RingConfig,
    lam: float,
    n_spins: int,
    n_samples: int,
    seed: int,
    rho_in: DensityMatrix,
    t: float,
    with_stderr: bool = False,
):
    """Monte-Carlo estimate of the Gaussian-ensemble reduced density matrix.

    Each sample draws |alpha_k| from the half-normal with variance
    lam / n_spins and one thermal sign per spin; the signed sum is then an
    exact Normal(0, lam) link phase, so the estimator is unbiased for the
    closed-form Gaussian influence result with no distributional error.
    Samples are reduced in a fixed order: a given seed reproduces bitwise.

    With ``with_stderr`` the elementwise standard error of the mean (one
    real number per entry, covering real and imaginary spread) is returned
    alongside the density matrix.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    if lam < 0.0 or not math.isfinite(lam):
        raise ValueError(f"lambda must be finite and >= 0, got {lam}")
    if n_spins < 1:
        raise ValueError("n_spins must be at least 1")
    n = cfg.n_sites
    if rho_in.dim != n:
        raise ValueError("density matrix dimension does not match the ring")
    rng = np.random.default_rng(seed)
    sigma = math.sqrt(lam / n_spins)
    draws = rng.normal(0.0, sigma, size=(n_samples, n_spins)) if sigma > 0.0 else np.zeros((n_samples, n_spins))
    xi = draws.sum(axis=1)
    fluxes = cfg.flux + n * xi

    k = 2.0 * np.pi * np.arange(n) / n
    d = np.arange(n)
    dft = np.exp(-1j * np.outer(d, k)) / n
    jrow = np.arange(n)
    ladder = (jrow[:, None] - jrow[None, :]) % n

    total = np.zeros((n, n), dtype=complex)
    total_sq = np.zeros((n, n), dtype=float)  # |entry|^2 accumulator
    chunk = 65536
    for lo in range(0, n_samples, chunk):
        fl = fluxes[lo : lo + chunk]
        eps = 2.0 * cfg.hop * np.cos(k[None, :] - fl[:, None] / n)
        g = np.exp(-1j * eps * float(t)) @ dft.T
        gm = g[:, ladder]
        rho_t = np.einsum("sjl,lm,skm->sjk", gm, rho_in.entries, gm.conj(), optimize=True)
        total += rho_t.sum(axis=0)
        total_sq += (rho_t.real**2 + rho_t.imag**2).sum(axis=0)

    mean = total / n_samples
    mean = 0.5 * (mean + mean.conj().T)
    rho = DensityMatrix(dim=n, entries=mean)
    if not with_stderr:
        return rho
    var = total_sq / n_samples - (mean.real**2 + mean.imag**2)
    var = np.maximum(var, 0.0)
    stderr = np.sqrt(var / n_samples)
    return rho, stderr
