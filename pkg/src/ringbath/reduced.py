"""Reduced dynamics of the ring after tracing out the dephasing spin bath.

Because every bath spin couples through the link phase, the joint evolution
splits into sign sectors that each propagate the particle freely at a
shifted flux.  Tracing the bath therefore reweights interfering winding
paths by the influence function of :mod:`ringbath.bath` instead of adding
any new dynamics.  Two equivalent evaluation routes are implemented:

* ``double``: the literal double winding-ladder sum, where each pair of
  Bessel ladder orders (d, d') is weighted by F(d' - d).  Cost grows with
  the square of the winding cutoff; kept as the validation route.
* ``single``: the collapsed form.  In the momentum basis the bath-averaged
  evolution is entrywise, rho_hat_{nn'}(t) -> Lambda_{nn'}(t)
  rho_hat_{nn'}(0), with

      Lambda_{nn'}(t) = sum_m J_m(z) e^{i m (s - flux/N)} F(-m),
      z = 4 hop t sin((k_n - k_n')/2),   s = (k_n + k_n')/2,

  obtained by expanding the sector phase through the Bessel generating
  function and averaging term by term.  This is the production route.

Momentum occupations (n = n', z = 0) are untouched by every bath, so the
bath only erases coherence between momentum states; site populations still
move because they live in the off-diagonal momentum entries.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .bath import BathSpec, FixedCouplings, GaussianEnsemble, influence_phase_factor, topological_lambda
from .besselsum import BesselOrderRange, WindingTruncation, bessel_j, bessel_j_batch, choose_truncation
from .ring import (
    DEFAULT_TOL,
    DensityMatrix,
    RingConfig,
    SumForm,
    TimeGrid,
    momentum_transform,
)

__all__ = [
    "AsymptoticRegimeWarning",
    "ReducedPropagator",
    "current_reduced",
    "density_reduced",
    "dephasing_matrix",
    "prob_asymptotic_n3",
    "prob_reduced",
    "propagator_reduced",
    "return_amplitude",
]


class AsymptoticRegimeWarning(UserWarning):
    """Raised when an asymptotic form is evaluated outside its regime.

    The value is still returned; the warning flags that the stated error
    envelope of the formula is not guaranteed at these parameters.
    """


@dataclass(frozen=True)
class ReducedPropagator:
    """Bath-averaged density-matrix propagator at one time.

    entries[j, j', l, l'] maps rho_in_{ll'} to rho_{jj'}(t).  Propagation
    preserves trace and hermiticity, and at zero coupling the entries
    equal the free propagator.
    """

    entries: np.ndarray
    n_sites: int
    bath: BathSpec
    truncation: WindingTruncation

    def apply(self, rho_in: DensityMatrix) -> DensityMatrix:
        if rho_in.dim != self.n_sites:
            raise ValueError(
                f"density matrix dim {rho_in.dim} != n_sites {self.n_sites}"
            )
        out = np.einsum("jklm,lm->jk", self.entries, rho_in.entries)
        return DensityMatrix.from_entries(0.5 * (out + out.conj().T))


def _check_time(t: float) -> float:
    t = float(t)
    if not math.isfinite(t) or t < 0.0:
        raise ValueError(f"time must be finite and >= 0, got {t}")
    return t


def _influence_window(bath: BathSpec, x_max: int) -> np.ndarray:
    """F(x) for integer phase counts x = -x_max .. x_max."""
    return np.array(
        [influence_phase_factor(bath, x) for x in range(-x_max, x_max + 1)],
        dtype=complex,
    )


def dephasing_matrix(
    cfg: RingConfig,
    bath: BathSpec,
    t: float,
    tol: float = DEFAULT_TOL,
    hop_shift: int = 0,
) -> tuple[np.ndarray, WindingTruncation]:
    """Entrywise momentum-basis decay factors Lambda_{nn'}(t).

    With hop_shift=0 this propagates coherences:
    rho_hat_{nn'}(t) = Lambda_{nn'} rho_hat_{nn'}(0).  hop_shift=1 yields
    the companion table for bond currents, whose operator carries one
    extra bath-dressed link phase, shifting the influence argument to
    F(-m-1).  Diagonal entries at hop_shift=0 are exactly 1, so momentum
    occupations are conserved.
    """
    t = _check_time(t)
    n = cfg.n_sites
    k = cfg.momenta()
    theta = cfg.link_phase()
    trunc = choose_truncation(4.0 * cfg.hop * t, n, tol)
    m_max = n * trunc.p_max
    ms = np.arange(-m_max, m_max + 1)
    window = _influence_window(bath, m_max + abs(int(hop_shift)))
    x_off = m_max + abs(int(hop_shift))
    f_shifted = window[(-ms - int(hop_shift)) + x_off]

    # Bessel ladders depend only on the signed mode difference a - b.
    ladders = {}
    for diff in range(-(n - 1), n):
        z = 4.0 * cfg.hop * t * math.sin(math.pi * diff / n)
        ladders[diff] = bessel_j_batch(BesselOrderRange(-m_max, m_max), z)

    lam = np.empty((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            s = 0.5 * (k[a] + k[b])
            phases = np.exp(1j * ms * (s - theta))
            lam[a, b] = np.sum(ladders[a - b] * phases * f_shifted)
    return lam, trunc


def _reduced_table_double(
    cfg: RingConfig, bath: BathSpec, t: float, tol: float
) -> tuple[np.ndarray, WindingTruncation]:
    """T[a, b] = sum over ladder pairs d = a (mod N), d' = b (mod N) of
    J_d J_d' e^{-i d (theta + pi/2)} e^{+i d' (theta + pi/2)} F(d' - d)."""
    n = cfg.n_sites
    w = 2.0 * cfg.hop * t
    trunc = choose_truncation(w, n, tol)
    p = np.arange(-trunc.p_max, trunc.p_max + 1)
    d_min = -n * trunc.p_max
    d_max = (n - 1) + n * trunc.p_max
    orders = np.arange(d_min, d_max + 1)
    jn = bessel_j_batch(BesselOrderRange(d_min, d_max), w)
    amp = jn * np.exp(-1j * orders * (cfg.link_phase() + math.pi / 2.0))
    x_max = d_max - d_min
    window = _influence_window(bath, x_max)

    table = np.empty((n, n), dtype=complex)
    for a in range(n):
        da = a + n * p
        va = amp[da - d_min]
        for b in range(n):
            db = b + n * p
            vb = amp[db - d_min]
            f_pair = window[(db[None, :] - da[:, None]) + x_max]
            table[a, b] = np.sum(va[:, None] * vb.conj()[None, :] * f_pair)
    return table, trunc


def _reduced_table_single(
    cfg: RingConfig, bath: BathSpec, t: float, tol: float
) -> tuple[np.ndarray, WindingTruncation]:
    """Same table through the collapsed momentum route: T[a, b] =
    (1/N^2) sum_{nn'} Lambda_{nn'} e^{-i k_n a} e^{+i k_n' b}."""
    n = cfg.n_sites
    lam, trunc = dephasing_matrix(cfg, bath, t, tol)
    k = cfg.momenta()
    modes = np.exp(-1j * np.outer(k, np.arange(n)))
    table = modes.T @ lam @ modes.conj() / n**2
    return table, trunc


def propagator_reduced(
    cfg: RingConfig,
    bath: BathSpec,
    t: float,
    form: SumForm = SumForm(),
    tol: float = DEFAULT_TOL,
) -> ReducedPropagator:
    """Bath-averaged propagator K_{jj',ll'}(t) as a rank-4 array.

    The entries depend on the site indices only through the hop counts
    (j - l) mod N and (j' - l') mod N, so both routes build an N x N
    table and broadcast it.
    """
    t = _check_time(t)
    n = cfg.n_sites
    probe = choose_truncation(4.0 * cfg.hop * t, n, tol)
    variant = form.resolve(n, probe.p_max)
    if variant == "double":
        table, trunc = _reduced_table_double(cfg, bath, t, tol)
    else:
        table, trunc = _reduced_table_single(cfg, bath, t, tol)
    sites = np.arange(n)
    a_idx = (sites[:, None] - sites[None, :]) % n
    entries = table[
        a_idx[:, None, :, None], a_idx[None, :, None, :]
    ]
    return ReducedPropagator(
        entries=entries, n_sites=n, bath=bath, truncation=trunc
    )


def density_reduced(
    cfg: RingConfig,
    bath: BathSpec,
    rho_in: DensityMatrix,
    grid: TimeGrid,
    form: SumForm = SumForm(),
    tol: float = DEFAULT_TOL,
) -> list[DensityMatrix]:
    """Bath-averaged density matrix at each grid time.

    The single route evolves entrywise in the momentum basis (the
    production path); the double route contracts the winding-ladder table
    against shifted copies of rho_in for validation.
    """
    if rho_in.dim != cfg.n_sites:
        raise ValueError(
            f"density matrix dim {rho_in.dim} != n_sites {cfg.n_sites}"
        )
    n = cfg.n_sites
    t_max = max(grid, default=0.0)
    probe = choose_truncation(4.0 * cfg.hop * t_max, n, tol)
    variant = form.resolve(n, probe.p_max)
    k = cfg.momenta()
    modes = np.exp(1j * np.outer(k, np.arange(n))) / math.sqrt(n)
    rho_k = momentum_transform(cfg, rho_in.entries)

    out = []
    for t in grid:
        if variant == "double":
            table, _ = _reduced_table_double(cfg, bath, t, tol)
            acc = np.zeros((n, n), dtype=complex)
            for a in range(n):
                for b in range(n):
                    acc += table[a, b] * np.roll(rho_in.entries, (a, b), (0, 1))
        else:
            lam, _ = dephasing_matrix(cfg, bath, t, tol)
            acc = modes.conj().T @ (lam * rho_k) @ modes
        out.append(DensityMatrix.from_entries(0.5 * (acc + acc.conj().T)))
    return out


def prob_reduced(
    cfg: RingConfig, bath: BathSpec, j: int, t: float, tol: float = DEFAULT_TOL
) -> float:
    """Occupation probability of site j at time t for a particle that
    starts at site 0, with the bath traced out.

    Only path pairs with equal endpoint offsets interfere, so the result
    involves the influence function solely at whole-ring phase counts
    F(N pbar):

        P_j(t) = sum_pbar F(N pbar) e^{i N pbar (theta + pi/2)}
                 * sum_{d = j (mod N)} J_{d + N pbar}(2 hop t) J_d(2 hop t)

    with the inner ladder sum collapsed through the cross-mode identity
    to a single sum over the N momenta.
    """
    t = _check_time(t)
    n = cfg.n_sites
    if not 0 <= int(j) < n:
        raise IndexError(f"site {j} outside ring of {n} sites")
    j = int(j)
    theta = cfg.link_phase()
    k = cfg.momenta()
    w = 2.0 * cfg.hop * t
    trunc = choose_truncation(2.0 * w, n, tol)
    inner_args = 2.0 * w * np.sin(k / 2.0)
    mode_phase = np.exp(-1j * k * j)
    span = n * trunc.p_max
    order_range = BesselOrderRange(-span, span)
    ladders = np.array([bessel_j_batch(order_range, x) for x in inner_args])

    total = 0.0 + 0.0j
    for pbar in range(-trunc.p_max, trunc.p_max + 1):
        nu = n * pbar
        weight = influence_phase_factor(bath, nu)
        if pbar != 0 and abs(weight) < 1e-300:
            continue
        jn = ladders[:, nu + span]
        inner = np.sum(jn * np.exp(1j * nu * (math.pi - k) / 2.0) * mode_phase) / n
        total += weight * np.exp(1j * nu * (theta + math.pi / 2.0)) * inner
    return float(total.real)


def return_amplitude(cfg: RingConfig, bath: BathSpec) -> float:
    """Amplitude A of the long-time return-probability envelope on a
    3-site ring: A = 1 + 2 sum_{p >= 1} (-1)^p Re[F(6p) e^{i 2 p flux}].

    Windings are kept up to p_cut = sqrt(5 / (9 lambda)), the order where
    the influence decay overtakes the retained terms; lambda is the
    Gaussian strength, or its fixed-coupling analogue (1/2) sum alpha^2.
    """
    if cfg.n_sites != 3:
        raise ValueError("return_amplitude is specific to a 3-site ring")
    if isinstance(bath, GaussianEnsemble):
        lam = bath.lam
    elif isinstance(bath, FixedCouplings):
        lam = topological_lambda(bath)
    else:
        raise TypeError(f"unknown bath spec {type(bath).__name__}")
    if lam <= 0.0:
        raise ValueError("the long-time envelope needs a positive dephasing strength")
    p_cut = max(1, math.ceil(math.sqrt(5.0 / (9.0 * lam))))
    total = 1.0
    for p in range(1, p_cut + 1):
        weight = influence_phase_factor(bath, 6 * p)
        total += 2.0 * (-1.0) ** p * (weight * np.exp(2j * p * cfg.flux)).real
    return float(total)


def prob_asymptotic_n3(cfg: RingConfig, bath: BathSpec, t: float) -> float:
    """Long-time return probability on a 3-site ring:

        P_00(t) ~ (1/3) [1 + 2 A / sqrt(pi hop sqrt(3) t)
                          * cos(2 sqrt(3) hop t - pi/4)]

    valid once hop * t well exceeds (6 p_cut)^2 with
    p_cut = sqrt(5 / (9 lambda)); outside that regime the value is still
    returned but an AsymptoticRegimeWarning is emitted.
    """
    if cfg.n_sites != 3:
        raise ValueError("prob_asymptotic_n3 is specific to a 3-site ring")
    t = _check_time(t)
    if t == 0.0:
        raise ValueError("the long-time form is undefined at t = 0")
    if isinstance(bath, GaussianEnsemble):
        lam = bath.lam
    elif isinstance(bath, FixedCouplings):
        lam = topological_lambda(bath)
    else:
        raise TypeError(f"unknown bath spec {type(bath).__name__}")
    if lam <= 0.0:
        raise ValueError("the long-time envelope needs a positive dephasing strength")
    p_cut = math.sqrt(5.0 / (9.0 * lam))
    if cfg.hop * t < (6.0 * p_cut) ** 2:
        warnings.warn(
            f"hop*t = {cfg.hop * t:.3g} is below the asymptotic onset "
            f"(6*p_cut)^2 = {(6.0 * p_cut) ** 2:.3g}; the returned "
            "value carries no accuracy guarantee",
            AsymptoticRegimeWarning,
            stacklevel=2,
        )
    amp = return_amplitude(cfg, bath)
    w = 2.0 * math.sqrt(3.0) * cfg.hop * t
    envelope = 2.0 * amp / math.sqrt(math.pi * cfg.hop * math.sqrt(3.0) * t)
    return (1.0 + envelope * math.cos(w - math.pi / 4.0)) / 3.0


def current_reduced(
    cfg: RingConfig,
    bath: BathSpec,
    rho_in: DensityMatrix,
    j: int,
    t: float,
    tol: float = DEFAULT_TOL,
) -> float:
    """Bath-averaged particle current across the bond from site j to j+1.

    Each bath sector carries the current of a ring at shifted flux, and
    the shifted link phase in the current operator moves the influence
    argument by one:  I = 2 Im[hop e^{-i theta} c_j] with the bond
    coherence c_j rebuilt from Lambda^{(1)}_{nn'} = sum_m J_m(z)
    e^{i m (s - theta)} F(-m-1) acting on the initial momentum matrix.
    """
    t = _check_time(t)
    n = cfg.n_sites
    if not 0 <= int(j) < n:
        raise IndexError(f"site {j} outside ring of {n} sites")
    if rho_in.dim != n:
        raise ValueError(f"density matrix dim {rho_in.dim} != n_sites {n}")
    j = int(j)
    lam1, _ = dephasing_matrix(cfg, bath, t, tol, hop_shift=1)
    rho_k = momentum_transform(cfg, rho_in.entries)
    k = cfg.momenta()
    phases = np.exp(-1j * k * j)[:, None] * np.exp(1j * k * (j + 1))[None, :]
    bond = np.sum(phases * lam1 * rho_k) / n
    return float(2.0 * (cfg.hop * np.exp(-1j * cfg.link_phase()) * bond).imag)
