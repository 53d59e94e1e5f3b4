"""Influence functions for a spin bath that dephases ring transport.

Each bath spin k couples to every hop of the particle through a phase
alpha_k . sigma_k added to the Peierls phase of the link.  Because the bath
operators commute with everything else in the problem, tracing the bath out
replaces each winding-path pair in the density-matrix propagator by a pure
weight -- the influence function -- that depends only on the integer net
phase count x = N*pbar + mu of the path pair:

* fixed couplings, bath spin k prepared with polarization m_k along its
  coupling axis (m_k = 0 is the thermal/maximally mixed case):
      F(x) = prod_k [cos(x |alpha_k|) + i m_k sin(x |alpha_k|)]
* Gaussian ensemble of couplings with total strength lambda:
      F(x) = exp(-lambda x^2 / 2)

The strong-decoherence limit is lambda -> infinity (or many strong fixed
couplings), where F(x) -> delta_{x,0} and interference between windings
dies; lambda -> 0 recovers free coherent motion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BathSpec",
    "FixedCouplings",
    "GaussianEnsemble",
    "InfluenceTable",
    "influence_fixed",
    "influence_gaussian",
    "influence_phase_factor",
    "topological_lambda",
    "build_influence_table",
]


class BathSpec:
    """Base marker for bath specifications."""


@dataclass(frozen=True)
class FixedCouplings(BathSpec):
    """Bath of named spins with fixed coupling magnitudes |alpha_k|.

    Attributes
    ----------
    alphas : tuple of float
        Non-negative coupling magnitudes, radians per link.
    polarizations : tuple of float
        Initial projection of each bath spin on its coupling axis, each in
        [-1, 1].  Zero (the default) is the thermal, maximally mixed state.
    """

    alphas: tuple[float, ...]
    polarizations: tuple[float, ...] = ()

    def __init__(self, alphas, polarizations=None) -> None:
        alphas = tuple(float(a) for a in alphas)
        for a in alphas:
            if not math.isfinite(a) or a < 0.0:
                raise ValueError(f"couplings must be finite and >= 0, got {a}")
        if polarizations is None:
            pols = (0.0,) * len(alphas)
        else:
            pols = tuple(float(m) for m in polarizations)
            if len(pols) != len(alphas):
                raise ValueError(
                    f"{len(pols)} polarizations for {len(alphas)} couplings"
                )
            for m in pols:
                if not -1.0 <= m <= 1.0:
                    raise ValueError(f"polarizations must lie in [-1, 1], got {m}")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "polarizations", pols)

    @property
    def n_spins(self) -> int:
        return len(self.alphas)

    def is_thermal(self) -> bool:
        return all(m == 0.0 for m in self.polarizations)


@dataclass(frozen=True)
class GaussianEnsemble(BathSpec):
    """Gaussian ensemble of couplings with total dephasing strength lambda.

    Equivalent to many weak thermal spins whose squared couplings sum to
    2 * lam; the influence function is exactly exp(-lam x^2 / 2).
    """

    lam: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.lam) or self.lam < 0.0:
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")


def _phase_count(n_sites: int, mu: int, pbar: int) -> int:
    return n_sites * int(pbar) + int(mu)


def influence_phase_factor(spec: BathSpec, x: int) -> complex:
    """Influence weight for a path pair with net integer phase count x."""
    if isinstance(spec, GaussianEnsemble):
        return complex(math.exp(-0.5 * spec.lam * float(x) ** 2))
    if isinstance(spec, FixedCouplings):
        out = 1.0 + 0.0j
        for a, m in zip(spec.alphas, spec.polarizations):
            out *= math.cos(x * a) + 1j * m * math.sin(x * a)
        return out
    raise TypeError(f"unknown bath spec {type(spec).__name__}")


def influence_fixed(
    spec: FixedCouplings, n_sites: int, mu: int, pbar: int
) -> complex:
    """F(mu, pbar) = prod_k [cos(x|alpha_k|) + i m_k sin(x|alpha_k|)],
    x = n_sites * pbar + mu, for a fixed-coupling bath."""
    if not isinstance(spec, FixedCouplings):
        raise TypeError("influence_fixed requires a FixedCouplings spec")
    return influence_phase_factor(spec, _phase_count(n_sites, mu, pbar))


def influence_gaussian(
    spec: GaussianEnsemble, n_sites: int, mu: int, pbar: int
) -> float:
    """F(mu, pbar) = exp(-lambda (n_sites * pbar + mu)^2 / 2)."""
    if not isinstance(spec, GaussianEnsemble):
        raise TypeError("influence_gaussian requires a GaussianEnsemble spec")
    x = _phase_count(n_sites, mu, pbar)
    return math.exp(-0.5 * spec.lam * float(x) ** 2)


def topological_lambda(spec: FixedCouplings) -> float:
    """Dephasing strength lambda = (1/2) sum_k |alpha_k|^2 of a fixed bath."""
    if not isinstance(spec, FixedCouplings):
        raise TypeError("topological_lambda requires a FixedCouplings spec")
    return 0.5 * sum(a * a for a in spec.alphas)


@dataclass(frozen=True)
class InfluenceTable:
    """Precomputed influence weights on a (mu, pbar) window.

    values maps (mu, pbar) to the complex weight; since the weight depends
    only on x = n_sites * pbar + mu, the table is backed by a single array
    over x and exposes :meth:`at_phase` for direct x lookups.
    """

    n_sites: int
    values: dict = field(repr=False)
    _phase: np.ndarray = field(repr=False)
    _x_max: int = field(repr=False)

    def __init__(self, spec: BathSpec, n_sites: int, mu_range: int, p_range: int):
        if n_sites < 1:
            raise ValueError("n_sites must be at least 1")
        if mu_range < 0 or p_range < 0:
            raise ValueError("ranges must be non-negative")
        x_max = n_sites * p_range + mu_range
        phase = np.array(
            [influence_phase_factor(spec, x) for x in range(-x_max, x_max + 1)],
            dtype=complex,
        )
        phase.setflags(write=False)
        values = {}
        for pbar in range(-p_range, p_range + 1):
            for mu in range(-mu_range, mu_range + 1):
                values[(mu, pbar)] = complex(phase[n_sites * pbar + mu + x_max])
        object.__setattr__(self, "n_sites", n_sites)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_phase", phase)
        object.__setattr__(self, "_x_max", x_max)

    def value(self, mu: int, pbar: int) -> complex:
        return self.at_phase(self.n_sites * int(pbar) + int(mu))

    def at_phase(self, x: int) -> complex:
        if abs(x) > self._x_max:
            raise KeyError(f"phase count {x} outside table range {self._x_max}")
        return complex(self._phase[x + self._x_max])

    def phase_window(self) -> np.ndarray:
        """Weights for x = -x_max .. x_max as a read-only array."""
        return self._phase

    @property
    def x_max(self) -> int:
        return self._x_max


def build_influence_table(
    spec: BathSpec, n_sites: int, mu_range: int, p_range: int
) -> InfluenceTable:
    """Tabulate the influence function for |mu| <= mu_range, |pbar| <= p_range."""
    return InfluenceTable(spec, n_sites, mu_range, p_range)
