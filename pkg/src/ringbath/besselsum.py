"""Integer-order Bessel functions and winding-sum truncation bounds.

Every analytic propagator in this package is a lattice sum whose terms are
Bessel functions of the first kind, J_n, evaluated at real arguments with
orders running over all integers congruent to a fixed residue modulo the
ring size ("winding ladders").  This module provides

* :func:`bessel_j` / :func:`bessel_j_batch` -- self-contained evaluation of
  J_n(x) by power series (small argument) and Miller's downward recurrence
  with normalization (everything else), accurate to about 1e-14 absolute
  for |x| <= 1e4;
* :func:`choose_truncation` -- a certified winding cutoff p_max such that
  every neglected ladder order is provably below a requested tolerance,
  via a Debye-type tail bound on J_n.

No special-function library is used at runtime; only elementary functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BesselOrderRange",
    "WindingTruncation",
    "bessel_j",
    "bessel_j_batch",
    "choose_truncation",
    "negligible_order",
]


@dataclass(frozen=True)
class BesselOrderRange:
    """Inclusive range of integer Bessel orders.

    Attributes
    ----------
    min_order, max_order : int
        Endpoints, ``min_order <= max_order``.  Negative orders allowed.
    """

    min_order: int
    max_order: int

    def __post_init__(self) -> None:
        if self.min_order > self.max_order:
            raise ValueError(
                f"min_order {self.min_order} exceeds max_order {self.max_order}"
            )


@dataclass(frozen=True)
class WindingTruncation:
    """Certified cutoff for a symmetric winding sum over p in [-p_max, p_max].

    Attributes
    ----------
    p_max : int
        Number of winding shells retained on each side (at least 1).
    tail_bound : float
        Absolute bound on the magnitude of every neglected term: each
        neglected Bessel order nu satisfies |J_nu(x)| < tail_bound for all
        arguments x in the evaluation range the cutoff was requested for.
    """

    p_max: int
    tail_bound: float

    def __post_init__(self) -> None:
        if self.p_max < 1:
            raise ValueError("p_max must be at least 1")
        if not (self.tail_bound > 0.0):
            raise ValueError("tail_bound must be positive")


# ---------------------------------------------------------------------------
# Tail bound
# ---------------------------------------------------------------------------


def _tail_log_bound(nu: float, x: float) -> float:
    """Natural log of a rigorous upper bound on |J_nu(x)| for nu > x >= 0.

    Uses the monotone Debye-regime inequality
    ``J_nu(nu sech a) <= exp(-nu (a - tanh a)) / sqrt(2 pi nu tanh a)``
    with ``cosh a = nu / x``.  For ``x = 0`` the true value is 0, so the
    bound is -inf.  The bound is increasing in x and decreasing in nu, so
    evaluating at the largest argument of interest covers a whole range.
    """
    if x == 0.0:
        return -math.inf
    r = nu / x
    if r <= 1.0:
        return 0.0  # no decay certified; |J_nu| <= 1 always
    a = math.log(r + math.sqrt(r * r - 1.0))  # arccosh(nu/x)
    th = math.sqrt(1.0 - 1.0 / (r * r))  # tanh(arccosh(nu/x))
    return -nu * (a - th) - 0.5 * math.log(2.0 * math.pi * nu * th)


def negligible_order(max_arg: float, tol: float) -> int:
    """Smallest order M certified to satisfy |J_nu(x)| < tol for all nu >= M.

    The certificate holds uniformly over arguments 0 <= x <= max_arg.
    """
    if not (max_arg >= 0.0) or not math.isfinite(max_arg):
        raise ValueError(f"max_arg must be finite and non-negative, got {max_arg}")
    if not (0.0 < tol < 1.0):
        raise ValueError(f"tol must lie in (0, 1), got {tol}")
    if max_arg == 0.0:
        return 1
    log_tol = math.log(tol)
    nu = int(math.floor(max_arg)) + 1
    while _tail_log_bound(nu, max_arg) >= log_tol:
        nu += 1
    return nu


def choose_truncation(
    max_arg: float, n_sites: int, tol: float = 1e-12
) -> WindingTruncation:
    """Choose the winding cutoff for ladder sums on an ``n_sites`` ring.

    A winding ladder collects Bessel orders ``n_sites * p + r`` with residue
    ``r`` in ``[0, n_sites)`` and ``p`` in ``[-p_max, p_max]``.  The returned
    ``p_max`` is the smallest value such that every order outside the ladder
    (the first neglected one is ``n_sites * p_max + 1`` in magnitude) is
    certified below ``tol`` for all arguments up to ``max_arg``; the ladder
    itself retains up to ``n_sites - 1`` extra orders beyond that threshold
    as a structural safety margin.

    Parameters
    ----------
    max_arg : float
        Largest Bessel argument the downstream sum will use (for the
        double winding form this is ``2 * hop * t_max``, for single forms
        ``4 * hop * t_max``).
    n_sites : int
        Ring size (at least 1).
    tol : float
        Absolute tolerance on each neglected term, in (0, 1).

    Returns
    -------
    WindingTruncation
        Cutoff and the certified bound on every neglected term.
    """
    if n_sites < 1:
        raise ValueError(f"n_sites must be at least 1, got {n_sites}")
    first_ok = negligible_order(max_arg, tol)  # validates max_arg, tol
    largest_failing = first_ok - 1
    p_max = max(1, -(-largest_failing // n_sites))  # ceil division
    tail_log = _tail_log_bound(n_sites * p_max + 1, max_arg)
    tail_bound = math.exp(max(tail_log, -690.0))  # keep it positive
    return WindingTruncation(p_max=p_max, tail_bound=min(tail_bound, tol))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

_SERIES_CUTOFF = 2.0  # |x| below this uses the power series


def _series_jn(n: int, x: float) -> float:
    """Power series for J_n(x), n >= 0, 0 <= x < 2."""
    half = 0.5 * x
    if half == 0.0:  # includes subnormal x whose half underflows
        return 1.0 if n == 0 else 0.0
    log_t0 = n * math.log(half) - math.lgamma(n + 1.0)
    if log_t0 < -745.0:
        return 0.0
    term = math.exp(log_t0)
    total = term
    q = half * half
    for k in range(1, 200):
        term *= -q / (k * (n + k))
        total += term
        if abs(term) < 1e-20 * max(abs(total), 1e-280):
            break
    return total


def _miller_block(n_max: int, x: float) -> np.ndarray:
    """Orders 0..n_max of J_n(x) by downward recurrence, x > 0.

    Runs in extended precision (long double) so the ~x recurrence steps in
    the oscillatory region cannot erode the 1e-14 absolute target, rescaling
    on overflow, and normalizes with J_0 + 2 sum_k J_{2k} = 1.
    """
    start = max(n_max, negligible_order(x, 1e-22)) + 10
    if start % 2:
        start += 1
    out = np.zeros(n_max + 1, dtype=np.longdouble)
    two_over_x = np.longdouble(2.0) / np.longdouble(x)
    jp = np.longdouble(0.0)  # J_{k+1}, seeded beyond the decay point
    jc = np.longdouble(1e-30)  # J_k at k = start (arbitrary scale)
    norm = np.longdouble(2.0) * jc if start % 2 == 0 else np.longdouble(0.0)
    rescale_at = np.longdouble(1e280)
    shrink = np.longdouble(1e-280)
    for k in range(start, 0, -1):
        jm = k * two_over_x * jc - jp  # J_{k-1}
        jp = jc
        jc = jm
        if k - 1 <= n_max:
            out[k - 1] = jc
        if (k - 1) % 2 == 0:
            norm += 2.0 * jc if k - 1 > 0 else jc
        if abs(jc) > rescale_at:
            jp *= shrink
            jc *= shrink
            norm *= shrink
            out *= shrink
    out /= norm
    return out.astype(np.float64)


def _validate_arg(x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"argument must be finite, got {x}")
    return x


def bessel_j(n: int, x: float) -> float:
    """Bessel function of the first kind J_n(x) for integer order n.

    Negative orders and arguments reduce through the exact identities
    ``J_{-n}(x) = (-1)^n J_n(x)`` and ``J_n(-x) = J_{-n}(x)``.  Absolute
    error is below about 1e-14 for |x| <= 1e4.
    """
    x = _validate_arg(x)
    n = int(n)
    sign = 1.0
    if x < 0.0:
        x = -x
        if n % 2:
            sign = -sign
    if n < 0:
        n = -n
        if n % 2:
            sign = -sign
    if x < _SERIES_CUTOFF:
        return sign * _series_jn(n, x)
    return sign * float(_miller_block(n, x)[n])


def bessel_j_batch(order_range: BesselOrderRange, x: float) -> np.ndarray:
    """J_n(x) for every integer order in ``order_range``, one recurrence pass.

    Element ``i`` of the result equals ``bessel_j(min_order + i, x)``.
    """
    x = _validate_arg(x)
    lo, hi = order_range.min_order, order_range.max_order
    n_top = max(abs(lo), abs(hi))
    sign_x = 1.0
    if x < 0.0:
        x = -x
        sign_x = -1.0  # applied as (-1)^n per order below
    if x < _SERIES_CUTOFF:
        block = np.array([_series_jn(n, x) for n in range(n_top + 1)])
    else:
        block = _miller_block(n_top, x)
    orders = np.arange(lo, hi + 1)
    vals = block[np.abs(orders)]
    odd = (orders % 2) != 0
    if sign_x < 0.0:
        vals = np.where(odd, -vals, vals)
    negative = orders < 0
    vals = np.where(negative & odd, -vals, vals)
    return vals
