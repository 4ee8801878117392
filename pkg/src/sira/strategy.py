"""Bidding strategies for the two regulatory mechanisms.

Reserve thresholding: every agent that participates bids exactly the
clearing price p_eps, and participation pays off precisely when the
deployment value v_d exceeds p_eps.

SIRA equilibrium bidding: the premium is awarded through an all-pay
comparison, and the symmetric equilibrium bid of an agent with premium
value v_p is

    b_hat = p_eps + v_p * F_v(v_p) - integral_0^{v_p} F_v(z) dz

where F_v is the premium-value distribution of participants. Submitted
bids are capped at 1, the maximum meaningful payment. Closed forms of
b_hat for the Uniform and Beta(2, 2) families are implemented as their
simplified piecewise expressions; a generic route composes the defining
formula with numerical quadrature and should agree to high accuracy.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError
from .quadrature import DEFAULT_MAX_DEPTH, DEFAULT_TOL, adaptive_simpson
from .value_model import (
    PREMIUM_MAX,
    PremiumValueDistribution,
    SafetyCostModel,
    AgentValuation,
    ValueFamily,
)

P_EPS_MIN = 1e-6
P_EPS_MAX = 1.0 - 1e-6


class BidDecision(NamedTuple):
    """Outcome of a strategy evaluation for one agent.

    predicted_utility is the expected utility of participating;
    participates is true exactly when that utility is strictly positive.
    safety is the safety level bought by the submitted bid, 0 for agents
    that stay out.
    """

    raw_bid: float
    bid: float
    predicted_utility: float
    participates: bool
    safety: float


def check_p_eps(p_eps: float) -> float:
    """Validate the clearing price against the supported window."""
    if not (P_EPS_MIN <= p_eps <= P_EPS_MAX):
        raise DomainError(
            f"p_eps must lie in [{P_EPS_MIN}, {P_EPS_MAX}], got {p_eps}"
        )
    return float(p_eps)


def cap_bid(raw_bid):
    """Cap a raw bid at 1, the largest payment that can ever pay off."""
    raw = np.asarray(raw_bid, dtype=float)
    if np.any(raw < 0.0):
        raise DomainError("raw bid must be non-negative")
    out = np.minimum(raw, 1.0)
    return float(out) if np.isscalar(raw_bid) else out


def _check_premium(v_p) -> np.ndarray:
    arr = np.asarray(v_p, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > PREMIUM_MAX):
        raise DomainError(f"premium value outside [0, {PREMIUM_MAX}]")
    return arr


def sira_bid_uniform(v_p, p_eps):
    """Uncapped equilibrium bid under the Uniform total-value family."""
    check_p_eps(p_eps)
    v = _check_premium(v_p)
    p = float(p_eps)
    out = np.piecewise(
        np.atleast_1d(v),
        [np.atleast_1d(v) <= p / 2.0],
        [
            lambda t: p + t**2 * np.log(p) / (p - 1.0),
            lambda t: p
            + (8.0 * t**2 * (np.log(2.0 * t) - 0.5) + p**2) / (8.0 * (p - 1.0)),
        ],
    )
    return float(out[0]) if np.isscalar(v_p) else out


def sira_bid_beta(v_p, p_eps):
    """Uncapped equilibrium bid under the Beta(2, 2) total-value family."""
    check_p_eps(p_eps)
    v = _check_premium(v_p)
    p = float(p_eps)
    mass = 1.0 - (3.0 * p**2 - 2.0 * p**3)
    out = np.piecewise(
        np.atleast_1d(v),
        [np.atleast_1d(v) <= p / 2.0],
        [
            lambda t: p + 3.0 * t**2 * (p**2 - 2.0 * p + 1.0) / mass,
            lambda t: p
            + (8.0 * t**2 * (6.0 * t**2 - 8.0 * t + 3.0) + p**3 * (3.0 * p - 4.0))
            / (8.0 * mass),
        ],
    )
    return float(out[0]) if np.isscalar(v_p) else out


_CLOSED_FORM_BIDS = {
    ValueFamily.UNIFORM: sira_bid_uniform,
    ValueFamily.BETA22: sira_bid_beta,
}


def sira_bid(family: ValueFamily, v_p, p_eps):
    """Dispatch the closed-form uncapped equilibrium bid by family."""
    try:
        fn = _CLOSED_FORM_BIDS[family]
    except KeyError:
        raise DomainError(f"unknown value family: {family!r}") from None
    return fn(v_p, p_eps)


def sira_bid_generic(
    premium_cdf: Callable[[float], float],
    v_p: float,
    p_eps: float,
    *,
    cdf_integral: Callable[[float], float] | None = None,
    breakpoints: tuple[float, ...] | None = None,
    tol: float = DEFAULT_TOL,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> float:
    """Equilibrium bid from an arbitrary premium-value cdf.

    Evaluates the defining formula directly: the running integral of the
    cdf is either supplied in closed form or computed with adaptive
    Simpson quadrature, splitting panels at the distribution breakpoint
    p_eps / 2 (or caller-supplied breakpoints).
    """
    check_p_eps(p_eps)
    v = float(v_p)
    if not (0.0 <= v <= PREMIUM_MAX):
        raise DomainError(f"premium value outside [0, {PREMIUM_MAX}]")
    if v == 0.0:
        return float(p_eps)
    if cdf_integral is not None:
        integral = float(cdf_integral(v))
    else:
        pts = (p_eps / 2.0,) if breakpoints is None else tuple(breakpoints)
        integral = adaptive_simpson(
            lambda t: float(premium_cdf(t)),
            0.0,
            v,
            tol=tol,
            max_depth=max_depth,
            breakpoints=pts,
        )
    return p_eps + v * float(premium_cdf(v)) - integral


def equilibrium_utility(v_d: float, v_p: float, bid: float, premium_cdf) -> float:
    """Expected utility of submitting an equilibrium bid.

    Against equilibrium opponents a bid below 1 wins the premium with
    probability F_v(v_p); a bid capped at 1 wins outright. The bid
    itself is sunk either way.
    """
    if bid < 0.0:
        raise DomainError("bid must be non-negative")
    if bid >= 1.0:
        return v_d + v_p - 1.0
    return v_d + v_p * float(premium_cdf(v_p)) - bid


def reserve_threshold_bid(
    deployment_value: float,
    p_eps: float,
    model: SafetyCostModel = SafetyCostModel(),
) -> BidDecision:
    """Reserve-threshold decision: bid the clearing price or stay out."""
    check_p_eps(p_eps)
    if not (0.0 <= deployment_value <= 1.0):
        raise DomainError(f"deployment value outside [0, 1]: {deployment_value}")
    utility = deployment_value - p_eps
    participates = utility > 0.0
    safety = model.safety_from_bid(p_eps) if participates else 0.0
    return BidDecision(
        raw_bid=float(p_eps),
        bid=float(p_eps),
        predicted_utility=float(utility),
        participates=bool(participates),
        safety=float(safety),
    )


class DecisionArrays(NamedTuple):
    """Vectorized strategy evaluation over a population."""

    raw_bid: np.ndarray
    bid: np.ndarray
    predicted_utility: np.ndarray
    participates: np.ndarray
    safety: np.ndarray


def sira_decision_arrays(
    total_value: np.ndarray,
    scaling_factor: np.ndarray,
    p_eps: float,
    family: ValueFamily,
    model: SafetyCostModel,
) -> DecisionArrays:
    """Evaluate the SIRA strategy for a whole population at once."""
    total = np.asarray(total_value, dtype=float)
    lam = np.asarray(scaling_factor, dtype=float)
    v_p = lam * total
    v_d = total - v_p
    raw = sira_bid(family, v_p, p_eps)
    bid = np.minimum(raw, 1.0)
    dist = PremiumValueDistribution(family=family, p_eps=p_eps)
    cdf_vals = dist.cdf(v_p)
    utility = np.where(bid >= 1.0, v_d + v_p - 1.0, v_d + v_p * cdf_vals - bid)
    participates = utility > 0.0
    safety = np.where(participates, model.safety_from_bid(bid), 0.0)
    return DecisionArrays(raw, bid, utility, participates, safety)


def decide(
    valuation: AgentValuation,
    p_eps: float,
    family: ValueFamily,
    model: SafetyCostModel = SafetyCostModel(),
) -> BidDecision:
    """Full SIRA decision for one agent: bid, cap, utility, participation."""
    arrays = sira_decision_arrays(
        np.array([valuation.total_value]),
        np.array([valuation.scaling_factor]),
        p_eps,
        family,
        model,
    )
    return BidDecision(
        raw_bid=float(arrays.raw_bid[0]),
        bid=float(arrays.bid[0]),
        predicted_utility=float(arrays.predicted_utility[0]),
        participates=bool(arrays.participates[0]),
        safety=float(arrays.safety[0]),
    )
