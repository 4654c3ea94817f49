"""Large-antenna power optimization for the heterogeneous precoder.

The weighted-sum bound collapses, in the M-large regime, to the objective
J(p) = sum_i w_i log2(1 + beta_i p_i / sum_j alpha_j p_j), whose maximizers
form the ray c * p_bar with p_bar_i = (w_i / (lambda* alpha_i) - 1/beta_i)^+
and lambda* fixing sum_i alpha_i p_bar_i = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel_model import SystemConfig
from .errors import ConvergenceError

_BISECT_ITERS = 200
_RESIDUAL_TOL = 1e-12


@dataclass(frozen=True)
class PowerAllocation:
    """Optimized powers, the multiplier and the active-user mask.

    Normalized so that sum_i alpha_i * p_star_i = 1 (the free scale of the
    maximizer family is fixed to c = 1).
    """

    p_star: np.ndarray
    lambda_star: float
    active: np.ndarray


def alpha_beta(config: SystemConfig) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients of the M-large objective for the given config.

    alpha_j = (1 + rho_rj*tau) / (rho_rj*tau) and
    beta_i = M * rho_fi / (1 + rho_fi / (1 + rho_ri*tau)).
    """
    rt = config.rho_r * config.tau_rp
    alpha = (1.0 + rt) / rt
    beta = config.M * config.rho_f / (1.0 + config.rho_f / (1.0 + rt))
    return alpha, beta


def j_objective(p, w, alpha, beta) -> float:
    """M-large weighted-sum objective J(p); scale-invariant in p."""
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if np.any(p < 0):
        raise ValueError("powers must be nonnegative")
    denom = float(alpha @ p)
    if denom <= 0:
        raise ValueError("p must have at least one positive entry")
    return float(w @ np.log2(1.0 + beta * p / denom))


def _powers_at(lam: float, w, alpha, beta) -> np.ndarray:
    return np.maximum(w / (lam * alpha) - 1.0 / beta, 0.0)


def waterfill(w, alpha, beta) -> PowerAllocation:
    """Waterfilling maximizer of J under the normalization alpha . p = 1.

    lambda* is located by bracketed bisection (the constraint residual is
    strictly decreasing in lambda), then recomputed in closed form on the
    identified active set so the KKT conditions hold to machine precision.
    """
    w = np.asarray(w, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if np.any(w < 0) or not np.any(w > 0):
        raise ValueError("weights must be nonnegative with at least one positive")
    if np.any(alpha <= 0) or np.any(beta <= 0):
        raise ValueError("alpha and beta must be strictly positive")

    thresholds = np.where(w > 0, w * beta / alpha, 0.0)
    hi = float(np.max(thresholds))  # all powers zero at lam >= hi
    lo = hi
    while float(alpha @ _powers_at(lo, w, alpha, beta)) < 1.0:
        lo /= 2.0
        if lo < 1e-300:
            raise ConvergenceError("failed to bracket the multiplier")
    lam = 0.5 * (lo + hi)
    for _ in range(_BISECT_ITERS):
        lam = 0.5 * (lo + hi)
        residual = float(alpha @ _powers_at(lam, w, alpha, beta)) - 1.0
        if abs(residual) <= _RESIDUAL_TOL:
            break
        if residual > 0.0:
            lo = lam
        else:
            hi = lam

    # exact multiplier on the active set found by the bisection
    active = _powers_at(lam, w, alpha, beta) > 0.0
    lam = float(np.sum(w[active]) / (1.0 + np.sum(alpha[active] / beta[active])))
    p = _powers_at(lam, w, alpha, beta)
    residual = abs(float(alpha @ p) - 1.0)
    if residual > 1e-10:
        raise ConvergenceError(f"constraint residual {residual:g} after polish")
    return PowerAllocation(p_star=p, lambda_star=lam, active=p > 0.0)
