"""Cox proportional hazards via Newton-Raphson on the Breslow partial likelihood.

Tied event times share one risk set (Breslow). The update is damped by
step-halving whenever a full Newton step would lower the partial
log-likelihood, so accepted iterations are monotone; monotone-likelihood
data (perfectly separating covariates) therefore stalls gracefully and is
reported as converged=False rather than raising.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CONVERGENCE_SCORE_TOL = 1e-8
MAX_ITERATIONS = 100
# a |beta| this large means the score only vanished because exp() saturated
# (monotone likelihood / perfect separation), not because of a real optimum
COEF_DIVERGENCE_BOUND = 15.0


class ZeroVarianceError(ValueError):
    """A covariate is constant; the fit would be unidentifiable."""

    def __init__(self, feature: str):
        super().__init__(f"zero-variance covariate {feature!r}")
        self.feature = feature


@dataclass(frozen=True)
class CoxFit:
    beta: np.ndarray
    baseline_times: np.ndarray  # ascending event times
    baseline_cumhaz: np.ndarray  # Breslow cumulative hazard at those times
    loglik: float
    converged: bool
    iterations: int

    def linear_predictor(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.beta


def _risk_structures(durations: np.ndarray, events: np.ndarray):
    """Distinct event times with their death sets; risk set = duration >= t."""
    event_times = np.unique(durations[events == 1])
    deaths = [np.flatnonzero((durations == t) & (events == 1)) for t in event_times]
    risks = [np.flatnonzero(durations >= t) for t in event_times]
    return event_times, deaths, risks


def cox_partial_loglik(
    beta: np.ndarray, x: np.ndarray, durations: np.ndarray, events: np.ndarray
) -> float:
    """Breslow partial log-likelihood."""
    eta = x @ beta
    _, deaths, risks = _risk_structures(durations, events)
    ll = 0.0
    for dead, risk in zip(deaths, risks):
        ll += eta[dead].sum() - len(dead) * np.log(np.exp(eta[risk]).sum())
    return float(ll)


def cox_gradient(
    beta: np.ndarray, x: np.ndarray, durations: np.ndarray, events: np.ndarray
) -> np.ndarray:
    """Score vector of the Breslow partial log-likelihood."""
    eta = x @ beta
    w = np.exp(eta)
    _, deaths, risks = _risk_structures(durations, events)
    grad = np.zeros(x.shape[1])
    for dead, risk in zip(deaths, risks):
        w_risk = w[risk]
        denom = w_risk.sum()
        weighted_mean = (w_risk[:, None] * x[risk]).sum(axis=0) / denom
        grad += x[dead].sum(axis=0) - len(dead) * weighted_mean
    return grad


def _gradient_hessian(beta, x, durations, events):
    eta = x @ beta
    w = np.exp(eta)
    _, deaths, risks = _risk_structures(durations, events)
    p = x.shape[1]
    grad = np.zeros(p)
    hess = np.zeros((p, p))
    for dead, risk in zip(deaths, risks):
        xr = x[risk]
        wr = w[risk]
        denom = wr.sum()
        mean = (wr[:, None] * xr).sum(axis=0) / denom
        second = (wr[:, None, None] * (xr[:, :, None] * xr[:, None, :])).sum(axis=0) / denom
        d = len(dead)
        grad += x[dead].sum(axis=0) - d * mean
        hess -= d * (second - np.outer(mean, mean))
    return grad, hess


def check_variance(x: np.ndarray, feature_names) -> None:
    for j in range(x.shape[1]):
        if np.ptp(x[:, j]) == 0.0:
            name = feature_names[j] if feature_names else f"x{j}"
            raise ZeroVarianceError(name)


def fit_cox(
    x: np.ndarray,
    durations: np.ndarray,
    events: np.ndarray,
    feature_names=None,
    max_iterations: int = MAX_ITERATIONS,
    score_tol: float = CONVERGENCE_SCORE_TOL,
) -> CoxFit:
    """Newton-Raphson from beta = 0 with step-halving on likelihood decrease.

    Converged when max |score| / n < score_tol.
    """
    x = np.asarray(x, dtype=float)
    durations = np.asarray(durations)
    events = np.asarray(events)
    n = len(durations)
    if x.ndim != 2 or x.shape[0] != n:
        raise ValueError("covariate matrix shape mismatch")
    if events.sum() < 1:
        raise ValueError("need at least one observed event")
    check_variance(x, feature_names)

    beta = np.zeros(x.shape[1])
    ll = cox_partial_loglik(beta, x, durations, events)
    converged = False
    iterations = 0
    while iterations < max_iterations:
        grad, hess = _gradient_hessian(beta, x, durations, events)
        if np.max(np.abs(grad)) / n < score_tol:
            converged = True
            break
        try:
            delta = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            delta = -np.linalg.pinv(hess) @ grad
        step = 1.0
        improved = False
        for _ in range(30):
            candidate = beta + step * delta
            candidate_ll = cox_partial_loglik(candidate, x, durations, events)
            if candidate_ll >= ll - 1e-12:
                beta, ll = candidate, candidate_ll
                improved = True
                break
            step /= 2.0
        if not improved:
            break  # cannot make progress; report unconverged
        iterations += 1
    else:
        grad = cox_gradient(beta, x, durations, events)
        converged = bool(np.max(np.abs(grad)) / n < score_tol)
    if converged and np.max(np.abs(beta)) >= COEF_DIVERGENCE_BOUND:
        converged = False

    times, cumhaz = _breslow_baseline(beta, x, durations, events)
    return CoxFit(
        beta=beta,
        baseline_times=times,
        baseline_cumhaz=cumhaz,
        loglik=ll,
        converged=converged,
        iterations=iterations,
    )


def _breslow_baseline(beta, x, durations, events):
    """H0(t) = sum over event times <= t of d_k / sum(exp(eta) over risk set)."""
    eta = x @ beta
    w = np.exp(eta)
    event_times, deaths, risks = _risk_structures(durations, events)
    increments = np.array(
        [len(dead) / w[risk].sum() for dead, risk in zip(deaths, risks)]
    )
    return event_times.astype(float), np.cumsum(increments)
