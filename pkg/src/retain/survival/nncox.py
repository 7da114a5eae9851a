"""Neural Cox: a one-hidden-layer net replaces the linear predictor.

risk(x) = w2 . tanh(W1 x + b1). The output bias is omitted because the
partial likelihood is invariant to adding a constant to every risk score.
Training is full-batch gradient ascent on the Breslow partial
log-likelihood; weights start uniform in [-0.1, 0.1] from a seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_HIDDEN = 8
DEFAULT_RATE = 0.01
DEFAULT_EPOCHS = 500
INIT_SCALE = 0.1


@dataclass
class NeuralCoxNet:
    w1: np.ndarray  # hidden x p
    b1: np.ndarray  # hidden
    w2: np.ndarray  # hidden

    def risk(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        hidden = np.tanh(x @ self.w1.T + self.b1)
        return hidden @ self.w2

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.w1.ravel(), self.b1, self.w2])

    @staticmethod
    def unflatten(theta: np.ndarray, hidden: int, p: int) -> "NeuralCoxNet":
        w1 = theta[: hidden * p].reshape(hidden, p)
        b1 = theta[hidden * p : hidden * p + hidden]
        w2 = theta[hidden * p + hidden :]
        return NeuralCoxNet(w1=w1.copy(), b1=b1.copy(), w2=w2.copy())

    def to_dict(self) -> dict:
        return {
            "w1": [[float(v) for v in row] for row in self.w1],
            "b1": [float(v) for v in self.b1],
            "w2": [float(v) for v in self.w2],
        }

    @staticmethod
    def from_dict(obj: dict) -> "NeuralCoxNet":
        return NeuralCoxNet(
            w1=np.asarray(obj["w1"], dtype=float),
            b1=np.asarray(obj["b1"], dtype=float),
            w2=np.asarray(obj["w2"], dtype=float),
        )


def _risk_structures(durations: np.ndarray, events: np.ndarray):
    event_times = np.unique(durations[events == 1])
    deaths = [np.flatnonzero((durations == t) & (events == 1)) for t in event_times]
    risks = [np.flatnonzero(durations >= t) for t in event_times]
    return deaths, risks


def partial_loglik_of_risks(
    risks_scores: np.ndarray, durations: np.ndarray, events: np.ndarray
) -> float:
    """Breslow partial log-likelihood as a function of the risk scores."""
    deaths, risks = _risk_structures(durations, events)
    ll = 0.0
    for dead, risk in zip(deaths, risks):
        ll += risks_scores[dead].sum() - len(dead) * np.log(
            np.exp(risks_scores[risk]).sum()
        )
    return float(ll)


def _dll_drisk(
    risk_scores: np.ndarray, durations: np.ndarray, events: np.ndarray
) -> np.ndarray:
    """d loglik / d risk_i: event count minus summed soft risk-set shares."""
    deaths, risks = _risk_structures(durations, events)
    grad = np.zeros(len(risk_scores))
    for dead, risk in zip(deaths, risks):
        grad[dead] += 1.0
        w = np.exp(risk_scores[risk])
        grad[risk] -= len(dead) * w / w.sum()
    return grad


def nncox_loglik(
    net: NeuralCoxNet, x: np.ndarray, durations: np.ndarray, events: np.ndarray
) -> float:
    return partial_loglik_of_risks(net.risk(x), durations, events)


def nncox_gradient(
    net: NeuralCoxNet, x: np.ndarray, durations: np.ndarray, events: np.ndarray
) -> np.ndarray:
    """Gradient of the partial log-likelihood wrt flattened (w1, b1, w2)."""
    x = np.asarray(x, dtype=float)
    pre = x @ net.w1.T + net.b1  # n x hidden
    hidden = np.tanh(pre)
    risk_scores = hidden @ net.w2
    up = _dll_drisk(risk_scores, durations, events)  # n

    grad_w2 = hidden.T @ up
    back = (up[:, None] * net.w2[None, :]) * (1.0 - hidden**2)  # n x hidden
    grad_b1 = back.sum(axis=0)
    grad_w1 = back.T @ x  # hidden x p
    return np.concatenate([grad_w1.ravel(), grad_b1, grad_w2])


def init_net(p: int, hidden: int, seed: int) -> NeuralCoxNet:
    rng = np.random.default_rng(seed)
    n_params = hidden * p + hidden + hidden
    theta = rng.uniform(-INIT_SCALE, INIT_SCALE, size=n_params)
    return NeuralCoxNet.unflatten(theta, hidden, p)


def fit_nncox(
    x: np.ndarray,
    durations: np.ndarray,
    events: np.ndarray,
    seed: int,
    hidden: int = DEFAULT_HIDDEN,
    rate: float = DEFAULT_RATE,
    epochs: int = DEFAULT_EPOCHS,
) -> tuple[NeuralCoxNet, float, int]:
    """Full-batch gradient ascent; returns (net, final loglik, epochs run)."""
    x = np.asarray(x, dtype=float)
    durations = np.asarray(durations)
    events = np.asarray(events)
    if events.sum() < 1:
        raise ValueError("need at least one observed event")
    net = init_net(x.shape[1], hidden, seed)
    theta = net.flatten()
    p = x.shape[1]
    for _ in range(epochs):
        net = NeuralCoxNet.unflatten(theta, hidden, p)
        theta = theta + rate * nncox_gradient(net, x, durations, events)
    net = NeuralCoxNet.unflatten(theta, hidden, p)
    return net, nncox_loglik(net, x, durations, events), epochs
