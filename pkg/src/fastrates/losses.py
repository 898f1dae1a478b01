"""Concrete losses used by the example problems."""

from __future__ import annotations

import math

import numpy as np

from .core import Loss, Mixture

HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def absolute() -> Loss:
    """``|z - q|`` for labels z in {0, 1}; equals the 0/1 loss when q is 0 or 1.

    A fractional action q is the expected 0/1 loss of predicting 1 with probability q.
    """
    return Loss(
        "absolute",
        lambda q, z: abs(float(z) - float(q)),
        (0.0, 1.0),
        matrix_fn=lambda q, z: np.abs(z[None, :] - q[:, None]),
        domain=("interval", 0.0, 1.0),
    )


def zero_one() -> Loss:
    loss = absolute()
    return Loss("zero_one", loss.fn, loss.declared_range, matrix_fn=loss.matrix_fn, domain=loss.domain)


def squared(B: float | None = None) -> Loss:
    """``(z - f)**2 / 2``, bounded by ``2 B**2`` on ``[-B, B]``."""
    rng = None if B is None else (0.0, 2.0 * B * B)
    dom = None if B is None else ("interval", -B, B)
    return Loss(
        "squared",
        lambda f, z: 0.5 * (float(z) - float(f)) ** 2,
        rng,
        {} if B is None else {"B": B},
        quadratic=lambda f: (0.5, -float(f), 0.5 * float(f) ** 2),
        matrix_fn=lambda f, z: 0.5 * (z[None, :] - f[:, None]) ** 2,
        domain=dom,
    )


def gaussian_log_loss() -> Loss:
    """Negative log density of ``N(mu, 1)``; mixtures use the mixture density."""

    def fn(mu, z):
        if isinstance(mu, Mixture):
            logs = [math.log(w) - 0.5 * (z - m) ** 2 for w, m in zip(mu.weights, mu.actions) if w > 0]
            top = max(logs)
            return HALF_LOG_2PI - top - math.log(math.fsum(math.exp(v - top) for v in logs))
        return HALF_LOG_2PI + 0.5 * (float(z) - float(mu)) ** 2

    return Loss(
        "gaussian_log_loss",
        fn,
        None,
        quadratic=lambda mu: (0.5, -float(mu), 0.5 * float(mu) ** 2 + HALF_LOG_2PI),
        matrix_fn=lambda mu, z: HALF_LOG_2PI + 0.5 * (z[None, :] - mu[:, None]) ** 2,
    )


def log_loss(num_outcomes: int) -> Loss:
    """``-log q(z)`` for probability vectors q on outcomes ``0..K-1``."""

    def fn(q, z):
        if isinstance(q, Mixture):
            p = math.fsum(w * a[int(z)] for w, a in zip(q.weights, q.actions))
        else:
            p = q[int(z)]
        return math.inf if p <= 0 else -math.log(p)

    return Loss("log_loss", fn, None, {"num_outcomes": num_outcomes}, domain=("simplex", num_outcomes))


def brier(num_outcomes: int) -> Loss:
    """Squared distance between a forecast vector and the indicator of z."""

    def fn(q, z):
        z = int(z)
        return math.fsum((qi - (1.0 if i == z else 0.0)) ** 2 for i, qi in enumerate(q))

    return Loss("brier", fn, (0.0, 2.0), {"num_outcomes": num_outcomes}, domain=("simplex", num_outcomes))


LOSSES = {
    "absolute": absolute,
    "zero_one": zero_one,
    "squared": squared,
    "gaussian_log_loss": gaussian_log_loss,
    "log_loss": log_loss,
    "brier": brier,
}


def make_loss(name: str, params: dict | None = None) -> Loss:
    if name not in LOSSES:
        raise ValueError(f"unknown loss {name!r}")
    return LOSSES[name](**(params or {}))
