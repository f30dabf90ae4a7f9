"""Support-recovery scoring against a known ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from onebit.exceptions import InvalidArgumentError


@dataclass(frozen=True)
class SupportScore:
    """False alarms are true zeros reported nonzero; misses are the converse.

    Rates are per coefficient: false alarms over the ``n - K`` true zeros
    (0 when ``K = n``), misses over the ``K`` true nonzeros.
    """

    false_alarms: int
    misses: int
    n: int
    k: int

    @property
    def false_alarm_rate(self) -> float:
        return self.false_alarms / (self.n - self.k) if self.k < self.n else 0.0

    @property
    def miss_rate(self) -> float:
        return self.misses / self.k if self.k > 0 else 0.0


def extract_support(x, tau: float = 1e-2) -> frozenset:
    """Indices with ``|x_i| > tau * max_j |x_j|``; empty for the zero vector."""
    if tau < 0:
        raise InvalidArgumentError(f"tau must be nonnegative, got {tau}")
    mags = np.abs(np.asarray(x, dtype=float))
    if mags.size == 0:
        return frozenset()
    top = mags.max()
    if top == 0:
        return frozenset()
    return frozenset(np.flatnonzero(mags > tau * top).tolist())


def score_support(true_support, est_support, n: int) -> SupportScore:
    true_support, est_support = set(true_support), set(est_support)
    for i in true_support | est_support:
        if not 0 <= i < n:
            raise InvalidArgumentError(f"index {i} outside [0, {n})")
    return SupportScore(
        false_alarms=len(est_support - true_support),
        misses=len(true_support - est_support),
        n=n,
        k=len(true_support),
    )


def unit_sphere_error(x_true, x_est) -> float:
    """Distance between the two directions after projecting onto the unit sphere."""
    x_true = np.asarray(x_true, dtype=float)
    x_est = np.asarray(x_est, dtype=float)
    if x_true.shape != x_est.shape:
        raise InvalidArgumentError("vectors must have equal length")
    nt, ne = np.linalg.norm(x_true), np.linalg.norm(x_est)
    if nt == 0 or ne == 0:
        raise InvalidArgumentError("unit_sphere_error is undefined for a zero vector")
    err = float(np.linalg.norm(x_true / nt - x_est / ne))
    return min(err, 2.0) if math.isfinite(err) else err
