"""Sigmoid consistency metric and the two penalized objectives.

The consistency of an estimate ``x`` with the observed bits is

    phi(x) = sum_i log sigma(b_i a_i^T x),

a concave function of ``x``.  Both objectives minimize ``-phi(x)`` plus a
sparsity penalty: the log-sum ``lambda * sum log x_i^2`` or the l1 norm.
"""

from __future__ import annotations

import enum

import numpy as np
from scipy.special import expit

from onebit.exceptions import InvalidArgumentError


class PenaltyMode(enum.Enum):
    GAUSSIAN_ENTROPY = "gauss"
    L1 = "l1"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            raise InvalidArgumentError(
                f"unknown penalty mode {value!r}; expected 'gauss' or 'l1'") from None


def sigmoid(z):
    """Logistic function ``1 / (1 + exp(-z))``, overflow-free."""
    return expit(z)


def log_sigmoid(z):
    """``log sigma(z)`` evaluated as ``-log(1 + exp(-z))`` without overflow."""
    return -np.logaddexp(0.0, -np.asarray(z, dtype=float))


def _check(x, instance):
    x = np.asarray(x, dtype=float)
    if x.shape != (instance.n,):
        raise InvalidArgumentError(
            f"x has shape {x.shape}, instance expects ({instance.n},)")
    return x


def margins(x, instance):
    """Vector of ``b_i a_i^T x``; positive entries are consistent bits."""
    x = _check(x, instance)
    return instance.signs * (instance.matrix @ x)


def consistency(x, instance) -> float:
    return float(np.sum(log_sigmoid(margins(x, instance))))


def consistency_gradient(x, instance) -> np.ndarray:
    """Gradient of ``phi``: ``sum_i (1 - sigma(z_i)) b_i a_i``."""
    z = margins(x, instance)
    return instance.matrix.T @ (instance.signs * expit(-z))


def consistency_hessian(x, instance) -> np.ndarray:
    """Hessian of ``phi``: ``-sum_i sigma(z_i)(1 - sigma(z_i)) a_i a_i^T``.

    Assembled densely; it is negative semidefinite.
    """
    z = margins(x, instance)
    s = expit(z)
    curv = s * (1.0 - s)
    A = instance.matrix
    H = -(A.T @ (curv[:, None] * A))
    return 0.5 * (H + H.T)


def penalty(x, mode, active=None) -> float:
    """Unscaled sparsity penalty (without the ``lambda`` factor).

    In log-sum mode the sum runs over ``active`` (default: the nonzero
    entries of ``x``); an explicitly active coordinate equal to zero is a
    precondition violation because the penalty is unbounded there.
    """
    mode = PenaltyMode.parse(mode)
    x = np.asarray(x, dtype=float)
    if mode is PenaltyMode.L1:
        return float(np.sum(np.abs(x)))
    if active is None:
        xa = x[x != 0.0]
    else:
        xa = x[np.asarray(active, dtype=int)]
        if np.any(xa == 0.0):
            raise InvalidArgumentError("log-sum penalty evaluated at a zero active coordinate")
    return float(np.sum(np.log(xa * xa)))


def objective(x, instance, lam, mode, active=None) -> float:
    """``-phi(x) + lam * penalty(x)`` for the chosen penalty mode."""
    if not lam > 0:
        raise InvalidArgumentError(f"lambda must be positive, got {lam}")
    return -consistency(x, instance) + lam * penalty(x, mode, active)
