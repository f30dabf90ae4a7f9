"""Iterative reweighted majorization-minimization for one-bit recovery.

Each outer iteration replaces the sparsity penalty by a quadratic upper
bound that touches it at the current estimate ``x_hat``:

    log x^2  <=  x^2 / x_hat^2 + log x_hat^2 - 1          (log-sum)
    |x|      <=  (x^2 / |x_hat| + |x_hat|) / 2             (l1)

so the surrogate is ``-phi(x) + sum_i c_i x_i^2 + const`` with
``c_i = lam / x_hat_i^2`` or ``c_i = lam / (2 |x_hat_i|)``.  The surrogate
is strictly convex and is minimized by a damped Newton method.  Minimizing
it can only lower the true objective, and coordinates that collapse below
a relative threshold are pruned to exact zero.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import scipy.linalg

from onebit.exceptions import (
    DegenerateSolutionError,
    InvalidArgumentError,
    NumericalFailureError,
)
from onebit.loss import PenaltyMode, log_sigmoid, objective
from scipy.special import expit

logger = logging.getLogger(__name__)

_ARMIJO = 1e-4
_MAX_HALVINGS = 60
_DELTA0 = 1e-10
_DELTA_ESCALATIONS = 6


@dataclass(frozen=True)
class RandomUnit:
    """Initialize from a uniformly random direction on the unit sphere."""

    seed: int

    def draw(self, n):
        v = np.random.default_rng([int(self.seed), 2]).standard_normal(n)
        return v / np.linalg.norm(v)


InitSpec = Union[str, RandomUnit, np.ndarray]


def parse_init(spec) -> InitSpec:
    """Accept ``"matched"``, ``"random:SEED"``, a :class:`RandomUnit` or a vector."""
    if isinstance(spec, RandomUnit):
        return spec
    if isinstance(spec, str):
        if spec == "matched":
            return spec
        if spec.startswith("random:"):
            try:
                seed = int(spec.split(":", 1)[1])
            except ValueError:
                raise InvalidArgumentError(f"bad random init {spec!r}") from None
            if seed < 0:
                raise InvalidArgumentError("random init seed must be unsigned")
            return RandomUnit(seed)
        raise InvalidArgumentError(f"unknown init {spec!r}")
    return np.asarray(spec, dtype=float)


@dataclass(frozen=True)
class SolverConfig:
    mode: PenaltyMode = PenaltyMode.GAUSSIAN_ENTROPY
    lam: float = 0.5
    outer_tol: float = 1e-6
    max_outer: int = 200
    newton_tol: float = 1e-9
    max_newton: int = 50
    prune_threshold: float = 1e-8
    init: InitSpec = "matched"

    def __post_init__(self):
        object.__setattr__(self, "mode", PenaltyMode.parse(self.mode))
        object.__setattr__(self, "init", parse_init(self.init))
        for name in ("lam", "outer_tol", "newton_tol", "prune_threshold"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidArgumentError(f"{name} must be positive, got {value}")
        for name in ("max_outer", "max_newton"):
            if int(getattr(self, name)) < 1:
                raise InvalidArgumentError(f"{name} must be at least 1")


@dataclass(frozen=True)
class SolveResult:
    estimate: np.ndarray
    support: frozenset
    outer_iterations: int
    objective_trace: tuple
    trace_active_sizes: tuple
    converged: bool
    wall_time: float
    active_history: tuple = field(default=(), repr=False)

    def trace_segments(self):
        """Split the objective trace into runs with a fixed active set.

        The objective is only comparable between iterations that penalize
        the same coordinates; pruning starts a new segment.
        """
        segments, current, last = [], [], None
        for value, size in zip(self.objective_trace, self.trace_active_sizes):
            if last is not None and size != last:
                segments.append(current)
                current = []
            current.append(value)
            last = size
        if current:
            segments.append(current)
        return segments


def build_weights(x_hat, mode) -> np.ndarray:
    """Reweighting from the current estimate: ``x_hat^-2`` or ``|x_hat|^-1``."""
    mode = PenaltyMode.parse(mode)
    x_hat = np.asarray(x_hat, dtype=float)
    if np.any(x_hat == 0.0) or not np.all(np.isfinite(x_hat)):
        raise InvalidArgumentError("weights need finite nonzero entries; prune first")
    if mode is PenaltyMode.GAUSSIAN_ENTROPY:
        return 1.0 / (x_hat * x_hat)
    return 1.0 / np.abs(x_hat)


def _quadratic_coef(weights, lam, mode):
    if mode is PenaltyMode.GAUSSIAN_ENTROPY:
        return lam * weights
    return 0.5 * lam * weights


def _surrogate_constant(x_hat_active, lam, mode):
    if mode is PenaltyMode.GAUSSIAN_ENTROPY:
        return lam * float(np.sum(np.log(x_hat_active * x_hat_active) - 1.0))
    return 0.5 * lam * float(np.sum(np.abs(x_hat_active)))


def _resolve_active(x_hat, active):
    if active is None:
        return np.flatnonzero(x_hat)
    return np.asarray(sorted(active), dtype=int)


def surrogate_value(x, x_hat, instance, lam, mode, active=None) -> float:
    """Majorizer ``Q(x | x_hat)`` including its constant terms.

    ``Q(x_hat | x_hat)`` equals :func:`onebit.loss.objective` at ``x_hat``.
    Coordinates outside ``active`` (default: nonzero entries of ``x_hat``)
    are held at zero and must be zero in ``x``.
    """
    mode = PenaltyMode.parse(mode)
    if not lam > 0:
        raise InvalidArgumentError(f"lambda must be positive, got {lam}")
    x = np.asarray(x, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if x.shape != (instance.n,) or x_hat.shape != (instance.n,):
        raise InvalidArgumentError("x and x_hat must both have length n")
    idx = _resolve_active(x_hat, active)
    inactive = np.ones(instance.n, dtype=bool)
    inactive[idx] = False
    if np.any(x[inactive] != 0.0):
        raise InvalidArgumentError("x is nonzero on a coordinate outside the active set")
    coef = _quadratic_coef(build_weights(x_hat[idx], mode), lam, mode)
    data = -float(np.sum(log_sigmoid(instance.signs * (instance.matrix @ x))))
    return data + float(np.sum(coef * x[idx] ** 2)) + _surrogate_constant(x_hat[idx], lam, mode)


class _Surrogate:
    """Surrogate restricted to the active columns, up to its constant."""

    def __init__(self, instance, coef, idx):
        self.BA = instance.signs[:, None] * instance.matrix[:, idx]
        self.coef = coef

    def value(self, u):
        z = self.BA @ u
        return -float(np.sum(log_sigmoid(z))) + float(np.sum(self.coef * u * u))

    def gradient(self, u):
        z = self.BA @ u
        return -(self.BA.T @ expit(-z)) + 2.0 * self.coef * u

    def hessian(self, u):
        s = expit(self.BA @ u)
        H = self.BA.T @ ((s * (1.0 - s))[:, None] * self.BA)
        H[np.diag_indices_from(H)] += 2.0 * self.coef
        return H


def _newton_direction(H, g, iteration):
    # Symmetric Jacobi scaling: weights on nearly pruned coordinates reach
    # 1e16 and would otherwise wreck the conditioning of the factorization.
    d = 1.0 / np.sqrt(np.diag(H))
    Hs = d[:, None] * H * d[None, :]
    delta = _DELTA0
    for _ in range(_DELTA_ESCALATIONS + 1):
        try:
            factor = scipy.linalg.cho_factor(
                Hs + delta * np.eye(Hs.shape[0]), lower=True, check_finite=True)
            v = scipy.linalg.cho_solve(factor, -d * g)
        except (np.linalg.LinAlgError, ValueError):
            delta *= 10.0
            continue
        if np.all(np.isfinite(v)):
            return d * v
        delta *= 10.0
    raise NumericalFailureError(iteration)


def minimize_surrogate(instance, lam, weights, active, x_start, cfg: SolverConfig) -> np.ndarray:
    """Minimize the convex surrogate over the active coordinates.

    Parameters
    ----------
    instance : ProblemInstance
    lam : float
        Sparsity trade-off.
    weights : ndarray
        Positive weights, one per entry of ``active`` (see :func:`build_weights`).
    active : sequence of int
        Free coordinates; all others stay at zero.
    x_start : ndarray
        Length-n starting point.
    cfg : SolverConfig
        Supplies the penalty mode and the Newton tolerance and cap.

    Returns
    -------
    ndarray
        Length-n minimizer, zero off the active set.  The surrogate value at
        the returned point never exceeds its value at ``x_start``.
    """
    idx = np.asarray(sorted(active), dtype=int)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != idx.shape:
        raise InvalidArgumentError("need exactly one weight per active coordinate")
    if np.any(~np.isfinite(weights)) or np.any(weights <= 0):
        raise InvalidArgumentError("weights must be finite and positive")
    if not lam > 0:
        raise InvalidArgumentError(f"lambda must be positive, got {lam}")
    x_start = np.asarray(x_start, dtype=float)
    if x_start.shape != (instance.n,):
        raise InvalidArgumentError("x_start must have length n")

    surr = _Surrogate(instance, _quadratic_coef(weights, lam, cfg.mode), idx)
    u0 = x_start[idx].copy()
    u = u0.copy()
    q0 = q = surr.value(u)
    for it in range(cfg.max_newton):
        g = surr.gradient(u)
        if np.linalg.norm(g) <= cfg.newton_tol:
            break
        p = _newton_direction(surr.hessian(u), g, it)
        slope = float(g @ p)
        if slope >= 0:
            break
        # Inside the quadratic-convergence region the decrease is below the
        # rounding floor of q, so the Armijo test is meaningless there.
        if -slope <= 1e-13 * max(1.0, abs(q)):
            u = u + p
            q = surr.value(u)
            continue
        step = 1.0
        for _ in range(_MAX_HALVINGS):
            trial = u + step * p
            q_trial = surr.value(trial)
            if q_trial <= q + _ARMIJO * step * slope:
                break
            step *= 0.5
        else:
            break
        u, q = trial, q_trial
    if q > q0:
        u = u0
    x = np.zeros(instance.n)
    x[idx] = u
    return x


def _initial_point(instance, init):
    if isinstance(init, str):
        return instance.matrix.T @ instance.signs
    if isinstance(init, RandomUnit):
        return init.draw(instance.n)
    x0 = np.asarray(init, dtype=float)
    if x0.shape != (instance.n,):
        raise InvalidArgumentError("initial vector must have length n")
    return x0.copy()


def _prune(x, active, threshold):
    # Relative rule keeps pruning invariant to the (meaningless) scale of x.
    mags = np.abs(x[active])
    top = mags.max() if mags.size else 0.0
    keep = mags >= threshold * top if top > 0 else np.zeros(mags.size, dtype=bool)
    dropped = active[~keep]
    x[dropped] = 0.0
    return active[keep]


def solve(instance, cfg: Optional[SolverConfig] = None) -> SolveResult:
    """Recover a unit-norm sparse direction from the instance's sign bits.

    Alternates between reweighting from the current estimate and minimizing
    the resulting surrogate, pruning collapsed coordinates, until successive
    estimates move by at most ``cfg.outer_tol`` or ``cfg.max_outer``
    iterations have run.

    Raises
    ------
    DegenerateSolutionError
        If every coordinate is pruned.
    NumericalFailureError
        If an inner Newton system cannot be solved.
    """
    cfg = cfg or SolverConfig()
    started = time.perf_counter()
    x = _initial_point(instance, cfg.init)
    active = np.flatnonzero(x)
    if active.size:
        active = _prune(x, active, cfg.prune_threshold)
    if active.size == 0:
        raise DegenerateSolutionError("initial point is zero")

    trace, sizes, history = [], [], []
    converged = False
    iterations = 0
    for t in range(cfg.max_outer):
        trace.append(objective(x, instance, cfg.lam, cfg.mode, active))
        sizes.append(int(active.size))
        history.append(tuple(active.tolist()))
        weights = build_weights(x[active], cfg.mode)
        x_new = minimize_surrogate(instance, cfg.lam, weights, active, x, cfg)
        active = _prune(x_new, active, cfg.prune_threshold)
        iterations = t + 1
        if active.size == 0:
            raise DegenerateSolutionError(f"all coordinates pruned at iteration {iterations}")
        displacement = float(np.linalg.norm(x_new - x))
        x = x_new
        if displacement <= cfg.outer_tol:
            converged = True
            break
    trace.append(objective(x, instance, cfg.lam, cfg.mode, active))
    sizes.append(int(active.size))
    history.append(tuple(active.tolist()))

    estimate = x / np.linalg.norm(x)
    support = frozenset(np.flatnonzero(estimate).tolist())
    elapsed = time.perf_counter() - started
    logger.debug("solve: %d outer iterations, converged=%s, |support|=%d",
                 iterations, converged, len(support))
    return SolveResult(
        estimate=estimate,
        support=support,
        outer_iterations=iterations,
        objective_trace=tuple(trace),
        trace_active_sizes=tuple(sizes),
        converged=converged,
        wall_time=elapsed,
        active_history=tuple(history),
    )
