"""Optimization algorithms: the two-stepsize federated method and baselines.

One run is T communication rounds. Each round samples a cohort, lets every
cohort client take one pass over its data (a fresh or fixed permutation,
depending on the mode), aggregates the per-client mean gradients in
ascending client order, and applies the server stepsize to the aggregate.

Structured problems execute their local passes through the kernel backend;
anything else falls back to the per-sample oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels as kernels
from .errors import DivergenceError, InputError
from .problems import (
    ClientDataset,
    FederatedProblem,
    LogisticData,
    QuadraticData,
    RationalData,
    as_vector,
    value_and_grad,
)
from .sampling import (
    CohortSample,
    Permutation,
    Purpose,
    derive_stream,
    sample_cohort,
    sample_indices_with_replacement,
    sample_permutation,
)


class Mode(Enum):
    SHUFFLE_ONCE = "shuffle_once"
    RANDOM_RESHUFFLING = "random_reshuffling"


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Stepsizes, cohort size, horizon and seed for one run."""

    cstep: float  # client stepsize, > 0
    sstep: float  # server stepsize, >= 0 (0 gives the identity update)
    cohort_size: int
    horizon: int
    x0: np.ndarray
    mode: Mode = Mode.RANDOM_RESHUFFLING
    seed: int = 0

    def __post_init__(self):
        if self.cstep <= 0:
            raise InputError(f"client stepsize must be > 0, got {self.cstep}")
        if self.sstep < 0:
            raise InputError(f"server stepsize must be >= 0, got {self.sstep}")
        if self.cohort_size < 1:
            raise InputError("cohort size must be >= 1")
        if self.horizon < 1:
            raise InputError("horizon must be >= 1")
        object.__setattr__(self, "x0", as_vector(self.x0))


@dataclass(frozen=True)
class RoundTrace:
    """Scalars recorded at the start of round t (state at x_t).

    g_norm_sq and cohort describe the update computed during round t; the
    final entry of a run (state at x_T, no further update) carries NaN and
    None there.
    """

    round: int
    f_val: float
    grad_norm_sq: float
    dist_sq: float | None
    g_norm_sq: float
    cohort: CohortSample | None


@dataclass(frozen=True, eq=False)
class RunResult:
    """Traces for rounds 0..T plus the final iterate.

    When a run diverges, traces stop at the last round whose state was
    still finite and `avg_iterate` is None. Otherwise `avg_iterate` is the
    mean of x_1..x_T, the iterate average that the convex-regime bound
    speaks about.
    """

    traces: tuple[RoundTrace, ...]
    x_final: np.ndarray
    diverged: bool
    avg_iterate: np.ndarray | None


def _state_metrics(
    problem: FederatedProblem, x: np.ndarray
) -> tuple[float, float, float | None]:
    f, g = value_and_grad(problem, x)
    gn = float(g @ g)
    dist = None
    if problem.x_star is not None:
        diff = x - problem.x_star
        dist = float(diff @ diff)
    return f, gn, dist


def local_pass_indices(
    client: ClientDataset, x_t: np.ndarray, gamma: float, indices
) -> tuple[np.ndarray, np.ndarray]:
    """One sequential pass over the listed sample indices (oracle path).

    Returns the end iterate and the mean of the gradients applied, which in
    exact arithmetic equals (x_t - x_end) / (gamma * len(indices)).
    """
    if gamma <= 0:
        raise InputError(f"client stepsize must be > 0, got {gamma}")
    x = np.array(x_t, dtype=np.float64)
    gsum = np.zeros_like(x)
    for i in indices:
        g = client.samples[i].grad(x)
        gsum += g
        x = x - gamma * g
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(gsum))):
        raise DivergenceError(-1, "local pass")
    return x, gsum / len(indices)


def local_pass_rr(
    client: ClientDataset, x_t: np.ndarray, gamma: float, pi: Permutation
) -> tuple[np.ndarray, np.ndarray]:
    """One pass over the client data in the order dictated by `pi`."""
    if len(pi) != client.n:
        raise InputError(
            f"permutation length {len(pi)} does not match client size {client.n}"
        )
    x_t = as_vector(x_t, client.dim)
    return local_pass_indices(client, x_t, gamma, pi.order)


def _batch_pass(
    problem: FederatedProblem,
    x: np.ndarray,
    gamma: float,
    clients: np.ndarray,
    idx: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Run the local passes of all cohort clients; kernel path when possible."""
    data = problem.data
    if isinstance(data, QuadraticData):
        ends, gs = kernels.quad_pass(data.hessians, data.centers, clients, idx, x, gamma)
    elif isinstance(data, LogisticData):
        ends, gs = kernels.logreg_pass(
            data.features, data.labels, data.lam, clients, idx, x, gamma
        )
    elif isinstance(data, RationalData):
        ends, gs = kernels.rat_pass(data.slopes, data.offsets, clients, idx, x, gamma)
    else:
        ends = np.empty((len(clients), x.size))
        gs = np.empty_like(ends)
        for c, m in enumerate(clients):
            ends[c], gs[c] = local_pass_indices(
                problem.clients[m], x, gamma, [int(v) for v in idx[c]]
            )
    if not (np.all(np.isfinite(ends)) and np.all(np.isfinite(gs))):
        raise DivergenceError(-1, "local pass")
    return ends, gs


def _round_indices(
    problem: FederatedProblem, cfg: RunConfig, t: int, cohort: CohortSample, *,
    with_replacement: bool,
) -> np.ndarray:
    n = problem.samples_per_client
    rows = []
    for m in cohort.members:
        if with_replacement:
            stream = derive_stream(cfg.seed, t, m, Purpose.PERMUTATION)
            rows.append(sample_indices_with_replacement(n, n, stream))
        else:
            perm_round = 0 if cfg.mode is Mode.SHUFFLE_ONCE else t
            stream = derive_stream(cfg.seed, perm_round, m, Purpose.PERMUTATION)
            rows.append(sample_permutation(n, stream).order)
    return np.array(rows, dtype=np.int64)


def _aggregate(gs: np.ndarray) -> np.ndarray:
    # fixed-order sequential reduction: bitwise deterministic regardless of
    # how the per-client passes were scheduled
    total = gs[0].copy()
    for c in range(1, gs.shape[0]):
        total += gs[c]
    return total / gs.shape[0]


def _one_round(
    problem: FederatedProblem,
    x_t: np.ndarray,
    cfg: RunConfig,
    t: int,
    *,
    with_replacement: bool,
) -> tuple[np.ndarray, RoundTrace]:
    cohort = sample_cohort(
        problem.num_clients,
        cfg.cohort_size,
        derive_stream(cfg.seed, t, None, Purpose.COHORT),
    )
    idx = _round_indices(problem, cfg, t, cohort, with_replacement=with_replacement)
    clients = np.array(cohort.members, dtype=np.int64)
    _, gs = _batch_pass(problem, x_t, cfg.cstep, clients, idx)
    g_t = _aggregate(gs)
    x_next = x_t - cfg.sstep * g_t
    f, gn, dist = _state_metrics(problem, x_t)
    trace = RoundTrace(
        round=t,
        f_val=f,
        grad_norm_sq=gn,
        dist_sq=dist,
        g_norm_sq=float(g_t @ g_t),
        cohort=cohort,
    )
    if not (math.isfinite(f) and math.isfinite(gn) and np.all(np.isfinite(x_next))):
        raise DivergenceError(t)
    return x_next, trace


def nastya_round(
    problem: FederatedProblem, x_t: np.ndarray, cfg: RunConfig, t: int
) -> tuple[np.ndarray, RoundTrace]:
    """One communication round: cohort, local passes, aggregate, server step."""
    _validate(problem, cfg)
    x_t = as_vector(x_t, problem.dim)
    return _one_round(problem, x_t, cfg, t, with_replacement=False)


def extrapolation_update(
    x_t: np.ndarray, x_ends: np.ndarray, beta: float
) -> np.ndarray:
    """Average the local end iterates and leap beyond them by factor beta.

    With beta = sstep/(cstep*n) - 1 this reproduces the server step applied
    to the aggregated direction, up to floating-point reassociation.
    """
    x_ends = np.atleast_2d(np.asarray(x_ends, dtype=np.float64))
    ends_mean = x_ends.mean(axis=0)
    return ends_mean + beta * (ends_mean - x_t)


def interpolation_update(
    x_t: np.ndarray, x_ends: np.ndarray, alpha: float
) -> np.ndarray:
    """Blend the old iterate with the averaged end iterate: (1-a) x_t + a avg."""
    if alpha < 0:
        raise InputError(f"interpolation coefficient must be >= 0, got {alpha}")
    x_ends = np.atleast_2d(np.asarray(x_ends, dtype=np.float64))
    return (1.0 - alpha) * x_t + alpha * x_ends.mean(axis=0)


def _validate(problem: FederatedProblem, cfg: RunConfig) -> None:
    if cfg.cohort_size > problem.num_clients:
        raise InputError(
            f"cohort size {cfg.cohort_size} exceeds client count {problem.num_clients}"
        )
    if cfg.x0.size != problem.dim:
        raise InputError(
            f"x0 has dimension {cfg.x0.size}, problem has {problem.dim}"
        )


def _run(
    problem: FederatedProblem, cfg: RunConfig, *, with_replacement: bool
) -> RunResult:
    _validate(problem, cfg)
    x = cfg.x0.copy()
    traces: list[RoundTrace] = []
    xsum = np.zeros_like(x)
    for t in range(cfg.horizon):
        try:
            # overflow on the way to divergence is detected via isfinite
            with np.errstate(over="ignore", invalid="ignore"):
                x_next, trace = _one_round(
                    problem, x, cfg, t, with_replacement=with_replacement
                )
        except DivergenceError:
            return RunResult(
                traces=tuple(traces), x_final=x, diverged=True, avg_iterate=None
            )
        traces.append(trace)
        x = x_next
        xsum += x
    f, gn, dist = _state_metrics(problem, x)
    if not (math.isfinite(f) and math.isfinite(gn)):
        return RunResult(
            traces=tuple(traces), x_final=x, diverged=True, avg_iterate=None
        )
    traces.append(
        RoundTrace(
            round=cfg.horizon,
            f_val=f,
            grad_norm_sq=gn,
            dist_sq=dist,
            g_norm_sq=math.nan,
            cohort=None,
        )
    )
    return RunResult(
        traces=tuple(traces),
        x_final=x,
        diverged=False,
        avg_iterate=xsum / cfg.horizon,
    )


def run_nastya(problem: FederatedProblem, cfg: RunConfig) -> RunResult:
    """Run T rounds of the two-stepsize method. Deterministic given cfg."""
    return _run(problem, cfg, with_replacement=False)


def run_local_sgd_wr(problem: FederatedProblem, cfg: RunConfig) -> RunResult:
    """With-replacement baseline: local indices drawn i.i.d. instead of a
    permutation, n draws per round; everything else identical."""
    return _run(problem, cfg, with_replacement=True)


def run_gd(
    problem: FederatedProblem, step: float, T: int, x0: np.ndarray
) -> RunResult:
    """Plain full-gradient descent, the vanishing-client-stepsize limit."""
    if step <= 0:
        raise InputError(f"stepsize must be > 0, got {step}")
    if T < 1:
        raise InputError("horizon must be >= 1")
    x = as_vector(x0, problem.dim).copy()
    traces: list[RoundTrace] = []
    xsum = np.zeros_like(x)
    for t in range(T):
        with np.errstate(over="ignore", invalid="ignore"):
            f, g = value_and_grad(problem, x)
            gn = float(g @ g)
        dist = None
        if problem.x_star is not None:
            diff = x - problem.x_star
            dist = float(diff @ diff)
        x_next = x - step * g
        if not (math.isfinite(f) and math.isfinite(gn) and np.all(np.isfinite(x_next))):
            return RunResult(
                traces=tuple(traces), x_final=x, diverged=True, avg_iterate=None
            )
        traces.append(
            RoundTrace(
                round=t, f_val=f, grad_norm_sq=gn, dist_sq=dist,
                g_norm_sq=gn, cohort=None,
            )
        )
        x = x_next
        xsum += x
    f, gn, dist = _state_metrics(problem, x)
    if not (math.isfinite(f) and math.isfinite(gn)):
        return RunResult(
            traces=tuple(traces), x_final=x, diverged=True, avg_iterate=None
        )
    traces.append(
        RoundTrace(
            round=T, f_val=f, grad_norm_sq=gn, dist_sq=dist,
            g_norm_sq=math.nan, cohort=None,
        )
    )
    return RunResult(
        traces=tuple(traces), x_final=x, diverged=False, avg_iterate=xsum / T
    )
