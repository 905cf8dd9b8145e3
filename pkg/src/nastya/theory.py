"""Heterogeneity statistics and evaluable convergence upper bounds.

Every bound evaluator validates the stepsize range it is proved for and
reports the violated inequality otherwise. Each evaluator also has an
independently coded reference twin (plain floats, explicit loops) used to
cross-check the formula transcription.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .engine import RunConfig
from .errors import CapabilityError, DataError, InputError, RegimeError
from .problems import (
    FederatedProblem,
    QuadraticData,
    client_subproblem,
    estimate_f_star,
    eval_f,
    solve_quadratic_optimum,
)


class Theorem(Enum):
    SC = "sc"
    CVX = "cvx"
    NCVX = "ncvx"
    SMALL_ALPHA = "small_alpha"


def participation_factor(M: int, C: int) -> float:
    """Multiplier (M-C)/(C*max(M-1,1)) on client-sampling variance."""
    if not 1 <= C <= M:
        raise InputError(f"cohort size must satisfy 1 <= C <= {M}, got {C}")
    return (M - C) / (C * max(M - 1, 1))


@dataclass(frozen=True, eq=False)
class HeterogeneityStats:
    """Gradient variance and functional dissimilarity at the optimum.

    The delta fields need every sample's infimum and are None when some
    sample does not carry one. `estimate_tol` is the slack inherited from
    estimated infima; exact problems have 0.
    """

    sigma_star_sq: float
    sigma_star_m_sq: np.ndarray  # (M,)
    Sigma_star_sq: float
    delta_star: float | None
    delta_star_m: np.ndarray | None  # (M,)
    D_star_sq: float | None
    n: int
    estimate_tol: float = 0.0

    @property
    def M(self) -> int:
        return int(self.sigma_star_m_sq.size)


def _client_infimum(problem: FederatedProblem, m: int, tol: float) -> tuple[float, float]:
    """Infimum of one client's local objective, exact for quadratics.

    Returns (value, slack) where slack bounds the estimation error term
    carried into the dissimilarity statistics.
    """
    sub = client_subproblem(problem, m)
    if isinstance(sub.data, QuadraticData):
        x_m = solve_quadratic_optimum(sub)
        return eval_f(sub, x_m), 0.0
    est = estimate_f_star(sub, restarts=6, tol=tol)
    return est.value, tol


def heterogeneity_stats(
    problem: FederatedProblem,
    x_star: np.ndarray | None,
    f_star: float | None,
) -> HeterogeneityStats:
    """Compute all heterogeneity measures of a problem at its optimum."""
    if x_star is None:
        raise CapabilityError("x_star", "needed for gradient variance at the optimum")
    M = problem.num_clients
    n = problem.samples_per_client
    G = np.empty((M, n, problem.dim))
    for m, client in enumerate(problem.clients):
        for i, sample in enumerate(client.samples):
            G[m, i] = sample.grad(np.asarray(x_star, dtype=np.float64))
    sigma_star_m_sq = np.einsum("mid,mid->mi", G, G).mean(axis=1)
    client_grads = G.mean(axis=1)
    sigma_star_sq = float(np.einsum("md,md->m", client_grads, client_grads).mean())
    Sigma_star_sq = float(sigma_star_m_sq.mean()) + n * sigma_star_sq

    infima = [
        [sample.infimum for sample in client.samples] for client in problem.clients
    ]
    have_infima = all(v is not None for row in infima for v in row)
    delta_star = None
    delta_star_m = None
    D_star_sq = None
    tol = problem.f_star_tol or 0.0
    if have_infima:
        if f_star is None:
            raise CapabilityError("f_star", "needed for functional dissimilarity")
        inf_arr = np.array(infima, dtype=np.float64)
        delta_star_m = f_star - inf_arr.mean(axis=1)
        descent_tol = 1e-9
        client_infs = np.empty(M)
        slack = 0.0
        for m in range(M):
            client_infs[m], s = _client_infimum(problem, m, descent_tol)
            slack = max(slack, s)
        delta_star = float(f_star - client_infs.mean())
        D_star_sq = float(delta_star_m.mean()) + n * delta_star
        tol += slack
    return HeterogeneityStats(
        sigma_star_sq=sigma_star_sq,
        sigma_star_m_sq=sigma_star_m_sq,
        Sigma_star_sq=Sigma_star_sq,
        delta_star=delta_star,
        delta_star_m=delta_star_m,
        D_star_sq=D_star_sq,
        n=n,
        estimate_tol=tol,
    )


@dataclass(frozen=True, eq=False)
class BoundCurve:
    """Per-round values of a convergence upper bound and its summands."""

    theorem: Theorem
    values: np.ndarray  # (T+1,)
    terms: dict[str, np.ndarray]


def _check_large_server_regime(cfg: RunConfig, L: float, n: int) -> None:
    if cfg.cstep * n > cfg.sstep:
        raise RegimeError(
            f"cstep*n <= sstep (cstep*n = {cfg.cstep * n:.6g}, sstep = {cfg.sstep:.6g})"
        )
    if cfg.sstep > 1.0 / (16.0 * L):
        raise RegimeError(
            f"sstep <= 1/(16*L) (sstep = {cfg.sstep:.6g}, 1/(16*L) = {1.0 / (16.0 * L):.6g})"
        )


def bound_sc(
    stats: HeterogeneityStats,
    mu: float,
    L: float,
    cfg: RunConfig,
    dist0_sq: float,
) -> BoundCurve:
    """Distance bound for the strongly convex regime, per round 0..T.

    Contraction of the initial distance plus two flat variance floors: the
    client-stepsize (shuffling) term and the client-sampling term, the
    latter exactly 0 under full participation.
    """
    if mu <= 0:
        raise InputError("strong convexity constant must be > 0")
    _check_large_server_regime(cfg, L, stats.n)
    T = cfg.horizon
    pf = participation_factor(stats.M, cfg.cohort_size)
    t = np.arange(T + 1)
    contraction = (1.0 - cfg.sstep * mu / 2.0) ** t * dist0_sq
    client_variance = np.full(
        T + 1, 5.0 * cfg.cstep**2 * stats.n * L / mu * stats.Sigma_star_sq
    )
    participation = np.full(T + 1, 8.0 * cfg.sstep / mu * pf * stats.sigma_star_sq)
    terms = {
        "contraction": contraction,
        "client_variance": client_variance,
        "participation": participation,
    }
    return BoundCurve(Theorem.SC, contraction + client_variance + participation, terms)


def bound_cvx(
    stats: HeterogeneityStats, L: float, cfg: RunConfig, dist0_sq: float
) -> float:
    """Suboptimality bound for the convex regime at the iterate average.

    Bounds the expected gap f(mean of x_1..x_T) - f_star.
    """
    _check_large_server_regime(cfg, L, stats.n)
    T = cfg.horizon
    pf = participation_factor(stats.M, cfg.cohort_size)
    return (
        5.0 * dist0_sq / (2.0 * cfg.sstep * T)
        + 7.0 * cfg.cstep**2 * stats.n * L * stats.Sigma_star_sq
        + 10.0 * cfg.sstep * pf * stats.sigma_star_sq
    )


def bound_ncvx(
    stats: HeterogeneityStats, L: float, cfg: RunConfig, delta0: float, T: int
) -> float:
    """Bound on the best squared gradient norm seen before round T."""
    n = stats.n
    if cfg.cstep > 1.0 / (2.0 * n * L):
        raise RegimeError(
            f"cstep <= 1/(2*n*L) (cstep = {cfg.cstep:.6g}, 1/(2*n*L) = {1.0 / (2 * n * L):.6g})"
        )
    if cfg.sstep > 1.0 / (4.0 * L):
        raise RegimeError(
            f"sstep <= 1/(4*L) (sstep = {cfg.sstep:.6g}, 1/(4*L) = {1.0 / (4 * L):.6g})"
        )
    if T < 1:
        raise InputError("horizon must be >= 1")
    if stats.delta_star is None or stats.D_star_sq is None:
        raise CapabilityError("delta_star", "per-sample infima unavailable")
    if stats.delta_star < -stats.estimate_tol - 1e-12:
        raise DataError(
            f"dissimilarity is negative beyond estimation tolerance: {stats.delta_star}"
        )
    delta_star = max(stats.delta_star, 0.0)  # guard estimation error
    pf = participation_factor(stats.M, cfg.cohort_size)
    base = 1.0 + 2.0 * L**2 * cfg.sstep**2 * pf + 1.5 * cfg.sstep * cfg.cstep**2 * n**2 * L**3
    return (
        4.0 * base**T / (cfg.sstep * T) * delta0
        + 6.0 * cfg.cstep**2 * n * L**3 * stats.D_star_sq
        + 8.0 * L**2 * cfg.sstep * pf * delta_star
    )


def bound_small_alpha(
    stats: HeterogeneityStats,
    mu: float,
    L: float,
    cfg: RunConfig,
    dist0_sq: float,
    sigma_rad_sq: float,
) -> BoundCurve:
    """Distance bound for the pull-back regime alpha = sstep/(cstep*n) < 1.

    Needs every sample loss to be mu-strongly convex and L-smooth.
    """
    if mu <= 0:
        raise InputError("strong convexity constant must be > 0")
    n = stats.n
    if cfg.cstep > 1.0 / L:
        raise RegimeError(
            f"cstep <= 1/L (cstep = {cfg.cstep:.6g}, 1/L = {1.0 / L:.6g})"
        )
    alpha = cfg.sstep / (cfg.cstep * n)
    if not 0.0 <= alpha < 1.0:
        raise RegimeError(f"0 <= alpha < 1 (alpha = {alpha:.6g})")
    T = cfg.horizon
    pf = participation_factor(stats.M, cfg.cohort_size)
    r = (1.0 - cfg.cstep * mu) ** n
    base = 1.0 - alpha + alpha * r
    t = np.arange(T + 1)
    contraction = base**t * dist0_sq
    if alpha == 0.0:
        part_const = 0.0
    else:
        part_const = (
            alpha / ((1.0 - alpha) * (1.0 - r))
            * cfg.cstep**2 * pf * stats.sigma_star_sq
        )
    geom = sum((1.0 - cfg.cstep * mu) ** i for i in range(n))
    shuf_const = 2.0 * cfg.cstep**3 * sigma_rad_sq * geom / (1.0 - r)
    participation = np.full(T + 1, part_const)
    shuffling = np.full(T + 1, shuf_const)
    terms = {
        "contraction": contraction,
        "participation": participation,
        "shuffling": shuffling,
    }
    return BoundCurve(
        Theorem.SMALL_ALPHA, contraction + participation + shuffling, terms
    )


def sigma_rad_upper_bound(stats: HeterogeneityStats, L: float, n: int, M: int) -> float:
    """Upper bound on the shuffling-variance constant of the pull-back bound.

    L * sum_m (n^2 ||grad f_m(x*)||^2 + n/4 * sigma_{*,m}^2); the first sum
    equals n^2 * M * sigma_*^2.
    """
    return L * (n**2 * M * stats.sigma_star_sq + 0.25 * n * float(stats.sigma_star_m_sq.sum()))


# -- stepsize guidance --------------------------------------------------------


@dataclass(frozen=True)
class StepsizeCheck:
    theorem: Theorem
    satisfied: bool
    violated: str  # empty when satisfied


def check_stepsizes(cfg: RunConfig, L: float, mu: float, n: int) -> list[StepsizeCheck]:
    """Report which bound regimes the configured stepsizes fall into."""
    checks: list[StepsizeCheck] = []
    large_server: list[str] = []
    if cfg.cstep * n > cfg.sstep:
        large_server.append("cstep*n <= sstep")
    if cfg.sstep > 1.0 / (16.0 * L):
        large_server.append("sstep <= 1/(16*L)")
    for theorem in (Theorem.SC, Theorem.CVX):
        checks.append(
            StepsizeCheck(theorem, not large_server, "; ".join(large_server))
        )
    ncvx: list[str] = []
    if cfg.cstep > 1.0 / (2.0 * n * L):
        ncvx.append("cstep <= 1/(2*n*L)")
    if cfg.sstep > 1.0 / (4.0 * L):
        ncvx.append("sstep <= 1/(4*L)")
    checks.append(StepsizeCheck(Theorem.NCVX, not ncvx, "; ".join(ncvx)))
    small: list[str] = []
    if cfg.cstep > 1.0 / L:
        small.append("cstep <= 1/L")
    alpha = cfg.sstep / (cfg.cstep * n)
    if not 0.0 <= alpha < 1.0:
        small.append("0 <= alpha < 1")
    checks.append(StepsizeCheck(Theorem.SMALL_ALPHA, not small, "; ".join(small)))
    return checks


@dataclass(frozen=True)
class StepsizeSuggestion:
    regime: Theorem
    cstep: float
    sstep: float
    alpha: float
    governing: str
    notes: tuple[str, ...] = ()


def recommended_stepsizes(
    regime: Theorem,
    L: float,
    mu: float,
    n: int,
    C: int,
    M: int,
    epsilon: float,
    sigma_star_sq: float,
) -> StepsizeSuggestion:
    """Theorem-conforming stepsize suggestion for the chosen regime.

    Large-server regimes sit at the admissible boundary; the pull-back
    regime scales the server stepsize like C*epsilon/sigma_*^2, clipped so
    alpha stays below 1.
    """
    if epsilon <= 0:
        raise InputError("epsilon must be > 0")
    if regime in (Theorem.SC, Theorem.CVX):
        sstep = 1.0 / (16.0 * L)
        cstep = sstep / n
        return StepsizeSuggestion(
            regime, cstep, sstep, 1.0, "cstep*n <= sstep <= 1/(16*L)"
        )
    if regime is Theorem.NCVX:
        cstep = 1.0 / (2.0 * n * L)
        sstep = 1.0 / (4.0 * L)
        return StepsizeSuggestion(
            regime,
            cstep,
            sstep,
            sstep / (cstep * n),
            "cstep <= 1/(2*n*L) and sstep <= 1/(4*L)",
        )
    if regime is Theorem.SMALL_ALPHA:
        cstep = 1.0 / L
        pf = participation_factor(M, C)
        alpha_cap = 1.0 - 1e-6
        notes: list[str] = []
        if sigma_star_sq * pf == 0.0:
            alpha = alpha_cap
            notes.append(
                "no client-sampling noise to damp; alpha pushed to the upper boundary"
            )
        else:
            alpha_raw = n * epsilon * C / (cstep * sigma_star_sq)
            alpha = min(alpha_raw, alpha_cap)
            if alpha < alpha_raw:
                notes.append("alpha clipped to stay below 1")
        return StepsizeSuggestion(
            regime,
            cstep,
            alpha * cstep * n,
            alpha,
            "cstep <= 1/L and 0 <= alpha < 1",
            tuple(notes),
        )
    raise InputError(f"unknown regime: {regime}")


# -- independent reference evaluators (used only for cross-checks) ------------


def _reference_bound_sc(
    sigma_star_sq, sigma_star_m_sq, n, mu, L, cstep, sstep, C, M, dist0_sq, T
):
    big_sigma = sum(sigma_star_m_sq) / len(sigma_star_m_sq) + n * sigma_star_sq
    factor = (M - C) / (C * max(M - 1, 1))
    out = []
    for t in range(T + 1):
        first = math.pow(1.0 - sstep * mu / 2.0, t) * dist0_sq
        second = 5.0 * cstep * cstep * n * L / mu * big_sigma
        third = 8.0 * sstep / mu * factor * sigma_star_sq
        out.append(first + second + third)
    return out


def _reference_bound_cvx(
    sigma_star_sq, sigma_star_m_sq, n, L, cstep, sstep, C, M, dist0_sq, T
):
    big_sigma = sum(sigma_star_m_sq) / len(sigma_star_m_sq) + n * sigma_star_sq
    factor = (M - C) / (C * max(M - 1, 1))
    first = 5.0 * dist0_sq / (2.0 * sstep * T)
    second = 7.0 * cstep * cstep * n * L * big_sigma
    third = 10.0 * sstep * factor * sigma_star_sq
    return first + second + third


def _reference_bound_ncvx(
    delta_star, delta_star_m, n, L, cstep, sstep, C, M, delta0, T
):
    dsq = sum(delta_star_m) / len(delta_star_m) + n * delta_star
    factor = (M - C) / (C * max(M - 1, 1))
    growth = 1.0 + 2.0 * L * L * sstep * sstep * factor + 1.5 * sstep * cstep * cstep * n * n * L * L * L
    first = 4.0 * math.pow(growth, T) / (sstep * T) * delta0
    second = 6.0 * cstep * cstep * n * L * L * L * dsq
    third = 8.0 * L * L * sstep * factor * max(delta_star, 0.0)
    return first + second + third


def _reference_bound_small_alpha(
    sigma_star_sq, n, mu, L, cstep, sstep, C, M, dist0_sq, sigma_rad_sq, T
):
    alpha = sstep / (cstep * n)
    factor = (M - C) / (C * max(M - 1, 1))
    decay = math.pow(1.0 - cstep * mu, n)
    base = 1.0 - alpha + alpha * decay
    if alpha == 0.0:
        second = 0.0
    else:
        second = alpha / ((1.0 - alpha) * (1.0 - decay)) * cstep * cstep * factor * sigma_star_sq
    geom = 0.0
    for i in range(n):
        geom += math.pow(1.0 - cstep * mu, i)
    third = 2.0 * math.pow(cstep, 3) * sigma_rad_sq * geom / (1.0 - decay)
    return [math.pow(base, t) * dist0_sq + second + third for t in range(T + 1)]
