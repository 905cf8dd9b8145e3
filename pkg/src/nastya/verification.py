"""Named verification suites: exact identities, oracle equivalences, and
ensemble checks of the convergence bounds.

Each suite returns a list of CheckResult; the CLI `verify` command renders
them and exits nonzero on any failure. The acceptance test module drives
the same functions.
"""

from __future__ import annotations

import dataclasses
import filecmp
import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .engine import (
    Mode,
    RunConfig,
    extrapolation_update,
    interpolation_update,
    local_pass_rr,
    nastya_round,
    run_gd,
    run_nastya,
)
from .harness import ExperimentSpec, ProblemSpec, run_experiment
from .problems import (
    FederatedProblem,
    estimate_f_star,
    eval_f,
    finite_difference_gradient,
    grad_f,
    make_logreg_problem,
    make_nonconvex_problem,
    make_quadratic_problem,
    quadratic_problem_from_parts,
    value_and_grad,
)
from .sampling import (
    Purpose,
    derive_stream,
    sample_cohort,
    sample_permutation,
    swr_formula,
    swr_moments_oracle,
)
from .theory import (
    bound_cvx,
    bound_ncvx,
    bound_sc,
    bound_small_alpha,
    heterogeneity_stats,
    sigma_rad_upper_bound,
)


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, 7], dtype=np.uint64)))


def _random_quadratic(rng, M, n, d) -> FederatedProblem:
    base = rng.normal(size=(M, n, d, d))
    hessians = base @ base.transpose(0, 1, 3, 2) + 0.5 * np.eye(d)
    centers = rng.normal(size=(M, n, d))
    return quadratic_problem_from_parts(hessians, centers)


# -- suite: lemma1 -------------------------------------------------------------


def suite_lemma1(cases: int = 200) -> list[CheckResult]:
    """Enumeration oracle against the closed-form subset-mean variance."""
    started = time.perf_counter()
    rng = _rng(101)
    worst_var = 0.0
    worst_mean = 0.0
    checked = 0
    for _ in range(cases):
        n = int(rng.integers(1, 8))
        d = int(rng.integers(1, 4))
        X = rng.normal(size=(n, d))
        pop_mean = X.mean(axis=0)
        dev = X - pop_mean
        sigma_sq = float(np.einsum("nd,nd->", dev, dev)) / n
        for k in range(1, n + 1):
            mean, var = swr_moments_oracle(X, k)
            expected = swr_formula(sigma_sq, n, k)
            mean_err = float(np.linalg.norm(mean - pop_mean))
            worst_mean = max(worst_mean, mean_err)
            if expected == 0.0:
                worst_var = max(worst_var, abs(var))
            else:
                worst_var = max(worst_var, abs(var - expected) / expected)
            checked += 1
    elapsed = time.perf_counter() - started
    passed = worst_var <= 1e-10 and worst_mean <= 1e-12 and elapsed < 5.0
    return [
        CheckResult(
            "lemma1",
            "subset-mean moments: oracle vs closed form",
            passed,
            f"{cases} cases / {checked} (n,k) pairs; worst variance rel err "
            f"{worst_var:.2e}, worst mean err {worst_mean:.2e}, {elapsed:.2f}s",
        )
    ]


# -- suite: equivalence --------------------------------------------------------


def _tol_close(a: np.ndarray, b: np.ndarray, tol: float = 1e-12) -> float:
    return float(np.linalg.norm(a - b)) / max(1.0, float(np.linalg.norm(a)))


def suite_equivalence(instances: int = 50) -> list[CheckResult]:
    """Server step, extrapolated average and interpolated average coincide."""
    started = time.perf_counter()
    rng = _rng(202)
    worst = 0.0
    for case in range(instances):
        M = int(rng.integers(1, 6))
        n = int(rng.integers(1, 7))
        d = int(rng.integers(1, 5))
        C = int(rng.integers(1, M + 1))
        problem = _random_quadratic(rng, M, n, d)
        cstep = float(10.0 ** rng.uniform(-4, -1.3))
        # cover pull-back, plain averaging and extrapolation regimes
        ratio = float(rng.uniform(0.1, 3.0))
        sstep = ratio * cstep * n
        x_t = rng.normal(size=d)
        seed = 1000 + case
        cohort = sample_cohort(M, C, derive_stream(seed, 0, None, Purpose.COHORT))
        ends = np.empty((C, d))
        gs = np.empty((C, d))
        for c, m in enumerate(cohort.members):
            pi = sample_permutation(n, derive_stream(seed, 0, m, Purpose.PERMUTATION))
            ends[c], gs[c] = local_pass_rr(problem.clients[m], x_t, cstep, pi)
        g_total = gs[0].copy()
        for c in range(1, C):
            g_total += gs[c]
        u_server = x_t - sstep * (g_total / C)
        beta = sstep / (cstep * n) - 1.0
        alpha = sstep / (cstep * n)
        u_extra = extrapolation_update(x_t, ends, beta)
        u_inter = interpolation_update(x_t, ends, alpha)
        cfg = RunConfig(cstep=cstep, sstep=sstep, cohort_size=C, horizon=1,
                        x0=x_t, seed=seed)
        u_round, _ = nastya_round(problem, x_t, cfg, 0)
        for a, b in ((u_server, u_extra), (u_server, u_inter), (u_extra, u_inter),
                     (u_server, u_round)):
            worst = max(worst, _tol_close(a, b))
    elapsed = time.perf_counter() - started
    passed = worst <= 1e-12 and elapsed < 5.0
    return [
        CheckResult(
            "equivalence",
            "update forms agree pairwise",
            passed,
            f"{instances} instances; worst relative gap {worst:.2e}, {elapsed:.2f}s",
        )
    ]


# -- suite: gradients ----------------------------------------------------------


def synthetic_logreg_rows(
    count: int, d: int, seed: int, scale: float = 1.0, flip_prob: float = 0.15
) -> list[tuple[float, dict[int, float]]]:
    """Labeled rows from a noisy linear classifier; flips keep classes
    overlapping so the unregularized logistic optimum stays finite."""
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 9], dtype=np.uint64)))
    w = rng.normal(size=d)
    rows = []
    for _ in range(count):
        a = scale * rng.normal(size=d)
        y = 1.0 if float(a @ w) >= 0 else -1.0
        if rng.uniform() < flip_prob:
            y = -y
        rows.append((y, {j + 1: float(a[j]) for j in range(d)}))
    return rows


def _fd_worst(problem: FederatedProblem, rng, points: int, tol_floor=1e-12) -> float:
    worst = 0.0
    for client in problem.clients:
        for sample in client.samples:
            for _ in range(points):
                x = rng.normal(size=problem.dim)
                analytic = sample.grad(x)
                fd = finite_difference_gradient(sample.value, x)
                rel = float(np.linalg.norm(analytic - fd)) / max(
                    float(np.linalg.norm(analytic)), tol_floor
                )
                worst = max(worst, rel)
    return worst


def suite_gradients() -> list[CheckResult]:
    """Central finite differences against every analytic sample gradient."""
    rng = _rng(303)
    out = []
    quad = make_quadratic_problem(M=3, n=4, d=4, mu=0.2, L=2.0, heterogeneity=1.0, seed=5)
    worst = _fd_worst(quad, rng, points=10)
    out.append(CheckResult(
        "gradients", "quadratic samples vs finite differences",
        worst <= 1e-8, f"worst rel err {worst:.2e} (tol 1e-8)"))
    rows = synthetic_logreg_rows(24, 4, seed=13)
    logreg = make_logreg_problem(rows, M=3, lam=0.1, seed=1)
    worst = _fd_worst(logreg, rng, points=10)
    out.append(CheckResult(
        "gradients", "logistic samples vs finite differences",
        worst <= 1e-6, f"worst rel err {worst:.2e} (tol 1e-6)"))
    ncvx = make_nonconvex_problem(M=3, n=4, d=3, seed=17)
    worst = _fd_worst(ncvx, rng, points=10)
    out.append(CheckResult(
        "gradients", "rational samples vs finite differences",
        worst <= 1e-6, f"worst rel err {worst:.2e} (tol 1e-6)"))
    return out


# -- suite: reduction (exact identities) ---------------------------------------


def _trace_scalars(trace) -> tuple:
    return (trace.round, trace.f_val, trace.grad_norm_sq, trace.dist_sq,
            trace.g_norm_sq)


def _fedavg_rr_reference(
    problem: FederatedProblem, cfg: RunConfig
) -> list[np.ndarray]:
    """Independently coded FedAvg with reshuffling: average the local end
    iterates directly instead of stepping along the aggregate."""
    M = problem.num_clients
    n = problem.samples_per_client
    x = cfg.x0.copy()
    iterates = []
    for t in range(cfg.horizon):
        ends = []
        for m in range(M):
            perm_round = 0 if cfg.mode is Mode.SHUFFLE_ONCE else t
            pi = sample_permutation(
                n, derive_stream(cfg.seed, perm_round, m, Purpose.PERMUTATION)
            )
            end, _ = local_pass_rr(problem.clients[m], x, cfg.cstep, pi)
            ends.append(end)
        x = np.mean(ends, axis=0)
        iterates.append(x)
    return iterates


def suite_reduction() -> list[CheckResult]:
    out = []
    # (a) single client, single sample: the method is plain gradient descent
    problem = make_quadratic_problem(M=1, n=1, d=3, mu=0.5, L=2.0,
                                     heterogeneity=0.0, seed=7)
    x0 = np.ones(3)
    cfg = RunConfig(cstep=0.01, sstep=0.3, cohort_size=1, horizon=100, x0=x0, seed=3)
    r_nastya = run_nastya(problem, cfg)
    r_gd = run_gd(problem, 0.3, 100, x0)
    bitwise = np.array_equal(r_nastya.x_final, r_gd.x_final) and all(
        _trace_scalars(a) == _trace_scalars(b)
        for a, b in zip(r_nastya.traces, r_gd.traces)
    )
    out.append(CheckResult(
        "reduction", "M = n = 1 equals gradient descent bitwise",
        bitwise, "100 rounds, trace scalars and final iterate compared exactly"))
    # (b) sstep = cstep * n with full participation averages the local ends
    problem = make_quadratic_problem(M=4, n=3, d=3, mu=0.1, L=1.0,
                                     heterogeneity=1.0, seed=9)
    n = problem.samples_per_client
    cfg = RunConfig(cstep=0.02, sstep=0.02 * n, cohort_size=4, horizon=30,
                    x0=np.zeros(3), seed=5)
    reference = _fedavg_rr_reference(problem, cfg)
    x = cfg.x0.copy()
    worst = 0.0
    for t in range(cfg.horizon):
        x, _ = nastya_round(problem, x, cfg, t)
        worst = max(worst, _tol_close(reference[t], x))
    out.append(CheckResult(
        "reduction", "sstep = cstep*n, C = M equals endpoint averaging",
        worst <= 1e-12, f"30 rounds; worst relative gap {worst:.2e} (tol 1e-12)"))
    return out


# -- suite: estimator slope ------------------------------------------------------


def suite_estimator_slope() -> list[CheckResult]:
    """The aggregate direction approaches the gradient at first order in
    the client stepsize: log-log slope of the error is 1."""
    problem = make_quadratic_problem(M=4, n=6, d=3, mu=0.1, L=1.0,
                                     heterogeneity=1.0, seed=5)
    M = problem.num_clients
    n = problem.samples_per_client
    L = problem.smoothness
    x0 = 2.0 * np.ones(problem.dim)
    grad = grad_f(problem, x0)
    seed = 12
    cohort = sample_cohort(M, M, derive_stream(seed, 0, None, Purpose.COHORT))
    perms = {
        m: sample_permutation(n, derive_stream(seed, 0, m, Purpose.PERMUTATION))
        for m in cohort.members
    }
    gammas = []
    errors = []
    for k in range(4, 13):
        gamma = 2.0**-k / (n * L)
        gs = []
        for m in cohort.members:
            _, g = local_pass_rr(problem.clients[m], x0, gamma, perms[m])
            gs.append(g)
        g_total = gs[0].copy()
        for g in gs[1:]:
            g_total += g
        err = float(np.linalg.norm(g_total / M - grad))
        gammas.append(gamma)
        errors.append(err)
    slope = float(np.polyfit(np.log(gammas), np.log(errors), 1)[0])
    passed = abs(slope - 1.0) <= 0.2
    return [CheckResult(
        "estimator_slope", "estimator bias scales linearly in cstep",
        passed, f"fitted slope {slope:.3f} over k = 4..12 (target 1 +- 0.2)")]


# -- ensemble bound suites -------------------------------------------------------


def _ensemble_dists(problem, cfg, n_seeds):
    """Per-seed squared-distance traces, shape (n_seeds, T+1)."""
    dists = np.full((n_seeds, cfg.horizon + 1), np.nan)
    for s in range(n_seeds):
        res = run_nastya(problem, dataclasses.replace(cfg, seed=cfg.seed + s))
        if res.diverged:
            continue
        for tr in res.traces:
            dists[s, tr.round] = tr.dist_sq
    return dists


def _mean_se_rows(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = stack.mean(axis=0)
    if stack.shape[0] > 1:
        se = stack.std(axis=0, ddof=1) / math.sqrt(stack.shape[0])
    else:
        se = np.zeros_like(mean)
    return mean, se


def suite_bounds_sc(n_seeds: int = 100) -> list[CheckResult]:
    """Strongly convex distance bound holds along a partial-participation run."""
    started = time.perf_counter()
    L, kappa = 1.0, 100.0
    problem = make_quadratic_problem(M=10, n=8, d=5, mu=L / kappa, L=L,
                                     heterogeneity=1.0, seed=2024)
    n = problem.samples_per_client
    sstep = 1.0 / (16.0 * L)
    cfg = RunConfig(cstep=sstep / (10 * n), sstep=sstep, cohort_size=5,
                    horizon=300, x0=np.zeros(problem.dim), seed=0)
    dists = _ensemble_dists(problem, cfg, n_seeds)
    assert np.all(np.isfinite(dists)), "unexpected divergence"
    mean, se = _mean_se_rows(dists)
    stats = heterogeneity_stats(problem, problem.x_star, problem.f_star)
    dist0 = float(np.sum((cfg.x0 - problem.x_star) ** 2))
    curve = bound_sc(stats, problem.strong_convexity, L, cfg, dist0).values
    margin = mean - (curve + 2.0 * se)
    elapsed = time.perf_counter() - started
    passed = bool(np.all(margin <= 0)) and elapsed < 120.0
    return [CheckResult(
        "bounds_sc", "strongly convex bound >= ensemble mean at every round",
        passed,
        f"{n_seeds} seeds, T=300; worst margin {float(margin.max()):.3e}, "
        f"{elapsed:.1f}s")]


def suite_bounds_cvx(n_seeds: int = 100) -> list[CheckResult]:
    """Convex suboptimality bound holds at the iterate average."""
    started = time.perf_counter()
    rows = synthetic_logreg_rows(80, 5, seed=7, scale=1.3)
    problem = make_logreg_problem(rows, M=10, lam=0.0, seed=1)
    n = problem.samples_per_client
    L = problem.smoothness
    ref = estimate_f_star(problem, restarts=1, tol=1e-10, max_iters=500_000)
    stats = heterogeneity_stats(problem, ref.minimizer, ref.value)
    sstep = 1.0 / (16.0 * L)
    x0 = np.zeros(problem.dim)
    dist0 = float(np.sum((x0 - ref.minimizer) ** 2))
    out = []
    for T in (50, 100, 200):
        cfg = RunConfig(cstep=sstep / (10 * n), sstep=sstep, cohort_size=5,
                        horizon=T, x0=x0, seed=0)
        gaps = np.empty(n_seeds)
        for s in range(n_seeds):
            res = run_nastya(problem, dataclasses.replace(cfg, seed=s))
            assert not res.diverged
            gaps[s] = eval_f(problem, res.avg_iterate) - ref.value
        mean, se = float(gaps.mean()), float(gaps.std(ddof=1) / math.sqrt(n_seeds))
        bound = bound_cvx(stats, L, cfg, dist0)
        out.append(CheckResult(
            "bounds_cvx", f"convex bound at T={T}",
            mean <= bound + 2 * se,
            f"mean gap {mean:.4e} vs bound {bound:.4e} (SE {se:.2e})"))
    elapsed = time.perf_counter() - started
    out.append(CheckResult(
        "bounds_cvx", "runtime", elapsed < 120.0, f"{elapsed:.1f}s"))
    return out


def suite_bounds_ncvx(n_seeds: int = 100) -> list[CheckResult]:
    """Nonconvex best-gradient bound holds under both cohort sizes."""
    started = time.perf_counter()
    problem = make_nonconvex_problem(M=8, n=8, d=4, seed=3)
    n = problem.samples_per_client
    L = problem.smoothness
    est = estimate_f_star(problem, restarts=8, tol=1e-9)
    stats = heterogeneity_stats(problem, est.minimizer, problem.f_star)
    x0 = np.zeros(problem.dim)
    delta0 = eval_f(problem, x0) - problem.f_star
    T = 200
    out = []
    for C in (4, 8):
        cfg = RunConfig(cstep=1.0 / (2 * n * L) / 4, sstep=1.0 / (4 * L) / 4,
                        cohort_size=C, horizon=T, x0=x0, seed=0)
        mins = np.empty(n_seeds)
        for s in range(n_seeds):
            res = run_nastya(problem, dataclasses.replace(cfg, seed=s))
            assert not res.diverged
            mins[s] = min(tr.grad_norm_sq for tr in res.traces[:T])
        mean, se = float(mins.mean()), float(mins.std(ddof=1) / math.sqrt(n_seeds))
        bound = bound_ncvx(stats, L, cfg, delta0, T)
        out.append(CheckResult(
            "bounds_ncvx", f"nonconvex bound at C={C}",
            mean <= bound + 2 * se,
            f"mean min grad^2 {mean:.4e} vs bound {bound:.4e} (SE {se:.2e})"))
    elapsed = time.perf_counter() - started
    out.append(CheckResult(
        "bounds_ncvx", "runtime", elapsed < 120.0, f"{elapsed:.1f}s"))
    return out


def suite_small_alpha(n_seeds: int = 100) -> list[CheckResult]:
    """Pulling back (alpha < 1) beats plain averaging under client sampling,
    and the pull-back bound holds on the whole grid."""
    started = time.perf_counter()
    L, mu = 1.0, 0.1
    problem = make_quadratic_problem(M=10, n=4, d=4, mu=mu, L=L,
                                     heterogeneity=1.0, seed=11)
    n = problem.samples_per_client
    cstep = 1.0 / (2.0 * L)
    T = 400
    x0 = np.zeros(problem.dim)
    stats = heterogeneity_stats(problem, problem.x_star, problem.f_star)
    dist0 = float(np.sum((x0 - problem.x_star) ** 2))
    rad = sigma_rad_upper_bound(stats, L, n, problem.num_clients)
    alphas = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
    steady = {}
    out = []
    bound_ok = True
    worst_detail = ""
    for alpha in alphas:
        cfg = RunConfig(cstep=cstep, sstep=alpha * cstep * n, cohort_size=1,
                        horizon=T, x0=x0, seed=0)
        dists = _ensemble_dists(problem, cfg, n_seeds)
        assert np.all(np.isfinite(dists))
        mean, se = _mean_se_rows(dists)
        steady[alpha] = float(mean[T])
        if alpha < 1.0:
            curve = bound_small_alpha(stats, mu, L, cfg, dist0, rad).values
            margin = mean - (curve + 2.0 * se)
            if float(margin.max()) > 0:
                bound_ok = False
                worst_detail = f"alpha={alpha}: margin {float(margin.max()):.3e}"
    best_small = min(v for a, v in steady.items() if a < 1.0)
    direction = best_small < steady[1.0]
    out.append(CheckResult(
        "small_alpha", "some alpha < 1 beats alpha = 1 at steady state",
        direction,
        f"best steady dist {best_small:.4e} vs alpha=1 {steady[1.0]:.4e}"))
    out.append(CheckResult(
        "small_alpha", "pull-back bound holds for every grid alpha < 1",
        bound_ok, worst_detail or "mean <= bound + 2*SE at every round"))
    elapsed = time.perf_counter() - started
    out.append(CheckResult(
        "small_alpha", "runtime", elapsed < 180.0, f"{elapsed:.1f}s"))
    return out


# -- suite: speedup (two stepsizes vs plain reshuffling) -------------------------


def suite_speedup(n_seeds: int = 20) -> list[CheckResult]:
    """With a small matched client stepsize, the large server stepsize
    reaches the target suboptimality in strictly fewer epochs than plain
    reshuffling on every paired seed."""
    started = time.perf_counter()
    rows = synthetic_logreg_rows(16, 5, seed=21, scale=1.2)
    data_l = make_logreg_problem(rows, M=1, lam=0.0, seed=1).smoothness
    lam = data_l / 3.0
    problem = make_logreg_problem(rows, M=1, lam=lam, seed=1)
    n = problem.samples_per_client
    L = problem.smoothness
    ref = estimate_f_star(problem, restarts=1, tol=1e-11, max_iters=500_000)
    target = 1e-6
    cstep = (1.0 / (16.0 * L * n)) / 10.0
    T = 5_000
    x0 = np.zeros(problem.dim)
    wins = 0
    details = []
    for s in range(n_seeds):
        epochs = {}
        for label, sstep in (("two_stepsize", 1.0 / (16.0 * L)), ("plain_rr", cstep * n)):
            cfg = RunConfig(cstep=cstep, sstep=sstep, cohort_size=1, horizon=T,
                            x0=x0, seed=s)
            res = run_nastya(problem, cfg)
            hit = next(
                (tr.round for tr in res.traces if tr.f_val - ref.value <= target),
                None,
            )
            epochs[label] = hit
        if epochs["two_stepsize"] is not None and (
            epochs["plain_rr"] is None
            or epochs["two_stepsize"] < epochs["plain_rr"]
        ):
            wins += 1
        if s == 0:
            details.append(
                f"seed 0 epochs: two-stepsize {epochs['two_stepsize']}, "
                f"plain {epochs['plain_rr']}"
            )
    elapsed = time.perf_counter() - started
    passed = wins == n_seeds
    return [CheckResult(
        "speedup", "two-stepsize run wins on every paired seed",
        passed, f"{wins}/{n_seeds} wins; {details[0]}; {elapsed:.1f}s")]


# -- suite: determinism ----------------------------------------------------------


_DETERMINISM_SPEC = """
problem.kind = quadratic
problem.M = 6
problem.n = 4
problem.d = 3
problem.mu = 0.05
problem.L = 1.0
problem.heterogeneity = 0.8
problem.seed = 4
algo = nastya
cstep = 0.003
sstep = 0.0625
cohort = 3
T = 40
seed = 0
ensemble = 12
bounds = sc
out_prefix = det
"""


def suite_determinism() -> list[CheckResult]:
    """Identical specs give byte-identical CSVs, threads or not."""
    from .harness import load_spec

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        spec_path = tmp / "det.spec"
        spec_path.write_text(_DETERMINISM_SPEC, encoding="ascii")
        spec = load_spec(spec_path)
        paths = []
        for i, threads in enumerate((1, 1, 3)):
            out_dir = tmp / f"run{i}"
            rec = run_experiment(spec, out_dir, threads=threads)
            paths.append((rec.trace_path, rec.summary_path))
        same = all(
            filecmp.cmp(paths[0][j], paths[i][j], shallow=False)
            for i in (1, 2)
            for j in (0, 1)
        )
    return [CheckResult(
        "determinism", "repeated runs produce byte-identical CSVs",
        same, "two sequential runs and one with --threads 3 compared")]


# -- registry --------------------------------------------------------------------


SUITES = {
    "lemma1": suite_lemma1,
    "equivalence": suite_equivalence,
    "gradients": suite_gradients,
    "bounds_sc": suite_bounds_sc,
    "bounds_cvx": suite_bounds_cvx,
    "bounds_ncvx": suite_bounds_ncvx,
    "small_alpha": suite_small_alpha,
}

_EXTRA_SUITES = {
    "reduction": suite_reduction,
    "estimator_slope": suite_estimator_slope,
    "speedup": suite_speedup,
    "determinism": suite_determinism,
}

_ALL_ORDER = (
    "lemma1", "equivalence", "gradients", "reduction", "estimator_slope",
    "bounds_sc", "bounds_cvx", "bounds_ncvx", "small_alpha", "speedup",
    "determinism",
)


def verify(suite: str = "all") -> list[CheckResult]:
    """Run one named suite, or everything for 'all'."""
    if suite == "all":
        results = []
        for name in _ALL_ORDER:
            fn = SUITES.get(name) or _EXTRA_SUITES[name]
            results.extend(fn())
        return results
    fn = SUITES.get(suite) or _EXTRA_SUITES.get(suite)
    if fn is None:
        valid = sorted([*SUITES, *_EXTRA_SUITES, "all"])
        raise ValueError(f"unknown suite {suite!r}; valid: {valid}")
    return fn()
