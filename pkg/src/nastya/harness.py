"""Experiment orchestration: spec files, ensembles, sweeps, CSV emission.

Expectations in the convergence statements are estimated by seed ensembles
(seed_i = base seed + i) with common random numbers across sweep values, so
paired comparisons stay sharp at small ensemble sizes. All emitted files
are pure functions of the spec contents.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .engine import Mode, RunConfig, RunResult, run_gd, run_local_sgd_wr, run_nastya
from .errors import ConfigError, NastyaError, RegimeError
from .problems import (
    FederatedProblem,
    FStarEstimate,
    estimate_f_star,
    eval_f,
    make_logreg_problem,
    make_nonconvex_problem,
    make_quadratic_problem,
    parse_libsvm,
)
from .theory import (
    HeterogeneityStats,
    bound_cvx,
    bound_ncvx,
    bound_sc,
    bound_small_alpha,
    heterogeneity_stats,
    sigma_rad_upper_bound,
)

TRACE_COLUMNS = ("round", "seed", "f", "grad_norm_sq", "dist_sq", "g_norm_sq")
SUMMARY_COLUMNS = (
    "round",
    "mean_f",
    "se_f",
    "mean_grad_norm_sq",
    "se_grad_norm_sq",
    "mean_dist_sq",
    "se_dist_sq",
)
BOUND_NAMES = ("sc", "cvx", "ncvx", "small_alpha")
ALGORITHMS = ("nastya", "gd", "local_sgd_wr")
SWEEP_AXES = ("cstep", "sstep", "cohort", "alpha")

_MODE_ALIASES = {
    "rr": Mode.RANDOM_RESHUFFLING,
    "random_reshuffling": Mode.RANDOM_RESHUFFLING,
    "so": Mode.SHUFFLE_ONCE,
    "shuffle_once": Mode.SHUFFLE_ONCE,
}


@dataclass(frozen=True)
class ProblemSpec:
    kind: str
    M: int | None = None
    n: int | None = None
    d: int | None = None
    mu: float | None = None
    L: float | None = None
    heterogeneity: float = 0.0
    libsvm_path: str | None = None
    lam: float | None = None
    seed: int = 0


@dataclass(frozen=True)
class ExperimentSpec:
    problem: ProblemSpec
    algo: str
    sstep: float
    horizon: int
    cstep: float | None = None
    cohort: int | None = None  # None means full participation
    mode: Mode = Mode.RANDOM_RESHUFFLING
    seed: int = 0
    ensemble: int = 100
    bounds: tuple[str, ...] = ()
    out_prefix: str = "experiment"


_INT_KEYS = {"problem.M", "problem.n", "problem.d", "problem.seed",
             "cohort", "T", "seed", "ensemble"}
_FLOAT_KEYS = {"problem.mu", "problem.L", "problem.heterogeneity",
               "problem.lambda", "cstep", "sstep"}
_STR_KEYS = {"problem.kind", "problem.libsvm_path", "algo", "mode", "bounds",
             "out_prefix"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS


def _parse_kv_lines(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        values[key] = value
    return values


def _convert(key: str, raw: str):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError:
        raise ConfigError(f"key {key!r}: cannot parse {raw!r}") from None
    return raw


def load_spec(path) -> ExperimentSpec:
    """Parse and validate a flat key=value experiment spec file."""
    text = Path(path).read_text(encoding="utf-8")
    raw = _parse_kv_lines(text)
    values = {k: _convert(k, v) for k, v in raw.items()}

    def require(key: str):
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")
        return values[key]

    kind = require("problem.kind")
    if kind not in ("quadratic", "logreg", "nonconvex"):
        raise ConfigError(f"problem.kind must be quadratic|logreg|nonconvex, got {kind!r}")
    if kind == "quadratic":
        for key in ("problem.M", "problem.n", "problem.d", "problem.mu", "problem.L"):
            require(key)
    elif kind == "logreg":
        for key in ("problem.libsvm_path", "problem.M", "problem.lambda"):
            require(key)
    else:
        for key in ("problem.M", "problem.n", "problem.d"):
            require(key)
    pspec = ProblemSpec(
        kind=kind,
        M=values.get("problem.M"),
        n=values.get("problem.n"),
        d=values.get("problem.d"),
        mu=values.get("problem.mu"),
        L=values.get("problem.L"),
        heterogeneity=values.get("problem.heterogeneity", 0.0),
        libsvm_path=values.get("problem.libsvm_path"),
        lam=values.get("problem.lambda"),
        seed=values.get("problem.seed", 0),
    )

    algo = require("algo")
    if algo not in ALGORITHMS:
        raise ConfigError(f"algo must be one of {ALGORITHMS}, got {algo!r}")
    if algo != "gd" and "cstep" not in values:
        raise ConfigError(f"missing required key 'cstep' (algo {algo!r})")
    mode_raw = values.get("mode", "rr")
    if mode_raw not in _MODE_ALIASES:
        raise ConfigError(f"mode must be one of {sorted(_MODE_ALIASES)}, got {mode_raw!r}")
    bounds_raw = values.get("bounds", "")
    bounds = tuple(b.strip() for b in bounds_raw.split(",") if b.strip())
    for b in bounds:
        if b not in BOUND_NAMES:
            raise ConfigError(f"unknown bound {b!r}; valid: {BOUND_NAMES}")
    ensemble = values.get("ensemble", 100)
    if ensemble < 1:
        raise ConfigError("ensemble must be >= 1")
    horizon = require("T")
    if horizon < 1:
        raise ConfigError("T must be >= 1")
    spec = ExperimentSpec(
        problem=pspec,
        algo=algo,
        sstep=require("sstep"),
        horizon=horizon,
        cstep=values.get("cstep"),
        cohort=values.get("cohort"),
        mode=_MODE_ALIASES[mode_raw],
        seed=values.get("seed", 0),
        ensemble=ensemble,
        bounds=bounds,
        out_prefix=values.get("out_prefix", Path(path).stem),
    )
    if spec.cohort is not None and pspec.M is not None and spec.cohort > pspec.M:
        raise ConfigError(
            f"cohort ({spec.cohort}) exceeds client count ({pspec.M})"
        )
    if spec.cohort is not None and spec.cohort < 1:
        raise ConfigError("cohort must be >= 1")
    return spec


def build_problem(pspec: ProblemSpec) -> FederatedProblem:
    """Construct the problem instance a spec describes."""
    if pspec.kind == "quadratic":
        return make_quadratic_problem(
            M=pspec.M, n=pspec.n, d=pspec.d, mu=pspec.mu, L=pspec.L,
            heterogeneity=pspec.heterogeneity, seed=pspec.seed,
        )
    if pspec.kind == "logreg":
        rows = parse_libsvm(pspec.libsvm_path)
        return make_logreg_problem(rows, M=pspec.M, lam=pspec.lam, seed=pspec.seed)
    if pspec.kind == "nonconvex":
        return make_nonconvex_problem(M=pspec.M, n=pspec.n, d=pspec.d, seed=pspec.seed)
    raise ConfigError(f"unknown problem kind {pspec.kind!r}")


# reference optima are deterministic, so memoize per problem object
_REFERENCE_CACHE: dict[int, tuple[FederatedProblem, FStarEstimate]] = {}


def reference_optimum(problem: FederatedProblem) -> FStarEstimate:
    """Deterministic estimate of (x*, f*) used when they are not stored."""
    if problem.x_star is not None and problem.f_star is not None:
        return FStarEstimate(
            value=problem.f_star,
            minimizer=problem.x_star,
            grad_norm=0.0,
            tol=problem.f_star_tol or 0.0,
            converged=True,
        )
    cached = _REFERENCE_CACHE.get(id(problem))
    if cached is not None and cached[0] is problem:
        return cached[1]
    restarts = 8 if problem.convexity.value == "nonconvex" else 1
    est = estimate_f_star(problem, restarts=restarts, tol=1e-9, max_iters=500_000)
    _REFERENCE_CACHE[id(problem)] = (problem, est)
    return est


def problem_stats(problem: FederatedProblem) -> HeterogeneityStats:
    """Heterogeneity statistics at the stored or estimated optimum."""
    ref = reference_optimum(problem)
    return heterogeneity_stats(problem, ref.minimizer, ref.value)


@dataclass(frozen=True)
class BoundCheck:
    name: str
    applicable: bool
    satisfied: bool
    detail: str


@dataclass(frozen=True, eq=False)
class SummaryRecord:
    """Ensemble means, standard errors, bound overlays and their checks."""

    rounds: np.ndarray
    means: dict[str, np.ndarray]
    ses: dict[str, np.ndarray]
    bounds: dict[str, np.ndarray]
    checks: tuple[BoundCheck, ...]
    divergence_count: int
    n_seeds: int
    trace_path: Path | None = None
    summary_path: Path | None = None


def _format_float(x: float) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(float(x), ".17g")


def _run_one(problem: FederatedProblem, spec: ExperimentSpec, seed: int) -> RunResult:
    x0 = np.zeros(problem.dim)
    if spec.algo == "gd":
        return run_gd(problem, spec.sstep, spec.horizon, x0)
    cfg = RunConfig(
        cstep=spec.cstep,
        sstep=spec.sstep,
        cohort_size=spec.cohort if spec.cohort is not None else problem.num_clients,
        horizon=spec.horizon,
        x0=x0,
        mode=spec.mode,
        seed=seed,
    )
    if spec.algo == "nastya":
        return run_nastya(problem, cfg)
    if spec.algo == "local_sgd_wr":
        return run_local_sgd_wr(problem, cfg)
    raise ConfigError(f"unknown algorithm {spec.algo!r}")


def _collect(results: list[RunResult], horizon: int) -> dict[str, np.ndarray]:
    """Stack per-seed traces into (n_seeds, T+1) arrays padded with NaN."""
    n_seeds = len(results)
    out = {
        key: np.full((n_seeds, horizon + 1), np.nan)
        for key in ("f", "grad_norm_sq", "dist_sq", "g_norm_sq")
    }
    for s, res in enumerate(results):
        for tr in res.traces:
            out["f"][s, tr.round] = tr.f_val
            out["grad_norm_sq"][s, tr.round] = tr.grad_norm_sq
            out["dist_sq"][s, tr.round] = math.nan if tr.dist_sq is None else tr.dist_sq
            out["g_norm_sq"][s, tr.round] = tr.g_norm_sq
    return out


def _mean_se(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    count = np.sum(np.isfinite(stack), axis=0)
    with np.errstate(invalid="ignore"):
        mean = np.where(count > 0, np.nansum(stack, axis=0) / np.maximum(count, 1), np.nan)
        sd = np.full(stack.shape[1], np.nan)
        multi = count > 1
        if np.any(multi):
            dev = stack - mean[None, :]
            ssq = np.nansum(dev * dev, axis=0)
            sd[multi] = np.sqrt(ssq[multi] / (count[multi] - 1))
        se = np.where(count > 1, sd / np.sqrt(np.maximum(count, 1)), 0.0)
        se = np.where(count > 0, se, np.nan)
    return mean, se


def _bound_curves_and_checks(
    problem: FederatedProblem,
    spec: ExperimentSpec,
    results: list[RunResult],
    stacks: dict[str, np.ndarray],
    means: dict[str, np.ndarray],
    ses: dict[str, np.ndarray],
) -> tuple[dict[str, np.ndarray], list[BoundCheck]]:
    if not spec.bounds:
        return {}, []
    T = spec.horizon
    ref = reference_optimum(problem)
    stats = heterogeneity_stats(problem, ref.minimizer, ref.value)
    x0 = np.zeros(problem.dim)
    dist0_sq = float(np.sum((x0 - ref.minimizer) ** 2))
    delta0 = eval_f(problem, x0) - ref.value
    cfg = RunConfig(
        cstep=spec.cstep if spec.cstep is not None else spec.sstep,
        sstep=spec.sstep,
        cohort_size=spec.cohort if spec.cohort is not None else problem.num_clients,
        horizon=T,
        x0=x0,
        mode=spec.mode,
        seed=spec.seed,
    )
    curves: dict[str, np.ndarray] = {}
    checks: list[BoundCheck] = []
    L = problem.smoothness
    mu = problem.strong_convexity
    for name in spec.bounds:
        try:
            if name == "sc":
                curve = bound_sc(stats, mu, L, cfg, dist0_sq).values
                ok = _curvewise_ok(means["dist_sq"], ses["dist_sq"], curve)
                detail = "mean dist_sq <= bound + 2*SE at every round"
            elif name == "small_alpha":
                rad = sigma_rad_upper_bound(stats, L, stats.n, stats.M)
                curve = bound_small_alpha(stats, mu, L, cfg, dist0_sq, rad).values
                ok = _curvewise_ok(means["dist_sq"], ses["dist_sq"], curve)
                detail = "mean dist_sq <= bound + 2*SE at every round"
            elif name == "cvx":
                curve = np.full(T + 1, np.inf)
                for t in range(1, T + 1):
                    curve[t] = bound_cvx(
                        stats, L, dataclasses.replace(cfg, horizon=t), dist0_sq
                    )
                gaps = np.array(
                    [
                        eval_f(problem, r.avg_iterate) - ref.value
                        for r in results
                        if r.avg_iterate is not None
                    ]
                )
                ok, detail = _scalar_ok(gaps, curve[T], "f(avg iterate) - f*")
            elif name == "ncvx":
                curve = np.full(T + 1, np.inf)
                for t in range(1, T + 1):
                    curve[t] = bound_ncvx(
                        stats, L, cfg, delta0, t
                    )
                mins = np.array(
                    [
                        np.nanmin(stacks["grad_norm_sq"][s, :T])
                        for s in range(len(results))
                        if not results[s].diverged
                    ]
                )
                ok, detail = _scalar_ok(mins, curve[T], "min grad_norm_sq over t < T")
            else:
                raise ConfigError(f"unknown bound {name!r}")
        except (RegimeError, NastyaError) as exc:
            curves[name] = np.full(T + 1, np.nan)
            checks.append(BoundCheck(name, False, False, f"not applicable: {exc}"))
            continue
        curves[name] = curve
        checks.append(BoundCheck(name, True, ok, detail))
    return curves, checks


def _curvewise_ok(mean: np.ndarray, se: np.ndarray, curve: np.ndarray) -> bool:
    valid = np.isfinite(mean)
    return bool(np.all(mean[valid] <= curve[valid] + 2.0 * se[valid]))


def _scalar_ok(samples: np.ndarray, bound: float, label: str) -> tuple[bool, str]:
    if samples.size == 0:
        return False, f"{label}: no finished runs"
    mean = float(samples.mean())
    se = float(samples.std(ddof=1) / np.sqrt(samples.size)) if samples.size > 1 else 0.0
    ok = mean <= bound + 2.0 * se
    return ok, f"{label}: mean {mean:.6g} vs bound {bound:.6g} (SE {se:.3g})"


def _write_traces(path: Path, results: list[RunResult], spec: ExperimentSpec) -> None:
    lines = [",".join(TRACE_COLUMNS)]
    for s, res in enumerate(results):
        seed = spec.seed + s
        for tr in res.traces:
            lines.append(
                ",".join(
                    (
                        str(tr.round),
                        str(seed),
                        _format_float(tr.f_val),
                        _format_float(tr.grad_norm_sq),
                        _format_float(math.nan if tr.dist_sq is None else tr.dist_sq),
                        _format_float(tr.g_norm_sq),
                    )
                )
            )
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def _summary_lines(
    rounds: np.ndarray,
    means: dict[str, np.ndarray],
    ses: dict[str, np.ndarray],
    bounds: dict[str, np.ndarray],
    bound_order: tuple[str, ...],
) -> list[str]:
    header = list(SUMMARY_COLUMNS) + [f"bound_{name}" for name in bound_order]
    lines = [",".join(header)]
    for t in rounds:
        row = [
            str(int(t)),
            _format_float(means["f"][t]),
            _format_float(ses["f"][t]),
            _format_float(means["grad_norm_sq"][t]),
            _format_float(ses["grad_norm_sq"][t]),
            _format_float(means["dist_sq"][t]),
            _format_float(ses["dist_sq"][t]),
        ]
        for name in bound_order:
            row.append(_format_float(bounds[name][t]))
        lines.append(",".join(row))
    return lines


def run_experiment(
    spec: ExperimentSpec, out_dir, threads: int = 1
) -> SummaryRecord:
    """Run the seed ensemble, write trace and summary CSVs, check bounds."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    problem = build_problem(spec.problem)
    cohort = spec.cohort if spec.cohort is not None else problem.num_clients
    if cohort > problem.num_clients:
        raise ConfigError(
            f"cohort ({cohort}) exceeds client count ({problem.num_clients})"
        )
    seeds = [spec.seed + i for i in range(spec.ensemble)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda s: _run_one(problem, spec, s), seeds))
    else:
        results = [_run_one(problem, spec, s) for s in seeds]
    stacks = _collect(results, spec.horizon)
    means = {}
    ses = {}
    for key in ("f", "grad_norm_sq", "dist_sq"):
        means[key], ses[key] = _mean_se(stacks[key])
    curves, checks = _bound_curves_and_checks(problem, spec, results, stacks, means, ses)
    rounds = np.arange(spec.horizon + 1)
    trace_path = out_dir / f"{spec.out_prefix}_traces.csv"
    summary_path = out_dir / f"{spec.out_prefix}_summary.csv"
    try:
        _write_traces(trace_path, results, spec)
        summary = _summary_lines(rounds, means, ses, curves, spec.bounds)
        summary_path.write_text("\n".join(summary) + "\n", encoding="ascii")
    except BaseException:
        trace_path.unlink(missing_ok=True)
        summary_path.unlink(missing_ok=True)
        raise
    return SummaryRecord(
        rounds=rounds,
        means=means,
        ses=ses,
        bounds=curves,
        checks=tuple(checks),
        divergence_count=sum(1 for r in results if r.diverged),
        n_seeds=len(results),
        trace_path=trace_path,
        summary_path=summary_path,
    )


def _derived_spec(spec: ExperimentSpec, axis: str, value: float, n: int) -> ExperimentSpec:
    if axis == "cstep":
        return dataclasses.replace(spec, cstep=float(value))
    if axis == "sstep":
        return dataclasses.replace(spec, sstep=float(value))
    if axis == "cohort":
        return dataclasses.replace(spec, cohort=int(value))
    if axis == "alpha":
        if spec.cstep is None:
            raise ConfigError("alpha sweep needs cstep")
        return dataclasses.replace(spec, sstep=float(value) * spec.cstep * n)
    raise ConfigError(f"unknown sweep axis {axis!r}; valid: {SWEEP_AXES}")


@dataclass(frozen=True, eq=False)
class SweepRecord:
    axis: str
    values: tuple[float, ...]
    records: dict[float, SummaryRecord]
    errors: dict[float, str]
    combined_path: Path | None


def run_sweep(
    spec: ExperimentSpec, axis: str, values, out_dir, threads: int = 1
) -> SweepRecord:
    """Run one ensemble per axis value with shared seeds; combine summaries."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; valid: {SWEEP_AXES}")
    values = tuple(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    probe = build_problem(spec.problem)
    n = probe.samples_per_client
    records: dict[float, SummaryRecord] = {}
    errors: dict[float, str] = {}
    combined = ["sweep_value," + ",".join(SUMMARY_COLUMNS)
                + "".join(f",bound_{b}" for b in spec.bounds)]
    for i, value in enumerate(values):
        try:
            derived = _derived_spec(spec, axis, value, n)
            derived = dataclasses.replace(
                derived, out_prefix=f"{spec.out_prefix}_{axis}{i}"
            )
            rec = run_experiment(derived, out_dir, threads=threads)
        except NastyaError as exc:
            errors[float(value)] = str(exc)
            continue
        records[float(value)] = rec
        body = _summary_lines(rec.rounds, rec.means, rec.ses, rec.bounds, spec.bounds)
        for line in body[1:]:
            combined.append(f"{_format_float(float(value))},{line}")
    combined_path = out_dir / f"{spec.out_prefix}_sweep_{axis}.csv"
    combined_path.write_text("\n".join(combined) + "\n", encoding="ascii")
    return SweepRecord(
        axis=axis,
        values=values,
        records=records,
        errors=errors,
        combined_path=combined_path,
    )
