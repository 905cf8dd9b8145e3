"""Finite-sum federated objectives and their exact oracles.

A problem is M clients, each holding n differentiable sample losses; the
objective is the flat average over all M*n samples. Generators produce
synthetic quadratic, logistic-regression and bounded-rational instances
whose constants (smoothness, strong convexity, optimum) are known exactly
or estimated by an explicit descent oracle.

Problem objects are immutable after construction; all oracles are pure.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels as kernels
from .errors import CapabilityError, DegeneracyError, InputError, ParseError

# Second Philox key word for each generator, so problem construction never
# shares streams with the run-time sampling module.
_TAG_QUADRATIC = 101
_TAG_LOGREG = 102
_TAG_RATIONAL = 103
_TAG_DESCENT = 104


class Convexity(Enum):
    STRONGLY_CONVEX = "strongly_convex"
    CONVEX = "convex"
    NONCONVEX = "nonconvex"


def as_vector(x, dim: int | None = None) -> np.ndarray:
    """Validate and convert to a finite 1-d float64 array."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise InputError(f"expected a 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InputError("vector entries must be finite")
    if dim is not None and v.size != dim:
        raise InputError(f"dimension mismatch: expected {dim}, got {v.size}")
    return v


@dataclass(frozen=True, eq=False)
class SampleLoss:
    """One differentiable sample loss with optional known constants."""

    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    smoothness: float | None = None
    infimum: float | None = None
    minimizer: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class ClientDataset:
    """The n sample losses held by one client; all share dimension `dim`."""

    samples: tuple[SampleLoss, ...]
    dim: int

    def __post_init__(self):
        if len(self.samples) < 1:
            raise InputError("client must hold at least one sample")
        if self.dim < 1:
            raise InputError("dimension must be >= 1")

    @property
    def n(self) -> int:
        return len(self.samples)


@dataclass(frozen=True, eq=False)
class QuadraticData:
    """Array form of quadratic samples 0.5 (x-c)^T A (x-c)."""

    hessians: np.ndarray  # (M, n, d, d)
    centers: np.ndarray  # (M, n, d)


@dataclass(frozen=True, eq=False)
class LogisticData:
    """Array form of samples log(1 + exp(-y a^T x)) + lam/2 ||x||^2."""

    features: np.ndarray  # (M, n, d)
    labels: np.ndarray  # (M, n), entries in {-1, +1}
    lam: float


@dataclass(frozen=True, eq=False)
class RationalData:
    """Array form of samples s^2/(1+s^2) with s = a^T x - b."""

    slopes: np.ndarray  # (M, n, d)
    offsets: np.ndarray  # (M, n)


ProblemData = QuadraticData | LogisticData | RationalData


@dataclass(frozen=True, eq=False)
class FederatedProblem:
    """M clients x n samples with global smoothness/convexity constants.

    `data` holds the stacked array form when the instance belongs to one of
    the structured families; the engine uses it to run compiled passes. The
    per-sample oracles in `clients` are always present and authoritative.
    """

    clients: tuple[ClientDataset, ...]
    smoothness: float  # L
    strong_convexity: float  # mu; 0 means not strongly convex
    convexity: Convexity
    x_star: np.ndarray | None = None
    f_star: float | None = None
    f_star_tol: float | None = None
    data: ProblemData | None = None

    def __post_init__(self):
        if len(self.clients) < 1:
            raise InputError("problem must have at least one client")
        n = self.clients[0].n
        dim = self.clients[0].dim
        for m, client in enumerate(self.clients):
            if client.n != n:
                raise InputError(
                    f"all clients must hold the same number of samples: "
                    f"client 0 has {n}, client {m} has {client.n}"
                )
            if client.dim != dim:
                raise InputError("all clients must share the same dimension")
        if self.smoothness <= 0:
            raise InputError("smoothness constant must be > 0")
        if self.strong_convexity < 0:
            raise InputError("strong convexity constant must be >= 0")
        if self.strong_convexity > self.smoothness:
            raise InputError("strong convexity cannot exceed smoothness")

    @property
    def num_clients(self) -> int:
        return len(self.clients)

    @property
    def samples_per_client(self) -> int:
        return self.clients[0].n

    @property
    def dim(self) -> int:
        return self.clients[0].dim


def value_and_grad(problem: FederatedProblem, x) -> tuple[float, np.ndarray]:
    """Objective value and gradient at x, averaged flat over all samples."""
    x = as_vector(x, problem.dim)
    data = problem.data
    if isinstance(data, QuadraticData):
        return kernels.quad_value_grad(data.hessians, data.centers, x)
    if isinstance(data, LogisticData):
        return kernels.logreg_value_grad(data.features, data.labels, data.lam, x)
    if isinstance(data, RationalData):
        return kernels.rat_value_grad(data.slopes, data.offsets, x)
    total_v = 0.0
    total_g = np.zeros(problem.dim)
    for client in problem.clients:
        for sample in client.samples:
            total_v += sample.value(x)
            total_g += sample.grad(x)
    count = problem.num_clients * problem.samples_per_client
    return total_v / count, total_g / count


def eval_f(problem: FederatedProblem, x) -> float:
    """Objective value f(x) = (1/(M n)) sum_m sum_i f_m^i(x)."""
    return value_and_grad(problem, x)[0]


def grad_f(problem: FederatedProblem, x) -> np.ndarray:
    """Objective gradient at x."""
    return value_and_grad(problem, x)[1]


def finite_difference_gradient(
    value: Callable[[np.ndarray], float], x: np.ndarray, h: float | None = None
) -> np.ndarray:
    """Central-difference gradient, the independent check for analytic ones."""
    x = np.asarray(x, dtype=np.float64)
    if h is None:
        h = 1e-5 * (1.0 + float(np.linalg.norm(x)))
    g = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (value(x + e) - value(x - e)) / (2.0 * h)
    return g


# -- quadratic problems -------------------------------------------------------


def _quad_sample(hess: np.ndarray, center: np.ndarray, smoothness: float) -> SampleLoss:
    def value(x, A=hess, c=center):
        diff = x - c
        return 0.5 * float(diff @ (A @ diff))

    def grad(x, A=hess, c=center):
        return A @ (x - c)

    return SampleLoss(
        value=value,
        grad=grad,
        smoothness=smoothness,
        infimum=0.0,
        minimizer=center.copy(),
    )


def quadratic_problem_from_parts(
    hessians, centers, x0_solve: bool = True
) -> FederatedProblem:
    """Build a quadratic problem from explicit per-sample (A, c) arrays.

    hessians has shape (M, n, d, d) and must be symmetric PSD; centers has
    shape (M, n, d). Constants are derived: L is the largest and mu the
    smallest eigenvalue over all sample Hessians.
    """
    hessians = np.ascontiguousarray(np.asarray(hessians, dtype=np.float64))
    centers = np.ascontiguousarray(np.asarray(centers, dtype=np.float64))
    if hessians.ndim != 4 or centers.ndim != 3:
        raise InputError("expected hessians (M,n,d,d) and centers (M,n,d)")
    M, n, d = centers.shape
    if hessians.shape != (M, n, d, d):
        raise InputError("hessian and center shapes are inconsistent")
    eigs = np.linalg.eigvalsh(hessians.reshape(M * n, d, d))
    mu = float(eigs.min())
    L = float(eigs.max())
    if L <= 0:
        raise InputError("sample Hessians must have a positive eigenvalue")
    if mu < -1e-12 * L:
        raise InputError("sample Hessians must be positive semidefinite")
    mu = max(mu, 0.0)
    sample_L = eigs.reshape(M, n, d).max(axis=2)
    clients = tuple(
        ClientDataset(
            samples=tuple(
                _quad_sample(hessians[m, i], centers[m, i], float(sample_L[m, i]))
                for i in range(n)
            ),
            dim=d,
        )
        for m in range(M)
    )
    convexity = Convexity.STRONGLY_CONVEX if mu > 0 else Convexity.CONVEX
    problem = FederatedProblem(
        clients=clients,
        smoothness=L,
        strong_convexity=mu,
        convexity=convexity,
        data=QuadraticData(hessians=hessians, centers=centers),
    )
    if x0_solve:
        x_star = solve_quadratic_optimum(problem)
        problem = dataclasses.replace(
            problem, x_star=x_star, f_star=eval_f(problem, x_star)
        )
    return problem


def make_quadratic_problem(
    M: int,
    n: int,
    d: int,
    mu: float,
    L: float,
    heterogeneity: float,
    seed: int,
) -> FederatedProblem:
    """Generate a strongly convex quadratic instance with a known optimum.

    Every client holds the same template of n sample Hessians and base
    centers; client m shifts all its centers by an offset drawn uniformly
    from the sphere of radius `heterogeneity`, so the radius gives monotone
    control of cross-client gradient variance, and radius 0 makes all
    clients identical. Sample Hessian eigenvalues lie in [mu, L] with both
    endpoints attained whenever d >= 2.
    """
    if M < 1 or n < 1 or d < 1:
        raise InputError("M, n, d must all be >= 1")
    if mu <= 0:
        raise InputError(f"mu must be > 0, got {mu}")
    if mu > L:
        raise InputError(f"mu must not exceed L, got mu={mu}, L={L}")
    if heterogeneity < 0:
        raise InputError("heterogeneity must be >= 0")
    rng = np.random.Generator(
        np.random.Philox(key=np.array([seed, _TAG_QUADRATIC], dtype=np.uint64))
    )
    hess_template = np.empty((n, d, d))
    for i in range(n):
        if d == 1:
            hess_template[i] = np.array([[L]])
        else:
            eigs = np.concatenate(([mu, L], rng.uniform(mu, L, size=d - 2)))
            rng.shuffle(eigs)
            Q, _ = np.linalg.qr(rng.normal(size=(d, d)))
            A = (Q * eigs) @ Q.T
            hess_template[i] = 0.5 * (A + A.T)
    center_template = rng.normal(size=(n, d))
    offsets = np.zeros((M, d))
    for m in range(M):
        v = rng.normal(size=d)
        norm = float(np.linalg.norm(v))
        if norm > 0:
            offsets[m] = heterogeneity * v / norm
    hessians = np.ascontiguousarray(np.broadcast_to(hess_template, (M, n, d, d)))
    centers = np.ascontiguousarray(center_template[None, :, :] + offsets[:, None, :])
    problem = quadratic_problem_from_parts(hessians, centers)
    # keep the requested constants: they bound the realized spectra exactly
    return dataclasses.replace(problem, smoothness=float(L), strong_convexity=float(mu))


def solve_quadratic_optimum(problem: FederatedProblem) -> np.ndarray:
    """Exact minimizer of a quadratic problem via its average Hessian."""
    data = problem.data
    if not isinstance(data, QuadraticData):
        raise InputError("problem is not quadratic")
    a_bar = data.hessians.mean(axis=(0, 1))
    rhs = np.einsum("mnij,mnj->i", data.hessians, data.centers) / (
        data.centers.shape[0] * data.centers.shape[1]
    )
    try:
        x_star = np.linalg.solve(a_bar, rhs)
    except np.linalg.LinAlgError as exc:
        raise DegeneracyError(f"average Hessian is singular: {exc}") from exc
    residual = float(np.linalg.norm(grad_f(problem, x_star)))
    if residual > 1e-10 * (1.0 + float(np.linalg.norm(x_star))):
        raise DegeneracyError(
            f"average Hessian is too ill-conditioned: residual {residual:.3e}"
        )
    return x_star


# -- logistic regression ------------------------------------------------------


def parse_libsvm(path) -> list[tuple[float, dict[int, float]]]:
    """Read sparse labeled rows from a LibSVM-format text file.

    Each line is "label idx:val idx:val ..." with ASCII whitespace, 1-based
    strictly increasing indices, and optional trailing '#' comments. Returns
    (label, {index: value}) pairs in file order.
    """
    rows: list[tuple[float, dict[int, float]]] = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                label = float(parts[0])
            except ValueError:
                raise ParseError(f"bad label {parts[0]!r}", line=lineno) from None
            features: dict[int, float] = {}
            prev = 0
            for token in parts[1:]:
                idx_s, sep, val_s = token.partition(":")
                if not sep:
                    raise ParseError(f"bad feature token {token!r}", line=lineno)
                try:
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise ParseError(
                        f"bad feature token {token!r}", line=lineno
                    ) from None
                if idx < 1:
                    raise ParseError(f"feature index must be >= 1, got {idx}", line=lineno)
                if idx <= prev:
                    raise ParseError(
                        f"feature indices must be strictly increasing, got {idx} after {prev}",
                        line=lineno,
                    )
                features[idx] = val
                prev = idx
            rows.append((label, features))
    return rows


def _coerce_label(label: float) -> float:
    if label == 1:
        return 1.0
    if label in (-1, 0, 2):
        return -1.0
    raise InputError(f"label not coercible to -1/+1: {label}")


def _logreg_sample(a: np.ndarray, y: float, lam: float) -> SampleLoss:
    def value(x, a=a, y=y, lam=lam):
        z = y * float(a @ x)
        return float(np.logaddexp(0.0, -z)) + 0.5 * lam * float(x @ x)

    def grad(x, a=a, y=y, lam=lam):
        z = y * float(a @ x)
        if z >= 0:
            e = np.exp(-z)
            s = e / (1.0 + e)
        else:
            s = 1.0 / (1.0 + np.exp(z))
        return (-y * s) * a + lam * x

    return SampleLoss(
        value=value, grad=grad, smoothness=0.25 * float(a @ a) + lam
    )


def make_logreg_problem(
    rows: Sequence[tuple[float, dict[int, float]]],
    M: int,
    lam: float,
    seed: int,
) -> FederatedProblem:
    """Partition labeled rows into an l2-regularized logistic problem.

    Rows are shuffled once by `seed`, truncated to M*n with n = count//M,
    and split contiguously into M clients. Stored constants: L is the
    standard per-sample bound max_i ||a_i||^2 / 4 + lam, and mu = lam.
    """
    if M < 1:
        raise InputError("M must be >= 1")
    if lam < 0:
        raise InputError("regularization must be >= 0")
    if len(rows) < M:
        raise InputError(f"need at least {M} rows, got {len(rows)}")
    dim = max((max(feats) for _, feats in rows if feats), default=0)
    if dim < 1:
        raise InputError("rows contain no features")
    labels_all = np.array([_coerce_label(label) for label, _ in rows])
    dense = np.zeros((len(rows), dim))
    for r, (_, feats) in enumerate(rows):
        for idx, val in feats.items():
            dense[r, idx - 1] = val
    rng = np.random.Generator(
        np.random.Philox(key=np.array([seed, _TAG_LOGREG], dtype=np.uint64))
    )
    perm = np.arange(len(rows))
    for i in range(len(rows) - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    n = len(rows) // M
    keep = perm[: M * n]
    features = np.ascontiguousarray(dense[keep].reshape(M, n, dim))
    labels = np.ascontiguousarray(labels_all[keep].reshape(M, n))
    L = 0.25 * float(np.max(np.einsum("mnd,mnd->mn", features, features))) + lam
    clients = tuple(
        ClientDataset(
            samples=tuple(
                _logreg_sample(features[m, i], float(labels[m, i]), lam)
                for i in range(n)
            ),
            dim=dim,
        )
        for m in range(M)
    )
    return FederatedProblem(
        clients=clients,
        smoothness=L,
        strong_convexity=lam,
        convexity=Convexity.STRONGLY_CONVEX if lam > 0 else Convexity.CONVEX,
        data=LogisticData(features=features, labels=labels, lam=lam),
    )


# -- bounded rational (nonconvex) ---------------------------------------------


def _rat_sample(a: np.ndarray, b: float, smoothness: float) -> SampleLoss:
    def value(x, a=a, b=b):
        s = float(a @ x) - b
        return s * s / (1.0 + s * s)

    def grad(x, a=a, b=b):
        s = float(a @ x) - b
        q = 1.0 + s * s
        return (2.0 * s / (q * q)) * a

    return SampleLoss(value=value, grad=grad, smoothness=smoothness, infimum=0.0)


def make_nonconvex_problem(M: int, n: int, d: int, seed: int) -> FederatedProblem:
    """Generate a smooth bounded nonconvex instance with exact sample infima.

    Each sample is s^2/(1+s^2) of an affine score, so it is nonnegative with
    infimum exactly 0 (attained on a hyperplane). The global minimum value
    is estimated by the multi-start descent oracle and stored together with
    the estimation tolerance.
    """
    if M < 1 or n < 1 or d < 1:
        raise InputError("M, n, d must all be >= 1")
    rng = np.random.Generator(
        np.random.Philox(key=np.array([seed, _TAG_RATIONAL], dtype=np.uint64))
    )
    slopes = np.ascontiguousarray(rng.normal(size=(M, n, d)))
    offsets = np.ascontiguousarray(rng.normal(size=(M, n)))
    # |d^2/ds^2 [s^2/(1+s^2)]| <= 2, so each sample is 2 ||a||^2 smooth
    row_sq = np.einsum("mnd,mnd->mn", slopes, slopes)
    L = 2.0 * float(row_sq.max())
    clients = tuple(
        ClientDataset(
            samples=tuple(
                _rat_sample(slopes[m, i], float(offsets[m, i]), 2.0 * float(row_sq[m, i]))
                for i in range(n)
            ),
            dim=d,
        )
        for m in range(M)
    )
    problem = FederatedProblem(
        clients=clients,
        smoothness=L,
        strong_convexity=0.0,
        convexity=Convexity.NONCONVEX,
        data=RationalData(slopes=slopes, offsets=offsets),
    )
    estimate = estimate_f_star(problem, restarts=8, tol=1e-9)
    return dataclasses.replace(
        problem, f_star=estimate.value, f_star_tol=estimate.tol
    )


# -- descent oracle -----------------------------------------------------------


@dataclass(frozen=True)
class FStarEstimate:
    """Best objective value found by multi-start gradient descent.

    The value is an upper bound on the true infimum; `converged` reports
    whether every restart reached the gradient tolerance within the
    iteration cap.
    """

    value: float
    minimizer: np.ndarray
    grad_norm: float
    tol: float
    converged: bool


def estimate_f_star(
    problem: FederatedProblem,
    restarts: int,
    tol: float,
    max_iters: int = 50_000,
) -> FStarEstimate:
    """Estimate inf f by gradient descent with step 1/L from several starts.

    The first start is the known optimum when stored (so one restart from
    the optimum returns f_star immediately), otherwise the origin; further
    starts are deterministic Gaussian points.
    """
    if restarts < 1:
        raise InputError("restarts must be >= 1")
    d = problem.dim
    rng = np.random.Generator(
        np.random.Philox(key=np.array([_TAG_DESCENT, d], dtype=np.uint64))
    )
    starts = [problem.x_star if problem.x_star is not None else np.zeros(d)]
    for _ in range(restarts - 1):
        starts.append(rng.normal(size=d))
    step = 1.0 / problem.smoothness
    best_value = np.inf
    best_x = starts[0]
    best_grad = np.inf
    all_converged = True
    for x0 in starts:
        x = np.array(x0, dtype=np.float64)
        converged = False
        for _ in range(max_iters):
            f, g = value_and_grad(problem, x)
            gnorm = float(np.linalg.norm(g))
            if gnorm <= tol:
                converged = True
                break
            x = x - step * g
        f, g = value_and_grad(problem, x)
        gnorm = float(np.linalg.norm(g))
        all_converged = all_converged and (converged or gnorm <= tol)
        if f < best_value:
            best_value, best_x, best_grad = f, x, gnorm
    return FStarEstimate(
        value=float(best_value),
        minimizer=best_x,
        grad_norm=best_grad,
        tol=tol,
        converged=all_converged,
    )


def client_subproblem(problem: FederatedProblem, m: int) -> FederatedProblem:
    """View client m as a standalone single-client problem."""
    if not 0 <= m < problem.num_clients:
        raise InputError(f"client index out of range: {m}")
    data = problem.data
    sliced: ProblemData | None = None
    if isinstance(data, QuadraticData):
        sliced = QuadraticData(
            hessians=np.ascontiguousarray(data.hessians[m : m + 1]),
            centers=np.ascontiguousarray(data.centers[m : m + 1]),
        )
    elif isinstance(data, LogisticData):
        sliced = LogisticData(
            features=np.ascontiguousarray(data.features[m : m + 1]),
            labels=np.ascontiguousarray(data.labels[m : m + 1]),
            lam=data.lam,
        )
    elif isinstance(data, RationalData):
        sliced = RationalData(
            slopes=np.ascontiguousarray(data.slopes[m : m + 1]),
            offsets=np.ascontiguousarray(data.offsets[m : m + 1]),
        )
    return FederatedProblem(
        clients=(problem.clients[m],),
        smoothness=problem.smoothness,
        strong_convexity=problem.strong_convexity,
        convexity=problem.convexity,
        data=sliced,
    )
