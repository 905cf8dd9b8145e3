"""All randomness used by the simulator.

Every random draw flows through a counter-based stream keyed by
(master seed, round, client, purpose), so the draws of one client never
depend on whether another client drew first, and the whole schedule of
cohorts and permutations is a pure function of the seed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import InputError, ResourceError

# Key packing limits: 2 bits purpose | 30 bits round | 32 bits client slot.
MAX_ROUNDS = 2**30
MAX_CLIENTS = 2**32 - 2

# Subset enumeration in swr_moments_oracle is capped at C(12, 6) = 924 subsets.
MAX_ENUMERATION_N = 12


class Purpose(IntEnum):
    COHORT = 0
    PERMUTATION = 1


@dataclass(frozen=True)
class Permutation:
    """A bijection on {0, ..., n-1}: every index appears exactly once."""

    order: tuple[int, ...]

    def __post_init__(self):
        n = len(self.order)
        if n < 1:
            raise InputError("permutation must have length >= 1")
        if sorted(self.order) != list(range(n)):
            raise InputError("permutation is not a bijection on 0..n-1")

    def __len__(self) -> int:
        return len(self.order)


@dataclass(frozen=True)
class CohortSample:
    """A set of C distinct client ids, stored sorted ascending."""

    members: tuple[int, ...]

    def __post_init__(self):
        if len(self.members) < 1:
            raise InputError("cohort must contain at least one client")
        if list(self.members) != sorted(set(self.members)):
            raise InputError("cohort members must be distinct and sorted")

    def __len__(self) -> int:
        return len(self.members)


def derive_stream(
    master_seed: int,
    round_index: int,
    client: int | None,
    purpose: Purpose,
) -> np.random.Generator:
    """Return the independent RNG stream for one (round, client, purpose) slot.

    Uses Philox keyed by the packed coordinates, so distinct slots give
    statistically independent streams and identical inputs always reproduce
    the identical sequence regardless of platform or call order.
    """
    if not 0 <= round_index < MAX_ROUNDS:
        raise InputError(f"round index out of range: {round_index}")
    if client is not None and not 0 <= client <= MAX_CLIENTS:
        raise InputError(f"client id out of range: {client}")
    if not 0 <= master_seed < 2**64:
        raise InputError(f"master seed must fit in uint64: {master_seed}")
    slot = 0 if client is None else client + 1
    word = (int(purpose) << 62) | (round_index << 32) | slot
    key = np.array([master_seed, word], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_permutation(n: int, rng: np.random.Generator) -> Permutation:
    """Draw a uniform permutation of {0, ..., n-1} by Fisher-Yates."""
    if n < 1:
        raise InputError(f"permutation length must be >= 1, got {n}")
    order = list(range(n))
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        order[i], order[j] = order[j], order[i]
    return Permutation(tuple(order))


def sample_cohort(M: int, C: int, rng: np.random.Generator) -> CohortSample:
    """Draw a uniform size-C subset of {0, ..., M-1} by partial Fisher-Yates."""
    if M < 1:
        raise InputError(f"client count must be >= 1, got {M}")
    if not 1 <= C <= M:
        raise InputError(f"cohort size must satisfy 1 <= C <= {M}, got {C}")
    pool = list(range(M))
    for i in range(C):
        j = i + int(rng.integers(0, M - i))
        pool[i], pool[j] = pool[j], pool[i]
    return CohortSample(tuple(sorted(pool[:C])))


def sample_indices_with_replacement(
    n: int, count: int, rng: np.random.Generator
) -> tuple[int, ...]:
    """Draw `count` i.i.d. uniform indices from {0, ..., n-1}."""
    if n < 1:
        raise InputError(f"index range must be >= 1, got {n}")
    if count < 1:
        raise InputError(f"draw count must be >= 1, got {count}")
    return tuple(int(v) for v in rng.integers(0, n, size=count))


def swr_formula(sigma_sq: float, n: int, k: int) -> float:
    """Variance of the mean of k items sampled without replacement from n.

    Returns (n-k)/(k*(n-1)) * sigma_sq, where sigma_sq is the population
    variance. The n = 1 case (which forces k = 1) is 0: the subset mean is
    deterministic.
    """
    if sigma_sq < 0:
        raise InputError(f"population variance must be >= 0, got {sigma_sq}")
    if not 1 <= k <= n:
        raise InputError(f"subset size must satisfy 1 <= k <= {n}, got {k}")
    if n == 1:
        return 0.0
    return (n - k) / (k * (n - 1)) * sigma_sq


def swr_moments_oracle(X: np.ndarray, k: int) -> tuple[np.ndarray, float]:
    """Exact subset-mean moments by enumerating all C(n, k) subsets.

    X has shape (n,) or (n, d). Returns the average of subset means (which
    must equal the population mean) and the average squared distance of the
    subset mean from the population mean. Independent of swr_formula: this
    is a brute-force enumeration, not a closed form.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InputError(f"expected 1-d or 2-d sample array, got ndim={X.ndim}")
    n = X.shape[0]
    if n > MAX_ENUMERATION_N:
        raise ResourceError(
            f"enumeration limited to n <= {MAX_ENUMERATION_N}, got n={n}"
        )
    if not 1 <= k <= n:
        raise InputError(f"subset size must satisfy 1 <= k <= {n}, got {k}")
    pop_mean = X.mean(axis=0)
    mean_acc = np.zeros(X.shape[1])
    var_acc = 0.0
    count = 0
    for subset in itertools.combinations(range(n), k):
        sub_mean = X[list(subset)].mean(axis=0)
        mean_acc += sub_mean
        dev = sub_mean - pop_mean
        var_acc += float(dev @ dev)
        count += 1
    assert count == math.comb(n, k)
    return mean_acc / count, var_acc / count
