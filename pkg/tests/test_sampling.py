import itertools
import math

import numpy as np
import pytest

from nastya.errors import InputError, ResourceError
from nastya.sampling import (
    CohortSample,
    Permutation,
    Purpose,
    derive_stream,
    sample_cohort,
    sample_indices_with_replacement,
    sample_permutation,
    swr_formula,
    swr_moments_oracle,
)


class TestStreams:
    def test_same_inputs_reproduce(self):
        a = derive_stream(7, 3, 1, Purpose.PERMUTATION)
        b = derive_stream(7, 3, 1, Purpose.PERMUTATION)
        assert np.array_equal(a.integers(0, 1000, 100), b.integers(0, 1000, 100))

    def test_distinct_clients_differ(self):
        a = derive_stream(7, 0, 1, Purpose.PERMUTATION)
        b = derive_stream(7, 0, 2, Purpose.PERMUTATION)
        assert not np.array_equal(a.integers(0, 1000, 50), b.integers(0, 1000, 50))

    def test_distinct_purposes_differ(self):
        a = derive_stream(7, 0, None, Purpose.COHORT)
        b = derive_stream(7, 0, None, Purpose.PERMUTATION)
        assert not np.array_equal(a.integers(0, 1000, 50), b.integers(0, 1000, 50))

    def test_isolation_from_other_draws(self):
        # client 2's stream does not depend on client 1 having drawn first
        first = derive_stream(9, 4, 2, Purpose.PERMUTATION).integers(0, 10**6, 20)
        _ = derive_stream(9, 4, 1, Purpose.PERMUTATION).integers(0, 10**6, 1000)
        second = derive_stream(9, 4, 2, Purpose.PERMUTATION).integers(0, 10**6, 20)
        assert np.array_equal(first, second)

    def test_round_range_validated(self):
        with pytest.raises(InputError):
            derive_stream(1, -1, None, Purpose.COHORT)


class TestPermutation:
    def test_n1(self):
        assert sample_permutation(1, derive_stream(0, 0, 0, Purpose.PERMUTATION)).order == (0,)

    def test_bijection(self):
        rng = derive_stream(5, 0, 0, Purpose.PERMUTATION)
        for n in (2, 3, 7, 20):
            order = sample_permutation(n, rng).order
            assert sorted(order) == list(range(n))

    def test_invalid_rejected(self):
        with pytest.raises(InputError):
            sample_permutation(0, derive_stream(0, 0, 0, Purpose.PERMUTATION))
        with pytest.raises(InputError):
            Permutation((0, 0, 1))

    def test_uniform_over_all_permutations(self):
        # 60k draws of n=3: each of the 6 orders has frequency 1/6 +- 0.01
        rng = derive_stream(123, 0, 0, Purpose.PERMUTATION)
        counts = {p: 0 for p in itertools.permutations(range(3))}
        draws = 60_000
        for _ in range(draws):
            counts[sample_permutation(3, rng).order] += 1
        for count in counts.values():
            assert abs(count / draws - 1 / 6) <= 0.01


class TestCohort:
    def test_full_participation(self):
        rng = derive_stream(1, 0, None, Purpose.COHORT)
        for _ in range(10):
            assert sample_cohort(5, 5, rng).members == (0, 1, 2, 3, 4)

    def test_out_of_range(self):
        rng = derive_stream(1, 0, None, Purpose.COHORT)
        with pytest.raises(InputError):
            sample_cohort(3, 0, rng)
        with pytest.raises(InputError):
            sample_cohort(3, 4, rng)
        with pytest.raises(InputError):
            CohortSample((2, 1))

    def test_uniform_over_subsets(self):
        rng = derive_stream(77, 0, None, Purpose.COHORT)
        counts = {(0, 1): 0, (0, 2): 0, (1, 2): 0}
        draws = 30_000
        for _ in range(draws):
            counts[sample_cohort(3, 2, rng).members] += 1
        for count in counts.values():
            assert abs(count / draws - 1 / 3) <= 0.02

    def test_singletons_uniform(self):
        M = 3
        rng = derive_stream(78, 0, None, Purpose.COHORT)
        counts = [0] * M
        draws = 10_000 * M
        for _ in range(draws):
            counts[sample_cohort(M, 1, rng).members[0]] += 1
        for count in counts:
            assert abs(count / draws - 1 / M) <= 0.02


class TestWithReplacement:
    def test_range_and_determinism(self):
        a = sample_indices_with_replacement(4, 12, derive_stream(3, 1, 0, Purpose.PERMUTATION))
        b = sample_indices_with_replacement(4, 12, derive_stream(3, 1, 0, Purpose.PERMUTATION))
        assert a == b
        assert all(0 <= v < 4 for v in a)

    def test_n1_always_zero(self):
        draws = sample_indices_with_replacement(1, 8, derive_stream(3, 0, 0, Purpose.PERMUTATION))
        assert draws == (0,) * 8


class TestSwrFormula:
    def test_whole_population(self):
        assert swr_formula(3.7, 5, 5) == 0.0

    def test_single_draw(self):
        assert swr_formula(3.7, 5, 1) == pytest.approx(3.7, rel=1e-15)

    def test_hand_case(self):
        # subsets of {1,2,3} of size 2 have means {1.5, 2, 2.5}; variance 1/6
        assert swr_formula(2.0 / 3.0, 3, 2) == pytest.approx(1.0 / 6.0, rel=1e-15)

    def test_n1(self):
        assert swr_formula(0.0, 1, 1) == 0.0

    def test_bad_k(self):
        with pytest.raises(InputError):
            swr_formula(1.0, 3, 0)
        with pytest.raises(InputError):
            swr_formula(1.0, 3, 4)


class TestSwrOracle:
    def test_hand_case(self):
        mean, var = swr_moments_oracle(np.array([1.0, 2.0, 3.0]), 2)
        assert mean[0] == pytest.approx(2.0, abs=1e-14)
        assert var == pytest.approx(1.0 / 6.0, rel=1e-12)

    def test_identical_vectors(self):
        X = np.ones((5, 2)) * 1.3
        _, var = swr_moments_oracle(X, 3)
        assert var == 0.0

    def test_k_equals_n(self):
        X = np.arange(12, dtype=float).reshape(4, 3)
        _, var = swr_moments_oracle(X, 4)
        assert var == 0.0

    def test_enumeration_bound(self):
        with pytest.raises(ResourceError):
            swr_moments_oracle(np.zeros(13), 2)

    def test_matches_formula_on_random_cases(self, rng):
        # numerical proof of the subset-mean variance identity
        for _ in range(60):
            n = int(rng.integers(1, 8))
            d = int(rng.integers(1, 4))
            k = int(rng.integers(1, n + 1))
            X = rng.normal(size=(n, d))
            dev = X - X.mean(axis=0)
            sigma_sq = float(np.einsum("nd,nd->", dev, dev)) / n
            mean, var = swr_moments_oracle(X, k)
            assert np.linalg.norm(mean - X.mean(axis=0)) <= 1e-12
            expected = swr_formula(sigma_sq, n, k)
            if expected == 0.0:
                assert var <= 1e-20
            else:
                assert abs(var - expected) / expected <= 1e-10
