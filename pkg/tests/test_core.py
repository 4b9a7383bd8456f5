"""System model tests: library, placement, subfile partition, schedules."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fogcoded import core
from fogcoded.errors import InvalidParams


def params(K=4, N=4, M=2.0, F=16, B=4, delta_b=2):
    return core.SystemParams(K=K, N=N, M=M, F=F, B=B, delta_b=delta_b)


class TestSystemParams:
    def test_valid(self):
        p = params()
        assert p.cache_ratio == 0.5
        assert p.cached_bits_per_file == 8

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(M=0.0),
            dict(M=4.0),
            dict(M=-1.0),
            dict(N=3),  # N < K
            dict(B=1),
            dict(delta_b=0),
            dict(delta_b=5),
            dict(F=0),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidParams):
            params(**kwargs)

    def test_delta_t(self):
        assert params().delta_t is None
        p = core.SystemParams(K=4, N=4, M=2, F=16, B=4, delta_b=2, T=4.0)
        assert p.delta_t == 1.0


class TestGenerateLibrary:
    def test_single_file_reproducible(self):
        p = core.SystemParams(K=1, N=1, M=0.5, F=8, B=2, delta_b=1)
        lib1 = core.generate_library(p, seed=0)
        lib2 = core.generate_library(p, seed=0)
        assert lib1.bits.shape == (1, 8)
        assert np.array_equal(lib1.bits, lib2.bits)

    def test_shape(self):
        p = core.SystemParams(K=2, N=4, M=1, F=16, B=2, delta_b=1)
        lib = core.generate_library(p, seed=7)
        assert lib.N == 4 and lib.F == 16
        assert set(np.unique(lib.bits)) <= {0, 1}

    def test_seed_changes_content(self):
        p = core.SystemParams(K=2, N=4, M=1, F=256, B=2, delta_b=1)
        a = core.generate_library(p, seed=1)
        b = core.generate_library(p, seed=2)
        assert not np.array_equal(a.bits, b.bits)


class TestPlaceCaches:
    def test_exact_quota(self):
        p = params()
        lib = core.generate_library(p, seed=0)
        caches = core.place_caches(lib, p, seed=1)
        for k in range(1, 5):
            for n in range(1, 5):
                assert len(caches.positions(k, n)) == 8

    def test_tiny_cache_is_empty(self):
        p = core.SystemParams(K=2, N=100, M=0.001, F=100, B=2, delta_b=1)
        lib = core.generate_library(p, seed=0)
        caches = core.place_caches(lib, p, seed=0)
        assert caches.cached.sum() == 0

    def test_overlap_concentration(self):
        # Two F-APs each cache exactly half of the file; their overlap is a
        # hypergeometric draw with mean F/4, bounded here by 3 binomial sigma.
        p = core.SystemParams(K=2, N=2, M=1.0, F=100_000, B=2, delta_b=1)
        lib = core.generate_library(p, seed=0)
        caches = core.place_caches(lib, p, seed=42)
        F = p.F
        for n in (1, 2):
            sets = [set(caches.positions(k, n)) for k in (1, 2)]
            assert len(sets[0]) == F // 2 and len(sets[1]) == F // 2
            overlap = len(sets[0] & sets[1]) / F
            sigma = math.sqrt(0.25 * 0.75 / F)
            assert abs(overlap - 0.25) <= 3 * sigma

    def test_independent_across_faps(self):
        p = params(F=4096)
        lib = core.generate_library(p, seed=0)
        caches = core.place_caches(lib, p, seed=3)
        assert not np.array_equal(caches.cached[0], caches.cached[1])


class TestExpectedSubfileSize:
    def test_worked_value(self):
        assert core.expected_subfile_size(params(), 3) == pytest.approx(1.0)

    def test_uniform_at_half_ratio(self):
        p = params()
        for s in range(1, 5):
            assert core.expected_subfile_size(p, s) == pytest.approx(1.0)

    def test_nothing_cached_limit(self):
        p = core.SystemParams(K=4, N=1000, M=1e-9, F=64, B=4, delta_b=2)
        assert core.expected_subfile_size(p, 1) == pytest.approx(64, rel=1e-6)

    def test_type_out_of_range(self):
        with pytest.raises(InvalidParams):
            core.expected_subfile_size(params(), 0)
        with pytest.raises(InvalidParams):
            core.expected_subfile_size(params(), 5)


class TestFixedLSchedule:
    def test_canonical_singletons(self):
        sched = core.make_fixed_L_schedule(4, 4, 1)
        assert [sched.requesters(b) for b in range(1, 5)] == [
            frozenset({b}) for b in range(1, 5)
        ]
        assert sched.demand == {k: k for k in range(1, 5)}

    def test_canonical_blocks(self):
        sched = core.make_fixed_L_schedule(6, 3, 2)
        assert sched.requesters(1) == {1, 2}
        assert sched.requesters(2) == {3, 4}
        assert sched.requesters(3) == {5, 6}

    def test_shape_mismatch(self):
        with pytest.raises(InvalidParams):
            core.make_fixed_L_schedule(5, 3, 2)

    def test_seeded_partition_is_valid_and_deterministic(self):
        a = core.make_fixed_L_schedule(8, 4, 2, seed=9)
        b = core.make_fixed_L_schedule(8, 4, 2, seed=9)
        assert a.slots == b.slots
        assert all(len(u) == 2 for u in a.slots)
        assert frozenset().union(*a.slots) == frozenset(range(1, 9))


class TestRandomSchedule:
    def test_equal_k_b_forces_singletons(self):
        sched = core.make_random_schedule(5, 5, seed=0)
        assert all(len(u) == 1 for u in sched.slots)

    def test_surjection(self):
        sched = core.make_random_schedule(8, 5, seed=1)
        sizes = [len(u) for u in sched.slots]
        assert sum(sizes) == 8 and min(sizes) >= 1

    def test_deterministic(self):
        assert (
            core.make_random_schedule(8, 5, seed=3).slots
            == core.make_random_schedule(8, 5, seed=3).slots
        )

    def test_too_few_faps(self):
        with pytest.raises(InvalidParams):
            core.make_random_schedule(4, 5, seed=0)

    @settings(max_examples=40, deadline=None)
    @given(
        st.integers(min_value=2, max_value=6),
        st.integers(min_value=0, max_value=8),
        st.integers(min_value=0, max_value=10_000),
    )
    def test_always_valid(self, b, extra, seed):
        k = b + extra
        sched = core.make_random_schedule(k, b, seed)
        assert sched.B == b and sched.K == k
        assert all(sched.slots)
        assert frozenset().union(*sched.slots) == frozenset(range(1, k + 1))
        assert sched.has_distinct_demands()


class TestScheduleValidation:
    def test_rejects_empty_slot(self):
        with pytest.raises(InvalidParams):
            core.RequestSchedule((frozenset({1}), frozenset()), {1: 1})

    def test_rejects_repeat(self):
        with pytest.raises(InvalidParams):
            core.RequestSchedule((frozenset({1}), frozenset({1})), {1: 1})

    def test_rejects_gap_in_coverage(self):
        with pytest.raises(InvalidParams):
            core.RequestSchedule((frozenset({1}), frozenset({3})), {1: 1, 3: 3})

    def test_deadline_slot(self):
        sched = core.make_fixed_L_schedule(4, 4, 1)
        assert sched.deadline_slot(1, 2) == 2
        assert sched.deadline_slot(4, 2) == 4
        assert sched.deadline_slot(3, 3) == 4  # clipped at B


class TestPartitionIntoSubfiles:
    def test_single_fap(self):
        # One F-AP, one slot: the table holds one class with every uncached
        # bit, and the cached bits stay in the locally held class.
        sched = core.RequestSchedule((frozenset({1}),), {1: 1})
        p = core.SystemParams(K=1, N=1, M=0.5, F=16, B=2, delta_b=1)
        lib = core.generate_library(p, seed=0)
        caches = core.place_caches(lib, p, seed=1)
        table = core.partition_into_subfiles(lib, caches, sched)
        keys = list(table.keys_for(1))
        assert keys == [(1, 0)]
        assert table.raw_length((1, 0)) == 8
        assert table.locally_held_bits(1) == 8

    def test_classes_partition_file(self):
        p = params()
        lib = core.generate_library(p, seed=0)
        caches = core.place_caches(lib, p, seed=1)
        sched = core.make_fixed_L_schedule(4, 4, 1)
        table = core.partition_into_subfiles(lib, caches, sched)
        for k in range(1, 5):
            covered = set(table.locally_held[k].tolist())
            total = table.locally_held_bits(k)
            for key in table.keys_for(k):
                pos = set(table.positions[key].tolist())
                assert not (covered & pos)
                covered |= pos
                total += len(pos)
            assert covered == set(range(p.F))
            assert total == p.F

    def test_exclusivity(self):
        # Bits in class (k, E) are cached at exactly the F-APs in E.
        p = params(F=64)
        lib = core.generate_library(p, seed=5)
        caches = core.place_caches(lib, p, seed=6)
        sched = core.make_fixed_L_schedule(4, 4, 1)
        table = core.partition_into_subfiles(lib, caches, sched)
        for (k, mask), pos in table.positions.items():
            n = sched.demand[k]
            for j in range(1, 5):
                held = caches.cached[j - 1, n - 1, pos]
                if j == k:
                    assert not held.any()
                elif mask & (1 << (j - 1)):
                    assert held.all()
                else:
                    assert not held.any()

    def test_size_concentration(self):
        # Every class length within 5 binomial sigma of its expectation.
        p = params(F=100_000)
        lib = core.generate_library(p, seed=0)
        caches = core.place_caches(lib, p, seed=7)
        sched = core.make_fixed_L_schedule(4, 4, 1)
        table = core.partition_into_subfiles(lib, caches, sched)
        for k in range(1, 5):
            seen = {}
            for key in table.keys_for(k):
                seen[key[1]] = table.raw_length(key)
            for mask in core.masks_excluding(4, k):
                s = mask.bit_count() + 1
                expect = core.expected_subfile_size(p, s)
                prob = expect / p.F
                sigma = math.sqrt(p.F * prob * (1 - prob))
                assert abs(seen.get(mask, 0) - expect) <= 5 * sigma

    def test_analytic_table_lengths(self):
        p = params()
        sched = core.make_fixed_L_schedule(4, 4, 1)
        table = core.analytic_subfile_table(p, sched)
        assert table.raw_length((1, core.mask_of({2, 3}))) == pytest.approx(1.0)
        total = table.table_bits(1)
        # Classes not cached at the requester cover (1 - M/N) of the file.
        assert total == pytest.approx(p.F * (1 - p.cache_ratio))


class TestMaskHelpers:
    def test_roundtrip(self):
        ids = {1, 3, 7}
        assert core.set_of(core.mask_of(ids)) == frozenset(ids)

    def test_iter_ascending(self):
        assert list(core.iter_ids(core.mask_of({5, 2, 9}))) == [2, 5, 9]

    def test_masks_excluding(self):
        masks = list(core.masks_excluding(3, 2))
        assert sorted(masks) == [0b000, 0b001, 0b100, 0b101]
