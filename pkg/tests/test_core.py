import itertools

import pytest

from mullab.core import (
    Attribute,
    LabelSet,
    MLDataset,
    Schema,
    UniverseMismatch,
    dataset_stats,
    label_cardinality,
    label_density,
    labelset_symdiff_count,
)

from synth import random_dataset


def ls(indices, m):
    return LabelSet.from_indices(indices, m)


class TestLabelSet:
    def test_bits_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            LabelSet(8, 3)
        with pytest.raises(ValueError):
            LabelSet(-1, 3)

    def test_from_indices_and_membership(self):
        s = ls([0, 2], 4)
        assert s.cardinality() == 2
        assert 0 in s and 2 in s
        assert 1 not in s and 3 not in s
        assert s.indices() == (0, 2)

    def test_from_indices_out_of_universe(self):
        with pytest.raises(ValueError):
            ls([5], 3)

    def test_set_algebra(self):
        a, b = ls([0, 1], 3), ls([1, 2], 3)
        assert a.union(b) == ls([0, 1, 2], 3)
        assert a.intersection(b) == ls([1], 3)
        assert a.complement() == ls([2], 3)

    def test_hashable_for_distinct_counting(self):
        assert len({ls([0], 2), ls([0], 2), ls([1], 2)}) == 2


class TestSymdiff:
    def test_identical_sets(self):
        a = ls([1, 3], 5)
        assert labelset_symdiff_count(a, a) == 0

    def test_partial_overlap(self):
        assert labelset_symdiff_count(ls([0, 2], 3), ls([1, 2], 3)) == 2

    def test_full_vs_empty(self):
        assert labelset_symdiff_count(LabelSet.full(6), LabelSet.empty(6)) == 6

    def test_universe_mismatch(self):
        with pytest.raises(UniverseMismatch):
            labelset_symdiff_count(ls([0], 2), ls([0], 3))

    def test_union_minus_intersection_identity_exhaustive(self):
        # |a Δ b| == |a ∪ b| - |a ∩ b| over every pair of subsets, M <= 6
        for m in range(7):
            for abits, bbits in itertools.product(range(1 << m), repeat=2):
                a, b = LabelSet(abits, m), LabelSet(bbits, m)
                expected = (
                    a.union(b).cardinality() - a.intersection(b).cardinality()
                )
                assert labelset_symdiff_count(a, b) == expected


def tiny_dataset(labelsets, m):
    schema = Schema((Attribute("x"),), tuple(f"L{j}" for j in range(m)))
    rows = [((float(i),), s) for i, s in enumerate(labelsets)]
    return MLDataset(schema, rows)


class TestStats:
    def test_cardinality_single_label_rows(self):
        d = tiny_dataset([ls([0], 3), ls([1], 3), ls([2], 3)], 3)
        assert label_cardinality(d) == 1.0

    def test_cardinality_mixed(self):
        d = tiny_dataset([ls([0, 1], 4), ls([2], 4)], 4)
        assert label_cardinality(d) == pytest.approx(1.5)

    def test_density_single_label_universe(self):
        d = tiny_dataset([ls([0], 1), ls([0], 1)], 1)
        assert label_density(d) == 1.0

    def test_empty_dataset_errors(self):
        d = tiny_dataset([], 2)
        with pytest.raises(ValueError):
            label_cardinality(d)
        with pytest.raises(ValueError):
            dataset_stats(d)

    def test_single_row_distinct(self):
        d = tiny_dataset([ls([0, 1], 3)], 3)
        assert dataset_stats(d).distinct_labelsets == 1

    def test_cardinality_density_relation(self):
        for seed in range(5):
            d = random_dataset(seed, n=40, n_labels=5)
            stats = dataset_stats(d)
            assert 0.0 <= stats.lden <= 1.0
            assert abs(stats.lcard - stats.lden * d.n_labels) <= 1e-12
            assert stats.lcard <= d.n_labels

    def test_row_permutation_invariance(self):
        d = random_dataset(7, n=25, n_labels=4)
        shuffled = d.subset(reversed(range(len(d))))
        assert dataset_stats(d) == dataset_stats(shuffled)

    def test_observed_density_diagnostic(self):
        # only label 0 of 4 ever used: observed universe has size 1
        d = tiny_dataset([ls([0], 4), ls([0], 4)], 4)
        stats = dataset_stats(d)
        assert stats.lden == pytest.approx(0.25)
        assert stats.lden_observed == pytest.approx(1.0)


class TestDatasetValidation:
    def test_arity_mismatch(self):
        schema = Schema((Attribute("a"), Attribute("b")), ("L0",))
        with pytest.raises(ValueError):
            MLDataset(schema, [((1.0,), LabelSet(0, 1))])

    def test_universe_mismatch(self):
        schema = Schema((Attribute("a"),), ("L0", "L1"))
        with pytest.raises(UniverseMismatch):
            MLDataset(schema, [((1.0,), LabelSet(0, 3))])

    def test_nominal_index_range(self):
        schema = Schema((Attribute("c", ("x", "y")),), ("L0",))
        with pytest.raises(ValueError):
            MLDataset(schema, [((5,), LabelSet(0, 1))])
        ok = MLDataset(schema, [((1,), LabelSet(1, 1))])
        assert len(ok) == 1

    def test_numeric_cell_must_be_number(self):
        schema = Schema((Attribute("a"),), ("L0",))
        with pytest.raises(ValueError):
            MLDataset(schema, [(("oops",), LabelSet(0, 1))])

    def test_missing_allowed(self):
        schema = Schema((Attribute("a"), Attribute("c", ("x", "y"))), ("L0",))
        d = MLDataset(schema, [((None, None), LabelSet(1, 1))])
        assert d.rows[0][0] == (None, None)

    def test_duplicate_names_rejected(self):
        with pytest.raises(ValueError):
            Schema((Attribute("a"), Attribute("a")), ("L0",))
        with pytest.raises(ValueError):
            Schema((Attribute("a"),), ("L0", "L0"))
        with pytest.raises(ValueError):
            Schema((Attribute("a"),), ("a",))

    def test_immutable(self):
        d = tiny_dataset([ls([0], 1)], 1)
        with pytest.raises(AttributeError):
            d.rows = ()
