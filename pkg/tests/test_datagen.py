import numpy as np
import pytest
from scipy import stats

from dstpll.datagen import (
    AugmentSpec,
    PartialDataset,
    augment,
    augment_cooccur,
    augment_uniform,
    dumps_csv,
    kfold,
    load_csv,
    loads_csv,
    partner_map,
    save_csv,
    standardize,
    take,
)
from dstpll.errors import (
    EmptyCandidateSet,
    ParseError,
    RTooLarge,
    TooManyFolds,
    TruthNotInCandidates,
)
from dstpll.evidence import LabelSet

from conftest import clustered_dataset, labelset


def supervised(rng, n=50, l=5, d=3):
    truth = [int(y) for y in rng.integers(1, l + 1, size=n)]
    feats = rng.normal(0, 1, (n, d))
    return PartialDataset(feats, [LabelSet.singleton(l, y) for y in truth], truth, l)


class TestCsv:
    def test_documented_row_format(self):
        text = 'f0,f1,candidates,label\n0.5,1.0,"1;3",1\n'
        ds = loads_csv(text)
        assert ds.features.tolist() == [[0.5, 1.0]]
        assert ds.candidates[0].labels() == (1, 3)
        assert ds.truth == [1]
        assert ds.num_classes == 3

    def test_truth_not_in_candidates(self):
        with pytest.raises(TruthNotInCandidates):
            loads_csv("f0,candidates,label\n0.5,1;3,2\n")

    def test_supervised_degenerates_to_singletons(self):
        ds = loads_csv("f0,label\n0.1,2\n0.2,1\n")
        assert [c.labels() for c in ds.candidates] == [(2,), (1,)]

    def test_empty_candidates_cell(self):
        with pytest.raises(EmptyCandidateSet):
            loads_csv("f0,candidates\n0.5,\n")

    def test_parse_errors_locate_row_and_column(self):
        with pytest.raises(ParseError, match="row 3, column f1"):
            loads_csv("f0,f1,label\n0,0,1\n0,zzz,1\n")
        with pytest.raises(ParseError, match="unknown column"):
            loads_csv("f0,weird,label\n0,0,1\n")
        with pytest.raises(ParseError):
            loads_csv("f0,candidates\n0.5,1;x\n")
        with pytest.raises(ParseError, match="no data rows"):
            loads_csv("f0,label\n")

    def test_declared_class_count(self):
        ds = loads_csv("f0,candidates\n0.5,1;2\n", num_classes=6)
        assert ds.num_classes == 6
        with pytest.raises(ParseError):
            loads_csv("f0,candidates\n0.5,1;5\n", num_classes=3)

    def test_roundtrip_is_identity(self, rng, tmp_path):
        ds = augment_uniform(supervised(rng), 2, 0.6, seed=4)
        path = tmp_path / "ds.csv"
        save_csv(ds, path)
        back = load_csv(path)
        assert np.array_equal(back.features, ds.features)
        assert back.candidates == ds.candidates
        assert back.truth == ds.truth
        assert back.num_classes == ds.num_classes

    def test_roundtrip_without_truth(self):
        ds = PartialDataset(np.array([[1.5]]), [labelset(3, 1, 2)], None, 3)
        # class count is inferred from labels seen unless declared
        inferred = loads_csv(dumps_csv(ds))
        assert inferred.truth is None
        assert inferred.num_classes == 2
        back = loads_csv(dumps_csv(ds), num_classes=3)
        assert back.candidates == ds.candidates


class TestAugmentUniform:
    def test_zero_fraction_is_identity(self, rng):
        ds = supervised(rng)
        out = augment_uniform(ds, 1, 0.0, seed=0)
        assert out.candidates == ds.candidates

    def test_full_fraction_cardinality(self, rng):
        ds = supervised(rng)
        out = augment_uniform(ds, 2, 1.0, seed=0)
        assert all(len(c) == 3 for c in out.candidates)

    def test_exact_affected_count(self, rng):
        ds = supervised(rng, n=101)
        out = augment_uniform(ds, 1, 0.5, seed=1)
        grown = sum(len(c) > 1 for c in out.candidates)
        assert grown == 51  # round half up

    def test_truth_kept_and_never_full(self, rng):
        ds = supervised(rng, l=4)
        out = augment_uniform(ds, 2, 1.0, seed=2)
        for y, cand in zip(out.truth, out.candidates):
            assert y in cand
            assert not cand.is_full

    def test_false_labels_uniform(self):
        rng = np.random.default_rng(0)
        ds = supervised(rng, n=1000, l=10)
        out = augment_uniform(ds, 1, 0.5, seed=7)
        grown = [i for i in range(out.n) if len(out.candidates[i]) == 2]
        assert len(grown) == 500
        # the added label is uniform over the nine non-true classes: bucket
        # by rank among non-true labels and chi-square against uniform
        ranks = np.zeros(9, dtype=int)
        for i in grown:
            extra = next(lab for lab in out.candidates[i] if lab != out.truth[i])
            offset = extra - 1 if extra < out.truth[i] else extra - 2
            ranks[offset] += 1
        assert stats.chisquare(ranks).pvalue > 0.01

    def test_deterministic(self, rng):
        ds = supervised(rng)
        a = augment_uniform(ds, 1, 0.4, seed=9)
        b = augment_uniform(ds, 1, 0.4, seed=9)
        assert a.candidates == b.candidates
        assert dumps_csv(a) == dumps_csv(b)

    def test_r_too_large(self, rng):
        ds = supervised(rng, l=4)
        with pytest.raises(RTooLarge):
            augment_uniform(ds, 3, 0.5, seed=0)  # would reach the full space


class TestAugmentCooccur:
    def test_partner_map_has_no_fixed_points(self):
        for seed in range(10):
            partners = partner_map(6, seed)
            assert sorted(partners) == list(range(1, 7))
            assert all(partners[y - 1] != y for y in range(1, 7))

    def test_degenerate_degrees(self, rng):
        ds = supervised(rng, l=5)
        partners = partner_map(5, 3)
        always = augment_cooccur(ds, 1.0, 1.0, seed=3)
        for y, cand in zip(always.truth, always.candidates):
            assert cand.labels() == tuple(sorted((y, partners[y - 1])))
        never = augment_cooccur(ds, 1.0, 0.0, seed=3)
        for y, cand in zip(never.truth, never.candidates):
            extra = next(lab for lab in cand if lab != y)
            assert extra != partners[y - 1]

    def test_partner_frequency(self):
        rng = np.random.default_rng(1)
        ds = supervised(rng, n=10_000, l=6)
        out = augment_cooccur(ds, 1.0, 0.7, seed=11)
        partners = partner_map(6, 11)
        hit = sum(
            partners[y - 1] in cand for y, cand in zip(out.truth, out.candidates)
        )
        assert hit / out.n == pytest.approx(0.70, abs=0.02)

    def test_spec_dispatch(self, rng):
        ds = supervised(rng, l=5)
        via_spec = augment(ds, AugmentSpec(fraction=1.0, cooccurrence=0.5, seed=2))
        direct = augment_cooccur(ds, 1.0, 0.5, seed=2)
        assert via_spec.candidates == direct.candidates
        with pytest.raises(ValueError):
            AugmentSpec(fraction=0.5, false_positives=2, cooccurrence=0.5)


class TestKfold:
    def test_balanced_sizes(self, rng):
        ds = supervised(rng, n=336)
        sizes = sorted((len(te) for _, te in kfold(ds, 5, 0)), reverse=True)
        assert sizes == [68, 67, 67, 67, 67]

    def test_small_case(self, rng):
        ds = supervised(rng, n=10)
        splits = kfold(ds, 5, 1)
        assert all(len(te) == 2 for _, te in splits)
        covered = np.sort(np.concatenate([te for _, te in splits]))
        assert covered.tolist() == list(range(10))

    def test_disjoint_train_test(self, rng):
        ds = supervised(rng, n=37)
        for train, test in kfold(ds, 4, 5):
            assert set(train).isdisjoint(test)
            assert len(train) + len(test) == 37

    def test_deterministic(self, rng):
        ds = supervised(rng, n=30)
        a = kfold(ds, 3, 7)
        b = kfold(ds, 3, 7)
        for (tr1, te1), (tr2, te2) in zip(a, b):
            assert np.array_equal(tr1, tr2) and np.array_equal(te1, te2)

    def test_too_many_folds(self, rng):
        ds = supervised(rng, n=4)
        with pytest.raises(TooManyFolds):
            kfold(ds, 5, 0)
        with pytest.raises(ValueError):
            kfold(ds, 1, 0)


class TestStandardize:
    def test_constant_column_unchanged(self):
        train = np.array([[1.0, 5.0], [3.0, 5.0]])
        out, _, sd = standardize(train, train)
        assert sd[1] == 0.0
        assert out[:, 1].tolist() == [5.0, 5.0]
        assert out[:, 0].tolist() == [-1.0, 1.0]

    def test_two_point_zscore(self):
        out, mean, sd = standardize(np.array([[0.0], [2.0]]), np.array([[0.0], [2.0]]))
        assert mean[0] == 1.0 and sd[0] == 1.0
        assert out.ravel().tolist() == [-1.0, 1.0]

    def test_train_stats_applied_to_heldout(self):
        train = np.array([[0.0], [2.0]])
        held, _, _ = standardize(train, np.array([[4.0]]))
        assert held.ravel().tolist() == [3.0]  # (4 - 1) / 1, not its own stats


class TestDatasetModel:
    def test_take_subset(self, rng):
        ds = supervised(rng, n=20)
        sub = take(ds, [3, 5, 7])
        assert sub.n == 3
        assert sub.truth == [ds.truth[i] for i in (3, 5, 7)]

    def test_invariants_enforced(self):
        with pytest.raises(TruthNotInCandidates):
            PartialDataset(np.zeros((1, 2)), [labelset(3, 1)], [2], 3)
        with pytest.raises(EmptyCandidateSet):
            PartialDataset(np.zeros((1, 2)), [LabelSet.empty(3)], None, 3)

    def test_is_supervised(self, rng):
        ds = supervised(rng)
        assert ds.is_supervised
        assert not augment_uniform(ds, 1, 1.0, 0).is_supervised
