## crosspcf — second order conditional composite likelihood for multivariate LGCPs. ⚘

import numpy as np
import pytest

from crosspcf.types import PointPattern, UNIT_SQUARE
from crosspcf.geometry import enumerate_pairs, fold_labels, kfold_split
from crosspcf.errors import ModelValueError

from oracles import brute_force_pairs, uniform_pattern


def _cluster(n: int, origin=(0.5, 0.5)) -> np.ndarray:
    """Helper: n points on a short horizontal line, all within 0.01 * n of each other."""
    return np.array([(origin[0] + 0.01 * k, origin[1]) for k in range(n)])


def test_single_point_has_no_pairs():
    pattern = PointPattern([[0.5, 0.5]], [0], UNIT_SQUARE, 1)
    pairs = enumerate_pairs(pattern, 0.3)
    assert len(pairs) == 0
    assert pairs.n_types == 1


def test_two_points_give_both_orders():
    pattern = PointPattern([[0.25, 0.5], [0.75, 0.5]], [0, 1], UNIT_SQUARE, 2)
    pairs = enumerate_pairs(pattern, 1.0)

    assert len(pairs) == 2
    assert pairs.first.tolist() == [0, 1]
    assert pairs.second.tolist() == [1, 0]
    assert pairs.type_first.tolist() == [0, 1]
    assert pairs.type_second.tolist() == [1, 0]
    assert pairs.distance.tolist() == pytest.approx([0.5, 0.5])
    assert pairs.pair_id.tolist() == [0, 0]


def test_pair_count_matches_double_loop():
    pattern = uniform_pattern(200, 3, rng_seed=11)
    pairs = enumerate_pairs(pattern, 0.1)
    expected = brute_force_pairs(pattern, 0.1)

    assert len(pairs) == len(expected)
    assert set(zip(pairs.first.tolist(), pairs.second.tolist())) == {(u, v) for u, v, _ in expected}


def test_mirror_entries_share_pair_id():
    pairs = enumerate_pairs(uniform_pattern(80, 2, rng_seed=3), 0.2)
    half = len(pairs) // 2
    assert np.array_equal(pairs.first[:half], pairs.second[half:])
    assert np.array_equal(pairs.second[:half], pairs.first[half:])
    assert np.array_equal(pairs.pair_id[:half], pairs.pair_id[half:])
    assert np.all(pairs.first[:half] < pairs.second[:half])


def test_coincident_points_are_skipped():
    pattern = PointPattern([[0.5, 0.5], [0.5, 0.5]], [0, 1], UNIT_SQUARE, 2)
    assert len(enumerate_pairs(pattern, 0.1)) == 0


def test_non_positive_distance_is_rejected():
    with pytest.raises(ModelValueError):
        enumerate_pairs(uniform_pattern(5, 1), 0.0)


def test_buckets_cover_every_type_pair():
    pairs = enumerate_pairs(uniform_pattern(100, 3, rng_seed=5), 0.15)
    buckets = pairs.buckets
    assert sorted(buckets) == [(i, j) for i in range(3) for j in range(3)]
    assert sum(len(b) for b in buckets.values()) == len(pairs)
    for (i, j), entries in buckets.items():
        assert np.all(pairs.type_first[entries] == i)
        assert np.all(pairs.type_second[entries] == j)


def test_kfold_ten_pairs_split_evenly():
    # Five clustered points make C(5, 2) = 10 unordered pairs in a single bucket.
    pattern = PointPattern(_cluster(5), np.zeros(5), UNIT_SQUARE, 1)
    pairs = enumerate_pairs(pattern, 0.1)
    assert len(pairs) == 20

    folds = kfold_split(pairs, 5, rng_seed=0)
    assert [len(f) for f in folds] == [4, 4, 4, 4, 4]


def test_kfold_remainder_goes_to_one_fold():
    xy = np.vstack([_cluster(5), [[0.1, 0.1], [0.12, 0.1]]])
    pattern = PointPattern(xy, np.zeros(7), UNIT_SQUARE, 1)
    pairs = enumerate_pairs(pattern, 0.1)
    assert len(pairs) == 22

    folds = kfold_split(pairs, 5, rng_seed=0)
    assert sorted(len(f) // 2 for f in folds) == [2, 2, 2, 2, 3]


def test_folds_are_closed_under_swapping():
    pairs = enumerate_pairs(uniform_pattern(150, 3, rng_seed=8), 0.1)
    for fold in kfold_split(pairs, 4, rng_seed=1):
        ordered = set(zip(fold.first.tolist(), fold.second.tolist()))
        assert ordered == {(v, u) for u, v in ordered}


def test_folds_are_balanced_inside_buckets():
    pairs = enumerate_pairs(uniform_pattern(150, 3, rng_seed=8), 0.1)
    folds = kfold_split(pairs, 5, rng_seed=2)
    for key in pairs.buckets:
        sizes = [len(f.buckets[key]) for f in folds]
        assert max(sizes) - min(sizes) <= 2  # one unordered pair is two entries


def test_fold_labels_are_deterministic():
    pairs = enumerate_pairs(uniform_pattern(120, 2, rng_seed=4), 0.1)
    first = fold_labels(pairs, 5, np.random.SeedSequence([9, 0]))
    second = fold_labels(pairs, 5, np.random.SeedSequence([9, 0]))
    assert np.array_equal(first, second)


def test_kfold_needs_two_folds():
    pairs = enumerate_pairs(uniform_pattern(20, 1), 0.3)
    with pytest.raises(ModelValueError):
        kfold_split(pairs, 1)
