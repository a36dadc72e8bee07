import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alsim.acquisition import (
    AcquisitionConfig,
    acquire_badge,
    acquire_cal,
    acquire_entropy,
    acquire_kmeans_embedding,
    acquire_random,
    kl_divergence,
    kmeans_pp_init,
    lloyd_kmeans,
    predictive_entropy,
)
from alsim.classifier import Classifier, ClassifierConfig
from alsim.dataset import FeatureMatrix
from alsim.errors import ShapeError, SizingError, StateError, ValidationError
from oracles import (
    cal_scores_oracle,
    cal_select_oracle,
    entropy_oracle,
    kl_oracle,
    kmeanspp_oracle,
)


def fm(values, ids=None):
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    ids = ids or [f"p{i:03d}" for i in range(values.shape[0])]
    return FeatureMatrix(values, ids)


def simplex(rng, n, C):
    x = rng.random((n, C)) + 1e-6
    return x / x.sum(axis=1, keepdims=True)


@st.composite
def simplex_pair(draw):
    C = draw(st.integers(min_value=2, max_value=6))
    def vec():
        raw = draw(st.lists(st.floats(min_value=1e-6, max_value=1.0),
                            min_size=C, max_size=C))
        total = sum(raw)
        return [x / total for x in raw]
    return vec(), vec()


class TestKLDivergence:
    def test_identity_zero(self):
        for p in ([0.5, 0.5], [0.9, 0.1], [0.2, 0.3, 0.5]):
            assert kl_divergence(p, p) == 0.0

    def test_hand_value(self):
        got = kl_divergence([0.8, 0.2], [0.6, 0.4])
        assert abs(got - kl_oracle([0.8, 0.2], [0.6, 0.4])) < 1e-12
        assert abs(got - 0.091515) < 2e-6  # 0.8 ln(4/3) + 0.2 ln(1/2)

    def test_one_hot_against_uniform(self):
        assert abs(kl_divergence([1.0, 0.0], [0.5, 0.5]) - math.log(2)) < 1e-12

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            kl_divergence([0.5, 0.5], [0.2, 0.3, 0.5])

    def test_rejects_non_simplex(self):
        with pytest.raises(ValidationError):
            kl_divergence([0.9, 0.9], [0.5, 0.5])

    @settings(max_examples=200, deadline=None)
    @given(simplex_pair())
    def test_non_negative_and_matches_oracle(self, pq):
        P, Q = pq
        got = kl_divergence(P, Q)
        assert got >= 0.0
        assert abs(got - kl_oracle(P, Q)) < 1e-9

    def test_zero_iff_equal(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            P = simplex(rng, 1, 4)[0]
            Q = simplex(rng, 1, 4)[0]
            if np.abs(P - Q).max() > 1e-6:
                assert kl_divergence(P, Q) > 0.0
            assert kl_divergence(P, P) == 0.0


class TestPredictiveEntropy:
    def test_one_hot_zero(self):
        assert predictive_entropy([1.0, 0.0, 0.0]) == 0.0

    def test_uniform_maximum(self):
        assert abs(predictive_entropy([0.25] * 4) - math.log(4)) < 1e-12

    def test_hand_value(self):
        got = predictive_entropy([0.7, 0.3])
        assert abs(got - entropy_oracle([0.7, 0.3])) < 1e-12
        assert abs(got - 0.610864) < 1e-6

    def test_range_and_permutation_invariance(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            p = simplex(rng, 1, 5)[0]
            h = predictive_entropy(p)
            assert 0.0 <= h <= math.log(5) + 1e-12
            assert abs(h - predictive_entropy(p[::-1])) < 1e-12


class TestAcquireCal:
    def worked_example(self, **overrides):
        # one labeled reference at (0.8, 0.2); two candidates sharing it as
        # nearest neighbor, predicting (0.7, 0.3) and (0.6, 0.4)
        labeled_probs = np.array([[0.8, 0.2]])
        labeled_enc = fm([[0.0, 0.0]], ids=["l0"])
        pool_probs = np.array([[0.7, 0.3], [0.6, 0.4]])
        pool_enc = fm([[1.0, 0.0], [0.0, 1.0]], ids=["x2", "x3"])
        kwargs = {"b": 1, "k": 1, **overrides}
        cfg = AcquisitionConfig(strategy="cal", **kwargs)
        return acquire_cal(pool_probs, pool_enc, labeled_probs, labeled_enc, cfg,
                           labeled_labels=np.array([0]))

    def test_worked_example_picks_most_divergent(self):
        selection = self.worked_example()
        assert selection.ids == ["x3"]
        expected = kl_oracle([0.8, 0.2], [0.6, 0.4])
        assert abs(selection.scores[0] - expected) < 1e-12

    def test_opposite_direction_picks_least_divergent(self):
        selection = self.worked_example(cal_direction="argmin")
        assert selection.ids == ["x2"]

    def test_identical_probs_tie_break_and_direction_agree(self):
        probs = np.tile([0.5, 0.5], (4, 1))
        pool_enc = fm(np.random.default_rng(0).normal(size=(4, 3)),
                      ids=["d", "b", "c", "a"])
        labeled_enc = fm(np.random.default_rng(1).normal(size=(2, 3)), ids=["l0", "l1"])
        lab_probs = np.tile([0.5, 0.5], (2, 1))
        base = dict(pool_probs=probs, pool_encodings=pool_enc,
                    labeled_probs=lab_probs, labeled_encodings=labeled_enc)
        hi = acquire_cal(config=AcquisitionConfig(strategy="cal", b=2, k=2), **base)
        lo = acquire_cal(config=AcquisitionConfig(strategy="cal", b=2, k=2,
                                                  cal_direction="argmin"), **base)
        assert hi.ids == ["a", "b"]  # all scores 0: ascending id
        assert hi.ids == lo.ids
        assert all(s == 0.0 for s in hi.candidate_scores.values())

    @pytest.mark.parametrize("pooling", ["mean", "max", "median"])
    @pytest.mark.parametrize("direction", ["argmax", "argmin"])
    def test_matches_exhaustive_oracle(self, pooling, direction):
        rng = np.random.default_rng(hash((pooling, direction)) % 2**32)
        n_pool, n_lab, C, k, b = 23, 9, 3, 4, 6
        pool_probs = simplex(rng, n_pool, C)
        lab_probs = simplex(rng, n_lab, C)
        pool_enc = fm(rng.normal(size=(n_pool, 5)))
        lab_enc = fm(rng.normal(size=(n_lab, 5)), ids=[f"l{i}" for i in range(n_lab)])
        cfg = AcquisitionConfig(strategy="cal", b=b, k=k, cal_pooling=pooling,
                                cal_direction=direction)
        got = acquire_cal(pool_probs, pool_enc, lab_probs, lab_enc, cfg)
        want_scores = cal_scores_oracle(
            pool_probs, pool_enc.values.astype(np.float64),
            lab_probs, lab_enc.values.astype(np.float64), k, pooling=pooling)
        for i, pid in enumerate(pool_enc.row_ids):
            assert abs(got.candidate_scores[pid] - want_scores[i]) < 1e-9
        want_ids = cal_select_oracle(pool_enc.row_ids, want_scores, b, direction)
        assert got.ids == want_ids

    def test_three_labeled_four_pool_hand_instance(self):
        pool_enc = fm([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0, 2.0]])
        lab_enc = fm([[0.1, 0.0], [1.1, 0.0], [2.0, 1.9]], ids=["l0", "l1", "l2"])
        pool_probs = np.array([[0.9, 0.1], [0.5, 0.5], [0.3, 0.7], [0.2, 0.8]])
        lab_probs = np.array([[0.8, 0.2], [0.6, 0.4], [0.1, 0.9]])
        cfg = AcquisitionConfig(strategy="cal", b=2, k=2)
        got = acquire_cal(pool_probs, pool_enc, lab_probs, lab_enc, cfg)
        want = cal_scores_oracle(pool_probs, pool_enc.values.astype(np.float64),
                                 lab_probs, lab_enc.values.astype(np.float64), 2)
        for i, pid in enumerate(pool_enc.row_ids):
            assert abs(got.candidate_scores[pid] - want[i]) < 1e-12

    def test_score_vector_invariant_under_labeled_permutation(self):
        rng = np.random.default_rng(6)
        pool_probs = simplex(rng, 12, 3)
        lab_probs = simplex(rng, 7, 3)
        pool_enc = fm(rng.normal(size=(12, 4)))
        lab_enc_values = rng.normal(size=(7, 4))
        lab_ids = [f"l{i}" for i in range(7)]
        cfg = AcquisitionConfig(strategy="cal", b=3, k=3)
        base = acquire_cal(pool_probs, pool_enc, lab_probs,
                           fm(lab_enc_values, ids=lab_ids), cfg)
        perm = rng.permutation(7)
        shuffled = acquire_cal(pool_probs, pool_enc, lab_probs[perm],
                               fm(lab_enc_values[perm], ids=[lab_ids[i] for i in perm]),
                               cfg)
        assert base.candidate_scores == shuffled.candidate_scores
        assert base.ids == shuffled.ids

    def test_pool_row_order_irrelevant(self):
        rng = np.random.default_rng(7)
        pool_probs = simplex(rng, 10, 2)
        pool_values = rng.normal(size=(10, 3))
        ids = [f"p{i}" for i in range(10)]
        lab_probs = simplex(rng, 4, 2)
        lab_enc = fm(rng.normal(size=(4, 3)), ids=list("wxyz"))
        cfg = AcquisitionConfig(strategy="cal", b=4, k=2)
        a = acquire_cal(pool_probs, fm(pool_values, ids=ids), lab_probs, lab_enc, cfg)
        perm = rng.permutation(10)
        b = acquire_cal(pool_probs[perm], fm(pool_values[perm],
                                             ids=[ids[i] for i in perm]),
                        lab_probs, lab_enc, cfg)
        assert a.ids == b.ids and a.candidate_scores == b.candidate_scores

    def test_k_clamped_to_labeled_size(self):
        selection = self.worked_example(k=50)
        assert selection.k_clamped

    def test_empty_labeled_errors(self):
        cfg = AcquisitionConfig(strategy="cal", b=1, k=1)
        with pytest.raises((StateError, ValidationError)):
            acquire_cal(np.array([[0.5, 0.5]]), fm([[0.0]]),
                        np.zeros((0, 2)), fm(np.zeros((0, 1)), ids=[]), cfg)

    def test_distance_term_added(self):
        plain = self.worked_example()
        with_term = self.worked_example(add_distance_term=True)
        # x3 sits at distance 1 from its neighbor; score gains exactly that
        assert abs(with_term.candidate_scores["x3"]
                   - (plain.candidate_scores["x3"] + 1.0)) < 1e-9


class TestAcquireCalPerLabeled:
    def test_unpicked_pool_point_scores_zero(self):
        # labeled point at origin; pool near it plus one far outlier, k=2
        pool_enc = fm([[0.1, 0.0], [0.0, 0.1], [9.0, 9.0]], ids=["a", "b", "far"])
        pool_probs = np.array([[0.6, 0.4], [0.7, 0.3], [0.5, 0.5]])
        lab_enc = fm([[0.0, 0.0]], ids=["l0"])
        lab_probs = np.array([[0.9, 0.1]])
        cfg = AcquisitionConfig(strategy="cal", b=3, k=2,
                                cal_neighborhood="per_labeled")
        got = acquire_cal(pool_probs, pool_enc, lab_probs, lab_enc, cfg)
        assert got.candidate_scores["far"] == 0.0
        assert got.candidate_scores["a"] > 0.0
        assert got.candidate_scores["b"] > 0.0

    def test_multiply_picked_point_averages(self):
        # both labeled points pick the single pool point (k=1)
        pool_enc = fm([[0.0, 0.0]], ids=["only"])
        pool_probs = np.array([[0.5, 0.5]])
        lab_enc = fm([[1.0, 0.0], [0.0, 1.0]], ids=["l0", "l1"])
        lab_probs = np.array([[0.9, 0.1], [0.2, 0.8]])
        cfg = AcquisitionConfig(strategy="cal", b=1, k=1,
                                cal_neighborhood="per_labeled")
        got = acquire_cal(pool_probs, pool_enc, lab_probs, lab_enc, cfg)
        want = (kl_oracle([0.9, 0.1], [0.5, 0.5]) + kl_oracle([0.2, 0.8], [0.5, 0.5])) / 2
        assert abs(got.candidate_scores["only"] - want) < 1e-12

    def test_single_pair_agrees_with_per_unlabeled(self):
        pool_enc = fm([[0.3, 0.4]], ids=["p"])
        pool_probs = np.array([[0.45, 0.55]])
        lab_enc = fm([[1.0, 1.0]], ids=["l"])
        lab_probs = np.array([[0.85, 0.15]])
        a = acquire_cal(pool_probs, pool_enc, lab_probs, lab_enc,
                        AcquisitionConfig(strategy="cal", b=1, k=1))
        b = acquire_cal(pool_probs, pool_enc, lab_probs, lab_enc,
                        AcquisitionConfig(strategy="cal", b=1, k=1,
                                          cal_neighborhood="per_labeled"))
        assert a.ids == b.ids
        assert abs(a.candidate_scores["p"] - b.candidate_scores["p"]) < 1e-12


class TestAcquireCalCrossEntropy:
    def test_confident_correct_prediction_scores_zero(self):
        pool_enc = fm([[0.0]], ids=["p"])
        pool_probs = np.array([[1.0, 0.0]])
        lab_enc = fm([[0.1]], ids=["l"])
        lab_probs = np.array([[1.0, 0.0]])
        cfg = AcquisitionConfig(strategy="cal", b=1, k=1, cal_scoring="cross_entropy")
        got = acquire_cal(pool_probs, pool_enc, lab_probs, lab_enc, cfg,
                          labeled_labels=np.array([0]))
        assert got.candidate_scores["p"] == 0.0

    def test_hand_value(self):
        pool_enc = fm([[0.0]], ids=["p"])
        pool_probs = np.array([[0.9, 0.1]])
        lab_enc = fm([[0.1]], ids=["l"])
        lab_probs = np.array([[0.0, 1.0]])
        cfg = AcquisitionConfig(strategy="cal", b=1, k=1, cal_scoring="cross_entropy")
        got = acquire_cal(pool_probs, pool_enc, lab_probs, lab_enc, cfg,
                          labeled_labels=np.array([1]))
        assert abs(got.candidate_scores["p"] - (-math.log(0.1))) < 1e-9
        assert abs(got.candidate_scores["p"] - 2.302585) < 1e-6

    def test_one_hot_neighbors_make_kl_and_ce_rank_identically(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            n_pool, n_lab, C = 12, 5, 3
            pool_probs = simplex(rng, n_pool, C)
            labels = rng.integers(0, C, size=n_lab)
            lab_probs = np.eye(C)[labels]
            pool_enc = fm(rng.normal(size=(n_pool, 4)))
            lab_enc = fm(rng.normal(size=(n_lab, 4)), ids=[f"l{i}" for i in range(n_lab)])
            kl_sel = acquire_cal(pool_probs, pool_enc, lab_probs, lab_enc,
                                 AcquisitionConfig(strategy="cal", b=5, k=2))
            ce_sel = acquire_cal(pool_probs, pool_enc, lab_probs, lab_enc,
                                 AcquisitionConfig(strategy="cal", b=5, k=2,
                                                   cal_scoring="cross_entropy"),
                                 labeled_labels=labels)
            assert kl_sel.ids == ce_sel.ids
            for pid in kl_sel.candidate_scores:
                assert abs(kl_sel.candidate_scores[pid]
                           - ce_sel.candidate_scores[pid]) < 1e-9

    def test_missing_labels_errors(self):
        cfg = AcquisitionConfig(strategy="cal", b=1, k=1, cal_scoring="cross_entropy")
        with pytest.raises(ValidationError):
            acquire_cal(np.array([[0.5, 0.5]]), fm([[0.0]]),
                        np.array([[0.5, 0.5]]), fm([[0.1]], ids=["l"]), cfg)


class TestArgminComplement:
    def test_argmax_and_argmin_are_top_and_bottom_of_same_scores(self):
        rng = np.random.default_rng(9)
        pool_probs = simplex(rng, 20, 3)
        lab_probs = simplex(rng, 6, 3)
        pool_enc = fm(rng.normal(size=(20, 4)))
        lab_enc = fm(rng.normal(size=(6, 4)), ids=[f"l{i}" for i in range(6)])
        hi = acquire_cal(pool_probs, pool_enc, lab_probs, lab_enc,
                         AcquisitionConfig(strategy="cal", b=5, k=3))
        lo = acquire_cal(pool_probs, pool_enc, lab_probs, lab_enc,
                         AcquisitionConfig(strategy="cal", b=5, k=3,
                                           cal_direction="argmin"))
        assert hi.candidate_scores == lo.candidate_scores
        ranked = sorted(hi.candidate_scores,
                        key=lambda i: (-hi.candidate_scores[i], i))
        assert hi.ids == ranked[:5]
        ranked_lo = sorted(lo.candidate_scores,
                           key=lambda i: (lo.candidate_scores[i], i))
        assert lo.ids == ranked_lo[:5]


class TestAcquireEntropy:
    def test_prefers_uniform(self):
        got = acquire_entropy(np.array([[0.5, 0.5], [0.9, 0.1]]), ["a", "b"], b=1)
        assert got.ids == ["a"]

    def test_identical_probs_tie_break(self):
        got = acquire_entropy(np.tile([0.5, 0.5], (4, 1)), ["d", "c", "b", "a"], b=2)
        assert got.ids == ["a", "b"]

    def test_matches_oracle_sort(self):
        rng = np.random.default_rng(10)
        probs = simplex(rng, 50, 4)
        ids = [f"p{i:02d}" for i in range(50)]
        got = acquire_entropy(probs, ids, b=10)
        want = sorted(range(50), key=lambda i: (-entropy_oracle(probs[i]), ids[i]))
        assert got.ids == [ids[i] for i in want[:10]]
        for pid, score in got.candidate_scores.items():
            assert abs(score - entropy_oracle(probs[ids.index(pid)])) < 1e-9

    def test_b_clamped_to_pool(self):
        got = acquire_entropy(np.array([[0.5, 0.5]]), ["a"], b=10)
        assert got.ids == ["a"]


class TestAcquireRandom:
    def test_full_pool(self):
        got = acquire_random(["c", "a", "b"], b=3, rng=np.random.default_rng(0))
        assert sorted(got.ids) == ["a", "b", "c"]

    def test_seed_deterministic(self):
        ids = [f"p{i}" for i in range(100)]
        a = acquire_random(ids, 10, np.random.default_rng(77))
        b = acquire_random(ids, 10, np.random.default_rng(77))
        assert a.ids == b.ids
        assert len(set(a.ids)) == 10

    def test_frequencies_uniform(self):
        ids = [f"p{i}" for i in range(10)]
        rng = np.random.default_rng(123)
        draws = 100_000
        counts = {i: 0 for i in ids}
        for _ in range(draws):
            counts[acquire_random(ids, 1, rng).ids[0]] += 1
        expect = draws / 10
        sigma = math.sqrt(draws * 0.1 * 0.9)
        for c in counts.values():
            assert abs(c - expect) <= 3 * sigma


class TestKMeansPP:
    def test_k_equals_rows_chooses_all(self):
        rng = np.random.default_rng(0)
        points = np.zeros((6, 2))  # even with all-duplicate points
        picks = kmeans_pp_init(points, 6, rng)
        assert sorted(picks.tolist()) == list(range(6))

    def test_duplicate_of_center_never_drawn_while_weight_positive(self):
        # rows 0 and 1 coincide; if one is chosen the other can only arrive
        # via the zero-weight fallback, i.e. after all distinct points
        points = np.array([[0.0, 0.0], [0.0, 0.0], [5.0, 0.0], [0.0, 5.0]])
        for seed in range(200):
            picks = kmeans_pp_init(points, 3, np.random.default_rng(seed)).tolist()
            assert not ({0, 1} <= set(picks))

    def test_two_far_clusters_split(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=(20, 2))
        b = rng.normal(size=(20, 2)) + [200.0, 0.0]
        points = np.concatenate([a, b])
        crossings = 0
        for seed in range(1000):
            picks = kmeans_pp_init(points, 2, np.random.default_rng(seed))
            sides = {int(p) // 20 for p in picks}
            crossings += sides == {0, 1}
        assert crossings >= 990

    def test_k_too_large(self):
        with pytest.raises(SizingError):
            kmeans_pp_init(np.zeros((3, 2)), 4, np.random.default_rng(0))


class TestLloydKMeans:
    def test_k_equals_rows_zero_inertia(self):
        rng = np.random.default_rng(2)
        points = rng.normal(size=(8, 3))
        result = lloyd_kmeans(points, 8, rng=rng)
        assert result.inertia == 0.0

    def test_line_instance_exact_centroids(self):
        points = np.array([[0.0], [1.0], [10.0], [11.0]])
        for seed in range(10):
            result = lloyd_kmeans(points, 2, rng=np.random.default_rng(seed))
            assert sorted(result.centroids[:, 0].tolist()) == [0.5, 10.5]

    def test_inertia_non_increasing(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            points = rng.normal(size=(60, 4))
            result = lloyd_kmeans(points, 5, rng=rng)
            hist = result.inertia_history
            assert all(hist[i + 1] <= hist[i] for i in range(len(hist) - 1))

    def test_empty_cluster_reseeded(self):
        # two identical leftmost points force an empty cluster at some seeds;
        # every cluster must still end up non-empty or reseeded validly
        points = np.array([[0.0], [0.0], [0.0], [100.0], [200.0]])
        result = lloyd_kmeans(points, 3, rng=np.random.default_rng(5))
        assert len(set(result.assignments.tolist())) == 3


class TestAcquireKMeansEmbedding:
    def test_full_pool(self):
        enc = fm(np.random.default_rng(0).normal(size=(5, 3)))
        got = acquire_kmeans_embedding(enc, 5, np.random.default_rng(1))
        assert sorted(got.ids) == sorted(enc.row_ids)

    def test_four_blobs_one_point_each(self):
        rng = np.random.default_rng(4)
        centers = np.array([[0, 0], [50, 0], [0, 50], [50, 50]], dtype=float)
        points = np.concatenate([c + 0.05 * rng.normal(size=(10, 2)) for c in centers])
        enc = fm(points)
        got = acquire_kmeans_embedding(enc, 4, np.random.default_rng(0),
                                       normalize=False)
        blobs = sorted(int(i[1:]) // 10 for i in got.ids)
        assert blobs == [0, 1, 2, 3]

    def test_normalized_selection_invariant_to_row_scaling(self):
        rng = np.random.default_rng(5)
        values = rng.normal(size=(30, 4))
        scales = rng.uniform(0.1, 10.0, size=(30, 1))
        a = acquire_kmeans_embedding(fm(values), 6, np.random.default_rng(9),
                                     normalize=True)
        b = acquire_kmeans_embedding(fm(values * scales), 6, np.random.default_rng(9),
                                     normalize=True)
        assert a.ids == b.ids

    def test_b_too_large(self):
        with pytest.raises(SizingError):
            acquire_kmeans_embedding(fm(np.zeros((3, 2))), 4, np.random.default_rng(0))

    def test_distinct_ids_even_with_duplicate_points(self):
        enc = fm(np.zeros((6, 2)))
        got = acquire_kmeans_embedding(enc, 4, np.random.default_rng(0))
        assert len(set(got.ids)) == 4


def _toy_model(C=2, d=2):
    cfg = ClassifierConfig()
    return Classifier(np.array([[2.0, 0.0], [0.0, 2.0]]), np.zeros(2),
                      None, None, C, d, cfg)


class TestAcquireBadge:
    def test_pool_of_b_points_all_selected(self):
        model = _toy_model()
        feats = fm(np.random.default_rng(0).normal(size=(4, 2)))
        got = acquire_badge(model, feats, 4, np.random.default_rng(1))
        assert sorted(got.ids) == sorted(feats.row_ids)

    def test_zero_gradient_points_deferred(self):
        # confident one-hot rows have g = 0; with a zero-g first center they
        # cannot be drawn again while any nonzero-g point remains
        model = _toy_model()
        confident = np.array([[60.0, -60.0]] * 5)
        uncertain = np.array([[0.1, 0.05], [0.02, 0.2], [-0.1, 0.07]])
        feats = fm(np.concatenate([confident, uncertain]))
        zero_ids = set(feats.row_ids[:5])
        hits = 0
        for seed in range(300):
            got = acquire_badge(model, feats, 4, np.random.default_rng(seed))
            if got.ids[0] in zero_ids:
                hits += 1
                assert set(got.ids[1:]) == set(feats.row_ids[5:])
        assert hits > 0  # the interesting branch was exercised

    def test_selection_distribution_matches_simulation_oracle(self):
        rng = np.random.default_rng(6)
        model = _toy_model()
        feats = fm(rng.normal(size=(8, 2)))
        from alsim.classifier import gradient_embedding
        emb = gradient_embedding(model, feats).values.astype(np.float64)

        trials = 10_000
        counts_lib = np.zeros(8)
        for seed in range(trials):
            got = acquire_badge(model, feats, 3, np.random.default_rng(seed))
            for pid in got.ids:
                counts_lib[feats.row_ids.index(pid)] += 1
        counts_sim = np.zeros(8)
        for seed in range(trials):
            picks = kmeanspp_oracle(list(emb), 3, np.random.default_rng(10**6 + seed))
            for p in picks:
                counts_sim[p] += 1
        p_hat = counts_sim / trials  # per-id inclusion frequency estimate
        sigma = np.sqrt(np.maximum(p_hat * (1 - p_hat), 1e-4) / trials) * 2
        diff = np.abs(counts_lib - counts_sim) / trials
        assert np.all(diff <= 3 * np.sqrt(sigma**2))

    def test_embedding_dimension(self):
        model = _toy_model()
        feats = fm(np.random.default_rng(0).normal(size=(3, 2)))
        from alsim.classifier import gradient_embedding
        assert gradient_embedding(model, feats).cols == 2 * (2 + 1)


class TestBatchSelectionContracts:
    def test_subset_no_duplicates_deterministic(self):
        rng = np.random.default_rng(11)
        pool_probs = simplex(rng, 15, 3)
        lab_probs = simplex(rng, 5, 3)
        pool_enc = fm(rng.normal(size=(15, 4)))
        lab_enc = fm(rng.normal(size=(5, 4)), ids=[f"l{i}" for i in range(5)])
        model = _toy_model(C=2, d=4)
        model.W_out = rng.normal(size=(2, 4))
        model.C, model.input_dim = 2, 4
        pool_probs2 = simplex(rng, 15, 2)

        selections = {
            "cal": lambda: acquire_cal(pool_probs, pool_enc, lab_probs, lab_enc,
                                       AcquisitionConfig(strategy="cal", b=5, k=2)),
            "entropy": lambda: acquire_entropy(pool_probs2, pool_enc.row_ids, 5),
            "random": lambda: acquire_random(pool_enc.row_ids, 5,
                                             np.random.default_rng(3)),
            "kmeans": lambda: acquire_kmeans_embedding(pool_enc, 5,
                                                       np.random.default_rng(3)),
            "badge": lambda: acquire_badge(model, pool_enc, 5,
                                           np.random.default_rng(3)),
        }
        for name, call in selections.items():
            first, second = call(), call()
            assert first.ids == second.ids, name
            assert len(set(first.ids)) == 5, name
            assert set(first.ids) <= set(pool_enc.row_ids), name
            assert first.selection_seconds >= 0.0
