"""Contrastive losses against enumeration oracles and analytic anchors."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqclr import tensor as tz
from seqclr.losses import (
    LOSS_KINDS,
    LossConfig,
    contrastive_loss,
    margin_triplet,
    margin_triplet_from_similarity,
    normalize_loss_kind,
    nt_logistic,
    nt_logistic_from_similarity,
    nt_xent,
    nt_xent_from_similarity,
    similarity_matrix,
)
from seqclr.pairs import ViewBatch
from seqclr.tensor import GradTape, Tensor, backward, grad_check

from _oracles import cosine_matrix, margin_triplet_enum, nt_logistic_enum, nt_xent_enum


def instance_map(n):
    return [{(i + n) % (2 * n)} for i in range(2 * n)]


def multiview_map(b, v):
    return [{w * b + i for w in range(v) if w != vi} for vi in range(v) for i in range(b)]


def batch_of(R, positive_map, kind="instance"):
    return ViewBatch(kind=kind, positive_map=positive_map, views=Tensor(np.asarray(R)))


def rand_embeddings(m, d, seed):
    return np.random.default_rng(seed).normal(size=(m, d))


class TestSimilarityMatrix:
    def test_identical_rows_all_ones(self):
        R = np.tile(np.array([2.0, 1.0]), (3, 1))
        S = similarity_matrix(Tensor(R))
        assert np.allclose(S.data, 1.0, atol=1e-12)

    def test_orthogonal_rows_identity(self):
        S = similarity_matrix(Tensor(np.eye(3) * 5.0))
        assert np.allclose(S.data, np.eye(3), atol=1e-12)

    def test_random_matches_pairwise_oracle(self):
        R = rand_embeddings(4, 3, 0)
        S = similarity_matrix(Tensor(R))
        assert np.allclose(S.data, cosine_matrix(R), atol=1e-12)
        assert np.allclose(np.diag(S.data), 1.0, atol=1e-12)

    def test_zero_row_rejected(self):
        R = np.array([[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(tz.DegenerateInput):
            similarity_matrix(Tensor(R))


class TestNtXent:
    def test_two_rows_is_zero(self):
        # only candidate in the denominator is the positive itself
        R = rand_embeddings(2, 4, 1)
        loss = nt_xent(batch_of(R, instance_map(1)), tau=0.1)
        assert abs(float(loss.data)) < 1e-12

    def test_all_identical_embeddings_ln3(self):
        R = np.tile(np.array([1.0, 2.0, 3.0]), (4, 1))
        loss = nt_xent(batch_of(R, instance_map(2)), tau=0.37)
        assert np.isclose(float(loss.data), np.log(3.0), atol=1e-9)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_enumeration_oracle(self, seed):
        R = rand_embeddings(8, 5, seed)
        pm = instance_map(4)
        loss = nt_xent(batch_of(R, pm), tau=0.1)
        expected = nt_xent_enum(cosine_matrix(R), pm, 0.1)
        assert np.isclose(float(loss.data), expected, atol=1e-9)

    def test_multi_positive_averaging_matches_oracle(self):
        R = rand_embeddings(12, 4, 7)
        pm = multiview_map(3, 4)
        loss = nt_xent(batch_of(R, pm, kind="multiview"), tau=0.25)
        expected = nt_xent_enum(cosine_matrix(R), pm, 0.25)
        assert np.isclose(float(loss.data), expected, atol=1e-9)

    def test_empty_positive_row_rejected(self):
        S = Tensor(np.eye(3))
        with pytest.raises(ValueError, match="no positives"):
            nt_xent_from_similarity(S, [{1}, {0}, set()], tau=0.1)

    def test_extreme_temperature_stable(self):
        R = rand_embeddings(8, 5, 3)
        loss = nt_xent(batch_of(R, instance_map(4)), tau=0.001)
        assert np.isfinite(float(loss.data))


class TestNtLogistic:
    def test_two_orthogonal_rows_ln2(self):
        R = np.array([[1.0, 0.0], [0.0, 1.0]])
        loss = nt_logistic(batch_of(R, instance_map(1)), tau=1.0)
        assert np.isclose(float(loss.data), np.log(2.0), atol=1e-12)

    def test_aligned_positive_small_tau_approaches_zero(self):
        R = np.tile(np.array([1.0, 1.0]), (2, 1))
        loss = nt_logistic(batch_of(R, instance_map(1)), tau=0.01)
        assert 0.0 <= float(loss.data) < 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_enumeration_oracle(self, seed):
        R = rand_embeddings(8, 5, seed + 10)
        pm = instance_map(4)
        loss = nt_logistic(batch_of(R, pm), tau=0.1)
        expected = nt_logistic_enum(cosine_matrix(R), pm, 0.1)
        assert np.isclose(float(loss.data), expected, atol=1e-9)

    def test_multi_positive_matches_oracle(self):
        R = rand_embeddings(8, 4, 21)
        pm = multiview_map(2, 4)
        loss = nt_logistic(batch_of(R, pm, kind="multiview"), tau=0.5)
        expected = nt_logistic_enum(cosine_matrix(R), pm, 0.5)
        assert np.isclose(float(loss.data), expected, atol=1e-9)


class TestMarginTriplet:
    def test_identical_pairs_orthogonal_negatives_zero(self):
        # d_pos = 0, d_neg = 2: margin 1 satisfied, every triplet inactive
        R = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
        pm = [{1}, {0}, {3}, {2}]
        loss = margin_triplet(batch_of(R, pm), margin=1.0)
        assert float(loss.data) == 0.0

    def test_negative_identical_to_anchor_gives_three(self):
        # anchors 0 and 2: positive at d=2, negative at d=0 -> 2 - 0 + 1 = 3
        S = Tensor(np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 1.0]]))
        pm = [{1}, {0, 2}, {1}]
        loss = margin_triplet_from_similarity(S, pm, margin=1.0)
        assert np.isclose(float(loss.data), 3.0, atol=1e-12)

    @pytest.mark.parametrize("margin", [0.7, 1.0])
    def test_all_identical_embeddings_equal_margin(self, margin):
        # positive and negative coincide: d_pos = d_neg, loss = margin exactly
        R = np.tile(np.array([0.3, 0.4]), (4, 1))
        pm = [{1}, {0}, {3}, {2}]
        loss = margin_triplet(batch_of(R, pm), margin=margin)
        assert np.isclose(float(loss.data), margin, atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_enumeration_oracle(self, seed):
        R = rand_embeddings(8, 5, seed + 30)
        pm = instance_map(4)
        loss = margin_triplet(batch_of(R, pm), margin=1.0)
        expected = margin_triplet_enum(R, pm, 1.0)
        assert np.isclose(float(loss.data), expected, atol=1e-9)

    def test_no_negatives_rejected(self):
        R = rand_embeddings(2, 3, 0)
        with pytest.raises(ValueError, match="triplet"):
            margin_triplet(batch_of(R, instance_map(1)), margin=1.0)

    @given(seed=st.integers(0, 100))
    @settings(max_examples=25, deadline=None)
    def test_bounded_by_two_plus_margin(self, seed):
        R = rand_embeddings(6, 3, seed)
        pm = instance_map(3)
        loss = float(margin_triplet(batch_of(R, pm), margin=1.0).data)
        assert 0.0 <= loss <= 3.0 + 1e-12


class TestInvariants:
    @pytest.mark.parametrize("kind", LOSS_KINDS)
    @given(seed=st.integers(0, 50), scale=st.floats(0.01, 100.0))
    @settings(max_examples=20, deadline=None)
    def test_row_scale_invariance(self, kind, seed, scale):
        R = rand_embeddings(6, 4, seed)
        scaled = R.copy()
        scaled[seed % 6] *= scale
        pm = instance_map(3)
        cfg = LossConfig(kind=kind, temperature=0.2, margin=1.0)
        a = contrastive_loss(batch_of(R, pm), cfg)
        b = contrastive_loss(batch_of(scaled, pm), cfg)
        assert np.isclose(float(a.data), float(b.data), atol=1e-9)

    @pytest.mark.parametrize("fn", [nt_xent_from_similarity, nt_logistic_from_similarity])
    def test_raising_positive_similarity_decreases_loss(self, fn):
        S = cosine_matrix(rand_embeddings(6, 4, 5))
        pm = instance_map(3)
        bumped = S.copy()
        bumped[0, 3] += 0.05
        bumped[3, 0] += 0.05
        base = float(fn(Tensor(S), pm, 0.2).data)
        after = float(fn(Tensor(bumped), pm, 0.2).data)
        assert after < base

    @pytest.mark.parametrize("kind", LOSS_KINDS)
    def test_gradient_flows_to_embeddings(self, kind):
        R = Tensor(rand_embeddings(6, 4, 9), requires_grad=True)
        pm = instance_map(3)
        cfg = LossConfig(kind=kind, temperature=0.2, margin=1.0)
        with GradTape() as tape:
            vb = ViewBatch(kind="instance", positive_map=pm, views=R)
            loss = contrastive_loss(vb, cfg)
        grads = backward(tape, loss)
        g = grads[R]
        assert g.shape == R.shape
        assert np.any(g != 0.0)

    @pytest.mark.parametrize("kind", LOSS_KINDS)
    def test_gradient_matches_finite_differences(self, kind):
        R = rand_embeddings(6, 4, 11)
        pm = instance_map(3)
        cfg = LossConfig(kind=kind, temperature=0.3, margin=0.9)

        def f(r):
            vb = ViewBatch(kind="instance", positive_map=pm, views=r)
            return contrastive_loss(vb, cfg)

        err = grad_check(f, [Tensor(R, requires_grad=True)])
        assert err < 1e-6


class TestDispatch:
    def test_aliases(self):
        assert normalize_loss_kind("NT-Xent") == "nt_xent"
        assert normalize_loss_kind("nt_logistic") == "nt_logistic"
        assert normalize_loss_kind("MarginTriplet") == "margin_triplet"
        assert normalize_loss_kind("triplet") == "margin_triplet"
        with pytest.raises(ValueError, match="unknown loss"):
            normalize_loss_kind("hinge")

    def test_config_validation(self):
        with pytest.raises(ValueError):
            LossConfig(kind="nt_xent", temperature=0.0)
        with pytest.raises(ValueError):
            LossConfig(kind="margin_triplet", margin=-1.0)

    @pytest.mark.parametrize("kind,fn,kwargs", [
        ("nt_xent", nt_xent, {"tau": 0.1}),
        ("nt_logistic", nt_logistic, {"tau": 0.1}),
        ("margin_triplet", margin_triplet, {"margin": 1.0}),
    ])
    def test_dispatch_equals_direct_call(self, kind, fn, kwargs):
        R = rand_embeddings(8, 4, 2)
        pm = instance_map(4)
        vb = batch_of(R, pm)
        cfg = LossConfig(kind=kind, temperature=0.1, margin=1.0)
        assert float(contrastive_loss(vb, cfg).data) == float(fn(vb, **kwargs).data)

    def test_unencoded_batch_rejected(self):
        vb = ViewBatch(kind="instance", positive_map=instance_map(1),
                       sequences=np.zeros((2, 4, 8, 8, 1)))
        with pytest.raises(ValueError, match="encode"):
            nt_xent(vb, tau=0.1)
