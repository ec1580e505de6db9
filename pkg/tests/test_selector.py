import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from masksum.corruptions import (
    KIND_ORIGINAL,
    KIND_SWAP,
    LABEL_ADMISSIBLE,
    LABEL_CORRUPTED,
    CorruptionInstance,
)
from masksum.selector import (
    LengthRewardConfig,
    SelectionContext,
    SelectorConfig,
    combine_features,
    encode_pair,
    predict_admissible,
    QualityClassifier,
    score_length_norm,
    score_reward,
    select,
    train_quality_selector,
)
from masksum.slots import Hypothesis
from masksum.vocab import TokenSeq, build_vocab


def test_combination_vector_hand_case():
    feats = combine_features(np.array([1.0, 2.0]), np.array([3.0, -1.0]))
    assert np.array_equal(feats.h, np.array([1, 2, 3, -1, 2, 3, 3, -2], dtype=float))


def test_combination_vector_shape_contract():
    rng = np.random.default_rng(0)
    h_x, h_y = rng.normal(size=5), rng.normal(size=5)
    assert combine_features(h_x, h_y).h.shape == (20,)


@pytest.fixture(scope="module")
def pair_vocab():
    return build_vocab(
        ["fine deal reached smoothly today", "broken pact collapsed badly yesterday"]
    )


@pytest.fixture(scope="module")
def fresh_clf(pair_vocab):
    cfg = SelectorConfig(hidden=8, blocks=1, heads=2, max_len=12, seed=5)
    return QualityClassifier(cfg, pair_vocab.size)


def test_encode_pair_zero_difference_for_identical_texts(fresh_clf, pair_vocab):
    feats = encode_pair(fresh_clf, pair_vocab, "fine deal", "fine deal")
    d = fresh_clf.config.hidden
    assert feats.h.shape == (4 * d,)
    assert np.allclose(feats.h[2 * d : 3 * d], 0.0)
    assert np.array_equal(feats.h_x, feats.h_y)


def test_encode_pair_rejects_empty_text(fresh_clf, pair_vocab):
    with pytest.raises(ValueError, match="empty text"):
        encode_pair(fresh_clf, pair_vocab, " ", "fine deal")


def test_predict_admissible_is_pure_and_in_open_interval(fresh_clf, pair_vocab):
    a = predict_admissible(fresh_clf, pair_vocab, "fine deal", "broken pact")
    b = predict_admissible(fresh_clf, pair_vocab, "fine deal", "broken pact")
    assert a == b
    assert 0.0 < a < 1.0


def test_length_norm_examples():
    assert score_length_norm(-10.0, 10, 1.0) == -1.0
    assert score_length_norm(-10.0, 4, 0.0) == -10.0
    assert score_length_norm(-12.0, 8, 0.5) == pytest.approx(-4.242640687, abs=1e-9)
    with pytest.raises(ValueError):
        score_length_norm(-1.0, 0, 1.0)


def test_reward_examples():
    assert score_reward(-10.0, 8, 10, 2.0) == 6.0
    assert score_reward(-10.0, 12, 10, 2.0) == 10.0
    assert LengthRewardConfig().reward == 2.0


def test_reward_plateaus_at_predicted_length():
    values = [score_reward(-5.0, n, 9, 2.0) for n in range(1, 15)]
    for shorter, longer in zip(values, values[1:]):
        assert longer >= shorter
    assert len(set(values[8:])) == 1  # constant once len >= 9


def _hyp(ids, score):
    return Hypothesis(tokens=TokenSeq(tuple(ids)), order=tuple(range(1, len(ids) + 1)), score=score)


@pytest.fixture(scope="module")
def reward_ctx(pair_vocab):
    return SelectionContext(
        vocab=pair_vocab,
        reward=LengthRewardConfig(reward=2.0, norm_exponent=1.0, predicted_length=10),
    )


def test_select_singleton_any_mode(pair_vocab, fresh_clf, reward_ctx):
    only = _hyp([4, 5], -1.0)
    ctx = SelectionContext(
        vocab=pair_vocab, source="fine deal", classifier=fresh_clf,
        reward=reward_ctx.reward,
    )
    for mode in ("best_quality", "best_length", "length_norm"):
        assert select([only], mode, ctx) is only


def test_select_reward_arithmetic_case(reward_ctx):
    shorter = _hyp([4] * 8, -10.0)
    longer = _hyp([5] * 12, -11.0)
    assert select([shorter, longer], "best_length", reward_ctx) is longer


def test_select_invariant_to_constant_score_shift(reward_ctx):
    base = [_hyp([4] * 8, -10.0), _hyp([5] * 12, -11.0), _hyp([6] * 10, -9.5)]
    shifted = [_hyp(h.tokens.ids, h.score - 3.0) for h in base]
    pick = select(base, "best_length", reward_ctx)
    pick_shifted = select(shifted, "best_length", reward_ctx)
    assert pick_shifted.tokens == pick.tokens


def test_select_tie_prefers_shorter_then_lexicographic(reward_ctx):
    # equal reward-adjusted scores: -16+2*8 == -20+2*10
    a = _hyp([5] * 8, -16.0)
    b = _hyp([5] * 10, -20.0)
    assert select([b, a], "best_length", reward_ctx) is a
    c = _hyp([4] * 8, -16.0)  # same length as a, smaller text
    assert select([a, c], "best_length", reward_ctx) is c


def test_select_average_returns_all(reward_ctx):
    hyps = [_hyp([4], -1.0), _hyp([5], -2.0)]
    assert select(hyps, "average", reward_ctx) == hyps


def test_select_errors(reward_ctx, pair_vocab):
    with pytest.raises(ValueError, match="no hypotheses"):
        select([], "best_length", reward_ctx)
    with pytest.raises(ValueError, match="unknown mode"):
        select([_hyp([4], -1.0)], "best", reward_ctx)
    with pytest.raises(ValueError, match="classifier"):
        select([_hyp([4], -1.0)], "best_quality", SelectionContext(vocab=pair_vocab))
    with pytest.raises(ValueError, match="reward"):
        select([_hyp([4], -1.0)], "best_length", SelectionContext(vocab=pair_vocab))


@settings(max_examples=30, deadline=None)
@given(perm=st.permutations(list(range(5))))
def test_select_is_permutation_invariant(reward_ctx, perm):
    hyps = [
        _hyp([4] * 8, -16.0),
        _hyp([5] * 10, -20.0),
        _hyp([4, 5, 6], -2.0),
        _hyp([6] * 10, -19.0),
        _hyp([7] * 5, -3.0),
    ]
    baseline = select(hyps, "best_length", reward_ctx)
    shuffled = [hyps[i] for i in perm]
    assert select(shuffled, "best_length", reward_ctx) == baseline


def test_quality_argmax_invariant_under_monotone_transform(fresh_clf, pair_vocab):
    hyps = [_hyp([4, 5, 6], -1.0), _hyp([7, 8], -2.0), _hyp([5, 9, 6, 8], -3.0)]
    ctx = SelectionContext(vocab=pair_vocab, source="fine deal reached", classifier=fresh_clf)
    chosen = select(hyps, "best_quality", ctx)
    from masksum.vocab import decode_tokens

    def logit(h):
        p = predict_admissible(fresh_clf, pair_vocab, ctx.source, decode_tokens(h.tokens, pair_vocab))
        return math.log(p / (1 - p))

    by_logit = max(hyps, key=logit)
    assert chosen == by_logit


# --- training ---------------------------------------------------------------


def _separable_instances(n):
    positives = [
        CorruptionInstance(
            source="fine deal reached smoothly today",
            summary="fine deal reached smoothly",
            label=LABEL_ADMISSIBLE,
            kind=KIND_ORIGINAL,
        )
    ] * (n // 2)
    negatives = [
        CorruptionInstance(
            source="fine deal reached smoothly today",
            summary="broken pact collapsed badly",
            label=LABEL_CORRUPTED,
            kind=KIND_SWAP,
        )
    ] * (n // 2)
    return positives + negatives


def test_separable_data_reaches_perfect_holdout(pair_vocab):
    cfg = SelectorConfig(hidden=16, blocks=1, heads=2, max_len=12, epochs=12,
                         batch_size=16, lr=3e-3, seed=1)
    _clf, metrics = train_quality_selector(_separable_instances(120), pair_vocab, cfg)
    assert metrics["holdout_accuracy"] == 1.0


def test_unbalanced_dataset_warns_but_trains(pair_vocab, caplog):
    instances = _separable_instances(40) + _separable_instances(4)[:2]
    cfg = SelectorConfig(hidden=8, blocks=1, heads=2, max_len=12, epochs=1,
                         batch_size=8, seed=0)
    with caplog.at_level(logging.WARNING):
        train_quality_selector(instances, pair_vocab, cfg)
    assert "unbalanced" in caplog.text


def test_selector_training_deterministic(pair_vocab):
    cfg = SelectorConfig(hidden=8, blocks=1, heads=2, max_len=12, epochs=2,
                         batch_size=8, seed=3)
    a, am = train_quality_selector(_separable_instances(40), pair_vocab, cfg)
    b, bm = train_quality_selector(_separable_instances(40), pair_vocab, cfg)
    assert am == bm
    import torch

    for pa, pb in zip(a.parameters(), b.parameters()):
        assert torch.equal(pa, pb)


def test_empty_dataset_rejected(pair_vocab):
    with pytest.raises(ValueError, match="empty dataset"):
        train_quality_selector([], pair_vocab, SelectorConfig())
