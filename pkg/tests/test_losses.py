"""Loss functions and the learning-rate schedule."""

import math

import numpy as np
import pytest

from sdparse import autodiff as ad
from sdparse.errors import ConfigError
from sdparse.rng import Rng
from sdparse.sdp import Edge, SemanticGraph, graph_to_adj, parse_sdp
from sdparse.train import combined_loss, cross_entropy, edge_loss, label_loss, lr_at
from sdparse.vocab import build_vocab

from util_grad import fd_gradcheck


class TestCrossEntropy:
    def test_one_hot_certain_is_zero(self):
        out = cross_entropy(np.array([1.0, 0.0]), np.array([1.0, 0.0]))
        assert abs(float(out.value)) < 1e-12

    def test_one_hot_half_is_ln2(self):
        out = cross_entropy(np.array([1.0, 0.0]), np.array([0.5, 0.5]))
        assert abs(float(out.value) - math.log(2.0)) < 1e-12

    def test_uniform_pair_is_ln2(self):
        uniform = np.array([0.5, 0.5])
        out = cross_entropy(uniform, uniform)
        assert abs(float(out.value) - math.log(2.0)) < 1e-12

    def test_clamp_prevents_log_zero(self):
        out = cross_entropy(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        assert np.isfinite(float(out.value))
        assert float(out.value) > 20.0  # -log(1e-12)


def two_token_graph(edges):
    return SemanticGraph(2, tuple(Edge(*e) for e in edges))


class TestEdgeLoss:
    def test_confident_correct_scores_vanish(self):
        gold = two_token_graph([(0, 1, "ROOT"), (1, 2, "A")])
        adj = graph_to_adj(gold)
        s = np.full((3, 3), -20.0)
        s[1, 0] = 20.0  # dependent 1, head 0
        s[2, 1] = 20.0
        loss = edge_loss(ad.constant(s), adj)
        assert float(loss.value) < 1e-8

    def test_zero_logits_cost_ln2_per_cell(self):
        gold = two_token_graph([])
        loss = edge_loss(ad.constant(np.zeros((3, 3))), graph_to_adj(gold))
        assert abs(float(loss.value) - math.log(2.0)) < 1e-12

    def test_gradient_sign_negative_at_gold_cell(self):
        gold = two_token_graph([(1, 2, "A")])
        s = ad.param(np.zeros((3, 3)))
        ad.backward(edge_loss(s, graph_to_adj(gold)))
        assert s.grad[2, 1] < 0.0  # raising that logit lowers the loss
        assert s.grad[1, 2] > 0.0  # a non-gold candidate cell
        assert s.grad[0, 1] == 0.0  # the root is never a dependent

    def test_gradients_match_finite_differences(self):
        gold = two_token_graph([(0, 2, "ROOT"), (2, 1, "A")])
        adj = graph_to_adj(gold)

        def build(p):
            return edge_loss(p["s"], adj)

        fd_gradcheck(build, {"s": Rng(3).normal((3, 3))})


def label_fixture():
    text = (
        "1\ta\ta\tX\t-\t+\t_\t_\tAGT\n"
        "2\tb\tb\tX\t+\t+\t_\tPAT\t_\n"
        "3\tc\tc\tX\t-\t-\t_\tEXT\t_\n"
        "\n"
    )
    corpus = parse_sdp(text)
    vocab = build_vocab(corpus, min_freq=1)
    return corpus[0][1], vocab


class TestLabelLoss:
    def test_confident_gold_label_vanishes(self):
        gold, vocab = label_fixture()
        c = vocab.n_labels
        s = np.zeros((4, 4, c))
        for e in gold.edges:
            s[e.dep, e.head, :] = -20.0
            s[e.dep, e.head, vocab.label_id(e.label)] = 20.0
        loss = label_loss(ad.constant(s), gold, vocab)
        assert float(loss.value) < 1e-8

    def test_uniform_logits_cost_ln_c(self):
        gold, vocab = label_fixture()
        loss = label_loss(ad.constant(np.zeros((4, 4, vocab.n_labels))), gold, vocab)
        assert abs(float(loss.value) - math.log(vocab.n_labels)) < 1e-12

    def test_no_gold_edges_contributes_zero(self):
        _, vocab = label_fixture()
        empty = SemanticGraph(3, ())
        loss = label_loss(ad.constant(np.ones((4, 4, vocab.n_labels))), empty, vocab)
        assert float(loss.value) == 0.0

    def test_label_permutation_symmetry(self):
        gold, vocab = label_fixture()
        c = vocab.n_labels
        rng = Rng(5)
        s = rng.normal((4, 4, c))
        base = float(label_loss(ad.constant(s), gold, vocab).value)
        perm = rng.permutation(c)
        remapped_labels = {name: int(perm[idx]) for name, idx in vocab.label.items()}
        permuted_vocab = type(vocab)(
            form=vocab.form, lemma=vocab.lemma, pos=vocab.pos, char=vocab.char,
            label=remapped_labels, min_freq=vocab.min_freq,
        )
        permuted_scores = np.empty_like(s)
        for old in range(c):
            permuted_scores[:, :, int(perm[old])] = s[:, :, old]
        swapped = float(label_loss(ad.constant(permuted_scores), gold, permuted_vocab).value)
        assert abs(base - swapped) < 1e-12

    def test_gradients_match_finite_differences(self):
        gold, vocab = label_fixture()

        def build(p):
            return label_loss(p["s"], gold, vocab)

        fd_gradcheck(build, {"s": Rng(6).normal((4, 4, vocab.n_labels))})


class TestCombinedLoss:
    def test_table_value_arithmetic(self):
        out = combined_loss(2.0, 4.0, 0.1)
        assert abs(float(out.value) - 3.8) < 1e-12

    def test_half_is_arithmetic_mean(self):
        out = combined_loss(3.0, 5.0, 0.5)
        assert abs(float(out.value) - 4.0) < 1e-12

    def test_equal_losses_are_a_fixed_point(self):
        for lam in (0.1, 0.25, 0.9):
            out = combined_loss(2.5, 2.5, lam)
            assert abs(float(out.value) - 2.5) < 1e-12

    def test_lambda_outside_open_interval_rejected(self):
        for lam in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(ConfigError):
                combined_loss(1.0, 1.0, lam)


class TestLrSchedule:
    def test_base_rate_at_step_zero(self):
        assert lr_at(0) == 1e-2

    def test_one_decay_at_5000(self):
        assert abs(lr_at(5000) - 7.5e-3) < 1e-18

    def test_two_decays_at_10000(self):
        assert abs(lr_at(10000) - 5.625e-3) < 1e-18

    def test_staircase_constant_within_interval(self):
        assert lr_at(1) == lr_at(4999) == 1e-2

    def test_negative_step_rejected(self):
        with pytest.raises(ConfigError):
            lr_at(-1)
