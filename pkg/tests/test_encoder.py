"""Embedding and BiLSTM behavior."""

import numpy as np

from sdparse import autodiff as ad
from sdparse.encoder import BiLstm, CharEmbedder, Embedder, Lstm, PretrainedVectors
from sdparse.rng import Rng
from sdparse.sdp import parse_sdp
from sdparse.vocab import build_vocab

from util_grad import fd_gradcheck


def tiny_vocab():
    text = (
        "1\tred\tred\tJJ\t-\t-\t_\t_\n"
        "2\tcat\tcat\tNN\t+\t+\t_\t_\n"
        "3\tsat\tsit\tVB\t-\t-\t_\tARG\n"
        "\n"
        "1\tcat\tcat\tNN\t+\t-\t_\n"
        "\n"
    )
    corpus = parse_sdp(text)
    return corpus, build_vocab(corpus, min_freq=1)


class TestCharEmbedder:
    def build(self, n_chars=12, char_dim=3, hidden=5, out_dim=4, seed=2):
        params = {}
        emb = CharEmbedder(params, "char", n_chars, char_dim, hidden, out_dim, Rng(seed))
        return emb, params

    def test_single_char_token_uses_one_padded_window(self):
        emb, _ = self.build()
        assert emb.windows([7]) == [(0, 0, 7)]
        assert emb.windows([7, 8]) == [(0, 7, 8)]
        assert emb.windows([5, 6, 7, 8]) == [(5, 6, 7), (6, 7, 8)]

    def test_output_dim_fixed_for_any_token(self):
        emb, _ = self.build(out_dim=4)
        out = emb.embed_tokens([[1], [2, 3, 4, 5, 6], [7, 8]])
        assert out.shape == (3, 4)

    def test_zero_parameters_yield_bias_only(self):
        emb, params = self.build()
        for node in params.values():
            node.value[...] = 0.0
        params["char.b_out"].value[...] = np.array([1.0, -2.0, 3.0, 4.0])
        out = emb.embed_tokens([[1, 2, 3], [4]])
        assert np.allclose(out.value, [[1.0, -2.0, 3.0, 4.0]] * 2)

    def test_invariant_to_char_id_permutation(self):
        emb, params = self.build()
        perm = Rng(9).permutation(12)
        permuted_table = np.empty_like(params["char.table"].value)
        permuted_table[perm] = params["char.table"].value
        original = emb.embed_tokens([[3, 1, 4, 1, 5]]).value
        params["char.table"].value[...] = permuted_table
        remapped = emb.embed_tokens([[int(perm[i]) for i in (3, 1, 4, 1, 5)]]).value
        assert np.allclose(original, remapped, atol=1e-12)

    def test_gradients(self):
        arrays = {
            "table": Rng(1).normal((6, 2)),
            "w_out": Rng(2).normal((3, 2)),
        }

        def build(p):
            params = {}
            emb = CharEmbedder(params, "c", 6, 2, 3, 2, Rng(5))
            params["c.table"].value[...] = p["table"].value
            params["c.w_out"].value[...] = p["w_out"].value
            # rebuild with provided nodes so gradients flow to them
            emb.table = p["table"]
            emb.w_out = p["w_out"]
            out = emb.embed_tokens([[1, 2, 3, 4], [5]])
            return ad.sum_all(ad.tanh(out))

        fd_gradcheck(build, arrays)


class TestLstm:
    def test_zero_params_give_zero_outputs_everywhere(self):
        params = {}
        lstm = Lstm(params, "l", 3, 4, Rng(0))
        for node in params.values():
            node.value[...] = 0.0
        xs = [ad.constant(Rng(k).normal((2, 3))) for k in range(5)]
        outs = lstm.run(xs)
        assert all(np.allclose(o.value, 0.0) for o in outs)

    def test_reverse_equals_forward_on_reversed_input(self):
        params = {}
        lstm = Lstm(params, "l", 3, 4, Rng(1))
        xs = [ad.constant(Rng(10 + k).normal((2, 3))) for k in range(6)]
        backward_outs = lstm.run(xs, reverse=True)
        forward_on_reversed = lstm.run(xs[::-1])
        for t in range(6):
            assert np.allclose(
                backward_outs[t].value, forward_on_reversed[5 - t].value, atol=1e-12
            )

    def test_masking_freezes_state_past_length(self):
        params = {}
        lstm = Lstm(params, "l", 2, 3, Rng(2))
        xs = [ad.constant(Rng(20 + k).normal((2, 2))) for k in range(4)]
        lengths = np.array([4, 2])
        masks = [None if (t < lengths).all() else (t < lengths).astype(float)[:, None]
                 for t in range(4)]
        outs = lstm.run(xs, masks=masks)
        assert np.allclose(outs[3].value[1], outs[1].value[1])
        assert not np.allclose(outs[3].value[0], outs[1].value[0])


class TestBiLstm:
    def test_output_width_is_twice_hidden(self):
        params = {}
        net = BiLstm(params, "b", 3, 5, layers=3, dropout=0.0, rng=Rng(3))
        xs = [ad.constant(Rng(k).normal((2, 3))) for k in range(4)]
        outs = net.run(xs)
        assert all(o.shape == (2, 10) for o in outs)

    def test_gradients_through_two_layers(self):
        arrays = {"x": Rng(5).normal((2, 3, 2))}  # (B, T, d)

        def build(p):
            params = {}
            net = BiLstm(params, "b", 2, 3, layers=2, dropout=0.0, rng=Rng(7))
            xs = [ad.select(p["x"], 1, t) for t in range(3)]
            outs = net.run(xs)
            return ad.sum_all(ad.tanh(ad.concat(outs, axis=1)))

        fd_gradcheck(build, arrays)


class TestEmbedder:
    def test_basic_width_two_blocks(self):
        corpus, vocab = tiny_vocab()
        emb = Embedder({}, "e", vocab, 5, use_lemma=False, use_char=False, rng=Rng(0))
        assert emb.input_dim == 10

    def test_char_and_lemma_width_four_blocks(self):
        corpus, vocab = tiny_vocab()
        emb = Embedder({}, "e", vocab, 5, use_lemma=True, use_char=True, rng=Rng(0))
        assert emb.input_dim == 20

    def test_encode_shapes_and_root_row(self):
        corpus, vocab = tiny_vocab()
        emb = Embedder({}, "e", vocab, 4, use_lemma=False, use_char=False, rng=Rng(1))
        sentences = [corpus[0][0], corpus[1][0]]
        batch, lengths = emb.encode_batch(sentences)
        assert batch.shape == (2, 4, 8)  # longest sentence 3 tokens, plus root
        assert np.array_equal(lengths, [4, 2])
        root = emb.root.value[0]
        assert np.allclose(batch.value[0, 0], root)
        assert np.allclose(batch.value[1, 0], root)

    def test_repeated_token_gets_identical_rows(self):
        corpus, vocab = tiny_vocab()
        emb = Embedder({}, "e", vocab, 4, use_lemma=True, use_char=True, rng=Rng(2))
        text = "1\tcat\tcat\tNN\t+\t-\t_\n2\tcat\tcat\tNN\t-\t-\t_\n\n"
        sentence = parse_sdp(text)[0][0]
        batch, _ = emb.encode_batch([sentence])
        assert np.allclose(batch.value[0, 1], batch.value[0, 2], atol=1e-12)

    def test_pretrained_vectors_override_and_fall_back(self):
        corpus, vocab = tiny_vocab()
        vec = np.arange(4.0)
        pre = PretrainedVectors({"cat": vec}, 4)
        params = {}
        emb = Embedder(params, "e", vocab, 4, use_lemma=False, use_char=False,
                       rng=Rng(3), pretrained=pre)
        assert emb.input_dim == 12
        text = "1\tcat\tcat\tNN\t+\t-\t_\n2\tred\tred\tJJ\t-\t-\t_\n\n"
        sentence = parse_sdp(text)[0][0]
        batch, _ = emb.encode_batch([sentence])
        assert np.allclose(batch.value[0, 1, 8:], vec)  # pretrained slot
        learned = params["e.word"].value[vocab.form_id("red")]
        assert np.allclose(batch.value[0, 2, 8:], learned)  # fallback slot

    def test_eval_encoding_is_pure(self):
        corpus, vocab = tiny_vocab()
        emb = Embedder({}, "e", vocab, 4, use_lemma=True, use_char=True, rng=Rng(4))
        a, _ = emb.encode_batch([corpus[0][0]])
        b, _ = emb.encode_batch([corpus[0][0]])
        assert np.array_equal(a.value, b.value)
