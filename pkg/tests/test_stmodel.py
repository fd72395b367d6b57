from __future__ import annotations

import math

import numpy as np
import pytest

from gradcheck import assert_gradients
from numcore import AdamState, Mode, Parameters, adam_step, backward, load_checkpoint, no_grad, save_checkpoint
from numcore.errors import ContractError, VocabIndexError
from numcore.tensor import Tensor, sum_
from stmodel import (
    ArchConfig,
    Seq2Seq,
    SourceItem,
    VariantTag,
    attend,
    collate_sources,
    get_variant,
)
from stmodel.layers import lengths_to_mask, linear_lstm_input, lstm_sequence
from stmodel.model import pad_targets

FEATURE_DIM = 3
TARGET_VOCAB = 7
SOURCE_VOCAB = 9
PHONE_VOCAB = 5


def make_items(tag: VariantTag, lengths, rng):
    variant = get_variant(tag)
    items = []
    for length in lengths:
        if variant.is_discrete:
            items.append(SourceItem(tokens=rng.integers(4, SOURCE_VOCAB, size=length)))
        elif tag is VariantTag.PHONE_E2E:
            items.append(SourceItem(features=rng.normal(size=(length, FEATURE_DIM)), phone_ids=rng.integers(0, PHONE_VOCAB, size=length)))
        else:
            items.append(SourceItem(features=rng.normal(size=(length, FEATURE_DIM))))
    return items


def make_model(tag: VariantTag, arch: ArchConfig, seed: int = 0) -> Seq2Seq:
    return Seq2Seq.build(
        get_variant(tag),
        arch,
        FEATURE_DIM,
        TARGET_VOCAB,
        np.random.default_rng(seed),
        source_vocab_size=SOURCE_VOCAB,
        phone_vocab_size=PHONE_VOCAB,
    )


class TestArchConfig:
    def test_defaults(self):
        arch = ArchConfig()
        assert (arch.hidden, arch.attention_units, arch.embedding_dim) == (512, 128, 64)
        assert arch.context_dim == 1024

    def test_downsample_positions_must_precede_last_layer(self):
        with pytest.raises(ValueError):
            ArchConfig(encoder_layers=3, downsample_after=[3])

    @pytest.mark.parametrize("length", range(1, 201))
    def test_output_length_law(self, length):
        assert ArchConfig().output_length(length) == math.ceil(math.ceil(length / 2) / 2)


class TestVariants:
    def test_input_widths(self):
        assert get_variant("phone_e2e").input_width(40, 64) == 104
        assert get_variant("baseline_e2e").input_width(40, 64) == 40
        assert get_variant("mt_over_phones").input_width(40, 64) == 64

    def test_unknown(self):
        with pytest.raises(ValueError):
            get_variant("transformer")


class TestLstmSequence:
    def test_gradients_with_padding(self, rng):
        params = Parameters()
        params.add("l.Wx", rng.uniform(-0.5, 0.5, size=(3, 8)))
        params.add("l.Wh", rng.uniform(-0.5, 0.5, size=(2, 8)))
        params.add("l.b", rng.uniform(-0.5, 0.5, size=8))
        x = Tensor(rng.normal(size=(2, 5, 3)), requires_grad=True, name="x")
        mask = lengths_to_mask(np.array([5, 3]), 5)
        weights = rng.normal(size=(2, 5, 2))

        for reverse in (False, True):
            def fn():
                out = lstm_sequence(linear_lstm_input(x, params, "l"), params["l.Wh"], mask, reverse)
                return sum_(out * weights)

            assert_gradients(fn, [x] + [t for _, t in params.items()])

    def test_padded_steps_output_zero_and_reverse_starts_at_last_valid(self, rng):
        params = Parameters()
        params.add("l.Wx", rng.normal(size=(1, 4)))
        params.add("l.Wh", rng.normal(size=(1, 4)))
        params.add("l.b", np.zeros(4))
        x = rng.normal(size=(1, 4, 1))
        padded = lstm_sequence(linear_lstm_input(Tensor(x), params, "l"), params["l.Wh"], lengths_to_mask(np.array([2]), 4), reverse=True)
        alone = lstm_sequence(linear_lstm_input(Tensor(x[:, :2]), params, "l"), params["l.Wh"], np.ones((1, 2)), reverse=True)
        np.testing.assert_array_equal(padded.values[:, 2:], 0.0)
        np.testing.assert_allclose(padded.values[:, :2], alone.values)


class TestEncoder:
    @pytest.mark.parametrize("length, expected", [(16, 4), (1, 1), (7, 2), (9, 3)])
    def test_downsampled_length(self, tiny_arch, rng, length, expected):
        model = make_model(VariantTag.BASELINE_E2E, tiny_arch)
        encoded = model.encode(collate_sources(make_items(VariantTag.BASELINE_E2E, [length], rng)))
        assert encoded.steps == expected
        assert encoded.states.shape == (1, expected, 2 * tiny_arch.hidden)
        assert list(encoded.lengths) == [expected]

    def test_batch_lengths_follow_the_law(self, tiny_arch, rng):
        model = make_model(VariantTag.PHONE_E2E, tiny_arch)
        encoded = model.encode(collate_sources(make_items(VariantTag.PHONE_E2E, [13, 4, 8], rng)))
        assert list(encoded.lengths) == [4, 1, 2]
        np.testing.assert_array_equal(encoded.mask, lengths_to_mask(np.array([4, 1, 2]), 4))

    def test_empty_source(self, tiny_arch):
        model = make_model(VariantTag.BASELINE_E2E, tiny_arch)
        with pytest.raises(ContractError):
            model.encode(collate_sources([SourceItem(features=np.zeros((0, FEATURE_DIM)))]))

    def test_zero_phone_table_matches_baseline(self, tiny_arch, rng):
        phone = make_model(VariantTag.PHONE_E2E, tiny_arch, seed=1)
        base = make_model(VariantTag.BASELINE_E2E, tiny_arch, seed=2)
        phone.params["phone.embed"].values = np.zeros_like(phone.params["phone.embed"].values)
        values = {}
        for name, tensor in base.params.items():
            source = phone.params[name].values
            values[name] = source[:FEATURE_DIM] if name.startswith("enc.l1.") and name.endswith(".Wx") else source
        base.params.load_values(values)
        items = make_items(VariantTag.PHONE_E2E, [6, 9], rng)
        targets = [[4, 5, 2], [6, 2]]
        with no_grad():
            a = phone.forward_loss(collate_sources(items), targets, Mode.EVAL)
            b = base.forward_loss(collate_sources([SourceItem(features=i.features) for i in items]), targets, Mode.EVAL)
        assert a.item() == pytest.approx(b.item(), rel=1e-12)


class TestAttention:
    def _params(self):
        params = Parameters()
        params.add("att.enc.W", np.ones((1, 1)))
        params.add("att.dec.W", np.ones((1, 1)))
        params.add("att.v.W", np.ones((1, 1)))
        return params

    def test_scalar_hand_example(self):
        params = self._params()
        states = Tensor(np.array([[[1.0], [-1.0]]]))
        keys = Tensor(states.values.copy())
        context, weights = attend(params, Tensor(np.zeros((1, 1))), states, keys, np.ones((1, 2)))
        t = math.tanh(1.0)
        expected = math.exp(t) / (math.exp(t) + math.exp(-t))
        np.testing.assert_allclose(weights.values, [[expected, 1 - expected]], atol=1e-12)
        assert weights.values[0, 0] == pytest.approx(0.821, abs=1e-3)
        assert context.values[0, 0] == pytest.approx(2 * expected - 1)

    def test_padded_positions_get_zero_weight(self, rng):
        params = Parameters()
        params.add("att.enc.W", rng.normal(size=(2, 3)))
        params.add("att.dec.W", rng.normal(size=(4, 3)))
        params.add("att.v.W", rng.normal(size=(3, 1)))
        states = Tensor(rng.normal(size=(2, 4, 2)))
        keys = Tensor(states.values.reshape(8, 2) @ params["att.enc.W"].values).reshape(2, 4, 3)
        mask = lengths_to_mask(np.array([4, 1]), 4)
        context, weights = attend(params, Tensor(rng.normal(size=(2, 4))), states, keys, mask)
        np.testing.assert_allclose(weights.values.sum(axis=1), 1.0, atol=1e-12)
        np.testing.assert_array_equal(weights.values[1, 1:], 0.0)
        assert weights.values[1, 0] == 1.0
        np.testing.assert_allclose(context.values[1], states.values[1, 0])

    def test_zero_valid_length(self, rng):
        params = self._params()
        states = Tensor(np.ones((1, 2, 1)))
        with pytest.raises(ContractError):
            attend(params, Tensor(np.zeros((1, 1))), states, states, np.zeros((1, 2)))


class TestDecoder:
    def test_logits_shape_and_determinism(self, tiny_arch, rng):
        model = make_model(VariantTag.MT_OVER_TEXT, tiny_arch)
        encoded = model.encode(collate_sources(make_items(VariantTag.MT_OVER_TEXT, [5, 3], rng)))
        with no_grad():
            a, _, w = model.decode_step(np.array([1, 1]), model.init_state(2), encoded)
            b, _, _ = model.decode_step(np.array([1, 1]), model.init_state(2), encoded)
        assert a.shape == (2, TARGET_VOCAB)
        assert w.shape == (2, encoded.steps)
        assert np.array_equal(a.values, b.values)

    def test_token_out_of_range(self, tiny_arch, rng):
        model = make_model(VariantTag.MT_OVER_TEXT, tiny_arch)
        encoded = model.encode(collate_sources(make_items(VariantTag.MT_OVER_TEXT, [4], rng)))
        with pytest.raises(VocabIndexError):
            model.decode_step(np.array([TARGET_VOCAB]), model.init_state(1), encoded)

    def test_target_rows_have_unit_norm(self, tiny_arch):
        model = make_model(VariantTag.ASR_BPE, tiny_arch)
        np.testing.assert_allclose(np.linalg.norm(model.params["tgt.embed"].values, axis=1), 1.0, atol=1e-12)


class TestForwardLoss:
    def test_zero_output_layer_gives_log_vocab(self, tiny_arch, rng):
        model = make_model(VariantTag.BASELINE_E2E, tiny_arch)
        for name in ("out.W", "out.b"):
            model.params[name].values = np.zeros_like(model.params[name].values)
        loss = model.forward_loss(collate_sources(make_items(VariantTag.BASELINE_E2E, [8, 5], rng)), [[4, 2], [5, 6, 2]], Mode.EVAL)
        assert loss.item() == pytest.approx(math.log(TARGET_VOCAB))

    def test_pad_extension_is_invisible(self, tiny_arch, rng):
        model = make_model(VariantTag.PHONE_AVG_E2E, tiny_arch)
        batch = collate_sources(make_items(VariantTag.PHONE_AVG_E2E, [6], rng))
        with no_grad():
            short = model.forward_loss(batch, [[4, 5, 2]], Mode.EVAL)
            padded = model.forward_loss(batch, [[4, 5, 2, 0, 0]], Mode.EVAL)
        assert short.item() == pytest.approx(padded.item(), rel=1e-12)

    def test_all_pad_targets(self):
        with pytest.raises(ContractError):
            pad_targets([[], []])

    def test_teacher_forcing_inputs(self):
        inputs, outputs, mask = pad_targets([[4, 5, 2], [6, 2]])
        np.testing.assert_array_equal(inputs, [[1, 4, 5], [1, 6, 0]])
        np.testing.assert_array_equal(outputs, [[4, 5, 2], [6, 2, 0]])
        np.testing.assert_array_equal(mask, [[1, 1, 1], [1, 1, 0]])

    @pytest.mark.parametrize("tag", [VariantTag.BASELINE_E2E, VariantTag.PHONE_E2E, VariantTag.MT_OVER_PHONES])
    def test_gradients_match_finite_differences(self, tiny_arch, rng, tag):
        arch = tiny_arch.model_copy(update={"hidden": 2, "attention_units": 2, "embedding_dim": 2, "label_smoothing": 0.1})
        model = make_model(tag, arch)
        batch = collate_sources(make_items(tag, [6, 4], rng))
        targets = [[4, 5, 2], [6, 2]]

        def fn():
            return model.forward_loss(batch, targets, Mode.TRAIN)

        assert_gradients(fn, [t for _, t in model.params.items()], samples=3)

    def test_single_pair_overfits(self, rng):
        arch = ArchConfig(hidden=8, attention_units=8, embedding_dim=8, dropout=0.0, embedding_dropout=0.0, label_smoothing=0.0)
        model = make_model(VariantTag.BASELINE_E2E, arch)
        batch = collate_sources(make_items(VariantTag.BASELINE_E2E, [10], rng))
        targets = [[4, 6, 5, 2]]
        optimizer = AdamState(lr=0.01)
        for _ in range(200):
            model.params.zero_grad()
            loss = model.forward_loss(batch, targets, Mode.TRAIN)
            backward(loss)
            adam_step(model.params.as_dict(), model.params.grads(), optimizer)
            model.renormalize_embeddings()
        with no_grad():
            final = model.forward_loss(batch, targets, Mode.TRAIN)
        assert final.item() < 0.1


class TestCheckpoint:
    def test_round_trip_restores_outputs(self, tiny_arch, rng, tmp_path):
        model = make_model(VariantTag.MT_OVER_PHONES, tiny_arch)
        batch = collate_sources(make_items(VariantTag.MT_OVER_PHONES, [5], rng))
        save_checkpoint(model.checkpoint(extra={"epoch": 1}), tmp_path / "checkpoint.json")
        restored = Seq2Seq.from_checkpoint(load_checkpoint(tmp_path / "checkpoint.json"))
        assert restored.variant.tag is VariantTag.MT_OVER_PHONES
        with no_grad():
            a = model.forward_loss(batch, [[4, 2]], Mode.EVAL).item()
            b = restored.forward_loss(batch, [[4, 2]], Mode.EVAL).item()
        assert a == b
