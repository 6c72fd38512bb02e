"""Tests for the adapter stack: shapes, attention, losses, gradients, training."""

import math

import numpy as np
import pytest

from chemlinker.errors import (
    DimensionMismatch,
    EmptyDataset,
    LengthMismatch,
    ShapeError,
    VocabError,
)
from chemlinker.adapternet import (
    Tensor,
    TrainConfig,
    Vocab,
    adapter_attend,
    adapter_ffn,
    batch_loss,
    forward_logits,
    grad_check,
    init_model,
    load_checkpoint,
    mlp_adapter,
    noam_lr,
    save_checkpoint,
    smiles_char_vocab,
    teacher_forced_loss,
    train_adapter,
    word_vocab,
)


def toy_config(**kw):
    defaults = dict(text_vocab=20, mol_vocab=32)
    defaults.update(kw)
    return TrainConfig(**defaults)


def toy_batch():
    return [([1, 4, 5, 2], [1, 6, 7, 8, 9, 2]),
            ([1, 5, 2], [1, 9, 8, 2])]


# --- initialization --------------------------------------------------------------


def test_init_deterministic():
    cfg = toy_config()
    a, b = init_model(cfg), init_model(cfg)
    assert set(a.tensors) == set(b.tensors)
    for name in a.tensors:
        assert np.array_equal(a.tensors[name], b.tensors[name])


def test_init_shape_errors():
    with pytest.raises(ShapeError):
        init_model(toy_config(heads=3, d_mol=64))
    with pytest.raises(ShapeError):
        init_model(toy_config(warmup_steps=0))


def test_default_toy_model_under_1m_params():
    params = init_model(toy_config())
    assert params.count() < 1_000_000


def test_trainable_count_is_adapter_plus_projection():
    params = init_model(toy_config())
    trainable = set(params.trainable_names())
    assert trainable == {n for n in params.tensors
                         if n.startswith(("adapter.", "proj."))}
    cfg = params.config
    expected = (cfg.d_text * cfg.d_mol                    # W_T
                + 4 * cfg.d_mol * cfg.d_mol               # W_Q W_K W_V W_O
                + cfg.d_mol * cfg.d_mol * cfg.ffn_mult * 2
                + cfg.d_mol * cfg.ffn_mult + cfg.d_mol)
    assert params.count(trainable) == expected


# --- adapter attention -----------------------------------------------------------


def _random_states(cfg, m, n, seed=0):
    rng = np.random.default_rng(seed)
    T = rng.normal(size=(m, cfg.d_text)).astype(np.float32)
    S = rng.normal(size=(n, cfg.d_mol)).astype(np.float32)
    return T, S


def test_single_text_state_attention():
    params = init_model(toy_config())
    cfg = params.config
    # Give W_O real weights so the value path is observable.
    rng = np.random.default_rng(5)
    params.tensors["adapter.attn.wo"] = rng.normal(
        size=(cfg.d_mol, cfg.d_mol)).astype(np.float32)
    T, S = _random_states(cfg, 1, 6)
    out, weights = adapter_attend(T, S, params)
    assert np.all(weights.data == 1.0)
    value = (T @ params.tensors["proj.w_t"]
             @ params.tensors["adapter.attn.wv"]
             @ params.tensors["adapter.attn.wo"])
    assert np.allclose(out.data, S + value, atol=1e-5)


def test_zero_projection_gives_uniform_attention():
    params = init_model(toy_config())
    params.tensors["proj.w_t"][:] = 0.0
    T, S = _random_states(params.config, 7, 4)
    _, weights = adapter_attend(T, np.zeros_like(S), params)
    assert np.allclose(weights.data, 1.0 / 7, atol=1e-7)


def test_attention_rows_sum_to_one():
    params = init_model(toy_config())
    for seed in range(5):
        T, S = _random_states(params.config, 9, 5, seed)
        _, weights = adapter_attend(T, S, params)
        assert np.allclose(weights.data.sum(axis=-1), 1.0, atol=1e-6)


def test_unscaled_attention_flag_changes_weights():
    scaled = init_model(toy_config())
    unscaled = init_model(toy_config(unscaled_attention=True))
    T, S = _random_states(scaled.config, 6, 4)
    _, w_scaled = adapter_attend(T, S, scaled)
    _, w_unscaled = adapter_attend(T, S, unscaled)
    assert not np.allclose(w_scaled.data, w_unscaled.data)


def test_untrained_adapter_is_identity():
    params = init_model(toy_config())
    T, S = _random_states(params.config, 6, 4)
    out, _ = adapter_attend(T, S, params)
    tensors = {n: Tensor(v) for n, v in params.tensors.items()}
    final = adapter_ffn(out, tensors)
    assert np.allclose(final.data, S, atol=1e-6)


def test_adapter_dimension_mismatch():
    params = init_model(toy_config())
    with pytest.raises(DimensionMismatch):
        adapter_attend(np.zeros((3, 17)), np.zeros((4, 64)), params)
    with pytest.raises(DimensionMismatch):
        adapter_attend(np.zeros((3, 64)), np.zeros((4, 17)), params)


# --- MLP ablation -----------------------------------------------------------------


def _tiny_mlp(w2_zero=False):
    t = {
        "mlp.w1s": Tensor(np.eye(2)),
        "mlp.w1t": Tensor(np.array([[1.0, 1.0], [0.0, 1.0]])),
        "mlp.b1": Tensor(np.zeros(2)),
        "mlp.w2": Tensor(np.zeros((2, 2)) if w2_zero else np.eye(2)),
        "mlp.b2": Tensor(np.array([0.5, 0.5])),
    }
    return t


def test_mlp_adapter_hand_example():
    t = _tiny_mlp()
    S = np.array([[1.0, 0.0], [0.0, 1.0]])
    pooled = np.array([1.0, 2.0])
    out = mlp_adapter(pooled, S, t)
    expected = np.tanh(S + np.array([1.0, 3.0])) + 0.5
    assert np.allclose(out.data, expected)


def test_mlp_adapter_zero_weights_yield_bias():
    t = _tiny_mlp(w2_zero=True)
    out = mlp_adapter(np.array([3.0, -1.0]), np.zeros((4, 2)), t)
    assert np.allclose(out.data, 0.5)


def test_mlp_adapter_identical_rows():
    t = _tiny_mlp()
    S = np.tile(np.array([0.3, -0.7]), (5, 1))
    out = mlp_adapter(np.array([1.0, 2.0]), S, t).data
    assert np.allclose(out, out[0])


# --- forward pass -----------------------------------------------------------------


def test_logits_shape():
    params = init_model(toy_config())
    logits = forward_logits(params, [1, 4, 5, 2], [1, 6, 7, 8, 9])
    assert logits.shape == (5, 32)


def test_causality_in_mol_positions():
    params = init_model(toy_config())
    text = [1, 4, 5, 2]
    mol = [1, 6, 7, 8, 9, 10]
    base = forward_logits(params, text, mol).data
    for k in range(1, len(mol)):
        perturbed = list(mol)
        perturbed[k] = (perturbed[k] + 1) % 32 or 3
        got = forward_logits(params, text, perturbed).data
        assert np.allclose(got[:k], base[:k], atol=1e-6), k
        assert not np.allclose(got[k:], base[k:]), k


def test_text_tokens_reach_all_positions():
    params = init_model(toy_config())
    # Make the adapter value path active first.
    rng = np.random.default_rng(2)
    params.tensors["adapter.attn.wo"] = rng.normal(
        size=(64, 64)).astype(np.float32) * 0.1
    base = forward_logits(params, [1, 4, 5, 2], [1, 6, 7]).data
    got = forward_logits(params, [1, 7, 5, 2], [1, 6, 7]).data
    assert not np.allclose(got, base)


def test_vocab_errors():
    params = init_model(toy_config())
    with pytest.raises(VocabError):
        forward_logits(params, [1, 99], [1, 6])
    with pytest.raises(VocabError):
        forward_logits(params, [1, 4], [1, 60])


# --- losses ----------------------------------------------------------------------


def test_uniform_logits_loss():
    loss = teacher_forced_loss(np.zeros((4, 32)), [5, 6, 7, 8])
    assert loss == pytest.approx(math.log(32), abs=1e-9)


def test_saturated_logits_loss_near_zero():
    targets = [3, 1, 4]
    logits = np.zeros((3, 32))
    for row, tgt in enumerate(targets):
        logits[row, tgt] = 100.0
    assert teacher_forced_loss(logits, targets) < 1e-6


def test_two_token_hand_example():
    logits = np.array([[1.0, 2.0], [0.5, -0.5]])
    targets = [0, 1]
    expected = -(np.log(np.exp(1) / (np.exp(1) + np.exp(2)))
                 + np.log(np.exp(-0.5) / (np.exp(0.5) + np.exp(-0.5)))) / 2
    assert teacher_forced_loss(logits, targets) == pytest.approx(expected)


def test_pad_positions_excluded():
    logits = np.zeros((3, 8))
    logits[0, 1] = 50.0
    # Positions 1..2 are padding: only position 0 counts.
    assert teacher_forced_loss(logits, [1, 0, 0], pad_id=0) < 1e-6


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        teacher_forced_loss(np.zeros((3, 8)), [1, 2])


# --- schedule and optimization ------------------------------------------------------


def test_noam_reference_values():
    assert noam_lr(4000, 4000, 256) == pytest.approx(9.882117688026186e-4)
    assert noam_lr(1, 4000, 256) == pytest.approx(2.4705294220065464e-7)


def test_noam_rises_then_falls():
    values = [noam_lr(s, 100, 64) for s in range(1, 301)]
    peak = values.index(max(values))
    assert 98 <= peak <= 100
    assert all(values[i] < values[i + 1] for i in range(peak - 1))
    assert all(values[i] > values[i + 1] for i in range(peak + 1, 299))


def test_grad_check_small():
    params = init_model(toy_config())
    assert grad_check(params, toy_batch(), n_coords=40) < 1e-4


def test_grad_check_eps_robust():
    params = init_model(toy_config())
    a = grad_check(params, toy_batch(), eps=1e-5, n_coords=10)
    b = grad_check(params, toy_batch(), eps=2e-5, n_coords=10)
    assert math.isfinite(a) and math.isfinite(b)


def test_frozen_tensors_receive_no_gradient():
    params = init_model(toy_config())
    tensors = {n: Tensor(v, requires_grad=n not in params.frozen)
               for n, v in params.tensors.items()}
    loss = batch_loss(params, toy_batch(), tensors=tensors)
    loss.backward()
    for name in params.frozen:
        assert tensors[name].grad is None, name
    assert tensors["proj.w_t"].grad is not None


# --- training ---------------------------------------------------------------------


def _training_setup(n_pairs=40, max_steps=80):
    mv = smiles_char_vocab()
    smiles = ["CCO", "CCN", "CCC", "c1ccccc1", "CC(C)O", "CCCl", "C=O",
              "CC(N)C", "COC", "CS"] * 4
    texts = ["molecule written as " + " ".join(s) for s in smiles]
    tv = word_vocab(texts)
    cfg = toy_config(text_vocab=len(tv), mol_vocab=len(mv),
                     max_steps=max_steps, batch_size=8)
    pairs = [([tv.bos] + tv.encode(t.split()) + [tv.eos],
              [mv.bos] + mv.encode(list(s)) + [mv.eos])
             for t, s in zip(texts[:n_pairs], smiles[:n_pairs])]
    return cfg, pairs


def test_training_reduces_loss():
    cfg, pairs = _training_setup()
    params = init_model(cfg)
    params, history = train_adapter(params, pairs)
    assert history[-1] < history[0]


def test_training_is_deterministic():
    cfg, pairs = _training_setup(max_steps=20)
    a, hist_a = train_adapter(init_model(cfg), pairs)
    b, hist_b = train_adapter(init_model(cfg), pairs)
    assert hist_a == hist_b
    for name in a.tensors:
        assert np.array_equal(a.tensors[name], b.tensors[name])


def test_frozen_tensors_unchanged_by_training():
    cfg, pairs = _training_setup(max_steps=30)
    params = init_model(cfg)
    before = {n: params.tensors[n].copy() for n in params.frozen}
    params, _ = train_adapter(params, pairs)
    for name, value in before.items():
        assert np.array_equal(params.tensors[name], value), name


def test_empty_dataset_rejected():
    params = init_model(toy_config())
    with pytest.raises(EmptyDataset):
        train_adapter(params, [])


# --- checkpoint --------------------------------------------------------------------


def test_checkpoint_round_trip(tmp_path):
    params = init_model(toy_config())
    path = tmp_path / "model.clmk"
    save_checkpoint(params, path)
    assert path.read_bytes()[:5] == b"CLMK1"
    loaded = load_checkpoint(path)
    assert loaded.frozen == params.frozen
    assert loaded.config == params.config
    for name in params.tensors:
        assert np.array_equal(loaded.tensors[name], params.tensors[name])


def test_checkpoint_rejects_other_files(tmp_path):
    path = tmp_path / "bogus.clmk"
    path.write_bytes(b"NOTME" + b"\0" * 16)
    with pytest.raises(ValueError):
        load_checkpoint(path)


# --- vocab -------------------------------------------------------------------------


def test_vocab_round_trip():
    v = Vocab(["x", "y"])
    assert v.decode(v.encode(["x", "y", "x"])) == ["x", "y", "x"]
    with pytest.raises(VocabError):
        v.encode(["z"])
    with pytest.raises(VocabError):
        v.decode([99])


def test_smiles_vocab_covers_corpus_characters():
    v = smiles_char_vocab()
    for s in ["CC(=O)Oc1ccccc1C(=O)O", "C[C@H](N)C(=O)O", "C/C=C\\C",
              "[NH4+]", "c1cc2ccccc2cc1"]:
        v.encode(list(s))
