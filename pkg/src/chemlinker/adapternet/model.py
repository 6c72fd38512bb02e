"""Toy text encoder, frozen causal molecule decoder, and the cross-attention
adapter that conditions the decoder on text.

Architecture: pre-layer-norm transformer blocks on both sides. The adapter
sits after the last decoder layer only: text states are projected into the
molecule width by W_T, molecule states act as attention queries, projected
text states are both keys and values, and the result is added residually to
the molecule states (W_O starts at zero so an untrained adapter is a no-op).
A small feed-forward block (second layer also zero-initialized) follows, then
the language-model head. `unscaled_attention` drops the 1/sqrt(d_head)
factor in the adapter to reproduce the plain dot-product formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from chemlinker.errors import DimensionMismatch, ShapeError, VocabError
from chemlinker.adapternet.autograd import Tensor, layer_norm


@dataclass
class TrainConfig:
    text_vocab: int
    mol_vocab: int
    d_text: int = 64
    d_mol: int = 64
    layers: int = 2           # transformer blocks per side
    heads: int = 4
    ffn_mult: int = 2
    max_text_len: int = 64
    max_mol_len: int = 80
    warmup_steps: int = 400   # desk-scale default; 4000 at reference scale
    seed: int = 42
    batch_size: int = 16
    max_steps: int = 500
    finetune_text: bool = False
    train_head: bool = False
    unscaled_attention: bool = False


class ModelParams:
    """Named float32 tensors with per-tensor frozen flags."""

    def __init__(self, tensors: dict, frozen: set, config: TrainConfig):
        self.tensors = tensors
        self.frozen = frozen
        self.config = config

    def trainable_names(self) -> list:
        return [n for n in self.tensors if n not in self.frozen]

    def count(self, names=None) -> int:
        names = self.tensors.keys() if names is None else names
        return sum(self.tensors[n].size for n in names)

    def clone(self) -> "ModelParams":
        return ModelParams({n: t.copy() for n, t in self.tensors.items()},
                           set(self.frozen), replace(self.config))


def init_model(cfg: TrainConfig, seed: int | None = None) -> ModelParams:
    """Deterministic scaled-uniform initialization; adapter output paths
    (W_O and the adapter FFN's second layer) start at zero."""
    if cfg.d_mol % cfg.heads or cfg.d_text % cfg.heads:
        raise ShapeError("heads must divide d_text and d_mol")
    if cfg.warmup_steps < 1:
        raise ShapeError("warmup_steps must be >= 1")
    if cfg.layers < 1 or cfg.text_vocab < 4 or cfg.mol_vocab < 4:
        raise ShapeError("need >= 1 layer and vocabularies incl. specials")
    rng = np.random.default_rng(cfg.seed if seed is None else seed)

    def uniform(*shape):
        bound = 1.0 / math.sqrt(shape[0])
        return rng.uniform(-bound, bound, size=shape).astype(np.float32)

    def zeros(*shape):
        return np.zeros(shape, dtype=np.float32)

    def ones(*shape):
        return np.ones(shape, dtype=np.float32)

    t: dict[str, np.ndarray] = {}

    def block(prefix: str, d: int):
        f = d * cfg.ffn_mult
        for w in ("wq", "wk", "wv", "wo"):
            t[f"{prefix}.attn.{w}"] = uniform(d, d)
        t[f"{prefix}.ln1.g"] = ones(d)
        t[f"{prefix}.ln1.b"] = zeros(d)
        t[f"{prefix}.ffn.w1"] = uniform(d, f)
        t[f"{prefix}.ffn.b1"] = zeros(f)
        t[f"{prefix}.ffn.w2"] = uniform(f, d)
        t[f"{prefix}.ffn.b2"] = zeros(d)
        t[f"{prefix}.ln2.g"] = ones(d)
        t[f"{prefix}.ln2.b"] = zeros(d)

    t["text.embed"] = uniform(cfg.text_vocab, cfg.d_text)
    t["text.pos"] = uniform(cfg.max_text_len, cfg.d_text)
    for i in range(cfg.layers):
        block(f"text.{i}", cfg.d_text)
    t["mol.embed"] = uniform(cfg.mol_vocab, cfg.d_mol)
    t["mol.pos"] = uniform(cfg.max_mol_len, cfg.d_mol)
    for i in range(cfg.layers):
        block(f"mol.{i}", cfg.d_mol)

    t["proj.w_t"] = uniform(cfg.d_text, cfg.d_mol)
    for w in ("wq", "wk", "wv"):
        t[f"adapter.attn.{w}"] = uniform(cfg.d_mol, cfg.d_mol)
    t["adapter.attn.wo"] = zeros(cfg.d_mol, cfg.d_mol)
    f = cfg.d_mol * cfg.ffn_mult
    t["adapter.ffn.w1"] = uniform(cfg.d_mol, f)
    t["adapter.ffn.b1"] = zeros(f)
    t["adapter.ffn.w2"] = zeros(f, cfg.d_mol)
    t["adapter.ffn.b2"] = zeros(cfg.d_mol)

    t["head.w"] = uniform(cfg.d_mol, cfg.mol_vocab)
    t["head.b"] = zeros(cfg.mol_vocab)

    frozen = {n for n in t if n.startswith("mol.")}
    if not cfg.train_head:
        frozen |= {n for n in t if n.startswith("head.")}
    if not cfg.finetune_text:
        frozen |= {n for n in t if n.startswith("text.")}
    return ModelParams(t, frozen, replace(cfg))


# --- forward pass ----------------------------------------------------------------


def _as_tensors(params: ModelParams, trainable_grad: bool = False) -> dict:
    return {n: Tensor(v, requires_grad=trainable_grad
                      and n not in params.frozen)
            for n, v in params.tensors.items()}


def _heads_split(x: Tensor, heads: int) -> Tensor:
    n, d = x.shape
    return x.reshape(n, heads, d // heads).transpose(1, 0, 2)


def _heads_join(x: Tensor) -> Tensor:
    h, n, dh = x.shape
    return x.transpose(1, 0, 2).reshape(n, h * dh)


def _attention(q_in: Tensor, kv_in: Tensor, wq, wk, wv, wo,
               heads: int, mask=None, scaled: bool = True):
    """Multi-head attention; returns (output, attention weights (h,n,m))."""
    d_head = wq.shape[1] // heads
    q = _heads_split(q_in @ wq, heads)
    k = _heads_split(kv_in @ wk, heads)
    v = _heads_split(kv_in @ wv, heads)
    scores = q @ k.transpose(0, 2, 1)
    if scaled:
        scores = scores * (1.0 / math.sqrt(d_head))
    if mask is not None:
        scores = scores + mask
    weights = scores.softmax(axis=-1)
    return _heads_join(weights @ v) @ wo, weights


def _block(x: Tensor, t: dict, prefix: str, heads: int, mask=None) -> Tensor:
    h = layer_norm(x, t[f"{prefix}.ln1.g"], t[f"{prefix}.ln1.b"])
    attn_out, _ = _attention(
        h, h, t[f"{prefix}.attn.wq"], t[f"{prefix}.attn.wk"],
        t[f"{prefix}.attn.wv"], t[f"{prefix}.attn.wo"], heads, mask)
    x = x + attn_out
    h = layer_norm(x, t[f"{prefix}.ln2.g"], t[f"{prefix}.ln2.b"])
    ffn = (h @ t[f"{prefix}.ffn.w1"] + t[f"{prefix}.ffn.b1"]).tanh()
    return x + ffn @ t[f"{prefix}.ffn.w2"] + t[f"{prefix}.ffn.b2"]


def _causal_mask(n: int, dtype=np.float32):
    mask = np.triu(np.full((n, n), -1e30, dtype=dtype), k=1)
    return Tensor(mask)


def _check_ids(ids, vocab: int, limit: int, what: str) -> np.ndarray:
    ids = np.asarray(list(ids), dtype=np.int64)
    if ids.size == 0:
        raise VocabError(f"empty {what} sequence")
    if ids.min() < 0 or ids.max() >= vocab:
        raise VocabError(f"{what} token id outside vocabulary of {vocab}")
    if ids.size > limit:
        raise VocabError(f"{what} sequence longer than positional table")
    return ids


def encode_text(t: dict, cfg: TrainConfig, text_ids) -> Tensor:
    ids = _check_ids(text_ids, cfg.text_vocab, cfg.max_text_len, "text")
    x = t["text.embed"].take_rows(ids) + t["text.pos"].take_rows(
        np.arange(len(ids)))
    for i in range(cfg.layers):
        x = _block(x, t, f"text.{i}", cfg.heads)
    return x


def decode_mol_states(t: dict, cfg: TrainConfig, mol_ids) -> Tensor:
    ids = _check_ids(mol_ids, cfg.mol_vocab, cfg.max_mol_len, "molecule")
    x = t["mol.embed"].take_rows(ids) + t["mol.pos"].take_rows(
        np.arange(len(ids)))
    mask = _causal_mask(len(ids), x.data.dtype)
    for i in range(cfg.layers):
        x = _block(x, t, f"mol.{i}", cfg.heads, mask)
    return x


def adapter_attend(T_states, S_states, params, cfg: TrainConfig | None = None):
    """Cross-attention update: molecule states query projected text states.

    Accepts Tensors or plain arrays; returns (updated S, attention weights).
    Attention rows always sum to 1; with a single text state every weight
    is exactly 1 and the update is the value projection of that state.
    """
    t = params if isinstance(params, dict) else _as_tensors(params)
    cfg = cfg or (None if isinstance(params, dict) else params.config)
    T = T_states if isinstance(T_states, Tensor) else Tensor(np.asarray(T_states))
    S = S_states if isinstance(S_states, Tensor) else Tensor(np.asarray(S_states))
    if T.data.ndim != 2 or S.data.ndim != 2:
        raise DimensionMismatch("adapter expects 2-D state matrices")
    if T.shape[1] != t["proj.w_t"].shape[0]:
        raise DimensionMismatch(
            f"text width {T.shape[1]} != W_T rows {t['proj.w_t'].shape[0]}")
    if S.shape[1] != t["adapter.attn.wq"].shape[0]:
        raise DimensionMismatch(
            f"molecule width {S.shape[1]} != adapter width")
    projected = T @ t["proj.w_t"]
    out, weights = _attention(
        S, projected, t["adapter.attn.wq"], t["adapter.attn.wk"],
        t["adapter.attn.wv"], t["adapter.attn.wo"], cfg.heads,
        scaled=not cfg.unscaled_attention)
    return S + out, weights


def adapter_ffn(S: Tensor, t: dict) -> Tensor:
    h = (S @ t["adapter.ffn.w1"] + t["adapter.ffn.b1"]).tanh()
    return S + h @ t["adapter.ffn.w2"] + t["adapter.ffn.b2"]


def forward_logits(params: ModelParams, text_ids, mol_ids,
                   tensors: dict | None = None) -> Tensor:
    """Full conditional forward: returns (len(mol_ids), mol_vocab) logits."""
    cfg = params.config
    t = tensors if tensors is not None else _as_tensors(params)
    T = encode_text(t, cfg, text_ids)
    S = decode_mol_states(t, cfg, mol_ids)
    S, _ = adapter_attend(T, S, t, cfg)
    S = adapter_ffn(S, t)
    return S @ t["head.w"] + t["head.b"]


def decoder_only_logits(params: ModelParams, mol_ids,
                        tensors: dict | None = None) -> Tensor:
    """Unconditional decoder + head, used for decoder pretraining."""
    cfg = params.config
    t = tensors if tensors is not None else _as_tensors(params)
    S = decode_mol_states(t, cfg, mol_ids)
    return S @ t["head.w"] + t["head.b"]


def mlp_adapter(T_pooled, S_states, params, cfg: TrainConfig | None = None):
    """Ablation: concatenate mean-pooled text with each molecule state and
    apply a two-layer MLP. The concatenation is computed as the equivalent
    split matmul S @ W1_mol + pooled @ W1_text."""
    t = params if isinstance(params, dict) else _as_tensors(params)
    T = T_pooled if isinstance(T_pooled, Tensor) else Tensor(np.asarray(T_pooled))
    S = S_states if isinstance(S_states, Tensor) else Tensor(np.asarray(S_states))
    if T.data.ndim != 1:
        raise DimensionMismatch("pooled text must be a vector")
    if "mlp.w1s" not in t:
        raise DimensionMismatch("model was built without the MLP ablation")
    if (S.shape[1] != t["mlp.w1s"].shape[0]
            or T.shape[0] != t["mlp.w1t"].shape[0]):
        raise DimensionMismatch("MLP adapter width mismatch")
    h = (S @ t["mlp.w1s"] + T.reshape(1, T.shape[0]) @ t["mlp.w1t"]
         + t["mlp.b1"]).tanh()
    return h @ t["mlp.w2"] + t["mlp.b2"]


def add_mlp_adapter(params: ModelParams, seed: int = 0) -> None:
    """Attach the MLP-ablation tensors (trainable) to an existing model."""
    cfg = params.config
    rng = np.random.default_rng(seed)
    f = cfg.ffn_mult * cfg.d_mol

    def uniform(*shape):
        bound = 1.0 / math.sqrt(shape[0])
        return rng.uniform(-bound, bound, size=shape).astype(np.float32)

    params.tensors["mlp.w1s"] = uniform(cfg.d_mol, f)
    params.tensors["mlp.w1t"] = uniform(cfg.d_text, f)
    params.tensors["mlp.b1"] = np.zeros(f, dtype=np.float32)
    params.tensors["mlp.w2"] = uniform(f, cfg.d_mol)
    params.tensors["mlp.b2"] = np.zeros(cfg.d_mol, dtype=np.float32)
