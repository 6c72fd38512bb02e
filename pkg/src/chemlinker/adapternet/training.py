"""Teacher-forced training of the adapter, Noam schedule, Adam moments, and
finite-difference gradient verification."""

from __future__ import annotations


import numpy as np

from chemlinker.errors import EmptyDataset, LengthMismatch
from chemlinker.adapternet.autograd import Tensor
from chemlinker.adapternet.model import (
    ModelParams,
    decoder_only_logits,
    forward_logits,
)
from chemlinker.rng import SplitMix64

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.98
ADAM_EPS = 1e-9


def noam_lr(step: int, warmup: int, d_model: int) -> float:
    """d_model^-0.5 * min(step^-0.5, step * warmup^-1.5)."""
    if step < 1:
        raise ValueError("step starts at 1")
    return d_model ** -0.5 * min(step ** -0.5, step * warmup ** -1.5)


def teacher_forced_loss(logits, targets, pad_id: int | None = None):
    """Mean token-level cross-entropy; pad-target positions are excluded.

    Returns a scalar Tensor when given a Tensor, else a float.
    """
    as_tensor = isinstance(logits, Tensor)
    logit_t = logits if as_tensor else Tensor(np.asarray(logits))
    targets = np.asarray(list(targets), dtype=np.int64)
    n, vocab = logit_t.shape
    if len(targets) != n:
        raise LengthMismatch(
            f"{len(targets)} targets for {n} logit rows")
    keep = np.ones(n, dtype=bool) if pad_id is None else targets != pad_id
    if not keep.any():
        raise LengthMismatch("all target positions are padding")
    onehot = np.zeros((n, vocab))
    onehot[np.arange(n)[keep], targets[keep]] = 1.0 / keep.sum()
    loss = (logit_t.log_softmax(axis=-1) * Tensor(onehot)).sum() * -1.0
    return loss if as_tensor else float(loss.data)


def _trainable_tensors(params: ModelParams) -> dict:
    return {n: Tensor(v, requires_grad=n not in params.frozen)
            for n, v in params.tensors.items()}


def batch_loss(params: ModelParams, batch, tensors=None,
               conditional: bool = True) -> Tensor:
    """Mean per-pair teacher-forced loss over (text_ids, mol_ids) pairs.

    mol_ids must include BOS...EOS; inputs are mol_ids[:-1], targets
    mol_ids[1:].
    """
    t = tensors if tensors is not None else _trainable_tensors(params)
    total = None
    for text_ids, mol_ids in batch:
        if conditional:
            logits = forward_logits(params, text_ids, mol_ids[:-1], tensors=t)
        else:
            logits = decoder_only_logits(params, mol_ids[:-1], tensors=t)
        loss = teacher_forced_loss(logits, mol_ids[1:], pad_id=0)
        total = loss if total is None else total + loss
    return total * (1.0 / len(batch))


def train_adapter(params: ModelParams, dataset, cfg=None,
                  log_every: int = 0):
    """Adam under the Noam schedule; only non-frozen tensors are updated.

    Returns (params, loss_history). Deterministic given cfg.seed.
    """
    cfg = cfg or params.config
    dataset = list(dataset)
    if not dataset:
        raise EmptyDataset("training set is empty")
    rng = SplitMix64(cfg.seed)
    moments = {n: (np.zeros_like(params.tensors[n]),
                   np.zeros_like(params.tensors[n]))
               for n in params.trainable_names()}
    history = []
    order: list[int] = []
    for step in range(1, cfg.max_steps + 1):
        if len(order) < cfg.batch_size:
            order += rng.sample_indices(len(dataset), len(dataset))
        batch = [dataset[i] for i in order[:cfg.batch_size]]
        order = order[cfg.batch_size:]
        tensors = _trainable_tensors(params)
        loss = batch_loss(params, batch, tensors=tensors)
        loss.backward()
        lr = noam_lr(step, cfg.warmup_steps, cfg.d_mol)
        for name in moments:
            grad = tensors[name].grad
            if grad is None:
                continue
            m, v = moments[name]
            m[...] = ADAM_BETA1 * m + (1 - ADAM_BETA1) * grad
            v[...] = ADAM_BETA2 * v + (1 - ADAM_BETA2) * grad * grad
            m_hat = m / (1 - ADAM_BETA1 ** step)
            v_hat = v / (1 - ADAM_BETA2 ** step)
            params.tensors[name] -= (
                lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)).astype(np.float32)
        history.append(float(loss.data))
        if log_every and step % log_every == 0:
            print(f"step {step}: loss {history[-1]:.4f}")
    return params, history


def pretrain_decoder(params: ModelParams, mol_sequences, steps: int,
                     seed: int = 0) -> list:
    """Unconditional next-token pretraining of the decoder + head.

    Temporarily unfreezes mol.* and head.* tensors; they are re-frozen on
    return, which is the regime the adapter is then trained in.
    """
    cfg = params.config
    dataset = [(None, seq) for seq in mol_sequences]
    if not dataset:
        raise EmptyDataset("pretraining set is empty")
    to_unfreeze = {n for n in params.frozen
                   if n.startswith(("mol.", "head."))}
    params.frozen -= to_unfreeze
    rng = SplitMix64(seed)
    moments = {n: (np.zeros_like(params.tensors[n]),
                   np.zeros_like(params.tensors[n]))
               for n in to_unfreeze}
    history = []
    for step in range(1, steps + 1):
        picks = rng.sample_indices(len(dataset),
                                   min(cfg.batch_size, len(dataset)))
        batch = [dataset[i] for i in picks]
        tensors = _trainable_tensors(params)
        loss = batch_loss(params, batch, tensors=tensors, conditional=False)
        loss.backward()
        lr = noam_lr(step, cfg.warmup_steps, cfg.d_mol)
        for name in moments:
            grad = tensors[name].grad
            if grad is None:
                continue
            m, v = moments[name]
            m[...] = ADAM_BETA1 * m + (1 - ADAM_BETA1) * grad
            v[...] = ADAM_BETA2 * v + (1 - ADAM_BETA2) * grad * grad
            m_hat = m / (1 - ADAM_BETA1 ** step)
            v_hat = v / (1 - ADAM_BETA2 ** step)
            params.tensors[name] -= (
                lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)).astype(np.float32)
        history.append(float(loss.data))
    params.frozen |= to_unfreeze
    return history


def grad_check(params: ModelParams, batch, eps: float = 1e-5,
               n_coords: int = 60, seed: int = 1) -> float:
    """Max relative error between analytic and central-difference gradients.

    Runs in float64. Coordinates are sampled across all trainable tensors.
    """
    if not 1e-6 <= eps <= 1e-3:
        raise ValueError("eps must be in [1e-6, 1e-3]")
    work = params.clone()
    for name in work.tensors:
        work.tensors[name] = work.tensors[name].astype(np.float64)

    tensors = {n: Tensor(v, requires_grad=n not in work.frozen)
               for n, v in work.tensors.items()}
    loss = batch_loss(work, batch, tensors=tensors)
    loss.backward()

    trainable = work.trainable_names()
    sizes = [work.tensors[n].size for n in trainable]
    total = sum(sizes)
    rng = SplitMix64(seed)
    worst = 0.0
    for _ in range(n_coords):
        flat = int(rng.uniform() * total)
        name = None
        for n, size in zip(trainable, sizes):
            if flat < size:
                name = n
                break
            flat -= size
        array = work.tensors[name]
        idx = np.unravel_index(flat, array.shape)
        analytic = float(tensors[name].grad[idx]) \
            if tensors[name].grad is not None else 0.0
        original = array[idx]
        array[idx] = original + eps
        up = float(batch_loss(work, batch).data)
        array[idx] = original - eps
        down = float(batch_loss(work, batch).data)
        array[idx] = original
        numeric = (up - down) / (2 * eps)
        denom = max(1e-8, abs(analytic) + abs(numeric))
        worst = max(worst, abs(analytic - numeric) / denom)
    return worst
