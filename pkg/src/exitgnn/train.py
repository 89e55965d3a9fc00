"""Training paradigms for the multi-exit stack.

Two regimes:

* joint training on the sum of every exit's cross-entropy (``train_alm``),
* stage-wise training where stage t fits only the parameters that first
  appear in exit t, then freezes them byte-for-byte (``train_st``).

Stage-wise training caches the frozen prefix of the network once per stage in
eval mode; each epoch then only recomputes the two layers the stage can
actually influence. Dropout therefore regularizes the trained layers' inputs
while the frozen representations stay fixed, and backward never touches a
frozen tensor.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tape, Tensor
from .graph import Graph, NormAdjacency, spmm
from .model import (
    Flavor,
    ModelParams,
    StandardGnn,
    _aggregate,
    _finite_or_raise,
    forward,
    standard_forward,
)


class DivergenceError(RuntimeError):
    def __init__(self, stage: int, epoch: int):
        super().__init__(f"loss went NaN at stage {stage}, epoch {epoch}")
        self.stage = stage
        self.epoch = epoch


@dataclass
class TrainConfig:
    paradigm: str = "st"          # "alm" or "st"
    epochs: int = 200             # per stage for st, total for alm
    lr: float = 0.01
    dropout: float = 0.5
    hidden: int = 64
    weight_decay: float = 0.0
    seed: int = 0
    patience: int = 50

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 1:
            raise ValueError("need at least one epoch")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout probability must be in [0, 1)")
        if self.paradigm not in ("alm", "st"):
            raise ValueError(f"unknown paradigm {self.paradigm!r}")


@dataclass
class StageRecord:
    stage: int
    epochs_run: int
    best_epoch: int
    final_train_loss: float
    best_val_accuracy: dict[int, float]   # layer -> accuracy at the best epoch
    frozen_before: dict[int, str]         # stage id -> group checksum
    frozen_after: dict[int, str]


@dataclass
class StageLedger:
    paradigm: str
    records: list[StageRecord] = field(default_factory=list)
    rows: list[tuple] = field(default_factory=list)  # (stage, epoch, layer, split, acc, loss)
    group_checksum_at_freeze: dict[int, str] = field(default_factory=dict)
    final_val_accuracy: list[float] = field(default_factory=list)
    final_test_accuracy: list[float] = field(default_factory=list)


class Adam:
    """Adam with bias correction. Frozen tensors are skipped entirely."""

    def __init__(self, tensors, lr, betas=(0.9, 0.999), eps=1e-8,
                 weight_decay=0.0):
        self.tensors = list(tensors)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self._state = {
            id(t): [0, np.zeros_like(t.data), np.zeros_like(t.data)]
            for t in self.tensors
        }

    def step(self):
        for t in self.tensors:
            if not t.requires_grad or t.grad is None:
                continue
            g = t.grad
            if self.weight_decay:
                g = g + self.weight_decay * t.data
            state = self._state[id(t)]
            state[0] += 1
            step = state[0]
            state[1] = self.beta1 * state[1] + (1.0 - self.beta1) * g
            state[2] = self.beta2 * state[2] + (1.0 - self.beta2) * g * g
            m_hat = state[1] / (1.0 - self.beta1 ** step)
            v_hat = state[2] / (1.0 - self.beta2 ** step)
            t.data = t.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def zero_grad(self):
        for t in self.tensors:
            t.zero_grad()


class EarlyStopper:
    """Stop after ``patience`` epochs without strict improvement."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = -np.inf
        self.best_epoch = 0
        self._bad = 0

    def update(self, metric: float, epoch: int) -> tuple[bool, bool]:
        """Returns (improved, stop_now)."""
        if metric > self.best:
            self.best = metric
            self.best_epoch = epoch
            self._bad = 0
            return True, False
        self._bad += 1
        return False, self._bad >= self.patience


def group_checksum(tensors) -> str:
    h = hashlib.sha256()
    for t in tensors:
        h.update(np.ascontiguousarray(t.data, dtype="<f8").tobytes())
    return h.hexdigest()


def accuracy(logprob_rows: np.ndarray, labels: np.ndarray,
             mask: np.ndarray) -> float:
    idx = np.flatnonzero(mask)
    pred = logprob_rows[idx].argmax(axis=1)
    return float((pred == labels[idx]).mean())


def _masked_ce(logprob_rows: np.ndarray, labels: np.ndarray,
               mask: np.ndarray) -> float:
    idx = np.flatnonzero(mask)
    return float(-logprob_rows[idx, labels[idx]].mean())


def _snapshot(tensors):
    return [t.data.copy() for t in tensors]


def _restore(tensors, snap):
    for t, d in zip(tensors, snap):
        t.data = d.copy()


# -- joint training ----------------------------------------------------------


def train_alm(params: ModelParams, g: Graph, adj: NormAdjacency,
              cfg: TrainConfig) -> tuple[ModelParams, StageLedger]:
    """Minimize the summed cross-entropy of every exit in one run."""
    params.unfreeze_all()
    tensors = params.all_tensors()
    adam = Adam(tensors, cfg.lr, weight_decay=cfg.weight_decay)
    stopper = EarlyStopper(cfg.patience)
    rng = np.random.default_rng(cfg.seed)
    ledger = StageLedger(paradigm="alm")
    labels = g.labels

    best = _snapshot(tensors)
    best_val = {}
    final_loss = float("nan")
    epochs_run = 0
    for epoch in range(1, cfg.epochs + 1):
        out = forward(params, g, adj, "train", cfg.dropout, rng)
        tape = out.tape
        total = tape.masked_ce_mean(out.logprobs[0], labels, g.train_mask)
        for lp in out.logprobs[1:]:
            total = tape.add(total, tape.masked_ce_mean(lp, labels, g.train_mask))
        if np.isnan(total.data):
            raise DivergenceError(0, epoch)
        tape.backward(total)
        adam.step()
        adam.zero_grad()
        final_loss = float(total.data)

        out_eval = forward(params, g, adj, "eval")
        val_accs = {}
        for layer, (lp_t, lp_e) in enumerate(zip(out.logprobs, out_eval.logprobs)):
            v_acc = accuracy(lp_e.data, labels, g.val_mask)
            val_accs[layer] = v_acc
            ledger.rows.append((0, epoch, layer, "train",
                                accuracy(lp_t.data, labels, g.train_mask),
                                _masked_ce(lp_t.data, labels, g.train_mask)))
            ledger.rows.append((0, epoch, layer, "val", v_acc,
                                _masked_ce(lp_e.data, labels, g.val_mask)))
        monitored = float(np.mean(list(val_accs.values())))
        improved, stop = stopper.update(monitored, epoch)
        if improved:
            best = _snapshot(tensors)
            best_val = val_accs
        epochs_run = epoch
        if stop:
            break

    _restore(tensors, best)
    ledger.records.append(StageRecord(
        stage=0, epochs_run=epochs_run, best_epoch=stopper.best_epoch,
        final_train_loss=final_loss, best_val_accuracy=best_val,
        frozen_before={}, frozen_after={},
    ))
    _finalize(ledger, params, g, adj)
    return params, ledger


# -- stage-wise training ------------------------------------------------------


def _stage_forward(params: ModelParams, g: Graph, adj: NormAdjacency,
                   stage: int, prefix: np.ndarray, mode: str, dropout_p: float,
                   rng) -> tuple[Tape, Tensor]:
    """Forward only the segment stage ``t`` can influence.

    ``prefix`` is the frozen eval-mode hidden state feeding the segment
    (features for stages 0 and 1, hidden state t-2 for later stages).
    """
    tape = Tape()
    training = mode == "train"
    if stage == 0:
        x = Tensor(g.features)
        return tape, tape.log_softmax(tape.matmul(x, params.exit_w[0]))
    h = Tensor(prefix)
    if stage >= 2:
        h_in = tape.dropout(h, dropout_p, rng, training)
        m_prev = _aggregate(tape, params.eps, params.flavor, adj, h_in, stage - 1)
        h = tape.relu(tape.add_bias(tape.matmul(m_prev, params.cont_w[stage - 1]),
                                    params.cont_b[stage - 1]))
        _finite_or_raise(h, stage - 1, "hidden state")
    h_in = tape.dropout(h, dropout_p, rng, training)
    m = _aggregate(tape, params.eps, params.flavor, adj, h_in, stage)
    _finite_or_raise(m, stage, "message")
    return tape, tape.log_softmax(tape.matmul(m, params.exit_w[stage]))


def _eval_aggregate(params: ModelParams, adj: NormAdjacency, h: np.ndarray,
                    layer: int) -> np.ndarray:
    if params.flavor is Flavor.GCN:
        return spmm(adj, h)
    return (1.0 + float(params.eps[layer].data)) * h + spmm(adj, h)


def train_st(params: ModelParams, g: Graph, adj: NormAdjacency,
             cfg: TrainConfig) -> tuple[ModelParams, StageLedger]:
    """Train one stage at a time, freezing each stage's group afterwards."""
    params.freeze_all()
    rng = np.random.default_rng(cfg.seed)
    ledger = StageLedger(paradigm="st")
    labels = g.labels
    groups = {t: params.stage_group(t) for t in range(params.depth + 1)}

    prefix = g.features  # frozen eval-mode hidden state t-2 (features early on)
    for stage in range(params.depth + 1):
        group = groups[stage]
        params.set_frozen(group, False)
        frozen_before = {
            s: group_checksum(groups[s]) for s in groups if s != stage
        }
        adam = Adam(group, cfg.lr, weight_decay=cfg.weight_decay)
        stopper = EarlyStopper(cfg.patience)
        best = _snapshot(group)
        best_val = {}
        final_loss = float("nan")
        epochs_run = 0
        for epoch in range(1, cfg.epochs + 1):
            tape, lp = _stage_forward(params, g, adj, stage, prefix, "train",
                                      cfg.dropout, rng)
            loss = tape.masked_ce_mean(lp, labels, g.train_mask)
            if np.isnan(loss.data):
                raise DivergenceError(stage, epoch)
            tape.backward(loss)
            adam.step()
            adam.zero_grad()
            final_loss = float(loss.data)

            _, lp_eval = _stage_forward(params, g, adj, stage, prefix, "eval",
                                        0.0, rng)
            val_acc = accuracy(lp_eval.data, labels, g.val_mask)
            ledger.rows.append((stage, epoch, stage, "train",
                                accuracy(lp.data, labels, g.train_mask),
                                final_loss))
            ledger.rows.append((stage, epoch, stage, "val", val_acc,
                                _masked_ce(lp_eval.data, labels, g.val_mask)))
            improved, stop = stopper.update(val_acc, epoch)
            if improved:
                best = _snapshot(group)
                best_val = {stage: val_acc}
            epochs_run = epoch
            if stop:
                break

        _restore(group, best)
        params.set_frozen(group, True)
        ledger.group_checksum_at_freeze[stage] = group_checksum(group)
        frozen_after = {
            s: group_checksum(groups[s]) for s in groups if s != stage
        }
        if frozen_before != frozen_after:
            raise AssertionError(f"frozen parameters moved during stage {stage}")
        ledger.records.append(StageRecord(
            stage=stage, epochs_run=epochs_run, best_epoch=stopper.best_epoch,
            final_train_loss=final_loss, best_val_accuracy=best_val,
            frozen_before=frozen_before, frozen_after=frozen_after,
        ))

        # Advance the cached frozen prefix: once stage t >= 2 has fixed the
        # continuation producing hidden state t-1, that state becomes the
        # prefix for stage t+1.
        if stage >= 2:
            m_prev = _eval_aggregate(params, adj, prefix, stage - 1)
            prefix = np.maximum(
                m_prev @ params.cont_w[stage - 1].data
                + params.cont_b[stage - 1].data,
                0.0,
            )
    _finalize(ledger, params, g, adj)
    return params, ledger


def _finalize(ledger: StageLedger, params: ModelParams, g: Graph,
              adj: NormAdjacency):
    out = forward(params, g, adj, "eval")
    ledger.final_val_accuracy = [
        accuracy(lp.data, g.labels, g.val_mask) for lp in out.logprobs
    ]
    ledger.final_test_accuracy = [
        accuracy(lp.data, g.labels, g.test_mask) for lp in out.logprobs
    ]


def train(params: ModelParams, g: Graph, adj: NormAdjacency,
          cfg: TrainConfig) -> tuple[ModelParams, StageLedger]:
    if cfg.paradigm == "alm":
        return train_alm(params, g, adj, cfg)
    return train_st(params, g, adj, cfg)


# -- conventional fixed-depth training (depth sweep) -------------------------


def train_standard(net: StandardGnn, g: Graph, adj: NormAdjacency,
                   cfg: TrainConfig) -> tuple[StandardGnn, float]:
    """Train a single-exit network on its final cross-entropy.

    Returns the network with best-validation weights restored and the best
    validation accuracy reached.
    """
    tensors = net.all_tensors()
    adam = Adam(tensors, cfg.lr, weight_decay=cfg.weight_decay)
    stopper = EarlyStopper(cfg.patience)
    rng = np.random.default_rng(cfg.seed)
    labels = g.labels
    best = _snapshot(tensors)
    for epoch in range(1, cfg.epochs + 1):
        tape, lp = standard_forward(net, g, adj, "train", cfg.dropout, rng)
        loss = tape.masked_ce_mean(lp, labels, g.train_mask)
        if np.isnan(loss.data):
            raise DivergenceError(0, epoch)
        tape.backward(loss)
        adam.step()
        adam.zero_grad()
        _, lp_eval = standard_forward(net, g, adj, "eval")
        improved, stop = stopper.update(
            accuracy(lp_eval.data, labels, g.val_mask), epoch
        )
        if improved:
            best = _snapshot(tensors)
        if stop:
            break
    _restore(tensors, best)
    return net, stopper.best
