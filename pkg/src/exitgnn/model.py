"""Multi-exit message passing stack.

Each layer aggregates the previous hidden state over the graph, reads a class
distribution off the aggregated message through a linear exit head, and (when
another layer follows) applies a nonlinear continuation to produce the next
hidden state. Layer 0 classifies the raw features directly. The prediction at
exit ``l`` therefore shares its computational graph with a conventional
``l``-layer network whose final classification layer is that exit head, and
``extract_standard_gnn`` materializes exactly that network.

Two aggregation flavors: degree-normalized weighted sum with implicit
self-loops (gcn) and plain neighbor sum with a learnable self-weight (gin).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .autodiff import Tape, Tensor
from .graph import AdjacencyKind, Graph, NormAdjacency


class NonFiniteError(RuntimeError):
    """An activation went NaN/Inf; carries the layer where it happened."""

    def __init__(self, layer: int, what: str):
        super().__init__(f"non-finite {what} at layer {layer}")
        self.layer = layer


class Flavor(Enum):
    GCN = "gcn"
    GIN = "gin"


ADJ_FOR_FLAVOR = {
    Flavor.GCN: AdjacencyKind.GCN_SYMMETRIC,
    Flavor.GIN: AdjacencyKind.RAW_SUM,
}


def glorot(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    bound = np.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-bound, bound, size=shape)


class ModelParams:
    """Per-layer parameter bundle for the multi-exit stack.

    For depth L the stack holds exit heads for layers 0..L, continuation
    weights+biases for layers 1..L-1 (the top layer's continuation would feed
    nothing and is not allocated), and for the gin flavor one self-weight
    scalar per layer 1..L. Initialization draws in stage order (exit 0, then
    per layer: continuation of the previous layer, self-weight, exit head), so
    a shallower stack built from the same seed is a bit-exact prefix of a
    deeper one.
    """

    def __init__(self, flavor: Flavor, depth: int, n_features: int,
                 hidden: int, n_classes: int, seed: int):
        if depth < 0:
            raise ValueError("depth must be >= 0")
        self.flavor = flavor
        self.depth = depth
        self.n_features = n_features
        self.hidden = hidden
        self.n_classes = n_classes
        self.seed = seed

        rng = np.random.default_rng(seed)
        self.exit_w: list[Tensor] = [None] * (depth + 1)
        self.cont_w: dict[int, Tensor] = {}
        self.cont_b: dict[int, Tensor] = {}
        self.eps: dict[int, Tensor] = {}

        self.exit_w[0] = Tensor(glorot(rng, (n_features, n_classes)), True)
        for layer in range(1, depth + 1):
            if layer >= 2:
                w_in = self.message_width(layer - 1)
                self.cont_w[layer - 1] = Tensor(glorot(rng, (w_in, hidden)), True)
                self.cont_b[layer - 1] = Tensor(np.zeros(hidden), True)
            if flavor is Flavor.GIN:
                self.eps[layer] = Tensor(np.asarray(0.0), True)
            self.exit_w[layer] = Tensor(
                glorot(rng, (self.message_width(layer), n_classes)), True
            )

    def message_width(self, layer: int) -> int:
        """Width of the aggregated message entering exit head ``layer``."""
        return self.n_features if layer <= 1 else self.hidden

    def stage_group(self, stage: int) -> list[Tensor]:
        """Parameters that first appear in the exit at ``stage``.

        The groups over stages 0..depth partition all parameters: stage 0 is
        the raw-feature exit head; stage t >= 1 adds the continuation that
        produces hidden state t-1 (absent for t == 1, where the aggregate acts
        on raw features), the self-weight for the gin aggregate, and exit head
        t.
        """
        if not 0 <= stage <= self.depth:
            raise ValueError(f"stage {stage} outside 0..{self.depth}")
        group = []
        if stage >= 2:
            group += [self.cont_w[stage - 1], self.cont_b[stage - 1]]
        if stage >= 1 and self.flavor is Flavor.GIN:
            group.append(self.eps[stage])
        group.append(self.exit_w[stage])
        return group

    def all_tensors(self) -> list[Tensor]:
        out = []
        for stage in range(self.depth + 1):
            out += self.stage_group(stage)
        return out

    def set_frozen(self, tensors, frozen: bool):
        for t in tensors:
            t.requires_grad = not frozen

    def freeze_all(self):
        self.set_frozen(self.all_tensors(), True)

    def unfreeze_all(self):
        self.set_frozen(self.all_tensors(), False)


@dataclass
class ForwardOutput:
    """Hidden states, aggregated messages, and per-exit log-probabilities."""

    tape: Tape
    hidden: list[Tensor]     # h_0 .. h_{depth-1} (h_0 is the feature matrix)
    messages: list[Tensor]   # m_1 .. m_depth
    logprobs: list[Tensor]   # one per exit, 0 .. depth

    @property
    def probs(self) -> np.ndarray:
        """(n_nodes, depth+1, n_classes) probability cube."""
        return np.stack([np.exp(lp.data) for lp in self.logprobs], axis=1)


def _as_rng(rng_or_seed) -> np.random.Generator:
    if isinstance(rng_or_seed, np.random.Generator):
        return rng_or_seed
    return np.random.default_rng(rng_or_seed)


def _check_adj(flavor: Flavor, adj: NormAdjacency):
    if adj.kind is not ADJ_FOR_FLAVOR[flavor]:
        raise ValueError(
            f"{flavor.value} flavor requires {ADJ_FOR_FLAVOR[flavor].value} "
            f"adjacency, got {adj.kind.value}"
        )


def _aggregate(tape: Tape, params_eps, flavor: Flavor, adj: NormAdjacency,
               h: Tensor, layer: int) -> Tensor:
    if flavor is Flavor.GCN:
        return tape.spmm(adj, h)
    return tape.add(tape.scale(h, params_eps[layer], offset=1.0),
                    tape.spmm(adj, h))


def _finite_or_raise(t: Tensor, layer: int, what: str):
    if not np.isfinite(t.data).all():
        raise NonFiniteError(layer, what)


def forward(params: ModelParams, g: Graph, adj: NormAdjacency, mode: str,
            dropout_p: float = 0.0, rng=0) -> ForwardOutput:
    """Run the full stack, producing one prediction per exit 0..depth.

    ``mode`` is "train" or "eval"; dropout applies to each layer's input in
    train mode only, drawing one mask per layer in ascending layer order from
    ``rng`` (a seed or a Generator). Aborts with NonFiniteError (and the layer
    index) if an activation leaves the finite range.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    _check_adj(params.flavor, adj)
    if g.n_features != params.n_features:
        raise ValueError(
            f"feature width {g.n_features} does not match params "
            f"({params.n_features})"
        )
    training = mode == "train"
    rng = _as_rng(rng)
    tape = Tape()

    x = Tensor(g.features)
    logprobs = [tape.log_softmax(tape.matmul(x, params.exit_w[0]))]
    hidden = [x]
    messages = []
    h = x
    for layer in range(1, params.depth + 1):
        h_in = tape.dropout(h, dropout_p, rng, training)
        m = _aggregate(tape, params.eps, params.flavor, adj, h_in, layer)
        _finite_or_raise(m, layer, "message")
        messages.append(m)
        lp = tape.log_softmax(tape.matmul(m, params.exit_w[layer]))
        _finite_or_raise(lp, layer, "exit log-probabilities")
        logprobs.append(lp)
        if layer < params.depth:
            h = tape.relu(tape.add_bias(tape.matmul(m, params.cont_w[layer]),
                                        params.cont_b[layer]))
            _finite_or_raise(h, layer, "hidden state")
            hidden.append(h)
    return ForwardOutput(tape=tape, hidden=hidden, messages=messages,
                         logprobs=logprobs)


class StandardGnn:
    """Conventional fixed-depth network with a single final classifier."""

    def __init__(self, flavor: Flavor, depth: int, cont_w, cont_b, eps,
                 final_w: Tensor):
        self.flavor = flavor
        self.depth = depth
        self.cont_w = cont_w      # dict layer -> Tensor, layers 1..depth-1
        self.cont_b = cont_b
        self.eps = eps            # dict layer -> Tensor, layers 1..depth (gin)
        self.final_w = final_w

    def all_tensors(self) -> list[Tensor]:
        out = []
        for layer in range(1, self.depth):
            out += [self.cont_w[layer], self.cont_b[layer]]
        if self.flavor is Flavor.GIN:
            out += [self.eps[layer] for layer in range(1, self.depth + 1)]
        out.append(self.final_w)
        return out


def extract_standard_gnn(params: ModelParams, layer: int) -> StandardGnn:
    """View the prediction path of exit ``layer`` as a standalone network.

    The result shares parameter tensors with ``params``; its forward pass
    executes the identical op sequence as the multi-exit stack's path to that
    exit, so outputs agree bit-exactly (in train mode too, given the same
    dropout seed, because masks are drawn one per layer in the same order).
    """
    if not 0 <= layer <= params.depth:
        raise ValueError(f"layer {layer} outside 0..{params.depth}")
    return StandardGnn(
        flavor=params.flavor,
        depth=layer,
        cont_w={k: params.cont_w[k] for k in range(1, layer)},
        cont_b={k: params.cont_b[k] for k in range(1, layer)},
        eps={k: params.eps[k] for k in range(1, layer + 1)}
        if params.flavor is Flavor.GIN else {},
        final_w=params.exit_w[layer],
    )


def standard_forward(net: StandardGnn, g: Graph, adj: NormAdjacency, mode: str,
                     dropout_p: float = 0.0, rng=0) -> tuple[Tape, Tensor]:
    """Forward pass of a StandardGnn; returns (tape, log-probabilities)."""
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    _check_adj(net.flavor, adj)
    training = mode == "train"
    rng = _as_rng(rng)
    tape = Tape()

    h = Tensor(g.features)
    if net.depth == 0:
        return tape, tape.log_softmax(tape.matmul(h, net.final_w))
    for layer in range(1, net.depth + 1):
        h_in = tape.dropout(h, dropout_p, rng, training)
        m = _aggregate(tape, net.eps, net.flavor, adj, h_in, layer)
        _finite_or_raise(m, layer, "message")
        if layer < net.depth:
            h = tape.relu(tape.add_bias(tape.matmul(m, net.cont_w[layer]),
                                        net.cont_b[layer]))
            _finite_or_raise(h, layer, "hidden state")
    return tape, tape.log_softmax(tape.matmul(m, net.final_w))


def init_standard_gnn(flavor: Flavor, depth: int, n_features: int, hidden: int,
                      n_classes: int, seed: int) -> StandardGnn:
    """Fresh conventional network (used by the depth sweep)."""
    rng = np.random.default_rng(seed)

    def width(layer):
        return n_features if layer <= 1 else hidden

    cont_w, cont_b, eps = {}, {}, {}
    for layer in range(1, depth):
        cont_w[layer] = Tensor(glorot(rng, (width(layer), hidden)), True)
        cont_b[layer] = Tensor(np.zeros(hidden), True)
    if flavor is Flavor.GIN:
        for layer in range(1, depth + 1):
            eps[layer] = Tensor(np.asarray(0.0), True)
    final_w = Tensor(glorot(rng, (width(depth), n_classes)), True)
    return StandardGnn(flavor, depth, cont_w, cont_b, eps, final_w)


# -- checkpoint I/O ---------------------------------------------------------

_CKPT_MAGIC = "exitgnn-checkpoint v1"


def save_checkpoint(params: ModelParams, path):
    """Write a checkpoint: text manifest, blank line, little-endian fp64 blobs.

    Blob order: continuation weight+bias for layers 1..depth-1, exit heads
    0..depth, then (gin only) the self-weight scalars for layers 1..depth.
    """
    lines = [
        _CKPT_MAGIC,
        f"flavor={params.flavor.value}",
        f"depth={params.depth}",
        f"n_features={params.n_features}",
        f"hidden={params.hidden}",
        f"n_classes={params.n_classes}",
        f"seed={params.seed}",
    ]
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n\n").encode("ascii"))
        for t in _blob_order(params):
            fh.write(np.ascontiguousarray(t.data, dtype="<f8").tobytes())


def _blob_order(params: ModelParams):
    for layer in range(1, params.depth):
        yield params.cont_w[layer]
        yield params.cont_b[layer]
    for layer in range(params.depth + 1):
        yield params.exit_w[layer]
    if params.flavor is Flavor.GIN:
        for layer in range(1, params.depth + 1):
            yield params.eps[layer]


def load_checkpoint(path) -> ModelParams:
    with open(path, "rb") as fh:
        blob = fh.read()
    head, _, rest = blob.partition(b"\n\n")
    lines = head.decode("ascii").splitlines()
    if not lines or lines[0] != _CKPT_MAGIC:
        raise ValueError(f"not a checkpoint file: {path}")
    fields = dict(line.split("=", 1) for line in lines[1:])
    params = ModelParams(
        flavor=Flavor(fields["flavor"]),
        depth=int(fields["depth"]),
        n_features=int(fields["n_features"]),
        hidden=int(fields["hidden"]),
        n_classes=int(fields["n_classes"]),
        seed=int(fields["seed"]),
    )
    offset = 0
    for t in _blob_order(params):
        count = t.data.size
        chunk = np.frombuffer(rest, dtype="<f8", count=count, offset=offset)
        t.data = chunk.reshape(t.data.shape).astype(np.float64)
        offset += count * 8
    if offset != len(rest):
        raise ValueError(
            f"checkpoint payload size mismatch: expected {offset}, got {len(rest)}"
        )
    return params
