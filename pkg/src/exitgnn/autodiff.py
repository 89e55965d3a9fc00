"""Reverse-mode differentiation over the closed op set the network needs.

Eager tape: every op runs immediately and, when any input wants gradients,
records a closure mapping the output gradient back to input gradients.
``backward`` walks the records newest-first, which is a valid reverse
topological order because ops execute eagerly. Subgraphs built from frozen
parameters are never recorded, so they cost nothing at backward time.
"""

from __future__ import annotations

import numpy as np

from . import graph as graph_mod


class Tensor:
    """Dense float64 array with an optional gradient accumulator."""

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g: np.ndarray):
        self.grad = g if self.grad is None else self.grad + g

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


class Tape:
    """Execution record for one forward pass; owns backward()."""

    def __init__(self):
        self._records = []  # (out, inputs, vjp)

    def _emit(self, out_data, inputs, vjp) -> Tensor:
        out = Tensor(out_data, requires_grad=any(t.requires_grad for t in inputs))
        if out.requires_grad:
            self._records.append((out, inputs, vjp))
        return out

    # -- ops ---------------------------------------------------------------

    def matmul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.data.shape[-1] != b.data.shape[0]:
            raise ValueError(
                f"matmul dimension mismatch: {a.data.shape} @ {b.data.shape}"
            )

        def vjp(g):
            ga = g @ b.data.T if a.requires_grad else None
            gb = a.data.T @ g if b.requires_grad else None
            return ga, gb

        return self._emit(a.data @ b.data, (a, b), vjp)

    def spmm(self, adj: graph_mod.NormAdjacency, x: Tensor) -> Tensor:
        """Aggregate with a constant sparse operator (symmetric by construction)."""

        def vjp(g):
            return (graph_mod.spmm(adj, g),)

        return self._emit(graph_mod.spmm(adj, x.data), (x,), vjp)

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        if a.data.shape != b.data.shape:
            raise ValueError(f"add shape mismatch: {a.data.shape} vs {b.data.shape}")

        def vjp(g):
            return (g if a.requires_grad else None, g if b.requires_grad else None)

        return self._emit(a.data + b.data, (a, b), vjp)

    def add_bias(self, x: Tensor, b: Tensor) -> Tensor:
        """Row-broadcast bias add; the only broadcasting the engine supports."""
        if b.data.ndim != 1 or b.data.shape[0] != x.data.shape[1]:
            raise ValueError(f"bias shape {b.data.shape} does not fit {x.data.shape}")

        def vjp(g):
            gb = g.sum(axis=0) if b.requires_grad else None
            return (g if x.requires_grad else None, gb)

        return self._emit(x.data + b.data, (x, b), vjp)

    def relu(self, x: Tensor) -> Tensor:
        keep = x.data > 0.0

        def vjp(g):
            return (g * keep,)

        return self._emit(np.where(keep, x.data, 0.0), (x,), vjp)

    def scale(self, x: Tensor, s: Tensor, offset: float = 0.0) -> Tensor:
        """Multiply by a learnable scalar plus constant offset: (offset + s) * x."""
        if s.data.shape != ():
            raise ValueError("scale factor must be a scalar tensor")
        factor = offset + float(s.data)

        def vjp(g):
            gx = factor * g if x.requires_grad else None
            gs = np.asarray((g * x.data).sum()) if s.requires_grad else None
            return gx, gs

        return self._emit(factor * x.data, (x, s), vjp)

    def dropout(self, x: Tensor, p: float, rng: np.random.Generator,
                training: bool) -> Tensor:
        """Inverted dropout; exact identity when p == 0 or in eval mode."""
        if not 0.0 <= p < 1.0:
            raise ValueError(f"dropout probability must be in [0, 1), got {p}")
        if not training or p == 0.0:
            return x
        keep = (rng.random(x.data.shape) >= p) / (1.0 - p)

        def vjp(g):
            return (g * keep,)

        return self._emit(x.data * keep, (x,), vjp)

    def sum(self, x: Tensor) -> Tensor:
        """Reduce every entry to one scalar."""

        def vjp(g):
            return (np.full_like(x.data, float(g)),)

        return self._emit(np.asarray(x.data.sum()), (x,), vjp)

    def log_softmax(self, x: Tensor) -> Tensor:
        shifted = x.data - x.data.max(axis=1, keepdims=True)
        lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        out_data = shifted - lse

        def vjp(g):
            return (g - np.exp(out_data) * g.sum(axis=1, keepdims=True),)

        return self._emit(out_data, (x,), vjp)

    def masked_ce_mean(self, logprobs: Tensor, labels: np.ndarray,
                       mask: np.ndarray) -> Tensor:
        """Mean negative log-probability of the true class over masked rows."""
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            raise ValueError("cross-entropy over an empty mask")
        picked = logprobs.data[idx, labels[idx]]

        def vjp(g):
            gl = np.zeros_like(logprobs.data)
            gl[idx, labels[idx]] = -float(g) / idx.size
            return (gl,)

        return self._emit(np.asarray(-picked.mean()), (logprobs,), vjp)

    # -- backward ----------------------------------------------------------

    def backward(self, loss: Tensor):
        """Populate .grad on every requires_grad leaf reachable from loss."""
        if loss.data.shape != ():
            raise ValueError("backward expects a scalar loss")
        loss._accumulate(np.ones_like(loss.data))
        for out, inputs, vjp in reversed(self._records):
            g = out.grad
            if g is None:
                continue  # output never contributed to the loss
            for tensor, gt in zip(inputs, vjp(g)):
                if gt is not None and tensor.requires_grad:
                    tensor._accumulate(gt)
