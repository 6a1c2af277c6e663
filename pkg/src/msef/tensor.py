"""Dense float64 tensors with reverse-mode automatic differentiation.

Every operation returns a new :class:`Tensor`. When gradient recording is
enabled and at least one input requires a gradient, the output keeps a
reference to its inputs together with a closure mapping the output gradient
to input gradients. Tensor ids come from a global counter, so creation order
is a valid topological order and :func:`backward` simply walks ids downward.

Only row-wise broadcasting of a 1-D tensor over the rows of a 2-D tensor is
supported; anything else must agree exactly in shape.
"""

from __future__ import annotations

import contextlib
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .errors import ContractError, DimensionError, NumericError

LAYER_NORM_EPS = 1e-5
ADAM_EPS = 1e-8

_next_id = itertools.count()
_recording = True


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording inside the block."""
    global _recording
    previous = _recording
    _recording = False
    try:
        yield
    finally:
        _recording = previous


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based (Philox) generator keyed by ``seed`` and optional sub-keys."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, keys)])))


class Tensor:
    """A dense float64 array that can take part in gradient computation."""

    __slots__ = ("data", "requires_grad", "grad", "id", "op", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.array(data, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise NumericError("tensor data contains NaN or Inf")
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self.id = next(_next_id)
        self.op = "leaf"
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return not self._parents

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, op={self.op}{flag})"

    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        return sub(self, other)

    def __mul__(self, other: "Tensor") -> "Tensor":
        return mul(self, other)

    def __neg__(self) -> "Tensor":
        return scale(self, -1.0)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    @property
    def T(self) -> "Tensor":
        return transpose(self)


def tensor(data, requires_grad: bool = False) -> Tensor:
    return Tensor(data, requires_grad=requires_grad)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, parents: tuple[Tensor, ...], backward_fn, op: str) -> Tensor:
    if not np.all(np.isfinite(data)):
        raise NumericError(f"{op} produced a non-finite value")
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.id = next(_next_id)
    out.op = op
    if _recording and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
    else:
        out.requires_grad = False
        out._parents = ()
        out._backward = None
    return out


# ---------------------------------------------------------------------------
# elementwise and structural ops
# ---------------------------------------------------------------------------

def _check_broadcast(a: Tensor, b: Tensor, op: str) -> bool:
    """Return True when ``b`` is a row vector broadcast over the rows of ``a``."""
    if a.shape == b.shape:
        return False
    if a.data.ndim == 2 and b.data.ndim == 1 and b.shape[0] == a.shape[1]:
        return True
    raise DimensionError(f"{op}: incompatible shapes {a.shape} and {b.shape}")


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    rowwise = _check_broadcast(a, b, "add")

    def backward(g):
        return g, (g.sum(axis=0) if rowwise else g)

    return _make(a.data + b.data, (a, b), backward, "add")


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    rowwise = _check_broadcast(a, b, "sub")

    def backward(g):
        return g, -(g.sum(axis=0) if rowwise else g)

    return _make(a.data - b.data, (a, b), backward, "sub")


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    rowwise = _check_broadcast(a, b, "mul")

    def backward(g):
        gb = g * a.data
        return g * b.data, (gb.sum(axis=0) if rowwise else gb)

    return _make(a.data * b.data, (a, b), backward, "mul")


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return _make(a.data * c, (a,), lambda g: (g * c,), "scale")


def add_const(a: Tensor, c: float) -> Tensor:
    return _make(a.data + float(c), (a,), lambda g: (g,), "add_const")


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise DimensionError(f"transpose needs a 2-D tensor, got {a.shape}")
    return _make(a.data.T.copy(), (a,), lambda g: (g.T,), "transpose")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of ``a`` ([m×k] or [k]) with ``b`` ([k×n])."""
    a, b = _as_tensor(a), _as_tensor(b)
    if b.data.ndim != 2 or a.data.ndim not in (1, 2) or a.shape[-1] != b.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")

    def backward(g):
        ga = g @ b.data.T
        gb = np.outer(a.data, g) if a.data.ndim == 1 else a.data.T @ g
        return ga, gb

    return _make(a.data @ b.data, (a, b), backward, "matmul")


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return _make(out, (a,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return _make(out, (a,), lambda g: (g * (1.0 - out * out),), "tanh")


_GELU_C = math.sqrt(2.0 / math.pi)


def gelu(a: Tensor) -> Tensor:
    """GELU, tanh approximation (smooth, so finite differences stay clean)."""
    x = a.data
    inner = _GELU_C * (x + 0.044715 * x**3)
    t = np.tanh(inner)
    out = 0.5 * x * (1.0 + t)

    def backward(g):
        dinner = _GELU_C * (1.0 + 3 * 0.044715 * x**2)
        return (g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner),)

    return _make(out, (a,), backward, "gelu")


def concat_rows(parts: Sequence[Tensor]) -> Tensor:
    """Stack tensors along axis 0 (rows for 2-D, elements for 1-D)."""
    parts = [_as_tensor(p) for p in parts]
    if not parts:
        raise DimensionError("concat_rows needs at least one tensor")
    tails = {p.shape[1:] for p in parts}
    if len(tails) != 1:
        raise DimensionError(f"concat_rows: trailing shapes differ {sorted(tails)}")
    bounds = np.cumsum([0] + [p.shape[0] for p in parts])

    def backward(g):
        return [g[bounds[i]:bounds[i + 1]] for i in range(len(parts))]

    return _make(np.concatenate([p.data for p in parts], axis=0), tuple(parts), backward, "concat_rows")


def concat_cols(parts: Sequence[Tensor]) -> Tensor:
    parts = [_as_tensor(p) for p in parts]
    if any(p.data.ndim != 2 for p in parts) or len({p.shape[0] for p in parts}) != 1:
        raise DimensionError("concat_cols needs 2-D tensors with equal row counts")
    bounds = np.cumsum([0] + [p.shape[1] for p in parts])

    def backward(g):
        return [g[:, bounds[i]:bounds[i + 1]] for i in range(len(parts))]

    return _make(np.concatenate([p.data for p in parts], axis=1), tuple(parts), backward, "concat_cols")


def slice_rows(a: Tensor, start: int, stop: int) -> Tensor:
    n = a.shape[0]
    if not 0 <= start <= stop <= n:
        raise DimensionError(f"slice_rows [{start}:{stop}] out of range for {n} rows")

    def backward(g):
        full = np.zeros_like(a.data)
        full[start:stop] = g
        return (full,)

    return _make(a.data[start:stop].copy(), (a,), backward, "slice_rows")


def slice_cols(a: Tensor, start: int, stop: int) -> Tensor:
    if a.data.ndim != 2 or not 0 <= start <= stop <= a.shape[1]:
        raise DimensionError(f"slice_cols [{start}:{stop}] invalid for {a.shape}")

    def backward(g):
        full = np.zeros_like(a.data)
        full[:, start:stop] = g
        return (full,)

    return _make(a.data[:, start:stop].copy(), (a,), backward, "slice_cols")


def gather(table: Tensor, index: Sequence[int]) -> Tensor:
    """Pick rows (2-D) or elements (1-D) of ``table``; repeated indices accumulate."""
    idx = np.asarray(index, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise DimensionError(f"gather index out of range for {table.shape[0]} rows")

    def backward(g):
        full = np.zeros_like(table.data)
        np.add.at(full, idx, g)
        return (full,)

    return _make(table.data[idx].copy(), (table,), backward, "gather")


def sum(a: Tensor) -> Tensor:  # noqa: A001 - mirrors the numpy name
    return _make(np.array(a.data.sum()), (a,), lambda g: (np.full_like(a.data, float(g)),), "sum")


def mean(a: Tensor) -> Tensor:
    n = a.size
    return _make(np.array(a.data.mean()), (a,), lambda g: (np.full_like(a.data, float(g) / n),), "mean")


def mean_rows(a: Tensor) -> Tensor:
    """Average over rows: [n×d] -> [d]."""
    if a.data.ndim != 2:
        raise DimensionError(f"mean_rows needs a 2-D tensor, got {a.shape}")
    n = a.shape[0]
    return _make(a.data.mean(axis=0), (a,), lambda g: (np.broadcast_to(g / n, a.shape).copy(),), "mean_rows")


# ---------------------------------------------------------------------------
# normalisation and losses
# ---------------------------------------------------------------------------

def softmax_rows(m: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """Row-wise softmax computed with max subtraction.

    Args:
        m: [r×c] scores.
        mask: optional boolean [r×c]; False entries receive exactly zero weight.
            Every row must keep at least one True entry.
    """
    if m.data.ndim != 2:
        raise DimensionError(f"softmax_rows needs a 2-D tensor, got {m.shape}")
    x = m.data
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != x.shape:
            raise DimensionError(f"mask shape {mask.shape} != scores shape {x.shape}")
        if not mask.any(axis=1).all():
            raise ContractError("softmax_rows mask leaves a row empty")
        x = np.where(mask, x, -np.inf)
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=1, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=1, keepdims=True)),)

    return _make(out, (m,), backward, "softmax_rows")


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = LAYER_NORM_EPS) -> Tensor:
    """Per-row normalisation to zero mean / unit variance, then ``gain*x + bias``."""
    if x.data.ndim != 2:
        raise DimensionError(f"layer_norm needs a 2-D tensor, got {x.shape}")
    d = x.shape[1]
    if d < 2:
        raise DimensionError("layer_norm needs at least 2 features per row")
    if gain.shape != (d,) or bias.shape != (d,):
        raise DimensionError(f"layer_norm gain/bias must have shape ({d},)")
    mu = x.data.mean(axis=1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = xhat * gain.data + bias.data

    def backward(g):
        gx_hat = g * gain.data
        gx = inv * (gx_hat - gx_hat.mean(axis=1, keepdims=True)
                    - xhat * (gx_hat * xhat).mean(axis=1, keepdims=True))
        return gx, (g * xhat).sum(axis=0), g.sum(axis=0)

    return _make(out, (x, gain, bias), backward, "layer_norm")


def cross_entropy(logits: Tensor, targets: Sequence[int]) -> Tensor:
    """Mean softmax cross-entropy of [T×V] logits against T integer targets."""
    t = np.asarray(targets, dtype=np.int64)
    if logits.data.ndim != 2 or t.shape != (logits.shape[0],):
        raise DimensionError(f"cross_entropy: logits {logits.shape} vs {t.shape[0]} targets")
    if t.size and (t.min() < 0 or t.max() >= logits.shape[1]):
        raise DimensionError("cross_entropy target out of range")
    x = logits.data
    shifted = x - x.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - logz
    rows = np.arange(t.size)
    loss = -logp[rows, t].mean()

    def backward(g):
        grad = np.exp(logp)
        grad[rows, t] -= 1.0
        return (grad * (float(g) / t.size),)

    return _make(np.array(loss), (logits,), backward, "cross_entropy")


def mse(pred: Tensor, target) -> Tensor:
    """Mean squared error against a constant target of the same shape."""
    tgt = np.asarray(target, dtype=np.float64)
    if tgt.shape != pred.shape:
        raise DimensionError(f"mse: prediction {pred.shape} vs target {tgt.shape}")
    diff = pred.data - tgt
    n = diff.size
    return _make(np.array((diff * diff).mean()), (pred,), lambda g: (2.0 * diff * float(g) / n,), "mse")


# ---------------------------------------------------------------------------
# graph and backward pass
# ---------------------------------------------------------------------------

@dataclass
class GraphNode:
    op: str
    input_ids: tuple[int, ...]
    output_id: int


@dataclass
class ComputeGraph:
    """Operation records reachable from an output, in creation (topological) order."""

    nodes: list[GraphNode] = field(default_factory=list)
    tensors: dict[int, Tensor] = field(default_factory=dict, repr=False)

    @classmethod
    def trace(cls, output: Tensor) -> "ComputeGraph":
        seen: dict[int, Tensor] = {}
        stack = [output]
        while stack:
            t = stack.pop()
            if t.id in seen or not t.requires_grad:
                continue
            seen[t.id] = t
            stack.extend(t._parents)
        graph = cls(tensors=seen)
        for tid in sorted(seen):
            t = seen[tid]
            if t._parents:
                graph.nodes.append(GraphNode(t.op, tuple(p.id for p in t._parents), t.id))
        return graph

    def is_topological(self) -> bool:
        return all(all(i < n.output_id for i in n.input_ids) for n in self.nodes)


def backward(loss: Tensor, graph: ComputeGraph | None = None) -> ComputeGraph:
    """Accumulate d(loss)/d(leaf) into ``.grad`` of every leaf that requires it.

    Gradients add into existing ``.grad`` buffers, so fan-out and repeated
    calls both accumulate. Leaves with ``requires_grad=False`` never receive
    a buffer.
    """
    if loss.data.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    if graph is None:
        graph = ComputeGraph.trace(loss)
    if not loss.requires_grad:
        return graph
    pending: dict[int, np.ndarray] = {loss.id: np.ones_like(loss.data)}
    for tid in sorted(graph.tensors, reverse=True):
        t = graph.tensors[tid]
        g = pending.pop(tid, None)
        if g is None:
            continue
        if t.is_leaf:
            t.grad = g.copy() if t.grad is None else t.grad + g
            continue
        for parent, pg in zip(t._parents, t._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            prev = pending.get(parent.id)
            pending[parent.id] = pg if prev is None else prev + pg
    return graph


def finite_diff_check(
    f: Callable[[Tensor], Tensor],
    x: Tensor,
    h: float = 1e-5,
    coords: Iterable[int] | None = None,
) -> float:
    """Compare the analytic gradient of scalar ``f`` at ``x`` with central differences.

    Returns ``max |analytic - numeric| / max(1, |numeric|)`` over the checked
    flat coordinates (all of them unless ``coords`` is given).
    """
    if not x.requires_grad:
        raise ContractError("finite_diff_check needs x.requires_grad=True")
    saved = x.grad
    x.grad = None
    out = f(x)
    backward(out)
    analytic = np.zeros_like(x.data) if x.grad is None else x.grad.copy()
    x.grad = saved

    flat = x.data.reshape(-1)
    idx = range(flat.size) if coords is None else coords
    worst = 0.0
    with no_grad():
        for i in idx:
            orig = flat[i]
            flat[i] = orig + h
            fp = f(x).item()
            flat[i] = orig - h
            fm = f(x).item()
            flat[i] = orig
            numeric = (fp - fm) / (2.0 * h)
            err = abs(analytic.reshape(-1)[i] - numeric) / max(1.0, abs(numeric))
            worst = max(worst, err)
    return worst


# ---------------------------------------------------------------------------
# optimiser
# ---------------------------------------------------------------------------

@dataclass
class OptimizerState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = ADAM_EPS
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def adam_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray | None],
              state: OptimizerState) -> tuple[list[np.ndarray], OptimizerState]:
    """One bias-corrected Adam update. Pure: inputs are not modified."""
    if state.lr < 0:
        raise ContractError("learning rate must be non-negative")
    if len(params) != len(grads):
        raise DimensionError("params and grads differ in length")
    m = state.m or [np.zeros_like(p) for p in params]
    v = state.v or [np.zeros_like(p) for p in params]
    t = state.step + 1
    new_params, new_m, new_v = [], [], []
    for p, g, mi, vi in zip(params, grads, m, v):
        if g is None:
            g = np.zeros_like(p)
        if g.shape != p.shape or mi.shape != p.shape:
            raise DimensionError(f"adam_step: shape mismatch {p.shape} vs {g.shape}")
        mi = state.beta1 * mi + (1.0 - state.beta1) * g
        vi = state.beta2 * vi + (1.0 - state.beta2) * g * g
        m_hat = mi / (1.0 - state.beta1**t)
        v_hat = vi / (1.0 - state.beta2**t)
        new_params.append(p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
        new_m.append(mi)
        new_v.append(vi)
    new_state = OptimizerState(state.lr, state.beta1, state.beta2, state.eps, t, new_m, new_v)
    return new_params, new_state


class Adam:
    """Stateful wrapper applying :func:`adam_step` to tensors in place."""

    def __init__(self, params: Sequence[Tensor], lr: float = 1e-3,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = ADAM_EPS):
        self.params = list(params)
        self.state = OptimizerState(lr=lr, beta1=betas[0], beta2=betas[1], eps=eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        new, self.state = adam_step([p.data for p in self.params],
                                    [p.grad for p in self.params], self.state)
        for p, arr in zip(self.params, new):
            if not np.all(np.isfinite(arr)):
                raise NumericError("Adam update produced a non-finite parameter")
            p.data[...] = arr
