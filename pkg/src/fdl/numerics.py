"""Dense float64 tensors with a small reverse-mode autodiff engine.

Every differentiable op records its parents and a vector-Jacobian product
closure on the output tensor. ``backward`` walks the recorded graph in
reverse topological order and never mutates it, so it can be replayed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "tensor",
    "param",
    "as_tensor",
    "elementwise",
    "add",
    "sub",
    "mul",
    "scale",
    "relu",
    "neg",
    "square",
    "absolute",
    "conv",
    "add_bias",
    "reduce_mean",
    "reduce_sum",
    "matmul",
    "reshape",
    "transpose",
    "stack_sum",
    "backward",
    "AdamState",
    "adam_step",
    "ShapeError",
]


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible."""


class Tensor:
    """A node holding a float64 array and, optionally, its graph history."""

    __slots__ = ("data", "requires_grad", "_parents", "_vjp", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(())
        self.data = arr
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._vjp: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"expected a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def detach(self) -> Tensor:
        return Tensor(self.data)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        if np.isscalar(other):
            return scale(self, float(other))
        return mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return neg(self)


def tensor(data) -> Tensor:
    """Constant tensor (no gradient tracking)."""
    return Tensor(data)


def param(data, name: str | None = None) -> Tensor:
    """Leaf tensor that gradients are collected for."""
    return Tensor(data, requires_grad=True, name=name)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data: np.ndarray, parents: Sequence[Tensor], vjp) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._vjp = vjp
    return out


def _same_shape(a: Tensor, b: Tensor, what: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{what}: shape mismatch {a.shape} vs {b.shape}")


# ---------------------------------------------------------------- elementwise


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "add")
    return _node(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "sub")
    return _node(a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "mul")
    ad, bd = a.data, b.data
    return _node(ad * bd, (a, b), lambda g: (g * bd, g * ad))


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    c = float(c)
    return _node(a.data * c, (a,), lambda g: (g * c,))


def neg(a) -> Tensor:
    return scale(a, -1.0)


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0  # relu'(0) := 0
    return _node(np.where(mask, a.data, 0.0), (a,), lambda g: (np.where(mask, g, 0.0),))


def square(a) -> Tensor:
    a = as_tensor(a)
    ad = a.data
    return _node(ad * ad, (a,), lambda g: (2.0 * ad * g,))


def absolute(a) -> Tensor:
    a = as_tensor(a)
    s = np.sign(a.data)
    return _node(np.abs(a.data), (a,), lambda g: (s * g,))


_ELEMENTWISE = {"add": add, "sub": sub, "mul": mul}


def elementwise(op_kind: str, a, b=None) -> Tensor:
    """Dispatch one of ``add``, ``sub``, ``mul``, ``scale`` or ``relu``."""
    if op_kind in _ELEMENTWISE:
        return _ELEMENTWISE[op_kind](a, b)
    if op_kind == "scale":
        return scale(a, b)
    if op_kind == "relu":
        return relu(a)
    raise ValueError(f"unknown elementwise op {op_kind!r}")


# ------------------------------------------------------------------ reductions


def reduce_mean(a) -> Tensor:
    a = as_tensor(a)
    if a.size == 0:
        raise ShapeError("reduce_mean of an empty tensor")
    n = a.size
    shape = a.shape
    return _node(np.asarray(a.data.mean()), (a,), lambda g: (np.full(shape, float(g) / n),))


def reduce_sum(a, axis: int | None = None) -> Tensor:
    a = as_tensor(a)
    shape = a.shape
    if axis is None:
        return _node(np.asarray(a.data.sum()), (a,), lambda g: (np.full(shape, float(g)),))
    axis = axis % a.ndim

    def vjp(g):
        return (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),)

    return _node(a.data.sum(axis=axis), (a,), vjp)


def stack_sum(terms: Iterable[Tensor]) -> Tensor:
    """Sum of same-shaped tensors, accumulated left to right."""
    terms = list(terms)
    if not terms:
        raise ShapeError("stack_sum of no terms")
    total = terms[0]
    for t in terms[1:]:
        total = add(total, t)
    return total


# --------------------------------------------------------------- shape / linalg


def reshape(a, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    old = a.shape
    return _node(a.data.reshape(tuple(shape)), (a,), lambda g: (g.reshape(old),))


def transpose(a, axes: Sequence[int] | None = None) -> Tensor:
    a = as_tensor(a)
    axes = tuple(reversed(range(a.ndim))) if axes is None else tuple(axes)
    inv = tuple(np.argsort(axes))
    return _node(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inv),))


def matmul(a, b) -> Tensor:
    """2D matrix product."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} @ {b.shape}")
    ad, bd = a.data, b.data
    return _node(ad @ bd, (a, b), lambda g: (g @ bd.T, ad.T @ g))


# ----------------------------------------------------------------- convolution


def _pad(x: np.ndarray, pad: int, nspatial: int, mode: str) -> np.ndarray:
    widths = [(0, 0)] * (x.ndim - nspatial) + [(pad, pad)] * nspatial
    return np.pad(x, widths, mode="wrap" if mode == "same-circular" else "constant")


def _unpad(gp: np.ndarray, pad: int, nspatial: int, mode: str) -> np.ndarray:
    """Adjoint of ``_pad``: crop, folding wrapped borders back for circular."""
    for ax in range(gp.ndim - nspatial, gp.ndim):
        n = gp.shape[ax] - 2 * pad
        core = np.take(gp, np.arange(pad, pad + n), axis=ax)
        if mode == "same-circular" and pad:
            lo = np.take(gp, np.arange(0, pad), axis=ax)
            hi = np.take(gp, np.arange(pad + n, 2 * pad + n), axis=ax)
            # left border came from the last `pad` entries, right border from the first
            for j in range(pad):
                idx_lo = (n - pad + j) % n
                idx_hi = j % n
                sl_lo = [slice(None)] * gp.ndim
                sl_lo[ax] = idx_lo
                sl_hi = [slice(None)] * gp.ndim
                sl_hi[ax] = idx_hi
                core[tuple(sl_lo)] += np.take(lo, j, axis=ax)
                core[tuple(sl_hi)] += np.take(hi, j, axis=ax)
        gp = core
    return gp


def conv(signal, kernel, stride: int = 1, padding: str = "same-circular") -> Tensor:
    """Same-padded strided cross-correlation in 1D or 2D.

    ``kernel`` of rank 3 (C_out, C_in, k) selects 1D and takes a signal of shape
    (C_in, L) or batched (N, C_in, L). Rank 4 (C_out, C_in, k, k) selects 2D on
    (C_in, H, W) or (N, C_in, H, W). Output extents are input extents / stride.
    """
    x, w = as_tensor(signal), as_tensor(kernel)
    if padding not in ("same-circular", "same-zero"):
        raise ValueError(f"unknown padding {padding!r}")
    if stride < 1:
        raise ValueError("stride must be a positive integer")
    nsp = w.ndim - 2
    if nsp not in (1, 2):
        raise ShapeError(f"kernel must have rank 3 or 4, got shape {w.shape}")
    if x.ndim not in (nsp + 1, nsp + 2):
        raise ShapeError(f"signal shape {x.shape} does not fit a {nsp}D kernel {w.shape}")
    c_out, c_in = w.shape[:2]
    ks = w.shape[2:]
    if len(set(ks)) != 1:
        raise ShapeError(f"kernel must be square, got {ks}")
    k = ks[0]
    if k % 2 == 0:
        raise ShapeError(f"kernel extent must be odd, got {k}")
    if x.shape[-nsp - 1] != c_in:
        raise ShapeError(f"signal has {x.shape[-nsp - 1]} channels, kernel expects {c_in}")
    spatial = x.shape[-nsp:]
    for n in spatial:
        if n % stride:
            raise ShapeError(f"stride {stride} does not divide extent {n}")
    p = k // 2
    batched = x.ndim == nsp + 2
    xd, wd = x.data, w.data
    xp = _pad(xd if batched else xd[None], p, nsp, padding)
    nb = xp.shape[0]
    out_sp = tuple(n // stride for n in spatial)
    flat = int(np.prod(out_sp))
    offsets = list(np.ndindex(*([k] * nsp)))

    def window(off):
        return tuple([slice(None), slice(None)] + [slice(o, o + stride * m, stride) for o, m in zip(off, out_sp)])

    # im2col: rows (c_in, offset), columns (batch, position)
    cols = np.stack([xp[window(off)].reshape(nb, c_in, flat) for off in offsets], axis=2)
    cols = cols.transpose(1, 2, 0, 3).reshape(c_in * len(offsets), nb * flat)
    w2 = wd.reshape(c_out, c_in * len(offsets))
    out = (w2 @ cols).reshape(c_out, nb, flat).transpose(1, 0, 2).reshape((nb, c_out) + out_sp)

    def vjp(g):
        g2 = (g if batched else g[None]).reshape(nb, c_out, flat).transpose(1, 0, 2).reshape(c_out, nb * flat)
        gw = (g2 @ cols.T).reshape(wd.shape)
        gcols = (w2.T @ g2).reshape(c_in, len(offsets), nb, flat)
        gx = np.zeros_like(xp)
        for j, off in enumerate(offsets):
            gx[window(off)] += gcols[:, j].transpose(1, 0, 2).reshape((nb, c_in) + out_sp)
        gx = _unpad(gx, p, nsp, padding)
        return (gx if batched else gx[0]), gw

    return _node(out if batched else out[0], (x, w), vjp)


def add_bias(x, bias, channel_axis: int) -> Tensor:
    """Add ``bias[c]`` to every entry of channel ``c`` along ``channel_axis``.

    An explicit per-channel op; general broadcasting stays unsupported.
    """
    x, b = as_tensor(x), as_tensor(bias)
    ax = channel_axis % x.ndim
    if b.ndim != 1 or b.shape[0] != x.shape[ax]:
        raise ShapeError(f"bias shape {b.shape} does not match axis {ax} of {x.shape}")
    shape = [1] * x.ndim
    shape[ax] = -1
    others = tuple(i for i in range(x.ndim) if i != ax)
    return _node(x.data + b.data.reshape(shape), (x, b), lambda g: (g, g.sum(axis=others)))


# -------------------------------------------------------------------- backward


def _topological(loss: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in reversed(node._parents):
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(loss: Tensor, params: Iterable[Tensor] | None = None) -> dict[Tensor, np.ndarray]:
    """Gradients of a scalar ``loss`` with respect to leaf tensors.

    Returns a dict keyed by tensor identity. With ``params`` given, every listed
    tensor appears in the result; ones the loss does not depend on get zeros.
    Otherwise every reachable leaf with ``requires_grad`` is returned.
    """
    if loss.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    order = _topological(loss) if loss.requires_grad else []
    leaves: list[Tensor] = []
    for node in reversed(order):
        g = grads.get(id(node))
        if node._vjp is None:
            leaves.append(node)
            continue
        if g is None:
            continue
        for parent, pg in zip(node._parents, node._vjp(g)):
            if pg is None or not parent.requires_grad:
                continue
            pg = np.asarray(pg, dtype=np.float64).reshape(parent.shape)
            prev = grads.get(id(parent))
            grads[id(parent)] = pg.copy() if prev is None else prev + pg
    if params is None:
        return {t: grads.get(id(t), np.zeros_like(t.data)) for t in leaves}
    return {t: grads.get(id(t), np.zeros_like(t.data)) for t in params}


# ------------------------------------------------------------------------ Adam


@dataclass
class AdamState:
    """Moment estimates for a fixed list of parameter arrays."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: Sequence, **hyper) -> AdamState:
        shapes = [np.shape(_data(p)) for p in params]
        return cls(m=[np.zeros(s) for s in shapes], v=[np.zeros(s) for s in shapes], **hyper)


def _data(p) -> np.ndarray:
    return p.data if isinstance(p, Tensor) else np.asarray(p, dtype=np.float64)


def adam_step(params: Sequence, grads: Sequence, state: AdamState) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected Adam update. Returns new parameter arrays and state.

    ``state`` is updated in place and also returned.
    """
    if len(params) != len(grads):
        raise ShapeError(f"{len(params)} params but {len(grads)} gradients")
    if not state.m:
        state.m = [np.zeros(np.shape(_data(p))) for p in params]
        state.v = [np.zeros(np.shape(_data(p))) for p in params]
    if len(state.m) != len(params):
        raise ShapeError("Adam state was built for a different parameter list")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    new = []
    for i, (p, g) in enumerate(zip(params, grads)):
        pd, gd = _data(p), np.asarray(g, dtype=np.float64)
        if pd.shape != gd.shape or state.m[i].shape != pd.shape:
            raise ShapeError(f"Adam shape mismatch: param {pd.shape}, grad {gd.shape}, moment {state.m[i].shape}")
        state.m[i] = b1 * state.m[i] + (1 - b1) * gd
        state.v[i] = b2 * state.v[i] + (1 - b2) * gd * gd
        mhat = state.m[i] / (1 - b1**t)
        vhat = state.v[i] / (1 - b2**t)
        new.append(pd - state.lr * mhat / (np.sqrt(vhat) + state.eps))
    return new, state
