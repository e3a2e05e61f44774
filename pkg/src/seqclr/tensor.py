"""Array-valued reverse-mode autodiff on numpy, plus seeded RNG utilities.

Ops record onto an explicit GradTape while one is active; backward replays
the tape in reverse execution order. Heavy kernels (matmul, conv2d, maxpool2d)
are written against BLAS-backed numpy primitives, everything else composes.
"""

from __future__ import annotations

import zlib
from typing import Callable, Iterable, Sequence

import numpy as np

Array = np.ndarray


class DegenerateInput(ValueError):
    """Raised when an input is outside an op's numerically safe domain."""


# ---------------------------------------------------------------------------
# RNG


class Rng:
    """Deterministic RNG tree over numpy's SeedSequence/PCG64.

    Child streams are keyed by (parent entropy, crc32(tag), index) so any
    consumer can be re-seeded independently of iteration order elsewhere.
    """

    def __init__(self, seed: int, _entropy: tuple[int, ...] | None = None):
        self.seed = int(seed)
        self._entropy: tuple[int, ...] = _entropy if _entropy is not None else (int(seed),)
        self._gen: np.random.Generator | None = None

    def child(self, tag: str, index: int = 0) -> "Rng":
        key = zlib.crc32(tag.encode("utf-8"))
        return Rng(self.seed, self._entropy + (key, int(index)))

    @property
    def gen(self) -> np.random.Generator:
        if self._gen is None:
            ss = np.random.SeedSequence(list(self._entropy))
            self._gen = np.random.Generator(np.random.PCG64(ss))
        return self._gen

    def uniform(self, low: float, high: float, size=None) -> Array:
        return self.gen.uniform(low, high, size)

    def normal(self, loc: float, scale: float, size=None) -> Array:
        return self.gen.normal(loc, scale, size)

    def integers(self, low: int, high: int, size=None) -> Array:
        return self.gen.integers(low, high, size)

    def permutation(self, n: int) -> Array:
        return self.gen.permutation(n)

    def __repr__(self) -> str:
        return f"Rng(entropy={self._entropy})"


# ---------------------------------------------------------------------------
# Tensor and tape


class Tensor:
    """An ndarray plus autodiff bookkeeping.

    ``requires_grad`` marks leaves; intermediates produced under an active
    tape from tracked inputs are tracked automatically. ``grad`` is populated
    on leaves by :func:`backward` (overwritten per call, not accumulated).
    """

    __slots__ = ("data", "requires_grad", "grad", "_recorded")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float64)
        self.data: Array = arr
        self.requires_grad = bool(requires_grad)
        self.grad: Array | None = None
        self._recorded = False

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def astype(self, dtype) -> "Tensor":
        return Tensor(self.data.astype(dtype), requires_grad=self.requires_grad)

    @property
    def tracked(self) -> bool:
        return self.requires_grad or self._recorded

    # arithmetic sugar; all routed through module-level ops
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, exponent: float):
        return pow_(self, exponent)

    def __getitem__(self, key):
        return getitem(self, key)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        return sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        return mean_(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, axes: Sequence[int] | None = None) -> "Tensor":
        return transpose(self, axes)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"


class _Node:
    __slots__ = ("out", "parents", "backward_fn")

    def __init__(self, out: Tensor, parents: tuple[Tensor, ...], backward_fn: Callable):
        self.out = out
        self.parents = parents
        self.backward_fn = backward_fn


class GradTape:
    """Execution-order op record; reversed by :func:`backward`."""

    def __init__(self):
        self.nodes: list[_Node] = []

    def __enter__(self) -> "GradTape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _TAPE_STACK.remove(self)

    def record(self, out: Tensor, parents: tuple[Tensor, ...], backward_fn: Callable) -> None:
        out._recorded = True
        self.nodes.append(_Node(out, parents, backward_fn))


_TAPE_STACK: list[GradTape] = []


def _active_tape() -> GradTape | None:
    return _TAPE_STACK[-1] if _TAPE_STACK else None


def _as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _maybe_record(out: Tensor, parents: tuple[Tensor, ...], backward_fn: Callable) -> Tensor:
    tape = _active_tape()
    if tape is not None and any(p.tracked for p in parents):
        tape.record(out, parents, backward_fn)
    return out


def backward(tape: GradTape, loss: Tensor) -> dict[Tensor, Array]:
    """Reverse-sweep the tape from a scalar loss; returns grads per leaf.

    Leaf tensors (requires_grad, not produced on the tape) also get their
    ``grad`` attribute set. Intermediate grads are freed as soon as consumed.
    """
    if loss.size != 1:
        raise ValueError(f"backward expects a scalar loss, got shape {loss.shape}")
    if not any(n.out is loss for n in reversed(tape.nodes)):
        raise ValueError("backward: loss is not a product of this tape")
    grads: dict[int, Array] = {id(loss): np.ones_like(loss.data)}
    leaf_grads: dict[Tensor, Array] = {}
    for node in reversed(tape.nodes):
        g = grads.pop(id(node.out), None)
        if g is None:
            continue
        parent_grads = node.backward_fn(g)
        for parent, pg in zip(node.parents, parent_grads):
            if pg is None:
                continue
            # out-of-place accumulation: pg may alias a buffer shared with
            # another parent's gradient (e.g. add with equal shapes)
            if parent._recorded:
                key = id(parent)
                grads[key] = grads[key] + pg if key in grads else pg
            elif parent.requires_grad:
                leaf_grads[parent] = leaf_grads[parent] + pg if parent in leaf_grads else pg
    for leaf, g in leaf_grads.items():
        leaf.grad = g
    return leaf_grads


# ---------------------------------------------------------------------------
# Broadcasting helpers


def _unbroadcast(g: Array, shape: tuple[int, ...]) -> Array:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# Elementwise and arithmetic ops


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data + b.data)

    def bwd(g: Array):
        ga = _unbroadcast(g, a.shape) if a.tracked else None
        gb = _unbroadcast(g, b.shape) if b.tracked else None
        return ga, gb

    return _maybe_record(out, (a, b), bwd)


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data - b.data)

    def bwd(g: Array):
        ga = _unbroadcast(g, a.shape) if a.tracked else None
        gb = _unbroadcast(-g, b.shape) if b.tracked else None
        return ga, gb

    return _maybe_record(out, (a, b), bwd)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data * b.data)

    def bwd(g: Array):
        ga = _unbroadcast(g * b.data, a.shape) if a.tracked else None
        gb = _unbroadcast(g * a.data, b.shape) if b.tracked else None
        return ga, gb

    return _maybe_record(out, (a, b), bwd)


def div(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data / b.data)

    def bwd(g: Array):
        ga = _unbroadcast(g / b.data, a.shape) if a.tracked else None
        gb = _unbroadcast(-g * a.data / (b.data * b.data), b.shape) if b.tracked else None
        return ga, gb

    return _maybe_record(out, (a, b), bwd)


def neg(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(-a.data)
    return _maybe_record(out, (a,), lambda g: (-g,))


def pow_(a, exponent: float) -> Tensor:
    a = _as_tensor(a)
    p = float(exponent)
    out = Tensor(a.data**p)

    def bwd(g: Array):
        return (g * p * a.data ** (p - 1.0),)

    return _maybe_record(out, (a,), bwd)


def exp(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.exp(a.data))
    return _maybe_record(out, (a,), lambda g: (g * out.data,))


def log(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.log(a.data))
    return _maybe_record(out, (a,), lambda g: (g / a.data,))


def sqrt(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.sqrt(a.data))
    return _maybe_record(out, (a,), lambda g: (g * (0.5 / out.data),))


def tanh(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.tanh(a.data))
    return _maybe_record(out, (a,), lambda g: (g * (1.0 - out.data * out.data),))


def sigmoid(a) -> Tensor:
    a = _as_tensor(a)
    # 0.5*(1+tanh(x/2)) avoids overflow for large negative inputs
    out = Tensor(0.5 * (1.0 + np.tanh(0.5 * a.data)))
    return _maybe_record(out, (a,), lambda g: (g * out.data * (1.0 - out.data),))


def relu(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.maximum(a.data, 0.0))
    # subgradient 0 at exactly 0
    return _maybe_record(out, (a,), lambda g: (g * (a.data > 0.0),))


def softplus(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.logaddexp(np.array(0.0, dtype=a.dtype), a.data))

    def bwd(g: Array):
        return (g * 0.5 * (1.0 + np.tanh(0.5 * a.data)),)

    return _maybe_record(out, (a,), bwd)


# ---------------------------------------------------------------------------
# Shape ops


def reshape(a, shape: tuple[int, ...]) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(a.data.reshape(shape))
    return _maybe_record(out, (a,), lambda g: (g.reshape(a.shape),))


def transpose(a, axes: Sequence[int] | None = None) -> Tensor:
    a = _as_tensor(a)
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    out = Tensor(a.data.transpose(axes))
    return _maybe_record(out, (a,), lambda g: (g.transpose(inverse),))


def getitem(a, key) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(a.data[key])

    def bwd(g: Array):
        full = np.zeros(a.shape, dtype=g.dtype)
        if _is_basic_index(key):
            full[key] += g
        else:
            np.add.at(full, key, g)
        return (full,)

    return _maybe_record(out, (a,), bwd)


def _is_basic_index(key) -> bool:
    parts = key if isinstance(key, tuple) else (key,)
    return all(isinstance(p, (int, np.integer, slice, type(None), type(Ellipsis))) for p in parts)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis))
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bwd(g: Array):
        slicer = [slice(None)] * g.ndim
        pieces = []
        for i in range(len(tensors)):
            slicer[axis] = slice(int(offsets[i]), int(offsets[i + 1]))
            pieces.append(g[tuple(slicer)])
        return tuple(pieces)

    return _maybe_record(out, tuple(tensors), bwd)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    out = Tensor(np.stack([t.data for t in tensors], axis=axis))

    def bwd(g: Array):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return _maybe_record(out, tuple(tensors), bwd)


# ---------------------------------------------------------------------------
# Reductions


def _restore_reduced(g: Array, shape: tuple[int, ...], axis, keepdims: bool) -> Array:
    if axis is None:
        return np.broadcast_to(g, shape)
    axes = axis if isinstance(axis, tuple) else (axis,)
    axes = tuple(a % len(shape) for a in axes)
    if not keepdims:
        for a in sorted(axes):
            g = np.expand_dims(g, a)
    return np.broadcast_to(g, shape)


def sum_(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(a.data.sum(axis=axis, keepdims=keepdims))

    def bwd(g: Array):
        return (_restore_reduced(g, a.shape, axis, keepdims).astype(a.dtype, copy=True),)

    return _maybe_record(out, (a,), bwd)


def mean_(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(a.data.mean(axis=axis, keepdims=keepdims))
    count = a.size / max(out.size, 1)

    def bwd(g: Array):
        spread = _restore_reduced(g, a.shape, axis, keepdims) / count
        return (spread.astype(a.dtype, copy=False),)

    return _maybe_record(out, (a,), bwd)


# ---------------------------------------------------------------------------
# Linear algebra


def matmul(a, b) -> Tensor:
    """Matrix product with numpy batching semantics; operands must be >= 2-D."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError("matmul operands must be at least 2-D")
    out = Tensor(a.data @ b.data)

    def bwd(g: Array):
        ga = gb = None
        if a.tracked:
            ga = _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape)
        if b.tracked:
            gb = _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape)
        return ga, gb

    return _maybe_record(out, (a, b), bwd)


def softmax(a, axis: int = -1) -> Tensor:
    """Numerically stable softmax along ``axis``."""
    a = _as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(y)

    def bwd(g: Array):
        dot = (g * y).sum(axis=axis, keepdims=True)
        return (y * (g - dot),)

    return _maybe_record(out, (a,), bwd)


def l2_normalize(v, axis: int = -1, eps: float = 1e-12) -> Tensor:
    """Scale slices along ``axis`` to unit L2 norm; degenerate slices raise."""
    v = _as_tensor(v)
    norms = np.sqrt((v.data * v.data).sum(axis=axis, keepdims=True))
    if np.any(norms <= eps) or not np.all(np.isfinite(norms)):
        raise DegenerateInput("l2_normalize: slice norm at or below epsilon")
    n = sqrt(sum_(mul(v, v), axis=axis, keepdims=True))
    return div(v, n)


# ---------------------------------------------------------------------------
# Spatial kernels (NHWC batches)


_CONV_CHUNK_BYTES = 4 << 20  # transient im2col buffer target per chunk


def conv2d(x, w, b, fuse_relu: bool = False) -> Tensor:
    """Same-padded 2-D convolution: x [B,H,W,C] with w [O,C,k,k], bias [O].

    Zero padding keeps H and W; kernels must be square with odd side. Frames
    are processed in chunks so the transient im2col buffer stays cache sized;
    each output row is an independent GEMM row, so chunking does not change
    values. Backward recomputes patch slices per chunk instead of retaining
    them. ``fuse_relu`` applies ReLU in the same kernel (its mask rides on
    the output sign).
    """
    x, w, b = _as_tensor(x), _as_tensor(w), _as_tensor(b)
    if x.ndim != 4:
        raise ValueError(f"conv2d expects [B,H,W,C] input, got shape {x.shape}")
    B, H, W, C = x.shape
    O, Ci, kh, kw = w.shape
    if Ci != C:
        raise ValueError(f"conv2d channel mismatch: input has {C}, kernel expects {Ci}")
    if kh != kw or kh % 2 == 0:
        raise ValueError("conv2d kernels must be square with odd side")
    p = kh // 2
    w2 = np.ascontiguousarray(w.data.transpose(2, 3, 1, 0).reshape(kh * kw * C, O))
    step = max(1, _CONV_CHUNK_BYTES // (H * W * kh * kw * C * x.data.itemsize))
    y = np.empty((B, H, W, O), dtype=np.result_type(x.dtype, w.dtype))
    for s in range(0, B, step):
        yc = _im2col_same(x.data[s : s + step], kh) @ w2
        yc += b.data.astype(yc.dtype)
        if fuse_relu:
            np.maximum(yc, 0.0, out=yc)
        y[s : s + step] = yc.reshape(-1, H, W, O)
    out = Tensor(y)

    def bwd(g: Array):
        gw2 = np.zeros((kh * kw * C, O), dtype=np.float64) if w.tracked else None
        gba = np.zeros((O,), dtype=np.float64) if b.tracked else None
        gx = np.zeros(x.shape, dtype=np.result_type(g.dtype, w2.dtype)) if x.tracked else None
        for s in range(0, B, step):
            g2 = g[s : s + step].reshape(-1, O)
            if fuse_relu:
                g2 = g2 * (out.data[s : s + step].reshape(-1, O) > 0.0)
            if gba is not None:
                gba += g2.sum(axis=0, dtype=np.float64)
            if gw2 is not None:
                gw2 += _im2col_same(x.data[s : s + step], kh).T @ g2
            if gx is not None:
                gxc = gx[s : s + step]
                dcols = (g2 @ w2.T).reshape(gxc.shape[0], H, W, kh * kw * C)
                i = 0
                for m in range(kh):
                    for n in range(kw):
                        # clip both slices to the overlap instead of padding
                        dm, dn = m - p, n - p
                        a0, a1 = max(-dm, 0), H - max(dm, 0)
                        c0, c1 = max(-dn, 0), W - max(dn, 0)
                        gxc[:, a0 + dm : a1 + dm, c0 + dn : c1 + dn, :] += dcols[
                            :, a0:a1, c0:c1, i * C : (i + 1) * C
                        ]
                        i += 1
        gw = gb = None
        if gw2 is not None:
            gw = gw2.reshape(kh, kw, C, O).transpose(3, 2, 0, 1).astype(w.dtype, copy=False)
        if gba is not None:
            gb = gba.astype(b.dtype, copy=False)
        return gx, gw, gb

    return _maybe_record(out, (x, w, b), bwd)


def _im2col_same(xd: Array, k: int) -> Array:
    B, H, W, C = xd.shape
    p = k // 2
    xp = np.zeros((B, H + 2 * p, W + 2 * p, C), dtype=xd.dtype)
    xp[:, p : p + H, p : p + W, :] = xd
    cols = np.empty((B, H, W, k * k * C), dtype=xd.dtype)
    i = 0
    for m in range(k):
        for n in range(k):
            cols[..., i * C : (i + 1) * C] = xp[:, m : m + H, n : n + W, :]
            i += 1
    return cols.reshape(B * H * W, k * k * C)


def maxpool2d(x, window: int = 2, stride: int = 2) -> Tensor:
    """Square max pooling on [B,H,W,C]; window must equal stride.

    Ragged edges are replicate-padded up to a window multiple. Ties route the
    gradient to the first maximal element in row-major scan order.
    """
    x = _as_tensor(x)
    if window != stride:
        raise ValueError("maxpool2d supports window == stride only")
    if x.ndim != 4:
        raise ValueError(f"maxpool2d expects [B,H,W,C] input, got shape {x.shape}")
    s = int(window)
    B, H, W, C = x.shape
    Hp = -(-H // s) * s
    Wp = -(-W // s) * s
    xd = x.data
    if s == 2 and (Hp, Wp) == (H, W):
        # strided-view fast path: no transpose copy, masks recomputed in bwd
        y = np.maximum(np.maximum(xd[:, 0::2, 0::2, :], xd[:, 0::2, 1::2, :]),
                       np.maximum(xd[:, 1::2, 0::2, :], xd[:, 1::2, 1::2, :]))
        out = Tensor(y)

        def bwd_fast(g: Array):
            # each position is written by exactly one stride slot, so no zeroing
            gx = np.empty_like(xd)
            step = max(1, _CONV_CHUNK_BYTES // (H * W * C * xd.itemsize))
            for st in range(0, B, step):
                xc, yc, gc = xd[st : st + step], y[st : st + step], g[st : st + step]
                gxc = gx[st : st + step]
                taken = np.zeros(yc.shape, dtype=bool)
                # row-major window scan keeps first-max tie-breaking
                for dy, dx in ((0, 0), (0, 1), (1, 0), (1, 1)):
                    hit = xc[:, dy::2, dx::2, :] == yc
                    hit &= ~taken
                    gxc[:, dy::2, dx::2, :] = np.where(hit, gc, 0)
                    taken |= hit
            return (gx,)

        return _maybe_record(out, (x,), bwd_fast)
    if (Hp, Wp) != (H, W):
        xd = np.pad(xd, ((0, 0), (0, Hp - H), (0, Wp - W), (0, 0)), mode="edge")
    Ho, Wo = Hp // s, Wp // s
    # windows flatten in row-major scan order so argmax picks the first max
    tiles = xd.reshape(B, Ho, s, Wo, s, C).transpose(0, 1, 3, 5, 2, 4).reshape(B, Ho, Wo, C, s * s)
    need_grad = _active_tape() is not None and x.tracked
    if need_grad:
        idx = tiles.argmax(axis=-1).astype(np.int8)
        y = np.take_along_axis(tiles, idx[..., None].astype(np.intp), axis=-1)[..., 0]
    else:
        y = tiles.max(axis=-1)
    out = Tensor(np.ascontiguousarray(y))

    def bwd(g: Array):
        onehot = idx[..., None] == np.arange(s * s, dtype=np.int8)
        gt = onehot * g[..., None]
        gp = gt.reshape(B, Ho, Wo, C, s, s).transpose(0, 1, 4, 2, 5, 3).reshape(B, Hp, Wp, C)
        if (Hp, Wp) != (H, W):
            gp = gp[:, :H, :W, :]
        return (np.ascontiguousarray(gp),)

    return _maybe_record(out, (x,), bwd)


# ---------------------------------------------------------------------------
# Initialization and gradient utilities


def glorot_uniform(shape: tuple[int, ...], rng: Rng, dtype=np.float32,
                   fan_in: int | None = None, fan_out: int | None = None) -> Array:
    """Glorot/Xavier uniform init. Fans default to matrix or conv conventions."""
    if fan_in is None or fan_out is None:
        if len(shape) == 2:  # [out, in]
            fan_in, fan_out = shape[1], shape[0]
        elif len(shape) == 4:  # [out, in, kh, kw]
            receptive = shape[2] * shape[3]
            fan_in, fan_out = shape[1] * receptive, shape[0] * receptive
        else:
            raise ValueError(f"cannot infer fans for shape {shape}")
    limit = float(np.sqrt(6.0 / (fan_in + fan_out)))
    return rng.uniform(-limit, limit, shape).astype(dtype)


def clip_global_norm(grads: dict, max_norm: float) -> tuple[dict, float]:
    """Rescale a gradient dict so its joint L2 norm is at most ``max_norm``."""
    total = 0.0
    for g in grads.values():
        total += float(np.vdot(g, g).real)
    norm = float(np.sqrt(total))
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        grads = {k: g * scale for k, g in grads.items()}
    return grads, norm


def grad_check(f: Callable[..., Tensor], inputs: Sequence[Tensor], h: float = 1e-5) -> float:
    """Max relative error between tape gradients and central differences.

    ``f`` must map the given leaf tensors to a scalar Tensor and be pure.
    Inputs are promoted to float64 in place for the check. The reported error
    is |a - n| / max(1e-8, |a| + |n|) over every coordinate of every input.
    """
    for t in inputs:
        t.data = t.data.astype(np.float64)
        t.requires_grad = True
    with GradTape() as tape:
        y = f(*inputs)
    analytic = backward(tape, y)
    worst = 0.0
    for t in inputs:
        a = analytic.get(t)
        if a is None:
            a = np.zeros_like(t.data)
        flat = t.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = float(f(*inputs).data)
            flat[i] = orig - h
            f_minus = float(f(*inputs).data)
            flat[i] = orig
            n = (f_plus - f_minus) / (2.0 * h)
            ai = float(a.reshape(-1)[i])
            rel = abs(ai - n) / max(1e-8, abs(ai) + abs(n))
            if rel > worst:
                worst = rel
    return worst
