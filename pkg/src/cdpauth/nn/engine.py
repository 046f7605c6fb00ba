"""Reverse-mode automatic differentiation over numpy arrays.

A small tape of closures sized for the conv nets used here: each op builds
its output `Tensor` with a backward closure holding exact adjoints.  All
arithmetic is float64; inputs are validated finite at layer boundaries.
Inference should run inside :func:`no_grad` so no graph is retained.
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Callable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "Tensor",
    "no_grad",
    "grad_enabled",
    "conv2d",
    "dense",
    "relu",
    "sigmoid",
    "maxpool2",
    "upsample2",
    "concat_channels",
    "flatten",
    "mse_loss",
    "softmax_cross_entropy",
    "bce_with_logits",
]

_GRAD_ENABLED = True


@contextmanager
def no_grad():
    """Disable graph construction (inference mode)."""
    global _GRAD_ENABLED
    previous = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = previous


def grad_enabled() -> bool:
    return _GRAD_ENABLED


class Tensor:
    """A float64 array plus the adjoint bookkeeping needed for backward."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def backward(self, grad: np.ndarray | None = None) -> None:
        """Accumulate adjoints into every reachable tensor with requires_grad."""
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without an explicit grad needs a scalar")
            grad = np.ones_like(self.data)
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        _accumulate(self, np.asarray(grad, dtype=np.float64))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- elementwise arithmetic (used to compose losses) --------------------

    def __add__(self, other: "Tensor") -> "Tensor":
        if not isinstance(other, Tensor):
            other = Tensor(other)
        if other.data.shape not in ((), self.data.shape) and self.data.shape != ():
            if other.data.shape != self.data.shape:
                raise ValueError(f"shape mismatch in add: {self.shape} vs {other.shape}")
        out = _node(self.data + other.data, (self, other))
        if out.requires_grad:

            def _bw(g: np.ndarray) -> None:
                if self.requires_grad:
                    _accumulate(self, _unbroadcast(g, self.data.shape))
                if other.requires_grad:
                    _accumulate(other, _unbroadcast(g, other.data.shape))

            out._backward = _bw
        return out

    __radd__ = __add__

    def __mul__(self, scale: float) -> "Tensor":
        if isinstance(scale, Tensor):
            raise TypeError("Tensor*Tensor products are not part of this engine")
        factor = float(scale)
        out = _node(self.data * factor, (self,))
        if out.requires_grad:

            def _bw(g: np.ndarray) -> None:
                if self.requires_grad:
                    _accumulate(self, g * factor)

            out._backward = _bw
        return out

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _node(data: np.ndarray, parents: Sequence[Tensor]) -> Tensor:
    out = Tensor(data)
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
    return out


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    return np.sum(g) * np.ones(shape) if shape == () else g.reshape(shape)


def _require_finite(name: str, arr: np.ndarray) -> None:
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")


# ---------------------------------------------------------------------------
# layers
# ---------------------------------------------------------------------------

def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None, stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation of (N, C, H, W) input with an (O, C, kh, kw) kernel."""
    xd, wd = x.data, w.data
    _require_finite("conv2d input", xd)
    if xd.ndim != 4 or wd.ndim != 4:
        raise ValueError(f"conv2d expects 4-d input and kernel, got {xd.shape} and {wd.shape}")
    N, C, H, W = xd.shape
    O, Ck, kh, kw = wd.shape
    if C != Ck:
        raise ValueError(f"channel mismatch: input has {C}, kernel expects {Ck}")
    if stride < 1 or padding < 0:
        raise ValueError("stride must be >= 1 and padding >= 0")
    xp = np.pad(xd, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else xd
    Hp, Wp = xp.shape[2], xp.shape[3]
    if Hp < kh or Wp < kw:
        raise ValueError(f"kernel {kh}x{kw} does not fit padded input {Hp}x{Wp}")
    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    Ho, Wo = windows.shape[2], windows.shape[3]
    cols = np.ascontiguousarray(windows.transpose(0, 2, 3, 1, 4, 5)).reshape(
        N * Ho * Wo, C * kh * kw
    )
    w2 = wd.reshape(O, -1)
    y = cols @ w2.T
    if b is not None:
        if b.data.shape != (O,):
            raise ValueError(f"bias shape {b.data.shape} does not match {O} output channels")
        y = y + b.data
    y = y.reshape(N, Ho, Wo, O).transpose(0, 3, 1, 2)
    parents = (x, w) if b is None else (x, w, b)
    out = _node(np.ascontiguousarray(y), parents)
    if out.requires_grad:

        def _bw(g: np.ndarray) -> None:
            g2 = np.ascontiguousarray(g.transpose(0, 2, 3, 1)).reshape(N * Ho * Wo, O)
            if w.requires_grad:
                _accumulate(w, (g2.T @ cols).reshape(O, C, kh, kw))
            if b is not None and b.requires_grad:
                _accumulate(b, g2.sum(axis=0))
            if x.requires_grad:
                gcols = (g2 @ w2).reshape(N, Ho, Wo, C, kh, kw).transpose(0, 3, 1, 2, 4, 5)
                gxp = np.zeros((N, C, Hp, Wp))
                for i in range(kh):
                    for j in range(kw):
                        gxp[:, :, i : i + Ho * stride : stride, j : j + Wo * stride : stride] += (
                            gcols[:, :, :, :, i, j]
                        )
                gx = gxp[:, :, padding : padding + H, padding : padding + W] if padding else gxp
                _accumulate(x, gx)

        out._backward = _bw
    return out


def dense(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """Affine map of (N, D) activations through a (D, K) weight."""
    xd, wd = x.data, w.data
    _require_finite("dense input", xd)
    if xd.ndim != 2 or wd.ndim != 2 or xd.shape[1] != wd.shape[0]:
        raise ValueError(f"dense shape mismatch: input {xd.shape}, weight {wd.shape}")
    y = xd @ wd
    if b is not None:
        y = y + b.data
    parents = (x, w) if b is None else (x, w, b)
    out = _node(y, parents)
    if out.requires_grad:

        def _bw(g: np.ndarray) -> None:
            if w.requires_grad:
                _accumulate(w, xd.T @ g)
            if b is not None and b.requires_grad:
                _accumulate(b, g.sum(axis=0))
            if x.requires_grad:
                _accumulate(x, g @ wd.T)

        out._backward = _bw
    return out


def relu(x: Tensor) -> Tensor:
    out = _node(np.maximum(x.data, 0.0), (x,))
    if out.requires_grad:
        mask = x.data > 0.0

        def _bw(g: np.ndarray) -> None:
            if x.requires_grad:
                _accumulate(x, g * mask)

        out._backward = _bw
    return out


def sigmoid(x: Tensor) -> Tensor:
    xd = x.data
    y = np.where(xd >= 0.0, 1.0 / (1.0 + np.exp(-np.abs(xd))), np.exp(-np.abs(xd)) / (1.0 + np.exp(-np.abs(xd))))
    out = _node(y, (x,))
    if out.requires_grad:

        def _bw(g: np.ndarray) -> None:
            if x.requires_grad:
                _accumulate(x, g * y * (1.0 - y))

        out._backward = _bw
    return out


def maxpool2(x: Tensor) -> Tensor:
    """2x2 max pooling with stride 2; trailing odd rows/columns are dropped."""
    xd = x.data
    if xd.ndim != 4:
        raise ValueError(f"maxpool2 expects (N, C, H, W), got {xd.shape}")
    N, C, H, W = xd.shape
    Ho, Wo = H // 2, W // 2
    if Ho < 1 or Wo < 1:
        raise ValueError(f"input {H}x{W} is too small to pool")
    tiles = (
        xd[:, :, : Ho * 2, : Wo * 2]
        .reshape(N, C, Ho, 2, Wo, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(N, C, Ho, Wo, 4)
    )
    idx = np.argmax(tiles, axis=-1)
    y = np.take_along_axis(tiles, idx[..., None], axis=-1)[..., 0]
    out = _node(y, (x,))
    if out.requires_grad:

        def _bw(g: np.ndarray) -> None:
            if x.requires_grad:
                gt = np.zeros((N, C, Ho, Wo, 4))
                np.put_along_axis(gt, idx[..., None], g[..., None], axis=-1)
                gx = np.zeros((N, C, H, W))
                gx[:, :, : Ho * 2, : Wo * 2] = (
                    gt.reshape(N, C, Ho, Wo, 2, 2)
                    .transpose(0, 1, 2, 4, 3, 5)
                    .reshape(N, C, Ho * 2, Wo * 2)
                )
                _accumulate(x, gx)

        out._backward = _bw
    return out


def upsample2(x: Tensor) -> Tensor:
    """Nearest-neighbour 2x upsampling."""
    xd = x.data
    if xd.ndim != 4:
        raise ValueError(f"upsample2 expects (N, C, H, W), got {xd.shape}")
    y = np.repeat(np.repeat(xd, 2, axis=2), 2, axis=3)
    out = _node(y, (x,))
    if out.requires_grad:
        N, C, H, W = xd.shape

        def _bw(g: np.ndarray) -> None:
            if x.requires_grad:
                _accumulate(x, g.reshape(N, C, H, 2, W, 2).sum(axis=(3, 5)))

        out._backward = _bw
    return out


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    """Concatenate two (N, C, H, W) tensors along the channel axis."""
    ad, bd = a.data, b.data
    if ad.ndim != 4 or bd.ndim != 4 or ad.shape[0] != bd.shape[0] or ad.shape[2:] != bd.shape[2:]:
        raise ValueError(f"cannot concatenate shapes {ad.shape} and {bd.shape}")
    out = _node(np.concatenate([ad, bd], axis=1), (a, b))
    if out.requires_grad:
        ca = ad.shape[1]

        def _bw(g: np.ndarray) -> None:
            if a.requires_grad:
                _accumulate(a, g[:, :ca])
            if b.requires_grad:
                _accumulate(b, g[:, ca:])

        out._backward = _bw
    return out


def flatten(x: Tensor) -> Tensor:
    """Collapse all but the batch axis."""
    xd = x.data
    shape = xd.shape
    out = _node(xd.reshape(shape[0], -1), (x,))
    if out.requires_grad:

        def _bw(g: np.ndarray) -> None:
            if x.requires_grad:
                _accumulate(x, g.reshape(shape))

        out._backward = _bw
    return out


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------

def mse_loss(pred: Tensor, target: Tensor | np.ndarray) -> Tensor:
    """Mean squared error over all elements."""
    td = target.data if isinstance(target, Tensor) else np.asarray(target, dtype=np.float64)
    _require_finite("mse_loss input", pred.data)
    _require_finite("mse_loss target", td)
    if pred.data.shape != td.shape:
        raise ValueError(f"mse shape mismatch: {pred.data.shape} vs {td.shape}")
    diff = pred.data - td
    out = _node(np.asarray(np.mean(diff**2)), (pred,))
    if out.requires_grad:

        def _bw(g: np.ndarray) -> None:
            if pred.requires_grad:
                _accumulate(pred, (2.0 / diff.size) * diff * g)

        out._backward = _bw
    return out


def softmax_cross_entropy(
    logits: Tensor, labels: np.ndarray, weights: np.ndarray | None = None
) -> Tensor:
    """Mean cross-entropy of integer labels under a softmax over logits.

    Stabilized by max subtraction, so logits of magnitude up to 1e6 stay
    finite.  ``weights``, when given, holds one positive weight per row
    and the loss becomes the weighted mean ``sum(w * nll) / sum(w)``, so
    scaling all weights by a constant changes nothing.
    """
    zd = logits.data
    _require_finite("cross-entropy logits", zd)
    if zd.ndim != 2:
        raise ValueError(f"expected (N, K) logits, got {zd.shape}")
    y = np.asarray(labels)
    N, K = zd.shape
    if y.shape != (N,) or y.min() < 0 or y.max() >= K:
        raise ValueError(f"labels must be ints in [0, {K}) with shape ({N},)")
    w: np.ndarray | None = None
    if weights is not None:
        wd = np.asarray(weights, dtype=np.float64)
        _require_finite("cross-entropy weights", wd)
        if wd.shape != (N,):
            raise ValueError(f"weights must have shape ({N},), got {wd.shape}")
        if wd.min() <= 0.0:
            raise ValueError("weights must be strictly positive")
        w = wd / wd.sum()
    shifted = zd - zd.max(axis=1, keepdims=True)
    lse = np.log(np.sum(np.exp(shifted), axis=1))
    nll = lse - shifted[np.arange(N), y]
    loss = np.mean(nll) if w is None else w @ nll
    out = _node(np.asarray(loss), (logits,))
    if out.requires_grad:
        softmax = np.exp(shifted - lse[:, None])

        def _bw(g: np.ndarray) -> None:
            if logits.requires_grad:
                grad = softmax.copy()
                grad[np.arange(N), y] -= 1.0
                if w is None:
                    _accumulate(logits, grad * (g / N))
                else:
                    _accumulate(logits, grad * (w[:, None] * g))

        out._backward = _bw
    return out


def bce_with_logits(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Mean binary cross-entropy on raw logits (softplus form, stable)."""
    zd = logits.data
    _require_finite("bce logits", zd)
    td = np.asarray(targets, dtype=np.float64)
    if td.shape != zd.shape:
        raise ValueError(f"bce shape mismatch: {zd.shape} vs {td.shape}")
    loss = np.logaddexp(0.0, zd) - zd * td
    out = _node(np.asarray(np.mean(loss)), (logits,))
    if out.requires_grad:
        prob = np.where(
            zd >= 0.0,
            1.0 / (1.0 + np.exp(-np.abs(zd))),
            np.exp(-np.abs(zd)) / (1.0 + np.exp(-np.abs(zd))),
        )

        def _bw(g: np.ndarray) -> None:
            if logits.requires_grad:
                _accumulate(logits, (prob - td) * (g / zd.size))

        out._backward = _bw
    return out
