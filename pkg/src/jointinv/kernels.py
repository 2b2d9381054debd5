"""Backend selection for the convolution hot loop.

The compiled Cython kernels are used when importable; otherwise the numpy
implementation in ``_conv_py`` takes over. Set ``JOINTINV_BACKEND=python``
to force the fallback (``=compiled`` makes a missing extension an error).
"""

import os

import numpy as np

from . import _conv_py

_requested = os.environ.get("JOINTINV_BACKEND", "auto").lower()
if _requested not in ("auto", "compiled", "python"):
    raise ImportError(f"JOINTINV_BACKEND must be auto, compiled or python, got {_requested!r}")

_compiled = None
if _requested != "python":
    try:
        from . import _conv as _compiled
    except ImportError:
        if _requested == "compiled":
            raise
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def compiled_available():
    return _compiled is not None


def set_backend(name):
    """Switch the default backend at runtime (used by tests and benchmarks)."""
    global BACKEND
    if name not in ("compiled", "python"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "compiled" and _compiled is None:
        raise RuntimeError("compiled extension is not available")
    BACKEND = name


def same_padding(kernel_size, dilation):
    """(before, after) zero padding that keeps an axis length unchanged."""
    total = dilation * (kernel_size - 1)
    return total // 2, total - total // 2


def _pads(k, dilation):
    return (same_padding(k.shape[2], dilation[0]), same_padding(k.shape[3], dilation[1]))


def _round8(n):
    return (n + 7) // 8 * 8


def _flat_rows(a, pads, length, maxoff):
    """Embed [N, C, H, W] into zero rows [N, C, length + maxoff] on the padded grid."""
    n, c, h, w = a.shape
    (p0, p1), (q0, q1) = pads
    hp, wp = h + p0 + p1, w + q0 + q1
    rows = np.zeros((n, c, length + maxoff))
    rows[:, :, :hp * wp].reshape(n, c, hp, wp)[:, :, p0:p0 + h, q0:q0 + w] = a
    return rows


def _geometry(x_shape, k_shape, dilation, pads):
    h, w = x_shape[2], x_shape[3]
    kh, kw = k_shape[2], k_shape[3]
    wp = w + pads[1][0] + pads[1][1]
    length = _round8(h * wp)
    offsets = np.array([i * dilation[0] * wp + j * dilation[1]
                        for i in range(kh) for j in range(kw)], dtype=np.intp)
    return wp, length, offsets, int(offsets.max())


def _crop(flat, h, w, wp):
    n, c = flat.shape[:2]
    return np.ascontiguousarray(flat[:, :, :h * wp].reshape(n, c, h, wp)[:, :, :, :w])


def conv2d_forward(x, k, b, dilation, backend=None):
    """Batched "same" cross-correlation. x [N,Ci,H,W], k [Co,Ci,kH,kW], b [Co]."""
    return conv2d_forward_saved(x, k, b, dilation, backend)[0]


def conv2d_forward_saved(x, k, b, dilation, backend=None):
    """Like :func:`conv2d_forward` but also returns an opaque object that
    :func:`conv2d_backward` can reuse instead of re-padding ``x``."""
    backend = backend or BACKEND
    pads = _pads(k, dilation)
    if backend == "python":
        return _conv_py.conv_forward(x, k, b, dilation, pads), None
    n, ci, h, w = x.shape
    co = k.shape[0]
    wp, length, offsets, maxoff = _geometry(x.shape, k.shape, dilation, pads)
    src = _flat_rows(x, pads, length, maxoff)
    flat = _compiled.correlate(src, np.ascontiguousarray(k).reshape(co, ci, -1), offsets, length)
    out = _crop(flat, h, w, wp)
    out += b[None, :, None, None]
    return out, src


def conv2d_backward(x, k, g, dilation, need_x=True, backend=None, saved=None):
    """Gradients (grad_x or None, grad_k, grad_b) of conv2d_forward."""
    backend = backend or BACKEND
    pads = _pads(k, dilation)
    if backend == "python":
        return _conv_py.conv_backward(x, k, g, dilation, pads, need_x)
    n, ci, h, w = x.shape
    co, _, kh, kw = k.shape
    wp, length, offsets, maxoff = _geometry(x.shape, k.shape, dilation, pads)
    src = saved if saved is not None else _flat_rows(x, pads, length, maxoff)
    # g on the same padded-width grid; junk columns stay zero
    gflat = np.zeros((n, co, length))
    gflat[:, :, :h * wp].reshape(n, co, h, wp)[:, :, :, :w] = g
    gk = _compiled.weight_grad(gflat, src, offsets).reshape(co, ci, kh, kw)
    gb = g.sum(axis=(0, 2, 3))
    gx = None
    if need_x:
        # input gradient = correlation of g with the flipped, channel-swapped kernel
        flipped = pads[0][::-1], pads[1][::-1]
        gsrc = _flat_rows(g, flipped, length, maxoff)
        kf = np.ascontiguousarray(k[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)).reshape(ci, co, -1)
        gx = _crop(_compiled.correlate(gsrc, kf, offsets, length), h, w, wp)
    return gx, gk, gb
