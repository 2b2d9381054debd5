"""Pure numpy dilated "same" 2-D cross-correlation, used when the compiled
extension is unavailable.

Works tap by tap: for each kernel position the shifted input window is
contracted against one [C_out, C_in] slice of the kernel.
"""

import numpy as np


def _pad(x, pads):
    (ph0, ph1), (pw0, pw1) = pads
    return np.pad(x, ((0, 0), (0, 0), (ph0, ph1), (pw0, pw1)))


def conv_forward(x, k, b, dilation, pads):
    n, _, h, w = x.shape
    co, _, kh, kw = k.shape
    dh, dw = dilation
    xp = _pad(x, pads)
    acc = np.zeros((co, n, h, w))
    for i in range(kh):
        for j in range(kw):
            win = xp[:, :, i * dh:i * dh + h, j * dw:j * dw + w]
            acc += np.tensordot(k[:, :, i, j], win, axes=([1], [1]))
    acc += b[:, None, None, None]
    return np.ascontiguousarray(acc.transpose(1, 0, 2, 3))


def conv_backward(x, k, g, dilation, pads, need_x=True):
    n, ci, h, w = x.shape
    co, _, kh, kw = k.shape
    dh, dw = dilation
    (ph0, ph1), (pw0, pw1) = pads
    xp = _pad(x, pads)
    gk = np.empty_like(k)
    gxp = np.zeros_like(xp) if need_x else None
    for i in range(kh):
        for j in range(kw):
            rows = slice(i * dh, i * dh + h)
            cols = slice(j * dw, j * dw + w)
            gk[:, :, i, j] = np.tensordot(g, xp[:, :, rows, cols], axes=([0, 2, 3], [0, 2, 3]))
            if need_x:
                # [C_in, N, H, W] -> [N, C_in, H, W]
                contrib = np.tensordot(k[:, :, i, j], g, axes=([0], [1]))
                gxp[:, :, rows, cols] += contrib.transpose(1, 0, 2, 3)
    gb = g.sum(axis=(0, 2, 3))
    gx = None
    if need_x:
        gx = np.ascontiguousarray(gxp[:, :, ph0:ph0 + h, pw0:pw0 + w])
    return gx, gk, gb
