"""Minimal reverse-mode automatic differentiation over dense float64 arrays.

Operations are recorded on a :class:`Graph` (a tape). ``backward`` walks the
tape in exact reverse insertion order, so gradients are bit-reproducible.
Only the operations the model and losses need are provided.
"""

import threading
from contextlib import contextmanager

import numpy as np

from . import kernels


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible."""


class Tensor:
    """A float64 array with an optional gradient.

    Leaves (parameters, inputs) have ``node_id is None``. Tensors produced by
    a recorded operation carry the id of their node in ``graph``.
    """

    __slots__ = ("data", "grad", "requires_grad", "node_id", "graph", "name")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.array(data, dtype=np.float64)
        if self.data.ndim == 0:
            self.data = self.data.reshape(())
        if any(s == 0 for s in self.data.shape):
            raise ShapeError(f"zero-sized extent in shape {self.data.shape}")
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.node_id = None
        self.graph = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self):
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, shape is {self.shape}")
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{tag})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, c):
        return scale(self, c)

    __rmul__ = __mul__


class _Node:
    __slots__ = ("op", "inputs", "backward")

    def __init__(self, op, inputs, backward):
        self.op = op
        self.inputs = inputs
        self.backward = backward


class Graph:
    """Append-only record of operations.

    Use as a context manager to make it the current graph of this thread::

        with Graph() as g:
            loss = ...
            backward(loss)
    """

    def __init__(self):
        self.nodes = []

    def record(self, op, inputs, out, backward_fn):
        self.nodes.append(_Node(op, inputs, backward_fn))
        out.node_id = len(self.nodes) - 1
        out.graph = self
        out.requires_grad = True
        return out

    def __len__(self):
        return len(self.nodes)

    def release(self):
        """Drop every recorded node (and the buffers they keep alive)."""
        self.nodes.clear()

    def __enter__(self):
        _state().stack.append(self)
        return self

    def __exit__(self, *exc):
        _state().stack.pop()
        return False


class _ThreadState(threading.local):
    def __init__(self):
        self.stack = []
        self.default = Graph()
        self.enabled = True


_local = _ThreadState()


def _state():
    return _local


def current_graph():
    st = _state()
    return st.stack[-1] if st.stack else st.default


@contextmanager
def no_grad():
    """Disable recording inside the block."""
    st = _state()
    prev = st.enabled
    st.enabled = False
    try:
        yield
    finally:
        st.enabled = prev


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(op, data, inputs, backward_fn):
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.requires_grad = False
    out.node_id = None
    out.graph = None
    out.name = None
    if _state().enabled and any(t.requires_grad for t in inputs):
        graph = None
        for t in inputs:
            if t.graph is not None:
                graph = t.graph
                break
        if graph is None:
            graph = current_graph()
        graph.record(op, inputs, out, backward_fn)
    return out


def _same_shape(op, a, b):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


# -- operations -------------------------------------------------------------

def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _same_shape("add", a, b)
    return _make("add", a.data + b.data, (a, b), lambda g: (g, g))


def sub(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _same_shape("sub", a, b)
    return _make("sub", a.data - b.data, (a, b), lambda g: (g, -g))


def scale(x, c):
    x = _as_tensor(x)
    c = float(c)
    return _make("scale", x.data * c, (x,), lambda g: (g * c,))


def total(x):
    """Sum of all elements, as a scalar tensor."""
    x = _as_tensor(x)
    shape = x.shape
    return _make("sum", np.array(x.data.sum()), (x,),
                 lambda g: (np.full(shape, float(g)),))


def relu(x):
    x = _as_tensor(x)
    mask = x.data > 0
    return _make("relu", np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def sse(a, b):
    """Sum of squared differences, differentiable in both arguments."""
    a, b = _as_tensor(a), _as_tensor(b)
    _same_shape("sse", a, b)
    diff = a.data - b.data
    val = np.array(np.dot(diff.reshape(-1), diff.reshape(-1)))

    def back(g):
        d = (2.0 * float(g)) * diff
        return d, -d

    return _make("sse", val, (a, b), back)


def mse(a, b):
    """Mean of squared differences."""
    a, b = _as_tensor(a), _as_tensor(b)
    _same_shape("mse", a, b)
    n = a.size
    diff = a.data - b.data
    val = np.array(np.dot(diff.reshape(-1), diff.reshape(-1)) / n)

    def back(g):
        d = (2.0 * float(g) / n) * diff
        return d, -d

    return _make("mse", val, (a, b), back)


def select_column(x, index):
    """``x[..., index]``: take one position along the last axis."""
    x = _as_tensor(x)
    shape = x.shape

    def back(g):
        full = np.zeros(shape)
        full[..., index] = g
        return (full,)

    return _make("select", np.ascontiguousarray(x.data[..., index]), (x,), back)


def reshape(x, shape):
    x = _as_tensor(x)
    old = x.shape
    return _make("reshape", x.data.reshape(shape), (x,), lambda g: (g.reshape(old),))


def conv2d(x, kernel, bias, dilation=(1, 1)):
    """Dilated "same" 2-D cross-correlation.

    ``x`` is [C_in, H, W] or batched [N, C_in, H, W]; ``kernel`` is
    [C_out, C_in, kH, kW]; ``bias`` is [C_out].
    """
    x, kernel, bias = _as_tensor(x), _as_tensor(kernel), _as_tensor(bias)
    dh, dw = (int(d) for d in dilation)
    if dh < 1 or dw < 1:
        raise ValueError(f"dilation must be >= 1, got {dilation}")
    if kernel.data.ndim != 4:
        raise ShapeError(f"kernel must be 4-D, got shape {kernel.shape}")
    batched = x.data.ndim == 4
    if x.data.ndim not in (3, 4):
        raise ShapeError(f"conv2d input must be 3-D or 4-D, got shape {x.shape}")
    xd = x.data if batched else x.data[None]
    if xd.shape[1] != kernel.shape[1]:
        raise ShapeError(f"conv2d: input has {xd.shape[1]} channels, kernel expects {kernel.shape[1]}")
    if bias.shape != (kernel.shape[0],):
        raise ShapeError(f"conv2d: bias shape {bias.shape} does not match {kernel.shape[0]} outputs")
    xd = np.ascontiguousarray(xd)
    kd = np.ascontiguousarray(kernel.data)
    out, saved = kernels.conv2d_forward_saved(xd, kd, bias.data, (dh, dw))
    if not batched:
        out = out[0]

    def back(g):
        gb = g if batched else g[None]
        gx, gk, gbias = kernels.conv2d_backward(xd, kd, np.ascontiguousarray(gb), (dh, dw),
                                                need_x=x.requires_grad, saved=saved)
        if gx is not None and not batched:
            gx = gx[0]
        return gx, gk, gbias

    return _make("conv2d", out, (x, kernel, bias), back)


# -- differentiation --------------------------------------------------------

def backward(loss):
    """Accumulate d(loss)/d(leaf) into ``leaf.grad`` for every leaf that
    requires grad. Gradients add to whatever is already stored."""
    if loss.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    seed = np.ones(loss.shape)
    if loss.node_id is None:
        if loss.requires_grad:
            _accumulate_leaf(loss, seed)
        return
    graph = loss.graph
    pending = {loss.node_id: seed}
    for nid in range(loss.node_id, -1, -1):
        g = pending.pop(nid, None)
        if g is None:
            continue
        node = graph.nodes[nid]
        grads = node.backward(g)
        for t, gi in zip(node.inputs, grads):
            if gi is None or not t.requires_grad:
                continue
            if t.node_id is None:
                _accumulate_leaf(t, gi)
            elif t.node_id in pending:
                pending[t.node_id] = pending[t.node_id] + gi
            else:
                pending[t.node_id] = gi


def _accumulate_leaf(t, g):
    g = np.asarray(g, dtype=np.float64).reshape(t.shape)
    if t.grad is None:
        t.grad = np.zeros(t.shape)
    t.grad += g


def zero_grads(tensors):
    for t in tensors:
        t.grad = None


def finite_diff_grad(f, x, eps=1e-5):
    """Central-difference gradient of scalar ``f(x)`` w.r.t. every element of x.

    ``x.data`` is perturbed in place and restored afterwards.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not x.data.flags.c_contiguous:
        x.data = np.ascontiguousarray(x.data)
    flat = x.data.reshape(-1)
    out = np.empty(flat.size)
    with no_grad():
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            fp = f(x).item()
            flat[i] = orig - eps
            fm = f(x).item()
            flat[i] = orig
            out[i] = (fp - fm) / (2.0 * eps)
    return out.reshape(x.shape)
