"""Joint training of two networks coupled by a weight mismatch penalty.

Each epoch both networks see a batch from their own dataset; the summed
regression, reconstruction and weighted mismatch losses are differentiated
in one backward pass and each network takes one ADAM step with its own
optimizer state.
"""

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autograd as ag
from .autograd import Graph, ShapeError, Tensor
from .model import ConfigError, forward


class ArchitectureMismatch(ValueError):
    """The two networks do not have position-wise identical weight shapes."""


@dataclass
class TrainConfig:
    alpha: float = 0.1
    epochs: int = 900
    lr: float = 1e-3
    betas: tuple = (0.9, 0.999)
    eps_adam: float = 1e-8
    weight_decay: float = 1e-3
    batch_1: int = None
    batch_2: int = None
    seed: int = 0
    eval_every: int = 0

    def __post_init__(self):
        self.betas = tuple(float(b) for b in self.betas)
        self.validate()

    def validate(self):
        if not self.alpha >= 0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha}")
        if not self.lr > 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.weight_decay < 0:
            raise ConfigError("weight_decay must be >= 0")
        if len(self.betas) != 2 or not all(0 <= b < 1 for b in self.betas):
            raise ConfigError(f"betas must be two values in [0, 1), got {self.betas}")
        for b in (self.batch_1, self.batch_2):
            if b is not None and b < 1:
                raise ConfigError("batch sizes must be positive")
        if self.eval_every < 0:
            raise ConfigError("eval_every must be >= 0")

    def to_dict(self):
        d = asdict(self)
        d["betas"] = list(self.betas)
        return d


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0

    @classmethod
    def zeros_like(cls, params):
        return cls([np.zeros(p.shape) for p in params], [np.zeros(p.shape) for p in params])


HISTORY_FIELDS = ("epoch", "l_reg", "l_recon", "l_wml", "total", "r2_d1", "r2_d2")


@dataclass
class TrainHistory:
    records: list = field(default_factory=list)

    def append(self, **rec):
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def column(self, name):
        return np.array([r[name] for r in self.records], dtype=float)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HISTORY_FIELDS)
            for r in self.records:
                w.writerow([r["epoch"]] + [repr(float(r[k])) for k in HISTORY_FIELDS[1:]])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or tuple(rows[0]) != HISTORY_FIELDS:
            raise ValueError(f"{path}: not a training history (expected header {','.join(HISTORY_FIELDS)})")
        if len(rows) < 2:
            raise ValueError(f"{path}: history has no records")
        hist = cls()
        for row in rows[1:]:
            rec = {"epoch": int(row[0])}
            rec.update({k: float(v) for k, v in zip(HISTORY_FIELDS[1:], row[1:])})
            hist.records.append(rec)
        return hist


# -- losses -------------------------------------------------------------------

def _check_architectures(F, G):
    wf, wg = F.weights(), G.weights()
    if len(wf) != len(wg) or any(a.shape != b.shape for a, b in zip(wf, wg)):
        raise ArchitectureMismatch("networks differ in layer count or weight shapes")
    return wf, wg


def weight_mismatch_loss(F, G):
    """Sum over layers of the squared L2 distance between corresponding
    weight tensors (kernels and biases)."""
    wf, wg = _check_architectures(F, G)
    loss = None
    for a, b in zip(wf, wg):
        term = ag.sse(a, b)
        loss = term if loss is None else ag.add(loss, term)
    return loss


def _batch_sq_error(pairs):
    loss = None
    for pred, target in pairs:
        n = pred.shape[0] if pred.data.ndim > 1 else 1
        if pred.size == 0 or n == 0:
            raise ShapeError("empty batch")
        term = ag.scale(ag.sse(pred, target), 1.0 / n)
        loss = term if loss is None else ag.add(loss, term)
    if loss is None:
        raise ShapeError("no datasets given")
    return loss


def regression_loss(preds, targets):
    """Sum over datasets of the batch-mean squared L2 norm of trace errors."""
    return _batch_sq_error(list(zip(preds, targets)))


def reconstruction_loss(recons, inputs):
    """Same form as :func:`regression_loss`, applied to reconstructed patches."""
    return _batch_sq_error(list(zip(recons, inputs)))


def total_loss(l_reg, l_recon, l_wml, alpha):
    if alpha < 0:
        raise ConfigError(f"alpha must be >= 0, got {alpha}")
    return ag.add(ag.add(l_reg, l_recon), ag.scale(l_wml, alpha))


# -- optimizer ------------------------------------------------------------------

def adam_step(params, state, cfg, kernel_mask=None):
    """One ADAM update in place. Weight decay is coupled L2 on kernels only."""
    b1, b2 = cfg.betas
    state.t += 1
    bc1 = 1.0 - b1 ** state.t
    bc2 = 1.0 - b2 ** state.t
    if kernel_mask is None:
        kernel_mask = [p.data.ndim == 4 for p in params]
    for p, m, v, is_kernel in zip(params, state.m, state.v, kernel_mask):
        g = p.grad if p.grad is not None else np.zeros(p.shape)
        if is_kernel and cfg.weight_decay:
            g = g + cfg.weight_decay * p.data
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p.data -= cfg.lr * (m / bc1) / (np.sqrt(v / bc2) + cfg.eps_adam)


# -- training loops -------------------------------------------------------------

def _batch_rng(seed, k):
    return np.random.default_rng([int(seed), int(k)])


def _sample(ds, size, rng):
    n = len(ds)
    if size is None or size >= n:
        return Tensor(ds.X), ds.Y
    idx = np.sort(rng.choice(n, size=size, replace=False))
    return Tensor(ds.X[idx]), ds.Y[idx]


def _validate_datasets(*datasets):
    for ds in datasets:
        if len(ds) == 0:
            raise ShapeError("dataset is empty")


def _eval_r2(net, validation):
    if validation is None:
        return math.nan
    from .evaluation import heldout_r2
    return heldout_r2(net, validation)


def train_joint(net_F, net_G, D1, D2, cfg, validation=None, callback=None):
    """Train copies of ``net_F`` on ``D1`` and ``net_G`` on ``D2`` jointly.

    ``validation`` is an optional pair of :class:`~jointinv.evaluation.Validation`
    objects; when given and ``cfg.eval_every > 0`` the held-out r2 of each
    network is recorded every ``eval_every`` epochs (NaN otherwise).

    Returns ``(F, G, history)``; the input networks are not modified.
    """
    cfg.validate()
    _validate_datasets(D1, D2)
    _check_architectures(net_F, net_G)
    F, G = net_F.copy(), net_G.copy()
    wf, wg = F.weights(), G.weights()
    mask = F.kernel_mask()
    state_f, state_g = AdamState.zeros_like(wf), AdamState.zeros_like(wg)
    rng1, rng2 = _batch_rng(cfg.seed, 1), _batch_rng(cfg.seed, 2)
    hist = TrainHistory()
    for epoch in range(1, cfg.epochs + 1):
        x1, y1 = _sample(D1, cfg.batch_1, rng1)
        x2, y2 = _sample(D2, cfg.batch_2, rng2)
        with Graph() as tape:
            yh1, xh1 = forward(F, x1)
            yh2, xh2 = forward(G, x2)
            l_reg = regression_loss([yh1, yh2], [y1, y2])
            l_rec = reconstruction_loss([xh1, xh2], [x1.data, x2.data])
            l_wml = weight_mismatch_loss(F, G)
            tot = total_loss(l_reg, l_rec, l_wml, cfg.alpha)
            ag.zero_grads(wf + wg)
            ag.backward(tot)
            tape.release()
        adam_step(wf, state_f, cfg, mask)
        adam_step(wg, state_g, cfg, mask)
        r1 = r2 = math.nan
        if validation is not None and cfg.eval_every and epoch % cfg.eval_every == 0:
            r1, r2 = _eval_r2(F, validation[0]), _eval_r2(G, validation[1])
        hist.append(epoch=epoch, l_reg=l_reg.item(), l_recon=l_rec.item(),
                    l_wml=l_wml.item(), total=tot.item(), r2_d1=r1, r2_d2=r2)
        if callback is not None:
            callback(epoch, hist.records[-1])
    return F, G, hist


def train_single(net, D, cfg, dataset_index=1, validation=None):
    """Train one network alone (no coupling term) with the same batch stream
    the joint trainer would give dataset ``dataset_index``."""
    cfg.validate()
    _validate_datasets(D)
    F = net.copy()
    w = F.weights()
    mask = F.kernel_mask()
    state = AdamState.zeros_like(w)
    rng = _batch_rng(cfg.seed, dataset_index)
    batch = cfg.batch_1 if dataset_index == 1 else cfg.batch_2
    hist = TrainHistory()
    for epoch in range(1, cfg.epochs + 1):
        x, y = _sample(D, batch, rng)
        with Graph() as tape:
            yh, xh = forward(F, x)
            l_reg = regression_loss([yh], [y])
            l_rec = reconstruction_loss([xh], [x.data])
            tot = ag.add(l_reg, l_rec)
            ag.zero_grads(w)
            ag.backward(tot)
            tape.release()
        adam_step(w, state, cfg, mask)
        r = math.nan
        if validation is not None and cfg.eval_every and epoch % cfg.eval_every == 0:
            r = _eval_r2(F, validation)
        hist.append(epoch=epoch, l_reg=l_reg.item(), l_recon=l_rec.item(), l_wml=0.0,
                    total=tot.item(), r2_d1=r, r2_d2=math.nan)
    return F, hist


def weight_distance_sq(F, G):
    wf, wg = _check_architectures(F, G)
    return float(sum(np.sum((a.data - b.data) ** 2) for a, b in zip(wf, wg)))


def weight_norm(F):
    return float(np.sqrt(sum(np.sum(w.data ** 2) for w in F.weights())))
