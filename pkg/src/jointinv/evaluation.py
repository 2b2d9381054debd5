"""Section prediction and goodness-of-fit reporting."""

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .autograd import Tensor, no_grad
from .data import DataError, SectionGrid, extract_patches
from .model import forward


class ConstantTargetError(ValueError):
    """r2 is undefined when the observed values are constant."""


def r2(y, y_hat):
    """Coefficient of determination 1 - SS_res / SS_tot."""
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise DataError(f"length mismatch: {y.shape} vs {y_hat.shape}")
    if y.size < 2:
        raise DataError("r2 needs at least two samples")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise ConstantTargetError("observed values are constant")
    ss_res = float(np.sum((y - y_hat) ** 2))
    return 1.0 - ss_res / ss_tot


def predict_section(net, seismic, scalers, m=None, chunk=64):
    """Predict a property value for every trace of ``seismic``.

    ``scalers`` is ``(scaler_x, scaler_y)`` from training. Traces are pushed
    through the network in chunks; each output column depends only on its
    own patch, so chunking does not change results.
    """
    scaler_x, scaler_y = scalers
    m = m or net.config.patch_width
    if m != net.config.patch_width:
        raise DataError(f"patch width {m} does not match network ({net.config.patch_width})")
    d, n = seismic.values.shape
    out = np.empty((d, n))
    with no_grad():
        for start in range(0, n, chunk):
            idx = np.arange(start, min(n, start + chunk))
            X = scaler_x.transform(extract_patches(seismic, idx, m))
            y_hat, _ = forward(net, Tensor(X))
            out[:, idx] = scaler_y.inverse(y_hat.data).T
    return SectionGrid(out, seismic.dz)


@dataclass
class EvaluationReport:
    per_trace: np.ndarray
    average: float
    flattened: float
    prediction: SectionGrid
    picks: list = field(default_factory=list)
    overlays: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trace", "r2"])
            for j, v in enumerate(self.per_trace):
                w.writerow([j, "" if np.isnan(v) else repr(float(v))])

    def summary(self):
        return {"average_r2": self.average, "flattened_r2": self.flattened,
                "n_scored": int(np.sum(~np.isnan(self.per_trace))),
                "n_skipped": len(self.skipped)}


def evaluate(pred, truth, trace_picks=(), exclude=()):
    """Per-trace r2 of ``pred`` against ``truth``.

    Traces with constant truth are skipped (NaN, with a warning). Traces
    listed in ``exclude`` (e.g. training wells) are reported per trace but
    left out of the average. ``flattened`` scores the included traces as one
    sample set.
    """
    if pred.values.shape != truth.values.shape:
        raise DataError(f"shape mismatch: {pred.values.shape} vs {truth.values.shape}")
    n = truth.n_traces
    per = np.full(n, np.nan)
    skipped = []
    for j in range(n):
        try:
            per[j] = r2(truth.values[:, j], pred.values[:, j])
        except ConstantTargetError:
            skipped.append(j)
    if skipped:
        warnings.warn(f"{len(skipped)} trace(s) with constant truth skipped", stacklevel=2)
    keep = np.ones(n, dtype=bool)
    keep[list(exclude)] = False
    scored = keep & ~np.isnan(per)
    average = float(np.mean(per[scored])) if scored.any() else float("nan")
    try:
        flat = r2(truth.values[:, keep].ravel(), pred.values[:, keep].ravel())
    except (ConstantTargetError, DataError):
        flat = float("nan")
    picks = [int(j) for j in trace_picks]
    overlays = [(truth.values[:, j].copy(), pred.values[:, j].copy()) for j in picks]
    return EvaluationReport(per, average, flat, pred, picks, overlays, skipped)


@dataclass
class Validation:
    """Held-out evaluation target for one survey."""

    seismic: SectionGrid
    impedance: SectionGrid
    scalers: tuple
    wells: np.ndarray

    def heldout(self):
        n = self.seismic.n_traces
        mask = np.ones(n, dtype=bool)
        mask[self.wells] = False
        return np.flatnonzero(mask)


def heldout_r2(net, val):
    """Average per-trace r2 over traces that are not training wells."""
    pred = predict_section(net, val.seismic, val.scalers)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return evaluate(pred, val.impedance, exclude=val.wells).average
