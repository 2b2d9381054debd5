"""Command-line interface.

Subcommands: gen-data, train, predict, eval, sweep-alpha, plot.

Exit codes: 0 success, 1 domain error, 2 I/O or configuration error.
Messages go to stderr; results are only ever written to files.
"""

import argparse
import csv
import json
import os
import sys
import warnings

import numpy as np

from . import __version__
from .autograd import ShapeError
from .checkpoint import CheckpointFormatError, load_checkpoint, save_checkpoint
from .config import load_config
from .data import DataError, GridFormatError, grid_to_bytes, make_scenario, read_grid, write_grid
from .evaluation import ConstantTargetError, evaluate, predict_section
from .experiment import SWEEP_FIELDS, initial_networks, prepare, run_sweep
from .model import ConfigError
from .plotting import loss_svg, overlay_svg, section_svg, write_svg
from .trainer import ArchitectureMismatch, TrainHistory, train_joint

GRID_FILES = {
    ("survey1", "impedance"): "survey1_impedance.sgrd",
    ("survey1", "seismic"): "survey1_seismic.sgrd",
    ("survey2", "impedance"): "survey2_impedance.sgrd",
    ("survey2", "seismic"): "survey2_seismic.sgrd",
}


class UsageError(Exception):
    """Bad paths or arguments (exit code 2)."""


def _log(msg):
    print(msg, file=sys.stderr)


def _out_dir(args, cfg, key):
    path = args.out or cfg.paths[key]
    if not os.path.isdir(path):
        raise UsageError(f"output directory does not exist: {path}")
    return path


def _in_dir(path):
    if not os.path.isdir(path):
        raise UsageError(f"input directory does not exist: {path}")
    return path


def _write_all(files):
    """Write {path: bytes} atomically as a set: on failure nothing is left behind."""
    done = []
    try:
        for path, payload in files.items():
            tmp = path + ".part"
            with open(tmp, "wb") as fh:
                fh.write(payload)
            done.append(tmp)
        for path in files:
            os.replace(path + ".part", path)
    except BaseException:
        for tmp in done:
            if os.path.exists(tmp):
                os.remove(tmp)
        raise


# -- pipeline pieces shared by train and sweep-alpha -----------------------------

def _load_surveys(data_dir):
    _in_dir(data_dir)
    grids = {k: read_grid(os.path.join(data_dir, name)) for k, name in GRID_FILES.items()}
    return grids


def _prepare(cfg, grids):
    return prepare(grids["survey1", "seismic"], grids["survey1", "impedance"],
                   grids["survey2", "seismic"], grids["survey2", "impedance"],
                   cfg.wells_1, cfg.wells_2, cfg.model.patch_width)


def _progress(total):
    step = max(1, total // 10)

    def cb(epoch, rec):
        if epoch % step == 0 or epoch == total:
            _log(f"  epoch {epoch}/{total} total={rec['total']:.5g} wml={rec['l_wml']:.4g}")
    return cb


# -- subcommands ---------------------------------------------------------------

def cmd_gen_data(args, cfg):
    out = _out_dir(args, cfg, "data_dir")
    s1, s2 = make_scenario(cfg.survey_1, cfg.survey_2, related=cfg.related)
    payload = {
        os.path.join(out, GRID_FILES["survey1", "impedance"]): grid_to_bytes(s1.impedance),
        os.path.join(out, GRID_FILES["survey1", "seismic"]): grid_to_bytes(s1.seismic),
        os.path.join(out, GRID_FILES["survey2", "impedance"]): grid_to_bytes(s2.impedance),
        os.path.join(out, GRID_FILES["survey2", "seismic"]): grid_to_bytes(s2.seismic),
    }
    _write_all(payload)
    _log(f"wrote {len(payload)} grids to {out}")


def cmd_train(args, cfg):
    data_dir = args.data or cfg.paths["data_dir"]
    out = _out_dir(args, cfg, "run_dir")
    grids = _load_surveys(data_dir)
    prep = _prepare(cfg, grids)
    d1, d2 = prep.d1, prep.d2
    F0, G0 = initial_networks(cfg)
    _log(f"training {cfg.train.epochs} epochs, alpha={cfg.train.alpha}")
    F, G, hist = train_joint(F0, G0, d1, d2, cfg.train, validation=prep.val,
                             callback=_progress(cfg.train.epochs))
    save_checkpoint(os.path.join(out, "net_f.jlck"), F, (d1.scaler_x, d1.scaler_y))
    save_checkpoint(os.path.join(out, "net_g.jlck"), G, (d2.scaler_x, d2.scaler_y))
    hist.to_csv(os.path.join(out, "history.csv"))
    with open(os.path.join(out, "wells.json"), "w") as fh:
        json.dump({"survey_1": d1.well_indices.tolist(), "survey_2": d2.well_indices.tolist()}, fh)
        fh.write("\n")
    _log(f"wrote net_f.jlck, net_g.jlck, history.csv, wells.json to {out}")


def cmd_predict(args, cfg):
    out = _out_dir(args, cfg, "run_dir")
    net, scalers = load_checkpoint(args.checkpoint)
    if scalers is None:
        raise DataError(f"{args.checkpoint} has no stored scalers; cannot predict")
    seismic = read_grid(args.seismic)
    pred = predict_section(net, seismic, scalers)
    name = args.name or os.path.splitext(os.path.basename(args.checkpoint))[0] + "_pred.sgrd"
    write_grid(os.path.join(out, name), pred)
    _log(f"wrote {name} to {out}")


def _int_list(text):
    if not text:
        return []
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def cmd_eval(args, cfg):
    out = _out_dir(args, cfg, "run_dir")
    pred, truth = read_grid(args.pred), read_grid(args.truth)
    if pred.values.shape != truth.values.shape:
        raise DataError(f"shape mismatch: prediction {pred.values.shape} vs truth {truth.values.shape}")
    exclude = _int_list(args.exclude)
    picks = _int_list(args.picks) or list(cfg.trace_picks)
    for j in exclude + picks:
        if not 0 <= j < truth.n_traces:
            raise DataError(f"trace index {j} outside 0..{truth.n_traces - 1}")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = evaluate(pred, truth, picks, exclude=exclude)
    for w in caught:
        _log(f"warning: {w.message}")
    prefix = args.name or "eval"
    report.to_csv(os.path.join(out, f"{prefix}_report.csv"))
    with open(os.path.join(out, f"{prefix}_summary.json"), "w") as fh:
        json.dump(report.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if picks:
        write_svg(os.path.join(out, f"{prefix}_overlay.svg"), overlay_svg(report.overlays, picks))
    _log(f"average r2 = {report.average:.4f} (flattened {report.flattened:.4f})")


def write_sweep_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_FIELDS)
        for r in rows:
            w.writerow([repr(float(r[k])) for k in SWEEP_FIELDS])


def cmd_sweep_alpha(args, cfg):
    data_dir = args.data or cfg.paths["data_dir"]
    out = _out_dir(args, cfg, "run_dir")
    alphas = cfg.sweep_alphas
    if args.alphas:
        try:
            alphas = [float(a) for a in args.alphas.split(",")]
        except ValueError as exc:
            raise UsageError(f"bad --alphas value {args.alphas!r}") from exc
    if any(a < 0 for a in alphas):
        raise ConfigError("alphas must be >= 0")
    grids = _load_surveys(data_dir)
    prep = _prepare(cfg, grids)
    _log(f"sweeping alpha over {list(alphas)} ({cfg.train.epochs} epochs each)")
    rows = run_sweep(cfg, prep, alphas, log=_log)
    write_sweep_csv(os.path.join(out, "sweep_alpha.csv"), rows)
    best = max(rows, key=lambda r: r["r2_heldout_2"])
    _log(f"best alpha for survey 2: {best['alpha']:g} (r2 {best['r2_heldout_2']:.4f})")


def cmd_plot(args, cfg):
    out = _out_dir(args, cfg, "run_dir")
    made = []
    if args.grid:
        grid = read_grid(args.grid)
        name = os.path.splitext(os.path.basename(args.grid))[0] + "_section.svg"
        write_svg(os.path.join(out, name), section_svg(grid, title=os.path.basename(args.grid)))
        made.append(name)
    if args.pred or args.truth:
        if not (args.pred and args.truth):
            raise UsageError("--pred and --truth must be given together")
        picks = _int_list(args.picks) or list(cfg.trace_picks)
        pred, truth = read_grid(args.pred), read_grid(args.truth)
        if pred.values.shape != truth.values.shape:
            raise DataError("prediction and truth grids differ in shape")
        if not picks:
            picks = [int(j) for j in np.linspace(0, truth.n_traces - 1, 4).round()]
        for j in picks:
            if not 0 <= j < truth.n_traces:
                raise DataError(f"trace index {j} outside 0..{truth.n_traces - 1}")
        pairs = [(truth.values[:, j], pred.values[:, j]) for j in picks]
        write_svg(os.path.join(out, "overlay.svg"), overlay_svg(pairs, picks))
        made.append("overlay.svg")
    if args.history:
        try:
            hist = TrainHistory.from_csv(args.history)
        except ValueError as exc:
            raise DataError(str(exc)) from exc
        write_svg(os.path.join(out, "loss.svg"), loss_svg(hist))
        made.append("loss.svg")
    if not made:
        raise UsageError("nothing to plot: give --grid, --pred/--truth or --history")
    _log(f"wrote {', '.join(made)} to {out}")


# -- entry point -----------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="jointinv", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--seed", type=int, help="override every seed in the config")
        sp.add_argument("--out", help="output directory (must exist)")
        return sp

    common(sub.add_parser("gen-data", help="write the two synthetic surveys as SGRD1 grids"))
    sp = common(sub.add_parser("train", help="jointly train the two networks"))
    sp.add_argument("--data", help="directory with the four survey grids")
    sp = common(sub.add_parser("predict", help="predict an impedance section"))
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--seismic", required=True, help="SGRD1 seismic grid")
    sp.add_argument("--name", help="output file name")
    sp = common(sub.add_parser("eval", help="score a predicted section against truth"))
    sp.add_argument("--pred", required=True)
    sp.add_argument("--truth", required=True)
    sp.add_argument("--exclude", help="comma-separated trace indices left out of the average")
    sp.add_argument("--picks", help="comma-separated trace indices for overlays")
    sp.add_argument("--name", help="output file prefix (default: eval)")
    sp = common(sub.add_parser("sweep-alpha", help="train once per alpha and compare"))
    sp.add_argument("--data", help="directory with the four survey grids")
    sp.add_argument("--alphas", help="comma-separated alpha values")
    sp = common(sub.add_parser("plot", help="write SVG figures"))
    sp.add_argument("--grid", help="SGRD1 grid to draw as a section")
    sp.add_argument("--pred", help="predicted SGRD1 grid for trace overlays")
    sp.add_argument("--truth", help="true SGRD1 grid for trace overlays")
    sp.add_argument("--picks", help="comma-separated trace indices for overlays")
    sp.add_argument("--history", help="training history CSV for loss curves")
    return p


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "sweep-alpha": cmd_sweep_alpha,
    "plot": cmd_plot,
}

_IO_ERRORS = (OSError, UsageError, ConfigError, GridFormatError, CheckpointFormatError)
_DOMAIN_ERRORS = (DataError, ShapeError, ConstantTargetError, ArchitectureMismatch, ValueError)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = load_config(args.config, args.seed)
        COMMANDS[args.command](args, cfg)
    except _IO_ERRORS as exc:
        _log(f"error: {exc}")
        return 2
    except _DOMAIN_ERRORS as exc:
        _log(f"error: {exc}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
