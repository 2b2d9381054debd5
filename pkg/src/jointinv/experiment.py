"""End-to-end pipeline pieces shared by the CLI and the acceptance suite:
build the two datasets from grids or specs, make the initial networks, and
sweep the coupling strength."""

from dataclasses import dataclass, replace

from .data import build_dataset, make_scenario, sample_wells
from .evaluation import Validation, heldout_r2
from .model import build_network
from .trainer import train_joint, weight_distance_sq


@dataclass
class Prepared:
    d1: object
    d2: object
    val: tuple


def prepare(seis_1, imp_1, seis_2, imp_2, wells_1, wells_2, m):
    """Datasets at evenly sampled wells plus held-out validation targets."""
    w1 = sample_wells(seis_1.n_traces, wells_1)
    w2 = sample_wells(seis_2.n_traces, wells_2)
    d1 = build_dataset(seis_1, imp_1, w1, m)
    d2 = build_dataset(seis_2, imp_2, w2, m)
    v1 = Validation(seis_1, imp_1, (d1.scaler_x, d1.scaler_y), w1)
    v2 = Validation(seis_2, imp_2, (d2.scaler_x, d2.scaler_y), w2)
    return Prepared(d1, d2, (v1, v2))


def prepare_synthetic(cfg, related=None):
    """Generate the configured survey pair in memory and prepare it."""
    related = cfg.related if related is None else related
    s1, s2 = make_scenario(cfg.survey_1, cfg.survey_2, related=related)
    return prepare(s1.seismic, s1.impedance, s2.seismic, s2.impedance,
                   cfg.wells_1, cfg.wells_2, cfg.model.patch_width)


def initial_networks(cfg):
    F = build_network(cfg.model, cfg.seed)
    G = build_network(cfg.model, cfg.seed if cfg.shared_init else cfg.seed + 1)
    return F, G


SWEEP_FIELDS = ("alpha", "r2_heldout_1", "r2_heldout_2", "final_total", "final_wml",
                "weight_distance_sq")


def run_sweep(cfg, prep, alphas, log=None):
    """Train once per alpha from the same initial networks; one row each."""
    F0, G0 = initial_networks(cfg)
    rows = []
    for a in alphas:
        tc = replace(cfg.train, alpha=float(a), eval_every=0)
        F, G, hist = train_joint(F0, G0, prep.d1, prep.d2, tc)
        last = hist.records[-1] if len(hist) else {"total": float("nan"), "l_wml": float("nan")}
        row = {"alpha": float(a),
               "r2_heldout_1": heldout_r2(F, prep.val[0]),
               "r2_heldout_2": heldout_r2(G, prep.val[1]),
               "final_total": last["total"],
               "final_wml": last["l_wml"],
               "weight_distance_sq": weight_distance_sq(F, G)}
        rows.append(row)
        if log:
            log(f"  alpha={a:g}: held-out r2 {row['r2_heldout_1']:.4f} / {row['r2_heldout_2']:.4f}")
    return rows
