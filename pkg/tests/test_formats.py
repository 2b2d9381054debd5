"""JLCK1 checkpoints, SVG figures and JSON run configs."""

import json
import struct
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from jointinv.checkpoint import (CheckpointFormatError, checkpoint_from_bytes, checkpoint_to_bytes,
                                 load_checkpoint, save_checkpoint)
from jointinv.config import RunConfig, load_config
from jointinv.data import Scaler, SectionGrid
from jointinv.model import ConfigError, build_network
from jointinv.plotting import loss_svg, overlay_svg, section_svg
from jointinv.trainer import TrainHistory

SVG = "{http://www.w3.org/2000/svg}"


# -- checkpoints -----------------------------------------------------------------

def test_checkpoint_roundtrip(tmp_path, tiny_cfg):
    net = build_network(tiny_cfg, 4)
    sc = (Scaler(0.5, 2.0), Scaler(6000.0, 900.0))
    path = tmp_path / "n.jlck"
    save_checkpoint(path, net, sc)
    back, sc2 = load_checkpoint(path)
    assert sc2 == sc and back.config == net.config
    assert back.layer_names == net.layer_names
    for a, b in zip(back.weights(), net.weights()):
        assert np.array_equal(a.data, b.data)
    assert checkpoint_to_bytes(back, sc2) == path.read_bytes()


def test_checkpoint_layout(tiny_cfg):
    net = build_network(tiny_cfg, 0)
    buf = checkpoint_to_bytes(net)
    assert buf[:6] == b"JLCK1\0"
    (count,) = struct.unpack_from("<I", buf, 6)
    assert count == len(net.weights())
    rank, *dims = struct.unpack_from("<5I", buf, 10)
    assert rank == 4 and tuple(dims) == net.weights()[0].shape
    first = np.frombuffer(buf, "<f8", count=3, offset=30)
    np.testing.assert_array_equal(first, net.weights()[0].data.ravel()[:3])
    _, scalers = checkpoint_from_bytes(buf)
    assert scalers is None


def test_checkpoint_errors(tiny_cfg):
    buf = checkpoint_to_bytes(build_network(tiny_cfg, 0))
    for bad in (b"NOPE!\0" + buf[6:], buf[:-1], buf + b"\0", buf[:40]):
        with pytest.raises(CheckpointFormatError):
            checkpoint_from_bytes(bad)
    tampered = bytearray(buf)
    struct.pack_into("<I", tampered, 6, 3)
    with pytest.raises(CheckpointFormatError):
        checkpoint_from_bytes(bytes(tampered))


# -- SVG ---------------------------------------------------------------------------

def parse(svg):
    root = ET.fromstring(svg)
    assert root.tag == SVG + "svg"
    return root


def test_section_svg(rng):
    root = parse(section_svg(SectionGrid(rng.normal(size=(8, 5)))))
    assert len(root.findall(f"{SVG}rect")) > 8


def test_section_svg_merges_constant_rows():
    root = parse(section_svg(SectionGrid(np.ones((4, 10)))))
    # background + one run per row + 64 colour bar cells
    assert len(root.findall(f"{SVG}rect")) == 1 + 4 + 64


def test_overlay_has_two_polylines_per_pick(rng):
    pairs = [(rng.normal(size=20), rng.normal(size=20)) for _ in range(3)]
    root = parse(overlay_svg(pairs, [2, 7, 11]))
    assert len(root.findall(f"{SVG}polyline")) == 6
    with pytest.raises(ValueError):
        overlay_svg(pairs, [1])


def test_loss_svg():
    h = TrainHistory()
    for e in range(1, 11):
        h.append(epoch=e, l_reg=10.0 / e, l_recon=5.0 / e, l_wml=0.0, total=15.0 / e,
                 r2_d1=float("nan"), r2_d2=float("nan"))
    root = parse(loss_svg(h))
    assert len(root.findall(f"{SVG}polyline")) == 3  # l_wml is all zero, so not drawn
    with pytest.raises(ValueError):
        loss_svg(TrainHistory())


# -- config ----------------------------------------------------------------------

def test_config_defaults():
    cfg = RunConfig()
    assert cfg.wells_1 == 51 and cfg.wells_2 == 12
    assert cfg.train.epochs == 900 and cfg.train.weight_decay == 1e-3 and cfg.train.lr == 1e-3
    assert cfg.sweep_alphas == (0.0, 0.01, 0.1, 1.0, 10.0)


def test_config_roundtrip_and_seed_override(tmp_path):
    raw = {"seed": 3, "model": {"channels": 4}, "train": {"epochs": 7}, "survey_2": {"noise_std": 0.0}}
    p = tmp_path / "c.json"
    p.write_text(json.dumps(raw))
    cfg = load_config(p)
    assert cfg.model.channels == 4 and cfg.train.epochs == 7 and cfg.train.seed == 3
    assert cfg.survey_1.seed == 7 and cfg.survey_2.seed == 8 and cfg.survey_2.noise_std == 0.0
    assert RunConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()
    over = load_config(p, seed_override=5)
    assert over.train.seed == 5 and over.survey_1.seed == 11 and over.survey_2.seed == 12


@pytest.mark.parametrize("raw", [
    {"sed": 1},
    {"model": {"chanels": 4}},
    {"train": {"epoch": 3}},
    {"survey_1": {"noise": 0.1}},
    {"paths": {"data": "x"}},
    {"paths": {"data_dir": "same", "run_dir": "same"}},
    {"wells_2": 0},
    {"wells_2": 500},
    {"related": "yes"},
    {"model": {"patch_width": 4}},
    {"sweep_alphas": [-1]},
    [1, 2],
])
def test_config_rejects(raw):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(raw)


def test_config_bad_json(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)

