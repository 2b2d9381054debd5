"""Run configuration: one JSON document covering model, training, synthetic
surveys, well counts and file locations.

Schema (every key optional; unknown keys are rejected at every level)::

    {
      "seed": 0,
      "model":    {ModelConfig fields},
      "train":    {TrainConfig fields},
      "survey_1": {SyntheticSpec fields},
      "survey_2": {SyntheticSpec fields},
      "related": true,
      "wells_1": 51,
      "wells_2": 12,
      "shared_init": true,
      "sweep_alphas": [0, 0.01, 0.1, 1, 10],
      "trace_picks": [],
      "paths": {"data_dir": "data", "run_dir": "run"}
    }

``seed`` drives everything: training batches and initialization use it
directly and the surveys use ``2*seed + 1`` and ``2*seed + 2`` unless their
own ``seed`` is given.
"""

import json
import os
from dataclasses import dataclass, field, fields

from .data import SyntheticSpec, default_specs
from .model import ConfigError, ModelConfig
from .trainer import TrainConfig

_TOP_KEYS = {"seed", "model", "train", "survey_1", "survey_2", "related", "wells_1", "wells_2",
             "shared_init", "sweep_alphas", "trace_picks", "paths"}
_PATH_KEYS = {"data_dir", "run_dir"}
DEFAULT_ALPHAS = (0.0, 0.01, 0.1, 1.0, 10.0)


def _build(cls, section, raw):
    if not isinstance(raw, dict):
        raise ConfigError(f"'{section}' must be an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in '{section}': {', '.join(unknown)}")
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(f"'{section}': {exc}") from exc


@dataclass
class RunConfig:
    seed: int = 0
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    survey_1: SyntheticSpec = None
    survey_2: SyntheticSpec = None
    related: bool = True
    wells_1: int = 51
    wells_2: int = 12
    shared_init: bool = True
    sweep_alphas: tuple = DEFAULT_ALPHAS
    trace_picks: tuple = ()
    paths: dict = field(default_factory=lambda: {"data_dir": "data", "run_dir": "run"})

    def __post_init__(self):
        s1, s2 = default_specs(self.seed)
        if self.survey_1 is None:
            self.survey_1 = s1
        if self.survey_2 is None:
            self.survey_2 = s2
        self.validate()

    @classmethod
    def from_dict(cls, raw, seed_override=None):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(raw) - _TOP_KEYS)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        seed = int(raw.get("seed", 0)) if seed_override is None else int(seed_override)
        d1, d2 = default_specs(seed)
        kw = {"seed": seed}
        kw["model"] = _build(ModelConfig, "model", raw.get("model", {}))
        train = dict(raw.get("train", {}))
        if seed_override is not None or "seed" not in train:
            train["seed"] = seed
        kw["train"] = _build(TrainConfig, "train", train)
        for name, default in (("survey_1", d1), ("survey_2", d2)):
            spec = dict(raw.get(name, {}))
            if seed_override is not None or "seed" not in spec:
                spec["seed"] = default.seed
            merged = {**default.to_dict(), **spec}
            kw[name] = _build(SyntheticSpec, name, merged)
        for key in ("related", "shared_init"):
            if key in raw:
                if not isinstance(raw[key], bool):
                    raise ConfigError(f"'{key}' must be true or false")
                kw[key] = raw[key]
        for key in ("wells_1", "wells_2"):
            if key in raw:
                kw[key] = raw[key]
        if "sweep_alphas" in raw:
            kw["sweep_alphas"] = tuple(float(a) for a in raw["sweep_alphas"])
        if "trace_picks" in raw:
            kw["trace_picks"] = tuple(int(j) for j in raw["trace_picks"])
        if "paths" in raw:
            paths = raw["paths"]
            if not isinstance(paths, dict):
                raise ConfigError("'paths' must be an object")
            bad = sorted(set(paths) - _PATH_KEYS)
            if bad:
                raise ConfigError(f"unknown key(s) in 'paths': {', '.join(bad)}")
            kw["paths"] = {"data_dir": "data", "run_dir": "run", **paths}
        return cls(**kw)

    def validate(self):
        self.model.validate()
        self.train.validate()
        self.survey_1.validate()
        self.survey_2.validate()
        for key in ("wells_1", "wells_2"):
            v = getattr(self, key)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"'{key}' must be a positive integer")
        if self.wells_1 > self.survey_1.n_traces or self.wells_2 > self.survey_2.n_traces:
            raise ConfigError("more wells than traces")
        if any(a < 0 for a in self.sweep_alphas):
            raise ConfigError("sweep alphas must be >= 0")
        dirs = [os.path.normpath(p) for p in self.paths.values()]
        if len(set(dirs)) != len(dirs):
            raise ConfigError("configured paths must be distinct")

    def to_dict(self):
        return {
            "seed": self.seed,
            "model": self.model.to_dict(),
            "train": self.train.to_dict(),
            "survey_1": self.survey_1.to_dict(),
            "survey_2": self.survey_2.to_dict(),
            "related": self.related,
            "wells_1": self.wells_1,
            "wells_2": self.wells_2,
            "shared_init": self.shared_init,
            "sweep_alphas": list(self.sweep_alphas),
            "trace_picks": list(self.trace_picks),
            "paths": dict(self.paths),
        }


def load_config(path=None, seed_override=None):
    if path is None:
        return RunConfig.from_dict({}, seed_override)
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return RunConfig.from_dict(raw, seed_override)
