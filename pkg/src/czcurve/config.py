"""Experiment configuration: one explicit JSON document per run."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from ._util import ValidationError

UINT64_MAX = 2 ** 64 - 1
FORMATS = ("csv", "json", "dat")


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    seed: int = 0
    curve: dict = field(default_factory=lambda: {"name": "circle", "K": 512})
    kernel: dict = field(default_factory=lambda: {"kind": "riesz", "coord": 1, "p": 2})
    measure: dict = field(default_factory=lambda: {"ray": True, "v0": [1.0, 0.0], "S_max": 3.5})
    sweep: dict = field(default_factory=dict)
    output_dir: str = "out"
    formats: list = field(default_factory=lambda: list(FORMATS))

    def __post_init__(self):
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed <= UINT64_MAX:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise ValidationError(f"unknown output formats {bad}; choose from {list(FORMATS)}")
        for key in ("curve", "kernel", "measure", "sweep"):
            if not isinstance(getattr(self, key), dict):
                raise ValidationError(f"{key} must be a JSON object")

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ValidationError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        extra = set(doc) - known
        if extra:
            raise ValidationError(f"unknown config keys {sorted(extra)}")
        return cls(**doc)

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config is not valid JSON: {exc}") from exc
        return cls.from_json(doc)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())

    def pipeline_config(self) -> dict:
        """The flat document the theorem pipeline reads: stage configs plus sweep settings."""
        out = {"seed": self.seed, "curve": dict(self.curve), "kernel": dict(self.kernel),
               "measure": dict(self.measure)}
        out.update(self.sweep)
        return out


PIPELINE_KEYS = {"curve", "kernel", "measure", "ensemble", "p", "eps_grid", "sweep_eps", "lambda_quantiles",
                 "big_pieces", "localization", "seed"}


def load_any(path) -> ExperimentConfig:
    """Read either an ExperimentConfig or a flat pipeline document (curve, kernel, measure, ensemble, ...)."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("config must be a JSON object")
    if set(doc) <= PIPELINE_KEYS | {"name", "output_dir", "formats"} and not set(doc) & {"sweep"}:
        sweep = {k: doc[k] for k in doc if k not in {"curve", "kernel", "measure", "seed", "name",
                                                      "output_dir", "formats"}}
        base = {k: doc[k] for k in ("name", "seed", "curve", "kernel", "measure", "output_dir", "formats") if k in doc}
        return ExperimentConfig(**base, sweep=sweep)
    return ExperimentConfig.from_json(doc)
