"""Run configuration: ``key = value`` text files with ``#`` comments.

Block row counts may be left as ``auto``; they are then derived from the
dataset's motif counts (95th percentile per block) before preprocessing.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Dict, Optional

from .errors import ConfigurationError

AUTO = 0
EPOCH_RANGE = (20, 500)
BATCH_RANGE = (45, 450)


@dataclass
class RunConfig:
    dataset: str = "MUTAG"
    data_dir: str = ""
    file_prefix: str = ""
    bond_multiplicity: str = "0:1,1:1,2:2,3:3"
    features: str = "one_hot_label"
    model: str = "magcnn"
    N: int = 18
    K: int = 10
    w1: int = AUTO
    w2: int = AUTO
    w3: int = AUTO
    K1: int = 16
    K2: int = 8
    F1: int = 128
    F2: int = 64
    S: int = 8
    learning_rate: float = 0.001
    momentum: float = 0.9
    dropout: float = 0.5
    weight_decay: float = 0.01
    leaky_slope: float = 0.2
    epochs: int = 200
    batch_size: int = 45
    seed: int = 0
    folds: int = 10
    test_fraction: float = 0.1
    block_percentile: float = 95.0

    def validate(self) -> "RunConfig":
        if self.model not in ("mgcnn", "magcnn"):
            raise ConfigurationError(f"model must be mgcnn or magcnn, got {self.model!r}")
        if self.features not in ("one_hot_label", "normalized_degree"):
            raise ConfigurationError(f"unknown feature scheme {self.features!r}")
        if not EPOCH_RANGE[0] <= self.epochs <= EPOCH_RANGE[1]:
            raise ConfigurationError(f"epochs must be in {list(EPOCH_RANGE)}, got {self.epochs}")
        if not BATCH_RANGE[0] <= self.batch_size <= BATCH_RANGE[1]:
            raise ConfigurationError(
                f"batch_size must be in {list(BATCH_RANGE)}, got {self.batch_size}")
        if self.N < 2 or self.K < 3:
            raise ConfigurationError(f"need N >= 2 and K >= 3, got N={self.N}, K={self.K}")
        ws = (self.w1, self.w2, self.w3)
        if all(w != AUTO for w in ws) and sum(ws) % 3:
            raise ConfigurationError(f"w1 + w2 + w3 = {sum(ws)} is not divisible by 3")
        if any(w < 0 for w in ws) or (AUTO in ws and any(w != AUTO for w in ws)):
            raise ConfigurationError("w1, w2, w3 must all be positive or all auto")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigurationError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigurationError(f"seed must fit in u64, got {self.seed}")
        if self.folds < 2:
            raise ConfigurationError(f"need at least 2 folds, got {self.folds}")
        self.bond_table()
        return self

    @property
    def auto_blocks(self) -> bool:
        return self.w1 == AUTO

    def bond_table(self) -> Dict[int, int]:
        table = {}
        for item in filter(None, (s.strip() for s in self.bond_multiplicity.split(","))):
            try:
                k, v = item.split(":")
                table[int(k)] = int(v)
            except ValueError:
                raise ConfigurationError(
                    f"bad bond_multiplicity entry {item!r}; expected label:count") from None
        return table

    def echo(self) -> dict:
        """Config as a plain dict, without machine-local paths."""
        out = dataclasses.asdict(self)
        out.pop("data_dir")
        return out

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name.startswith("w") and f.name[1:].isdigit() and value == AUTO:
                value = "auto"
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELDS[name].type
    if name in ("w1", "w2", "w3") and raw.lower() == "auto":
        return AUTO
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigurationError(f"{name}: cannot parse {raw!r} as {kind}") from None
    return raw


def parse_config_text(text: str, base: Optional[RunConfig] = None, source: str = "<config>"
                      ) -> RunConfig:
    cfg = dataclasses.replace(base) if base is not None else RunConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in _FIELDS:
            raise ConfigurationError(f"{source}:{lineno}: unknown key {key!r}")
        setattr(cfg, key, _coerce(key, raw))
    return cfg


def load_config(path, base: Optional[RunConfig] = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigurationError(f"config file {path} not found") from None
    return parse_config_text(text, base, source=str(path))


def bundled_config(dataset: str) -> RunConfig:
    """Shipped defaults for ``dataset``, or plain defaults if none are bundled."""
    res = resources.files("magcnn").joinpath("configs", f"{dataset}.cfg")
    if res.is_file():
        return parse_config_text(res.read_text(encoding="utf-8"), source=f"{dataset}.cfg")
    return RunConfig(dataset=dataset)
