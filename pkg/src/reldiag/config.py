"""Run configuration: defaults, overridden by a JSON file, overridden by flags."""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

from .errors import ReldiagError
from .evaluate import DEFAULT_CEILING, OracleOptions
from .translate.disjunction import DNF_LIMIT

CONFIG_ENV = "RELDIAG_CONFIG"


class ConfigError(ReldiagError):
    pass


@dataclass(frozen=True)
class Config:
    k: int = 2
    max_rows: int = 4
    ceiling: int = DEFAULT_CEILING
    dnf_limit: int = DNF_LIMIT
    full: bool = False
    output_dir: Optional[str] = None
    jobs: int = 1

    def __post_init__(self):
        for name in ("k", "max_rows", "ceiling", "dnf_limit", "jobs"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.full, bool):
            raise ConfigError(f"full must be true or false, got {self.full!r}")

    @property
    def oracle(self) -> OracleOptions:
        return OracleOptions(k=self.k, max_rows=self.max_rows, ceiling=self.ceiling)

    def override(self, **values) -> Config:
        """Copy with every non-``None`` value applied."""
        return replace(self, **{k: v for k, v in values.items() if v is not None})

    def to_json(self) -> dict:
        return asdict(self)


def load_config(path: Optional[str] = None) -> Config:
    """Defaults, updated from ``path`` or the file named by ``$RELDIAG_CONFIG``."""
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return Config()
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    known = {f.name for f in fields(Config)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return Config(**doc)
