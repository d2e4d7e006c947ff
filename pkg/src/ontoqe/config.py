"""Layered settings: defaults < config file < environment < command-line flags."""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

DEFAULTS: dict[str, Any] = {
    "bm25.k1": 0.9,
    "bm25.b": 0.4,
    "bm25.stem": False,
    "llm.backend": "http",
    "llm.model": "gpt-4o",
    "llm.api_base": None,
    "llm.api_key": None,
    "llm.cache_dir": "cache/llm",
    "llm.temperature": 1.0,
    "llm.max_in_flight": 4,
    "ontology.backend": "snapshot",
    "ontology.snapshot": None,
    "ontology.api_key": None,
    "ontology.cache_dir": "cache/ontology",
    "ontology.edge_cap": 50,
    "ontology.refresh": False,
    "ontology.max_in_flight": 4,
    "pipeline.mode": "full",
    "pipeline.alpha": None,
    "pipeline.cot": False,
    "pipeline.depth": 1000,
    "pipeline.k": 10,
    "jobs": 1,
}

ENV_VARS = {
    "UMLS_API_KEY": "ontology.api_key",
    "LLM_API_KEY": "llm.api_key",
    "LLM_API_BASE": "llm.api_base",
    "LLM_MODEL": "llm.model",
}

SECRET_KEYS = {"llm.api_key", "ontology.api_key"}
DEFAULT_CONFIG_FILES = ("bmq.toml", "bmq.json")


def _flatten(data: Mapping, prefix: str = "") -> dict[str, Any]:
    flat = {}
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(_flatten(value, name + "."))
        else:
            flat[name] = value
    return flat


def read_config_file(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    try:
        if path.suffix == ".json":
            data = json.loads(path.read_text(encoding="utf-8"))
        else:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from None
    flat = _flatten(data)
    unknown = sorted(set(flat) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"{path}: unknown settings {', '.join(unknown)}")
    return flat


class Settings:
    """Effective configuration with the provenance of every value."""

    def __init__(self, config_file: str | Path | None = None, env: Mapping[str, str] | None = None,
                 overrides: Mapping[str, Any] | None = None):
        env = os.environ if env is None else env
        self._values: dict[str, tuple[Any, str]] = {k: (v, "default") for k, v in DEFAULTS.items()}
        if config_file is None:
            config_file = next((p for p in DEFAULT_CONFIG_FILES if Path(p).exists()), None)
        self.config_file = config_file
        if config_file is not None:
            for k, v in read_config_file(config_file).items():
                self._values[k] = (v, f"file:{config_file}")
        for var, key in ENV_VARS.items():
            if env.get(var):
                self._values[key] = (env[var], f"env:{var}")
        for k, v in (overrides or {}).items():
            if k not in DEFAULTS:
                raise ConfigError(f"unknown setting {k}")
            if v is not None:
                self._values[k] = (v, "flag")

    def __getitem__(self, key: str) -> Any:
        return self._values[key][0]

    def source(self, key: str) -> str:
        return self._values[key][1]

    def show(self) -> str:
        width = max(len(k) for k in self._values)
        lines = []
        for key in sorted(self._values):
            value, source = self._values[key]
            if key in SECRET_KEYS and value:
                value = "****"
            lines.append(f"{key:<{width}}  {json.dumps(value)}  ({source})")
        return "\n".join(lines)
