"""Runtime configuration, resolved as flags > environment > config file > defaults.

The config file is JSON (one less dependency than TOML on Python 3.10, and
the store artifacts are JSON already).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace

from .errors import GatewayError, SchemaError
from .gateway import (
    ENV_API_KEY,
    ENV_BASE_URL,
    ENV_MODEL,
    HttpProvider,
    Provider,
    load_script,
)

ENV_STORE = "WORKBENCH_STORE"
ENV_BIND = "WORKBENCH_BIND"
ENV_SCRIPT = "WORKBENCH_SCRIPT"
ENV_OUTPUT = "WORKBENCH_OUTPUT"

#: request roles that may run on different models
ROLES = ("generate", "interviewer", "creator", "merge", "annotate")


@dataclass(frozen=True)
class WorkbenchConfig:
    store_path: str = "./workbench-data"
    bind: str = "127.0.0.1:8000"
    base_url: str = ""
    api_key: str = ""
    model: str = "gpt-4"
    role_models: dict = field(default_factory=dict)
    script: str | None = None
    output: str = "table"


_FILE_KEYS = {"store_path", "bind", "base_url", "api_key", "model",
              "role_models", "script", "output"}


def _from_file(path: str) -> dict:
    with open(path, encoding="utf-8") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"config file {path}: invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise SchemaError(f"config file {path}: expected a JSON object")
    unknown = set(doc) - _FILE_KEYS
    if unknown:
        raise SchemaError(f"config file {path}: unknown keys {sorted(unknown)}")
    if "role_models" in doc:
        models = doc["role_models"]
        if not isinstance(models, dict) or not all(
                isinstance(k, str) and isinstance(v, str) for k, v in models.items()):
            raise SchemaError(f"config file {path}: role_models must map role to model")
        bad = set(models) - set(ROLES)
        if bad:
            raise SchemaError(f"config file {path}: unknown roles {sorted(bad)}")
    return doc


def load_config(path: str | None = None, env: dict | None = None,
                overrides: dict | None = None) -> WorkbenchConfig:
    env = os.environ if env is None else env
    config = WorkbenchConfig()
    if path:
        config = replace(config, **_from_file(path))
    env_map = {
        "store_path": env.get(ENV_STORE),
        "bind": env.get(ENV_BIND),
        "base_url": env.get(ENV_BASE_URL),
        "api_key": env.get(ENV_API_KEY),
        "model": env.get(ENV_MODEL),
        "script": env.get(ENV_SCRIPT),
        "output": env.get(ENV_OUTPUT),
    }
    config = replace(config, **{k: v for k, v in env_map.items() if v})
    if overrides:
        config = replace(config, **{k: v for k, v in overrides.items() if v is not None})
    return config


def make_provider(config: WorkbenchConfig) -> Provider:
    if config.script:
        return load_script(config.script)
    if config.base_url:
        return HttpProvider(base_url=config.base_url, api_key=config.api_key)
    raise GatewayError(
        "no provider configured: set a script file or "
        f"{ENV_BASE_URL} / base_url")


def model_for(config: WorkbenchConfig, role: str) -> str:
    if config.script:
        return "scripted"
    return config.role_models.get(role, config.model)
