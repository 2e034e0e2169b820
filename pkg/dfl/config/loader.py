from __future__ import annotations
from dataclasses import dataclass
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence

from pydantic import ValidationError

from dfl.config.models import ScenarioConfig
from dfl.config.presets import get_preset
try:
    import tomllib as _toml
except ModuleNotFoundError:  # Python < 3.11
    import tomli as _toml


class ConfigError(ValueError):
    pass


@dataclass
class ConfigMeta:
    config_path: Optional[Path]
    preset: Optional[str]
    variant: Optional[str]
    source_summary: str


@dataclass
class ResolvedScenario:
    name: str
    config: ScenarioConfig
    meta: ConfigMeta


def _load_toml(path: Path) -> Dict[str, Any]:
    with path.open("rb") as f:
        return _toml.load(f)


def _deep_merge(a: Dict[str, Any], b: Dict[str, Any]) -> Dict[str, Any]:
    out = dict(a)
    for k, v in b.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


def _parse_value(raw: str) -> Any:
    try:
        return _toml.loads(f"v = {raw}")["v"]
    except _toml.TOMLDecodeError:
        return raw


def parse_overrides(items: Sequence[str]) -> Dict[str, Any]:
    """Turn ``net.drop_prob=0.2`` style items into a nested dict (values parsed as TOML)."""
    out: Dict[str, Any] = {}
    for item in items:
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        node = out
        *parents, leaf = key.split(".")
        for part in parents:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r} conflicts with an earlier value for {part!r}")
        node[leaf] = _parse_value(raw.strip())
    return out


def _env_overrides(env: Mapping[str, str]) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    try:
        if seed := env.get("DFL_SEED"):
            out["train"] = {"seed": int(seed)}
            out["net"] = {"seed": int(seed)}
        if rounds := env.get("DFL_ROUNDS"):
            out["rounds"] = int(rounds)
    except ValueError as e:
        raise ConfigError(f"bad environment override: {e}") from e
    return out


def _check_keys(layer: Dict[str, Any], origin: str) -> None:
    unknown = sorted(set(layer) - set(ScenarioConfig.model_fields))
    if unknown:
        raise ConfigError(f"unknown config key(s) in {origin}: {', '.join(unknown)}")


def load_scenarios(
    preset: Optional[str] = None,
    config_path: Optional[Path] = None,
    overrides: Sequence[str] = (),
    seed: Optional[int] = None,
    env: Optional[Mapping[str, str]] = None,
) -> list[ResolvedScenario]:
    """Resolve one scenario per preset variant.

    Layers, later winning: defaults, preset (and variant), TOML file,
    environment (DFL_SEED, DFL_ROUNDS), ``--seed``, key=value overrides.
    """
    env = os.environ if env is None else env
    base = ScenarioConfig().as_dict()

    preset_obj = None
    if preset:
        try:
            preset_obj = get_preset(preset)
        except KeyError as e:
            raise ConfigError(str(e.args[0])) from None

    file_cfg: Dict[str, Any] = {}
    if config_path is not None:
        try:
            file_cfg = _load_toml(config_path)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {config_path}") from None
        except _toml.TOMLDecodeError as e:
            raise ConfigError(f"{config_path}: {e}") from e
        _check_keys(file_cfg, str(config_path))

    env_cfg = _env_overrides(env)
    seed_cfg = {"train": {"seed": seed}, "net": {"seed": seed}} if seed is not None else {}
    cli_cfg = parse_overrides(overrides)
    _check_keys(cli_cfg, "overrides")

    variants = preset_obj.variant_names if preset_obj else [""]
    resolved = []
    for variant in variants:
        merged = base
        if preset_obj:
            merged = _deep_merge(merged, preset_obj.overrides)
            if variant:
                merged = _deep_merge(merged, preset_obj.variants[variant])
        for layer in (file_cfg, env_cfg, seed_cfg, cli_cfg):
            merged = _deep_merge(merged, layer)
        name = "-".join(filter(None, [preset, variant])) or "custom"
        merged["name"] = file_cfg.get("name") or cli_cfg.get("name") or name
        try:
            config = ScenarioConfig.model_validate(merged)
        except ValidationError as e:
            raise ConfigError(f"invalid scenario {name}: {e}") from e

        meta = ConfigMeta(
            config_path=config_path,
            preset=preset,
            variant=variant or None,
            source_summary="+".join(filter(None, [
                "defaults",
                f"preset:{name}" if preset_obj else None,
                "file" if file_cfg else None,
                "env" if env_cfg else None,
                "seed" if seed_cfg else None,
                "overrides" if cli_cfg else None,
            ])),
        )
        resolved.append(ResolvedScenario(name=variant or name, config=config, meta=meta))
    return resolved
