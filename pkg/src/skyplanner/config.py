"""JSON configuration: defaults, file merge, flag overrides and conversion to planner types."""

from __future__ import annotations

import copy
import json
from importlib import resources
from pathlib import Path

from skyplanner.channel import ChannelParams
from skyplanner.energy import PowerProfile
from skyplanner.errors import InvalidParameterError
from skyplanner.geometry import SceneParams
from skyplanner.planner import OBJECTIVES, PlannerConfig

BLOCKS = ("scene", "channel", "power", "experiment")

# flag name -> (block, key)
OVERRIDES = {
    "seed": ("experiment", "seed"),
    "trials": ("experiment", "trials"),
    "n1": ("experiment", "n1"),
    "n2": ("experiment", "n2"),
    "sd_distance": ("scene", "sd_distance"),
    "battery_wh": ("power", "battery_wh"),
}


def default_config() -> dict:
    """The shipped defaults (the reference parameter table)."""
    text = resources.files("skyplanner").joinpath("data/defaults.json").read_text()
    return json.loads(text)


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(path: str | Path | None = None) -> dict:
    """Defaults, overlaid by the file at ``path`` when given."""
    cfg = default_config()
    if path is None:
        return cfg
    try:
        user = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidParameterError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(user, dict):
        raise InvalidParameterError("config must be a JSON object")
    unknown = set(user) - set(BLOCKS)
    if unknown:
        raise InvalidParameterError(f"unknown config blocks: {sorted(unknown)}")
    return _merge(cfg, user)


def apply_overrides(cfg: dict, **flags) -> dict:
    """Return a copy with non-None flag values written into their blocks."""
    out = copy.deepcopy(cfg)
    for name, value in flags.items():
        if value is None:
            continue
        if name == "objective":
            out["experiment"]["objectives"] = list(OBJECTIVES) if value == "both" else [value]
            continue
        block, key = OVERRIDES[name]
        out[block][key] = value
    return out


def scene_params(cfg: dict) -> SceneParams:
    sc = cfg["scene"]
    return SceneParams(
        lambda_tbs=float(sc["lambda_tbs"]),
        lambda_type1=float(sc["lambda_type1"]),
        lambda_type2=float(sc["lambda_type2"]),
        sd_distance=float(sc["sd_distance"]),
        window_margin=float(sc["window_margin"]),
        cluster_radius=float(cfg["channel"]["r_c_m"]),
        devices_per_cluster=int(sc["devices_per_cluster"]),
    )


def planner_config(cfg: dict) -> PlannerConfig:
    ex = cfg["experiment"]
    try:
        return PlannerConfig(
            scene=scene_params(cfg),
            channel=ChannelParams.from_config(cfg["channel"]),
            power=PowerProfile.from_config(cfg["power"]),
            n1=int(ex["n1"]),
            n2=int(ex["n2"]),
            demands=(float(ex["m1_bithz"]), float(ex["m2_bithz"])),
            enumeration_cap=int(ex["enumeration_cap"]),
            unit_time_mode=str(ex["unit_time_mode"]),
        )
    except KeyError as exc:
        raise InvalidParameterError(f"missing config key {exc}") from exc
