"""Rotary-wing power model and the constant power profile used by every ledger."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from skyplanner.errors import InvalidParameterError

GRAVITY = 9.81
WH_TO_J = 3600.0


@dataclass(frozen=True)
class RotorParams:
    """Blade-element constants of a rotary-wing airframe.

    Defaults describe a small quadrotor whose all-up weight is 20 N.
    ``P0`` is the blade profile power and ``Pi`` the induced power in hover.
    """

    P0: float = 79.86
    Pi: float = 88.63
    U_tip: float = 120.0
    v0: float = 4.03
    d0: float = 0.6
    rho_air: float = 1.225
    s_solidity: float = 0.05
    A_disc: float = 0.503
    delta: float = 0.012
    Omega: float = 300.0
    R_rotor: float = 0.4
    k_corr: float = 0.1

    def __post_init__(self):
        for name in ("P0", "U_tip", "v0", "rho_air", "s_solidity", "A_disc"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be positive")
        for name in ("Pi", "d0", "delta", "Omega", "R_rotor", "k_corr"):
            if getattr(self, name) < 0:
                raise InvalidParameterError(f"{name} must be non-negative")

    def with_weight(self, weight_n: float) -> RotorParams:
        """Same airframe carrying a different all-up weight (newtons)."""
        if not weight_n > 0:
            raise InvalidParameterError("weight must be positive")
        two_rho_a = 2.0 * self.rho_air * self.A_disc
        return replace(
            self,
            Pi=(1.0 + self.k_corr) * weight_n**1.5 / math.sqrt(two_rho_a),
            v0=math.sqrt(weight_n / two_rho_a),
        )


def rotor_power(V, rotor: RotorParams):
    """Propulsion power (W) in level flight at speed V (m/s)."""
    V = np.asarray(V, dtype=float)
    if np.any(V < 0):
        raise InvalidParameterError("speed must be non-negative")
    blade = rotor.P0 * (1.0 + 3.0 * V**2 / rotor.U_tip**2)
    x = V**2 / rotor.v0**2
    induced = rotor.Pi * np.sqrt(np.sqrt(1.0 + x**2 / 4.0) - x / 2.0)
    parasite = 0.5 * rotor.d0 * rotor.rho_air * rotor.s_solidity * rotor.A_disc * V**3
    out = blade + induced + parasite
    return float(out) if out.ndim == 0 else out


def optimal_velocity(rotor: RotorParams, total_weight: float, v_cap: float = 60.0) -> float:
    """Speed minimizing energy per meter, p(V)/V, on (0, v_cap].

    Args:
        rotor: airframe constants; ``Pi`` and ``v0`` are recomputed for the weight.
        total_weight: all-up mass in kg.
        v_cap: largest admissible speed.
    """
    if not total_weight > 0:
        raise InvalidParameterError("total_weight must be positive")
    r = rotor.with_weight(total_weight * GRAVITY)
    per_meter = lambda v: rotor_power(v, r) / v  # noqa: E731

    grid = np.linspace(v_cap / 400, v_cap, 400)
    i = int(np.argmin(per_meter(grid)))
    if i == grid.size - 1:
        return float(v_cap)
    lo = grid[max(i - 1, 0)] if i > 0 else grid[0] / 2
    res = optimize.minimize_scalar(per_meter, bracket=(lo, grid[i], grid[i + 1]), method="golden",
                                   options={"xtol": 1e-8})
    return float(min(max(res.x, 1e-9), v_cap))


@dataclass(frozen=True)
class PowerProfile:
    """Motion and serving powers (W), cruise speeds (m/s) and battery (J).

    ``loaded`` means the package is still on board.
    """

    p_motion_loaded: float = 193.0
    p_motion_empty: float = 159.0
    p_serve_loaded: float = 252.0
    p_serve_empty: float = 178.0
    v_loaded: float = 20.0
    v_empty: float = 18.0
    battery_capacity: float = 177.6 * WH_TO_J
    payload: float = 1.0

    def __post_init__(self):
        for name in ("p_motion_loaded", "p_motion_empty", "p_serve_loaded", "p_serve_empty",
                     "v_loaded", "v_empty", "battery_capacity"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise InvalidParameterError(f"{name} must be positive and finite")
        if self.payload < 0:
            raise InvalidParameterError("payload must be non-negative")

    def motion(self, loaded: bool) -> tuple[float, float]:
        """(power, speed) while cruising."""
        return (self.p_motion_loaded, self.v_loaded) if loaded else (self.p_motion_empty, self.v_empty)

    def serve(self, loaded: bool) -> float:
        return self.p_serve_loaded if loaded else self.p_serve_empty

    def with_battery_wh(self, wh: float) -> PowerProfile:
        return replace(self, battery_capacity=wh * WH_TO_J)

    @classmethod
    def from_rotor(cls, rotor: RotorParams, airframe_kg: float, payload_kg: float, battery_wh: float) -> PowerProfile:
        """Derive a profile from the raw model: serving is hovering, motion is cruise at V*."""
        powers = {}
        for tag, mass in (("loaded", airframe_kg + payload_kg), ("empty", airframe_kg)):
            r = rotor.with_weight(mass * GRAVITY)
            v = optimal_velocity(rotor, mass)
            powers[tag] = (rotor_power(v, r), rotor_power(0.0, r), v)
        return cls(
            p_motion_loaded=powers["loaded"][0],
            p_motion_empty=powers["empty"][0],
            p_serve_loaded=powers["loaded"][1],
            p_serve_empty=powers["empty"][1],
            v_loaded=powers["loaded"][2],
            v_empty=powers["empty"][2],
            battery_capacity=battery_wh * WH_TO_J,
            payload=payload_kg,
        )

    @classmethod
    def from_config(cls, cfg: dict) -> PowerProfile:
        if cfg.get("rotor"):
            rc = dict(cfg["rotor"])
            airframe = rc.pop("airframe_kg")
            return cls.from_rotor(RotorParams(**rc), airframe, cfg["payload_kg"], cfg["battery_wh"])
        return cls(
            p_motion_loaded=cfg["p_m_loaded_w"],
            p_motion_empty=cfg["p_m_empty_w"],
            p_serve_loaded=cfg["p_s_loaded_w"],
            p_serve_empty=cfg["p_s_empty_w"],
            v_loaded=cfg["v_loaded_mps"],
            v_empty=cfg["v_empty_mps"],
            battery_capacity=cfg["battery_wh"] * WH_TO_J,
            payload=cfg["payload_kg"],
        )

    def to_config(self) -> dict:
        return {
            "p_m_loaded_w": self.p_motion_loaded,
            "p_m_empty_w": self.p_motion_empty,
            "p_s_loaded_w": self.p_serve_loaded,
            "p_s_empty_w": self.p_serve_empty,
            "v_loaded_mps": self.v_loaded,
            "v_empty_mps": self.v_empty,
            "battery_wh": self.battery_capacity / WH_TO_J,
            "payload_kg": self.payload,
        }
