"""JSON run configuration.

Example (the bundled ``fig2d`` config)::

    {
      "servo": {"J_m": 0.25, "J_mn": 0.25, "J_mi": 0.125},
      "environment": {"D_env": 50, "K_env": 10000},
      "dob": {"bandwidth": 500},
      "rtob": {"bandwidth": 1000},
      "controller": {"C_f": 2}
    }

Observer ``model`` is ``"constant"`` (default), ``{"periodic": {"omega": w}}``
or ``{"custom": {"A": [[...]], "C": [[...]]}}``; an explicit ``gain`` (k x 2)
replaces the conventional one.  Unknown keys are rejected everywhere.
"""

from __future__ import annotations

import json
import os
from importlib import resources
from pathlib import Path
from typing import Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveFloat, ValidationError, field_validator

from .errors import ConfigError, RfcError
from .observer import DisturbanceModel
from .pipeline import Design, ObserverSpec
from .plant import Environment, Noise, ServoParams
from .sim import DEFAULT_DT, DEFAULT_T_END, Scenario

BUNDLED = ("fig2a", "fig2b", "fig2c", "fig2d", "fig3")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ServoCfg(_Strict):
    J_m: PositiveFloat
    J_mn: PositiveFloat
    J_mi: PositiveFloat
    b_m: NonNegativeFloat = 0.0
    b_mn: NonNegativeFloat = 0.0
    b_mi: NonNegativeFloat = 0.0


class EnvironmentCfg(_Strict):
    D_env: NonNegativeFloat
    K_env: NonNegativeFloat


class _Periodic(_Strict):
    omega: PositiveFloat


class PeriodicModelCfg(_Strict):
    periodic: _Periodic


class _Custom(_Strict):
    A: list[list[float]]
    C: list[list[float]]


class CustomModelCfg(_Strict):
    custom: _Custom


class ObserverCfg(_Strict):
    bandwidth: PositiveFloat
    model: Union[Literal["constant"], PeriodicModelCfg, CustomModelCfg] = "constant"
    gain: list[list[float]] | None = None

    def to_spec(self) -> ObserverSpec:
        if self.model == "constant":
            model = DisturbanceModel.constant()
        elif isinstance(self.model, PeriodicModelCfg):
            model = DisturbanceModel.periodic(self.model.periodic.omega)
        else:
            model = DisturbanceModel(np.array(self.model.custom.A), np.array(self.model.custom.C))
        gain = None if self.gain is None else np.array(self.gain, dtype=float)
        return ObserverSpec(self.bandwidth, model, gain)


class ControllerCfg(_Strict):
    C_f: NonNegativeFloat = 2.0


class SimCfg(_Strict):
    dt: PositiveFloat = DEFAULT_DT
    t_end: PositiveFloat = DEFAULT_T_END
    tau_ref: float = 1.0
    tau_u: float = 0.0
    noise_std: NonNegativeFloat = 0.0
    seed: int = 0
    tau_i_mode: Literal["explicit", "model-derived"] = "explicit"


class AnalysisCfg(_Strict):
    gain_grid: list[PositiveFloat] | None = Field(default=None, min_length=1)
    literal_output_inertia: bool = False

    @field_validator("gain_grid")
    @classmethod
    def _ascending(cls, v):
        if v is not None and any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("gain_grid must be strictly ascending")
        return v


class Config(_Strict):
    servo: ServoCfg
    environment: EnvironmentCfg
    dob: ObserverCfg
    rtob: ObserverCfg
    controller: ControllerCfg = ControllerCfg()
    sim: SimCfg = SimCfg()
    analysis: AnalysisCfg = AnalysisCfg()

    def design(self) -> Design:
        s = self.servo
        try:
            return Design(
                servo=ServoParams(s.J_m, s.J_mn, s.J_mi, s.b_m, s.b_mn, s.b_mi),
                env=Environment(self.environment.D_env, self.environment.K_env),
                dob_spec=self.dob.to_spec(),
                rtob_spec=self.rtob.to_spec(),
                C_f=self.controller.C_f,
                literal_output_inertia=self.analysis.literal_output_inertia,
            )
        except RfcError as exc:
            raise ConfigError(str(exc)) from exc

    def scenario(self, seed: int | None = None) -> Scenario:
        sc = self.sim
        try:
            return Scenario(
                tau_ref=sc.tau_ref, tau_u=sc.tau_u, dt=sc.dt, t_end=sc.t_end,
                noise=Noise(sc.noise_std, sc.seed if seed is None else seed),
                tau_i_mode=sc.tau_i_mode,
            )
        except RfcError as exc:
            raise ConfigError(f"sim: {exc}") from exc


def _format_validation(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"])
        lines.append(f"{loc}: {err['msg']}")
    return "; ".join(lines)


def parse_config(data: dict) -> Config:
    try:
        cfg = Config.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from None
    try:
        design = cfg.design()
        design.dob, design.rtob  # observer synthesis re-validates shapes and observability
    except RfcError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def resolve_path(path: str | os.PathLike) -> Path | resources.abc.Traversable:
    p = Path(path)
    if p.exists():
        return p
    name = p.name[:-5] if p.name.endswith(".json") else p.name
    if name in BUNDLED and p.parent == Path("."):
        return resources.files("rfc").joinpath("configs", f"{name}.json")
    raise ConfigError(f"config file not found: {path}")


def load_config(path: str | os.PathLike) -> Config:
    src = resolve_path(path)
    try:
        text = src.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return parse_config(data)


def with_value(cfg: Config, dotted: str, value: float) -> Config:
    """Copy of ``cfg`` with one numeric field replaced (``"servo.J_mi"`` etc.)."""
    data = cfg.model_dump(mode="json")
    node = data
    parts = dotted.split(".")
    for p in parts[:-1]:
        if not isinstance(node, dict) or p not in node:
            raise ConfigError(f"unknown parameter {dotted!r}")
        node = node[p]
    leaf = parts[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise ConfigError(f"unknown parameter {dotted!r}")
    current = node[leaf]
    if isinstance(current, bool) or not isinstance(current, (int, float)):
        raise ConfigError(f"parameter {dotted!r} is not numeric")
    node[leaf] = value
    return parse_config(data)
