"""Experiment configuration schemas for the command-line tools.

Defaults live in ``plgrad/configs/<command>.json``; a user config file and
then command-line flags are layered on top.  Unknown keys are rejected.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .estimators import ALL_ESTIMATORS, STOCHASTIC
from .plackett_luce import MAX_ENUM_K

EstimatorName = Literal["exact", "reinforce", "relax", "rebar"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class ToyConfig(_Strict):
    k: int = Field(ge=2)
    t: float
    estimator: EstimatorName
    iters: int = Field(ge=1)
    lr_theta: float = Field(gt=0)
    lr_phi: float = Field(gt=0)
    batch_size: int = Field(ge=1)
    hidden: int = Field(ge=1)
    seed: int
    log_every: int = Field(ge=1)
    variance_probe_n: int = Field(ge=2)
    mc_probe_n: int = Field(ge=1)
    out: str

    @model_validator(mode="after")
    def _check(self):
        if self.estimator == "exact" and self.k > MAX_ENUM_K:
            raise ValueError(f"exact estimator needs k <= {MAX_ENUM_K}")
        if 1.0 / self.k - self.t / (self.k - 1) < 0:
            raise ValueError("t too large: target matrix would have negative entries")
        return self


class CausalCliConfig(_Strict):
    nodes: int = Field(ge=2)
    graph: Literal["er", "sf"]
    edges_mult: float = Field(gt=0)
    lam: float = Field(alias="lambda", ge=0)
    n_train: int = Field(ge=1)
    n_val: int = Field(ge=1)
    threshold: float = Field(gt=0)
    seeds: list[int] = Field(min_length=1)
    iters: int = Field(ge=1)
    lr_theta: float = Field(gt=0)
    lr_phi: float = Field(gt=0)
    batch_size: int = Field(ge=1)
    hidden: int = Field(ge=1)
    log_every: int = Field(ge=1)
    variance_probe_n: int = Field(ge=2)
    mc_probe_n: int = Field(ge=1)
    fista_max_iters: int = Field(ge=1)
    fista_tol: float = Field(gt=0)
    workers: int = Field(ge=1)
    out: str
    artifacts: Optional[str] = None

    @model_validator(mode="after")
    def _check(self):
        if self.graph == "sf" and not (self.edges_mult == int(self.edges_mult)
                                       and 1 <= self.edges_mult < self.nodes):
            raise ValueError("scale-free graphs need an integer edges_mult in [1, nodes)")
        return self


class DiagConfig(_Strict):
    k: int = Field(ge=2)
    t: float
    estimators: list[EstimatorName] = Field(min_length=1)
    n: int = Field(ge=2)
    seed: int
    theta: Optional[list[float]] = None
    theta_range: float = Field(ge=0)
    hidden: int = Field(ge=1)
    out: Optional[str] = None

    @model_validator(mode="after")
    def _check(self):
        if self.theta is not None and len(self.theta) != self.k:
            raise ValueError("theta length must equal k")
        if "exact" in self.estimators and self.k > MAX_ENUM_K:
            raise ValueError(f"exact estimator needs k <= {MAX_ENUM_K}")
        return self


SCHEMAS = {"toy": ToyConfig, "causal": CausalCliConfig, "diag": DiagConfig}


def defaults(command: str) -> dict:
    text = resources.files("plgrad").joinpath("configs", f"{command}.json").read_text()
    return json.loads(text)


def resolve(command: str, config_path: str | None, overrides: dict) -> BaseModel:
    """Defaults < config file < non-None overrides, validated by the command's schema."""
    schema = SCHEMAS[command]
    merged = defaults(command)
    if config_path:
        user = json.loads(Path(config_path).read_text())
        if not isinstance(user, dict):
            raise ValueError("config file must hold a JSON object")
        schema.model_validate({**merged, **user})  # rejects unknown keys early
        merged.update(user)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return schema.model_validate(merged)


def dump(cfg: BaseModel) -> dict:
    return cfg.model_dump(by_alias=True)


__all__ = ["ToyConfig", "CausalCliConfig", "DiagConfig", "resolve", "defaults", "dump",
           "ALL_ESTIMATORS", "STOCHASTIC"]
