"""Experiment configuration: YAML loading, validation, canonical hashing.

An empty config reproduces the baseline experiment set exactly; every field
has the baseline default.  Collar strikes default to K1 = 40, K2 = 50.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

import yaml

from .contracts import ContractSpec, Family, GridSpec, MarketParams, make_contract
from .errors import ConfigError
from .hjb import RegulatorySpec
from .simulate import SimConfig

DEFAULT_K1 = 40.0
DEFAULT_K2 = 50.0

_DEFAULT_FAMILIES = ("linear_physical", "linear_cash",
                     "collar_physical", "collar_cash")

_SWEEPABLE = tuple(f.name for f in dataclasses.fields(MarketParams)) + \
    tuple(f.name for f in dataclasses.fields(RegulatorySpec))


@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple

    def __post_init__(self):
        if self.param not in _SWEEPABLE:
            raise ConfigError(
                f"sweep.param: {self.param!r} is not a model or regulatory field "
                f"(one of {', '.join(_SWEEPABLE)})")
        if len(self.values) == 0:
            raise ConfigError("sweep.values: must be non-empty")


@dataclass(frozen=True)
class ExperimentConfig:
    params: MarketParams = MarketParams()
    grid: GridSpec = GridSpec()
    contracts: tuple[ContractSpec, ...] = ()
    regulatory: RegulatorySpec | None = None
    sim: SimConfig = SimConfig()
    sweep: SweepSpec | None = None
    output_dir: str = "out"

    def canonical_dict(self) -> dict:
        d = {
            "params": dataclasses.asdict(self.params),
            "grid": dataclasses.asdict(self.grid),
            "contracts": [_contract_dict(c) for c in self.contracts],
            "regulatory": dataclasses.asdict(self.regulatory) if self.regulatory else None,
            "sim": dataclasses.asdict(self.sim),
            "sweep": {"param": self.sweep.param, "values": list(self.sweep.values)}
            if self.sweep else None,
        }
        return d

    def config_hash(self) -> str:
        return sha256_of(self.canonical_dict())

    def with_params(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, params=self.params.replace(**kw))


def _contract_dict(c: ContractSpec) -> dict:
    return {"family": c.family.value, "K1": c.K1, "K2": c.K2,
            "liquidation_target": c.liquidation_target}


def sha256_of(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=repr)
    return hashlib.sha256(blob.encode()).hexdigest()


def _build_contract(entry, params: MarketParams) -> ContractSpec:
    if isinstance(entry, str):
        entry = {"family": entry}
    if not isinstance(entry, dict) or "family" not in entry:
        raise ConfigError(f"contracts: expected family name or mapping, got {entry!r}")
    try:
        family = Family(entry["family"])
    except ValueError:
        raise ConfigError(f"contracts.family: unknown family {entry['family']!r}") from None
    k1 = entry.get("K1", DEFAULT_K1 if family.is_collar else None)
    k2 = entry.get("K2", DEFAULT_K2 if family.is_collar else None)
    return make_contract(family, params, K1=k1, K2=k2)


def _filtered_kwargs(cls, section: dict, where: str) -> dict:
    names = {f.name for f in dataclasses.fields(cls)}
    bad = set(section) - names
    if bad:
        raise ConfigError(f"{where}: unknown field(s) {sorted(bad)}")
    return section


def config_from_dict(raw: dict | None) -> ExperimentConfig:
    """Build a validated config; omitted sections fall back to baseline defaults."""
    raw = dict(raw or {})
    known = {"params", "grid", "contracts", "regulatory", "sim", "sweep", "output_dir"}
    bad = set(raw) - known
    if bad:
        raise ConfigError(f"config: unknown section(s) {sorted(bad)}")
    try:
        params = MarketParams(**_filtered_kwargs(MarketParams, raw.get("params", {}) or {},
                                                 "params"))
        grid = GridSpec(**_filtered_kwargs(GridSpec, raw.get("grid", {}) or {}, "grid"))
        sim = SimConfig(**_filtered_kwargs(SimConfig, raw.get("sim", {}) or {}, "sim"))
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    entries = raw.get("contracts", list(_DEFAULT_FAMILIES))
    contracts = tuple(_build_contract(e, params) for e in entries)
    reg = None
    if raw.get("regulatory") is not None:
        reg = RegulatorySpec(**_filtered_kwargs(RegulatorySpec, raw["regulatory"],
                                                "regulatory"))
    sweep = None
    if raw.get("sweep") is not None:
        s = raw["sweep"]
        if not isinstance(s, dict) or "param" not in s or "values" not in s:
            raise ConfigError("sweep: expected mapping with param and values")
        sweep = SweepSpec(param=s["param"], values=tuple(s["values"]))
    return ExperimentConfig(params=params, grid=grid, contracts=contracts,
                            regulatory=reg, sim=sim, sweep=sweep,
                            output_dir=raw.get("output_dir", "out"))


def load_config(path: str | None) -> ExperimentConfig:
    """Load a YAML config file; None or an empty file yields the baseline config."""
    if path is None:
        return config_from_dict(None)
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if raw is not None and not isinstance(raw, dict):
        raise ConfigError("config file must contain a mapping at top level")
    return config_from_dict(raw)
