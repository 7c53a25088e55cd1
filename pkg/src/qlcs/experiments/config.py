"""Experiment configuration: YAML files validated against a strict schema.

Unknown keys anywhere in the file are rejected with the dotted path of the
offending key, since a silently ignored typo would change an experiment
without notice. ``--override a.b=value`` edits are applied to the raw mapping
before validation, with ``value`` parsed as YAML.
"""
import copy
from dataclasses import MISSING, asdict, dataclass, field, fields
from pathlib import Path

import yaml

from ..greedy import GreedyConfig, SubsolverConfig
from ..operators import EnsembleSpec

EXPERIMENTS = ("fig1_ratemap", "fig4_phase_greedy", "fig6_threshold_grid", "astero_demo",
               "probe_suite")


class ConfigError(Exception):
    pass


@dataclass
class GridSection:
    k: list = field(default_factory=lambda: [1])
    # second axis: measurement counts (fig4) or signal norms (fig6)
    n: list = field(default_factory=list)
    norms: list = field(default_factory=list)


@dataclass
class ISTSection:
    # alpha_0 = alpha_factor * ||F(0)* b||_inf, then `stages` values down to
    # alpha_0 * 10^-path_decades, each stage warm-started
    alpha_factor: float = 0.1
    stages: int = 5
    path_decades: float = 4.0
    max_iters: int = 2000
    stop_tol: float = 1e-10
    # divide F and b by an upper bound of ||F(x)||_2 so the unit step is stable
    rescale: bool = True


@dataclass
class IHTSection:
    mu: float = 0.0  # 0 selects the refreshed spectral-norm rule
    max_iters: int = 2000
    stop_tol: float = 1e-10
    mu_refresh: int = 10


@dataclass
class RateMapSection:
    k: list = field(default_factory=lambda: [2])
    thresholds: list = field(default_factory=lambda: [0.5, 2.0, 8.0])
    # angles on the circle for k=2; polar steps for k=3 (azimuth gets twice as many)
    resolution: int = 72
    resolution_k3: int = 18
    draws: int = 50
    p: float = 2.0


@dataclass
class AsteroCase:
    name: str = "sparse2"
    k: int = 2
    # support drawn from the first `band` frequencies
    band: int = 6
    # amplitudes kappa^0, kappa^1, ... in random order with random signs
    kappa: float = 0.5
    # greedy steps (defaults to k)
    steps: int = 0
    # "sparse": exactly k nonzeros; "decaying": every entry nonzero, |x_i| ~ kappa^i
    signal: str = "sparse"


@dataclass
class AsteroSection:
    cases: list = field(default_factory=lambda: [AsteroCase()])
    seeds: list = field(default_factory=lambda: list(range(10)))
    phi_points: int = 201


@dataclass
class ProbeSection:
    trials: int = 2000
    k: int = 2


@dataclass
class ExperimentConfig:
    experiment: str
    ensemble: EnsembleSpec
    seed: int = 0
    trials: int = 1
    success_tol: float = 1e-3
    grid: GridSection = field(default_factory=GridSection)
    greedy: GreedyConfig = field(default_factory=GreedyConfig)
    ist: ISTSection = field(default_factory=ISTSection)
    iht: IHTSection = field(default_factory=IHTSection)
    ratemap: RateMapSection = field(default_factory=RateMapSection)
    astero: AsteroSection = field(default_factory=AsteroSection)
    probe: ProbeSection = field(default_factory=ProbeSection)
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: unknown value {self.experiment!r}; "
                              f"expected one of {', '.join(EXPERIMENTS)}")
        if self.trials < 1:
            raise ConfigError("trials: must be >= 1")
        if not self.grid.k:
            raise ConfigError("grid.k: must be nonempty")
        if self.workers < 1:
            raise ConfigError("workers: must be >= 1")

    def to_dict(self):
        return asdict(self)


# nested dataclass types by (class, field name); lists of dataclasses marked with a 1-tuple
_NESTED = {
    (ExperimentConfig, "ensemble"): EnsembleSpec,
    (ExperimentConfig, "grid"): GridSection,
    (ExperimentConfig, "greedy"): GreedyConfig,
    (ExperimentConfig, "ist"): ISTSection,
    (ExperimentConfig, "iht"): IHTSection,
    (ExperimentConfig, "ratemap"): RateMapSection,
    (ExperimentConfig, "astero"): AsteroSection,
    (ExperimentConfig, "probe"): ProbeSection,
    (GreedyConfig, "subsolver"): SubsolverConfig,
    (AsteroSection, "cases"): (AsteroCase,),
}


def _coerce(value, default, path):
    """Light type check against the default's type (ints accepted for floats)."""
    if default is MISSING or default is None:
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
    elif isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
    elif isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        value = float(value)
    elif isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
    elif isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
    return value


def _default_of(f):
    if f.default is not MISSING:
        return f.default
    if f.default_factory is not MISSING:
        return f.default_factory()
    return MISSING


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or '<root>'}: expected a mapping, got {type(data).__name__}")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        where = ", ".join(f"{path}.{u}" if path else u for u in unknown)
        raise ConfigError(f"unknown key(s): {where}")
    kwargs = {}
    for name, value in data.items():
        sub = f"{path}.{name}" if path else name
        nested = _NESTED.get((cls, name))
        if isinstance(nested, tuple):
            if not isinstance(value, list):
                raise ConfigError(f"{sub}: expected a list")
            kwargs[name] = [_build(nested[0], v, f"{sub}[{i}]") for i, v in enumerate(value)]
        elif nested is not None:
            kwargs[name] = _build(nested, value, sub)
        else:
            kwargs[name] = _coerce(value, _default_of(known[name]), sub)
    missing = [n for n, f in known.items() if n not in kwargs and _default_of(f) is MISSING]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(f'{path}.{m}' if path else m for m in missing)}")
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path or '<root>'}: {exc}") from None


def parse_override(text):
    """``'a.b=value'`` -> (['a', 'b'], parsed value)."""
    if "=" not in text:
        raise ConfigError(f"override {text!r}: expected key=value")
    key, raw = text.split("=", 1)
    keys = [k for k in key.strip().split(".") if k]
    if not keys:
        raise ConfigError(f"override {text!r}: empty key")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"override {text!r}: {exc}") from None
    return keys, value


def apply_overrides(raw, overrides):
    raw = copy.deepcopy(raw)
    for text in overrides or ():
        keys, value = parse_override(text)
        node = raw
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {text!r}: {k} is not a mapping")
        node[keys[-1]] = value
    return raw


def config_from_dict(raw, overrides=None):
    return _build(ExperimentConfig, apply_overrides(raw, overrides), "")


def load_config(path, overrides=None):
    """Read and validate a YAML experiment config; raises ConfigError naming
    the path (or the offending key) on any problem."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if raw is None:
        raise ConfigError(f"{path}: empty config")
    try:
        return config_from_dict(raw, overrides)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def dump_config(cfg):
    """YAML text for a validated config (round-trips through ``config_from_dict``)."""
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
