"""INI run configuration.

Shared parameters live in ``[experiment]``; a section named after a command
(``[sweep-gamma]``, ``[heatmap]``, ...) overrides them for that command only.
The physical parameters have no defaults and must be stated explicitly.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import asdict, dataclass, fields, replace
from typing import Any

from .errors import ParameterError
from .simengine import ExperimentConfig

REQUIRED_KEYS = ("n_nodes", "radius", "alpha", "c0", "p_swap")
COMMANDS = ("sweep-gamma", "optimal-gamma", "heatmap", "distance", "multipair", "fairness", "bounds", "hopfit")
BASE_SECTION = "experiment"


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class StudyOptions:
    """Knobs for the analysis pipelines on top of the simulation parameters."""

    ensemble: int = 2000
    f_r_list: tuple[int, ...] = (10, 20, 30, 40)
    pair_counts: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    n_bins: int = 12
    min_bin_count: int = 1
    level: float = 0.95
    min_rank_count: int = 30
    hopfit_ensemble: str = "topologies"
    hopfit_min_ranks: int = 16
    heatmap_method: str = "analytic"
    heatmap_resolution: int = 8
    alpha_min: float = 0.5
    alpha_max: float = 4.0
    p_swap_min: float = 0.6
    p_swap_max: float = 1.0
    raw: bool = False

    def __post_init__(self):
        for name in ("ensemble", "n_bins", "min_bin_count", "min_rank_count", "heatmap_resolution"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be positive")
        if self.n_bins < 2:
            raise ParameterError("n_bins must be at least 2")
        if not self.f_r_list or any(f < 1 for f in self.f_r_list):
            raise ParameterError("f_r_list must hold positive loads")
        if not self.pair_counts or any(r < 1 for r in self.pair_counts):
            raise ParameterError("pair_counts must hold positive counts")
        if not 0 < self.level < 1:
            raise ParameterError("level must lie in (0, 1)")
        if self.hopfit_ensemble not in ("topologies", "windows"):
            raise ParameterError("hopfit_ensemble must be 'topologies' or 'windows'")
        if self.hopfit_min_ranks < 0:
            raise ParameterError("hopfit_min_ranks must be non-negative")
        if self.heatmap_method not in ("analytic", "simulation"):
            raise ParameterError("heatmap_method must be 'analytic' or 'simulation'")
        if not 0 <= self.alpha_min <= self.alpha_max:
            raise ParameterError("need 0 <= alpha_min <= alpha_max")
        if not 0 <= self.p_swap_min <= self.p_swap_max <= 1:
            raise ParameterError("need 0 <= p_swap_min <= p_swap_max <= 1")


@dataclass(frozen=True)
class RunConfig:
    experiment: ExperimentConfig
    study: StudyOptions

    def quick(self) -> "RunConfig":
        """Desk-scale variant: windows and ensembles cut tenfold."""
        return RunConfig(
            self.experiment.replace(windows=max(10, self.experiment.windows // 10)),
            replace(self.study, ensemble=max(50, self.study.ensemble // 10)),
        )

    def with_seed(self, seed: int) -> "RunConfig":
        return RunConfig(self.experiment.replace(seed=seed), self.study)

    def to_dict(self) -> dict[str, Any]:
        d = self.experiment.to_dict()
        study = asdict(self.study)
        study["f_r_list"] = list(self.study.f_r_list)
        study["pair_counts"] = list(self.study.pair_counts)
        return {"experiment": d, "study": study}


_EXP_FIELDS = {f.name: f for f in fields(ExperimentConfig)}
_STUDY_FIELDS = {f.name: f for f in fields(StudyOptions)}

_INT_TUPLES = {"f_r_list", "pair_counts"}
_FLOAT_TUPLES = {"gammas"}


def _convert(key: str, raw: str, default: Any) -> Any:
    text = raw.strip()
    try:
        if key in _FLOAT_TUPLES:
            return tuple(float(x) for x in text.replace(",", " ").split())
        if key in _INT_TUPLES:
            return tuple(int(x) for x in text.replace(",", " ").split())
        if isinstance(default, bool):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"cannot parse value {raw!r} for key {key!r}", key) from None


def _format(value: Any) -> str:
    if isinstance(value, (tuple, list)):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config(text: str, command: str | None = None) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    for section in parser.sections():
        if section not in (BASE_SECTION, "study") and section not in COMMANDS:
            raise ConfigError(f"unknown section [{section}]", section)
    values: dict[str, str] = {}
    for section in (BASE_SECTION, "study", command):
        if section and parser.has_section(section):
            values.update(parser.items(section))
    for key in values:
        if key not in _EXP_FIELDS and key not in _STUDY_FIELDS:
            raise ConfigError(f"unknown key {key!r}", key)
    for key in REQUIRED_KEYS:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}", key)

    exp_kw = {k: _convert(k, v, _EXP_FIELDS[k].default) for k, v in values.items() if k in _EXP_FIELDS}
    study_kw = {k: _convert(k, v, _STUDY_FIELDS[k].default) for k, v in values.items() if k in _STUDY_FIELDS}
    try:
        experiment = ExperimentConfig(**exp_kw)
    except ParameterError as exc:
        key = next((k for k in exp_kw if k in str(exc)), None)
        raise ConfigError(str(exc), key) from None
    try:
        study = StudyOptions(**study_kw)
    except ParameterError as exc:
        key = next((k for k in study_kw if k in str(exc)), None)
        raise ConfigError(str(exc), key) from None
    return RunConfig(experiment, study)


def load_config(path, command: str | None = None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, command)


def dump_config(cfg: RunConfig) -> str:
    """Serialise a resolved config; ``parse_config(dump_config(c)) == c``."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser[BASE_SECTION] = {k: _format(getattr(cfg.experiment, k)) for k in _EXP_FIELDS}
    parser["study"] = {k: _format(getattr(cfg.study, k)) for k in _STUDY_FIELDS}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
