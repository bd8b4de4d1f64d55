"""Scenario configuration: INI files parsed into a frozen ScenarioConfig"""

import configparser
import dataclasses
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from .discrete import plan_steps
from .errors import ConfigurationError
from .model import BathGrid, PhysicalParams, default_half_span, discretize_bath

logger = logging.getLogger(__name__)

ARTIFACTS = ("population", "concurrence", "spectrum", "e_atom", "e_modes", "e_modes_infinity", "peaks")
METHODS = ("discrete", "analytic", "both")
SWEEP_AXES = ("gamma", "coupling", "coupling_ratio", "detuning", "atom_frequency", "atom_population", "n_modes", "half_span")

DEFAULT_N_MODES = 2001
DEFAULT_DIRECTORY = "output"

# section -> accepted keys
SECTIONS = {
    "physical": ("gamma", "coupling", "coupling_ratio", "detuning", "atom_frequency"),
    "initial": ("atom_population",),
    "bath": ("n_modes", "half_span"),
    "time": ("t_end", "dt", "sample_every"),
    "output": ("directory", "artifacts", "method"),
    "quality": ("norm_drift_limit", "cross_method_tolerance"),
}

_REQUIRED = object()


@dataclass(frozen=True)
class ScenarioConfig:
    """
    One simulation scenario in absolute units.

    coupling is always the absolute Omega_0; a coupling_ratio given in a file is
    converted on load. half_span, dt and sample_every stay None until resolved.
    """

    gamma: float
    coupling: float
    t_end: float
    detuning: float = 0.0
    atom_frequency: float = 0.0
    atom_population: float = 1.0
    n_modes: int = DEFAULT_N_MODES
    half_span: Optional[float] = None
    dt: Optional[float] = None
    sample_every: Optional[int] = None
    directory: str = DEFAULT_DIRECTORY
    artifacts: Tuple[str, ...] = ARTIFACTS
    method: str = "analytic"
    norm_drift_limit: float = 1e-6
    cross_method_tolerance: float = 1e-3

    def __post_init__(self):
        self.validate()

    def validate(self):
        self.params()
        if not 0.0 < self.atom_population <= 1.0:
            raise ConfigurationError("atom_population", "must lie in (0, 1]")
        if self.n_modes < 2:
            raise ConfigurationError("n_modes", "must be at least 2")
        if self.half_span is not None and not (self.half_span > 0 and math.isfinite(self.half_span)):
            raise ConfigurationError("half_span", "must be positive")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ConfigurationError("t_end", "must be positive")
        if self.dt is not None and not self.dt > 0:
            raise ConfigurationError("dt", "must be positive")
        if self.sample_every is not None and self.sample_every < 1:
            raise ConfigurationError("sample_every", "must be at least 1")
        if self.method not in METHODS:
            raise ConfigurationError("method", f"must be one of {', '.join(METHODS)}")
        if not self.artifacts:
            raise ConfigurationError("artifacts", "at least one artifact is required")
        unknown = [name for name in self.artifacts if name not in ARTIFACTS]
        if unknown:
            raise ConfigurationError("artifacts", f"unknown artifact(s) {', '.join(unknown)}")
        if not self.norm_drift_limit > 0:
            raise ConfigurationError("norm_drift_limit", "must be positive")
        if not self.cross_method_tolerance > 0:
            raise ConfigurationError("cross_method_tolerance", "must be positive")

    @property
    def coupling_ratio(self) -> float:
        return self.coupling / self.gamma

    @property
    def initial_amplitude(self) -> float:
        return math.sqrt(self.atom_population)

    def params(self) -> PhysicalParams:
        try:
            return PhysicalParams.create(self.gamma, self.coupling, detuning=self.detuning, atom_frequency=self.atom_frequency)
        except ConfigurationError as exc:
            # The file calls omega0_coupling "coupling"
            if exc.key == "omega0_coupling":
                raise ConfigurationError("coupling", exc.message) from exc
            raise

    def grid(self, params: Optional[PhysicalParams] = None) -> BathGrid:
        params = params if params is not None else self.params()
        return discretize_bath(params, self.n_modes, self.half_span)

    def resolved(self) -> "ScenarioConfig":
        """Copy with half_span, dt and sample_every filled in"""
        params = self.params()
        half_span = self.half_span if self.half_span is not None else default_half_span(params)
        grid = discretize_bath(params, self.n_modes, half_span)
        plan = plan_steps(params, grid, self.t_end, self.dt, self.sample_every)
        return dataclasses.replace(self, half_span=half_span, dt=plan.dt, sample_every=plan.sample_every)

    def with_axis(self, axis: str, value: float) -> "ScenarioConfig":
        """The same scenario with one sweep axis set to value"""
        if axis not in SWEEP_AXES:
            raise ConfigurationError("axis", f"{axis!r} is not one of {', '.join(SWEEP_AXES)}")
        if axis == "coupling_ratio":
            return dataclasses.replace(self, coupling=value * self.gamma)
        if axis == "n_modes":
            if not float(value).is_integer():
                raise ConfigurationError("n_modes", f"{value!r} is not an integer")
            return dataclasses.replace(self, n_modes=int(value))
        return dataclasses.replace(self, **{axis: float(value)})

    def to_dict(self) -> Dict[str, Any]:
        data = dataclasses.asdict(self)
        data["artifacts"] = list(self.artifacts)
        data["coupling_ratio"] = self.coupling_ratio
        return data


def _get(parser: configparser.ConfigParser, section: str, key: str, convert, default: Any = _REQUIRED):
    if not parser.has_option(section, key):
        if default is _REQUIRED:
            raise ConfigurationError(key, "required")
        return default
    raw = parser.get(section, key).strip()
    try:
        return convert(raw)
    except ValueError as exc:
        raise ConfigurationError(key, f"cannot parse {raw!r}") from exc


def _to_int(raw: str) -> int:
    value = float(raw)
    if not value.is_integer():
        raise ValueError(raw)
    return int(value)


def _to_artifacts(raw: str) -> Tuple[str, ...]:
    return tuple(name.strip() for name in raw.split(",") if name.strip())


def _check_keys(parser: configparser.ConfigParser):
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigurationError(section, f"unknown section [{section}]")
        for key in parser.options(section):
            if key not in SECTIONS[section]:
                raise ConfigurationError(key, f"unknown key in [{section}]")


def parse_config(text: str) -> ScenarioConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError("config", f"malformed file ({exc})") from exc
    _check_keys(parser)

    gamma = _get(parser, "physical", "gamma", float)
    coupling = _get(parser, "physical", "coupling", float, None)
    coupling_ratio = _get(parser, "physical", "coupling_ratio", float, None)
    if coupling is not None and coupling_ratio is not None:
        raise ConfigurationError("coupling", "give either coupling or coupling_ratio, not both")
    if coupling is None:
        if coupling_ratio is None:
            raise ConfigurationError("coupling", "required (or coupling_ratio)")
        coupling = coupling_ratio * gamma

    return ScenarioConfig(
        gamma=gamma,
        coupling=coupling,
        detuning=_get(parser, "physical", "detuning", float, 0.0),
        atom_frequency=_get(parser, "physical", "atom_frequency", float, 0.0),
        atom_population=_get(parser, "initial", "atom_population", float, 1.0),
        n_modes=_get(parser, "bath", "n_modes", _to_int, DEFAULT_N_MODES),
        half_span=_get(parser, "bath", "half_span", float, None),
        t_end=_get(parser, "time", "t_end", float),
        dt=_get(parser, "time", "dt", float, None),
        sample_every=_get(parser, "time", "sample_every", _to_int, None),
        directory=_get(parser, "output", "directory", str, DEFAULT_DIRECTORY),
        artifacts=_get(parser, "output", "artifacts", _to_artifacts, ARTIFACTS),
        method=_get(parser, "output", "method", str, "analytic"),
        norm_drift_limit=_get(parser, "quality", "norm_drift_limit", float, 1e-6),
        cross_method_tolerance=_get(parser, "quality", "cross_method_tolerance", float, 1e-3),
    )


def load_config(path: Union[str, Path]) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError("config", f"cannot read {path}") from exc
    logger.debug("Loading scenario from %s", path)
    return parse_config(text)


def parse_values(text: str) -> List[float]:
    """Comma-separated sweep values"""
    values = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            values.append(float(item))
        except ValueError as exc:
            raise ConfigurationError("values", f"cannot parse {item!r}") from exc
    if not values:
        raise ConfigurationError("values", "empty value list")
    return values
