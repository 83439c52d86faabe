import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError
from .k3_geometry import ChartParams
from .monomial_basis import SCHEME_DEGREES
from .utils import (DEFAULT_MAX_STEPS, DEFAULT_RULES, DEFAULT_TOL, KAPPA_MAX, REFINE_KAPPA,
                    REFINE_KAPPA_STEPS, TOY_VARIANTS)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    k: int = 6
    resolution: tuple = None
    kappa: tuple = (REFINE_KAPPA,)
    steps: int = None
    tol: float = DEFAULT_TOL
    max_steps: int = DEFAULT_MAX_STEPS
    min_steps: int = 0
    threads: int = None
    cache_dir: str = None
    output: str = None
    variant: str = 't'
    start: tuple = None
    radial_resolution: int = 400
    bins: tuple = None
    params: object = None
    chart: ChartParams = field(default_factory=ChartParams)

    @property
    def rule_resolution(self):
        if self.resolution is not None:
            return tuple(self.resolution)
        return DEFAULT_RULES.get(self.k, DEFAULT_RULES[6])

    @property
    def n_jobs(self):
        return self.threads if self.threads is not None else (os.cpu_count() or 1)

    def with_overrides(self, **overrides):
        """Replace every field whose override is not None"""
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"Unknown configuration keys: {sorted(unknown)}")
        values = {key: _coerce(key, value) for key, value in overrides.items() if value is not None}
        return replace(self, **values)

    def validate(self, k3=False):
        if self.resolution is not None:
            if len(self.resolution) != 4 or min(self.resolution) < 4:
                raise ConfigError(f"resolution needs four values >= 4, got {self.resolution}")
        if any(not 0 < kappa < KAPPA_MAX for kappa in self.kappa):
            raise ConfigError(f"kappa must lie in (0, 2e), got {self.kappa}")
        if self.steps is not None and self.steps < 0:
            raise ConfigError(f"steps must be >= 0, got {self.steps}")
        if self.tol <= 0 or self.max_steps < 1:
            raise ConfigError(f"Need tol > 0 and max_steps >= 1, got {self.tol}, {self.max_steps}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.radial_resolution < 4:
            raise ConfigError(f"radial_resolution must be >= 4, got {self.radial_resolution}")
        if self.variant not in TOY_VARIANTS:
            raise ConfigError(f"Unknown toy variant '{self.variant}'; expected one of {TOY_VARIANTS}")
        if k3 and self.k not in SCHEME_DEGREES:
            raise ConfigError(f"K3 commands support k in {SCHEME_DEGREES}, got {self.k}")
        if self.k < 1:
            raise ConfigError(f"k must be positive, got {self.k}")
        return self


def _coerce(key, value):
    if key in ('resolution', 'start', 'bins'):
        return tuple(value)
    if key == 'kappa':
        return tuple(float(v) for v in value) if isinstance(value, (list, tuple)) else (float(value),)
    if key == 'chart':
        return value if isinstance(value, ChartParams) else ChartParams.from_dict(value)
    return value


def load_config(path=None):
    """RunConfig from a TOML file with flat keys and an optional [chart] table"""
    if path is None:
        return RunConfig()
    try:
        with open(path, 'rb') as handle:
            data = tomllib.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Invalid config file {path}: {e}") from None
    logger.info(f"Loaded configuration from {path}")
    return RunConfig().with_overrides(**data)
