"""Experiment configuration: defaults, validation, and file parsing.

Config files are flat ``key = value`` text; blank lines and ``#``
comments are ignored and unknown keys are rejected.  See the README for
the full key reference.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .features import FeatureConfig
from .filters import FilterParams
from .reduce import GaConfig

STAGES = ("raw", "pca", "ga")

_FITNESS_MODES = {"inner": "inner", "outer": "outer", "paper-faithful": "outer"}
_MASK_MODES = ("per-permutation", "fixed")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a full sweep needs, with desk-scale defaults.

    ``permutations`` defaults to 100 for interactive use; a full-scale
    sweep typically raises it to 10000.
    """

    dataset: str = ""
    output: str = "results"
    cache: str = ""
    levels: int = 64
    filtered_levels: int = 0          # 0 means: same as levels
    cases: tuple[int, ...] = tuple(range(1, 32))
    permutations: int = 100
    train_fraction: float = 0.6
    seed: int = 0
    stages: tuple[str, ...] = STAGES
    workers: int = 1
    pca_threshold: float = 0.95
    tsallis_q: float = 1.5
    sato_k: int = 5
    gaussian_sigma: float = 2.0
    canny_sigma: float = 1.4
    canny_low_ratio: float = 0.4
    canny_high_percentile: float = 90.0
    ga_population: int = 50
    ga_mutation_rate: float = 0.01
    ga_elitism: int = 2
    ga_plateau_tol: float = 1e-5
    ga_max_generations: int = 200
    ga_tournament_size: int = 3
    ga_fitness_mode: str = "inner"
    ga_inner_fraction: float = 0.75
    ga_mask_mode: str = "per-permutation"

    def __post_init__(self):
        if self.permutations < 1:
            raise ConfigError("permutations must be >= 1")
        if not self.cases:
            raise ConfigError("at least one case must be selected")
        bad = [c for c in self.cases if not 1 <= c <= 31]
        if bad:
            raise ConfigError(f"cases must lie in [1, 31]: {bad}")
        if not self.stages:
            raise ConfigError("at least one stage must be selected")
        unknown = [s for s in self.stages if s not in STAGES]
        if unknown:
            raise ConfigError(f"unknown stages {unknown}; choose from {list(STAGES)}")
        if self.ga_fitness_mode not in _FITNESS_MODES:
            raise ConfigError(
                f"ga.fitness_mode must be one of {sorted(_FITNESS_MODES)}"
            )
        if self.ga_mask_mode not in _MASK_MODES:
            raise ConfigError(f"ga.mask_mode must be one of {list(_MASK_MODES)}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def effective_filtered_levels(self) -> int:
        return self.filtered_levels or self.levels

    @property
    def resolved_fitness_mode(self) -> str:
        return _FITNESS_MODES[self.ga_fitness_mode]

    def ordered_stages(self) -> tuple[str, ...]:
        return tuple(s for s in STAGES if s in self.stages)

    def filter_params(self) -> FilterParams:
        return FilterParams(
            gaussian_sigma=self.gaussian_sigma,
            canny_sigma=self.canny_sigma,
            canny_high_percentile=self.canny_high_percentile,
            canny_low_ratio=self.canny_low_ratio,
        )

    def feature_config(self) -> FeatureConfig:
        return FeatureConfig(
            levels=self.levels,
            tsallis_q=self.tsallis_q,
            sato_k=self.sato_k,
            filter_params=self.filter_params(),
            filtered_levels=self.filtered_levels or None,
        )

    def ga_config(self, seed: int) -> GaConfig:
        return GaConfig(
            population_size=self.ga_population,
            mutation_rate=self.ga_mutation_rate,
            elitism=self.ga_elitism,
            plateau_tol=self.ga_plateau_tol,
            max_generations=self.ga_max_generations,
            tournament_size=self.ga_tournament_size,
            seed=seed,
        )


_KEY_TO_FIELD = {
    "dataset": "dataset",
    "output": "output",
    "cache": "cache",
    "levels": "levels",
    "filtered_levels": "filtered_levels",
    "cases": "cases",
    "permutations": "permutations",
    "train_fraction": "train_fraction",
    "seed": "seed",
    "stages": "stages",
    "workers": "workers",
    "pca.threshold": "pca_threshold",
    "tsallis.q": "tsallis_q",
    "sato.k": "sato_k",
    "gaussian.sigma": "gaussian_sigma",
    "canny.sigma": "canny_sigma",
    "canny.low_ratio": "canny_low_ratio",
    "canny.high_percentile": "canny_high_percentile",
    "ga.population": "ga_population",
    "ga.mutation_rate": "ga_mutation_rate",
    "ga.elitism": "ga_elitism",
    "ga.plateau_tol": "ga_plateau_tol",
    "ga.max_generations": "ga_max_generations",
    "ga.tournament_size": "ga_tournament_size",
    "ga.fitness_mode": "ga_fitness_mode",
    "ga.inner_fraction": "ga_inner_fraction",
    "ga.mask_mode": "ga_mask_mode",
}

_INT_FIELDS = {
    "levels", "filtered_levels", "permutations", "seed", "workers", "sato_k",
    "ga_population", "ga_elitism", "ga_max_generations", "ga_tournament_size",
}
_FLOAT_FIELDS = {
    "train_fraction", "pca_threshold", "tsallis_q", "gaussian_sigma",
    "canny_sigma", "canny_low_ratio", "canny_high_percentile",
    "ga_mutation_rate", "ga_plateau_tol", "ga_inner_fraction",
}


def _parse_cases(text: str) -> tuple[int, ...]:
    if text.strip().lower() == "all":
        return tuple(range(1, 32))
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse cases {text!r}: {exc}") from exc


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEY_TO_FIELD:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        name = _KEY_TO_FIELD[key]
        if name in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            if name == "cases":
                values[name] = _parse_cases(value)
            elif name == "stages":
                values[name] = tuple(s.strip() for s in value.split(",") if s.strip())
            elif name in _INT_FIELDS:
                values[name] = int(value)
            elif name in _FLOAT_FIELDS:
                values[name] = float(value)
            else:
                values[name] = value
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from exc
    try:
        return ExperimentConfig(**values)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    return parse_config_text(path.read_text(), source=str(path))
