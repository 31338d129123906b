"""Pipeline configuration and its key=value file format."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError
from .sequences import DEFAULT_API_PREFIXES


@dataclass(frozen=True)
class PipelineConfig:
    api_prefixes: tuple[str, ...] = DEFAULT_API_PREFIXES
    max_branch_nodes: int = 10
    min_method_instructions: int = 7
    min_sequences: int = 25
    k_min: int = 1
    k_max: int = 16
    seed: int = 0
    ngram_delta: float = 0.1
    ngram_order: int = 3
    train_frac: float = 0.8
    val_frac: float = 0.125
    eval_ks: tuple[int, ...] = (1, 3, 5, 10)
    max_set_size: int | None = None
    em_tol: float = 1e-6
    em_max_iter: int = 200
    em_restarts: int = 1

    @property
    def k_range(self) -> range:
        return range(self.k_min, self.k_max + 1)

    def validate(self) -> None:
        positive = ["max_branch_nodes", "min_method_instructions",
                    "min_sequences", "k_min", "k_max", "ngram_order",
                    "em_max_iter", "em_restarts"]
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.k_max < self.k_min:
            raise ConfigError("k_max must be >= k_min")
        if self.ngram_delta <= 0 or self.em_tol <= 0:
            raise ConfigError("ngram_delta and em_tol must be positive")
        if not 0 < self.train_frac < 1 or not 0 < self.val_frac < 1:
            raise ConfigError("train_frac and val_frac must be in (0, 1)")
        if not self.api_prefixes:
            raise ConfigError("api_prefixes must be non-empty")
        if not self.eval_ks:
            raise ConfigError("eval_ks must be non-empty")


_INT_FIELDS = {"max_branch_nodes", "min_method_instructions", "min_sequences",
               "k_min", "k_max", "seed", "ngram_order", "em_max_iter",
               "em_restarts", "max_set_size"}
_FLOAT_FIELDS = {"ngram_delta", "train_frac", "val_frac", "em_tol"}
_LIST_FIELDS = {"api_prefixes", "eval_ks"}


def _parse_value(name: str, raw: str):
    raw = raw.strip()
    if name in _INT_FIELDS:
        if name == "max_set_size" and raw.lower() in ("none", ""):
            return None
        return int(raw)
    if name in _FLOAT_FIELDS:
        return float(raw)
    if name == "api_prefixes":
        return tuple(p.strip() for p in raw.split(",") if p.strip())
    if name == "eval_ks":
        return tuple(int(p) for p in raw.split(",") if p.strip())
    raise ConfigError(f"unknown config key '{name}'")


def load_config(path: str | Path,
                base: PipelineConfig | None = None) -> PipelineConfig:
    """Read a key=value config file on top of the defaults (or ``base``)."""
    config = base or PipelineConfig()
    known = {f.name for f in fields(PipelineConfig)}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    overrides = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        name, value = (part.strip() for part in line.split("=", 1))
        if name not in known:
            raise ConfigError(f"{path}:{lineno}: unknown config key '{name}'")
        try:
            overrides[name] = _parse_value(name, value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    config = replace(config, **overrides)
    config.validate()
    return config
