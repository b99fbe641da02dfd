"""Configuration management for hilbert_compression.

Loads settings from environment variables with sensible defaults, and reads
flat ``key = value`` run configuration files.
"""

import os
from pathlib import Path

from pydantic import BaseModel, Field

from hilbert_compression.errors import ConfigValidationError

DEFAULT_MEMORY_BUDGET = 2 * 1024**3


def _env_int(name: str, default: int) -> int:
    """Parse an integer from the environment, falling back on empty values."""
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError as exc:  # Preserve clear error for invalid input
        raise ValueError(f"{name} must be an integer") from exc


def _default_cache_dir() -> Path:
    raw = os.getenv("HILBERT_COMPRESSION_CACHE_DIR")
    if raw is None or raw.strip() == "":
        return Path.home() / ".cache" / "hilbert-compression"
    return Path(raw).expanduser()


class Settings(BaseModel):
    """Application settings loaded from environment variables."""

    cache_dir: Path = Field(
        default_factory=_default_cache_dir,
        description="Directory holding cached balls",
    )
    memory_budget_bytes: int = Field(
        default_factory=lambda: _env_int(
            "HILBERT_COMPRESSION_MEMORY_BUDGET", DEFAULT_MEMORY_BUDGET
        ),
        description="Upper bound on the estimated memory of an enumerated ball",
        gt=0,
    )
    seed: int = Field(
        default_factory=lambda: _env_int("HILBERT_COMPRESSION_SEED", 0),
        description="Seed for sampled property checks",
    )
    jobs: int = Field(
        default_factory=lambda: _env_int("HILBERT_COMPRESSION_JOBS", 1),
        description="Parallelism degree for per-scale verification tasks",
        ge=1,
    )

    model_config = {"frozen": True}


def get_settings() -> Settings:
    """Create settings instance from current environment.

    Returns:
        Settings instance with values from environment variables.
    """
    return Settings()


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse flat ``key = value`` configuration text.

    Blank lines and lines starting with ``#`` are ignored. Keys are lowercased
    and dashes are normalized to underscores so file keys match CLI flags.

    Args:
        text: Configuration file content.
        source: Name used in error messages.

    Returns:
        Mapping of keys to raw string values.

    Raises:
        ConfigValidationError: If a line has no ``=`` or an empty key.
    """
    values: dict[str, str] = {}
    bad: list[str] = []
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lower().replace("-", "_")
        if not sep or not key:
            bad.append(f"{source}:{lineno}")
            continue
        values[key] = value.strip()
    if bad:
        raise ConfigValidationError(
            f"Malformed config lines (expected 'key = value'): {', '.join(bad)}",
            fields=bad,
        )
    return values


def load_config_file(path: str | Path) -> dict[str, str]:
    """Read a flat key-value configuration file.

    Args:
        path: Path to the configuration file.

    Returns:
        Mapping of keys to raw string values.
    """
    config_path = Path(path)
    try:
        text = config_path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigValidationError(f"Cannot read config file {config_path}: {e}") from e
    return parse_config_text(text, source=str(config_path))
