"""Shared fixtures for hilbert_compression tests."""

from pathlib import Path

import pytest

from hilbert_compression.groups import (
    DirectSumFiniteGroup,
    FreeAbelianGroup,
    FreeGroup,
    HeisenbergGroup,
    LamplighterRestrictedGroup,
)
from hilbert_compression.models import (
    DirectSumFiniteSpec,
    FreeAbelianSpec,
    FreeGroupSpec,
    LamplighterSpec,
)


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> Path:
    """Point the cache at a temporary directory and clear other overrides."""
    cache_dir = tmp_path / "cache"
    monkeypatch.setenv("HILBERT_COMPRESSION_CACHE_DIR", str(cache_dir))
    for name in ("MEMORY_BUDGET", "SEED", "JOBS"):
        monkeypatch.delenv(f"HILBERT_COMPRESSION_{name}", raising=False)
    return cache_dir


@pytest.fixture
def z1() -> FreeAbelianGroup:
    return FreeAbelianGroup(FreeAbelianSpec(rank=1))


@pytest.fixture
def z2() -> FreeAbelianGroup:
    return FreeAbelianGroup(FreeAbelianSpec(rank=2))


@pytest.fixture
def f2() -> FreeGroup:
    return FreeGroup(FreeGroupSpec(rank=2))


@pytest.fixture
def heisenberg() -> HeisenbergGroup:
    return HeisenbergGroup()


@pytest.fixture
def direct_sum() -> DirectSumFiniteGroup:
    return DirectSumFiniteGroup(DirectSumFiniteSpec(orders=[1, 2, 2, 2, 2]))


@pytest.fixture
def lamplighter() -> LamplighterRestrictedGroup:
    return LamplighterRestrictedGroup(LamplighterSpec(lamp_order=2))
