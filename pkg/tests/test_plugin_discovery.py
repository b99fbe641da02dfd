"""Tests for group plugin discovery and the plugin: literal."""

from typing import Any
from unittest.mock import MagicMock, patch

import pytest

from hilbert_compression.balls import enumerate_ball
from hilbert_compression.errors import InvalidParameterError, UnsupportedModelError
from hilbert_compression.groups import FreeAbelianGroup, GroupModel, make_group, parse_group_spec
from hilbert_compression.models import FreeAbelianSpec, PluginGroupSpec
from hilbert_compression.plugin import build_plugin_group, discover_group_plugins


class FakeLatticePlugin:
    @property
    def name(self) -> str:
        return "lattice"

    def build(self, params: dict[str, Any]) -> GroupModel:
        return FreeAbelianGroup(FreeAbelianSpec(rank=int(params.get("rank", 1))))


def fake_entry_point(name: str, loaded: Any) -> MagicMock:
    mock_ep = MagicMock()
    mock_ep.name = name
    mock_ep.value = f"fake_package.groups:{name}"
    mock_ep.load.return_value = loaded
    return mock_ep


class TestDiscoverGroupPlugins:
    @patch("hilbert_compression.plugin.entry_points")
    def test_discovers_installed_plugins(self, mock_eps: MagicMock) -> None:
        mock_eps.return_value = [fake_entry_point("lattice", FakeLatticePlugin)]
        plugins = discover_group_plugins()
        assert list(plugins) == ["lattice"]

    @patch("hilbert_compression.plugin.entry_points")
    def test_no_plugins_installed(self, mock_eps: MagicMock) -> None:
        mock_eps.return_value = []
        assert discover_group_plugins() == {}

    @patch("hilbert_compression.plugin.entry_points")
    def test_broken_plugin_skipped(self, mock_eps: MagicMock) -> None:
        mock_ep = MagicMock()
        mock_ep.name = "broken"
        mock_ep.load.side_effect = ImportError("no such module")
        mock_eps.return_value = [mock_ep]
        assert discover_group_plugins() == {}

    @patch("hilbert_compression.plugin.entry_points")
    def test_non_conforming_plugin_skipped(self, mock_eps: MagicMock) -> None:
        """Plugin without required attributes is skipped with warning."""

        class BadPlugin:
            pass

        mock_eps.return_value = [fake_entry_point("bad", BadPlugin)]
        assert discover_group_plugins() == {}

    @patch("hilbert_compression.plugin.entry_points")
    def test_duplicate_name_keeps_first(self, mock_eps: MagicMock) -> None:
        """A second plugin with the same name is skipped."""
        mock_eps.return_value = [
            fake_entry_point("lattice", FakeLatticePlugin),
            fake_entry_point("lattice2", FakeLatticePlugin),
        ]
        assert len(discover_group_plugins()) == 1


class TestBuildPluginGroup:
    """Tests for plugin-provided group models."""

    @patch("hilbert_compression.plugin.entry_points")
    def test_literal_reaches_plugin(self, mock_eps: MagicMock) -> None:
        """plugin:lattice:rank=2 builds ℤ² through the plugin."""
        mock_eps.return_value = [fake_entry_point("lattice", FakeLatticePlugin)]
        model = make_group(parse_group_spec("plugin:lattice:rank=2"))
        assert isinstance(model, FreeAbelianGroup)
        assert len(enumerate_ball(model, 2)) == 13

    @patch("hilbert_compression.plugin.entry_points")
    def test_unknown_plugin(self, mock_eps: MagicMock) -> None:
        mock_eps.return_value = []
        with pytest.raises(UnsupportedModelError) as exc_info:
            build_plugin_group(PluginGroupSpec(name="missing"))
        assert "installed: none" in str(exc_info.value)

    @patch("hilbert_compression.plugin.entry_points")
    def test_rejected_parameters(self, mock_eps: MagicMock) -> None:
        """ValueError from the plugin becomes an invalid parameter."""
        mock_eps.return_value = [fake_entry_point("lattice", FakeLatticePlugin)]
        with pytest.raises(InvalidParameterError):
            build_plugin_group(PluginGroupSpec(name="lattice", params={"rank": "two"}))

    @patch("hilbert_compression.plugin.entry_points")
    def test_non_model_result(self, mock_eps: MagicMock) -> None:
        """Plugins must return a GroupModel."""

        class WrongPlugin:
            name = "wrong"

            def build(self, params: dict[str, Any]) -> Any:
                return object()

        mock_eps.return_value = [fake_entry_point("wrong", WrongPlugin)]
        with pytest.raises(InvalidParameterError):
            build_plugin_group(PluginGroupSpec(name="wrong"))
