"""Plugin interface for third-party group models.

Packages can register group models via entry_points:

    [tool.poetry.plugins."hilbert_compression.groups"]
    baumslag = "my_package.groups:BaumslagPlugin"

Plugins must implement the GroupPlugin protocol. A registered model is then
reachable through the ``plugin:<name>[:key=value,...]`` group literal.
"""

from __future__ import annotations

import logging
from importlib.metadata import entry_points
from typing import TYPE_CHECKING, Any, Protocol

from hilbert_compression.errors import InvalidParameterError, UnsupportedModelError
from hilbert_compression.models import PluginGroupSpec

if TYPE_CHECKING:
    from hilbert_compression.groups import GroupModel

logger = logging.getLogger(__name__)

PLUGIN_GROUP = "hilbert_compression.groups"


class GroupPlugin(Protocol):
    """Interface for group model plugins."""

    @property
    def name(self) -> str: ...

    def build(self, params: dict[str, Any]) -> GroupModel: ...


def discover_group_plugins() -> dict[str, GroupPlugin]:
    """Discover and instantiate group plugins registered via entry_points."""
    plugins: dict[str, GroupPlugin] = {}
    for ep in entry_points(group=PLUGIN_GROUP):
        try:
            plugin_cls = ep.load()
            plugin = plugin_cls()
            if not hasattr(plugin, "name") or not callable(getattr(plugin, "build", None)):
                logger.warning("Plugin %s does not implement GroupPlugin, skipping", ep.name)
                continue
            if plugin.name in plugins:
                logger.warning(
                    "Duplicate group plugin name %s from %s, skipping", plugin.name, ep.value
                )
                continue
            logger.info("Discovered group plugin: %s (from %s)", plugin.name, ep.value)
            plugins[plugin.name] = plugin
        except Exception:
            logger.exception("Failed to load group plugin: %s", ep.name)
    return plugins


def build_plugin_group(spec: PluginGroupSpec) -> GroupModel:
    """Instantiate the model a plugin provides for ``spec``.

    Raises:
        UnsupportedModelError: If no installed plugin has the requested name.
        InvalidParameterError: If the plugin rejects the parameters or returns
            something other than a group model.
    """
    from hilbert_compression.groups import GroupModel

    plugins = discover_group_plugins()
    plugin = plugins.get(spec.name)
    if plugin is None:
        available = ", ".join(sorted(plugins)) or "none"
        raise UnsupportedModelError(
            f"No group plugin named {spec.name!r} (installed: {available})"
        )
    try:
        model = plugin.build(dict(spec.params))
    except (TypeError, ValueError) as e:
        raise InvalidParameterError(f"Plugin {spec.name} rejected {spec.params}: {e}") from e
    if not isinstance(model, GroupModel):
        raise InvalidParameterError(
            f"Plugin {spec.name} returned {type(model).__name__}, not a GroupModel"
        )
    return model
