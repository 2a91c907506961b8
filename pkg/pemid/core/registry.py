"""Discovery and loading of benchmark generators."""

import importlib.metadata
from typing import Any, Dict, List, Optional, Type

from packaging import version

from pemid.benchmarks.base import BenchmarkConfig, BenchmarkGenerator
from pemid.benchmarks.builtin import BUILTIN_BENCHMARKS
from pemid.core.exceptions import (
    BenchmarkLoadError,
    BenchmarkNotFoundError,
    BenchmarkVersionError,
)

ENTRY_POINT_GROUP = "pemid.benchmarks"

BenchmarkClass = Type[BenchmarkGenerator]


class BenchmarkRegistry:
    """Built-in generators plus any installed under the ``pemid.benchmarks`` entry point group."""

    def __init__(self, discover_entry_points: bool = True) -> None:
        self.discover_entry_points = discover_entry_points
        self._benchmarks: Optional[Dict[str, Dict[str, Any]]] = None

    def discover(self) -> Dict[str, Dict[str, Any]]:
        """Return benchmark info keyed by name; built-ins win on name clashes."""
        if self._benchmarks is not None:
            return self._benchmarks

        found: Dict[str, Dict[str, Any]] = {}
        if self.discover_entry_points:
            for entry_point in importlib.metadata.entry_points().select(group=ENTRY_POINT_GROUP):
                found[entry_point.name] = {
                    "name": entry_point.name,
                    "class": None,
                    "entry_point": entry_point,
                    "source": "entry_point",
                }
        for name, cls in BUILTIN_BENCHMARKS.items():
            found[name] = self._info(name, cls, "builtin")
        self._benchmarks = found
        return found

    def _info(self, name: str, cls: BenchmarkClass, source: str) -> Dict[str, Any]:
        return {
            "name": name,
            "class": cls,
            "version": getattr(cls, "__version__", "unknown"),
            "api_version": getattr(cls, "__api_version__", "1.0"),
            "description": getattr(cls, "__description__", ""),
            "source": source,
        }

    def load(self, name: str) -> BenchmarkClass:
        """Resolve a benchmark class by name.

        Raises:
            BenchmarkNotFoundError: If no generator has this name
            BenchmarkLoadError: If the entry point fails to import or is not a generator
            BenchmarkVersionError: If its API major version is not 1
        """
        benchmarks = self.discover()
        if name not in benchmarks:
            raise BenchmarkNotFoundError(name, list(benchmarks))

        info = benchmarks[name]
        if info["class"] is None:
            try:
                cls = info["entry_point"].load()
            except Exception as e:
                raise BenchmarkLoadError(name, e) from e
            if not (isinstance(cls, type) and issubclass(cls, BenchmarkGenerator)):
                raise BenchmarkLoadError(
                    name, TypeError("Benchmark must inherit from BenchmarkGenerator")
                )
            info = benchmarks[name] = self._info(name, cls, "entry_point")

        self._validate_api_version(info)
        cls_: BenchmarkClass = info["class"]
        return cls_

    def _validate_api_version(self, info: Dict[str, Any]) -> None:
        api_version = str(info.get("api_version", "1.0"))
        try:
            parsed = version.parse(api_version)
        except version.InvalidVersion as e:
            raise BenchmarkVersionError(info["name"], "valid version", api_version) from e
        if parsed.major != 1:
            raise BenchmarkVersionError(info["name"], "1.x", api_version)

    def create_instance(self, config: BenchmarkConfig) -> BenchmarkGenerator:
        """Instantiate and set up the generator named by ``config.kind``."""
        cls = self.load(config.kind)
        try:
            instance = cls()
        except Exception as e:
            raise BenchmarkLoadError(config.kind, e) from e
        instance.setup(config)
        return instance

    def list_benchmarks(self) -> List[Dict[str, Any]]:
        return [
            {k: v for k, v in info.items() if k not in ("class", "entry_point")}
            for info in self.discover().values()
        ]
