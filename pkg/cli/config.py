"""
Scenario configuration: one YAML file, an optional `units` block and one section per command.

    units: {hbar: 1.0, c: 1.0, m: 1.0}
    out: results/klein
    scatter: {E: 1.25, V0: 3.0}
    sweep: {E: 1.25, V0_min: 0.0, V0_max: 4.0, steps: 9}

Unknown keys anywhere are rejected.
"""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import yaml

from klein_fv.core import Units, natural_units
from klein_fv.errors import ConfigError, PreconditionError

from .command import Command
from .commands import COMMAND_TYPE_MAP

logger = logging.getLogger(__name__)

UNIT_KEYS = ("hbar", "c", "m")


class _ConfigLoader(yaml.SafeLoader):
    """SafeLoader that also reads exponent floats without a dot (1e-3) as floats."""


_ConfigLoader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"""),
    list("-+0123456789"))


def section_key(command_name: str) -> str:
    return command_class(command_name).section


def command_class(command_name: str):
    cls = COMMAND_TYPE_MAP.get(command_name)
    if cls is None:
        raise ConfigError(f"Unknown command '{command_name}' (known: {', '.join(COMMAND_TYPE_MAP)}).")
    return cls


def _parse_units(raw: Any) -> Units:
    if raw is None:
        return natural_units()
    if not isinstance(raw, Mapping):
        raise ConfigError(f"'units' must be a mapping, got {type(raw).__name__}.")
    unknown = sorted(set(map(str, raw)) - set(UNIT_KEYS))
    if unknown:
        raise ConfigError(f"Unknown key(s) in 'units': {', '.join(unknown)}.")
    values = {}
    for key in UNIT_KEYS:
        value = raw.get(key, 1.0)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"'units.{key}' must be a number, got {value!r}.")
        values[key] = float(value)
    try:
        return Units(**values)
    except PreconditionError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated configuration for a single command, defaults filled in."""

    command: str
    units: Units = field(default_factory=natural_units)
    parameters: Dict[str, Any] = field(default_factory=dict)
    out: Optional[str] = None

    @classmethod
    def from_mapping(cls, mapping: Optional[Mapping[str, Any]], command: str) -> "ScenarioConfig":
        """
        Validates a parsed configuration for `command`.

        Sections for other commands may be present and are ignored; anything else
        unknown is a ConfigError.
        """
        mapping = {} if mapping is None else mapping
        if not isinstance(mapping, Mapping):
            raise ConfigError(f"Configuration must be a mapping, got {type(mapping).__name__}.")
        known = {"units", "out"} | {cls_.section for cls_ in COMMAND_TYPE_MAP.values()}
        unknown = sorted(set(map(str, mapping)) - known)
        if unknown:
            raise ConfigError(f"Unknown top-level key(s): {', '.join(unknown)}.")

        units = _parse_units(mapping.get("units"))
        out = mapping.get("out")
        if out is not None and not isinstance(out, str):
            raise ConfigError(f"'out' must be a path string, got {out!r}.")

        instance = command_class(command)(units).configure(mapping.get(section_key(command)))
        return cls(command, units, instance.resolved_parameters(), out)

    @classmethod
    def load(cls, path: Path, command: str) -> "ScenarioConfig":
        try:
            with open(path, "r", encoding="utf-8") as handle:
                raw = yaml.load(handle, Loader=_ConfigLoader)
        except OSError as exc:
            raise ConfigError(f"Cannot read configuration '{path}': {exc.strerror}.") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"Configuration '{path}' is not valid YAML: {exc}") from exc
        logger.info("Loaded configuration %s for command '%s'.", path, command)
        return cls.from_mapping(raw, command)

    def with_overrides(self, **overrides: Any) -> "ScenarioConfig":
        """Re-validates the configuration with some parameters replaced; None values are skipped."""
        updates = {k: v for k, v in overrides.items() if v is not None}
        if not updates:
            return self
        mapping = self.to_mapping()
        mapping[section_key(self.command)].update(updates)
        return ScenarioConfig.from_mapping(mapping, self.command)

    def build_command(self) -> Command:
        return command_class(self.command)(self.units).configure(self.parameters)

    def to_mapping(self) -> Dict[str, Any]:
        """The echo written into the run manifest; re-parses to an equal ScenarioConfig."""
        mapping: Dict[str, Any] = {
            "units": {"hbar": self.units.hbar, "c": self.units.c, "m": self.units.m},
        }
        if self.out is not None:
            mapping["out"] = self.out
        mapping[section_key(self.command)] = dict(self.parameters)
        return mapping

    def dump_yaml(self) -> str:
        return yaml.safe_dump(self.to_mapping(), sort_keys=False)

