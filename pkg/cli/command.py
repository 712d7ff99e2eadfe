import abc
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Type

from klein_fv.core import Units
from klein_fv.errors import ConfigError

from .parameter import Parameter, ParameterKind, Validator

logger = logging.getLogger(__name__)


@dataclass
class CommandResult:
    """What a command hands back to the front end once it has run."""

    checks: Dict[str, bool] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)
    outputs: List[Path] = field(default_factory=list)
    report: str = ""

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


class Command(abc.ABC):
    """
    Abstract base class for the workflows the front end can run.

    Subclasses declare their configuration slots in `_setup_parameters` and do
    their work in `process`.
    """

    #: Name used on the command line, e.g. "epr-demo".
    name: str = ""
    #: Key of the command's section in a configuration file, e.g. "epr_demo".
    section: str = ""
    #: Command-line flags this command accepts, mapped to the parameter each one overrides.
    flag_overrides: Dict[str, str] = {}

    def __init__(self, units: Units):
        """
        Initializes a Command.

        Args:
            units: The unit system every physical quantity of the run is expressed in.
        """
        if units is None:
            raise ValueError("Command needs a unit system.")
        self._units = units
        self.slots: Dict[str, Parameter] = {}
        self.parameters: Dict[str, Any] = {}

        self._setup_parameters()

    @property
    def units(self) -> Units:
        return self._units

    @abc.abstractmethod
    def _setup_parameters(self) -> None:
        """Abstract method for subclasses to declare their parameter slots."""

    def add_parameter(self, name: str, data_type: Type, default: Any = None, required: bool = False,
                      validators: Sequence[Validator] = (), allow_none: bool = False) -> Parameter:
        """Creates and adds a parameter slot."""
        if name in self.slots:
            raise ValueError(f"Parameter '{name}' already exists on command '{self.name}'.")
        kind = ParameterKind.REQUIRED if required else ParameterKind.OPTIONAL
        slot = Parameter(self, name, data_type, default, kind, validators, allow_none)
        self.slots[name] = slot
        if not required:
            self.parameters[name] = slot.default
        return slot

    def set_parameter(self, name: str, value: Any) -> None:
        """Sets a parameter; unknown names and ill-typed values are configuration errors."""
        slot = self.slots.get(name)
        if slot is None:
            known = ", ".join(sorted(self.slots))
            raise ConfigError(f"Unknown key '{self.section}.{name}' (known keys: {known}).")
        value = slot.coerce(value)
        if self.parameters.get(name) != value:
            self.parameters[name] = value
            logger.debug("Parameter '%s' set to %r on command '%s'.", name, value, self.name)

    def get_parameter(self, name: str) -> Any:
        """Gets a parameter's value."""
        return self.parameters.get(name)

    def configure(self, values: Optional[Mapping[str, Any]]) -> "Command":
        """Applies a whole configuration section, then validates the result."""
        if values is None:
            values = {}
        if not isinstance(values, Mapping):
            raise ConfigError(f"Section '{self.section}' must be a mapping, got {type(values).__name__}.")
        for name, value in values.items():
            self.set_parameter(str(name), value)
        self.validate()
        return self

    def validate(self) -> None:
        """Checks required slots and cross-parameter constraints."""
        missing = [name for name, slot in self.slots.items() if slot.required and name not in self.parameters]
        if missing:
            raise ConfigError(f"Section '{self.section}' is missing required keys: {', '.join(missing)}.")
        self._validate()

    def _validate(self) -> None:
        """Optional hook for constraints spanning several parameters."""

    def resolved_parameters(self) -> Dict[str, Any]:
        """Every parameter value, defaults included, in declaration order."""
        return {name: self.parameters[name] for name in self.slots}

    @abc.abstractmethod
    def process(self, out_dir: Path) -> CommandResult:
        """Runs the workflow and writes its output files below `out_dir`."""

    def __repr__(self) -> str:
        return f"<Command {self.name}>"
