import enum
import math
import weakref  # Use weakref to avoid circular references Command <-> Parameter
from typing import TYPE_CHECKING, Any, Callable, Optional, Sequence, Type

from klein_fv.errors import ConfigError

# Forward reference for type hinting
if TYPE_CHECKING:
    from .command import Command


class ParameterKind(enum.Enum):
    """Enum defining whether a parameter must be supplied by the configuration."""
    REQUIRED = 1
    OPTIONAL = 2


Validator = Callable[[Any], Optional[str]]


def positive(value) -> Optional[str]:
    return None if value > 0 else "must be > 0"


def non_negative(value) -> Optional[str]:
    return None if value >= 0 else "must be >= 0"


def at_least(bound) -> Validator:
    def check(value) -> Optional[str]:
        return None if value >= bound else f"must be >= {bound}"
    return check


def one_of(choices: Sequence[str]) -> Validator:
    def check(value) -> Optional[str]:
        return None if value in choices else f"must be one of {', '.join(choices)}"
    return check


class Parameter:
    """A typed configuration slot on a Command."""

    def __init__(self, command: 'Command', name: str, data_type: Type = Any,
                 default: Any = None, kind: ParameterKind = ParameterKind.OPTIONAL,
                 validators: Sequence[Validator] = (), allow_none: bool = False):
        """
        Initializes a Parameter.

        Args:
            command: The Command this parameter belongs to (using weakref).
            name: The unique name of the parameter within the command; also its config key.
            data_type: Expected type: float, int, bool or str. float slots accept ints.
            default: Value used when the configuration does not set the parameter.
            kind: ParameterKind.REQUIRED or ParameterKind.OPTIONAL.
            validators: Callables returning an error fragment, or None when the value is fine.
            allow_none: Whether None (YAML null) is an accepted value.
        """
        self._command_ref = weakref.ref(command)
        self._name = name
        self._data_type = data_type
        self._kind = kind
        self._validators = tuple(validators)
        self._allow_none = allow_none
        self._default = None if default is None else self.coerce(default)

    @property
    def command(self) -> Optional['Command']:
        return self._command_ref()

    @property
    def name(self) -> str:
        return self._name

    @property
    def data_type(self) -> Type:
        return self._data_type

    @property
    def kind(self) -> ParameterKind:
        return self._kind

    @property
    def default(self) -> Any:
        return self._default

    @property
    def required(self) -> bool:
        return self._kind is ParameterKind.REQUIRED

    def coerce(self, value: Any) -> Any:
        """
        Checks a raw configuration value against the slot and returns it in canonical form.

        Raises:
            ConfigError: on a type mismatch, a non-finite number or a failed validator.
        """
        if value is None:
            if self._allow_none:
                return None
            raise ConfigError(f"Parameter '{self._qualified_name()}' may not be null.")

        # bool is an int subclass; never let true/false stand in for a number
        if isinstance(value, bool) and self._data_type is not bool:
            raise self._type_error(value)
        if self._data_type is float:
            if not isinstance(value, (int, float)):
                raise self._type_error(value)
            value = float(value)
            if not math.isfinite(value):
                raise ConfigError(f"Parameter '{self._qualified_name()}' must be finite, got {value!r}.")
        elif self._data_type is not Any and not isinstance(value, self._data_type):
            raise self._type_error(value)

        for validator in self._validators:
            problem = validator(value)
            if problem:
                raise ConfigError(f"Parameter '{self._qualified_name()}' {problem}, got {value!r}.")
        return value

    def _type_error(self, value: Any) -> ConfigError:
        return ConfigError(
            f"Parameter '{self._qualified_name()}' expects {self._data_type.__name__}, "
            f"got {type(value).__name__} {value!r}.")

    def _qualified_name(self) -> str:
        command = self.command
        return f"{command.section}.{self._name}" if command else self._name

    def __repr__(self) -> str:
        command_name = self.command.name if self.command else "Detached"
        return f"<Parameter {command_name}.{self.name} ({self.kind.name}, {self.data_type.__name__})>"
