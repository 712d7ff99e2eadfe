# cli/__init__.py

from .parameter import Parameter, ParameterKind
from .command import Command, CommandResult
from .commands import (COMMAND_TYPE_MAP, DecomposeCommand, EprDemoCommand, EvolveCommand,
                       ScatterCommand, SweepCommand)
from .config import ScenarioConfig
from .output import RunManifest
from .app import main

__all__ = [
    'Parameter',
    'ParameterKind',
    'Command',
    'CommandResult',
    'COMMAND_TYPE_MAP',
    'ScatterCommand',
    'SweepCommand',
    'EvolveCommand',
    'DecomposeCommand',
    'EprDemoCommand',
    'ScenarioConfig',
    'RunManifest',
    'main',
]
