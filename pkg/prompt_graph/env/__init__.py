from .base import Environment, StepResult, create_environment
from .miniforage import MiniForage, Ruleset, WorldState, render_observation
from .stdio import StdioEnvironment, read_frame, serve, write_frame

__all__ = [
    'Environment',
    'StepResult',
    'create_environment',
    'MiniForage',
    'Ruleset',
    'WorldState',
    'render_observation',
    'StdioEnvironment',
    'read_frame',
    'serve',
    'write_frame',
]
