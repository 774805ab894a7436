from .parsing import BlockShape, parse_structured_block, parse_yes_no
from .compose import (
    ComposedPrompt,
    NodeOutput,
    Segment,
    SegmentSource,
    compose_default,
    register_compose,
    get_compose,
)
from .hooks import (
    AfterQueryHook,
    FunctionHook,
    HookContext,
    HookResult,
    HookRegistry,
    default_registry,
)
from .evaluator import NodeEvaluation, NodeRuntime

__all__ = [
    'BlockShape',
    'parse_structured_block',
    'parse_yes_no',
    'ComposedPrompt',
    'NodeOutput',
    'Segment',
    'SegmentSource',
    'compose_default',
    'register_compose',
    'get_compose',
    'AfterQueryHook',
    'FunctionHook',
    'HookContext',
    'HookResult',
    'HookRegistry',
    'default_registry',
    'NodeEvaluation',
    'NodeRuntime',
]
