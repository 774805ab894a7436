# Backends de modelo
from .backend import (
    ProfileKind,
    RetryPolicy,
    BackendProfile,
    Usage,
    CallInfo,
    BackendStats,
    ModelBackend,
    BackendRouter,
    create_backend,
    load_backend_config,
)
from .pricing import PriceTable, estimate_cost
from .scripted import Script, ScriptRule, ScriptedBackend, estimate_tokens
from .http_client import HTTPBackend, TokenBucket

__all__ = [
    'ProfileKind',
    'RetryPolicy',
    'BackendProfile',
    'Usage',
    'CallInfo',
    'BackendStats',
    'ModelBackend',
    'BackendRouter',
    'create_backend',
    'load_backend_config',

    # Precios
    'PriceTable',
    'estimate_cost',

    # Implementaciones
    'Script',
    'ScriptRule',
    'ScriptedBackend',
    'estimate_tokens',
    'HTTPBackend',
    'TokenBucket',
]
