from .database import Database, StagedWrites, split_path
from .templates import find_placeholders, leading_placeholders, render_value, resolve_template
from .history import (
    StepSummary,
    append_step,
    load_history,
    window_history,
    skill_history,
    format_history,
    action_category_counts,
)
from .trace import (
    TraceEntry,
    PassTrace,
    record_trace,
    export_trace,
    import_trace,
)

__all__ = [
    # Base de datos
    'Database',
    'StagedWrites',
    'split_path',

    # Plantillas
    'find_placeholders',
    'leading_placeholders',
    'render_value',
    'resolve_template',

    # Historial de pasos
    'StepSummary',
    'append_step',
    'load_history',
    'window_history',
    'skill_history',
    'format_history',
    'action_category_counts',

    # Trazas
    'TraceEntry',
    'PassTrace',
    'record_trace',
    'export_trace',
    'import_trace',
]
