from .builder import BuilderSession, BuilderWizard, run_builder
from .viewer import filter_entries, render_trace, totals_line, view_trace_file
from .main import build_parser, main

__all__ = [
    'BuilderSession',
    'BuilderWizard',
    'run_builder',
    'filter_entries',
    'render_trace',
    'totals_line',
    'view_trace_file',
    'build_parser',
    'main',
]
