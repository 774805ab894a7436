from .knowledge import KnowledgeState, SkillEntry, kb_commit, unknown_merge, select_skill
from .patterns import (
    GateDecision,
    ActionCommand,
    gate_branch,
    conditional_branch,
    feedback_due,
    build_feedback_context,
    emit_action,
)
from .builtin_hooks import BUILTIN_HOOKS, register_builtin_hooks
from .episode import EpisodeResult, run_episode

__all__ = [
    # Conocimiento
    'KnowledgeState',
    'SkillEntry',
    'kb_commit',
    'unknown_merge',
    'select_skill',

    # Patrones
    'GateDecision',
    'ActionCommand',
    'gate_branch',
    'conditional_branch',
    'feedback_due',
    'build_feedback_context',
    'emit_action',
    'BUILTIN_HOOKS',
    'register_builtin_hooks',

    # Episodios
    'EpisodeResult',
    'run_episode',
]
