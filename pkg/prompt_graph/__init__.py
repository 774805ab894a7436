# Importaciones convenientes de los módulos más usados
from .version import __version__

from .errors import PromptGraphError, NodeEvaluationFailed, EpisodeError

from .config import (
    RuntimeLimits,
    AgentSettings,
    Settings,
    load_settings,
)

from .core import (
    NodeDef,
    DynamicOp,
    OpKind,
    Graph,
    GraphSpec,
    build_graph,
    load_graph,
    validate,
)
from .core.traversal import run_pass

from .store import Database, PassTrace, import_trace, export_trace

from .models import (
    BackendRouter,
    ScriptedBackend,
    HTTPBackend,
    load_backend_config,
)

from .runtime import NodeRuntime, HookRegistry, default_registry

from .agent import KnowledgeState, EpisodeResult, run_episode

from .env import Environment, MiniForage, StdioEnvironment, create_environment

# Información del paquete
__author__ = 'Prompt Graph Team'
__license__ = 'MIT'
__description__ = 'Motor de grafos de prompts para agentes LLM con entorno de prueba'

# Exportar las clases más comunes para uso directo
__all__ = [
    # Errores
    'PromptGraphError',
    'NodeEvaluationFailed',
    'EpisodeError',

    # Configuración
    'RuntimeLimits',
    'AgentSettings',
    'Settings',
    'load_settings',

    # Grafo
    'NodeDef',
    'DynamicOp',
    'OpKind',
    'Graph',
    'GraphSpec',
    'build_graph',
    'load_graph',
    'validate',
    'run_pass',

    # Estado y trazas
    'Database',
    'PassTrace',
    'import_trace',
    'export_trace',

    # Modelos
    'BackendRouter',
    'ScriptedBackend',
    'HTTPBackend',
    'load_backend_config',

    # Ejecución
    'NodeRuntime',
    'HookRegistry',
    'default_registry',

    # Agente
    'KnowledgeState',
    'EpisodeResult',
    'run_episode',

    # Entornos
    'Environment',
    'MiniForage',
    'StdioEnvironment',
    'create_environment',
]


# Mensajes de bienvenida para usuarios interactivos
def _show_welcome():
    """Muestra mensaje de bienvenida si se importa en sesión interactiva."""
    import sys
    if hasattr(sys, 'ps1'):
        print(f"""
╔══════════════════════════════════════════════════════════╗
║  Prompt Graph v{__version__}                                     ║
║  Grafos de prompts para agentes LLM                      ║
╚══════════════════════════════════════════════════════════╝

📚 Ejemplos rápidos:

  # Cargar y validar un grafo
  >>> from prompt_graph import load_graph
  >>> graph = load_graph('prompt_graph/assets/graphs/crafter.json')

  # Ejecutar un episodio con el backend guionado
  >>> from prompt_graph import MiniForage, Settings, run_episode, load_backend_config
  >>> router = load_backend_config(script='prompt_graph/assets/scripts/miniforage_demo.json')
  >>> result = run_episode(graph, MiniForage(), router, max_steps=12)

💡 Para ver el dashboard interactivo:
   $ streamlit run dashboard/app.py

📖 Documentación: README.md
🧪 Tests: pytest tests/unit/ -v
        """)


_show_welcome()
