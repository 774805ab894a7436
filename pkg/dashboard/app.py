import streamlit as st
import sys
from pathlib import Path

# Agregar el directorio raíz al path para importar prompt_graph
root_dir = Path(__file__).parent.parent
sys.path.insert(0, str(root_dir))

from prompt_graph import __version__
from prompt_graph.config import ASSETS_DIR
from prompt_graph.runtime.compose import compose_strategies
from prompt_graph.runtime.hooks import default_registry

st.set_page_config(
    page_title="Prompt Graph",
    page_icon="🕸️",
    layout="wide",
    initial_sidebar_state="expanded",
    menu_items={
        'About': """
        # Prompt Graph

        Visor de grafos de prompts, episodios guionados y trazas.

        **Características:**
        - Grafos de nodos con dependencias y operaciones dinámicas
        - Entorno MiniForage determinista
        - Backend guionado sin red
        - Trazas por nodo con tokens y reintentos

        Desarrollado con Python y Streamlit
        """
    }
)

# Inicialización del Estado de Sesión

def init_session_state():
    # Grafo elegido en la página de Grafo
    if 'graph_path' not in st.session_state:
        st.session_state.graph_path = str(ASSETS_DIR / "graphs" / "crafter.json")

    # Configuración del episodio
    if 'episode_config' not in st.session_state:
        st.session_state.episode_config = {
            'seed': 0,
            'max_steps': 12,
            'script': str(ASSETS_DIR / "scripts" / "miniforage_demo.json"),
        }

    # Resultado del último episodio y sus trazas
    if 'episode_result' not in st.session_state:
        st.session_state.episode_result = None
    if 'traces' not in st.session_state:
        st.session_state.traces = []


def shipped_graphs():
    return sorted((ASSETS_DIR / "graphs").glob("*.json"))

# Página Principal

def main():
    init_session_state()

    st.sidebar.title("Prompt Graph")

    st.title("Grafos de Prompts para Agentes")
    st.markdown("""
    Cada paso del agente es una pasada por un grafo de nodos. Cada nodo
    compone su prompt, consulta un modelo y procesa la respuesta con un hook.
    """)

    st.divider()

    st.header("Inicio Rápido")

    col1, col2, col3 = st.columns(3)

    with col1:
        st.metric(
            label="Grafos incluidos",
            value=str(len(shipped_graphs())),
            help=", ".join(path.stem for path in shipped_graphs())
        )

    with col2:
        hooks = default_registry().ids()
        st.metric(
            label="Hooks registrados",
            value=str(len(hooks)),
            help=", ".join(hooks)
        )

    with col3:
        strategies = compose_strategies()
        st.metric(
            label="Estrategias de compose",
            value=str(len(strategies)),
            help=", ".join(strategies)
        )

    st.divider()

    st.header("Páginas Disponibles")

    pages_info = [
        {
            "icon": "🕸️",
            "title": "Grafo",
            "description": "Estructura del grafo, capas topológicas y reporte de validación."
        },
        {
            "icon": "🎮",
            "title": "Episodio",
            "description": "Ejecuta un episodio guionado en MiniForage y grafica recompensa y tokens."
        },
        {
            "icon": "🔎",
            "title": "Trazas",
            "description": "Explora prompts, respuestas, reintentos y tokens por nodo."
        }
    ]

    for page in pages_info:
        with st.expander(f"{page['icon']} {page['title']}", expanded=False):
            st.markdown(page['description'])

    st.divider()

    st.header("¿Cómo usar este dashboard?")

    st.markdown("""
    1. **Elige** un grafo en la página Grafo y revisa su validación
    2. **Ejecuta** un episodio guionado en la página Episodio
    3. **Explora** las trazas del episodio (o un archivo JSONL) en la página Trazas
    """)

    with st.sidebar:
        st.header("Estado")

        result = st.session_state.episode_result
        if result is None:
            st.info("Todavía no se ejecutó ningún episodio")
        else:
            st.success(f"Último episodio: {result.steps} pasos, recompensa {result.total_reward:.0f}")

        st.divider()
        st.subheader("Acceso Rápido")

        if st.button("Reiniciar Sesión", use_container_width=True):
            for key in list(st.session_state.keys()):
                del st.session_state[key]
            st.rerun()

    st.divider()
    st.markdown(f"""
    <div style='text-align: center; color: #666; padding: 20px;'>
        <p>Prompt Graph v{__version__} | Desarrollado con Streamlit</p>
    </div>
    """, unsafe_allow_html=True)


if __name__ == "__main__":
    main()
