import streamlit as st
import sys
from pathlib import Path
import plotly.graph_objects as go
import plotly.express as px
import pandas as pd

# Agregar el directorio raíz al path
root_dir = Path(__file__).parent.parent.parent
sys.path.insert(0, str(root_dir))

from prompt_graph.agent.episode import run_episode
from prompt_graph.config import ASSETS_DIR, load_settings
from prompt_graph.core.spec_io import load_graph
from prompt_graph.env.miniforage import MiniForage
from prompt_graph.errors import EpisodeError, NodeEvaluationFailed
from prompt_graph.models.backend import load_backend_config
from prompt_graph.store.database import Database
from prompt_graph.store.history import action_category_counts

# Configuración de Página

st.set_page_config(
    page_title="Episodio - Prompt Graph",
    page_icon="🎮",
    layout="wide"
)

# Funciones Auxiliares

def run_scripted_episode(config):
    graph = load_graph(ASSETS_DIR / "graphs" / "crafter.json")
    database = Database.load(ASSETS_DIR / "databases" / "crafter.json")
    router = load_backend_config(script=config['script'])
    env = MiniForage()
    try:
        return run_episode(graph, env, router, database=database, settings=load_settings(),
                           seed=config['seed'], max_steps=config['max_steps'])
    finally:
        env.close()
        router.close()


def create_reward_chart(result):
    rows, total = [], 0.0
    for summary in result.history:
        total += float((summary.s_action or {}).get('reward', 0.0))
        rows.append({'Paso': summary.step, 'Recompensa acumulada': total})
    df = pd.DataFrame(rows)

    fig = go.Figure()
    fig.add_trace(go.Scatter(
        x=df['Paso'], y=df['Recompensa acumulada'], mode='lines+markers',
        line=dict(color='#95E1D3', width=3), name='Recompensa'
    ))
    fig.update_layout(title='Recompensa acumulada', xaxis_title='Paso', yaxis_title='Recompensa', height=400)
    return fig


def create_tokens_chart(result):
    df = pd.DataFrame([
        {
            'Paso': trace.step,
            'Prompt': trace.usage.prompt_tokens,
            'Respuesta': trace.usage.completion_tokens,
        }
        for trace in result.traces
    ])
    fig = px.bar(
        df.melt(id_vars='Paso', var_name='Tipo', value_name='Tokens'),
        x='Paso',
        y='Tokens',
        color='Tipo',
        title='Tokens por pasada',
        color_discrete_map={'Prompt': '#4ECDC4', 'Respuesta': '#FF6B6B'}
    )
    fig.update_layout(height=400)
    return fig


def create_nodes_chart(result):
    df = pd.DataFrame([
        {'Paso': trace.step, 'Nodos evaluados': len(trace.order)}
        for trace in result.traces
    ])
    fig = px.line(df, x='Paso', y='Nodos evaluados', markers=True,
                  title='Nodos evaluados por pasada (el gate reduce la pasada)')
    fig.update_layout(height=400)
    return fig


def history_table(result):
    rows = []
    for summary in result.history:
        action = summary.s_action or {}
        rows.append({
            'Paso': summary.step,
            'Acción': action.get('action', ''),
            'Repeticiones': action.get('repeats', ''),
            'Falló': action.get('failed', False),
            'Mensaje': action.get('message', ''),
            'Causa': action.get('causes_of_failure', ''),
            'Skill': summary.skill or '',
        })
    return pd.DataFrame(rows)

# Página

def main():
    st.title("🎮 Episodio guionado en MiniForage")
    st.markdown("""
    Grafo Crafter completo contra el backend guionado: sin red y determinista.
    """)

    config = st.session_state.get('episode_config', {
        'seed': 0,
        'max_steps': 12,
        'script': str(ASSETS_DIR / "scripts" / "miniforage_demo.json"),
    })

    with st.sidebar:
        st.header("Configuración")
        config['seed'] = st.number_input("Semilla", min_value=0, value=int(config['seed']), step=1)
        config['max_steps'] = st.slider("Pasos", min_value=0, max_value=15, value=int(config['max_steps']))
        scripts = sorted((ASSETS_DIR / "scripts").glob("*.json"))
        script_names = [path.name for path in scripts]
        chosen = st.selectbox("Guion", options=script_names)
        config['script'] = str(ASSETS_DIR / "scripts" / chosen)
        st.session_state.episode_config = config
        run_clicked = st.button("Ejecutar episodio", type="primary", use_container_width=True)

    if run_clicked:
        with st.spinner("Ejecutando episodio..."):
            try:
                result = run_scripted_episode(config)
                st.success(f"✅ Episodio completo: {result.steps} pasos")
            except (NodeEvaluationFailed, EpisodeError) as exc:
                result = getattr(exc, 'partial_result', None)
                st.error(f"El episodio falló: {exc}")
        st.session_state.episode_result = result
        st.session_state.traces = list(result.traces) if result is not None else []

    result = st.session_state.get('episode_result')
    if result is None:
        st.info("Configura y ejecuta un episodio desde la barra lateral")
        return

    col1, col2, col3, col4 = st.columns(4)
    with col1:
        st.metric("Pasos", result.steps)
    with col2:
        st.metric("Recompensa", f"{result.total_reward:.0f}")
    with col3:
        st.metric("Tokens", f"{result.usage.total_tokens:,}")
    with col4:
        st.metric("Llamadas al modelo", result.model_calls)

    st.markdown(f"**Logros:** {', '.join(result.achievements) or 'ninguno'}")

    st.divider()

    st.plotly_chart(create_reward_chart(result), use_container_width=True)

    col1, col2 = st.columns(2)
    with col1:
        st.plotly_chart(create_tokens_chart(result), use_container_width=True)
    with col2:
        st.plotly_chart(create_nodes_chart(result), use_container_width=True)

    st.header("Historial")
    st.dataframe(history_table(result), use_container_width=True, hide_index=True)

    st.header("Conocimiento")
    col1, col2 = st.columns(2)
    with col1:
        st.subheader("Base de conocimiento")
        st.json(result.knowledge.kb)
    with col2:
        st.subheader("Información desconocida")
        st.json(result.knowledge.unknown)

    st.header("Acciones por skill")
    counts = action_category_counts(result.history)
    if counts:
        df = pd.DataFrame(counts).T.fillna(0).astype(int)
        df.index.name = 'Skill'
        st.dataframe(df, use_container_width=True)


if __name__ == "__main__":
    main()
