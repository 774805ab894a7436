import streamlit as st
import json
import sys
from pathlib import Path
import networkx as nx
import plotly.graph_objects as go
import pandas as pd

# Agregar el directorio raíz al path
root_dir = Path(__file__).parent.parent.parent
sys.path.insert(0, str(root_dir))

from prompt_graph.config import ASSETS_DIR
from prompt_graph.core.spec_io import GraphSpec, validate
from prompt_graph.errors import PromptGraphError
from prompt_graph.store.templates import find_placeholders

# Configuración de Página

st.set_page_config(
    page_title="Grafo - Prompt Graph",
    page_icon="🕸️",
    layout="wide"
)

# Funciones Auxiliares

def topological_layout(spec):
    """Posiciones (x = capa topológica, y = orden dentro de la capa)."""
    digraph = nx.DiGraph()
    digraph.add_nodes_from(spec.ids)
    digraph.add_edges_from((u, v) for u, v in spec.edges() if u in spec)
    positions = {}
    for layer, nodes in enumerate(nx.topological_generations(digraph)):
        for row, node_id in enumerate(sorted(nodes)):
            positions[node_id] = (layer, -row)
    return positions


def create_graph_figure(spec):
    positions = topological_layout(spec)

    edge_x, edge_y = [], []
    for u, v in spec.edges():
        if u not in positions:
            continue
        x0, y0 = positions[u]
        x1, y1 = positions[v]
        edge_x += [x0, x1, None]
        edge_y += [y0, y1, None]

    fig = go.Figure()
    fig.add_trace(go.Scatter(
        x=edge_x, y=edge_y, mode='lines',
        line=dict(width=1, color='#95A5A6'), hoverinfo='none'
    ))

    hooks = sorted({node.after_query or "(ninguno)" for node in spec.nodes})
    for hook in hooks:
        nodes = [n for n in spec.nodes if (n.after_query or "(ninguno)") == hook]
        fig.add_trace(go.Scatter(
            x=[positions[n.id][0] for n in nodes],
            y=[positions[n.id][1] for n in nodes],
            mode='markers+text',
            text=[n.id for n in nodes],
            textposition='top center',
            marker=dict(size=14),
            name=hook,
            hovertext=[f"{n.id}<br>deps: {', '.join(n.deps) or '-'}<br>compose: {n.compose}" for n in nodes],
            hoverinfo='text'
        ))

    fig.update_layout(
        title='Capas topológicas (color = hook)',
        height=600,
        xaxis=dict(title='Capa', showgrid=False, zeroline=False),
        yaxis=dict(showticklabels=False, showgrid=False, zeroline=False),
    )
    return fig


def nodes_table(spec):
    rows = []
    for node in spec.nodes:
        rows.append({
            'Nodo': node.id,
            'Dependencias': ", ".join(node.deps),
            'Compose': node.compose,
            'Hook': node.after_query or "",
            'Modelo': node.model,
            'Claves $db': ", ".join(find_placeholders(node.prompt)),
            'Caracteres': len(node.prompt),
        })
    return pd.DataFrame(rows)

# Página

def main():
    st.title("🕸️ Grafo")

    graphs = sorted((ASSETS_DIR / "graphs").glob("*.json"))
    names = [path.name for path in graphs]
    current = Path(st.session_state.get('graph_path', graphs[0])).name
    choice = st.sidebar.selectbox(
        "Grafo incluido",
        options=names,
        index=names.index(current) if current in names else 0
    )
    uploaded = st.sidebar.file_uploader("O sube un archivo de grafo", type=['json'])

    try:
        if uploaded is not None:
            spec = GraphSpec.from_json(uploaded.getvalue().decode('utf-8'))
            schema_path = None
        else:
            path = ASSETS_DIR / "graphs" / choice
            st.session_state.graph_path = str(path)
            spec = GraphSpec.load(path)
            schema_path = ASSETS_DIR / "databases" / choice
    except (PromptGraphError, ValueError) as exc:
        st.error(f"No se pudo leer el grafo: {exc}")
        return

    schema = None
    if schema_path is not None and schema_path.exists():
        schema = json.loads(schema_path.read_text(encoding='utf-8'))

    col1, col2, col3 = st.columns(3)
    with col1:
        st.metric("Nodos", len(spec))
    with col2:
        st.metric("Aristas", len(spec.edges()))
    with col3:
        st.metric("Con hook", sum(1 for n in spec.nodes if n.after_query))

    st.divider()

    st.header("Validación")
    report = validate(spec, schema=schema)
    if report.ok:
        st.success("Sin hallazgos: el grafo se puede ejecutar")
    else:
        st.warning(f"{len(report)} hallazgos")
        st.dataframe(pd.DataFrame([f.to_dict() for f in report.findings]), use_container_width=True)

    st.divider()

    st.header("Estructura")
    try:
        st.plotly_chart(create_graph_figure(spec), use_container_width=True)
    except nx.NetworkXUnfeasible:
        st.error("El grafo tiene ciclos; no hay orden topológico")

    st.dataframe(nodes_table(spec), use_container_width=True, hide_index=True)

    node_id = st.selectbox("Ver prompt del nodo", options=spec.ids)
    if node_id:
        st.code(spec.get(node_id).prompt, language='text')


if __name__ == "__main__":
    main()
