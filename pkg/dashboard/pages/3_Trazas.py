import streamlit as st
import sys
from pathlib import Path
import plotly.express as px
import pandas as pd

# Agregar el directorio raíz al path
root_dir = Path(__file__).parent.parent.parent
sys.path.insert(0, str(root_dir))

from prompt_graph.cli.viewer import filter_entries, total_usage
from prompt_graph.errors import CorruptTrace
from prompt_graph.store.trace import parse_records

# Configuración de Página

st.set_page_config(
    page_title="Trazas - Prompt Graph",
    page_icon="🔎",
    layout="wide"
)

# Funciones Auxiliares

def rows_dataframe(rows):
    return pd.DataFrame([
        {
            'Pasada': row.pass_index,
            'Paso': row.step,
            'Nodo': row.entry.node_id,
            'Estado': row.entry.status,
            'Reintentos': row.entry.retries,
            'Prompt': row.entry.usage.prompt_tokens,
            'Respuesta': row.entry.usage.completion_tokens,
            'Ops': len(row.entry.ops),
        }
        for row in rows
    ])


def create_node_tokens_chart(df):
    by_node = df.groupby('Nodo')[['Prompt', 'Respuesta']].sum().reset_index()
    by_node['Total'] = by_node['Prompt'] + by_node['Respuesta']
    by_node = by_node.sort_values('Total', ascending=True)

    fig = px.bar(
        by_node.melt(id_vars='Nodo', value_vars=['Prompt', 'Respuesta'], var_name='Tipo', value_name='Tokens'),
        x='Tokens',
        y='Nodo',
        color='Tipo',
        orientation='h',
        title='Tokens por nodo',
        color_discrete_map={'Prompt': '#4ECDC4', 'Respuesta': '#FF6B6B'}
    )
    fig.update_layout(height=max(400, 22 * len(by_node)))
    return fig

# Página

def main():
    st.title("🔎 Trazas")

    source = st.sidebar.radio("Origen", options=["Último episodio", "Archivo JSONL"])
    traces = []
    if source == "Último episodio":
        traces = st.session_state.get('traces', [])
        if not traces:
            st.info("No hay trazas en la sesión; ejecuta un episodio o sube un archivo")
            return
    else:
        uploaded = st.sidebar.file_uploader("Archivo de trazas", type=['jsonl'])
        if uploaded is None:
            st.info("Sube un archivo JSONL de trazas")
            return
        try:
            traces = parse_records(uploaded.getvalue().decode('utf-8').splitlines())
        except CorruptTrace as exc:
            st.error(f"Traza corrupta: {exc}")
            return

    node_ids = sorted({entry.node_id for trace in traces for entry in trace.entries})
    passes = sorted({trace.pass_index for trace in traces})

    with st.sidebar:
        st.header("Filtros")
        node = st.selectbox("Nodo", options=["(todos)"] + node_ids)
        pass_choice = st.selectbox("Pasada", options=["(todas)"] + [str(p) for p in passes])

    rows = filter_entries(
        traces,
        node=None if node == "(todos)" else node,
        pass_index=None if pass_choice == "(todas)" else int(pass_choice),
    )
    if not rows:
        st.warning("Sin entradas")
        return

    usage = total_usage(rows)
    col1, col2, col3, col4 = st.columns(4)
    with col1:
        st.metric("Entradas", len(rows))
    with col2:
        st.metric("Tokens de prompt", f"{usage.prompt_tokens:,}")
    with col3:
        st.metric("Tokens de respuesta", f"{usage.completion_tokens:,}")
    with col4:
        st.metric("Reintentos", sum(row.entry.retries for row in rows))

    aborted = [trace for trace in traces if trace.aborted]
    for trace in aborted:
        st.error(f"Pasada {trace.pass_index} abortada en '{trace.aborted_at}': {trace.abort_cause}")

    df = rows_dataframe(rows)
    st.plotly_chart(create_node_tokens_chart(df), use_container_width=True)
    st.dataframe(df, use_container_width=True, hide_index=True)

    st.divider()
    st.header("Detalle")
    labels = [f"pasada {row.pass_index} · {row.entry.node_id}" for row in rows]
    index = st.selectbox("Entrada", options=range(len(rows)), format_func=lambda i: labels[i])
    entry = rows[index].entry

    col1, col2 = st.columns(2)
    with col1:
        st.subheader("Prompt compuesto")
        st.code(entry.composed or "", language='text')
    with col2:
        st.subheader("Respuesta")
        st.code(entry.raw_answer or "", language='text')
        st.subheader("Resultado procesado")
        st.json(entry.parsed if isinstance(entry.parsed, (dict, list)) else {"valor": entry.parsed})

    if entry.ops:
        st.subheader("Operaciones dinámicas")
        st.dataframe(pd.DataFrame([op.to_dict() for op in entry.ops]), use_container_width=True)
    if entry.error:
        st.error(entry.error)


if __name__ == "__main__":
    main()
