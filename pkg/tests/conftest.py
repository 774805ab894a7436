import json
import threading
import pytest
import sys
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

# Agregar el directorio raíz del proyecto al PYTHONPATH
# Esto permite importar prompt_graph desde cualquier test
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from prompt_graph.config import ASSETS_DIR
from prompt_graph.models.backend import BackendProfile
from prompt_graph.models.scripted import Script, ScriptedBackend, ScriptRule


def pytest_configure(config):
    """
    Hook que se ejecuta al inicio de la sesión de tests.

    Registra markers personalizados que pueden usarse para categorizar tests.
    """
    config.addinivalue_line(
        "markers", "slow: marca tests que son lentos de ejecutar"
    )
    config.addinivalue_line(
        "markers", "integration: marca tests de integración"
    )


@pytest.fixture
def assets_dir():
    """Directorio de assets incluidos en el paquete (grafos, bases, guiones)."""
    return ASSETS_DIR


@pytest.fixture
def scripted_backend():
    """
    Fábrica de backends guionados.

    Acepta reglas como `ScriptRule` o como dicts con el formato de los
    archivos de guion (`{"node": ..., "pass": ..., "response": ...}`).

    Uso:
        def test_algo(scripted_backend):
            backend = scripted_backend([{"node": "a", "response": "hola"}])
    """
    def _make(rules, profile_id="scripted"):
        parsed = [r if isinstance(r, ScriptRule) else ScriptRule.from_dict(r) for r in rules]
        return ScriptedBackend(BackendProfile(id=profile_id, kind="scripted"), Script(parsed, name="test"))
    return _make


@pytest.fixture
def print_trace():
    """
    Fixture helper para imprimir una traza de pasada durante debugging.

    Uso:
        def test_algo(print_trace):
            trace = run_pass(...)
            print_trace(trace, "Después de la pasada 1")
    """
    def _print(trace, message=""):
        print(f"\n{'='*60}")
        if message:
            print(f"Traza: {message}")
        print(f"{'='*60}")
        print(f"Pasada: {trace.pass_index}  Paso: {trace.step}")
        print(f"Orden: {trace.order}")
        for entry in trace.entries:
            print(f"  {entry.node_id}: status={entry.status} retries={entry.retries} "
                  f"tokens={entry.usage.total_tokens} ops={len(entry.ops)}")
        if trace.aborted:
            print(f"Abortada en '{trace.aborted_at}': {trace.abort_cause}")
        print(f"{'='*60}\n")
    return _print


class _StubState:
    def __init__(self, responses):
        self.responses = list(responses)
        self.requests = []
        self.lock = threading.Lock()

    def next_response(self):
        with self.lock:
            if len(self.responses) > 1:
                return self.responses.pop(0)
            return self.responses[0]


def _make_handler(state):
    class _Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            body = json.loads(self.rfile.read(length) or b"{}")
            state.requests.append({
                "path": self.path,
                "body": body,
                "authorization": self.headers.get("Authorization"),
            })
            status, payload = state.next_response()
            data = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def log_message(self, *args):
            pass

    return _Handler


def completion_payload(content, prompt_tokens=10, completion_tokens=5):
    """Cuerpo de respuesta chat-completions mínimo."""
    return {
        "choices": [{"message": {"role": "assistant", "content": content}}],
        "usage": {"prompt_tokens": prompt_tokens, "completion_tokens": completion_tokens},
    }


@pytest.fixture
def stub_server():
    """
    Servidor HTTP local que imita un endpoint chat-completions.

    Se le pasa la lista de respuestas `(status, payload)`; la última se
    repite indefinidamente. Devuelve (url_base, estado) donde el estado
    guarda las peticiones recibidas.
    """
    servers = []

    def _start(responses):
        state = _StubState(responses)
        server = ThreadingHTTPServer(("127.0.0.1", 0), _make_handler(state))
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        servers.append(server)
        host, port = server.server_address
        return f"http://{host}:{port}/v1", state

    yield _start

    for server in servers:
        server.shutdown()
        server.server_close()
