"""
Línea de comandos de prompt_graph.

    prompt-graph build    <grafo.json>
    prompt-graph run      --graph G --env miniforage --script S [--max-steps N] [--trace-out T]
    prompt-graph validate <grafo.json> [--database D]
    prompt-graph trace    <traza.jsonl> [--node N] [--pass P] [--step T]
    prompt-graph serve-env miniforage

Códigos de salida: 0 éxito, 2 validación, 3 fallo de un nodo o del
entorno, 4 fallo del backend.
"""
import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape

from ..version import __version__
from ..agent.episode import EpisodeResult, run_episode
from ..config import ASSETS_DIR, load_settings
from ..core.spec_io import GraphSpec, build_graph, validate
from ..env.base import create_environment
from ..env.stdio import serve
from ..errors import BackendError, EpisodeError, NodeEvaluationFailed, PromptGraphError, UnknownProfile
from ..models.backend import load_backend_config
from ..store.database import Database
from .builder import run_builder
from .viewer import view_trace_file

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NODE_FAILURE = 3
EXIT_BACKEND_FAILURE = 4

# Un perfil inexistente es un fallo de configuración del backend
BACKEND_FAILURES = (BackendError, UnknownProfile)


def setup_logging(verbose: bool = False) -> None:
    # stderr: serve-env usa stdout para las tramas
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def default_schema_path(graph_path: Path) -> Path:
    return ASSETS_DIR / "databases" / f"{graph_path.stem}.json"


def _load_database(graph_path: Path, database_path: Optional[str]) -> Database:
    path = Path(database_path) if database_path else default_schema_path(graph_path)
    if path.exists():
        return Database.load(path)
    logger.warning("Sin base de datos inicial para %s; se empieza vacía", graph_path.name)
    return Database()


def _exit_code_for(exc: BaseException) -> int:
    cause = getattr(exc, "cause", None)
    if isinstance(exc, BACKEND_FAILURES) or isinstance(cause, BACKEND_FAILURES):
        return EXIT_BACKEND_FAILURE
    return EXIT_NODE_FAILURE


def build_summary(result: Optional[EpisodeResult], exit_code: int,
                  exc: Optional[BaseException] = None) -> Dict[str, Any]:
    summary: Dict[str, Any] = {"status": "ok" if exit_code == EXIT_OK else "failed", "exit_code": exit_code}
    if exc is not None:
        cause = getattr(exc, "cause", None) or exc
        summary["node"] = getattr(exc, "node_id", None)
        summary["error"] = cause.__class__.__name__
        summary["message"] = str(exc)
    if result is not None:
        data = result.to_dict()
        data.pop("passes", None)
        summary["episode"] = data
    return summary


def cmd_build(args: argparse.Namespace, console: Console) -> int:
    schema = None
    if args.database:
        schema = Database.load(args.database).snapshot()
    try:
        saved = run_builder(args.path, console=console, schema=schema)
    except PromptGraphError as exc:
        console.print(f"[red]{escape(str(exc))}[/red]")
        return EXIT_VALIDATION
    return EXIT_OK if saved else EXIT_VALIDATION


def cmd_run(args: argparse.Namespace, console: Console) -> int:
    load_dotenv()
    graph_path = Path(args.graph)
    settings = load_settings(args.config)
    if args.strict_templates:
        settings.limits = dataclasses.replace(settings.limits, strict_templates=True)

    try:
        spec = GraphSpec.load(graph_path)
        graph = build_graph(spec, name=graph_path.stem, max_dynamic_nodes=settings.limits.max_dynamic_nodes)
    except PromptGraphError as exc:
        console.print(f"[red]Grafo inválido: {escape(str(exc))}[/red]")
        return EXIT_VALIDATION

    database = _load_database(graph_path, args.database)
    result: Optional[EpisodeResult] = None
    failure: Optional[BaseException] = None
    exit_code = EXIT_OK
    try:
        router = load_backend_config(args.backend, script=args.script, default_profile=args.profile)
    except (PromptGraphError, OSError, ValueError, TypeError, yaml.YAMLError) as exc:
        failure, exit_code = exc, EXIT_BACKEND_FAILURE
        console.print(f"[red]Configuración de backends inválida: {escape(str(exc))}[/red]")
    else:
        try:
            env = create_environment(args.env)
        except (ValueError, OSError) as exc:
            router.close()
            failure, exit_code = exc, EXIT_NODE_FAILURE
            console.print(f"[red]No se pudo iniciar el entorno: {escape(str(exc))}[/red]")
        else:
            try:
                result = run_episode(graph, env, router, database=database, settings=settings,
                                     seed=args.seed, max_steps=args.max_steps, trace_path=args.trace_out)
            except (NodeEvaluationFailed, EpisodeError) as exc:
                failure = exc
                result = getattr(exc, "partial_result", None)
                exit_code = _exit_code_for(exc)
                where = f" en el nodo '{exc.node_id}'" if isinstance(exc, NodeEvaluationFailed) else ""
                console.print(f"[red]El episodio falló{where}: {escape(str(exc))}[/red]")
            finally:
                env.close()
                router.close()

    summary = build_summary(result, exit_code, failure)
    if args.summary_out:
        Path(args.summary_out).write_text(json.dumps(summary, indent=2, ensure_ascii=False) + "\n",
                                          encoding="utf-8")
    if result is not None:
        console.print(f"Pasos: {result.steps} · recompensa: {result.total_reward:.1f} · "
                      f"logros: {', '.join(result.achievements) or '-'} · "
                      f"tokens: {result.usage.total_tokens}")
    return exit_code


def cmd_validate(args: argparse.Namespace, console: Console) -> int:
    graph_path = Path(args.path)
    try:
        spec = GraphSpec.load(graph_path)
    except (PromptGraphError, ValueError) as exc:
        console.print(f"[red]{escape(str(exc))}[/red]")
        return EXIT_VALIDATION

    schema_path = Path(args.database) if args.database else default_schema_path(graph_path)
    schema = Database.load(schema_path).snapshot() if schema_path.exists() else None
    profile_exists = None
    if args.backend:
        profile_exists = load_backend_config(args.backend).has_profile

    report = validate(spec, schema=schema, profile_exists=profile_exists)
    if report.ok:
        console.print(f"[green]{graph_path.name}: sin hallazgos ({len(spec)} nodos)[/green]")
        return EXIT_OK
    for finding in report.findings:
        console.print(f"[yellow]{escape(str(finding))}[/yellow]")
    console.print(f"{len(report)} hallazgos")
    return EXIT_VALIDATION


def cmd_trace(args: argparse.Namespace, console: Console) -> int:
    try:
        view_trace_file(args.path, console=console, node=args.node, pass_index=args.pass_index,
                        step=args.step, full=args.full)
    except PromptGraphError as exc:
        console.print(f"[red]{escape(str(exc))}[/red]")
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_serve_env(args: argparse.Namespace, console: Console) -> int:
    env = create_environment(args.env)
    served = serve(env, sys.stdin.buffer, sys.stdout.buffer)
    logger.info("serve-env terminó tras %d peticiones", served)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prompt-graph", description="Motor de grafos de prompts")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Logs en nivel DEBUG")
    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build", help="Builder interactivo de grafos")
    build.add_argument("path", help="Archivo de grafo a crear o editar")
    build.add_argument("--database", default=None, help="Base de datos usada como esquema al guardar")
    build.set_defaults(handler=cmd_build)

    run = sub.add_parser("run", help="Ejecuta un episodio")
    run.add_argument("--graph", required=True, help="Archivo de grafo")
    run.add_argument("--env", default="miniforage", help="miniforage o stdio:<comando>")
    run.add_argument("--backend", default=None, help="YAML de backends (por defecto el empaquetado)")
    run.add_argument("--profile", default=None, help="Perfil por defecto del backend")
    run.add_argument("--script", default=None, help="Guion para los perfiles scripted")
    run.add_argument("--config", default=None, help="YAML de límites y del agente")
    run.add_argument("--database", default=None, help="Base de datos inicial (JSON)")
    run.add_argument("--max-steps", type=int, default=None, help="Pasos del episodio")
    run.add_argument("--seed", type=int, default=0, help="Semilla del entorno")
    run.add_argument("--strict-templates", action="store_true", help="Claves $db.…$ ausentes son error")
    run.add_argument("--trace-out", default=None, help="Archivo JSONL de trazas")
    run.add_argument("--summary-out", default=None, help="Resumen del episodio en JSON")
    run.set_defaults(handler=cmd_run)

    val = sub.add_parser("validate", help="Valida un archivo de grafo")
    val.add_argument("path", help="Archivo de grafo")
    val.add_argument("--database", default=None, help="Base de datos usada como esquema")
    val.add_argument("--backend", default=None, help="YAML de backends para comprobar perfiles")
    val.set_defaults(handler=cmd_validate)

    trace = sub.add_parser("trace", help="Muestra un archivo de trazas")
    trace.add_argument("path", help="Archivo JSONL de trazas")
    trace.add_argument("--node", default=None, help="Filtra por id de nodo")
    trace.add_argument("--pass", dest="pass_index", type=int, default=None, help="Filtra por pasada")
    trace.add_argument("--step", type=int, default=None, help="Filtra por paso del entorno")
    trace.add_argument("--full", action="store_true", help="Muestra prompts y respuestas completos")
    trace.set_defaults(handler=cmd_trace)

    srv = sub.add_parser("serve-env", help="Sirve un entorno por stdin/stdout")
    srv.add_argument("env", nargs="?", default="miniforage", help="Entorno a servir")
    srv.set_defaults(handler=cmd_serve_env)
    return parser


def main(argv: Optional[List[str]] = None, console: Optional[Console] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)
    console = console or Console()
    try:
        return args.handler(args, console)
    except (PromptGraphError, OSError, ValueError) as exc:
        console.print(f"[red]{escape(str(exc))}[/red]")
        return EXIT_BACKEND_FAILURE if isinstance(exc, BackendError) else EXIT_NODE_FAILURE


if __name__ == "__main__":
    sys.exit(main())
