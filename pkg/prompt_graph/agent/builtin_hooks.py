"""
Hooks after-query integrados del agente.

Cada hook se referencia por id desde el archivo de grafo (`after_query`).
Todos parsean la respuesta del modelo y, cuando corresponde, escriben en
la base de datos en stage o devuelven DynamicOps para la pasada actual.
"""
import logging
from typing import Any, Dict

from ..core.base import DynamicOp, NodeDef
from ..errors import MisconfiguredNodeSet, NonPositiveRepeats, SchemaViolation, UnknownAction
from ..runtime.hooks import AfterQueryHook, HookContext, HookRegistry, HookResult
from ..runtime.parsing import BlockShape, parse_structured_block, parse_yes_no
from ..store.history import patch_step_action
from .knowledge import KnowledgeState, SkillEntry, kb_commit, select_skill, unknown_merge
from .patterns import (
    ACTIVE_SKILL_KEY,
    GateDecision,
    conditional_branch,
    emit_action,
    feedback_due,
    gate_branch,
    normalize_action_name,
)

logger = logging.getLogger(__name__)


def _parse_map(answer: str) -> Dict[str, Any]:
    return parse_structured_block(answer, BlockShape.MAP)


class GateBranchHook(AfterQueryHook):
    hook_id = "gate_branch"
    contract = "mapa con los siete campos yes/no del gate"
    db_effect = "escribe 'gate'; puede retirar planner y KB de la pasada"

    def run(self, answer: str, ctx: HookContext) -> HookResult:
        decision = GateDecision.from_answer(_parse_map(answer))
        ops = gate_branch(decision, ctx.graph, ctx.settings.agent)
        ctx.database.set("gate", decision.to_dict())
        return HookResult(parsed=decision.to_dict(), ops=ops)


class KbAddHook(AfterQueryHook):
    hook_id = "kb_add"
    contract = "mapa item -> flags (discovered, general, unknown, concrete_and_precise, solid)"
    db_effect = "mueve items de 'unknown' a 'kb'"

    def run(self, answer: str, ctx: HookContext) -> HookResult:
        parsed = _parse_map(answer)
        kb_commit(parsed, KnowledgeState.from_database(ctx.database)).to_database(ctx.database)
        return HookResult(parsed=parsed)


class UnknownMergeHook(AfterQueryHook):
    hook_id = "unknown_merge"
    contract = "mapa item -> {info, knowledge, unknown, novel, general, relevant, correct}"
    db_effect = "agrega items nuevos a 'unknown'"

    def run(self, answer: str, ctx: HookContext) -> HookResult:
        parsed = _parse_map(answer)
        unknown_merge(parsed, KnowledgeState.from_database(ctx.database)).to_database(ctx.database)
        return HookResult(parsed=parsed)


class ActionEmitHook(AfterQueryHook):
    hook_id = "action_emit"
    contract = "mapa {action, repeats, hazard}"
    db_effect = "escribe 'action'"

    def run(self, answer: str, ctx: HookContext) -> HookResult:
        parsed = _parse_map(answer)
        actions = ctx.actions or (normalize_action_name(parsed.get("action", "")),)
        try:
            command = emit_action(parsed, actions, ctx.settings.limits.max_repeats)
        except (UnknownAction, NonPositiveRepeats) as exc:
            # Al modelo se le pide corregir en vez de abortar la pasada
            raise SchemaViolation(f"{exc}; acciones válidas: {', '.join(actions)}") from exc
        ctx.database.set("action", command.to_dict())
        return HookResult(parsed=command.to_dict())


class StoreSubgoalHook(AfterQueryHook):
    hook_id = "store_subgoal"
    contract = "mapa {subgoal, completion_criteria, guide}"
    db_effect = "actualiza 'subgoals'"

    def run(self, answer: str, ctx: HookContext) -> HookResult:
        parsed = _parse_map(answer)
        if not parsed.get("subgoal"):
            raise SchemaViolation("Falta el campo 'subgoal'")
        ctx.database.set("subgoals", {**ctx.database.get("subgoals", {}), **parsed})
        return HookResult(parsed=parsed)


class SkillSelectHook(AfterQueryHook):
    hook_id = "skill_select"
    contract = "{nombre_skill: [descripción, parámetros, guía]}"
    db_effect = "agrega el skill a 'skills' si es nuevo y fija 'active_skill'"

    def run(self, answer: str, ctx: HookContext) -> HookResult:
        entry = SkillEntry.from_answer(_parse_map(answer))
        library, skill, created = select_skill(ctx.database.get("skills", {}), entry)
        ctx.database.set("skills", library)
        ctx.database.set(ACTIVE_SKILL_KEY, skill.name)
        return HookResult(parsed={"skill": skill.name, "created": created})


class StorePlanHook(AfterQueryHook):
    hook_id = "store_plan"
    contract = "mapa con 'plan-sketch', 'details', 'target', 'relevance-crieria', 'expiration-condition'"
    db_effect = "actualiza 'action_summary'"

    def run(self, answer: str, ctx: HookContext) -> HookResult:
        parsed = _parse_map(answer)
        if "plan-sketch" not in parsed:
            raise SchemaViolation("Falta el campo 'plan-sketch'")
        if "detials" in parsed and "details" not in parsed:
            parsed["details"] = parsed.pop("detials")
        ctx.database.set("action_summary", {**ctx.database.get("action_summary", {}), **parsed})
        return HookResult(parsed=parsed)


class StoreActionReviewHook(AfterQueryHook):
    hook_id = "store_action_review"
    contract = "mapa {action, repeats, target, success, causes_of_failure}"
    db_effect = "completa el resumen de acción del paso anterior en 'history'"

    # La acción y las repeticiones ya las registra el entorno
    REVIEW_FIELDS = ("target", "success", "causes_of_failure")

    def run(self, answer: str, ctx: HookContext) -> HookResult:
        parsed = _parse_map(answer)
        review = {key: parsed[key] for key in self.REVIEW_FIELDS if key in parsed}
        if review and ctx.step is not None and ctx.step > 1:
            patch_step_action(ctx.database, ctx.step - 1, review)
        return HookResult(parsed=parsed)


class FeedbackTriggerHook(AfterQueryHook):
    hook_id = "feedback_trigger"
    contract = "texto libre (resumen del plan)"
    db_effect = "ninguno; cada N pasos del skill activo agrega el nodo de feedback"

    def run(self, answer: str, ctx: HookContext) -> HookResult:
        agent = ctx.settings.agent
        skill = ctx.database.get(ACTIVE_SKILL_KEY, None)
        if not skill or ctx.step is None:
            return HookResult(parsed=answer)
        if not feedback_due(ctx.database, skill, ctx.step, agent.feedback_every):
            return HookResult(parsed=answer)
        node = NodeDef(
            id=agent.feedback_node,
            prompt=agent.feedback_prompt,
            deps=(ctx.node.id,),
            compose="skill_feedback",
            after_query="store_feedback",
        )
        logger.debug("Feedback del skill '%s' en el paso %d", skill, ctx.step)
        return HookResult(parsed=answer, ops=[DynamicOp.add_node(node)])


class StoreFeedbackHook(AfterQueryHook):
    hook_id = "store_feedback"
    contract = "texto libre"
    db_effect = "escribe 'feedback.<skill>' y 'skill_feedback'"

    def run(self, answer: str, ctx: HookContext) -> HookResult:
        text = answer.strip()
        skill = ctx.database.get(ACTIVE_SKILL_KEY, None)
        if skill:
            ctx.database.set(f"feedback.{skill}", text)
        ctx.database.set("skill_feedback", text)
        return HookResult(parsed=text)


class YesNoBranchHook(AfterQueryHook):
    hook_id = "yes_no_branch"
    contract = "yes/no"
    db_effect = "ninguno; agrega el nodo de la rama elegida"

    def run(self, answer: str, ctx: HookContext) -> HookResult:
        rule = ctx.settings.agent.branches.get(ctx.node.id)
        if rule is None:
            raise MisconfiguredNodeSet(ctx.node.id)
        node_yes = NodeDef(id=rule.yes_id, prompt=rule.yes_prompt, deps=(ctx.node.id,))
        node_no = NodeDef(id=rule.no_id, prompt=rule.no_prompt, deps=(ctx.node.id,))
        op = conditional_branch(answer, node_yes, node_no, after=ctx.node.id)
        ops = [op] + [DynamicOp.add_edge(op.target, later) for later in rule.before]
        return HookResult(parsed=parse_yes_no(answer), ops=ops)


BUILTIN_HOOKS = (
    GateBranchHook,
    KbAddHook,
    UnknownMergeHook,
    ActionEmitHook,
    StoreSubgoalHook,
    SkillSelectHook,
    StorePlanHook,
    StoreActionReviewHook,
    FeedbackTriggerHook,
    StoreFeedbackHook,
    YesNoBranchHook,
)


def register_builtin_hooks(registry: HookRegistry) -> HookRegistry:
    for hook_class in BUILTIN_HOOKS:
        registry.register(hook_class())
    return registry
