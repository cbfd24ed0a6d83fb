"""
Action Interpreter
Executes initact / cndact statement lists against a pluggable sink
"""
from typing import Any, Sequence

from config import SYMBOL_FRAME
from engine.evaluator import Env, RuntimeFault, evaluate, _bool
from models.enums import FaultKind
from models.specification import (
    Action, Assign, CollCreateInterface, CollCreateObject, CollDelete, Expr, IfAction, Name,
)


class ActionSink:
    """
    Receives the effects of executed actions.

    Subclasses decide where writes go: auxiliary variables, the next
    valuation, or the collaboration's pending mutations.
    """

    def assign(self, target: Expr, value: Any, env: Env):
        raise NotImplementedError

    def assign_frame(self, value: Expr, env: Env):
        """frame := value; value is a set of parameter references, not values"""

    def delete(self, action: CollDelete, env: Env):
        pass

    def create_object(self, action: CollCreateObject, env: Env):
        pass

    def create_interface(self, action: CollCreateInterface, env: Env):
        pass


def execute(actions: Sequence[Action], env: Env, sink: ActionSink):
    """Run statements in order; list arguments of popfront are rebound before the assignment"""
    for action in actions:
        if isinstance(action, Assign) and isinstance(action.target, Name) and action.target.name == SYMBOL_FRAME:
            sink.assign_frame(action.value, env)
        elif isinstance(action, Assign):
            env.effects.clear()
            value = evaluate(action.value, env)
            for name, rest in list(env.effects.items()):
                sink.assign(Name(name), rest, env)
            env.effects.clear()
            sink.assign(action.target, value, env)
        elif isinstance(action, IfAction):
            branch = action.then if _bool(evaluate(action.cond, env), action.cond) else action.orelse
            execute(branch, env, sink)
        elif isinstance(action, CollDelete):
            sink.delete(action, env)
        elif isinstance(action, CollCreateObject):
            sink.create_object(action, env)
        elif isinstance(action, CollCreateInterface):
            sink.create_interface(action, env)
        else:
            raise RuntimeFault(FaultKind.TYPE_ERROR, f"unknown action {type(action).__name__}")
