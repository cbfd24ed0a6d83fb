"""
Engine Package
Expression evaluation, LTLf monitoring, automata and the step semantics
"""
from engine.evaluator import RuntimeFault, eval_expr
from engine.ltlf import Monitor, eval_finite, to_formula

__all__ = ['RuntimeFault', 'eval_expr', 'Monitor', 'eval_finite', 'to_formula']
