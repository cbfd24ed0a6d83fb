"""
Testgen Package
Scheduling graphs, guard solving and test suite generation
"""
from testgen.generator import GenerationBudget, generate
from testgen.solver import UNSAT, UnsupportedTerm, solve_guard
from testgen.suite_io import load_suite, serialize_suite

__all__ = ['GenerationBudget', 'generate', 'UNSAT', 'UnsupportedTerm', 'solve_guard', 'load_suite', 'serialize_suite']
