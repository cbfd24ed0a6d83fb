"""
Language Package
Lexer, parser, renderer and typechecker of SCSL
"""
from language.parser import parse, parse_expression, parse_file
from language.render import render, render_expr
from language.typecheck import typecheck

__all__ = ['parse', 'parse_expression', 'parse_file', 'render', 'render_expr', 'typecheck']
