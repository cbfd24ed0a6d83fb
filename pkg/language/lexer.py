"""
SCSL Lexer
Token definitions for the scenario specification language (ply.lex)
"""
from dataclasses import dataclass
from typing import List, Tuple

import ply.lex as lex

from models.source import Diagnostic, SourceSpan

keywords = set('''
  enum end type record global const constraint function external
  object auxiliary in out cycletime
  elementary scenario precondition spec initact cndact chg
  systemtest collaboration interface from to for schedule
  instance of if then else endif
  true false null union inter forall min
  G F X U
'''.split())

tokens = '''
  IDENT INT REAL STRING
  IFF IMPLIES AND OR NOT
  EQ NE LE GE LT GT ASSIGN
  PLUS MINUS TIMES DIVIDE SETMINUS HASH
  DOTDOT DOT COMMA COLON SEMI PIPE
  LPAREN RPAREN LBRACKET RBRACKET LBRACE RBRACE
'''.split() + [kw.upper() for kw in sorted(keywords)]

t_IFF = r'<=>'
t_IMPLIES = r'=>'
t_AND = r'&&'
t_OR = r'\|\|'
t_NE = r'!='
t_NOT = r'!'
t_LE = r'<='
t_GE = r'>='
t_LT = r'<'
t_GT = r'>'
t_ASSIGN = r':='
t_EQ = r'='
t_PLUS = r'\+'
t_MINUS = r'-'
t_TIMES = r'\*'
t_DIVIDE = r'/'
t_SETMINUS = r'\\'
t_HASH = r'\#'
t_DOTDOT = r'\.\.'
t_DOT = r'\.'
t_COMMA = r','
t_COLON = r':'
t_SEMI = r';'
t_PIPE = r'\|'
t_LPAREN = r'\('
t_RPAREN = r'\)'
t_LBRACKET = r'\['
t_RBRACKET = r'\]'
t_LBRACE = r'\{'
t_RBRACE = r'\}'

t_ignore = ' \t\r'


def t_COMMENTS(t):
    r'--[^\n]*'
    pass


def t_REAL(t):
    r'\d+\.\d+'
    t.value = float(t.value)
    return t


def t_INT(t):
    r'\d+'
    t.value = int(t.value)
    return t


def t_STRING(t):
    r'"(?:[^"\\\n]|\\.)*"'
    t.value = t.value[1:-1].replace('\\"', '"')
    return t


def t_IDENT(t):
    r'[A-Za-z_]\w*'
    if t.value in keywords:
        t.type = t.value.upper()
    return t


def t_newline(t):
    r'\n+'
    t.lexer.lineno += len(t.value)
    t.lexer.line_start = t.lexpos + len(t.value)


def t_error(t):
    t.lexer.errors.append((t.lexer.lineno, t.lexpos, t.value[0]))
    t.lexer.skip(1)


_lexer = lex.lex(debug=False, optimize=False, errorlog=lex.NullLogger())


@dataclass
class Token:
    type: str
    value: object
    span: SourceSpan


EOF = "EOF"


def tokenize(source: str, filename: str = "<input>") -> Tuple[List[Token], List[Diagnostic]]:
    """
    Split source text into tokens.

    Returns:
        (tokens ending with an EOF token, lexical diagnostics)
    """
    lexer = _lexer.clone()
    lexer.lineno = 1
    lexer.line_start = 0
    lexer.errors = []
    lexer.input(source)

    result: List[Token] = []
    while True:
        tok = lexer.token()
        if tok is None:
            break
        col = tok.lexpos - lexer.line_start + 1
        width = lexer.lexpos - tok.lexpos
        span = SourceSpan(filename, tok.lineno, col, tok.lineno, col + max(width, 1) - 1)
        result.append(Token(tok.type, tok.value, span))

    end_col = len(source) - lexer.line_start + 1
    result.append(Token(EOF, None, SourceSpan(filename, lexer.lineno, max(end_col, 1),
                                              lexer.lineno, max(end_col, 1))))

    diagnostics = []
    for line, pos, char in lexer.errors:
        line_start = source.rfind("\n", 0, pos) + 1
        col = pos - line_start + 1
        diagnostics.append(Diagnostic.error(f"unexpected character {char!r}",
                                            SourceSpan(filename, line, col, line, col)))
    return result, diagnostics

