"""
SCSL Parser
LALR grammar (ply.yacc) turning SCSL source text into a Specification
"""
import sys
from functools import lru_cache
from typing import Any, Dict, List, Optional, Union

import ply.yacc as yacc

from language.lexer import EOF, Token, keywords, tokenize
from language.lexer import tokens as lexer_tokens
from models.enums import Direction
from models.source import Diagnostic, SourceSpan
from models.specification import (
    PRIMITIVE_TYPES, Assign, Binary, Call, Change, CollaborationDecl, CollCreateInterface,
    CollCreateObject, CollDelete, Comprehension, CondAction, ConstDecl, EnumDecl, Expr, Field,
    Forall, FunctionDecl, GlobalConstants, Guard, IfAction, Index, InstanceDecl, InterfaceDecl,
    ListLit, Literal, Name, ObjectInstanceDecl, ObjectTypeDecl, Param, Range, RecordLit,
    ScenarioTypeDecl, SchedLeaf, SchedPar, SchedRef, SchedReplicate, SchedSeq, SetLit,
    Specification, SystemTestConfig, TypeDecl, TypeExpr, Unary,
)
from utils.logger import setup_logger

logger = setup_logger(__name__)

# '.' between a forall binder and its body
tokens = lexer_tokens + ['QDOT']

DECLARATION_STARTS = {"ENUM", "TYPE", "GLOBAL", "OBJECT", "AUXILIARY", "ELEMENTARY", "SYSTEMTEST", "INSTANCE"}
EXPRESSION_STARTS = {"IDENT", "INT", "LPAREN", "LBRACE"}
TYPE_STARTS = {"IDENT", "COLLABORATION"}

BINARY_OPS = {
    "IFF": "<=>", "IMPLIES": "=>", "OR": "||", "AND": "&&", "U": "U",
    "SETMINUS": "\\", "UNION": "union", "INTER": "inter",
    "PLUS": "+", "MINUS": "-", "TIMES": "*", "DIVIDE": "/",
}
COMPARISON_OPS = {"EQ": "=", "NE": "!=", "LT": "<", "LE": "<=", "GT": ">", "GE": ">=", "IN": "in"}
UNARY_OPS = {"NOT": "!", "G": "G", "F": "F", "X": "X", "MINUS": "-", "HASH": "#", "MIN": "min"}
CONSTANTS = {"TRUE": True, "FALSE": False, "NULL": None}

TOKEN_TEXT = {
    "IFF": "<=>", "IMPLIES": "=>", "AND": "&&", "OR": "||", "NOT": "!", "EQ": "=", "NE": "!=",
    "LE": "<=", "GE": ">=", "LT": "<", "GT": ">", "ASSIGN": ":=", "PLUS": "+", "MINUS": "-",
    "TIMES": "*", "DIVIDE": "/", "SETMINUS": "\\", "HASH": "#", "DOTDOT": "..", "DOT": ".",
    "QDOT": ".", "COMMA": ",", "COLON": ":", "SEMI": ";", "PIPE": "|", "LPAREN": "(",
    "RPAREN": ")", "LBRACKET": "[", "RBRACKET": "]", "LBRACE": "{", "RBRACE": "}",
}
TOKEN_TEXT.update({kw.upper(): kw for kw in keywords})
TOKEN_NAMES = {"IDENT": "identifier", "INT": "integer", "REAL": "real literal", "STRING": "string literal"}


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(message)
        self.message = message
        self.span = span


# ════════════════════════════════════════════════════════
# TOKEN SOURCE
# ════════════════════════════════════════════════════════

_readers: List["SourceReader"] = []


class SourceReader:
    """
    Token source handed to ply.yacc, and the declarations collected so far.

    Features:
    - Feeds the lexer output; a '.' not followed by an identifier becomes QDOT
    - Collects declarations as they are reduced, so a parse that gives up at
      end of input still yields everything before the error
    - Duplicate declaration detection and syntax diagnostics with spans
    """

    def __init__(self, lexed: List[Token], filename: str = "<input>"):
        self.tokens = [t for t in lexed if t.type != EOF]
        self.eof_span = lexed[-1].span
        self.filename = filename
        self.pos = 0
        self.parser = None
        self.diagnostics: List[Diagnostic] = []
        self._declared: Dict[tuple, SourceSpan] = {}

        self.enums: List[EnumDecl] = []
        self.types: List[TypeDecl] = []
        self.const_entries: List[ConstDecl] = []
        self.constraints: List[Expr] = []
        self.functions: List[FunctionDecl] = []
        self.object_types: List[ObjectTypeDecl] = []
        self.scenarios: List[ScenarioTypeDecl] = []
        self.systemtest: Optional[SystemTestConfig] = None
        self.instances: List[InstanceDecl] = []

    def token(self) -> Optional[Token]:
        if self.pos >= len(self.tokens):
            return None
        tok = self.tokens[self.pos]
        self.pos += 1
        if tok.type == "DOT":
            following = self.tokens[self.pos] if self.pos < len(self.tokens) else None
            if following is None or following.type != "IDENT":
                return Token("QDOT", tok.value, tok.span)
        return tok

    def run(self, start: str) -> Any:
        self.parser = _parser(start)
        _readers.append(self)
        try:
            return self.parser.parse(lexer=self)
        finally:
            _readers.pop()

    def error(self, message: str, span: SourceSpan):
        self.diagnostics.append(Diagnostic.error(message, span))

    def declare(self, kind: str, name: str, span: SourceSpan):
        key = (kind, name)
        if key in self._declared:
            self.error(f"duplicate declaration of {kind} '{name}'", span)
        else:
            self._declared[key] = span

    def syntax_error(self, tok: Optional[Token]):
        found = "end of input" if tok is None else repr(str(tok.value))
        span = self.eof_span if tok is None else tok.span
        expected = self._expected()
        if expected and expected <= DECLARATION_STARTS | {"$end"}:
            self.error(f"unexpected {found} at top level", span)
            return
        wanted = _describe(expected)
        self.error(f"expected {wanted}, found {found}" if wanted else f"unexpected {found}", span)

    def _expected(self) -> set:
        try:
            state = self.parser.statestack[-1]
            return set(self.parser.action[state]) - {"error"}
        except (AttributeError, IndexError, KeyError):
            return set()

    def specification(self) -> Specification:
        return Specification(
            enums=tuple(self.enums),
            types=tuple(self.types),
            constants=GlobalConstants(tuple(self.const_entries), tuple(self.constraints)),
            functions=tuple(self.functions),
            object_types=tuple(self.object_types),
            scenarios=tuple(self.scenarios),
            systemtest=self.systemtest,
            instances=tuple(self.instances),
        )


def _describe(expected: set) -> Optional[str]:
    names = expected - {"$end"}
    if not names:
        return None
    if EXPRESSION_STARTS <= names:
        return "expression"
    if TYPE_STARTS <= names:
        return "type"
    shown = sorted(f"'{TOKEN_TEXT[n]}'" if n in TOKEN_TEXT else TOKEN_NAMES.get(n, n.lower()) for n in names)
    if len(shown) == 1:
        return shown[0]
    if len(shown) <= 4:
        return ", ".join(shown[:-1]) + " or " + shown[-1]
    return None


# ════════════════════════════════════════════════════════
# SPANS
# ════════════════════════════════════════════════════════

def _first_span(value) -> Optional[SourceSpan]:
    if isinstance(value, list):
        return _first_span(value[0]) if value else None
    return getattr(value, "span", None)


def _last_span(value) -> Optional[SourceSpan]:
    if isinstance(value, list):
        return _last_span(value[-1]) if value else None
    return getattr(value, "span", None)


def _sym(p, i):
    sym = p.slice[i]
    return sym if isinstance(sym, Token) else sym.value


def _join(p, first: int, last: int) -> SourceSpan:
    return _first_span(_sym(p, first)).to(_last_span(_sym(p, last)))


def _extent(p, first: int = 1) -> SourceSpan:
    """Span from symbol `first` through the last symbol that has a location"""
    start = _first_span(_sym(p, first))
    for i in range(len(p) - 1, first - 1, -1):
        end = _last_span(_sym(p, i))
        if end is not None:
            return start.to(end)
    return start


def _binary(op: str, left: Expr, right: Expr) -> Binary:
    return Binary(op, left, right, left.span.to(right.span))


# ════════════════════════════════════════════════════════
# DECLARATIONS
# ════════════════════════════════════════════════════════

def p_specification(p):
    '''specification : declarations'''


def p_declarations(p):
    '''declarations : empty
                    | declarations declaration'''


def p_declarations_error(p):
    '''declarations : declarations error'''
    p.parser.errok()


def p_declaration(p):
    '''declaration : enum_block
                   | type_decl
                   | const_block
                   | function_block
                   | object_type
                   | scenario
                   | systemtest
                   | instance_decl'''


def p_empty(p):
    '''empty :'''
    p[0] = None


def p_opt_semi(p):
    '''opt_semi : empty
                | SEMI'''
    p[0] = p.slice[1] if isinstance(p.slice[1], Token) else None


def p_enum_block(p):
    '''enum_block : ENUM enum_entries END ENUM opt_semi'''


def p_enum_block_error(p):
    '''enum_block : ENUM error END ENUM opt_semi'''
    p.parser.errok()


def p_enum_entries(p):
    '''enum_entries : enum_entry
                    | enum_entries enum_entry'''


def p_enum_entry(p):
    '''enum_entry : IDENT COLON LBRACE enum_literals RBRACE opt_semi'''
    reader = p.lexer
    literals = []
    for tok in p[4]:
        if tok.value in literals:
            reader.error(f"duplicate enum literal '{tok.value}'", tok.span)
        else:
            literals.append(tok.value)
    reader.declare("type", p[1], _join(p, 1, 1))
    reader.enums.append(EnumDecl(p[1], tuple(literals), _extent(p)))


def p_enum_literals(p):
    '''enum_literals : IDENT
                     | enum_literals COMMA IDENT'''
    p[0] = [p.slice[1]] if len(p) == 2 else p[1] + [p.slice[3]]


def p_type_decl(p):
    '''type_decl : TYPE IDENT EQ type opt_semi
                 | TYPE IDENT EQ RECORD LPAREN record_fields RPAREN opt_semi'''
    if len(p) == 6:
        type_ = p[4]
    else:
        type_ = TypeExpr("record", fields=tuple(p[6]), span=_join(p, 4, 7))
    p.lexer.declare("type", p[2], _join(p, 2, 2))
    p.lexer.types.append(TypeDecl(p[2], type_, _extent(p)))


def p_record_fields(p):
    '''record_fields : IDENT COLON type
                     | record_fields COMMA IDENT COLON type'''
    p[0] = [(p[1], p[3])] if len(p) == 4 else p[1] + [(p[3], p[5])]


def p_type_name(p):
    '''type : IDENT
            | COLLABORATION'''
    span = _join(p, 1, 1)
    if p.slice[1].type == "COLLABORATION":
        p[0] = TypeExpr("collaboration", span=span)
    elif p[1] in PRIMITIVE_TYPES:
        p[0] = TypeExpr(p[1], span=span)
    else:
        p[0] = TypeExpr("named", name=p[1], span=span)


def p_type_container(p):
    '''type : IDENT LPAREN type RPAREN'''
    if p[1] not in ("list", "set"):
        p.lexer.error(f"unknown type constructor '{p[1]}'", _join(p, 1, 1))
        p[0] = TypeExpr("named", name=p[1], span=_join(p, 1, 4))
        return
    p[0] = TypeExpr(p[1], elem=p[3], span=_join(p, 1, 4))


def p_type_array(p):
    '''type : type LBRACKET additive RBRACKET'''
    p[0] = TypeExpr("array", elem=p[1], size=p[3], span=_join(p, 1, 4))


def p_const_block(p):
    '''const_block : GLOBAL CONST const_items END CONST opt_semi'''


def p_const_items(p):
    '''const_items : empty
                   | const_items const_item'''


def p_const_entry(p):
    '''const_item : const_names COLON type opt_semi
                  | const_names COLON type ASSIGN expression opt_semi'''
    value = p[5] if len(p) == 7 else None
    whole = _extent(p)
    for tok in p[1]:
        p.lexer.declare("constant", tok.value, tok.span)
        p.lexer.const_entries.append(ConstDecl(tok.value, p[3], value, tok.span.to(whole)))


def p_constraint(p):
    '''const_item : CONSTRAINT expression END CONSTRAINT opt_semi
                  | CONSTRAINT expression SEMI'''
    p.lexer.constraints.append(p[2])


def p_const_item_error(p):
    '''const_item : error SEMI'''
    p.parser.errok()


def p_const_names(p):
    '''const_names : IDENT
                   | const_names COMMA IDENT'''
    p[0] = [p.slice[1]] if len(p) == 2 else p[1] + [p.slice[3]]


def p_function_block(p):
    '''function_block : GLOBAL FUNCTION function_decls END FUNCTION opt_semi'''


def p_function_decls(p):
    '''function_decls : empty
                      | function_decls function_decl'''


def p_function_decl(p):
    '''function_decl : IDENT params COLON type ASSIGN expression opt_semi
                     | EXTERNAL IDENT params COLON type opt_semi'''
    external = p.slice[1].type == "EXTERNAL"
    name, params = (p[2], p[3]) if external else (p[1], p[2])
    _check_params(p.lexer, params, directions=False, consts=False)
    p.lexer.declare("function", name, _join(p, 2 if external else 1, 2 if external else 1))
    p.lexer.functions.append(FunctionDecl(name, tuple(params), p[5] if external else p[4],
                                          None if external else p[6], _extent(p)))


def p_function_decl_error(p):
    '''function_decl : error SEMI'''
    p.parser.errok()


def p_object_type(p):
    '''object_type : OBJECT TYPE IDENT params opt_cycletime END TYPE opt_semi
                   | AUXILIARY OBJECT TYPE IDENT params opt_cycletime END TYPE opt_semi'''
    auxiliary = p.slice[1].type == "AUXILIARY"
    k = 1 if auxiliary else 0
    name, params = p[3 + k], p[4 + k]
    _check_params(p.lexer, params, directions=True, consts=False)
    p.lexer.declare("type", name, _join(p, 3 + k, 3 + k))
    p.lexer.object_types.append(ObjectTypeDecl(name, tuple(params), p[5 + k], auxiliary, _extent(p)))


def p_object_type_error(p):
    '''object_type : OBJECT TYPE error END TYPE opt_semi
                   | AUXILIARY OBJECT TYPE error END TYPE opt_semi'''
    p.parser.errok()


def p_opt_cycletime(p):
    '''opt_cycletime : empty
                     | CYCLETIME INT'''
    if len(p) == 2:
        p[0] = 1
        return
    if p[2] < 1:
        p.lexer.error("cycletime must be at least 1", _join(p, 2, 2))
    p[0] = p[2]


def p_params(p):
    '''params : LPAREN RPAREN
              | LPAREN param_list RPAREN'''
    p[0] = [] if len(p) == 3 else p[2]


def p_param_list(p):
    '''param_list : param
                  | param_list COMMA param'''
    p[0] = [p[1]] if len(p) == 2 else p[1] + [p[3]]


def p_param(p):
    '''param : IDENT COLON type
             | IN IDENT COLON type
             | OUT IDENT COLON type
             | CONST IDENT COLON type'''
    if len(p) == 4:
        p[0] = Param(p[1], p[3], span=_extent(p))
        return
    modifier = p.slice[1].type
    direction = Direction(p[1]) if modifier in ("IN", "OUT") else None
    p[0] = Param(p[2], p[4], direction, modifier == "CONST", _extent(p))


def _check_params(reader: SourceReader, params: List[Param], directions: bool, consts: bool):
    seen = set()
    for param in params:
        if param.direction is not None and not directions:
            reader.error(f"direction '{param.direction.value}' not allowed on parameter '{param.name}'", param.span)
        if param.const and not consts:
            reader.error(f"'const' not allowed on parameter '{param.name}'", param.span)
        if param.name in seen:
            reader.error(f"duplicate parameter '{param.name}'", param.span)
        seen.add(param.name)


# ════════════════════════════════════════════════════════
# SCENARIOS
# ════════════════════════════════════════════════════════

def p_scenario(p):
    '''scenario : ELEMENTARY SCENARIO IDENT params clauses END SCENARIO opt_semi'''
    reader = p.lexer
    precondition = None
    specs = []
    initact = None
    cndacts = []
    for kind, value, span in p[5]:
        if kind == "PRECONDITION":
            if precondition is not None:
                reader.error("duplicate precondition", span)
            precondition = value
        elif kind == "SPEC":
            specs.append(value)
        elif kind == "INITACT":
            if initact is not None:
                reader.error("duplicate initact", span)
            initact = tuple(value)
        else:
            cndacts.append(value)
    _check_params(reader, p[4], directions=False, consts=True)
    reader.declare("scenario", p[3], _join(p, 3, 3))
    reader.scenarios.append(ScenarioTypeDecl(p[3], tuple(p[4]), precondition, tuple(specs), initact,
                                             tuple(cndacts), _extent(p)))


def p_scenario_error(p):
    '''scenario : ELEMENTARY SCENARIO error END SCENARIO opt_semi'''
    p.parser.errok()


def p_clauses(p):
    '''clauses : empty
               | clauses clause'''
    p[0] = [] if len(p) == 2 else p[1] + [p[2]]


def p_clause_expression(p):
    '''clause : PRECONDITION expression opt_semi
              | SPEC expression opt_semi'''
    p[0] = (p.slice[1].type, p[2], _join(p, 1, 1))


def p_clause_initact(p):
    '''clause : INITACT actions'''
    p[0] = ("INITACT", p[2], _join(p, 1, 1))


def p_clause_cndact(p):
    '''clause : CNDACT LBRACKET expression RBRACKET DIVIDE actions
              | CNDACT CHG LPAREN expression RPAREN DIVIDE actions'''
    if len(p) == 7:
        condition = Guard(p[3], span=_join(p, 2, 4))
    else:
        condition = Change(p[4], span=_join(p, 2, 5))
    p[0] = ("CNDACT", CondAction(condition, tuple(p[len(p) - 1]), _extent(p)), _join(p, 1, 1))


def p_actions(p):
    '''actions : empty
               | actions action'''
    if len(p) == 2:
        p[0] = []
    else:
        p[0] = p[1] + ([p[2]] if p[2] is not None else [])


def p_action_assign(p):
    '''action : lvalue ASSIGN expression opt_semi'''
    p[0] = Assign(p[1], p[3], _extent(p))


def p_action_if(p):
    '''action : IF expression THEN actions ENDIF opt_semi
              | IF expression THEN actions ELSE actions ENDIF opt_semi'''
    orelse = p[6] if len(p) == 9 else []
    p[0] = IfAction(p[2], tuple(p[4]), tuple(orelse), _extent(p))


def p_action_delete(p):
    '''action : lvalue LPAREN expression RPAREN opt_semi'''
    coll = _collaboration_of(p, "delete")
    p[0] = CollDelete(coll, p[3], _extent(p)) if coll else None


def p_action_create_object(p):
    '''action : lvalue LPAREN expression COLON IDENT RPAREN opt_semi'''
    coll = _collaboration_of(p, "create")
    target = p[3]
    if isinstance(target, Index) and isinstance(target.base, Name):
        name, index = target.base.name, target.index
    elif isinstance(target, Name):
        name, index = target.name, None
    else:
        p.lexer.error("expected object name", target.span)
        coll = None
    p[0] = CollCreateObject(coll, name, index, p[5], _extent(p)) if coll else None


def p_action_create_interface(p):
    '''action : lvalue LPAREN INTERFACE IDENT opt_index FROM expression TO expression RPAREN opt_semi'''
    coll = _collaboration_of(p, "create")
    p[0] = CollCreateInterface(coll, p[4], p[5], p[7], p[9], _extent(p)) if coll else None


def _collaboration_of(p, operation: str) -> Optional[str]:
    """Collaboration name of coll.<operation>(...), or None after reporting the misuse"""
    target = p[1]
    if isinstance(target, Field) and isinstance(target.base, Name) and target.name == operation:
        return target.base.name
    p.lexer.error(f"expected ':=' or a collaboration {operation}", target.span)
    return None


def p_lvalue(p):
    '''lvalue : IDENT
              | lvalue DOT IDENT
              | lvalue LBRACKET expression RBRACKET'''
    if len(p) == 2:
        p[0] = Name(p[1], _join(p, 1, 1))
    elif len(p) == 4:
        p[0] = Field(p[1], p[3], _join(p, 1, 3))
    else:
        p[0] = Index(p[1], p[3], _join(p, 1, 4))


def p_opt_index(p):
    '''opt_index : empty
                 | LBRACKET expression RBRACKET'''
    p[0] = None if len(p) == 2 else p[2]


# ════════════════════════════════════════════════════════
# SYSTEM TEST
# ════════════════════════════════════════════════════════

def p_systemtest(p):
    '''systemtest : SYSTEMTEST IDENT collaboration END SYSTEMTEST opt_semi
                  | SYSTEMTEST IDENT collaboration schedule_block END SYSTEMTEST opt_semi'''
    if p.lexer.systemtest is not None:
        p.lexer.error("duplicate systemtest declaration", _join(p, 2, 2))
    schedule = p[4] if len(p) == 8 else None
    p.lexer.systemtest = SystemTestConfig(p[2], p[3], schedule, _extent(p))


def p_collaboration(p):
    '''collaboration : COLLABORATION IDENT collab_members END COLLABORATION opt_semi'''
    objects, interfaces, names = [], [], set()
    for member in p[3]:
        if isinstance(member, InterfaceDecl):
            interfaces.append(member)
            continue
        if member.name in names:
            p.lexer.error(f"duplicate object '{member.name}'", member.span)
        names.add(member.name)
        objects.append(member)
    p[0] = CollaborationDecl(p[2], tuple(objects), tuple(interfaces), _extent(p))


def p_collaboration_error(p):
    '''collaboration : COLLABORATION error END COLLABORATION opt_semi'''
    p.parser.errok()
    p[0] = CollaborationDecl("", span=_extent(p))


def p_collab_members(p):
    '''collab_members : empty
                      | collab_members collab_member'''
    p[0] = [] if len(p) == 2 else p[1] + [p[2]]


def p_collab_object(p):
    '''collab_member : IDENT COLON IDENT opt_index opt_semi'''
    p[0] = ObjectInstanceDecl(p[1], p[3], p[4], _extent(p))


def p_collab_interface(p):
    '''collab_member : INTERFACE IDENT opt_index FROM expression TO expression opt_semi
                     | INTERFACE IDENT opt_index FROM expression TO expression FOR IDENT COLON additive DOTDOT additive opt_semi'''
    var = lo = hi = None
    if len(p) > 9:
        var, lo, hi = p[9], p[11], p[13]
    p[0] = InterfaceDecl(p[2], p[3], p[5], p[7], var, lo, hi, _extent(p))


def p_schedule_block(p):
    '''schedule_block : SCHEDULE schedule_instances END SCHEDULE opt_semi
                      | SCHEDULE schedule_instances schedule END SCHEDULE opt_semi'''
    p[0] = p[3] if len(p) == 7 else None


def p_schedule_block_error(p):
    '''schedule_block : SCHEDULE error END SCHEDULE opt_semi'''
    p.parser.errok()
    p[0] = None


def p_schedule_instances(p):
    '''schedule_instances : empty
                          | schedule_instances instance_decl'''


def p_schedule(p):
    '''schedule : branches
                | OR branches'''
    branches = p[len(p) - 1]
    p[0] = branches[0] if len(branches) == 1 else SchedPar(tuple(branches), _extent(p))


def p_branches(p):
    '''branches : branch
                | branches OR branch'''
    p[0] = [p[1]] if len(p) == 2 else p[1] + [p[3]]


def p_branch_replicate(p):
    '''branch : IDENT COLON additive DOTDOT additive sched_item'''
    p[0] = SchedReplicate(p[1], p[3], p[5], p[6], _extent(p))


def p_branch_sequence(p):
    '''branch : sched_seq'''
    items = p[1]
    p[0] = items[0] if len(items) == 1 else SchedSeq(tuple(items), _extent(p))


def p_sched_seq(p):
    '''sched_seq : sched_item
                 | sched_seq SEMI sched_item
                 | sched_seq SEMI'''
    if len(p) == 2:
        p[0] = [p[1]]
    elif len(p) == 4:
        p[0] = p[1] + [p[3]]
    else:
        p[0] = p[1]


def p_sched_item(p):
    '''sched_item : LPAREN schedule RPAREN
                  | IDENT
                  | IDENT LPAREN RPAREN
                  | IDENT LPAREN expr_list RPAREN'''
    if p.slice[1].type == "LPAREN":
        p[0] = p[2]
    elif len(p) == 2:
        p[0] = SchedRef(p[1], _join(p, 1, 1))
    else:
        args = p[3] if len(p) == 5 else []
        p[0] = SchedLeaf(p[1], tuple(args), _extent(p))


def p_instance_decl(p):
    '''instance_decl : INSTANCE IDENT OF SCENARIO IDENT LPAREN RPAREN opt_semi
                     | INSTANCE IDENT OF SCENARIO IDENT LPAREN bindings RPAREN opt_semi'''
    bindings = p[7] if len(p) == 10 else []
    p.lexer.declare("instance", p[2], _join(p, 2, 2))
    p.lexer.instances.append(InstanceDecl(p[2], p[5], tuple(bindings), _extent(p)))


def p_bindings(p):
    '''bindings : IDENT ASSIGN expression
                | bindings COMMA IDENT ASSIGN expression'''
    p[0] = [(p[1], p[3])] if len(p) == 4 else p[1] + [(p[3], p[5])]


# ════════════════════════════════════════════════════════
# EXPRESSIONS
# ════════════════════════════════════════════════════════

def p_expression(p):
    '''expression : iff'''
    p[0] = p[1]


def p_binary(p):
    '''iff : iff IFF implies
       implies : or_expr IMPLIES implies
       or_expr : or_expr OR and_expr
       and_expr : and_expr AND until
       until : unary U until
       setexpr : setexpr SETMINUS additive
               | setexpr UNION additive
               | setexpr INTER additive
       additive : additive PLUS multiplicative
                | additive MINUS multiplicative
       multiplicative : multiplicative TIMES prefix
                      | multiplicative DIVIDE prefix'''
    p[0] = _binary(BINARY_OPS[p.slice[2].type], p[1], p[3])


def p_passthrough(p):
    '''iff : implies
       implies : or_expr
       or_expr : and_expr
       and_expr : until
       until : unary
       unary : comparison
       comparison : setexpr
       setexpr : additive
       additive : multiplicative
       multiplicative : prefix
       prefix : postfix
       postfix : primary'''
    p[0] = p[1]


def p_comparison_chain(p):
    '''comparison : chain'''
    result = p[1][0]
    for step in p[1][1:]:
        result = _binary("&&", result, step)
    p[0] = result


def p_chain(p):
    '''chain : setexpr compare setexpr
             | chain compare setexpr'''
    if isinstance(p[1], list):
        steps, left = p[1], p[1][-1].right
    else:
        steps, left = [], p[1]
    p[0] = steps + [_binary(p[2], left, p[3])]


def p_compare(p):
    '''compare : EQ
               | NE
               | LT
               | LE
               | GT
               | GE
               | IN'''
    p[0] = COMPARISON_OPS[p.slice[1].type]


def p_unary(p):
    '''unary : NOT unary
             | G unary
             | F unary
             | X unary
       prefix : MINUS prefix
              | HASH prefix
              | MIN prefix'''
    p[0] = Unary(UNARY_OPS[p.slice[1].type], p[2], _join(p, 1, 2))


def p_forall(p):
    '''unary : FORALL IDENT COLON additive DOTDOT additive QDOT unary'''
    p[0] = Forall(p[2], p[4], p[6], p[8], _join(p, 1, 8))


def p_postfix_field(p):
    '''postfix : postfix DOT IDENT'''
    p[0] = Field(p[1], p[3], _join(p, 1, 3))


def p_postfix_index(p):
    '''postfix : postfix LBRACKET expression RBRACKET'''
    p[0] = Index(p[1], p[3], _join(p, 1, 4))


def p_primary_literal(p):
    '''primary : INT
               | REAL
               | STRING'''
    p[0] = Literal(p[1], _join(p, 1, 1))


def p_primary_constant(p):
    '''primary : TRUE
               | FALSE
               | NULL'''
    p[0] = Literal(CONSTANTS[p.slice[1].type], _join(p, 1, 1))


def p_primary_name(p):
    '''primary : IDENT'''
    p[0] = Name(p[1], _join(p, 1, 1))


def p_primary_call(p):
    '''primary : IDENT LPAREN RPAREN
               | IDENT LPAREN expr_list RPAREN'''
    args = p[3] if len(p) == 5 else []
    p[0] = Call(p[1], tuple(args), _extent(p))


def p_primary_group(p):
    '''primary : LPAREN expression RPAREN'''
    p[0] = p[2]


def p_primary_record(p):
    '''primary : LPAREN record_items RPAREN'''
    p[0] = RecordLit(tuple(p[2]), _extent(p))


def p_record_items(p):
    '''record_items : IDENT COLON expression
                    | record_items COMMA IDENT COLON expression'''
    p[0] = [(p[1], p[3])] if len(p) == 4 else p[1] + [(p[3], p[5])]


def p_primary_list(p):
    '''primary : LBRACKET RBRACKET
               | LBRACKET expr_list RBRACKET'''
    elements = p[2] if len(p) == 4 else []
    p[0] = ListLit(tuple(elements), _extent(p))


def p_primary_set(p):
    '''primary : LBRACE RBRACE
               | LBRACE expr_list RBRACE'''
    elements = p[2] if len(p) == 4 else []
    p[0] = SetLit(tuple(elements), _extent(p))


def p_primary_range_set(p):
    '''primary : LBRACE IDENT COLON range RBRACE
               | LBRACE IDENT COLON range PIPE expression RBRACE'''
    predicate = p[6] if len(p) == 8 else None
    binder = Name(p[2], _join(p, 2, 2))
    p[0] = Comprehension((binder,), p[2], p[4], predicate, _extent(p))


def p_primary_comprehension(p):
    '''primary : LBRACE expr_list PIPE IDENT COLON range RBRACE
               | LBRACE expr_list PIPE IDENT IN setexpr RBRACE'''
    p[0] = Comprehension(tuple(p[2]), p[4], p[6], None, _extent(p))


def p_range(p):
    '''range : additive DOTDOT additive'''
    p[0] = Range(p[1], p[3], _join(p, 1, 3))


def p_expr_list(p):
    '''expr_list : expression
                 | expr_list COMMA expression'''
    p[0] = [p[1]] if len(p) == 2 else p[1] + [p[3]]


def p_error(tok):
    if _readers:
        _readers[-1].syntax_error(tok)


@lru_cache(maxsize=None)
def _parser(start: str):
    logger.debug(f"Building {start} parser tables")
    return yacc.yacc(module=sys.modules[__name__], start=start, debug=False, write_tables=False,
                     tabmodule=f"scsl_{start}_tab", errorlog=yacc.NullLogger())


# ════════════════════════════════════════════════════════
# ENTRY POINTS
# ════════════════════════════════════════════════════════

def parse(source: str, filename: str = "<input>") -> Union[Specification, List[Diagnostic]]:
    """
    Parse SCSL source text.

    Returns:
        The Specification, or the list of diagnostics when any error was found
    """
    lexed, lex_diagnostics = tokenize(source, filename)
    reader = SourceReader(lexed, filename)
    reader.run("specification")
    diagnostics = lex_diagnostics + reader.diagnostics
    if any(d.is_error for d in diagnostics):
        logger.debug(f"{filename}: {len(diagnostics)} diagnostic(s)")
        return sorted(diagnostics, key=lambda d: (d.span.start_line, d.span.start_col))
    return reader.specification()


def parse_expression(source: str) -> Expr:
    """Parse a single expression (used by tests and the command line)"""
    lexed, diagnostics = tokenize(source)
    if diagnostics:
        raise ParseError(diagnostics[0].message, diagnostics[0].span)
    reader = SourceReader(lexed)
    expr = reader.run("expression")
    if reader.diagnostics or expr is None:
        first = reader.diagnostics[0] if reader.diagnostics else Diagnostic.error("empty expression")
        raise ParseError(first.message, first.span)
    return expr


def parse_file(path: str) -> Union[Specification, List[Diagnostic]]:
    """Read and parse a .scsl file (raises OSError when unreadable)"""
    with open(path, 'r', encoding='utf-8') as f:
        source = f.read()
    return parse(source, path)
