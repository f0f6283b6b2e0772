"""
Real-valued function expressions such as "exp(x)*exp(y)" or "min(x, y)^2".

Grammar, loosest binding first:

    expr   := expr ('+' | '-') expr          left-assoc
            | expr ('*' | '/') expr          left-assoc
            | '-' expr                       binds looser than '^'
            | expr '^' expr                  right-assoc
            | number | name | name '(' expr {',' expr} ')' | '(' expr ')'

Functions: exp, ln, abs, sqrt (one argument), min, max (two arguments).
"""
import re
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from gpvm.errors import ExprSyntaxError, FunctionUndefined, UnboundVariable, UnknownIdentifier

FUNCTIONS = {
    'exp': (1, np.exp),
    'ln': (1, np.log),
    'abs': (1, np.abs),
    'sqrt': (1, np.sqrt),
    'min': (2, np.minimum),
    'max': (2, np.maximum),
}

# binding powers
BINARY = {'+': (10, 'left'), '-': (10, 'left'), '*': (20, 'left'), '/': (20, 'left'), '^': (40, 'right')}
UNARY_MINUS = 30
ATOM = 100

ATOM_START = frozenset({'number', 'identifier', '(', '-'})


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: 'Node'


@dataclass(frozen=True)
class BinOp:
    op: str
    left: 'Node'
    right: 'Node'


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple['Node', ...]


Node = Union[Num, Var, Neg, BinOp, Call]


@dataclass(frozen=True)
class Token:
    kind: str  # number, identifier, an operator / punctuation character, or end
    text: str
    offset: int  # byte offset


_TOKEN_RE = re.compile(r'''
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<identifier>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),])
''', re.VERBOSE)


def tokenize(src):
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ExprSyntaxError(f'unexpected character {src[pos]!r}', _byte_offset(src, pos),
                                  ATOM_START | set(BINARY) | {')', ','})
        kind = m.lastgroup
        if kind != 'ws':
            text = m.group()
            tokens.append(Token(text if kind == 'op' else kind, text, _byte_offset(src, pos)))
        pos = m.end()
    tokens.append(Token('end', '', _byte_offset(src, len(src))))
    return tokens


def _byte_offset(src, index):
    return len(src[:index].encode('utf-8'))


class _Parser:
    def __init__(self, src, variables):
        self.tokens = tokenize(src)
        self.pos = 0
        self.variables = variables

    @property
    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.peek
        if tok.kind != kind:
            raise ExprSyntaxError(f'unexpected {_describe(tok)}', tok.offset, {kind})
        return self.advance()

    def parse(self):
        node = self.expression(0)
        tok = self.peek
        if tok.kind != 'end':
            raise ExprSyntaxError(f'unexpected {_describe(tok)}', tok.offset, set(BINARY) | {'end'})
        return node

    def expression(self, min_bp):
        lhs = self.prefix()
        while self.peek.kind in BINARY:
            bp, assoc = BINARY[self.peek.kind]
            if bp < min_bp:
                break
            op = self.advance().kind
            rhs = self.expression(bp + 1 if assoc == 'left' else bp)
            lhs = BinOp(op, lhs, rhs)
        return lhs

    def prefix(self):
        tok = self.peek
        if tok.kind == '-':
            self.advance()
            return Neg(self.expression(UNARY_MINUS))
        if tok.kind == 'number':
            self.advance()
            value = float(tok.text)
            if not np.isfinite(value):
                raise ExprSyntaxError(f'number {tok.text!r} overflows a double', tok.offset)
            return Num(value)
        if tok.kind == '(':
            self.advance()
            node = self.expression(0)
            self.expect(')')
            return node
        if tok.kind == 'identifier':
            self.advance()
            if tok.text in FUNCTIONS:
                return self.call(tok)
            if tok.text not in self.variables:
                raise UnknownIdentifier(tok.text, tok.offset)
            return Var(tok.text)
        raise ExprSyntaxError(f'unexpected {_describe(tok)}', tok.offset, ATOM_START)

    def call(self, name_tok):
        self.expect('(')
        args = [self.expression(0)]
        while self.peek.kind == ',':
            self.advance()
            args.append(self.expression(0))
        self.expect(')')
        arity = FUNCTIONS[name_tok.text][0]
        if len(args) != arity:
            raise ExprSyntaxError(f'{name_tok.text} takes {arity} argument(s), got {len(args)}',
                                  name_tok.offset)
        return Call(name_tok.text, tuple(args))


def _describe(tok):
    return 'end of input' if tok.kind == 'end' else f'{tok.text!r}'


@dataclass(frozen=True)
class FuncExpr:
    """Parsed expression over an ordered tuple of declared variables."""
    ast: Node
    variables: Tuple[str, ...]

    def __call__(self, *args):
        if len(args) != len(self.variables):
            raise TypeError(f'expected {len(self.variables)} arguments, got {len(args)}')
        return evaluate_expr(self, dict(zip(self.variables, args)))

    def __str__(self):
        return to_source(self.ast)


def parse(src, variables=('x', 'y')):
    """
    Parse an expression.
    Args:
        src: expression text
        variables: declared variable names, in call order
    Returns:
        FuncExpr
    """
    variables = tuple(variables)
    return FuncExpr(_Parser(src, frozenset(variables)).parse(), variables)


def _eval(node, env):
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Var):
        if node.name not in env:
            raise UnboundVariable(node.name)
        return np.float64(env[node.name])
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, BinOp):
        left, right = _eval(node.left, env), _eval(node.right, env)
        if node.op == '+':
            return left + right
        if node.op == '-':
            return left - right
        if node.op == '*':
            return left * right
        if node.op == '/':
            return np.divide(left, right)
        return np.power(left, right)
    if isinstance(node, Call):
        return FUNCTIONS[node.name][1](*[_eval(a, env) for a in node.args])
    raise TypeError(f'not an expression node: {node!r}')


def evaluate_expr(e, bindings):
    """
    IEEE double evaluation.
    Args:
        e: FuncExpr or bare AST node
        bindings: variable name → real
    Returns:
        float; raises FunctionUndefined when the result is NaN
    """
    node = e.ast if isinstance(e, FuncExpr) else e
    with np.errstate(all='ignore'):
        value = float(_eval(node, bindings))
    if np.isnan(value):
        raise FunctionUndefined(f'{to_source(node)} is undefined at {dict(bindings)}')
    return value


def _precedence(node):
    if isinstance(node, BinOp):
        return BINARY[node.op][0]
    if isinstance(node, Neg):
        return UNARY_MINUS
    return ATOM


def _wrap(node, needs):
    text = to_source(node)
    return f'({text})' if needs else text


def to_source(node):
    """Canonical text with the fewest parentheses that parse back to the same tree."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return '-' + _wrap(node.operand, _precedence(node.operand) < UNARY_MINUS)
    if isinstance(node, Call):
        return f'{node.name}({", ".join(to_source(a) for a in node.args)})'
    bp, assoc = BINARY[node.op]
    lp, rp = _precedence(node.left), _precedence(node.right)
    if assoc == 'left':
        left = _wrap(node.left, lp < bp)
        right = _wrap(node.right, rp <= bp)
    else:
        left = _wrap(node.left, lp <= bp)
        right = _wrap(node.right, rp < bp)
    return f'{left} {node.op} {right}'
