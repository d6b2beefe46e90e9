"""Recursive-descent parser for the camera scripting language.

Precedence, low to high: or, and, not, comparisons (non-chaining),
additive, multiplicative, unary minus, then attribute/call/index
trailers. Everything is left associative.
"""

from ..errors import BadSyntax, InconsistentDedent
from . import lexer as lx
from . import nodes as ast

_COMPARE_OPS = ("==", "!=", "<", "<=", ">", ">=")
_ADD_OPS = ("+", "-")
_MUL_OPS = ("*", "/", "//", "%")


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def at_op(self, *lexemes):
        tok = self.peek()
        return tok.kind == lx.OP and tok.lexeme in lexemes

    def at_kw(self, *words):
        tok = self.peek()
        return tok.kind == lx.KEYWORD and tok.lexeme in words

    def expect_op(self, lexeme):
        tok = self.peek()
        if tok.kind != lx.OP or tok.lexeme != lexeme:
            self.fail("expected %r" % lexeme, tok)
        return self.next()

    def expect_kind(self, kind, what):
        tok = self.peek()
        if tok.kind != kind:
            self.fail("expected %s" % what, tok)
        return self.next()

    def fail(self, expected, tok=None):
        tok = tok or self.peek()
        found = tok.lexeme or tok.kind.lower()
        raise BadSyntax("%s, found %r" % (expected, found),
                        tok.line, tok.column)

    # -- statements ---------------------------------------------------------

    def parse_program(self):
        body = []
        while self.peek().kind != lx.EOF:
            if self.peek().kind == lx.INDENT:
                raise InconsistentDedent("unexpected indent",
                                         self.peek().line)
            body.append(self.statement())
        return ast.Module(body)

    def statement(self):
        tok = self.peek()
        if tok.kind == lx.KEYWORD:
            word = tok.lexeme
            if word == "if":
                return self.if_stmt()
            if word == "while":
                return self.while_stmt()
            if word == "for":
                return self.for_stmt()
            if word in ("break", "continue", "pass"):
                self.next()
                self.end_line()
                cls = {"break": ast.Break, "continue": ast.Continue,
                       "pass": ast.Pass}[word]
                return cls(tok.line)
            if word == "import":
                self.next()
                name = self.expect_kind(lx.IDENT, "a module name")
                self.end_line()
                return ast.Import(name.lexeme, tok.line)
            if word in ("elif", "else"):
                self.fail("expected a statement", tok)
        expr = self.expression()
        if self.at_op("="):
            if not isinstance(expr, ast.Name):
                self.fail("expected a name on the left of '='", tok)
            self.next()
            value = self.expression()
            self.end_line()
            return ast.Assign(expr.id, value, tok.line)
        self.end_line()
        return ast.ExprStmt(expr, tok.line)

    def end_line(self):
        self.expect_kind(lx.NEWLINE, "end of line")

    def block(self):
        self.expect_op(":")
        self.expect_kind(lx.NEWLINE, "a newline after ':'")
        self.expect_kind(lx.INDENT, "an indented block")
        body = [self.statement()]
        while self.peek().kind not in (lx.DEDENT, lx.EOF):
            body.append(self.statement())
        self.expect_kind(lx.DEDENT, "a dedent")
        return body

    def if_stmt(self):
        first = self.next()
        branches = [(self.expression(), self.block())]
        orelse = None
        while self.at_kw("elif"):
            self.next()
            branches.append((self.expression(), self.block()))
        if self.at_kw("else"):
            self.next()
            orelse = self.block()
        return ast.If(branches, orelse, first.line)

    def while_stmt(self):
        first = self.next()
        cond = self.expression()
        return ast.While(cond, self.block(), first.line)

    def for_stmt(self):
        first = self.next()
        var = self.expect_kind(lx.IDENT, "a loop variable")
        if not self.at_kw("in"):
            self.fail("expected 'in'")
        self.next()
        iterable = self.expression()
        return ast.For(var.lexeme, iterable, self.block(), first.line)

    # -- expressions ----------------------------------------------------

    def expression(self):
        return self.or_expr()

    def or_expr(self):
        left = self.and_expr()
        while self.at_kw("or"):
            line = self.next().line
            left = ast.Binop("or", left, self.and_expr(), line)
        return left

    def and_expr(self):
        left = self.not_expr()
        while self.at_kw("and"):
            line = self.next().line
            left = ast.Binop("and", left, self.not_expr(), line)
        return left

    def not_expr(self):
        if self.at_kw("not"):
            line = self.next().line
            return ast.Unary("not", self.not_expr(), line)
        return self.comparison()

    def comparison(self):
        left = self.arith()
        if self.at_op(*_COMPARE_OPS):
            tok = self.next()
            left = ast.Binop(tok.lexeme, left, self.arith(), tok.line)
            if self.at_op(*_COMPARE_OPS):
                self.fail("comparisons do not chain")
        return left

    def arith(self):
        left = self.term()
        while self.at_op(*_ADD_OPS):
            tok = self.next()
            left = ast.Binop(tok.lexeme, left, self.term(), tok.line)
        return left

    def term(self):
        left = self.factor()
        while self.at_op(*_MUL_OPS):
            tok = self.next()
            left = ast.Binop(tok.lexeme, left, self.factor(), tok.line)
        return left

    def factor(self):
        if self.at_op("-"):
            line = self.next().line
            return ast.Unary("-", self.factor(), line)
        return self.postfix()

    def postfix(self):
        node = self.atom()
        while True:
            if self.at_op("."):
                line = self.next().line
                name = self.expect_kind(lx.IDENT, "an attribute name")
                node = ast.Attr(node, name.lexeme, line)
            elif self.at_op("("):
                line = self.next().line
                args = []
                if not self.at_op(")"):
                    args.append(self.expression())
                    while self.at_op(","):
                        self.next()
                        args.append(self.expression())
                self.expect_op(")")
                node = ast.Call(node, args, line)
            elif self.at_op("["):
                line = self.next().line
                index = self.expression()
                self.expect_op("]")
                node = ast.Index(node, index, line)
            else:
                return node

    def atom(self):
        tok = self.peek()
        if tok.kind == lx.INT:
            self.next()
            return ast.Const(int(tok.lexeme), tok.line)
        if tok.kind == lx.FLOAT:
            self.next()
            return ast.Const(float(tok.lexeme), tok.line)
        if tok.kind == lx.STRING:
            self.next()
            return ast.Const(tok.lexeme, tok.line)
        if tok.kind == lx.KEYWORD and tok.lexeme in ("True", "False", "None"):
            self.next()
            value = {"True": True, "False": False, "None": None}[tok.lexeme]
            return ast.Const(value, tok.line)
        if tok.kind == lx.IDENT:
            self.next()
            return ast.Name(tok.lexeme, tok.line)
        if self.at_op("("):
            self.next()
            if self.at_op(")"):
                self.next()
                return ast.TupleLit([], tok.line)
            first = self.expression()
            if self.at_op(","):
                items = [first]
                while self.at_op(","):
                    self.next()
                    if self.at_op(")"):
                        break
                    items.append(self.expression())
                self.expect_op(")")
                return ast.TupleLit(items, tok.line)
            self.expect_op(")")
            return first
        if self.at_op("["):
            self.next()
            items = []
            if not self.at_op("]"):
                items.append(self.expression())
                while self.at_op(","):
                    self.next()
                    if self.at_op("]"):
                        break
                    items.append(self.expression())
            self.expect_op("]")
            return ast.ListLit(items, tok.line)
        self.fail("expected an expression", tok)


def parse(tokens):
    return _Parser(tokens).parse_program()


def parse_source(source):
    return parse(lx.tokenize(source))
