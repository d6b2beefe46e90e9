"""AST node classes and the source printer.

Structural equality deliberately ignores line/column so a tree compares
equal to itself after a print/reparse round trip (blank lines and
comments are not part of the tree).
"""


class Node:
    _sig = ()

    def __eq__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        return all(getattr(self, f) == getattr(other, f) for f in self._sig)

    def __hash__(self):
        return hash(type(self))

    def __repr__(self):
        inner = ", ".join(repr(getattr(self, f)) for f in self._sig)
        return "%s(%s)" % (type(self).__name__, inner)


class Module(Node):
    _sig = ("body",)

    def __init__(self, body):
        self.body = body


class Assign(Node):
    _sig = ("name", "value")

    def __init__(self, name, value, line):
        self.name = name
        self.value = value
        self.line = line


class ExprStmt(Node):
    _sig = ("value",)

    def __init__(self, value, line):
        self.value = value
        self.line = line


class If(Node):
    """branches: list of (condition, body); orelse: body list or None."""
    _sig = ("branches", "orelse")

    def __init__(self, branches, orelse, line):
        self.branches = branches
        self.orelse = orelse
        self.line = line


class While(Node):
    _sig = ("cond", "body")

    def __init__(self, cond, body, line):
        self.cond = cond
        self.body = body
        self.line = line


class For(Node):
    _sig = ("var", "iterable", "body")

    def __init__(self, var, iterable, body, line):
        self.var = var
        self.iterable = iterable
        self.body = body
        self.line = line


class Break(Node):
    def __init__(self, line):
        self.line = line


class Continue(Node):
    def __init__(self, line):
        self.line = line


class Pass(Node):
    def __init__(self, line):
        self.line = line


class Import(Node):
    _sig = ("name",)

    def __init__(self, name, line):
        self.name = name
        self.line = line


class Const(Node):
    """Literal Int/Float/Str/Bool/None value."""
    _sig = ("value",)

    def __init__(self, value, line):
        self.value = value
        self.line = line

    def __eq__(self, other):
        if type(other) is not Const:
            return NotImplemented
        # 1 and 1.0 and True compare equal in Python; literals should not.
        return type(self.value) is type(other.value) \
            and self.value == other.value


class Name(Node):
    _sig = ("id",)

    def __init__(self, id, line):
        self.id = id
        self.line = line


class Attr(Node):
    _sig = ("obj", "name")

    def __init__(self, obj, name, line):
        self.obj = obj
        self.name = name
        self.line = line


class Call(Node):
    _sig = ("func", "args")

    def __init__(self, func, args, line):
        self.func = func
        self.args = args
        self.line = line


class Index(Node):
    _sig = ("obj", "index")

    def __init__(self, obj, index, line):
        self.obj = obj
        self.index = index
        self.line = line


class Unary(Node):
    _sig = ("op", "operand")

    def __init__(self, op, operand, line):
        self.op = op
        self.operand = operand
        self.line = line


class Binop(Node):
    _sig = ("op", "left", "right")

    def __init__(self, op, left, right, line):
        self.op = op
        self.left = left
        self.right = right
        self.line = line


class TupleLit(Node):
    _sig = ("items",)

    def __init__(self, items, line):
        self.items = items
        self.line = line


class ListLit(Node):
    _sig = ("items",)

    def __init__(self, items, line):
        self.items = items
        self.line = line


# ---------------------------------------------------------------------------
# Printer

_PREC = {
    "or": 1, "and": 2,
    "==": 4, "!=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6, "//": 6, "%": 6,
}
_PREC_NOT = 3
_PREC_NEG = 7
_PREC_POSTFIX = 8


def _escape(text):
    out = []
    for ch in text:
        if ch == "\\":
            out.append("\\\\")
        elif ch == "'":
            out.append("\\'")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\0":
            out.append("\\0")
        else:
            out.append(ch)
    return "'%s'" % "".join(out)


def _expr(node, parent_prec=0):
    if isinstance(node, Const):
        v = node.value
        if v is None:
            return "None"
        if v is True:
            return "True"
        if v is False:
            return "False"
        if isinstance(v, str):
            return _escape(v)
        return repr(v)
    if isinstance(node, Name):
        return node.id
    if isinstance(node, Attr):
        return "%s.%s" % (_expr(node.obj, _PREC_POSTFIX), node.name)
    if isinstance(node, Call):
        args = ", ".join(_expr(a) for a in node.args)
        return "%s(%s)" % (_expr(node.func, _PREC_POSTFIX), args)
    if isinstance(node, Index):
        return "%s[%s]" % (_expr(node.obj, _PREC_POSTFIX), _expr(node.index))
    if isinstance(node, TupleLit):
        if len(node.items) == 1:
            return "(%s,)" % _expr(node.items[0])
        return "(%s)" % ", ".join(_expr(i) for i in node.items)
    if isinstance(node, ListLit):
        return "[%s]" % ", ".join(_expr(i) for i in node.items)
    if isinstance(node, Unary):
        if node.op == "not":
            text = "not %s" % _expr(node.operand, _PREC_NOT)
            prec = _PREC_NOT
        else:
            text = "-%s" % _expr(node.operand, _PREC_NEG)
            prec = _PREC_NEG
        return "(%s)" % text if prec < parent_prec else text
    if isinstance(node, Binop):
        prec = _PREC[node.op]
        # Comparisons do not chain, so a nested comparison on either side
        # must keep its parens; arithmetic is left associative.
        left = _expr(node.left, prec + 1 if prec == 4 else prec)
        right = _expr(node.right, prec + 1)
        text = "%s %s %s" % (left, node.op, right)
        return "(%s)" % text if prec < parent_prec else text
    raise TypeError("not an expression node: %r" % (node,))


def _stmt(node, depth, out):
    pad = "    " * depth
    if isinstance(node, Assign):
        out.append("%s%s = %s" % (pad, node.name, _expr(node.value)))
    elif isinstance(node, ExprStmt):
        out.append(pad + _expr(node.value))
    elif isinstance(node, Break):
        out.append(pad + "break")
    elif isinstance(node, Continue):
        out.append(pad + "continue")
    elif isinstance(node, Pass):
        out.append(pad + "pass")
    elif isinstance(node, Import):
        out.append(pad + "import " + node.name)
    elif isinstance(node, If):
        for i, (cond, body) in enumerate(node.branches):
            head = "if" if i == 0 else "elif"
            out.append("%s%s %s:" % (pad, head, _expr(cond)))
            for child in body:
                _stmt(child, depth + 1, out)
        if node.orelse is not None:
            out.append(pad + "else:")
            for child in node.orelse:
                _stmt(child, depth + 1, out)
    elif isinstance(node, While):
        out.append("%swhile %s:" % (pad, _expr(node.cond)))
        for child in node.body:
            _stmt(child, depth + 1, out)
    elif isinstance(node, For):
        out.append("%sfor %s in %s:" % (pad, node.var, _expr(node.iterable)))
        for child in node.body:
            _stmt(child, depth + 1, out)
    else:
        raise TypeError("not a statement node: %r" % (node,))


def to_source(program):
    """Canonical source text for a Module; reparsing it yields an equal AST."""
    out = []
    for stmt in program.body:
        _stmt(stmt, 0, out)
    return "\n".join(out) + "\n" if out else ""
