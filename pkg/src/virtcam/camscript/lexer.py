"""Tokenizer with significant indentation.

Leading spaces on each logical line drive an indent stack that emits
INDENT/DEDENT tokens; tabs in the indent are rejected. Blank lines and
comment-only lines produce no tokens at all, so they never affect the
block structure.
"""

from ..errors import TabInIndent, InconsistentDedent, UnterminatedString, BadSyntax

IDENT = "IDENT"
INT = "INT"
FLOAT = "FLOAT"
STRING = "STRING"
OP = "OP"
NEWLINE = "NEWLINE"
INDENT = "INDENT"
DEDENT = "DEDENT"
KEYWORD = "KEYWORD"
EOF = "EOF"

KEYWORDS = frozenset((
    "if", "elif", "else", "while", "for", "in", "break", "continue",
    "pass", "import", "and", "or", "not", "True", "False", "None",
))

# Longest first so '==' wins over '='.
_OPS = ("==", "!=", "<=", ">=", "//",
        "=", "<", ">", "+", "-", "*", "/", "%",
        "(", ")", "[", "]", ",", ".", ":")

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", "'": "'",
            '"': '"', "0": "\0"}


class Token:
    __slots__ = ("kind", "lexeme", "line", "column")

    def __init__(self, kind, lexeme, line, column):
        self.kind = kind
        self.lexeme = lexeme
        self.line = line
        self.column = column

    def __repr__(self):
        return "Token(%s, %r, %d:%d)" % (self.kind, self.lexeme,
                                         self.line, self.column)


def _lex_string(text, pos, line):
    quote = text[pos]
    out = []
    i = pos + 1
    while i < len(text):
        ch = text[i]
        if ch == quote:
            return "".join(out), i + 1
        if ch == "\n":
            break
        if ch == "\\":
            if i + 1 >= len(text) or text[i + 1] == "\n":
                break
            esc = text[i + 1]
            if esc not in _ESCAPES:
                raise BadSyntax("unknown escape \\%s" % esc, line)
            out.append(_ESCAPES[esc])
            i += 2
            continue
        out.append(ch)
        i += 1
    raise UnterminatedString("string literal left open", line)


def _lex_number(text, pos):
    i = pos
    n = len(text)
    while i < n and text[i].isdigit():
        i += 1
    is_float = False
    if i < n and text[i] == "." and i + 1 < n and text[i + 1].isdigit():
        is_float = True
        i += 1
        while i < n and text[i].isdigit():
            i += 1
    if i < n and text[i] in "eE":
        j = i + 1
        if j < n and text[j] in "+-":
            j += 1
        if j < n and text[j].isdigit():
            is_float = True
            i = j
            while i < n and text[i].isdigit():
                i += 1
    return text[pos:i], is_float, i


def tokenize(source):
    tokens = []
    stack = [0]
    lines = source.split("\n")
    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        indent = 0
        for ch in raw:
            if ch == " ":
                indent += 1
            elif ch == "\t":
                raise TabInIndent("tab in indentation", lineno)
            else:
                break
        if indent > stack[-1]:
            stack.append(indent)
            tokens.append(Token(INDENT, "", lineno, 1))
        else:
            while indent < stack[-1]:
                stack.pop()
                tokens.append(Token(DEDENT, "", lineno, 1))
            if indent != stack[-1]:
                raise InconsistentDedent(
                    "dedent to an unknown indentation level", lineno)
        pos = indent
        n = len(raw)
        emitted = False
        while pos < n:
            ch = raw[pos]
            if ch == " ":
                pos += 1
                continue
            if ch == "\t":
                raise BadSyntax("tab outside indentation", lineno, pos + 1)
            if ch == "#":
                break
            col = pos + 1
            if ch in "'\"":
                text, pos = _lex_string(raw, pos, lineno)
                tokens.append(Token(STRING, text, lineno, col))
            elif ch.isdigit():
                lexeme, is_float, pos = _lex_number(raw, pos)
                tokens.append(Token(FLOAT if is_float else INT,
                                    lexeme, lineno, col))
            elif ch.isalpha() or ch == "_":
                end = pos
                while end < n and (raw[end].isalnum() or raw[end] == "_"):
                    end += 1
                word = raw[pos:end]
                kind = KEYWORD if word in KEYWORDS else IDENT
                tokens.append(Token(kind, word, lineno, col))
                pos = end
            else:
                for op in _OPS:
                    if raw.startswith(op, pos):
                        tokens.append(Token(OP, op, lineno, col))
                        pos += len(op)
                        break
                else:
                    raise BadSyntax("unexpected character %r" % ch,
                                    lineno, col)
            emitted = True
        if emitted:
            tokens.append(Token(NEWLINE, "", lineno, n + 1))
    final_line = len(lines) + 1
    while stack[-1] > 0:
        stack.pop()
        tokens.append(Token(DEDENT, "", final_line, 1))
    tokens.append(Token(EOF, "", final_line, 1))
    return tokens
