"""Tree-walking evaluator with step metering and a cooperative stop flag.

Every statement and expression node costs one step; the limit check
happens before the step is taken so an aborted run reports exactly
max_steps. The stop flag is consulted between statements only, which is
the guarantee a remote stop request gets: the current statement finishes
first.
"""

from ..errors import (ScriptError, ScriptNameError, ScriptStopped,
                      ScriptTypeError, StepLimit, VirtcamError, ZeroDivision)
from . import nodes as ast
from .builtins import (IMAGE_METHODS, Builtin, ImageRef, KeypointSet,
                       ScriptModule, builtin_bindings)
from .parser import parse_source

DEFAULT_MAX_STEPS = 500000

_NUMERIC = (int, float)
_SEQS = (str, tuple, list)


class _Break(Exception):
    pass


class _Continue(Exception):
    pass


def _mentions(node, name):
    if isinstance(node, ast.Name):
        return node.id == name
    if isinstance(node, ast.Attr):
        return _mentions(node.obj, name)
    if isinstance(node, ast.Call):
        return _mentions(node.func, name) \
            or any(_mentions(a, name) for a in node.args)
    if isinstance(node, ast.Index):
        return _mentions(node.obj, name) or _mentions(node.index, name)
    if isinstance(node, ast.Unary):
        return _mentions(node.operand, name)
    if isinstance(node, ast.Binop):
        return _mentions(node.left, name) or _mentions(node.right, name)
    if isinstance(node, (ast.TupleLit, ast.ListLit)):
        return any(_mentions(i, name) for i in node.items)
    return False


def _truthy(value):
    if isinstance(value, ImageRef):
        return True
    return bool(value)


class Interpreter:
    def __init__(self, program, env, modules, rt, max_steps, stop=None):
        self.program = program
        self.env = env
        self.modules = modules
        self.rt = rt
        self.max_steps = max_steps
        self.stop = stop
        self.steps = 0

    # -- bookkeeping --------------------------------------------------------

    def step(self, line):
        if self.steps >= self.max_steps:
            raise StepLimit("step limit of %d exceeded" % self.max_steps,
                            line)
        self.steps += 1

    def _refcount(self, ref):
        count = 0
        pending = list(self.env.values())
        while pending:
            v = pending.pop()
            if v is ref:
                count += 1
            elif isinstance(v, (tuple, list)):
                pending.extend(v)
        return count

    def bind(self, name, value):
        old = self.env.get(name)
        self.env[name] = value
        if isinstance(old, ImageRef) and old.owned and not old.dead \
                and old is not value and self._refcount(old) == 0:
            self.rt.kill(old)

    # -- statements ----------------------------------------------------------

    def exec_block(self, body):
        for stmt in body:
            self.exec_stmt(stmt)

    def exec_stmt(self, stmt):
        if self.stop is not None and self.stop.is_set():
            raise ScriptStopped("stopped", stmt.line)
        self.step(stmt.line)
        if isinstance(stmt, ast.Assign):
            old = self.env.get(stmt.name)
            if isinstance(old, ImageRef) and old.owned and not old.dead \
                    and self._refcount(old) == 1 \
                    and not _mentions(stmt.value, stmt.name):
                # Free the doomed image before the right side allocates,
                # so rebind loops run in constant arena space.
                self.rt.kill(old)
            self.bind(stmt.name, self.eval(stmt.value))
        elif isinstance(stmt, ast.ExprStmt):
            self.eval(stmt.value)
        elif isinstance(stmt, ast.If):
            for cond, body in stmt.branches:
                if _truthy(self.eval(cond)):
                    self.exec_block(body)
                    return
            if stmt.orelse is not None:
                self.exec_block(stmt.orelse)
        elif isinstance(stmt, ast.While):
            while _truthy(self.eval(stmt.cond)):
                try:
                    self.exec_block(stmt.body)
                except _Break:
                    break
                except _Continue:
                    continue
                if self.stop is not None and self.stop.is_set():
                    raise ScriptStopped("stopped", stmt.line)
                self.step(stmt.line)
        elif isinstance(stmt, ast.For):
            value = self.eval(stmt.iterable)
            if not isinstance(value, (range, tuple, list, str)):
                raise ScriptTypeError("cannot iterate over %s"
                                      % _typename(value), stmt.line)
            for item in value:
                self.bind(stmt.var, item)
                try:
                    self.exec_block(stmt.body)
                except _Break:
                    break
                except _Continue:
                    continue
                if self.stop is not None and self.stop.is_set():
                    raise ScriptStopped("stopped", stmt.line)
        elif isinstance(stmt, ast.Break):
            raise _Break()
        elif isinstance(stmt, ast.Continue):
            raise _Continue()
        elif isinstance(stmt, ast.Pass):
            pass
        elif isinstance(stmt, ast.Import):
            module = self.modules.get(stmt.name)
            if module is None:
                raise ScriptNameError("no module named '%s'" % stmt.name,
                                      stmt.line)
            self.env[stmt.name] = module
        else:
            raise ScriptError("unknown statement", stmt.line)

    # -- expressions ----------------------------------------------------------

    def eval(self, node):
        self.step(node.line)
        if isinstance(node, ast.Const):
            return node.value
        if isinstance(node, ast.Name):
            try:
                return self.env[node.id]
            except KeyError:
                pass
            # builtin modules resolve without an import; assignment shadows
            module = self.modules.get(node.id)
            if module is not None:
                return module
            raise ScriptNameError("name '%s' is not defined" % node.id,
                                  node.line)
        if isinstance(node, ast.Attr):
            return self._attr(node)
        if isinstance(node, ast.Call):
            return self._call(node)
        if isinstance(node, ast.Index):
            return self._index(node)
        if isinstance(node, ast.Unary):
            if node.op == "not":
                return not _truthy(self.eval(node.operand))
            v = self.eval(node.operand)
            if isinstance(v, bool) or not isinstance(v, _NUMERIC):
                raise ScriptTypeError("unary '-' needs a number", node.line)
            return -v
        if isinstance(node, ast.Binop):
            if node.op == "and":
                left = self.eval(node.left)
                return self.eval(node.right) if _truthy(left) else left
            if node.op == "or":
                left = self.eval(node.left)
                return left if _truthy(left) else self.eval(node.right)
            return self._binop(node)
        if isinstance(node, ast.TupleLit):
            return tuple(self.eval(i) for i in node.items)
        if isinstance(node, ast.ListLit):
            return [self.eval(i) for i in node.items]
        raise ScriptError("unknown expression", node.line)

    def _attr(self, node):
        obj = self.eval(node.obj)
        if isinstance(obj, ScriptModule):
            try:
                return obj.attrs[node.name]
            except KeyError:
                raise ScriptNameError(
                    "module %s has no attribute '%s'" % (obj.name, node.name),
                    node.line) from None
        if isinstance(obj, ImageRef):
            fn = IMAGE_METHODS.get(node.name)
            if fn is None:
                raise ScriptNameError("images have no method '%s'"
                                      % node.name, node.line)
            rt = self.rt
            return Builtin(node.name, lambda args: fn(rt, obj, args))
        raise ScriptTypeError("%s has no attributes" % _typename(obj),
                              node.line)

    def _call(self, node):
        func = self.eval(node.func)
        args = [self.eval(a) for a in node.args]
        if not isinstance(func, Builtin):
            raise ScriptTypeError("%s is not callable" % _typename(func),
                                  node.line)
        try:
            return func.fn(args)
        except ScriptError as exc:
            if exc.line is None:
                raise type(exc)(exc.args[0], node.line) from None
            raise
        except VirtcamError as exc:
            raise ScriptError("%s: %s" % (type(exc).__name__, exc),
                              node.line) from None
        except ValueError as exc:
            raise ScriptError(str(exc), node.line) from None

    def _index(self, node):
        obj = self.eval(node.obj)
        idx = self.eval(node.index)
        if not isinstance(obj, _SEQS):
            raise ScriptTypeError("%s is not indexable" % _typename(obj),
                                  node.line)
        if isinstance(idx, bool) or not isinstance(idx, int):
            raise ScriptTypeError("index must be an integer", node.line)
        try:
            return obj[idx]
        except IndexError:
            raise ScriptError("index %d out of range" % idx,
                              node.line) from None

    def _binop(self, node):
        op = node.op
        a = self.eval(node.left)
        b = self.eval(node.right)
        line = node.line
        if op in ("==", "!="):
            equal = a == b
            return equal if op == "==" else not equal
        if op in ("<", "<=", ">", ">="):
            ok = (isinstance(a, _NUMERIC) and isinstance(b, _NUMERIC)) \
                or (isinstance(a, str) and isinstance(b, str)) \
                or (isinstance(a, tuple) and isinstance(b, tuple)) \
                or (isinstance(a, list) and isinstance(b, list))
            if not ok:
                raise ScriptTypeError(
                    "cannot order %s and %s" % (_typename(a), _typename(b)),
                    line)
            try:
                if op == "<":
                    return a < b
                if op == "<=":
                    return a <= b
                if op == ">":
                    return a > b
                return a >= b
            except TypeError:
                raise ScriptTypeError("cannot order mixed element types",
                                      line) from None
        if op == "+":
            if isinstance(a, _NUMERIC) and isinstance(b, _NUMERIC):
                return a + b
            for kind in (str, tuple, list):
                if isinstance(a, kind) and isinstance(b, kind):
                    return a + b
            raise ScriptTypeError("cannot add %s and %s"
                                  % (_typename(a), _typename(b)), line)
        if op == "-":
            if isinstance(a, _NUMERIC) and isinstance(b, _NUMERIC):
                return a - b
            raise ScriptTypeError("cannot subtract %s and %s"
                                  % (_typename(a), _typename(b)), line)
        if op == "*":
            if isinstance(a, _NUMERIC) and isinstance(b, _NUMERIC):
                return a * b
            if isinstance(a, (str, tuple, list)) and isinstance(b, int) \
                    and not isinstance(b, bool):
                return a * b
            raise ScriptTypeError("cannot multiply %s and %s"
                                  % (_typename(a), _typename(b)), line)
        if op in ("/", "//", "%"):
            if not (isinstance(a, _NUMERIC) and isinstance(b, _NUMERIC)):
                raise ScriptTypeError("cannot divide %s and %s"
                                      % (_typename(a), _typename(b)), line)
            if b == 0:
                raise ZeroDivision("division by zero", line)
            if op == "/":
                return a / b
            return a // b if op == "//" else a % b
        raise ScriptError("unknown operator %r" % op, line)


def _typename(value):
    if isinstance(value, ImageRef):
        return "image"
    if isinstance(value, KeypointSet):
        return "keypoints"
    if isinstance(value, ScriptModule):
        return "module"
    if isinstance(value, Builtin):
        return "builtin"
    if value is None:
        return "None"
    return type(value).__name__


def execute(program, bindings, limits=None, stop=None):
    """Run a parsed program against builtin_bindings() output.

    Returns {"status", "steps", "prints", "error"}; status is one of
    "ok", "error", "stopped", "steplimit". All arena allocations made by
    the script are released before this returns.
    """
    env, modules, rt = bindings
    limits = limits or {}
    max_steps = limits.get("max_steps", DEFAULT_MAX_STEPS)
    max_arena = limits.get("max_arena")
    if max_arena is not None and rt.arena.capacity > max_arena:
        raise ScriptError("arena larger than the %d byte limit" % max_arena)
    interp = Interpreter(program, env, modules, rt, max_steps, stop)
    status, error = "ok", None
    try:
        interp.exec_block(program.body)
    except StepLimit as exc:
        status, error = "steplimit", str(exc)
    except ScriptStopped:
        status = "stopped"
    except ScriptError as exc:
        status, error = "error", str(exc)
    finally:
        rt.release_all()
    return {"status": status, "steps": interp.steps,
            "prints": rt.prints, "error": error}


def run_script(source, sensor, arena, max_steps=DEFAULT_MAX_STEPS,
               stop=None, on_print=None, on_frame=None):
    """Parse and execute source; parse errors come back as an error report."""
    try:
        program = parse_source(source)
    except ScriptError as exc:
        return {"status": "error", "steps": 0, "prints": [],
                "error": str(exc)}
    bindings = builtin_bindings(sensor, arena, on_print, on_frame)
    return execute(program, bindings,
                   {"max_steps": max_steps}, stop=stop)
