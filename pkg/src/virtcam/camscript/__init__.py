"""A small indentation-sensitive scripting language for the camera.

Python-flavored surface: assignments, if/elif/else, while, for-in-range,
break/continue/pass, import of the three builtin modules (sensor, image,
time). No user functions, classes, or exception handling. Scripts live
in .cam files.
"""

from .builtins import (Builtin, ImageRef, KeypointSet, Runtime, ScriptModule,
                       builtin_bindings)
from .interp import DEFAULT_MAX_STEPS, Interpreter, execute, run_script
from .lexer import Token, tokenize
from .nodes import to_source
from .parser import parse, parse_source

__all__ = [
    "Builtin", "ImageRef", "KeypointSet", "Runtime", "ScriptModule",
    "builtin_bindings", "DEFAULT_MAX_STEPS", "Interpreter", "execute",
    "run_script", "Token", "tokenize", "to_source", "parse", "parse_source",
]
