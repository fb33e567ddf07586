"""Textual model language for Spatial P systems."""
from .ast import ModelAst
from .errors import (
    DslError,
    DslSyntaxError,
    DuplicateDeclaration,
    EmptyRange,
    UnboundParameter,
    UndeclaredSymbol,
)
from .expand import GroundModel, GroundPlacement, evaluate, expand_families, ground_name
from .parser import parse, tokenize
from .render import render


def load(path, params=None) -> GroundModel:
    with open(path, encoding="utf-8") as fh:
        return expand_families(parse(fh.read()), params)


__all__ = [
    "DslError", "DslSyntaxError", "DuplicateDeclaration", "EmptyRange", "GroundModel",
    "GroundPlacement", "ModelAst", "UnboundParameter", "UndeclaredSymbol", "evaluate",
    "expand_families", "ground_name", "load", "parse", "render", "tokenize",
]
