"""Two-scale bone remodelling models."""
from pathlib import Path

from .models import build_macro, build_micro, macro_ast, micro_ast, mineral_columns, membrane2_geometry
from .params import ALIASES, BoneParams, InvalidParams, format_params, parse_params, params_from_mapping

DATA = Path(__file__).parent / "data"


def bundled_model(name: str) -> Path:
    """Path of a shipped model file: ``macro``, ``micro`` or ``demo``."""
    path = DATA / f"{name}.spm"
    if not path.exists():
        raise FileNotFoundError(path)
    return path


__all__ = [
    "ALIASES", "BoneParams", "DATA", "InvalidParams", "build_macro", "build_micro", "bundled_model",
    "format_params", "macro_ast", "membrane2_geometry", "micro_ast", "mineral_columns",
    "params_from_mapping", "parse_params",
]
