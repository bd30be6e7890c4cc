"""Canonical JSON: sorted keys, floats at 9 significant digits, UTF-8."""
from __future__ import annotations

import hashlib
import json
import math
from functools import lru_cache
from importlib import resources
from typing import Any

SIG_DIGITS = 9


def round_sig(x: float, digits: int = SIG_DIGITS) -> float:
    if x == 0 or not math.isfinite(x):
        return float(x)
    r = float(f"{x:.{digits}g}")
    return 0.0 if r == 0 else r


def canonicalize(obj: Any) -> Any:
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return round_sig(obj)
    if isinstance(obj, dict):
        return {str(k): canonicalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonicalize(v) for v in obj]
    raise TypeError(f"cannot canonicalize {type(obj).__name__}")


def dumps(obj: Any) -> bytes:
    text = json.dumps(canonicalize(obj), sort_keys=True, ensure_ascii=False,
                      separators=(",", ":"), allow_nan=False)
    return (text + "\n").encode("utf-8")


def dumps_line(obj: Any) -> str:
    return dumps(obj).decode("utf-8")


def digest(obj: Any) -> str:
    return hashlib.sha256(dumps(obj)).hexdigest()


def stable_seed(*parts: Any) -> int:
    """64-bit seed derived from arbitrary printable parts; stable across runs."""
    h = hashlib.blake2b("\x1f".join(map(str, parts)).encode("utf-8"), digest_size=8)
    return int.from_bytes(h.digest(), "big")


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("streetsim.schemas").joinpath(name).read_text(encoding="utf-8")
    return json.loads(text)


def check_document(doc: Any, schema_name: str) -> None:
    """Validate ``doc`` against a shipped schema; SchemaError names the failing path."""
    import jsonschema

    from .errors import SchemaError

    validator = jsonschema.Draft202012Validator(load_schema(schema_name))
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        raise SchemaError("/".join(str(p) for p in err.absolute_path), err.message)
