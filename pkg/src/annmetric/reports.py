"""Deterministic JSON reports with a shared envelope.

Every command emits {command, version, inputs_digest, results, witnesses,
timing}.  Floats are serialized with 17 significant digits and the timing
block holds deterministic work counters, never wall-clock times, so reports
are byte-identical across reruns with the same seed.
"""

from __future__ import annotations

import hashlib

import numpy as np

SCHEMA_VERSION = "1"


def _render(value, indent: int, pad: str) -> str:
    if isinstance(value, str):
        return _render_str(value)
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        f = float(value)
        if not np.isfinite(f):
            raise ValueError(f"cannot serialize non-finite float {f}")
        return format(f, ".17g")
    if isinstance(value, np.ndarray):
        return _render(value.tolist(), indent, pad)
    if isinstance(value, dict):
        if not value:
            return "{}"
        inner = pad + " " * indent
        items = [
            f"{inner}{_render_str(str(k))}: {_render(v, indent, inner)}"
            for k, v in value.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        if len(value) == 0:
            return "[]"
        flat = all(
            isinstance(v, (int, float, np.integer, np.floating, str, bool))
            for v in value
        )
        if flat:
            return "[" + ", ".join(_render(v, indent, pad) for v in value) + "]"
        inner = pad + " " * indent
        items = [f"{inner}{_render(v, indent, inner)}" for v in value]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(value)!r}")


def _render_str(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def render_json(obj) -> str:
    """Render to JSON text with 17-significant-digit floats, deterministic."""
    return _render(obj, indent=2, pad="") + "\n"


def digest_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest_obj(obj) -> str:
    return digest_bytes(render_json(obj).encode("utf-8"))


def envelope(command: str, inputs_digest: str, results: dict, witnesses, timing: dict) -> dict:
    return {
        "command": command,
        "version": SCHEMA_VERSION,
        "inputs_digest": inputs_digest,
        "results": results,
        "witnesses": witnesses,
        "timing": timing,
    }
