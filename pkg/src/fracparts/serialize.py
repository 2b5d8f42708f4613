"""File formats: system description JSON, outcome JSON, certificate JSON.

Certificates are written as canonical JSON (sorted keys, no whitespace) so
identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Union

from .core import Epsilons, Poly, PolySystem, Real, SystemState, parse_scalar
from .reduction import Certificate

PathLike = Union[str, Path]


class SystemFileError(ValueError):
    """System description file is malformed; message carries the field."""


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def parse_system_dict(data: dict, bits: int = 192) -> SystemState:
    for key in ("d", "polys", "eps", "x"):
        if key not in data:
            raise SystemFileError(f"missing field {key!r}")
    d = data["d"]
    if not isinstance(d, int) or d < 1:
        raise SystemFileError(f"field 'd': need a positive integer, got {d!r}")
    if not isinstance(data["polys"], list) or not data["polys"]:
        raise SystemFileError("field 'polys': need a nonempty list of coefficient lists")
    polys = []
    for idx, coeffs in enumerate(data["polys"]):
        if not isinstance(coeffs, list) or len(coeffs) != d:
            raise SystemFileError(
                f"field 'polys[{idx}]': need exactly d={d} coefficient strings")
        try:
            polys.append(Poly(tuple(parse_scalar(c, bits) for c in coeffs)))
        except ValueError as exc:
            raise SystemFileError(f"field 'polys[{idx}]': {exc}") from exc
    if not isinstance(data["eps"], list) or len(data["eps"]) != len(polys):
        raise SystemFileError("field 'eps': need one tolerance per polynomial")
    try:
        eps = Epsilons(tuple(parse_scalar(e, bits) for e in data["eps"]))
    except ValueError as exc:
        raise SystemFileError(f"field 'eps': {exc}") from exc
    try:
        x = parse_scalar(str(data["x"]), bits)
    except ValueError as exc:
        raise SystemFileError(f"field 'x': {exc}") from exc
    if not x.value > 1:
        raise SystemFileError(f"field 'x': horizon must exceed 1, got {x.value}")
    return SystemState(PolySystem(tuple(polys)), eps, x)


def parse_system_file(path: PathLike, bits: int = 192) -> SystemState:
    """Load a system description: {"d", "polys", "eps", "x"} per the schema."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SystemFileError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise SystemFileError(f"{path}: top level must be a JSON object")
    return parse_system_dict(data, bits)


def _coeff_form(c: Real) -> str:
    return c.source if c.source is not None else c.to_str()


def emit_system(state: SystemState, path: PathLike):
    data = {
        "d": state.system.d,
        "polys": [[_coeff_form(c) for c in p.coeffs] for p in state.system.polys],
        "eps": [_coeff_form(e) for e in state.eps.eps],
        "x": _coeff_form(state.y),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(data, indent=2) + "\n")


def emit_outcome(outcome, path: PathLike):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(outcome.to_dict()))


def write_certificate(cert: Certificate, path: PathLike):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(cert.to_dict()))


def certificate_bytes(cert: Certificate) -> bytes:
    return canonical_json(cert.to_dict()).encode()


def load_certificate(path: PathLike) -> Certificate:
    with open(path, "r", encoding="utf-8") as fh:
        return Certificate.from_dict(json.load(fh))
