"""Channel-spec files and sweep CSV output.

See :mod:`weakprotect.cli` for the file schema.
"""
import io
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
import yaml

from .channel import CanonicalParams, ChannelError, KrausChannel, from_canonical

CSV_HEADER = ("y0", "xx", "p", "q_opt", "delta_f", "p_success")


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelSpec:
    channel: KrausChannel
    canonical: Optional[CanonicalParams] = None
    label: Optional[str] = None


def _number(v, where: str) -> float:
    # YAML 1.1 reads "1e-3" as a string; accept it but never locale forms
    if isinstance(v, bool):
        raise ParseError(f"{where}: expected a number, got {v!r}")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            pass
    raise ParseError(f"{where}: expected a number, got {v!r}")


def _operator(raw, where: str) -> np.ndarray:
    if not (isinstance(raw, list) and len(raw) == 2 and all(isinstance(r, list) and len(r) == 2 for r in raw)):
        raise ParseError(f"{where}: expected 2 rows of 2 [re, im] pairs")
    m = np.zeros((2, 2), dtype=complex)
    for i, row in enumerate(raw):
        for j, entry in enumerate(row):
            if not (isinstance(entry, list) and len(entry) == 2):
                raise ParseError(f"{where}[{i}][{j}]: expected [re, im]")
            m[i, j] = complex(_number(entry[0], where), _number(entry[1], where))
    return m


def parse_channel_spec(text: str) -> ChannelSpec:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"malformed channel file: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("channel file must be a mapping")
    unknown = set(doc) - {"label", "canonical", "kraus"}
    if unknown:
        raise ParseError(f"unknown keys: {sorted(unknown)}")
    if ("canonical" in doc) == ("kraus" in doc):
        raise ParseError("exactly one of 'canonical' or 'kraus' must be given")
    label = doc.get("label")
    label = None if label is None else str(label)

    if "canonical" in doc:
        raw = doc["canonical"]
        if not isinstance(raw, dict):
            raise ParseError("'canonical' must be a mapping")
        missing = {"y0", "x", "y"} - set(raw)
        extra = set(raw) - {"y0", "x", "y", "theta", "phi"}
        if missing or extra:
            raise ParseError(f"'canonical' keys: missing {sorted(missing)}, unexpected {sorted(extra)}")
        vals = {k: _number(v, f"canonical.{k}") for k, v in raw.items()}
        try:
            params = CanonicalParams(**vals)
        except ChannelError as exc:
            raise ParseError(str(exc)) from exc
        return ChannelSpec(from_canonical(params), params, label)

    raw = doc["kraus"]
    if not isinstance(raw, list) or not raw:
        raise ParseError("'kraus' must be a non-empty list")
    ops = [_operator(k, f"kraus[{i}]") for i, k in enumerate(raw)]
    try:
        return ChannelSpec(KrausChannel(ops), None, label)
    except ChannelError as exc:
        raise ParseError(str(exc)) from exc


def load_channel_spec(path) -> ChannelSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return parse_channel_spec(text)


def dump_canonical(params: CanonicalParams, label: Optional[str] = None) -> str:
    lines = []
    if label is not None:
        lines.append(f"label: {json.dumps(label)}")
    lines.append("canonical:")
    for name in ("y0", "x", "y", "theta", "phi"):
        lines.append(f"  {name}: {getattr(params, name)!r}")
    return "\n".join(lines) + "\n"


def dump_kraus(channel: KrausChannel, label: Optional[str] = None) -> str:
    lines = []
    if label is not None:
        lines.append(f"label: {json.dumps(label)}")
    lines.append("kraus:")
    for k in channel.kraus:
        rows = ", ".join(
            "[" + ", ".join(f"[{float(z.real)!r}, {float(z.imag)!r}]" for z in row) + "]" for row in k
        )
        lines.append(f"  - [{rows}]")
    return "\n".join(lines) + "\n"


def format_csv(records) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_HEADER) + "\n")
    for r in records:
        # shortest repr that round-trips exactly
        buf.write(",".join(repr(float(getattr(r, name))) for name in CSV_HEADER) + "\n")
    return buf.getvalue()


def read_csv(text: str):
    lines = text.rstrip("\n").split("\n")
    if tuple(lines[0].split(",")) != CSV_HEADER:
        raise ParseError("unexpected CSV header")
    return [tuple(float(v) for v in line.split(",")) for line in lines[1:]]
