"""JSON encoding of matrices, channel sets and codes."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .channels import AveragedChannelSpec, CompoundSet, CqChannel
from .coding import Codebook
from .errors import InvalidStateError
from .numerics import configure


def matrix_to_json(m) -> dict:
    arr = np.asarray(m, dtype=complex)
    return {"re": arr.real.tolist(), "im": arr.imag.tolist()}


def matrix_from_json(obj) -> np.ndarray:
    """Accepts {"re": ..., "im": ...} (``im`` optional) or a plain nested real list."""
    try:
        if isinstance(obj, dict):
            re = np.asarray(obj["re"], dtype=float)
            im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
            if re.shape != im.shape:
                raise InvalidStateError("real and imaginary parts differ in shape")
            return re + 1j * im
        return np.asarray(obj, dtype=float).astype(complex)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidStateError(f"malformed matrix: {exc}") from None


def _read(source):
    if isinstance(source, (dict, list)):
        return source
    text = Path(source).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidStateError(f"{source}: malformed JSON ({exc})") from None


def apply_numerics(obj):
    """Apply an optional "numerics" section of tolerance overrides."""
    if isinstance(obj, dict) and "numerics" in obj:
        try:
            configure(**obj["numerics"])
        except (KeyError, TypeError) as exc:
            raise InvalidStateError(f"bad numerics section: {exc}") from None


def load_channels(source):
    """CompoundSet, or AveragedChannelSpec when every channel carries a weight."""
    obj = _read(source)
    try:
        dim = int(obj["dim"])
        alphabet = [str(a) for a in obj["alphabet"]]
        entries = obj["channels"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidStateError(f"channel file is missing a field: {exc}") from None
    members, weights = [], []
    for i, ch in enumerate(entries):
        states = [matrix_from_json(s) for s in ch.get("states", [])]
        if any(s.shape != (dim, dim) for s in states):
            raise InvalidStateError(f"channel {i}: states must be {dim}x{dim}")
        members.append(CqChannel(states, alphabet, str(ch.get("id", f"w{i + 1}"))))
        weights.append(ch.get("weight"))
    compound = CompoundSet(members)
    given = [w is not None for w in weights]
    if any(given) and not all(given):
        raise InvalidStateError("either every channel has a weight or none does")
    if all(given):
        return AveragedChannelSpec(compound, np.asarray(weights, dtype=float))
    return compound


def channels_to_json(channels) -> dict:
    weights = None
    if isinstance(channels, AveragedChannelSpec):
        weights = [float(w) for w in channels.weights]
        channels = channels.compound
    out = {"dim": channels.dim, "alphabet": list(channels.alphabet), "channels": []}
    for i, w in enumerate(channels):
        entry = {"id": w.id, "states": [matrix_to_json(s.matrix) for s in w.states]}
        if weights is not None:
            entry["weight"] = weights[i]
        out["channels"].append(entry)
    return out


def code_to_json(code: Codebook) -> dict:
    return {
        "n": code.n,
        "codewords": [list(w) for w in code.codewords],
        "decoders": [matrix_to_json(b) for b in code.decoders],
    }


def load_code(source) -> Codebook:
    obj = _read(source)
    try:
        decoders = np.stack([matrix_from_json(b) for b in obj["decoders"]])
        return Codebook(int(obj["n"]), [tuple(w) for w in obj["codewords"]], decoders)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidStateError(f"code file is malformed: {exc}") from None


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dumps(obj) -> str:
    """Deterministic JSON text (sorted keys, infinities as strings)."""
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"
