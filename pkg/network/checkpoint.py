"""Model checkpoints.

File layout: one line of UTF-8 JSON (the header) terminated by ``\\n``, followed by
the little-endian float64 values of every learnable parameter, concatenated in
header order, each flattened row-major. Header keys::

    format       "maxsep-checkpoint"
    version      1
    input_dim, num_classes, feature_dim, hidden_dims, head, rho
    parameters   [{"name": ..., "shape": [...]}, ...]

A MaxSepFixed head stores no parameters; its matrix is rebuilt from num_classes.
"""

import json
import logging
import os

import numpy as np

from app.core import store
from app.core.errors import IntegrityError, ParseError
from network.model import Network, build_network
from schemas.data_schemas import HeadKind, NetworkSpec

logger = logging.getLogger(__name__)

FORMAT_TAG = "maxsep-checkpoint"
FORMAT_VERSION = 1
HEADER_KEYS = ("input_dim", "num_classes", "feature_dim", "hidden_dims", "head", "rho", "parameters")


def _rho(net: Network) -> float:
    radius = getattr(net.head, "radius", None)
    return radius.rho if radius is not None else 1.0


def save_checkpoint(net: Network, path: str | os.PathLike) -> None:
    params = net.parameters()
    header = {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "input_dim": net.input_dim,
        "num_classes": net.num_classes,
        "feature_dim": net.feature_dim,
        "hidden_dims": [layer.d_out for layer in net.hidden],
        "head": net.head.kind.value,
        "rho": _rho(net),
        "parameters": [{"name": p.name, "shape": list(p.value.shape)} for p in params],
    }
    body = b"".join(np.ascontiguousarray(p.value, dtype="<f8").tobytes() for p in params)
    store.write_bytes(path, json.dumps(header, sort_keys=True).encode("utf-8") + b"\n" + body)
    logger.info(f"Saved checkpoint ({len(params)} parameters) to {path}")


def load_checkpoint(path: str | os.PathLike) -> Network:
    with open(path, "rb") as f:
        raw = f.read()
    newline = raw.find(b"\n")
    if newline < 0:
        raise ParseError(f"checkpoint {path} has no header line", field="header")
    try:
        header = json.loads(raw[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ParseError(f"checkpoint header in {path} is not JSON: {e}", field="header") from e
    if not isinstance(header, dict):
        raise ParseError(f"checkpoint header in {path} is not a JSON object", field="header")
    if header.get("format") != FORMAT_TAG or header.get("version") != FORMAT_VERSION:
        raise ParseError(f"unsupported checkpoint format in {path}", field="format")
    missing = [key for key in HEADER_KEYS if key not in header]
    if missing:
        raise ParseError(f"checkpoint header in {path} lacks {', '.join(missing)}", field=missing[0])
    try:
        head = HeadKind(header["head"])
    except ValueError:
        raise ParseError(f"unknown head {header['head']!r} in {path}", field="head") from None

    spec = NetworkSpec(hidden_dims=header["hidden_dims"], feature_dim=header["feature_dim"])
    net = build_network(header["input_dim"], header["num_classes"], head, spec, header["rho"], seed=0)
    params = net.parameters()
    described = header["parameters"]
    if [(p.name, list(p.value.shape)) for p in params] != [(d["name"], d["shape"]) for d in described]:
        raise IntegrityError(f"checkpoint {path} parameters do not match its declared architecture")

    values = np.frombuffer(raw, dtype="<f8", offset=newline + 1)
    expected = sum(p.value.size for p in params)
    if values.size != expected:
        raise ParseError(f"checkpoint {path} holds {values.size} values, expected {expected}", field="body")
    offset = 0
    for p in params:
        p.value = values[offset:offset + p.value.size].reshape(p.value.shape).astype(np.float64)
        offset += p.value.size
    return net
