"""JSON instance files and mechanism certificates."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .core import InvalidDistribution, Mechanism, PricingMechanism, ValueDistribution


class InstanceParseError(ValueError):
    """Malformed instance file; message names the offending field."""


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def instance_to_dict(dist: ValueDistribution) -> dict[str, Any]:
    out: dict[str, Any] = {
        "m": dist.m,
        "support": dist.support.tolist(),
        "prob": dist.prob.tolist(),
    }
    if dist.name:
        out["name"] = dist.name
    if "family" in dist.meta:
        out["family"] = dist.meta["family"]
    if "spec" in dist.meta:
        out["spec"] = dist.meta["spec"]
    extra = {k: v for k, v in dist.meta.items() if k not in ("family", "spec")}
    if extra:
        out["meta"] = extra
    return _jsonable(out)


def dumps_instance(dist: ValueDistribution) -> str:
    # repr-precision floats round-trip exactly
    return json.dumps(instance_to_dict(dist), indent=1)


def instance_from_dict(data: Any, source: str = "<instance>") -> ValueDistribution:
    if not isinstance(data, dict):
        raise InstanceParseError(f"{source}: top level must be an object")
    for key in ("m", "support", "prob"):
        if key not in data:
            raise InstanceParseError(f"{source}: missing field {key!r}")
    m = data["m"]
    if not isinstance(m, int) or isinstance(m, bool) or m < 1:
        raise InstanceParseError(f"{source}: field 'm' must be a positive integer")
    support = data["support"]
    if not isinstance(support, list) or not support:
        raise InstanceParseError(f"{source}: field 'support' must be a non-empty list")
    for k, row in enumerate(support):
        if not isinstance(row, list) or len(row) != m:
            raise InstanceParseError(f"{source}: support[{k}] must be a list of {m} numbers")
        for j, x in enumerate(row):
            if not isinstance(x, (int, float)) or isinstance(x, bool):
                raise InstanceParseError(f"{source}: support[{k}][{j}] is not a number")
    prob = data["prob"]
    if not isinstance(prob, list) or len(prob) != len(support):
        raise InstanceParseError(f"{source}: field 'prob' must list {len(support)} numbers")
    for k, x in enumerate(prob):
        if not isinstance(x, (int, float)) or isinstance(x, bool):
            raise InstanceParseError(f"{source}: prob[{k}] is not a number")
    meta = dict(data.get("meta", {}))
    for key in ("family", "spec"):
        if key in data:
            meta[key] = data[key]
    try:
        return ValueDistribution(np.array(support, dtype=float), np.array(prob, dtype=float),
                                 name=data.get("name"), meta=meta)
    except InvalidDistribution as exc:
        raise InstanceParseError(f"{source}: {exc}") from exc


def loads_instance(text: str, source: str = "<instance>") -> ValueDistribution:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceParseError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return instance_from_dict(data, source)


def load_instance(path: str | Path) -> ValueDistribution:
    path = Path(path)
    return loads_instance(path.read_text(), str(path))


def mechanism_to_dict(mech: Mechanism, pricing: PricingMechanism | None = None) -> dict[str, Any]:
    """Certificate JSON; infinite prices (product not offered) become null."""
    return _jsonable({
        "signals": [list(s) if isinstance(s, tuple) else s for s in mech.info.signals],
        "kernel": mech.info.kernel,
        "prices": None if pricing is None else pricing.prices,
        "alloc": mech.alloc,
        "payments": mech.price,
    })
