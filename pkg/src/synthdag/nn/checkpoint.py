"""JSON checkpoints with bit-exact round-tripping.

Float32 values survive the JSON round trip exactly because Python floats
are doubles and every float32 is representable as a double.
"""

from __future__ import annotations

import json

import numpy as np

from .optim import ParamStore

FORMAT_VERSION = 1


def _array_doc(arr: np.ndarray) -> dict:
    return {"shape": list(arr.shape), "data": [float(x) for x in arr.reshape(-1)]}


def _array_from(doc: dict) -> np.ndarray:
    return np.asarray(doc["data"], dtype=np.float32).reshape(doc["shape"])


def save_checkpoint(path, store: ParamStore, hyper: dict | None = None, extra: dict | None = None):
    doc = {
        "version": FORMAT_VERSION,
        "hyper": hyper or {},
        "params": {name: _array_doc(store.params[name].data) for name in store.names()},
        "adam": {
            "step": store.step,
            "m": {name: _array_doc(store.m[name]) for name in store.names()},
            "v": {name: _array_doc(store.v[name]) for name in store.names()},
        },
    }
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_checkpoint(path) -> tuple[ParamStore, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')!r}")
    store = ParamStore()
    for name, arr_doc in doc["params"].items():
        store.add(name, _array_from(arr_doc))
    adam = doc.get("adam", {})
    store.step = adam.get("step", 0)
    for name in store.names():
        if name in adam.get("m", {}):
            store.m[name] = _array_from(adam["m"][name])
            store.v[name] = _array_from(adam["v"][name])
    return store, doc
