"""JSON checkpoints: config, every named tensor, frozen manifest, optimiser state.

Floats are written with ``repr`` semantics (the json default), which
round-trips IEEE doubles exactly, so frozen tensors reload bit-identical.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any

import numpy as np

from ..errors import ContractError
from ..tensor import Adam, OptimizerState
from .config import AdapterConfig
from .network import MSEFModel

FORMAT = "msef-checkpoint"
VERSION = 1


def _pack(arr: np.ndarray) -> dict:
    return {"shape": list(arr.shape), "data": [float(v) for v in arr.reshape(-1)]}


def _unpack(obj: dict) -> np.ndarray:
    return np.array(obj["data"], dtype=np.float64).reshape(obj["shape"])


def save_checkpoint(path: str | os.PathLike, model: MSEFModel, optimizer: Adam | None = None,
                    extra: dict[str, Any] | None = None) -> None:
    doc: dict[str, Any] = {
        "format": FORMAT,
        "version": VERSION,
        "config": model.cfg.to_dict(),
        "tensors": {name: _pack(t.data) for name, t in model.params.items()},
        "frozen": sorted(model.frozen_names()),
        "frozen_hash": model.frozen_hash(),
        "optimizer": None,
        "extra": extra or {},
    }
    if optimizer is not None:
        st = optimizer.state
        doc["optimizer"] = {
            "lr": st.lr, "beta1": st.beta1, "beta2": st.beta2, "eps": st.eps, "step": st.step,
            "m": [_pack(a) for a in st.m], "v": [_pack(a) for a in st.v],
        }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(doc))
    tmp.replace(path)


def load_checkpoint(path: str | os.PathLike) -> tuple[MSEFModel, OptimizerState | None, dict]:
    """Rebuild the model; returns (model, optimiser state or None, extra)."""
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != FORMAT:
        raise ContractError(f"{path} is not an msef checkpoint")
    if doc.get("version") != VERSION:
        raise ContractError(f"unsupported checkpoint version {doc.get('version')}")
    model = MSEFModel(AdapterConfig.from_dict(doc["config"]))
    tensors = doc["tensors"]
    if set(tensors) != set(model.params):
        raise ContractError("checkpoint tensor names do not match the configured network")
    for name, t in model.params.items():
        arr = _unpack(tensors[name])
        if arr.shape != t.shape:
            raise ContractError(f"tensor {name}: stored shape {arr.shape} != {t.shape}")
        t.data[...] = arr
    if sorted(model.frozen_names()) != doc["frozen"]:
        raise ContractError("frozen manifest mismatch")
    if model.frozen_hash() != doc["frozen_hash"]:
        raise ContractError("frozen tensors do not match the recorded hash")
    opt = doc.get("optimizer")
    state = None
    if opt is not None:
        state = OptimizerState(opt["lr"], opt["beta1"], opt["beta2"], opt["eps"], opt["step"],
                               [_unpack(a) for a in opt["m"]], [_unpack(a) for a in opt["v"]])
    return model, state, doc.get("extra", {})
