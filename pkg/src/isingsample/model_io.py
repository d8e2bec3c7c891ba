"""Reading and writing models: edge lists, Ising JSON and MRF JSON."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .model import IsingModel, Model, Mrf


def parse_edge_list(text: str, n: int | None = None) -> IsingModel:
    """Parse lines ``i j w`` (0-based).  A ``# n=N`` comment fixes the size."""
    edges = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip().replace(" ", "")
            if body.startswith("n="):
                n = int(body[2:])
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"bad edge line: {line!r}")
        edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
    if n is None:
        n = 1 + max((max(i, j) for i, j, _ in edges), default=0)
    return IsingModel.from_edges(n, edges)


def model_to_dict(model: Model) -> dict:
    if isinstance(model, IsingModel):
        return {
            "n": model.n,
            "edges": [[i, j, w] for i, j, w in model.edges()],
            "fields": [float(v) for v in model.h],
        }
    return {
        "n": model.n,
        "r": model.r,
        "terms": [{"subset": list(k), "coeff": w} for k, w in sorted(model.coeffs.items())],
    }


def model_from_dict(d: dict) -> Model:
    if "terms" in d:
        return Mrf(int(d["n"]), {tuple(t["subset"]): float(t["coeff"]) for t in d["terms"]}, r=d.get("r"))
    n = int(d["n"])
    return IsingModel.from_edges(n, d.get("edges", []), d.get("fields"))


def load_model(path) -> Model:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        return model_from_dict(json.loads(text))
    return parse_edge_list(text)


def save_model(model: Model, path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".json" or not isinstance(model, IsingModel):
        path.write_text(json.dumps(model_to_dict(model), indent=1))
        return
    lines = [f"# n={model.n}"] + [f"{i} {j} {w!r}" for i, j, w in model.edges()]
    if np.any(model.h != 0):
        raise ValueError("edge-list format cannot store fields; use .json")
    path.write_text("\n".join(lines) + "\n")
