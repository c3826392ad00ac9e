"""Parsing of the analysis tool's result files.

Reads the JSON results documents, eigenfunction CSVs, and grid-evaluation
CSVs written by the ttkd CLI. This package deliberately re-implements the
readers so the cross-check shares no code with the producer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SUPPORTED_SCHEMA = 1


class SchemaError(ValueError):
    """Input file violates the expected schema."""


@dataclass
class ResultsBundle:
    """One results document plus optional eigenfunction/grid exports."""

    doc: dict
    phi: np.ndarray | None = None
    grid_points: np.ndarray | None = None
    grid_phi: np.ndarray | None = None

    @property
    def eigenvalues(self) -> np.ndarray:
        return eigenvalues_of(self.doc)

    @property
    def timescales(self) -> list | None:
        return self.doc.get("timescales")

    @property
    def lag(self) -> int | None:
        return self.doc.get("config", {}).get("lag")

    @property
    def label(self) -> str:
        return f"{self.doc.get('method')}, eps={self.doc.get('eps')}"


def eigenvalues_of(doc: dict) -> np.ndarray:
    entries = doc.get("eigenvalues")
    if not isinstance(entries, list) or not entries:
        raise SchemaError("results document has no eigenvalues")
    try:
        vals = np.array([complex(e["re"], e["im"]) for e in entries])
    except (KeyError, TypeError) as exc:
        raise SchemaError("eigenvalue entries need 're' and 'im'") from exc
    return vals


def load_results(path) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"{path} does not hold a JSON object")
    if doc.get("schema_version") != SUPPORTED_SCHEMA:
        raise SchemaError(f"unsupported schema_version {doc.get('schema_version')}")
    eigenvalues_of(doc)  # validates presence and shape
    return doc


def load_phi_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def load_grid_eval(path):
    """Grid-eval CSV -> (points (d, m), phi (q, m))."""
    with open(path, "r", encoding="utf-8") as fh:
        names = fh.readline().strip().split(",")
    n_coord = sum(1 for n in names if n.startswith("x"))
    n_phi = sum(1 for n in names if n.startswith("phi_"))
    if n_coord == 0 or n_phi == 0 or n_coord + n_phi != len(names):
        raise SchemaError(f"unexpected grid-eval columns {names}")
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2).T
    return table[:n_coord], table[n_coord:]


def load_bundle(results_path, phi_path=None, grid_path=None) -> ResultsBundle:
    doc = load_results(results_path)
    phi = load_phi_csv(phi_path) if phi_path else None
    if phi is not None and phi.shape[0] != len(doc["eigenvalues"]):
        raise SchemaError(
            f"{phi.shape[0]} eigenfunction rows but {len(doc['eigenvalues'])} eigenvalues"
        )
    grid_points = grid_phi = None
    if grid_path:
        grid_points, grid_phi = load_grid_eval(grid_path)
    return ResultsBundle(doc, phi, grid_points, grid_phi)
