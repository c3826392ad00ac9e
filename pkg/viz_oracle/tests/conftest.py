import json
import subprocess
import sys

import pytest


def run_primary(args):
    """Invoke the producing CLI in a subprocess (the only coupling allowed)."""
    proc = subprocess.run(
        [sys.executable, "-m", "ttkd.cli", *map(str, args)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, f"primary CLI failed: {proc.stderr}"
    return proc


def write_basis(path, dimensions):
    doc = {"dimensions": dimensions}
    path.write_text(json.dumps(doc, indent=2))
    return path


DW_BASIS = [
    {
        "coordinate": 1,
        "functions": [
            {"kind": "constant"},
            {"kind": "gaussian", "c": -1.0, "s": 0.3},
            {"kind": "gaussian", "c": 1.0, "s": 0.3},
        ],
    },
    {
        "coordinate": 1,
        "functions": [
            {"kind": "constant"},
            {"kind": "gaussian", "c": 0.0, "s": 0.5},
            {"kind": "gaussian", "c": 0.5, "s": 0.4},
        ],
    },
]


@pytest.fixture(scope="session")
def golden_run(tmp_path_factory):
    """Small double-well EDMD run at eps=0 with the exact method."""
    root = tmp_path_factory.mktemp("golden")
    traj = root / "dw.traj"
    run_primary(
        [
            "generate", "double-well", "--beta", "2.0", "--dt", "1e-3",
            "--steps", "10000", "--stride", "10", "--seed", "12", "--out", traj,
        ]
    )
    basis = write_basis(root / "basis.json", DW_BASIS)
    results = root / "dw_edmd.json"
    run_primary(
        [
            "edmd", "--traj", traj, "--basis", basis, "--lag", "50",
            "--eps", "0", "--method", "exact", "--q", "5",
            "--tau-physical", "0.5", "--out", results,
        ]
    )
    return {"traj": traj, "basis": basis, "results": results, "root": root}
