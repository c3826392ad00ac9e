"""Plots: implied-timescale curves and marching-cubes isosurfaces.

Everything renders headlessly (Agg) to PNG files; isosurface meshes are also
exported as Wavefront OBJ text files for inspection.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from mpl_toolkits.mplot3d.art3d import Poly3DCollection
from skimage import measure

from .results import SchemaError

TWO_PI = 2.0 * math.pi


def plot_timescales(bundles, out, timescale_indices=(2,), reference=None):
    """Timescale-vs-lag curves, one curve per (method, eps) and index.

    Each bundle must carry a lag and computed timescales; at least two
    distinct lags are required. ``timescale_indices`` are 1-based (t_2 is
    the slowest nontrivial timescale). ``reference`` draws a horizontal
    reference line.
    """
    if not bundles:
        raise SchemaError("no results to plot")
    for b in bundles:
        _ = b.eigenvalues  # raises SchemaError when empty/missing
        if b.lag is None:
            raise SchemaError("results document lacks config.lag")
        if not b.timescales:
            raise SchemaError("results document lacks timescales")
    lags = sorted({b.lag for b in bundles})
    if len(lags) < 2:
        raise SchemaError(f"need results for at least 2 lags, got {lags}")

    fig, ax = plt.subplots(figsize=(6, 4))
    groups = {}
    for b in bundles:
        groups.setdefault(b.label, []).append(b)
    for label, members in sorted(groups.items()):
        members = sorted(members, key=lambda b: b.lag)
        xs = [b.lag for b in members]
        for k in timescale_indices:
            ys = [b.timescales[k - 1] for b in members]
            suffix = f" t_{k}" if len(timescale_indices) > 1 else ""
            ax.plot(xs, ys, marker="o", label=label + suffix)
    if reference is not None:
        ax.axhline(reference, color="black", lw=1, label="reference")
    ax.set_xlabel("lag (frames)")
    ax.set_ylabel("implied timescale")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return Path(out)


def grid_axes(points: np.ndarray):
    """Validate that points form a full rectilinear grid; return the axes
    and the index of each point in the grid."""
    d, m = points.shape
    axes = [np.unique(points[i]) for i in range(d)]
    if math.prod(len(a) for a in axes) != m:
        raise SchemaError(
            f"{m} points cannot fill a {'x'.join(str(len(a)) for a in axes)} grid"
        )
    idx = np.empty((d, m), dtype=int)
    for i in range(d):
        idx[i] = np.searchsorted(axes[i], points[i])
        if not np.allclose(axes[i][idx[i]], points[i], rtol=0, atol=1e-12):
            raise SchemaError("points do not lie on a rectilinear grid")
    flat = np.ravel_multi_index(idx, tuple(len(a) for a in axes))
    if np.unique(flat).size != m:
        raise SchemaError("duplicate grid points")
    return axes, idx


def field_to_volume(points: np.ndarray, values: np.ndarray):
    axes, idx = grid_axes(points)
    vol = np.empty(tuple(len(a) for a in axes))
    vol[tuple(idx)] = values
    return axes, vol


def mesh_components(faces: np.ndarray) -> list[np.ndarray]:
    """Connected components of a triangle mesh as lists of face indices."""
    n_vert = int(faces.max()) + 1 if faces.size else 0
    parent = np.arange(n_vert)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for tri in faces:
        r = find(tri[0])
        for v in tri[1:]:
            parent[find(v)] = r
    roots = np.array([find(v) for v in faces[:, 0]]) if faces.size else np.array([])
    return [np.flatnonzero(roots == r) for r in np.unique(roots)]


def write_obj(path, verts: np.ndarray, faces: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in verts:
            fh.write(f"v {v[0]:.8g} {v[1]:.8g} {v[2]:.8g}\n")
        for f in faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


def extract_isosurface(points, values, level):
    """Marching cubes on gridded data; empty mesh when the level is not
    crossed. Returns (verts, faces) in data coordinates."""
    axes, vol = field_to_volume(points, values)
    if not vol.min() < level < vol.max():
        return np.zeros((0, 3)), np.zeros((0, 3), dtype=int)
    spacing = tuple(
        (a[-1] - a[0]) / (len(a) - 1) if len(a) > 1 else 1.0 for a in axes
    )
    verts, faces, _normals, _vals = measure.marching_cubes(
        vol, level=level, spacing=spacing
    )
    verts = verts + np.array([a[0] for a in axes])
    return verts, faces


def plot_isosurfaces(points, phi, out, levels=None, indices=None, colors=None):
    """Render isosurfaces of selected eigenfunctions into one 3-D figure.

    ``indices`` are 1-based eigenfunction numbers (default: all rows of
    ``phi``); ``levels`` defaults to +/- 0.5 max|phi_k| per eigenfunction.
    One OBJ mesh per (eigenfunction, level) is written alongside the image.
    Returns a summary {eigenfunction: [(level, n_faces, n_components), ...]}.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    if points.shape[1] != phi.shape[1]:
        raise SchemaError("point count and eigenfunction length differ")
    if indices is None:
        indices = range(1, phi.shape[0] + 1)
    out = Path(out)
    fig = plt.figure(figsize=(7, 6))
    ax = fig.add_subplot(projection="3d")
    cmap = plt.get_cmap("tab10")
    summary = {}
    for pos, k in enumerate(indices):
        values = phi[k - 1]
        if levels is None:
            peak = np.max(np.abs(values))
            use_levels = [-0.5 * peak, 0.5 * peak]
        else:
            use_levels = list(np.atleast_1d(levels))
        entries = []
        for level in use_levels:
            verts, faces = extract_isosurface(points, values, level)
            comps = mesh_components(faces)
            entries.append((float(level), int(faces.shape[0]), len(comps)))
            if faces.size:
                sign = "p" if level >= 0 else "m"
                mesh_path = out.with_name(f"{out.stem}_phi{k}_{sign}.obj")
                write_obj(mesh_path, verts, faces)
                color = (colors or {}).get(k, cmap(pos % 10))
                tri = Poly3DCollection(
                    verts[faces], alpha=0.45, facecolor=color, edgecolor="none"
                )
                ax.add_collection3d(tri)
        summary[k] = entries
    lo = points.min(axis=1)
    hi = points.max(axis=1)
    ax.set_xlim(lo[0], hi[0])
    ax.set_ylim(lo[1], hi[1])
    ax.set_zlim(lo[2], hi[2])
    ax.set_xlabel("z1")
    ax.set_ylabel("z2")
    ax.set_zlabel("z3")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return summary


def component_centroids(points, values, level, min_face_fraction=0.05):
    """Centroids of the significant connected components of one isosurface."""
    verts, faces = extract_isosurface(points, values, level)
    comps = mesh_components(faces)
    total = max(faces.shape[0], 1)
    centroids = []
    for comp in comps:
        if len(comp) / total < min_face_fraction:
            continue
        tri_verts = verts[faces[comp]].reshape(-1, 3)
        centroids.append(tri_verts.mean(axis=0))
    return centroids


def torus_distance(a, b, period=TWO_PI) -> float:
    delta = np.abs(np.asarray(a) - np.asarray(b)) % period
    delta = np.minimum(delta, period - delta)
    return float(np.linalg.norm(delta))


def cluster_count(centroids, threshold=1.5, period=TWO_PI) -> int:
    """Greedy clustering of centroids under the torus metric."""
    reps: list[np.ndarray] = []
    for c in centroids:
        if all(torus_distance(c, r, period) > threshold for r in reps):
            reps.append(np.asarray(c))
    return len(reps)


def periodic_label(mask: np.ndarray) -> np.ndarray:
    """Connected-component labels of a voxel mask with torus wrap-around."""
    lab, n = measure.label(mask, connectivity=1, return_num=True)
    parent = list(range(n + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for axis in range(mask.ndim):
        first = np.take(lab, 0, axis=axis)
        last = np.take(lab, -1, axis=axis)
        both = (first > 0) & (last > 0)
        for a, b in zip(first[both].ravel(), last[both].ravel()):
            ra, rb = find(int(a)), find(int(b))
            if ra != rb:
                parent[rb] = ra
    return np.array([find(a) for a in range(n + 1)])[lab]


def count_coherent_components(
    points, phi, indices, level_fraction=0.5, min_voxels=30
) -> int:
    """Qualitative count of distinct coherent regions across eigenfunctions.

    For each selected eigenfunction the super-level voxel sets of +/-
    ``level_fraction`` times its peak are labeled with periodic
    connectivity; blobs from different eigenfunctions are identified when
    they overlap spatially. The count is the number of resulting distinct
    regions (vortices, for the ABC flow).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    blobs: list[set] = []
    for k in indices:
        axes, vol = field_to_volume(points, phi[k - 1])
        peak = np.max(np.abs(vol))
        if peak == 0:
            continue
        for sign in (1.0, -1.0):
            lab = periodic_label(sign * vol >= level_fraction * peak)
            for v in np.unique(lab):
                if v == 0:
                    continue
                voxels = np.flatnonzero((lab == v).ravel())
                if voxels.size >= min_voxels:
                    blobs.append(set(voxels.tolist()))
    parent = list(range(len(blobs)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(len(blobs)):
        for j in range(i + 1, len(blobs)):
            if blobs[i] & blobs[j]:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    return len({find(i) for i in range(len(blobs))})
