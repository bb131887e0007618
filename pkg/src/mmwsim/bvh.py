"""Flat bounding-volume accelerator for ray/triangle-mesh intersection.

Triangles are median-split into small leaves; each leaf keeps an AABB.
Queries run vectorized over whole ray batches: slab-test a leaf's box
against every ray, then Moller-Trumbore only the rays that pass.  Flat
leaf iteration beats tree traversal for numpy batches at these mesh
sizes (tens to thousands of facets).
"""

from __future__ import annotations

import numpy as np

_EPS = 1e-12


def _build_leaves(centroids: np.ndarray, leaf_size: int) -> list[np.ndarray]:
    """Recursive median split of triangle indices along the widest axis."""
    leaves = []

    def split(idx):
        if len(idx) <= leaf_size:
            leaves.append(idx)
            return
        c = centroids[idx]
        axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
        order = np.argsort(c[:, axis], kind="stable")
        half = len(idx) // 2
        split(idx[order[:half]])
        split(idx[order[half:]])

    split(np.arange(len(centroids)))
    return leaves


class MeshIntersector:
    def __init__(self, mesh, leaf_size: int = 32):
        self.mesh = mesh
        a, b, c = mesh.triangle_vertices()
        self._a, self._e1, self._e2 = a, b - a, c - a
        centroids = (a + b + c) / 3.0
        self._leaves = _build_leaves(centroids, leaf_size)
        self._boxes = []
        for idx in self._leaves:
            pts = np.concatenate([a[idx], b[idx], c[idx]])
            self._boxes.append((pts.min(axis=0) - 1e-9, pts.max(axis=0) + 1e-9))

    def _slab_mask(self, origins, inv_dirs, box, t_best):
        lo, hi = box
        t1 = (lo - origins) * inv_dirs
        t2 = (hi - origins) * inv_dirs
        tmin = np.minimum(t1, t2).max(axis=1)
        tmax = np.maximum(t1, t2).min(axis=1)
        return (tmax >= np.maximum(tmin, 0.0)) & (tmin <= t_best)

    def intersect(self, origins: np.ndarray, directions: np.ndarray,
                  front_only: bool = True):
        """Nearest hit per ray.

        Returns (t, tri_index) arrays; misses have t = inf, tri_index = -1.
        With front_only, triangles facing away from the ray are ignored
        (their normal has a positive component along the ray).
        """
        n = len(origins)
        t_best = np.full(n, np.inf)
        tri_best = np.full(n, -1, dtype=np.int64)
        with np.errstate(divide="ignore"):
            inv_dirs = 1.0 / np.where(np.abs(directions) < _EPS,
                                      np.copysign(_EPS, directions), directions)
        for idx, box in zip(self._leaves, self._boxes):
            sel = np.nonzero(self._slab_mask(origins, inv_dirs, box, t_best))[0]
            if sel.size == 0:
                continue
            o = origins[sel][:, None, :]
            d = directions[sel][:, None, :]
            a = self._a[idx][None, :, :]
            e1 = self._e1[idx][None, :, :]
            e2 = self._e2[idx][None, :, :]
            pvec = np.cross(d, e2)
            det = np.einsum("rtk,rtk->rt", e1, pvec)
            if front_only:
                valid = det > _EPS  # CCW front face
            else:
                valid = np.abs(det) > _EPS
            with np.errstate(divide="ignore", invalid="ignore"):
                inv_det = np.where(valid, 1.0 / det, 0.0)
                tvec = o - a
                u = np.einsum("rtk,rtk->rt", tvec, pvec) * inv_det
                qvec = np.cross(tvec, e1)
                v = np.einsum("rtk,rtk->rt", d, qvec) * inv_det
                t = np.einsum("rtk,rtk->rt", e2, qvec) * inv_det
            hit = valid & (u >= -1e-9) & (v >= -1e-9) & (u + v <= 1 + 1e-9) & (t > 1e-7)
            t = np.where(hit, t, np.inf)
            local_best = t.argmin(axis=1)
            rows = np.arange(len(sel))
            tt = t[rows, local_best]
            better = tt < t_best[sel]
            upd = sel[better]
            t_best[upd] = tt[better]
            tri_best[upd] = idx[local_best[better]]
        return t_best, tri_best

    def occluded(self, origins: np.ndarray, directions: np.ndarray,
                 max_t: float = np.inf) -> np.ndarray:
        """True where any triangle (either side) blocks the ray before max_t."""
        t, _ = self.intersect(origins, directions, front_only=False)
        return t < max_t
