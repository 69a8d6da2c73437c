"""Deterministic grid nets covering the radius-R ball in the top-eigenspace.

The net is an axis-aligned lattice with spacing mesh/sqrt(k), clipped to the
ball of radius R + mesh and enumerated in lexicographic order.  Rounding any
point of the R-ball to the lattice moves it by at most mesh/2, so the net is
a mesh-covering of the ball by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

DEFAULT_NET_CAP = 10**7


class NetSizeError(RuntimeError):
    """Projected net size exceeds the enumeration cap."""

    def __init__(self, projected: int, cap: int, k: int):
        super().__init__(
            f"projected net size {projected} exceeds cap {cap} (k={k}); "
            f"raise the cap explicitly to proceed"
        )
        self.projected = projected
        self.cap = cap
        self.k = k


@dataclass(frozen=True)
class EpsilonNet:
    k: int
    radius: float        # R
    mesh: float          # covering distance
    points: np.ndarray   # (size, k) coordinates in the projector basis

    @property
    def size(self) -> int:
        return self.points.shape[0]


def net_size_bound(k: int, radius: float, mesh: float) -> int:
    """Upper bound (1 + 2*ceil(R*sqrt(k)/mesh))^k on the enumerated net size."""
    if k == 0:
        return 1
    half = math.ceil(radius * math.sqrt(k) / mesh)
    return (1 + 2 * half) ** k


def build_net(k: int, radius: float, mesh: float, cap: int = DEFAULT_NET_CAP) -> EpsilonNet:
    """Enumerate the clipped grid net for the radius-`radius` ball in R^k."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if radius <= 0 or mesh <= 0:
        raise ValueError(f"radius and mesh must be positive, got {radius}, {mesh}")
    if k == 0:
        return EpsilonNet(k=0, radius=radius, mesh=mesh, points=np.zeros((1, 0)))

    projected = net_size_bound(k, radius, mesh)
    if projected > cap:
        raise NetSizeError(projected, cap, k)

    spacing = mesh / math.sqrt(k)
    half = math.ceil(radius * math.sqrt(k) / mesh)
    axis = np.arange(-half, half + 1, dtype=np.float64)
    clip_sq = (radius + mesh) ** 2

    if k == 1:
        coords = axis[:, None] * spacing
        keep = (coords[:, 0] ** 2) <= clip_sq
        return EpsilonNet(k=1, radius=radius, mesh=mesh, points=coords[keep])

    # lexicographic enumeration, chunked along the leading coordinate
    tail = np.stack(np.meshgrid(*([axis] * (k - 1)), indexing="ij"), axis=-1).reshape(-1, k - 1)
    tail_sq = (tail**2).sum(axis=1)
    chunks = []
    for z0 in axis:
        keep = (z0**2 + tail_sq) * spacing**2 <= clip_sq
        if not keep.any():
            continue
        block = np.empty((int(keep.sum()), k))
        block[:, 0] = z0 * spacing
        block[:, 1:] = tail[keep] * spacing
        chunks.append(block)
    points = np.concatenate(chunks, axis=0) if chunks else np.zeros((0, k))
    return EpsilonNet(k=k, radius=radius, mesh=mesh, points=points)


def lift(coords, basis: np.ndarray) -> np.ndarray:
    """Map net coordinates to the ambient space through the orthonormal basis."""
    coords = np.asarray(coords, dtype=np.float64)
    if coords.shape != (basis.shape[1],):
        raise ValueError(f"coordinate length {coords.shape} does not match basis columns {basis.shape[1]}")
    return basis @ coords
