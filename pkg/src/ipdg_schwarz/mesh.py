"""Nested uniform quadrilateral meshes of the unit square."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_LEVEL = 14

# Local face ids of a cell and their outward unit normals.
WEST, EAST, SOUTH, NORTH = 0, 1, 2, 3
FACE_NORMALS = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]])
OPPOSITE = np.array([EAST, WEST, NORTH, SOUTH])


@dataclass(frozen=True)
class Mesh:
    """A ``2**level x 2**level`` grid of squares covering ``[0, 1]^2``.

    Cells are numbered row-major, ``cell = j * n + i`` for grid
    coordinates ``(i, j)``.  Interior faces are stored with the
    lower-indexed cell as ``minus`` and the normal pointing in ``+x`` or
    ``+y`` towards ``plus``.

    Attributes
    ----------
    level : int
    n : int
        Cells per direction.
    h : float
        Cell side length.
    ij : ndarray, shape (ncells, 2)
        Grid coordinates of every cell.
    corners : ndarray, shape (ncells, 2)
        Lower-left corner of every cell.
    neighbors : ndarray, shape (ncells, 4)
        Neighbor across the W/E/S/N face, ``-1`` on the boundary.
    interior_faces : ndarray, shape (nif, 2)
        ``(minus, plus)`` cell pairs.
    interior_normals : ndarray, shape (nif, 2)
    boundary_faces : ndarray, shape (nbf, 2)
        ``(cell, local face id)`` pairs.
    boundary_normals : ndarray, shape (nbf, 2)
        Outward normals.
    """

    level: int
    n: int
    h: float
    ij: np.ndarray = field(repr=False)
    corners: np.ndarray = field(repr=False)
    neighbors: np.ndarray = field(repr=False)
    interior_faces: np.ndarray = field(repr=False)
    interior_normals: np.ndarray = field(repr=False)
    boundary_faces: np.ndarray = field(repr=False)
    boundary_normals: np.ndarray = field(repr=False)

    @property
    def ncells(self) -> int:
        return self.n * self.n

    def cell_index(self, i, j):
        return j * self.n + i

    def bounding_box(self, cell: int) -> tuple[float, float, float, float]:
        x0, y0 = self.corners[cell]
        return x0, y0, x0 + self.h, y0 + self.h

    def interior_face_geometry(self, face: int) -> tuple[np.ndarray, np.ndarray]:
        """Return the two end points of an interior face."""
        minus, _ = self.interior_faces[face]
        normal = self.interior_normals[face]
        x0, y0 = self.corners[minus]
        if normal[0] > 0:
            a = np.array([x0 + self.h, y0])
            b = np.array([x0 + self.h, y0 + self.h])
        else:
            a = np.array([x0, y0 + self.h])
            b = np.array([x0 + self.h, y0 + self.h])
        return a, b

    def parent(self, cell):
        """Index of the parent cell on ``level - 1``."""
        if self.level == 0:
            raise ValueError("level 0 cells have no parent")
        i, j = cell % self.n, cell // self.n
        return (j // 2) * (self.n // 2) + i // 2

    def children(self, cell):
        """Indices of the four children on ``level + 1``, ordered (0,0),(1,0),(0,1),(1,1)."""
        i, j = cell % self.n, cell // self.n
        nf = 2 * self.n
        return np.array([(2 * j + b) * nf + 2 * i + a for b in (0, 1) for a in (0, 1)])


def build_mesh(level: int) -> Mesh:
    if level < 0:
        raise ValueError(f"level must be nonnegative, got {level}")
    if level > MAX_LEVEL:
        raise ValueError(f"level {level} exceeds the resource guard {MAX_LEVEL}")
    n = 2**level
    h = 1.0 / n
    jj, ii = np.divmod(np.arange(n * n), n)
    ij = np.stack([ii, jj], axis=1)
    corners = ij * h

    cell = np.arange(n * n)
    neighbors = np.full((n * n, 4), -1, dtype=np.int64)
    neighbors[ii > 0, WEST] = cell[ii > 0] - 1
    neighbors[ii < n - 1, EAST] = cell[ii < n - 1] + 1
    neighbors[jj > 0, SOUTH] = cell[jj > 0] - n
    neighbors[jj < n - 1, NORTH] = cell[jj < n - 1] + n

    xm = cell[ii < n - 1]
    ym = cell[jj < n - 1]
    interior_faces = np.concatenate(
        [np.stack([xm, xm + 1], axis=1), np.stack([ym, ym + n], axis=1)]
    ).reshape(-1, 2)
    interior_normals = np.concatenate(
        [np.tile([1.0, 0.0], (len(xm), 1)), np.tile([0.0, 1.0], (len(ym), 1))]
    ).reshape(-1, 2)

    bf = [(c, f) for f in range(4) for c in cell[neighbors[:, f] < 0]]
    boundary_faces = np.array(bf, dtype=np.int64).reshape(-1, 2)
    boundary_normals = FACE_NORMALS[boundary_faces[:, 1]]

    return Mesh(
        level=level,
        n=n,
        h=h,
        ij=ij,
        corners=corners,
        neighbors=neighbors,
        interior_faces=interior_faces,
        interior_normals=interior_normals,
        boundary_faces=boundary_faces,
        boundary_normals=boundary_normals,
    )


@dataclass(frozen=True)
class MeshHierarchy:
    levels: tuple[Mesh, ...]

    @property
    def finest_level(self) -> int:
        return len(self.levels) - 1

    def __getitem__(self, level: int) -> Mesh:
        return self.levels[level]

    def __len__(self) -> int:
        return len(self.levels)


def build_hierarchy(max_level: int) -> MeshHierarchy:
    """Meshes on levels ``0..max_level``, each a uniform refinement of the previous."""
    if max_level < 0:
        raise ValueError(f"max_level must be nonnegative, got {max_level}")
    if max_level > MAX_LEVEL:
        raise ValueError(f"level {max_level} exceeds the resource guard {MAX_LEVEL}")
    return MeshHierarchy(tuple(build_mesh(level) for level in range(max_level + 1)))
