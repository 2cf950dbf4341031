"""Uniform grids over boxes and periodic cells, nodal fields, sup distance.

The continuous habitats are axis-aligned boxes (with boundary) and periodic
cells.  A grid samples a habitat with one uniform, isotropic spacing ``h``;
box grids may carry a band of ghost nodes outside the closure, used to hold
the exterior zero datum of the hostile-surroundings dispersal problem.
Periodic grids store one representative node per equivalence class, so wrap
identification is exact by construction.

Fields are flat nodal value arrays in C order over the tensor grid, and the
distance between fields is the max-norm over non-ghost nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import ValidationError

BOX = "box"
PERIODIC_CELL = "periodic"


def _as_tuple(value) -> tuple[float, ...]:
    if np.ndim(value) == 0:
        return (float(value),)
    return tuple(float(v) for v in value)


@dataclass(frozen=True)
class Domain:
    """A habitat: a bounded box with boundary, or a periodic cell.

    ``lower``/``upper`` are the box corners (box kind only); ``periods`` are
    the cell edge lengths (periodic kind only).
    """

    kind: str
    lower: tuple[float, ...] = ()
    upper: tuple[float, ...] = ()
    periods: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == BOX:
            if len(self.lower) != len(self.upper) or not self.lower:
                raise ValidationError("box domains need matching lower/upper corners")
            if any(u <= l for l, u in zip(self.lower, self.upper)):
                raise ValidationError(f"box corners must satisfy upper > lower, got {self.lower} / {self.upper}")
        elif self.kind == PERIODIC_CELL:
            if not self.periods:
                raise ValidationError("periodic cells need at least one period")
            if any(p <= 0 for p in self.periods):
                raise ValidationError(f"periods must be positive, got {self.periods}")
        else:
            raise ValidationError(f"unknown domain kind {self.kind!r}")

    @property
    def dimension(self) -> int:
        return len(self.lower) if self.kind == BOX else len(self.periods)

    @property
    def edges(self) -> tuple[float, ...]:
        if self.kind == BOX:
            return tuple(u - l for l, u in zip(self.lower, self.upper))
        return self.periods


def box(lower, upper) -> Domain:
    """Bounded box domain; scalars build an interval."""
    return Domain(BOX, lower=_as_tuple(lower), upper=_as_tuple(upper))


def periodic_cell(periods) -> Domain:
    """Periodic cell domain; a scalar builds a one-dimensional cell."""
    return Domain(PERIODIC_CELL, periods=_as_tuple(periods))


def _axis_cells(edge: float, h: float, what: str) -> int:
    cells = edge / h
    n = round(cells)
    if n < 1 or abs(cells - n) > 1e-12 * max(1.0, abs(n)):
        raise ValidationError(
            f"incompatible spacing: h={h!r} does not divide the {what} {edge!r} (edge/h={cells!r})"
        )
    return int(n)


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform tensor grid over a domain, possibly with a ghost band.

    ``shape`` counts nodes per axis including ghosts; ``axes`` hold the
    per-axis node coordinates.  Flattened node data (coordinates, ghost
    mask) are laid out in C order over the tensor product.
    """

    domain: Domain
    h: float
    ghost_cells: int
    shape: tuple[int, ...]
    axes: tuple[np.ndarray, ...]

    # Flat per-node arrays, computed once at build time.
    coordinates: tuple[np.ndarray, ...] = dataclass_field(repr=False, default=())
    ghost_mask: np.ndarray = dataclass_field(repr=False, default=None)

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.shape))

    def signature(self) -> tuple:
        return (self.domain, self.h, self.ghost_cells, self.shape)

    def boundary_distance(self) -> np.ndarray:
        """Distance from each node to the box boundary (negative outside).

        Periodic cells have no boundary; every node reports ``+inf``.
        """
        if self.domain.kind != BOX:
            return np.full(self.num_nodes, math.inf)
        dist = np.full(self.num_nodes, math.inf)
        for lo, up, x in zip(self.domain.lower, self.domain.upper, self.coordinates):
            dist = np.minimum(dist, np.minimum(x - lo, up - x))
        return dist


def same_grid(a: Grid, b: Grid) -> bool:
    return a is b or a.signature() == b.signature()


def build_grid(domain: Domain, h: float, ghost_width: float = 0.0) -> Grid:
    """Sample ``domain`` at spacing ``h``.

    ``ghost_width`` asks for a band of exterior nodes at least that wide on
    every side of a box; the band is rounded up to whole cells.  Node
    coordinates are ``lower + i*h`` exactly, so identical inputs reproduce
    identical grids bit for bit.
    """
    if h <= 0.0:
        raise ValidationError(f"spacing h must be positive, got {h}")
    if ghost_width < 0.0:
        raise ValidationError(f"ghost width must be nonnegative, got {ghost_width}")
    if domain.kind == PERIODIC_CELL:
        if ghost_width > 0.0:
            raise ValidationError("periodic cells take no ghost band")
        shape = tuple(_axis_cells(p, h, "period") for p in domain.periods)
        axes = tuple(np.arange(n) * h for n in shape)
        ghost_cells = 0
    else:
        ghost_cells = int(math.ceil(ghost_width / h - 1e-9)) if ghost_width > 0 else 0
        shape = tuple(_axis_cells(e, h, "edge length") + 1 + 2 * ghost_cells for e in domain.edges)
        axes = tuple(
            lo + (np.arange(n) - ghost_cells) * h for lo, n in zip(domain.lower, shape)
        )
    mesh = np.meshgrid(*axes, indexing="ij") if len(axes) > 1 else [axes[0]]
    coordinates = tuple(m.ravel() for m in mesh)
    if ghost_cells > 0:
        ghost = np.zeros(shape, dtype=bool)
        for axis, n in enumerate(shape):
            idx = [slice(None)] * len(shape)
            idx[axis] = slice(0, ghost_cells)
            ghost[tuple(idx)] = True
            idx[axis] = slice(n - ghost_cells, n)
            ghost[tuple(idx)] = True
        ghost_mask = ghost.ravel()
    else:
        ghost_mask = np.zeros(int(np.prod(shape)), dtype=bool)
    return Grid(domain, float(h), ghost_cells, shape, axes, coordinates, ghost_mask)


@dataclass
class Field:
    """Nodal values on a grid at one instant."""

    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.num_nodes,):
            raise ValidationError(
                f"field needs {self.grid.num_nodes} nodal values, got shape {self.values.shape}"
            )

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy(), self.time)


def field_from_function(grid: Grid, fn, time: float = 0.0) -> Field:
    """Sample ``fn(*coordinate_columns)`` at every node (ghosts included)."""
    values = np.asarray(fn(*grid.coordinates), dtype=float)
    values = np.broadcast_to(values, (grid.num_nodes,)).copy()
    return Field(grid, values, time)


def constant_field(grid: Grid, value: float, time: float = 0.0) -> Field:
    return Field(grid, np.full(grid.num_nodes, float(value)), time)


def sup_norm(f: Field) -> float:
    """Max absolute nodal value over non-ghost nodes."""
    keep = ~f.grid.ghost_mask
    return float(np.max(np.abs(f.values[keep])))


def sup_distance(f: Field, g: Field) -> float:
    """Max absolute difference over non-ghost nodes of a shared grid."""
    if not same_grid(f.grid, g.grid):
        raise ValidationError("grid mismatch: fields live on different grids")
    keep = ~f.grid.ghost_mask
    return float(np.max(np.abs(f.values[keep] - g.values[keep])))


def write_field_csv(field: Field, path) -> None:
    """Serialize the non-ghost nodes as ``x[,y],value`` rows."""
    grid = field.grid
    keep = ~grid.ghost_mask
    columns = [c[keep] for c in grid.coordinates] + [field.values[keep]]
    header = ",".join(["x", "y"][: grid.dimension] + ["value"])
    with open(path, "w", encoding="ascii") as handle:
        handle.write(header + "\n")
        for row in zip(*columns):
            handle.write(",".join(repr(float(v)) for v in row) + "\n")


def read_field_csv(grid: Grid, path, time: float = 0.0) -> Field:
    """Load a field written by :func:`write_field_csv` back onto ``grid``.

    Ghost nodes (absent from the file) are restored as zeros.
    """
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    keep = ~grid.ghost_mask
    if data.shape != (int(keep.sum()), grid.dimension + 1):
        raise ValidationError(
            f"file {path} holds {data.shape} values; grid expects {int(keep.sum())} non-ghost rows"
        )
    for axis in range(grid.dimension):
        if np.max(np.abs(data[:, axis] - grid.coordinates[axis][keep])) > 1e-12:
            raise ValidationError(f"file {path} was written on a different grid (axis {axis} mismatch)")
    values = np.zeros(grid.num_nodes)
    values[keep] = data[:, -1]
    return Field(grid, values, time)
