"""Discretized 2D domains with uniform square cells.

A domain is a boolean mask over a regular grid of cells with spacing ``h``.
Only in-domain cells carry unknowns; every out-of-domain cell acts as a
homogeneous Dirichlet cell for the 5-point stencil.  All measures are exact
cell counts times ``h**2``, which keeps rearrangement operations integer
manipulations.

Every constructor guarantees that the outermost ring of the grid is
out-of-domain, so all four stencil neighbors of an in-domain cell exist
inside the array.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class VerticalAxis:
    """Vertical symmetry axis of the grid, stored as twice the column index.

    ``center2`` is even when the axis runs through a cell-center column and
    odd when it runs between two columns.  Reflection maps column ``c`` to
    ``center2 - c``.
    """

    center2: int

    @property
    def through_column(self) -> bool:
        return self.center2 % 2 == 0

    @property
    def center(self) -> float:
        return self.center2 / 2.0

    def reflect_col(self, col: int) -> int:
        return self.center2 - col


class GridDomain:
    """Bounded open set discretized into uniform square cells.

    In-domain cells are ``mask == True``; their row-major order defines the
    cell indexing used by :class:`ScalarField`.
    """

    def __init__(self, mask: np.ndarray, h: float, axis: VerticalAxis | None = None):
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim != 2:
            raise ValueError("mask must be 2D")
        if h <= 0:
            raise ValueError("cell spacing h must be positive")
        if not mask.any():
            raise ValueError("domain has no in-domain cells")
        if mask[0, :].any() or mask[-1, :].any() or mask[:, 0].any() or mask[:, -1].any():
            raise ValueError("in-domain cells must stay >= 1 cell away from the grid edge")
        if axis is not None:
            if axis.center2 != mask.shape[1] - 1:
                raise ValueError("axis must be the vertical center line of the grid")
            if not np.array_equal(mask, mask[:, ::-1]):
                raise ValueError("mask is not reflection-symmetric across the axis")

        mask.setflags(write=False)
        self.mask = mask
        self.h = float(h)
        self.axis = axis

        index_map = -np.ones(mask.shape, dtype=np.int64)
        rows, cols = np.nonzero(mask)
        index_map[rows, cols] = np.arange(rows.size)
        index_map.setflags(write=False)
        self.index_map = index_map
        self.cell_rows = rows
        self.cell_cols = cols
        self.cell_rows.setflags(write=False)
        self.cell_cols.setflags(write=False)

        self._stiffness = None
        self._row_sections = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def n_cells(self) -> int:
        return self.cell_rows.size

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    @property
    def total_measure(self) -> float:
        return self.n_cells * self.cell_area

    def field(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(self, values)

    def constant_field(self, value: float) -> "ScalarField":
        return ScalarField(self, np.full(self.n_cells, float(value)))

    def indicator(self, subset_mask: np.ndarray) -> "ScalarField":
        """Characteristic function of a cell subset as a ScalarField."""
        sel = self.subset_cells(subset_mask)
        values = np.zeros(self.n_cells)
        values[sel] = 1.0
        return ScalarField(self, values)

    def subset_cells(self, subset_mask: np.ndarray) -> np.ndarray:
        """Boolean per-cell selector for a 2D subset mask; validates containment."""
        subset_mask = np.asarray(subset_mask, dtype=bool)
        if subset_mask.shape != self.mask.shape:
            raise ValueError("subset mask shape does not match the domain grid")
        if (subset_mask & ~self.mask).any():
            raise ValueError("subset contains cells outside the domain")
        return subset_mask[self.cell_rows, self.cell_cols]

    def cells_to_mask(self, selector: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`subset_cells`: per-cell booleans to a 2D mask."""
        selector = np.asarray(selector, dtype=bool)
        if selector.shape != (self.n_cells,):
            raise ValueError("selector must have one entry per in-domain cell")
        out = np.zeros(self.mask.shape, dtype=bool)
        out[self.cell_rows[selector], self.cell_cols[selector]] = True
        return out

    def grid_of(self, values: np.ndarray, fill: float = np.nan) -> np.ndarray:
        """Spread per-cell values onto the full grid, `fill` outside the domain."""
        out = np.full(self.mask.shape, fill, dtype=float)
        out[self.cell_rows, self.cell_cols] = values
        return out


class ScalarField:
    """Bounded measurable function sampled at in-domain cell centers.

    Values are stored per in-domain cell in the domain's row-major cell
    order and are immutable after construction.
    """

    def __init__(self, domain: GridDomain, values: np.ndarray):
        values = np.array(values, dtype=float)
        if values.shape != (domain.n_cells,):
            raise ValueError(
                f"expected {domain.n_cells} values (one per in-domain cell), got {values.shape}"
            )
        if not np.isfinite(values).all():
            raise ValueError("field values must be finite at every in-domain cell")
        values.setflags(write=False)
        self.domain = domain
        self.values = values

    def integral(self) -> float:
        return float(self.values.sum() * self.domain.cell_area)

    def ess_sup(self) -> float:
        return float(self.values.max())

    def ess_inf(self) -> float:
        return float(self.values.min())

    def to_grid(self, fill: float = np.nan) -> np.ndarray:
        return self.domain.grid_of(self.values, fill=fill)


def measure(domain: GridDomain, subset_mask: np.ndarray) -> float:
    """Lebesgue measure of a cell subset: (cell count) * h**2."""
    sel = domain.subset_cells(subset_mask)
    return float(sel.sum()) * domain.cell_area


def make_rectangle(width_cells: int, height_cells: int, h: float) -> GridDomain:
    """Full rectangular domain of width_cells x height_cells cells.

    The stored grid is padded by one Dirichlet ring on each side; the
    symmetry axis is set through/between the center columns by parity.
    """
    if width_cells < 3 or height_cells < 3:
        raise ValueError("rectangle needs at least 3x3 cells")
    if h <= 0:
        raise ValueError("cell spacing h must be positive")
    mask = np.zeros((height_cells + 2, width_cells + 2), dtype=bool)
    mask[1:-1, 1:-1] = True
    axis = VerticalAxis(center2=mask.shape[1] - 1)
    return GridDomain(mask, h, axis)


def make_ellipse(nx: int, ny: int, h: float, semi_axes: tuple[float, float]) -> GridDomain:
    """Ellipse mask by strict center-inclusion on an nx x ny grid.

    The ellipse is centered on the grid; cells whose centers lie strictly
    inside belong to the domain.  The inclusion test is evaluated through
    the integer offsets 2*i+1-nx, so the mask is exactly symmetric under
    both center-line reflections.
    """
    a, b = float(semi_axes[0]), float(semi_axes[1])
    if nx < 3 or ny < 3:
        raise ValueError("grid needs at least 3x3 cells")
    if h <= 0:
        raise ValueError("cell spacing h must be positive")
    if a <= 0 or b <= 0:
        raise ValueError("semi-axes must be positive")
    if a > (nx - 1) * h / 2 or b > (ny - 1) * h / 2:
        raise ValueError("ellipse exceeds the grid (needs >= 1 cell margin)")

    j = np.arange(ny)[:, None]
    i = np.arange(nx)[None, :]
    # offsets of cell centers from the grid center, in units of h/2
    u = 2 * i + 1 - nx
    v = 2 * j + 1 - ny
    mask = (u * h / (2 * a)) ** 2 + (v * h / (2 * b)) ** 2 < 1.0
    if not mask.any():
        raise ValueError("ellipse contains no cell centers at this resolution")
    axis = VerticalAxis(center2=nx - 1)
    return GridDomain(mask, h, axis)


def make_box(width: float, height: float, n: int) -> GridDomain:
    """Rectangle whose effective Dirichlet boundary spans width x height.

    The 5-point stencil pins u = 0 at the first out-of-domain cell centers,
    one spacing outside the outermost in-domain centers.  With spacing
    h = 1/(n+1), an n x n block of cells therefore behaves as the unit
    square; width/height are realized as round(width*(n+1)) - 1 cells.
    """
    if n < 4:
        raise ValueError("resolution n must be at least 4")
    h = 1.0 / (n + 1)
    nx = int(round(width * (n + 1))) - 1
    ny = int(round(height * (n + 1))) - 1
    return make_rectangle(nx, ny, h)


def from_mask(mask: np.ndarray, h: float, set_axis: bool = True) -> GridDomain:
    """Domain from a user-supplied boolean mask (nonzero = in-domain).

    Pads by one Dirichlet ring when the mask touches the array border.  The
    vertical center axis is recorded only when the (padded) mask is
    reflection-symmetric across it.
    """
    mask = np.asarray(mask).astype(bool)
    if mask.ndim != 2:
        raise ValueError("mask must be 2D")
    if mask.shape[0] and (
        mask[0, :].any() or mask[-1, :].any() or mask[:, 0].any() or mask[:, -1].any()
    ):
        mask = np.pad(mask, 1, mode="constant", constant_values=False)
    axis = None
    if set_axis and np.array_equal(mask, mask[:, ::-1]):
        axis = VerticalAxis(center2=mask.shape[1] - 1)
    return GridDomain(mask, h, axis)


def transposed(domain: GridDomain) -> GridDomain:
    """Domain with rows and columns swapped (for horizontal-axis checks)."""
    return from_mask(domain.mask.T, domain.h)


def transpose_field(f: ScalarField, tdomain: GridDomain | None = None) -> ScalarField:
    """Carry a field onto the transposed domain."""
    td = tdomain if tdomain is not None else transposed(f.domain)
    grid = f.to_grid().T
    if td.shape != grid.shape:
        raise ValueError("transposed domain does not match the field's grid")
    return ScalarField(td, grid[td.cell_rows, td.cell_cols])


def reflect_field(f: ScalarField) -> ScalarField:
    """Mirror a field across the domain's vertical axis."""
    domain = f.domain
    if domain.axis is None:
        raise ValueError("domain has no symmetry axis")
    grid = f.to_grid()[:, ::-1]
    return ScalarField(domain, grid[domain.cell_rows, domain.cell_cols])
