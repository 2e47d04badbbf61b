"""Uniform simplicial meshes on unions of axis-aligned boxes.

Meshes are the carriers for discretized marginals: every box of the domain
is covered by a structured grid of cells of side ``2**-level``, each square
cell split into two triangles along its lower-left to upper-right diagonal.
Nodes are enumerated lexicographically by (box, y, x), so refinement by one
level keeps every coarse node at an even multi-index of the fine grid and
piecewise-linear prolongation is a stencil operation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# relative tolerance for "box side is an integer multiple of the cell size"
GEOM_TOL = 1e-9


class MeshConstructionError(ValueError):
    pass


@dataclass(frozen=True)
class Domain:
    """Union of pairwise-disjoint axis-aligned boxes in 1 or 2 dimensions.

    A box is a pair (lower, upper) of coordinate tuples.  Boxes may touch
    along faces but may not share interior points; the mesh never merges
    nodes across boxes.
    """

    dim: int
    boxes: tuple[tuple[tuple[float, ...], tuple[float, ...]], ...]

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise MeshConstructionError(f"dimension must be 1 or 2, got {self.dim}")
        if not self.boxes:
            raise MeshConstructionError("domain needs at least one box")
        boxes = tuple(
            (tuple(float(c) for c in lo), tuple(float(c) for c in up))
            for lo, up in self.boxes
        )
        object.__setattr__(self, "boxes", boxes)
        for lo, up in boxes:
            if len(lo) != self.dim or len(up) != self.dim:
                raise MeshConstructionError("box corner dimension mismatch")
            if any(u <= l for l, u in zip(lo, up)):
                raise MeshConstructionError(f"degenerate box {lo} .. {up}")
        for a in range(len(boxes)):
            for b in range(a + 1, len(boxes)):
                if _interiors_overlap(boxes[a], boxes[b]):
                    raise MeshConstructionError("boxes overlap in their interior")

    @property
    def measure(self) -> float:
        """Total volume (length in 1D, area in 2D) of the domain."""
        total = 0.0
        for lo, up in self.boxes:
            vol = 1.0
            for l, u in zip(lo, up):
                vol *= u - l
            total += vol
        return total


def _interiors_overlap(box_a, box_b) -> bool:
    (lo_a, up_a), (lo_b, up_b) = box_a, box_b
    return all(
        min(ua, ub) - max(la, lb) > GEOM_TOL
        for la, ua, lb, ub in zip(lo_a, up_a, lo_b, up_b)
    )


def interval(a: float, b: float) -> Domain:
    return Domain(1, (((a,), (b,)),))


def rectangle(lower: tuple[float, float], upper: tuple[float, float]) -> Domain:
    return Domain(2, ((tuple(lower), tuple(upper)),))


@dataclass(frozen=True)
class Mesh:
    """Simplicial mesh of a Domain at a refinement level.

    nodes           (L, dim) coordinates, lexicographic by (box, y, x)
    elements        (E, dim+1) node indices per interval / triangle
    h               maximal element diameter
    hat_integrals   (L,) integral of each nodal hat function; these sum to
                    the domain volume and define the vertex quadrature rule
    box_offsets     first node index of each box
    box_shapes      per box, node counts per axis as (ny+1, nx+1) or (n+1,)
    """

    domain: Domain
    level: int
    nodes: np.ndarray
    elements: np.ndarray
    h: float
    hat_integrals: np.ndarray
    box_offsets: tuple[int, ...]
    box_shapes: tuple[tuple[int, ...], ...]

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)


def _cells_along(side: float, cell: float) -> int:
    n = int(round(side / cell))
    if n < 1 or abs(n * cell - side) > GEOM_TOL * max(1.0, abs(side)):
        raise MeshConstructionError(
            f"box side {side} is not a positive integer multiple of the "
            f"cell size {cell}"
        )
    return n


def build_mesh(domain: Domain, level: int) -> Mesh:
    """Mesh the domain with cells of side ``2**-level``.

    Every box side must be an integer multiple of the cell size, otherwise a
    MeshConstructionError is raised.
    """
    if level < 0:
        raise ValueError("level must be nonnegative")
    s = 0.5**level
    node_chunks = []
    elem_chunks = []
    offsets = []
    shapes = []
    offset = 0
    for lo, up in domain.boxes:
        offsets.append(offset)
        if domain.dim == 1:
            n = _cells_along(up[0] - lo[0], s)
            xs = lo[0] + s * np.arange(n + 1)
            node_chunks.append(xs[:, None])
            idx = offset + np.arange(n)
            elem_chunks.append(np.column_stack([idx, idx + 1]))
            shapes.append((n + 1,))
            offset += n + 1
        else:
            nx = _cells_along(up[0] - lo[0], s)
            ny = _cells_along(up[1] - lo[1], s)
            xs = lo[0] + s * np.arange(nx + 1)
            ys = lo[1] + s * np.arange(ny + 1)
            gx, gy = np.meshgrid(xs, ys)  # row-major: y outer, x inner
            node_chunks.append(np.column_stack([gx.ravel(), gy.ravel()]))
            # lower-left corner index of every cell
            iy, ix = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
            ll = offset + iy.ravel() * (nx + 1) + ix.ravel()
            lr = ll + 1
            ul = ll + (nx + 1)
            ur = ul + 1
            # split along the ll -> ur diagonal
            lower_tri = np.column_stack([ll, lr, ur])
            upper_tri = np.column_stack([ll, ur, ul])
            elem_chunks.append(
                np.concatenate([lower_tri[:, None, :], upper_tri[:, None, :]], axis=1).reshape(-1, 3)
            )
            shapes.append((ny + 1, nx + 1))
            offset += (ny + 1) * (nx + 1)
    nodes = np.concatenate(node_chunks, axis=0)
    elements = np.concatenate(elem_chunks, axis=0).astype(np.int64)

    hat = np.zeros(len(nodes))
    if domain.dim == 1:
        np.add.at(hat, elements.ravel(), s / 2.0)
        h = s
    else:
        np.add.at(hat, elements.ravel(), (s * s / 2.0) / 3.0)
        h = s * np.sqrt(2.0)

    for arr in (nodes, elements, hat):
        arr.setflags(write=False)
    return Mesh(
        domain=domain,
        level=level,
        nodes=nodes,
        elements=elements,
        h=float(h),
        hat_integrals=hat,
        box_offsets=tuple(offsets),
        box_shapes=tuple(shapes),
    )


def refine(mesh: Mesh) -> Mesh:
    """The mesh one level finer; nodes of ``mesh`` reappear unchanged."""
    return build_mesh(mesh.domain, mesh.level + 1)


def _check_nested(coarse: Mesh, fine: Mesh):
    if coarse.domain != fine.domain or fine.level != coarse.level + 1:
        raise ValueError(
            "meshes are not a nested coarse/fine pair of consecutive levels"
        )


def nested_indices(coarse: Mesh, fine: Mesh) -> np.ndarray:
    """Index array mapping each coarse node to its fine-mesh duplicate."""
    _check_nested(coarse, fine)
    out = []
    for b, shape in enumerate(coarse.box_shapes):
        off_f = fine.box_offsets[b]
        if coarse.domain.dim == 1:
            (n,) = shape
            out.append(off_f + 2 * np.arange(n))
        else:
            ny, nx = shape
            fine_nx = 2 * (nx - 1) + 1
            iy, ix = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
            out.append(off_f + (2 * iy) * fine_nx + 2 * ix)
    return np.concatenate([a.ravel() for a in out])


def prolongate(coarse: Mesh, fine: Mesh, values: np.ndarray) -> np.ndarray:
    """Nodal piecewise-linear interpolation from ``coarse`` onto ``fine``.

    Fine nodes on coarse edges receive endpoint averages; the fine node at a
    cell center lies on the split diagonal, so it receives the average of the
    diagonal endpoints.  Affine functions are reproduced exactly.
    """
    _check_nested(coarse, fine)
    values = np.asarray(values, dtype=float)
    if values.shape != (coarse.num_nodes,):
        raise ValueError("value vector does not match the coarse mesh")
    chunks = []
    for b, shape in enumerate(coarse.box_shapes):
        off = coarse.box_offsets[b]
        if coarse.domain.dim == 1:
            (n,) = shape
            cv = values[off : off + n]
            fv = np.empty(2 * n - 1)
            fv[0::2] = cv
            fv[1::2] = 0.5 * (cv[:-1] + cv[1:])
        else:
            ny, nx = shape
            cv = values[off : off + ny * nx].reshape(ny, nx)
            fv = np.empty((2 * ny - 1, 2 * nx - 1))
            fv[0::2, 0::2] = cv
            fv[0::2, 1::2] = 0.5 * (cv[:, :-1] + cv[:, 1:])
            fv[1::2, 0::2] = 0.5 * (cv[:-1, :] + cv[1:, :])
            # cell centers sit on the ll -> ur diagonal
            fv[1::2, 1::2] = 0.5 * (cv[:-1, :-1] + cv[1:, 1:])
        chunks.append(fv.ravel())
    return np.concatenate(chunks)


def evaluate_nodal(f, points: np.ndarray) -> np.ndarray:
    """Evaluate ``f`` on an (L, dim) coordinate array, expecting (L,) back."""
    vals = np.asarray(f(points), dtype=float)
    if vals.shape != (len(points),):
        raise ValueError(
            f"nodal function returned shape {vals.shape}, "
            f"expected ({len(points)},)"
        )
    return vals


def interpolate_nodal(mesh: Mesh, f) -> np.ndarray:
    """Vector of nodal values of ``f`` on the mesh."""
    return evaluate_nodal(f, mesh.nodes)


def dump_mesh(mesh: Mesh) -> str:
    """Plain-text dump: one ``node x [y]`` line per node, then one
    ``element i j [k]`` line per element."""
    lines = []
    for row in mesh.nodes:
        lines.append("node " + " ".join(f"{c:.17g}" for c in row))
    for row in mesh.elements:
        lines.append("element " + " ".join(str(int(i)) for i in row))
    return "\n".join(lines) + "\n"
