"""Joint ranges of divergence pairs over binary experiments.

Sampling the binary range on a grid, taking its convex hull, and certifying
the Hellinger comparison inequalities pointwise over the same grid.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .divergence import HELLINGER2, TV, DivergenceKind, divergence_values, primitive_kind
from .errors import DomainError

HULL_TOL = 1e-12


@dataclass(frozen=True)
class PlanarPointSet:
    """Points in the plane; ``params`` optionally records the (p, q) behind each point."""

    points: tuple[tuple[float, float], ...]
    params: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        pts = tuple((float(x), float(y)) for x, y in self.points)
        if any(not (math.isfinite(x) and math.isfinite(y)) for x, y in pts):
            raise DomainError("point coordinates must be finite")
        if self.params is not None and len(self.params) != len(pts):
            raise DomainError("params must align with points")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float).reshape(-1, 2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if self.params is not None:
            writer.writerow(["p", "q", "x", "y"])
            for (p, q), (x, y) in zip(self.params, self.points):
                writer.writerow([_g9(p), _g9(q), _g9(x), _g9(y)])
        else:
            writer.writerow(["x", "y"])
            for x, y in self.points:
                writer.writerow([_g9(x), _g9(y)])
        return buf.getvalue()


def _g9(x: float) -> str:
    return format(x, ".9g")


@dataclass(frozen=True)
class Hull2D:
    """Convex polygon with counterclockwise vertices, starting at the lexicographic minimum."""

    vertices: tuple[tuple[float, float], ...]

    def contains(self, point: tuple[float, float], tol: float = 1e-9) -> bool:
        x, y = point
        v = self.vertices
        if len(v) == 1:
            return math.hypot(x - v[0][0], y - v[0][1]) <= tol
        if len(v) == 2:
            return _segment_distance(point, v[0], v[1]) <= tol
        for (ax, ay), (bx, by) in zip(v, v[1:] + v[:1]):
            edge = math.hypot(bx - ax, by - ay)
            # signed distance to the left of the edge
            if _cross((ax, ay), (bx, by), (x, y)) / edge < -tol:
                return False
        return True

    def to_points(self) -> PlanarPointSet:
        return PlanarPointSet(self.vertices)


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _segment_distance(pt, a, b) -> float:
    ax, ay = a
    dx, dy = b[0] - ax, b[1] - ay
    length2 = dx * dx + dy * dy
    t = 0.0 if length2 == 0 else max(0.0, min(1.0, ((pt[0] - ax) * dx + (pt[1] - ay) * dy) / length2))
    return math.hypot(pt[0] - ax - t * dx, pt[1] - ay - t * dy)


def convex_hull(ps: PlanarPointSet, tol: float = HULL_TOL) -> Hull2D:
    """Andrew's monotone chain. Boundary points within ``tol`` of a hull edge are dropped."""
    if len(ps) == 0:
        raise DomainError("convex hull of an empty point set")
    pts = sorted(set(ps.points))
    if len(pts) <= 2:
        return Hull2D(tuple(pts))

    def chain(seq):
        out: list[tuple[float, float]] = []
        for pt in seq:
            # drop right turns, and left turns whose middle point is within tol
            # of the chord (a distance, so independent of the input's scale)
            while len(out) >= 2 and (
                _cross(out[-2], out[-1], pt) <= 0.0 or _segment_distance(out[-1], out[-2], pt) <= tol
            ):
                out.pop()
            out.append(pt)
        return out

    lower = chain(pts)
    upper = chain(reversed(pts))
    return Hull2D(tuple(lower[:-1] + upper[:-1]))


def _binary_grid(grid: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    if grid < 2:
        raise DomainError(f"grid must be at least 2, got {grid}")
    g = np.linspace(0.0, 1.0, grid)
    pp, qq = np.meshgrid(g, g, indexing="ij")
    pp, qq = pp.ravel(), qq.ravel()
    P = np.stack([pp, 1.0 - pp], axis=-1)
    Q = np.stack([qq, 1.0 - qq], axis=-1)
    return pp, qq, P, Q


def sample_j2(kind_x: DivergenceKind, kind_y: DivergenceKind, grid: int) -> PlanarPointSet:
    """Both divergences on every binary pair of a ``grid x grid`` lattice over [0, 1]^2.

    Points are ordered by p index, then q index. Pairs where either value is
    infinite are skipped.
    """
    pp, qq, P, Q = _binary_grid(grid)
    xs = divergence_values(kind_x, P, Q)
    ys = divergence_values(kind_y, P, Q)
    keep = np.isfinite(xs) & np.isfinite(ys)
    return PlanarPointSet(
        tuple(zip(xs[keep].tolist(), ys[keep].tolist())),
        tuple(zip(pp[keep].tolist(), qq[keep].tolist())),
    )


class Certificate(NamedTuple):
    max_violation: float
    argmax: tuple[float, float]

    def to_dict(self) -> dict:
        return {"max_violation": self.max_violation, "argmax": list(self.argmax)}


def hellinger_envelope(h2, scale: float = 1.0):
    """``scale * He * sqrt(1 - He^2 / 4)`` as a function of ``He^2``."""
    h2 = np.clip(np.asarray(h2, dtype=float), 0.0, 2.0)
    return scale * np.sqrt(h2) * np.sqrt(1.0 - h2 / 4.0)


def _certify(lhs: np.ndarray, rhs: np.ndarray, pp: np.ndarray, qq: np.ndarray) -> Certificate:
    viol = lhs - rhs
    i = int(np.argmax(viol))
    return Certificate(float(viol[i]), (float(pp[i]), float(qq[i])))


def certify_primitive_hellinger_bound(c: float, grid: int) -> Certificate:
    """Largest excess of the c-primitive over ``min(c,1-c) He sqrt(1 - He^2/4)`` on the grid."""
    if not (0.0 < c < 1.0):
        raise DomainError(f"c must lie in (0, 1), got {c}")
    pp, qq, P, Q = _binary_grid(grid)
    prim = divergence_values(primitive_kind(c), P, Q)
    bound = hellinger_envelope(divergence_values(HELLINGER2, P, Q), min(c, 1.0 - c))
    return _certify(prim, bound, pp, qq)


def certify_tv_hellinger_bound(grid: int, halved: bool = True) -> Certificate:
    """Largest excess of total variation over ``He sqrt(1 - He^2/4)`` on the grid.

    The inequality holds for the halved convention only; ``halved=False``
    checks the unhalved ``sum |p - q|`` and fails at maximal separation.
    """
    pp, qq, P, Q = _binary_grid(grid)
    tv = divergence_values(TV, P, Q)
    if halved:
        tv = 0.5 * tv
    bound = hellinger_envelope(divergence_values(HELLINGER2, P, Q))
    return _certify(tv, bound, pp, qq)


def parametric_boundary(c: float, samples: int) -> PlanarPointSet:
    """The curve ``(He^2, min(c,1-c) He sqrt(1 - He^2/4))`` for He^2 uniform on [0, 2]."""
    if samples < 2:
        raise DomainError(f"samples must be at least 2, got {samples}")
    if not (0.0 < c < 1.0):
        raise DomainError(f"c must lie in (0, 1), got {c}")
    xs = np.linspace(0.0, 2.0, samples)
    ys = hellinger_envelope(xs, min(c, 1.0 - c))
    return PlanarPointSet(tuple(zip(xs.tolist(), ys.tolist())))


@dataclass(frozen=True)
class JointRangeFigure:
    """Everything needed to redraw the Hellinger/primitive joint-range picture."""

    c: float
    samples: PlanarPointSet
    hull: Hull2D
    boundary: PlanarPointSet
    certificate: Certificate


def hellinger_primitive_range(c: float, grid: int, samples: int = 201) -> JointRangeFigure:
    j2 = sample_j2(HELLINGER2, primitive_kind(c), grid)
    return JointRangeFigure(
        c=c,
        samples=j2,
        hull=convex_hull(j2),
        boundary=parametric_boundary(c, samples),
        certificate=certify_primitive_hellinger_bound(c, grid),
    )


def points_below_curve(ps: PlanarPointSet, c: float) -> Sequence[float]:
    """Per-point excess of y over the boundary curve evaluated at the point's x."""
    arr = ps.array
    return (arr[:, 1] - hellinger_envelope(arr[:, 0], min(c, 1.0 - c))).tolist()
