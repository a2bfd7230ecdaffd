"""Exact combinatorial geometry of finite subsets of Z^d.

Shapes, rectangles, inner boundaries, Folner diagnostics, Minkowski sums,
separation tests, slab/cube window enumeration and eccentricity statistics.
All set cardinalities and ratios are exact (``fractions.Fraction``); floating
point appears only in reporting quantities (log-ratios) and in the coarse
bounding boxes used to enumerate slab candidates, never in a membership
decision.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Iterator, Sequence, Union

Point = tuple[int, ...]
Rational = Union[int, Fraction]


def as_point(coords: Iterable[int]) -> Point:
    return tuple(int(c) for c in coords)


def add(a: Point, b: Point) -> Point:
    return tuple(x + y for x, y in zip(a, b))


def sub(a: Point, b: Point) -> Point:
    return tuple(x - y for x, y in zip(a, b))


class Shape:
    """A finite subset of Z^d with a fixed ambient dimension.

    Immutable. Iteration runs in lexicographic order, so every enumeration
    derived from a shape is deterministic. Empty shapes are allowed (boundary
    operators produce them) but must carry an explicit dimension.
    """

    __slots__ = ("dim", "points")

    def __init__(self, points: Iterable[Iterable[int]], dim: int | None = None):
        pts = frozenset(as_point(p) for p in points)
        if dim is None:
            if not pts:
                raise ValueError("an empty shape needs an explicit dimension")
            dim = len(next(iter(pts)))
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        for p in pts:
            if len(p) != dim:
                raise ValueError(f"point {p} does not have dimension {dim}")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "points", pts)

    def __setattr__(self, *_):
        raise AttributeError("Shape is immutable")

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[Point]:
        return iter(sorted(self.points))

    def __contains__(self, p) -> bool:
        return tuple(p) in self.points

    def __eq__(self, other) -> bool:
        if isinstance(other, (Shape, Rectangle)):
            return self.dim == other.dim and self.points == point_set(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.dim, self.points))

    def __repr__(self) -> str:
        return f"Shape({sorted(self.points)!r})"

    def translate(self, v: Iterable[int]) -> "Shape":
        v = as_point(v)
        return Shape((add(p, v) for p in self.points), dim=self.dim)

    def to_json(self) -> list:
        return [list(p) for p in sorted(self.points)]

    @classmethod
    def from_json(cls, data, dim: int | None = None) -> "Shape":
        return cls(data, dim=dim)


class Rectangle:
    """Axis-aligned lattice box [lo, hi] = {v : lo <= v <= hi componentwise}.

    Side vector w = hi - lo; the number of lattice points along axis i is
    w_i + 1 (the "extent"), and |R| = prod(w_i + 1). Points are never
    materialized unless iterated.
    """

    __slots__ = ("lo", "hi", "dim")

    def __init__(self, lo: Iterable[int], hi: Iterable[int]):
        lo = as_point(lo)
        hi = as_point(hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("lo and hi must be nonempty and of equal length")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"rectangle requires lo <= hi, got {lo} > {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "dim", len(lo))

    def __setattr__(self, *_):
        raise AttributeError("Rectangle is immutable")

    @classmethod
    def from_extents(cls, extents: Iterable[int]) -> "Rectangle":
        ext = as_point(extents)
        if any(e < 1 for e in ext):
            raise ValueError(f"extents must be positive, got {ext}")
        return cls((0,) * len(ext), tuple(e - 1 for e in ext))

    @property
    def sides(self) -> Point:
        return sub(self.hi, self.lo)

    @property
    def extents(self) -> Point:
        return tuple(w + 1 for w in self.sides)

    @property
    def short_side(self) -> int:
        return min(self.sides)

    @property
    def long_side(self) -> int:
        return max(self.sides)

    @property
    def short_extent(self) -> int:
        return min(self.extents)

    @property
    def long_extent(self) -> int:
        return max(self.extents)

    def __len__(self) -> int:
        return math.prod(self.extents)

    def __iter__(self) -> Iterator[Point]:
        return product(*(range(a, b + 1) for a, b in zip(self.lo, self.hi)))

    def __contains__(self, p) -> bool:
        p = tuple(p)
        return len(p) == self.dim and all(
            a <= x <= b for x, a, b in zip(p, self.lo, self.hi)
        )

    def __eq__(self, other) -> bool:
        if isinstance(other, Rectangle):
            return self.lo == other.lo and self.hi == other.hi
        if isinstance(other, Shape):
            return other == self.to_shape()
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.lo, self.hi))

    def __repr__(self) -> str:
        return f"Rectangle({self.lo!r}, {self.hi!r})"

    def translate(self, v: Iterable[int]) -> "Rectangle":
        v = as_point(v)
        return Rectangle(add(self.lo, v), add(self.hi, v))

    def contains_rect(self, other: "Rectangle") -> bool:
        return all(a <= c for a, c in zip(self.lo, other.lo)) and all(
            c <= b for b, c in zip(self.hi, other.hi)
        )

    def to_shape(self) -> Shape:
        return Shape(iter(self), dim=self.dim)

    def to_json(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}

    @classmethod
    def from_json(cls, data: dict) -> "Rectangle":
        return cls(data["lo"], data["hi"])


ShapeLike = Union[Shape, Rectangle]


def point_set(shape: ShapeLike) -> frozenset:
    if isinstance(shape, Shape):
        return shape.points
    return frozenset(shape)


def _check_same_dim(*shapes: ShapeLike) -> int:
    dims = {s.dim for s in shapes}
    if len(dims) != 1:
        raise ValueError(f"dimension mismatch: {sorted(dims)}")
    return dims.pop()


def inner_boundary(R: ShapeLike, S: ShapeLike) -> Shape:
    """Inner S-boundary of R.

    Union of R ∩ (S+v) over all v ∈ R whose translated window S+v is not
    contained in R. For componentwise-nonnegative S and rectangular R this
    is exactly the set of v whose own window leaves R.
    """
    d = _check_same_dim(R, S)
    S_pts = sorted(point_set(S))
    if not S_pts:
        raise ValueError("S must be nonempty")
    out: set[Point] = set()
    if isinstance(R, Rectangle):
        smin = tuple(min(s[i] for s in S_pts) for i in range(d))
        smax = tuple(max(s[i] for s in S_pts) for i in range(d))
        lo, hi = R.lo, R.hi
        for v in R:
            if any(v[i] + smin[i] < lo[i] or v[i] + smax[i] > hi[i] for i in range(d)):
                out.update(w for s in S_pts if (w := add(v, s)) in R)
    else:
        for v in R:
            window = [add(v, s) for s in S_pts]
            if any(w not in R for w in window):
                out.update(w for w in window if w in R)
    return Shape(out, dim=d)


def folner_ratio(R: ShapeLike, n: Iterable[int]) -> Fraction:
    """|R △ (R+n)| / |R|, exact."""
    n = as_point(n)
    if len(n) != R.dim:
        raise ValueError(f"vector {n} does not match dimension {R.dim}")
    if isinstance(R, Rectangle):
        inter = 1
        for w, ni in zip(R.sides, n):
            keep = w + 1 - abs(ni)
            if keep <= 0:
                inter = 0
                break
            inter *= keep
        sym = 2 * (len(R) - inter)
    else:
        pts = R.points
        shifted = {add(p, n) for p in pts}
        sym = len(pts ^ shifted)
    return Fraction(sym, len(R))


def boundary_ratio(R: ShapeLike, S: ShapeLike) -> Fraction:
    """|∂_S(R)| / |R|, exact."""
    return Fraction(len(inner_boundary(R, S)), len(R))


def boundary_containment_holds(R: ShapeLike, S: ShapeLike) -> bool:
    """Check ∂_S(R) ⊆ ⋃_{n ∈ S−S} R △ (R+n), exactly.

    Test helper for the equivalence of the two Folner conditions.
    """
    _check_same_dim(R, S)
    bound = inner_boundary(R, S).points
    if not bound:
        return True
    R_pts = point_set(R)
    diffs = {sub(a, b) for a in point_set(S) for b in point_set(S)}
    rhs: set[Point] = set()
    for n in diffs:
        shifted = {add(p, n) for p in R_pts}
        rhs |= R_pts ^ shifted
    return bound <= rhs


def minkowski_sum(R: ShapeLike, J: ShapeLike) -> Shape:
    """R + J = {r + j}, as a shape."""
    d = _check_same_dim(R, J)
    return Shape((add(r, j) for r in R for j in J), dim=d)


def is_separated(R: ShapeLike, J: ShapeLike) -> bool:
    """True iff the translates {R+v : v ∈ J} are pairwise disjoint.

    Decided via the difference set: R+v1 meets R+v2 iff v2-v1 ∈ R-R.
    """
    _check_same_dim(R, J)
    J_pts = sorted(point_set(J))
    if isinstance(R, Rectangle):
        w = R.sides
        for i, v1 in enumerate(J_pts):
            for v2 in J_pts[i + 1 :]:
                if all(abs(a - b) <= wi for a, b, wi in zip(v1, v2, w)):
                    return False
        return True
    R_pts = point_set(R)
    diffs = {sub(a, b) for a in R_pts for b in R_pts}
    for i, v1 in enumerate(J_pts):
        for v2 in J_pts[i + 1 :]:
            if sub(v2, v1) in diffs:
                return False
    return True


def _rational_rows(vectors: Sequence[Sequence[int]]) -> list[list[Fraction]]:
    return [[Fraction(int(c)) for c in v] for v in vectors]


def _nullspace(rows: list[list[Fraction]], d: int) -> list[list[Fraction]]:
    """Basis of the rational null space of the row span (RREF with free columns)."""
    mat = [row[:] for row in rows]
    pivots: list[int] = []
    r = 0
    for c in range(d):
        pivot = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if pivot is None:
            continue
        mat[r], mat[pivot] = mat[pivot], mat[r]
        inv = mat[r][c]
        mat[r] = [x / inv for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [x - f * y for x, y in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
    basis = []
    free = [c for c in range(d) if c not in pivots]
    for fc in free:
        vec = [Fraction(0)] * d
        vec[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            vec[pc] = -mat[i][fc]
        basis.append(vec)
    return basis


def _gram_schmidt(vectors: list[list[Fraction]]) -> list[tuple[Point, int]]:
    """Orthogonalize over Q, scale each vector to a primitive integer vector.

    Returns (w_i, |w_i|^2) pairs. Scaling does not change the direction, so
    coordinate tests through w_i are unaffected. Raises on linear dependence.
    """
    ortho: list[list[Fraction]] = []
    out: list[tuple[Point, int]] = []
    for v in vectors:
        w = list(v)
        for u in ortho:
            nu = sum(x * x for x in u)
            coef = sum(a * b for a, b in zip(w, u)) / nu
            w = [a - coef * b for a, b in zip(w, u)]
        if all(x == 0 for x in w):
            raise ValueError("spanning vectors are linearly dependent")
        ortho.append(w)
        denom_lcm = math.lcm(*(x.denominator for x in w))
        ints = [int(x * denom_lcm) for x in w]
        g = math.gcd(*(abs(x) for x in ints))
        ints = [x // g for x in ints]
        out.append((tuple(ints), sum(x * x for x in ints)))
    return out


class DirectionSubspace:
    """Integer-spanned n-dimensional subspace V of R^d, with exact slab data.

    The window cube in V is anchored at 0 along the Gram-Schmidt
    orthonormalization u_1..u_n of the spanning vectors (taken in the order
    given); the transverse cube in the orthogonal complement is centered at 0.
    Lattice membership in S(V,t,m) is decided exactly: the coordinate of z
    along u_i is <z,w_i>/|w_i|, so the closed interval conditions become
    rational comparisons of squares, with no irrational normalization.
    """

    def __init__(self, vectors: Sequence[Sequence[int]]):
        vecs = [as_point(v) for v in vectors]
        if not vecs:
            raise ValueError("at least one spanning vector required")
        d = len(vecs[0])
        if any(len(v) != d for v in vecs):
            raise ValueError("spanning vectors must share a dimension")
        n = len(vecs)
        if not 1 <= n <= d:
            raise ValueError(f"need 1 <= n <= d, got n={n}, d={d}")
        rows = _rational_rows(vecs)
        self._along = _gram_schmidt(rows)
        if n < d:
            perp = _nullspace(rows, d)
            self._perp = _gram_schmidt(perp)
        else:
            self._perp = []
        self.vectors = tuple(vecs)
        self.dim = d
        self.dim_n = n

    def __repr__(self) -> str:
        return f"DirectionSubspace({list(self.vectors)!r})"

    def slab_contains(self, z: Iterable[int], t: Rational, m: Rational) -> bool:
        """Exact membership of a lattice point in S(V,t,m) (closed boxes)."""
        z = as_point(z)
        t2 = Fraction(t) ** 2
        m2 = Fraction(m) ** 2
        for w, q in self._along:
            a = sum(x * y for x, y in zip(z, w))
            if a < 0 or a * a > t2 * q:
                return False
        for w, q in self._perp:
            b = sum(x * y for x, y in zip(z, w))
            if 4 * b * b > m2 * q:
                return False
        return True

    def float_coordinates(self, z: Iterable[int]) -> tuple[list[float], list[float]]:
        """Floating-point (along, perpendicular) coordinates; reporting only."""
        z = as_point(z)
        along = [
            sum(x * y for x, y in zip(z, w)) / math.sqrt(q) for w, q in self._along
        ]
        perp = [sum(x * y for x, y in zip(z, w)) / math.sqrt(q) for w, q in self._perp]
        return along, perp


def slab_points(V: DirectionSubspace, t: Rational, m: Rational) -> Shape:
    """Lattice points of the slab S(V,t,m) = tQ + mQ'.

    Q is the unit cube in V anchored at 0 (coordinates in [0,t] along each
    orthonormal axis), Q' the unit cube in the complement centered at 0
    (coordinates in [-m/2, m/2]). Closed inequalities, exact arithmetic.
    Requires dim V < d; the full-dimensional window is cube_points.
    """
    if V.dim_n >= V.dim:
        raise ValueError("slab needs n < d; use cube_points for the n = d window")
    t = Fraction(t)
    m = Fraction(m)
    if t <= 0 or m <= 0:
        raise ValueError("t and m must be positive")
    tf, mf = float(t), float(m)
    # Coarse per-axis bound: |z_j| <= t*sum_i|u_i[j]| + (m/2)*sum_i|u'_i[j]|.
    # Only used to cut the candidate box; membership itself is exact.
    bounds = []
    for j in range(V.dim):
        b = sum(tf * abs(w[j]) / math.sqrt(q) for w, q in V._along)
        b += sum(0.5 * mf * abs(w[j]) / math.sqrt(q) for w, q in V._perp)
        bounds.append(int(math.ceil(b)) + 1)
    pts = [
        z
        for z in product(*(range(-b, b + 1) for b in bounds))
        if V.slab_contains(z, t, m)
    ]
    return Shape(pts, dim=V.dim)


def cube_points(t: Rational, d: int) -> Rectangle:
    """Lattice points of the cube [0,t]^d, i.e. the box [0, floor(t)]^d."""
    t = Fraction(t)
    if t <= 0:
        raise ValueError("t must be positive")
    top = t.numerator // t.denominator
    return Rectangle((0,) * d, (top,) * d)


@dataclass(frozen=True)
class EccentricityStage:
    stage: int
    short_side: int
    long_side: int
    ratio: float


@dataclass(frozen=True)
class EccentricityReport:
    """Per-stage log(long)/short side ratios with the tail maximum.

    The max over computed stages is a finite surrogate for the eccentricity
    limsup, reported as such; the verdict compares it against the threshold.
    Sides are the raw side vector components (hi - lo).
    """

    stages: tuple[EccentricityStage, ...]
    max_ratio: float
    threshold: float
    subexponential: bool

    def to_csv(self, fileobj) -> None:
        writer = csv.writer(fileobj)
        writer.writerow(["stage", "s", "ell", "ratio"])
        for st in self.stages:
            writer.writerow([st.stage, st.short_side, st.long_side, repr(st.ratio)])


def eccentricity_stats(
    rects: Sequence[Rectangle], threshold: float
) -> EccentricityReport:
    """Eccentricity ratios log(l_j)/s_j for a rectangle sequence.

    Degenerate stages (s_j = 0) yield an infinite ratio and force a negative
    verdict. Logs are double precision; they feed reporting only, never an
    exact inequality.
    """
    if not rects:
        raise ValueError("need at least one rectangle")
    stages = []
    running = 0.0
    for i, r in enumerate(rects, start=1):
        s, ell = r.short_side, r.long_side
        if s == 0:
            ratio = math.inf
        else:
            ratio = math.log(ell) / s if ell > 0 else 0.0
        running = max(running, ratio)
        stages.append(EccentricityStage(i, s, ell, ratio))
    return EccentricityReport(
        stages=tuple(stages),
        max_ratio=running,
        threshold=float(threshold),
        subexponential=running <= threshold,
    )
