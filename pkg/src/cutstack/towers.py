"""Labeled Rokhlin towers inside a level-K model.

A tower of shape R is a base cell set whose R-translates are pairwise
disjoint inside the top rectangle; the complement is the error atom. The
module provides the exact partition metric, majority sets, stacking
restrictions, the derived-tower operator and the finite refinement iteration
that turns metrically close towers into a nested grid with explicit Cauchy
tail bounds. Every measure is a Fraction over |R_K|.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .construction import BudgetError, LevelKModel
from .lattice import (
    Point,
    Rectangle,
    Shape,
    ShapeLike,
    add,
    as_point,
    inner_boundary,
    is_separated,
    minkowski_sum,
    point_set,
)

TOWER_SNAPSHOT_BUDGET = 20_000


class TowerError(ValueError):
    """A tower invariant or precondition failed."""


class RefinementError(TowerError):
    """A refinement step failed; carries the (k, ell) grid location."""

    def __init__(self, k: int, ell: int, message: str):
        self.location = (k, ell)
        super().__init__(f"refinement step (k={k}, ell={ell}): {message}")


class LabeledTower:
    """Tower of a given shape with an explicit base cell set.

    Levels are base + v for v in the shape; they must be pairwise disjoint
    and contained in the model's top rectangle. The error atom is the
    uncovered remainder. Immutable.
    """

    def __init__(self, model: LevelKModel, shape: ShapeLike, base: Iterable[Point]):
        base_pts = frozenset(as_point(c) for c in base)
        if not base_pts:
            raise TowerError("tower base must be nonempty")
        shape_pts = point_set(shape)
        if not shape_pts:
            raise TowerError("tower shape must be nonempty")
        top = model.top
        covered: set[Point] = set()
        for v in sorted(shape_pts):
            for c in base_pts:
                cc = add(c, v)
                if cc not in top:
                    raise TowerError(f"level cell {cc} (base {c} + {v}) leaves R_K")
                if cc in covered:
                    raise TowerError(f"levels overlap at cell {cc}")
                covered.add(cc)
        self.model = model
        self.shape = shape
        self.base = base_pts
        self.covered = frozenset(covered)

    @property
    def base_mass(self) -> Fraction:
        return Fraction(len(self.base), self.model.total_cells)

    @property
    def error_mass(self) -> Fraction:
        return 1 - Fraction(len(self.covered), self.model.total_cells)

    def level(self, v: Iterable[int]) -> frozenset:
        v = as_point(v)
        if v not in self.shape:
            raise KeyError(f"{v} is not a level label")
        return frozenset(add(c, v) for c in self.base)

    def label_lookup(self) -> dict[Point, int]:
        """cell -> level index (shape order); uncovered cells are absent."""
        out: dict[Point, int] = {}
        for i, v in enumerate(sorted(point_set(self.shape))):
            for c in self.base:
                out[add(c, v)] = i
        return out

    def __repr__(self) -> str:
        return (
            f"LabeledTower(|R|={len(self.shape)}, |base|={len(self.base)}, "
            f"err={self.error_mass})"
        )


def tower_distance(P: LabeledTower, Q: LabeledTower) -> Fraction:
    """Partition metric sum_a mu(P_a triangle Q_a) over labels incl. error.

    Same-shape towers only. Translation invariance collapses the level terms
    to |R| * mu(A triangle A'); the error term equals the symmetric
    difference of the covered sets.
    """
    if P.model is not Q.model:
        raise TowerError("towers live in different models")
    if point_set(P.shape) != point_set(Q.shape):
        raise TowerError("tower shapes (label alphabets) differ")
    n = P.model.total_cells
    base_sym = len(P.base ^ Q.base)
    err_sym = len(P.covered ^ Q.covered)
    return Fraction(len(point_set(P.shape)) * base_sym + err_sym, n)


def majority_set(cells: Iterable[Point], P: LabeledTower) -> frozenset:
    """Union of the levels of P that ``cells`` covers by strictly more than half.

    Ties (exactly half) are excluded. Returns a cell set; the level labels are
    available via majority_labels.
    """
    return _majority(cells, P)[0]


def majority_labels(cells: Iterable[Point], P: LabeledTower) -> frozenset:
    return _majority(cells, P)[1]


def _majority(cells: Iterable[Point], P: LabeledTower):
    cell_set = set(as_point(c) for c in cells)
    half = len(P.base)
    out_cells: set[Point] = set()
    out_labels: set[Point] = set()
    for v in sorted(point_set(P.shape)):
        level = [add(c, v) for c in P.base]
        hits = sum(1 for c in level if c in cell_set)
        if 2 * hits > half:
            out_cells.update(level)
            out_labels.add(v)
    return frozenset(out_cells), frozenset(out_labels)


def refines(finer: LabeledTower, coarser: LabeledTower) -> bool:
    """True iff every atom of ``finer`` lies inside a single atom of ``coarser``.

    This is the partition order coarser <= finer. Walks the error atoms too,
    so it enumerates the top rectangle once.
    """
    if finer.model is not coarser.model:
        raise TowerError("towers live in different models")
    coarse = coarser.label_lookup()

    def coarse_label(c):
        return coarse.get(c, -1)

    for v in sorted(point_set(finer.shape)):
        labels = {coarse_label(add(c, v)) for c in finer.base}
        if len(labels) > 1:
            return False
    err_labels = set()
    for c in finer.model.top:
        if c not in finer.covered:
            err_labels.add(coarse_label(c))
            if len(err_labels) > 1:
                return False
    return True


def restrict_tower(Q: LabeledTower, R: ShapeLike, J: ShapeLike) -> LabeledTower:
    """Tower of shape R with base union of the J-translates of Q's base.

    J must be an R stacking set for Q's shape (R-separated, R + J inside the
    shape). The result refines Q by construction; asserted, not assumed.
    """
    S_pts = point_set(Q.shape)
    if not is_separated(R, J):
        raise TowerError("stacking set is not R-separated")
    if not set(minkowski_sum(R, J).points) <= S_pts:
        raise TowerError("R + J is not contained in the source shape")
    new_base = frozenset(add(c, v) for v in point_set(J) for c in Q.base)
    out = LabeledTower(Q.model, R, new_base)
    if not refines(Q, out):
        raise TowerError("restriction failed to refine the source tower")
    return out


@dataclass
class DerivedTower:
    """Result of the derived-tower operator.

    ``tower`` is None exactly when every majority level sits in the inner
    R-boundary of S, leaving an empty stacking set; this is surfaced
    explicitly rather than guessed around.
    """

    tower: LabeledTower | None
    stacking: frozenset
    majority_cells: frozenset
    majority_labels: frozenset


def derived_tower(
    P: LabeledTower, Q: LabeledTower, require_refinement: bool = True
) -> DerivedTower:
    """Best R-shaped tower inside Q approximating P.

    Takes the levels of Q majority-covered by P's base, drops those in the
    inner R-boundary of Q's shape, and stacks the rest. The stacking set is
    R-separated as a consequence of the strict majority rule (two distinct
    majority pieces of one level would exceed its mass); this is checked.

    require_refinement enforces the textbook precondition P <= Q; the
    refinement iteration waives it, since there the towers are only
    metrically close.
    """
    if P.model is not Q.model:
        raise TowerError("towers live in different models")
    R, S = P.shape, Q.shape
    origin = (0,) * P.model.dim
    if origin not in R:
        raise TowerError("0 must lie in the target shape R")
    if not point_set(R) <= point_set(S):
        raise TowerError("need R a subset of S")
    if require_refinement and not refines(Q, P):
        raise TowerError("P is not coarser than Q (P <= Q fails)")
    maj_cells, maj_labels = _majority(P.base, Q)
    if not maj_cells:
        raise TowerError("majority set is empty")
    boundary = inner_boundary(S, R).points
    J = frozenset(v for v in maj_labels if v not in boundary)
    if not J:
        return DerivedTower(None, J, maj_cells, maj_labels)
    if not is_separated(R, Shape(J, dim=P.model.dim)):
        raise TowerError("derived stacking set is not R-separated")
    tower = restrict_tower(Q, R, Shape(J, dim=P.model.dim))
    return DerivedTower(tower, J, maj_cells, maj_labels)


@dataclass
class NeedgeomReport:
    """Both sides of the derived-tower approximation bound, exact."""

    lhs: Fraction | None
    rhs: Fraction
    holds: bool
    empty: bool


def needgeom_check(
    P: LabeledTower, Q: LabeledTower, require_refinement: bool = True
) -> NeedgeomReport:
    """d(P(Q), P) against |R| mu(A(Q) triangle A) + |d_R(S)| mu(B) + |R| mu(E_Q)."""
    res = derived_tower(P, Q, require_refinement=require_refinement)
    R, S = P.shape, Q.shape
    n = P.model.total_cells
    boundary = inner_boundary(S, R)
    rhs = (
        Fraction(len(point_set(R)) * len(res.majority_cells ^ P.base), n)
        + Fraction(len(boundary) * len(Q.base), n)
        + len(point_set(R)) * Q.error_mass
    )
    if res.tower is None:
        return NeedgeomReport(lhs=None, rhs=rhs, holds=True, empty=True)
    lhs = tower_distance(res.tower, P)
    return NeedgeomReport(lhs=lhs, rhs=rhs, holds=lhs <= rhs, empty=False)


@dataclass
class RefinementTrace:
    """Grid of towers P_{k,ell} with stacking sets, distances and tail bounds."""

    towers: dict[tuple[int, int], LabeledTower]
    stackings: dict[int, frozenset]
    deltas: list[Fraction]
    one_step: dict[tuple[int, int], Fraction]
    cauchy_rows: list[tuple[int, int, int, Fraction, Fraction]]

    def delta(self, idx: int) -> Fraction:
        return self.deltas[idx - 1]

    def to_csv(self, fileobj, comment: str | None = None) -> None:
        if comment:
            fileobj.write(f"# {comment}\n")
        writer = csv.writer(fileobj)
        writer.writerow(["k", "ell", "distance_to_next", "cauchy_bound"])
        for (k, ell), dist in sorted(self.one_step.items()):
            writer.writerow([k, ell, str(dist), str(self.delta(k + ell))])


def refine_sequence(
    towers: Sequence[LabeledTower],
    deltas: Sequence[Fraction | float | int],
    depth: int,
) -> RefinementTrace:
    """Finite refinement grid P_{k,ell} from a tower sequence.

    P_{k,0} are the inputs; P_{k,1} = P_k(P_{k+1}) fixes the stacking set
    I_k, and deeper columns restack the refreshed next tower through the same
    I_k: P_{k,ell} = (P_{k+1,ell-1})_{I_k}. Preconditions checked per step:
    d(P_k(P_{k+1}), P_k) < delta_k. Asserts, for every in-grid (k, ell, m),
    the Cauchy bound d(P_{k,ell}, P_{k,ell+m}) <= sum_{i<m} delta_{k+ell+i}
    and the refinement P_{k,ell} <= P_{k+1,ell-1}. Failures carry (k, ell).
    """
    n = len(towers)
    if n < 2:
        raise ValueError("need at least two towers")
    deltas = [Fraction(d) if not isinstance(d, float) else Fraction(d) for d in deltas]
    if len(deltas) < n - 1:
        raise ValueError("need a delta for every consecutive pair")
    origin = (0,) * towers[0].model.dim
    for i in range(n - 1):
        r, s = towers[i].shape, towers[i + 1].shape
        if origin not in r:
            raise RefinementError(i + 1, 0, "0 not in the tower shape")
        if not point_set(r) <= point_set(s):
            raise RefinementError(i + 1, 0, "shapes are not nested")
    grid: dict[tuple[int, int], LabeledTower] = {
        (k, 0): towers[k - 1] for k in range(1, n + 1)
    }
    stackings: dict[int, frozenset] = {}
    for k in range(1, n):
        try:
            res = derived_tower(grid[(k, 0)], grid[(k + 1, 0)], require_refinement=False)
        except TowerError as exc:
            raise RefinementError(k, 1, str(exc)) from exc
        if res.tower is None:
            raise RefinementError(k, 1, "empty stacking set after boundary removal")
        stackings[k] = res.stacking
        grid[(k, 1)] = res.tower
        d = tower_distance(res.tower, grid[(k, 0)])
        if d >= deltas[k - 1]:
            raise RefinementError(
                k, 1, f"d(P_k(P_k+1), P_k) = {d} >= delta_{k} = {deltas[k-1]}"
            )
    for ell in range(2, depth + 1):
        for k in range(1, n):
            src = grid.get((k + 1, ell - 1))
            if src is None:
                continue
            J = Shape(stackings[k], dim=towers[0].model.dim)
            try:
                grid[(k, ell)] = restrict_tower(src, grid[(k, 0)].shape, J)
            except TowerError as exc:
                raise RefinementError(k, ell, str(exc)) from exc
    one_step: dict[tuple[int, int], Fraction] = {}
    for (k, ell), tower in sorted(grid.items()):
        nxt = grid.get((k, ell + 1))
        if nxt is not None:
            d = tower_distance(tower, nxt)
            one_step[(k, ell)] = d
            if d > deltas[k + ell - 1]:
                raise RefinementError(
                    k, ell, f"one-step distance {d} exceeds delta_{k+ell}"
                )
    cauchy_rows = []
    for (k, ell) in sorted(one_step):
        m = 1
        while (k, ell + m) in grid:
            d = tower_distance(grid[(k, ell)], grid[(k, ell + m)])
            bound = sum(
                (deltas[k + ell + i - 1] for i in range(m)), Fraction(0)
            )
            cauchy_rows.append((k, ell, m, d, bound))
            if d > bound:
                raise RefinementError(
                    k, ell, f"Cauchy bound violated at m={m}: {d} > {bound}"
                )
            m += 1
    return RefinementTrace(
        towers=grid,
        stackings=stackings,
        deltas=list(deltas),
        one_step=one_step,
        cauchy_rows=cauchy_rows,
    )


def model_tower(model: LevelKModel, j: int) -> LabeledTower:
    """Tower j of the model itself: base = the copy translations."""
    return LabeledTower(model, model.rect(j), model.placements(j))


def perturb_tower(
    tower: LabeledTower, remove_fraction: float, rng: random.Random
) -> LabeledTower:
    """Remove a random fraction of base cells (validity is preserved)."""
    if not 0 <= remove_fraction < 1:
        raise ValueError("remove_fraction must lie in [0, 1)")
    base = sorted(tower.base)
    n_remove = min(int(len(base) * remove_fraction), len(base) - 1)
    if n_remove <= 0:
        return tower
    removed = set(rng.sample(base, n_remove))
    return LabeledTower(tower.model, tower.shape, [c for c in base if c not in removed])


def tower_to_json(tower: LabeledTower, cell_budget: int = TOWER_SNAPSHOT_BUDGET) -> dict:
    """Debug snapshot: shape and base as sorted cell lists, budget-gated."""
    cost = len(tower.base) + len(point_set(tower.shape))
    if cost > cell_budget:
        raise BudgetError(f"snapshot of {cost} cells exceeds budget {cell_budget}")
    return {
        "shape": [list(p) for p in sorted(point_set(tower.shape))],
        "base": [list(p) for p in sorted(tower.base)],
    }


def tower_from_json(model: LevelKModel, data: dict) -> LabeledTower:
    return LabeledTower(
        model, Shape(data["shape"], dim=model.dim), [tuple(p) for p in data["base"]]
    )
