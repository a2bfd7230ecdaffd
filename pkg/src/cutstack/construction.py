"""Cutting-and-stacking schedules and their exact finite realizations.

A schedule is a sequence of (rectangle, stacking set) stages; realizing it at
level K tiles the top rectangle R_K hierarchically with copies of each lower
rectangle. Declaring R_K to be the whole space makes every measure an exact
rational: each cell carries mass 1/|R_K|. Label maps and window-name
distributions are computed on numpy grids (the hot loop), but all masses are
``fractions.Fraction`` built from integer counts.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .lattice import (
    Point,
    Rectangle,
    Shape,
    ShapeLike,
    add,
    as_point,
    eccentricity_stats,
    folner_ratio,
    is_separated,
    point_set,
)

DEFAULT_CELL_BUDGET = 2_500_000
BRUTE_FORCE_BUDGET = 100_000

#: Grid code for the error label (cells not covered by any copy of the tower).
ERROR_CODE = -1


class ScheduleError(ValueError):
    """Raised when a schedule fails validation; carries the violation list."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(f"stage {v.stage}: {v.message}" for v in self.violations)
        super().__init__(f"invalid schedule: {lines}")


class BudgetError(RuntimeError):
    """Raised when an operation would enumerate more cells than allowed."""


@dataclass(frozen=True)
class Stage:
    """One cutting-and-stacking step: copies of ``rect`` placed at ``stacking``."""

    rect: Rectangle
    stacking: Shape


class ConstructionSchedule:
    """Stages (R_1,J_1),...,(R_{K-1},J_{K-1}) plus the final rectangle R_K."""

    def __init__(
        self,
        stages: Sequence[Stage],
        final_rect: Rectangle,
        schedule_id: str = "schedule",
    ):
        stages = tuple(stages)
        dims = {final_rect.dim} | {s.rect.dim for s in stages}
        dims |= {s.stacking.dim for s in stages}
        if len(dims) != 1:
            raise ValueError(f"mixed dimensions in schedule: {sorted(dims)}")
        self.stages = stages
        self.final_rect = final_rect
        self.dim = final_rect.dim
        self.schedule_id = schedule_id

    @property
    def num_levels(self) -> int:
        return len(self.stages) + 1

    def rect(self, j: int) -> Rectangle:
        """Rectangle R_j, 1-based; j = num_levels is the final rectangle."""
        if not 1 <= j <= self.num_levels:
            raise ValueError(f"level {j} out of range 1..{self.num_levels}")
        if j == self.num_levels:
            return self.final_rect
        return self.stages[j - 1].rect

    def stacking(self, j: int) -> Shape:
        """Stacking set J_j placing copies of R_j inside R_{j+1}, 1-based."""
        if not 1 <= j <= len(self.stages):
            raise ValueError(f"stage {j} out of range 1..{len(self.stages)}")
        return self.stages[j - 1].stacking

    def coverage(self, j: int) -> Fraction:
        """q_j = |J_j| |R_j| / |R_{j+1}|, exact."""
        return Fraction(
            len(self.stacking(j)) * len(self.rect(j)), len(self.rect(j + 1))
        )

    def __repr__(self) -> str:
        return (
            f"ConstructionSchedule(id={self.schedule_id!r}, dim={self.dim}, "
            f"levels={self.num_levels})"
        )


@dataclass(frozen=True)
class ScheduleViolation:
    stage: int
    code: str
    message: str


@dataclass
class ScheduleValidation:
    """Structured diagnostics from validate_schedule.

    Folner ratios and the eccentricity report are finite-stage trends; they
    are never a proof of the limit statements they sample.
    """

    valid: bool
    violations: list[ScheduleViolation]
    coverage: list[Fraction]
    error_mass: list[Fraction]
    folner: dict[int, list[Fraction]]
    eccentricity: object

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "violations": [
                {"stage": v.stage, "code": v.code, "message": v.message}
                for v in self.violations
            ],
            "coverage": [str(q) for q in self.coverage],
            "error_mass": [str(e) for e in self.error_mass],
            "folner": {
                str(axis): [str(r) for r in ratios]
                for axis, ratios in self.folner.items()
            },
            "eccentricity": {
                "max_ratio": self.eccentricity.max_ratio,
                "subexponential": self.eccentricity.subexponential,
            },
        }


def validate_schedule(
    schedule: ConstructionSchedule, eccentricity_threshold: float = 1.0
) -> ScheduleValidation:
    """Check every stage invariant and report schedule-level trends.

    Violations are returned, not raised: callers inspect (stage, code,
    message) triples. The error-mass trend is computed at the top level
    (j-th mass = uncovered fraction of R_K by copies of R_j).
    """
    violations: list[ScheduleViolation] = []
    origin = (0,) * schedule.dim
    for j in range(1, schedule.num_levels + 1):
        if origin not in schedule.rect(j):
            violations.append(
                ScheduleViolation(j, "origin", f"0 not in R_{j} = {schedule.rect(j)}")
            )
    for j in range(1, schedule.num_levels):
        R, J = schedule.rect(j), schedule.stacking(j)
        R_next = schedule.rect(j + 1)
        if len(J) == 0:
            violations.append(ScheduleViolation(j, "empty_stacking", "J is empty"))
            continue
        outside = [v for v in J if v not in R_next]
        if outside:
            violations.append(
                ScheduleViolation(
                    j, "stacking_outside", f"stacking points {outside} not in R_{j+1}"
                )
            )
        if not is_separated(R, J):
            violations.append(
                ScheduleViolation(
                    j, "not_separated", f"J_{j} is not R_{j}-separated"
                )
            )
        bad_fit = [
            v
            for v in J
            if not R_next.contains_rect(R.translate(v))
        ]
        if bad_fit:
            violations.append(
                ScheduleViolation(
                    j, "copy_outside", f"copies at {bad_fit} leave R_{j+1}"
                )
            )
    coverage = [schedule.coverage(j) for j in range(1, schedule.num_levels)]
    # Top-level error masses: mu(E_j) = 1 - prod_{i>=j} q_i, exact.
    error_mass = []
    for j in range(1, schedule.num_levels + 1):
        covered = Fraction(1)
        for i in range(j, schedule.num_levels):
            covered *= coverage[i - 1]
        error_mass.append(1 - covered)
    folner = {
        axis: [
            folner_ratio(
                schedule.rect(j),
                tuple(1 if a == axis else 0 for a in range(schedule.dim)),
            )
            for j in range(1, schedule.num_levels + 1)
        ]
        for axis in range(schedule.dim)
    }
    ecc = eccentricity_stats(
        [schedule.rect(j) for j in range(1, schedule.num_levels + 1)],
        eccentricity_threshold,
    )
    return ScheduleValidation(
        valid=not violations,
        violations=violations,
        coverage=coverage,
        error_mass=error_mass,
        folner=folner,
        eccentricity=ecc,
    )


class LevelKModel:
    """Exact finite realization of a schedule at normalization level K.

    Tower K is the whole space: every cell of R_K has measure 1/|R_K|.
    Placements of tower j compose the stacking sets J_j + J_{j+1} + ... and
    are materialized lazily; label grids (tower-k labels of every cell of an
    R_j box) are cached numpy arrays, since name computation is the hot loop.
    Immutable after construction; safe for concurrent reads.
    """

    def __init__(
        self,
        schedule: ConstructionSchedule,
        K: int,
        cell_budget: int = DEFAULT_CELL_BUDGET,
    ):
        if not 1 <= K <= schedule.num_levels:
            raise ValueError(f"K={K} out of range 1..{schedule.num_levels}")
        top = schedule.rect(K)
        if len(top) > cell_budget:
            raise BudgetError(
                f"|R_{K}| = {len(top)} exceeds the cell budget {cell_budget}"
            )
        self.schedule = schedule
        self.K = K
        self.dim = schedule.dim
        self.cell_budget = cell_budget
        self.top = top
        self.total_cells = len(top)
        self.cell_measure = Fraction(1, self.total_cells)
        self._placements: dict[int, tuple[Point, ...]] = {}
        self._grids: dict[tuple[int, int], np.ndarray] = {}

    def rect(self, j: int) -> Rectangle:
        if not 1 <= j <= self.K:
            raise ValueError(f"tower index {j} out of range 1..{self.K}")
        return self.schedule.rect(j)

    def placement_count(self, j: int) -> int:
        """|J_{j,K}|: number of copies of R_j in R_K."""
        self.rect(j)
        count = 1
        for i in range(j, self.K):
            count *= len(self.schedule.stacking(i))
        return count

    def error_mass(self, j: int) -> Fraction:
        """mu(E_j) = 1 - |J_{j,K}| |R_j| / |R_K|, exact."""
        return 1 - Fraction(
            self.placement_count(j) * len(self.rect(j)), self.total_cells
        )

    def level_mass(self, j: int) -> Fraction:
        """Measure of one level of tower j: |J_{j,K}| / |R_K|."""
        return Fraction(self.placement_count(j), self.total_cells)

    def placements(self, j: int) -> tuple[Point, ...]:
        """Translations p with p + R_j a copy of tower j inside R_K, sorted."""
        if j not in self._placements:
            self.rect(j)
            pts = {(0,) * self.dim}
            for i in range(self.K - 1, j - 1, -1):
                J = sorted(point_set(self.schedule.stacking(i)))
                pts = {add(p, v) for p in pts for v in J}
            placed = tuple(sorted(pts))
            if len(placed) != self.placement_count(j):
                raise ScheduleError(
                    [
                        ScheduleViolation(
                            j,
                            "placement_collision",
                            "composed stacking sets are not disjoint",
                        )
                    ]
                )
            self._placements[j] = placed
        return self._placements[j]

    def label_grid(self, k: int, j: int) -> np.ndarray:
        """Tower-k label codes over the R_j box (C-order linear index in R_k, -1 for error).

        Built by recursive block tiling: the label pattern of every copy of
        R_i is identical, so the grid for R_{i+1} is the grid for R_i stamped
        at each stacking offset.
        """
        if not 1 <= k <= j <= self.K:
            raise ValueError(f"need 1 <= k <= j <= K, got k={k}, j={j}")
        key = (k, j)
        if key in self._grids:
            return self._grids[key]
        rect_k = self.rect(k)
        if len(rect_k) > self.cell_budget:
            raise BudgetError(f"|R_{k}| exceeds the cell budget")
        grid = self._grids.get((k, k))
        if grid is None:
            grid = np.arange(len(rect_k), dtype=np.int32).reshape(rect_k.extents)
            self._grids[(k, k)] = grid
        for i in range(k, j):
            if (k, i + 1) in self._grids:
                grid = self._grids[(k, i + 1)]
                continue
            src_rect = self.rect(i)
            dst_rect = self.rect(i + 1)
            if len(dst_rect) > self.cell_budget:
                raise BudgetError(f"|R_{i+1}| exceeds the cell budget")
            grid_src = self._grids[(k, i)]
            dst = np.full(dst_rect.extents, ERROR_CODE, dtype=np.int32)
            for v in sorted(point_set(self.schedule.stacking(i))):
                start = tuple(
                    v[a] + src_rect.lo[a] - dst_rect.lo[a] for a in range(self.dim)
                )
                sl = tuple(
                    slice(s, s + e) for s, e in zip(start, src_rect.extents)
                )
                dst[sl] = grid_src
            dst.setflags(write=False)
            self._grids[(k, i + 1)] = dst
            grid = dst
        return self._grids[key]

    def label_code(self, j: int, cell: Iterable[int]) -> int:
        cell = as_point(cell)
        if cell not in self.top:
            raise ValueError(f"cell {cell} outside R_K = {self.top}")
        grid = self.label_grid(j, self.K)
        offset = tuple(c - lo for c, lo in zip(cell, self.top.lo))
        return int(grid[offset])

    def decode_label(self, j: int, code: int) -> Point | None:
        """Label point in R_j for a grid code; None is the error label."""
        if code == ERROR_CODE:
            return None
        rect_j = self.rect(j)
        offset = np.unravel_index(code, rect_j.extents)
        return tuple(int(o) + lo for o, lo in zip(offset, rect_j.lo))

    def __repr__(self) -> str:
        return (
            f"LevelKModel({self.schedule.schedule_id!r}, K={self.K}, "
            f"cells={self.total_cells})"
        )


def build_model(
    schedule: ConstructionSchedule,
    K: int,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> LevelKModel:
    """Validate the schedule and realize it at level K."""
    report = validate_schedule(schedule)
    if not report.valid:
        raise ScheduleError(report.violations)
    return LevelKModel(schedule, K, cell_budget=cell_budget)


def label_of_cell(model: LevelKModel, j: int, cell: Iterable[int]) -> Point | None:
    """Tower-j label of a cell of R_K: cell - p for its unique copy, else None (error)."""
    return model.decode_label(j, model.label_code(j, cell))


def translate_cell(
    model: LevelKModel, cell: Iterable[int], v: Iterable[int]
) -> Point | None:
    """cell + v when it stays inside R_K, else None (out of range)."""
    cell = as_point(cell)
    if cell not in model.top:
        raise ValueError(f"cell {cell} outside R_K")
    moved = add(cell, as_point(v))
    return moved if moved in model.top else None


def _window_array(W: ShapeLike) -> np.ndarray:
    pts = sorted(point_set(W))
    if not pts:
        raise ValueError("window must be nonempty")
    return np.array(pts, dtype=np.int64)


def _inside_bounds(rect: Rectangle, W_arr: np.ndarray):
    """Offset ranges of levels whose whole window stays inside ``rect``."""
    wmin = W_arr.min(axis=0)
    wmax = W_arr.max(axis=0)
    lower = [max(0, -int(wmin[a])) for a in range(rect.dim)]
    upper = [
        rect.extents[a] - 1 - max(0, int(wmax[a])) for a in range(rect.dim)
    ]
    return lower, upper


@dataclass
class LevelClassification:
    """Good levels of tower j against a window, with the exact bad mass."""

    rect: Rectangle
    good_mask: np.ndarray
    boundary_count: int
    good_count: int
    y_mass: Fraction

    def good_labels(self) -> Shape:
        offs = np.argwhere(self.good_mask)
        lo = self.rect.lo
        return Shape(
            (tuple(int(o) + l for o, l in zip(row, lo)) for row in offs),
            dim=self.rect.dim,
        )


def classify_levels(model: LevelKModel, j: int, W: ShapeLike) -> LevelClassification:
    """Split the levels of tower j into good and bad against window W.

    Good levels are R_j minus the inner W-boundary; the bad mass is
    mu(Y_j) = (|boundary| / |R_j|)(1 - mu(E_j)) + mu(E_j), exact.
    """
    rect = model.rect(j)
    W_arr = _window_array(W)
    if W_arr.shape[1] != model.dim:
        raise ValueError("window dimension mismatch")
    lower, upper = _inside_bounds(rect, W_arr)
    poking = np.ones(rect.extents, dtype=bool)
    if all(l <= u for l, u in zip(lower, upper)):
        poking[tuple(slice(l, u + 1) for l, u in zip(lower, upper))] = False
    boundary = np.zeros(rect.extents, dtype=bool)
    ext = rect.extents
    for w in W_arr:
        src = []
        dst = []
        ok = True
        for a in range(rect.dim):
            s_lo = max(0, -int(w[a]))
            s_hi = min(ext[a] - 1, ext[a] - 1 - int(w[a]))
            if s_lo > s_hi:
                ok = False
                break
            src.append(slice(s_lo, s_hi + 1))
            dst.append(slice(s_lo + int(w[a]), s_hi + int(w[a]) + 1))
        if ok:
            boundary[tuple(dst)] |= poking[tuple(src)]
    good = ~boundary
    boundary_count = int(boundary.sum())
    e_mass = model.error_mass(j)
    y_mass = Fraction(boundary_count, len(rect)) * (1 - e_mass) + e_mass
    return LevelClassification(
        rect=rect,
        good_mask=good,
        boundary_count=boundary_count,
        good_count=int(good.sum()),
        y_mass=y_mass,
    )


class NameDistribution:
    """Exact distribution of window names over the good levels of a tower.

    Names are tuples of tower-k label codes aligned with the sorted window
    points; the error label is code -1. All bad mass (boundary levels plus
    the error set) is lumped into ``bad_mass``. Probabilities plus bad mass
    sum to 1 exactly.
    """

    def __init__(
        self,
        window: tuple[Point, ...],
        entries: dict[tuple[int, ...], Fraction],
        bad_mass: Fraction,
        label_rect: Rectangle,
    ):
        total = sum(entries.values(), Fraction(0)) + bad_mass
        if total != 1:
            raise ValueError(f"masses sum to {total}, not 1")
        if any(p < 0 for p in entries.values()) or bad_mass < 0:
            raise ValueError("negative mass")
        self.window = window
        self.entries = entries
        self.bad_mass = bad_mass
        self.label_rect = label_rect
        self.alphabet_bound = len(label_rect) + 1

    @property
    def good_mass(self) -> Fraction:
        return 1 - self.bad_mass

    def decode_label(self, code: int) -> Point | None:
        if code == ERROR_CODE:
            return None
        offset = np.unravel_index(code, self.label_rect.extents)
        return tuple(int(o) + lo for o, lo in zip(offset, self.label_rect.lo))

    def probabilities(self, include_bad: bool = True) -> list[Fraction]:
        probs = [self.entries[name] for name in sorted(self.entries)]
        if include_bad and self.bad_mass > 0:
            probs.append(self.bad_mass)
        return probs

    def __eq__(self, other) -> bool:
        if not isinstance(other, NameDistribution):
            return NotImplemented
        return (
            self.window == other.window
            and self.entries == other.entries
            and self.bad_mass == other.bad_mass
        )

    def __repr__(self) -> str:
        return (
            f"NameDistribution(|W|={len(self.window)}, names={len(self.entries)}, "
            f"bad={self.bad_mass})"
        )


def name_distribution(
    model: LevelKModel, k: int, j: int, W: ShapeLike
) -> NameDistribution:
    """Window-name distribution of tower k seen from the good levels of tower j.

    Every copy of R_j in R_K is tiled identically by copies of R_k, so the
    name at a good level v depends only on v: it is read off the tower-k
    label grid of R_j at v + W. Identical names aggregate; each good level
    carries mass |J_{j,K}|/|R_K|. Good levels are the W-boundary complement
    intersected with {v : v + W inside R_j} (identical sets whenever 0 is in
    W, which holds for every slab and cube window).
    """
    if not 1 <= k <= j <= model.K:
        raise ValueError(f"need 1 <= k <= j <= K, got k={k}, j={j}")
    rect = model.rect(j)
    W_arr = _window_array(W)
    window = tuple(map(tuple, W_arr.tolist()))
    cls = classify_levels(model, j, W)
    lower, upper = _inside_bounds(rect, W_arr)
    good = cls.good_mask
    if all(l <= u for l, u in zip(lower, upper)):
        inside = np.zeros(rect.extents, dtype=bool)
        inside[tuple(slice(l, u + 1) for l, u in zip(lower, upper))] = True
        good = good & inside
    else:
        good = np.zeros(rect.extents, dtype=bool)
    label_rect = model.rect(k)
    n_good = int(good.sum())
    unit = model.level_mass(j)
    if n_good == 0:
        return NameDistribution(window, {}, Fraction(1), label_rect)
    grid = model.label_grid(k, j)
    offs = np.argwhere(good)
    codes = np.empty((n_good, len(W_arr)), dtype=np.int32)
    for wi in range(len(W_arr)):
        idx = tuple(offs[:, a] + int(W_arr[wi, a]) for a in range(model.dim))
        codes[:, wi] = grid[idx]
    # Aggregate identical rows through a bytes-keyed dict; for wide windows
    # this beats np.unique(axis=0), which lexsorts column by column.
    counts: dict[bytes, int] = {}
    for row in codes:
        key = row.tobytes()
        counts[key] = counts.get(key, 0) + 1
    entries = {
        tuple(int(c) for c in np.frombuffer(key, dtype=np.int32)): count * unit
        for key, count in counts.items()
    }
    bad = 1 - n_good * unit
    return NameDistribution(window, entries, bad, label_rect)


def brute_force_name_distribution(
    model: LevelKModel,
    k: int,
    W: ShapeLike,
    budget: int = BRUTE_FORCE_BUDGET,
) -> NameDistribution:
    """Ground-truth name distribution by direct cell enumeration.

    Walks every cell v of R_K; when v + W stays inside R_K the name is read
    cell by cell from the tower-k labels, otherwise the mass is lumped as
    bad. Pure-python path, independent of the grid machinery, used as the
    oracle for name_distribution at j = K.
    """
    if model.total_cells > budget:
        raise BudgetError(
            f"|R_K| = {model.total_cells} exceeds the oracle budget {budget}"
        )
    rect_k = model.rect(k)
    label_map: dict[Point, int] = {}
    for p in model.placements(k):
        for code, cell in enumerate(rect_k):
            label_map[add(p, cell)] = code
    W_pts = sorted(point_set(W))
    if not W_pts:
        raise ValueError("window must be nonempty")
    window = tuple(W_pts)
    top = model.top
    counts: dict[tuple[int, ...], int] = {}
    bad = 0
    for v in top:
        name = []
        for w in W_pts:
            c = add(v, w)
            if c not in top:
                name = None
                break
            name.append(label_map.get(c, ERROR_CODE))
        if name is None:
            bad += 1
        else:
            key = tuple(name)
            counts[key] = counts.get(key, 0) + 1
    entries = {
        name: Fraction(count, model.total_cells) for name, count in counts.items()
    }
    return NameDistribution(
        window, entries, Fraction(bad, model.total_cells), rect_k
    )


def odometer_schedule(
    dim: int, base: int, K: int, schedule_id: str | None = None
) -> ConstructionSchedule:
    """d-dimensional base-b odometer: side-b^k cubes tiling exactly (q_k = 1)."""
    if base < 2:
        raise ValueError("base must be >= 2")
    if K < 1:
        raise ValueError("K must be >= 1")
    rects = [Rectangle.from_extents((base**k,) * dim) for k in range(1, K + 1)]
    stages = []
    for k in range(1, K):
        offsets = [i * base**k for i in range(base)]
        stages.append(
            Stage(
                rects[k - 1],
                Shape(tuple(p) for p in _grid_product(offsets, dim)),
            )
        )
    sid = schedule_id or f"odometer-d{dim}-b{base}-K{K}"
    return ConstructionSchedule(stages, rects[-1], schedule_id=sid)


def _grid_product(offsets: Sequence[int], dim: int):
    if dim == 1:
        return [(o,) for o in offsets]
    rest = _grid_product(offsets, dim - 1)
    return [(o, *r) for o in offsets for r in rest]


def spacered_schedule(
    dim: int,
    initial_side: int,
    K: int,
    spacer: int = 1,
    schedule_id: str | None = None,
) -> ConstructionSchedule:
    """Doubling squares with a spacer gap: sides s, 2s+spacer, ... (q_k < 1).

    Each stage places 2^d corner copies of the side-s cube in the side-
    (2s+spacer) cube, leaving a cross of spacer cells.
    """
    if initial_side < 1 or K < 1 or spacer < 0:
        raise ValueError("need initial_side >= 1, K >= 1, spacer >= 0")
    sides = [initial_side]
    for _ in range(K - 1):
        sides.append(2 * sides[-1] + spacer)
    rects = [Rectangle.from_extents((s,) * dim) for s in sides]
    stages = []
    for k in range(1, K):
        s = sides[k - 1]
        offsets = [0, s + spacer]
        stages.append(
            Stage(rects[k - 1], Shape(tuple(p) for p in _grid_product(offsets, dim)))
        )
    sid = schedule_id or f"spacered-d{dim}-s{initial_side}-K{K}-g{spacer}"
    return ConstructionSchedule(stages, rects[-1], schedule_id=sid)


def eccentric_schedule(
    long_extents: Sequence[int],
    short_extents: Sequence[int],
    dim: int = 2,
    schedule_id: str | None = None,
) -> ConstructionSchedule:
    """Rectangles with per-axis growth: long axis first, short on the rest.

    Copies are packed on the integer grid (floor(next/current) per axis),
    leaving the remainder as spacer mass. Parameterizes the dichotomy between
    subexponential and exponential long-side growth.
    """
    if dim < 2:
        raise ValueError("eccentric schedules need dim >= 2")
    if len(long_extents) != len(short_extents) or len(long_extents) < 2:
        raise ValueError("need matching extent lists of length >= 2")
    rects = []
    for ell, s in zip(long_extents, short_extents):
        if ell < s:
            raise ValueError(f"long extent {ell} shorter than short extent {s}")
        rects.append(Rectangle.from_extents((ell,) + (s,) * (dim - 1)))
    stages = []
    for k in range(len(rects) - 1):
        axis_offsets = []
        for a in range(dim):
            cur = rects[k].extents[a]
            nxt = rects[k + 1].extents[a]
            copies = nxt // cur
            if copies < 1:
                raise ValueError(f"stage {k+1}: axis {a} shrinks ({cur} -> {nxt})")
            axis_offsets.append([i * cur for i in range(copies)])
        pts = [()]
        for offs in axis_offsets:
            pts = [(*p, o) for p in pts for o in offs]
        stages.append(Stage(rects[k], Shape(pts)))
    sid = schedule_id or f"eccentric-d{dim}-{len(rects)}r"
    return ConstructionSchedule(stages, rects[-1], schedule_id=sid)


def eccentric_exponential(
    beta: float, num_stages: int, dim: int = 2, short_start: int = 2
) -> ConstructionSchedule:
    """Eccentric family with long extent ~ exp(beta * short extent)."""
    shorts = [short_start + i for i in range(num_stages + 1)]
    longs = [max(s, math.floor(math.exp(beta * s))) for s in shorts]
    return eccentric_schedule(
        longs,
        shorts,
        dim=dim,
        schedule_id=f"eccentric-exp-b{beta}-n{num_stages}",
    )


def schedule_to_json(schedule: ConstructionSchedule) -> dict:
    return {
        "dim": schedule.dim,
        "id": schedule.schedule_id,
        "stages": [
            {"rect": s.rect.to_json(), "stacking": s.stacking.to_json()}
            for s in schedule.stages
        ],
        "final_rect": schedule.final_rect.to_json(),
    }


def schedule_from_json(data: dict) -> ConstructionSchedule:
    dim = int(data["dim"])
    stages = [
        Stage(
            Rectangle.from_json(s["rect"]),
            Shape(s["stacking"], dim=dim),
        )
        for s in data["stages"]
    ]
    return ConstructionSchedule(
        stages,
        Rectangle.from_json(data["final_rect"]),
        schedule_id=data.get("id", "schedule"),
    )


def save_schedule(schedule: ConstructionSchedule, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(schedule_to_json(schedule), f, indent=2)


def load_schedule(path) -> ConstructionSchedule:
    with open(path, "r", encoding="utf-8") as f:
        return schedule_from_json(json.load(f))


def write_model_stats_csv(model: LevelKModel, fileobj) -> None:
    """Per-level statistics: j, |R_j|, q_j, error mass (exact and double)."""
    writer = csv.writer(fileobj)
    writer.writerow(["j", "R_size", "q", "error_mass", "error_mass_float"])
    for j in range(1, model.K + 1):
        q = str(model.schedule.coverage(j)) if j < model.K else ""
        e = model.error_mass(j)
        writer.writerow([j, len(model.rect(j)), q, str(e), repr(float(e))])
