"""Partition entropy, Shields-type tail bounds, entropy brackets and decay scans.

The bracket for a window-name partition keeps the good-name entropy exact
(rational masses, double-precision logs) and handles the bad mass two ways:
lumped into a single atom (lower member) or split against the worst-case
alphabet via the Shields bound (upper member). Directional scans evaluate the
brackets along a time schedule and report normalized values per stage.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .construction import BudgetError, LevelKModel, NameDistribution, name_distribution
from .lattice import DirectionSubspace, cube_points, slab_points

#: Absolute slack for floating-point comparisons of provable inequalities.
FLOAT_SLACK = 1e-12

VARIANT_ALL = "theorem_all"
VARIANT_MAIN = "theorem_main"


class BoundViolation(ArithmeticError):
    """An inequality that must hold analytically failed numerically."""


def _log(x: float, log_base: float | None) -> float:
    if log_base is None:
        return math.log(x)
    return math.log(x) / math.log(log_base)


def partition_entropy(
    probs: Iterable[Fraction | int], log_base: float | None = None
) -> float:
    """Entropy of an exact probability vector, with 0 log 0 = 0.

    Masses must be nonnegative rationals summing to exactly 1 (no tolerance).
    """
    probs = [Fraction(p) for p in probs]
    if any(p < 0 for p in probs):
        raise ValueError("negative mass")
    total = sum(probs, Fraction(0))
    if total != 1:
        raise ValueError(f"masses sum to {total}, not 1")
    h = 0.0
    for p in probs:
        if p > 0:
            pf = float(p)
            h -= pf * math.log(pf)
    if log_base is not None:
        h /= math.log(log_base)
    return h


def shields_bound(
    beta: Fraction | float, m_size: int, log_base: float | None = None
) -> float:
    """beta * log|M| - beta * log(beta): max entropy a mass-beta tail can carry
    on a sub-alphabet of size |M|. Zero at beta = 0."""
    b = float(beta)
    if not 0 <= b <= 1:
        raise ValueError("beta must lie in [0, 1]")
    if m_size < 1:
        raise ValueError("|M| must be >= 1")
    if b == 0:
        return 0.0
    return b * _log(m_size, log_base) - b * _log(b, log_base)


def lemma_good_rhs(
    model: LevelKModel, j: int, log_base: float | None = None
) -> float:
    """-log(1 - mu(E_j)) + sum_i log(w_i + 1): cap on the good-name entropy.

    Uses the exact per-axis level counts (extents), not the raw side vector.
    """
    e = model.error_mass(j)
    if e >= 1:
        raise ValueError(f"error mass at level {j} is 1; bound undefined")
    rhs = -_log(float(1 - e), log_base)
    for ext in model.rect(j).extents:
        rhs += _log(ext, log_base)
    return rhs


def lemma_bad_rhs(
    model: LevelKModel,
    k: int,
    window_size: int,
    bad_mass: Fraction | float,
    mode: str = "strict",
    log_base: float | None = None,
) -> float:
    """Cap on the bad-tail entropy of a window-name partition.

    strict: beta |W| log(|R_k|+1) - beta log beta, the exact Shields
    application with alphabet (|R_k|+1)^|W|. paper: the printed loosening
    2 beta |W| log|R_k| - beta log beta (looser whenever |R_k| >= 2).
    """
    b = float(bad_mass)
    if not 0 <= b <= 1:
        raise ValueError("bad mass must lie in [0, 1]")
    if b == 0:
        return 0.0
    size_k = len(model.rect(k))
    lump = -b * _log(b, log_base)
    if mode == "strict":
        return b * window_size * _log(size_k + 1, log_base) + lump
    if mode == "paper":
        return 2 * b * window_size * _log(size_k, log_base) + lump
    raise ValueError(f"unknown mode {mode!r}")


@dataclass
class EntropyBracket:
    """Lower/upper entropy bracket for a window-name partition.

    lower = good_part + lump (the realized partition with the bad mass as one
    atom); upper adds the Shields term, so it dominates the fully resolved
    join and hence the window entropy of the underlying action at this stage.
    """

    k: int
    j: int
    n: int
    t: float
    m: float
    window_size: int
    good_part: float
    bad_mass: Fraction
    e_mass: Fraction
    lump_term: float
    shields_term: float
    lower: float
    upper: float
    normalized_lower: float
    normalized_upper: float
    good_rhs: float
    bad_rhs: float
    mode: str

    @property
    def y_mass(self) -> Fraction:
        return self.bad_mass


def bracket_from_distribution(
    model: LevelKModel,
    dist: NameDistribution,
    k: int,
    j: int,
    n: int,
    t: float,
    m: float,
    mode: str = "strict",
    log_base: float | None = None,
) -> EntropyBracket:
    good_part = 0.0
    for p in dist.entries.values():
        pf = float(p)
        if pf > 0:
            good_part -= pf * math.log(pf)
    if log_base is not None:
        good_part /= math.log(log_base)
    beta = dist.bad_mass
    bf = float(beta)
    lump = -bf * _log(bf, log_base) if bf > 0 else 0.0
    size_k = len(model.rect(k))
    shields = (
        bf * len(dist.window) * _log(size_k + 1, log_base)
        if mode == "strict"
        else 2 * bf * len(dist.window) * _log(size_k, log_base)
    ) if bf > 0 else 0.0
    lower = good_part + lump
    upper = good_part + shields + lump
    good_rhs = lemma_good_rhs(model, j, log_base)
    bad_rhs = lemma_bad_rhs(model, k, len(dist.window), beta, mode, log_base)
    if good_part > good_rhs + FLOAT_SLACK:
        raise BoundViolation(
            f"good-part entropy {good_part} exceeds its cap {good_rhs} at j={j}"
        )
    if shields + lump > bad_rhs + FLOAT_SLACK:
        raise BoundViolation(
            f"bad-side terms {shields + lump} exceed their cap {bad_rhs} at j={j}"
        )
    tn = float(t) ** n
    return EntropyBracket(
        k=k,
        j=j,
        n=n,
        t=float(t),
        m=float(m),
        window_size=len(dist.window),
        good_part=good_part,
        bad_mass=beta,
        e_mass=model.error_mass(j),
        lump_term=lump,
        shields_term=shields,
        lower=lower,
        upper=upper,
        normalized_lower=lower / tn,
        normalized_upper=upper / tn,
        good_rhs=good_rhs,
        bad_rhs=bad_rhs,
        mode=mode,
    )


def window_for(
    direction: DirectionSubspace | None,
    t: Fraction | float,
    m: Fraction | float,
    dim: int,
):
    """Slab window for a proper subspace, cube window for the full space."""
    if direction is None or direction.dim_n == dim:
        return cube_points(Fraction(t), dim)
    return slab_points(direction, Fraction(t), Fraction(m))


def entropy_bracket(
    model: LevelKModel,
    k: int,
    j: int,
    direction: DirectionSubspace | None,
    t: Fraction | float,
    m: Fraction | float,
    mode: str = "strict",
    log_base: float | None = None,
) -> EntropyBracket:
    """Entropy bracket of the tower-k name partition over S(V,t,m) at stage j.

    direction=None (or an n=d subspace) selects the cube window [0,t]^d.
    """
    n = direction.dim_n if direction is not None else model.dim
    W = window_for(direction, t, m, model.dim)
    dist = name_distribution(model, k, j, W)
    return bracket_from_distribution(
        model, dist, k, j, n, float(t), float(m), mode, log_base
    )


@dataclass
class YMassReport:
    j: int
    variant: str
    y_mass: Fraction
    bound: float
    holds: bool


def y_mass_bound_check(
    model: LevelKModel,
    j: int,
    direction: DirectionSubspace | None,
    t: Fraction | float,
    m: Fraction | float,
) -> YMassReport:
    """Exact mu(Y_j) against its closed-form cap.

    Axis-aligned direction: t/ext_axis + sum over the other axes of m/ext_i,
    plus mu(E_j). General direction (n-dimensional): sum over n-element axis
    subsets I of prod_{i in I} (t+m)/ext_i, plus mu(E_j). Extents are the
    per-axis level counts.
    """
    from .construction import classify_levels

    W = window_for(direction, t, m, model.dim)
    cls = classify_levels(model, j, W)
    e = float(model.error_mass(j))
    ext = model.rect(j).extents
    tf, mf = float(t), float(m)
    axis = _single_axis(direction)
    if axis is not None:
        bound = tf / ext[axis] + sum(
            mf / ext[a] for a in range(model.dim) if a != axis
        )
        variant = "axis"
    else:
        n = direction.dim_n if direction is not None else model.dim
        bound = 0.0
        for subset in _axis_subsets(model.dim, n):
            term = 1.0
            for a in subset:
                term *= (tf + mf) / ext[a]
            bound += term
        variant = "general"
    bound += e
    return YMassReport(
        j=j,
        variant=variant,
        y_mass=cls.y_mass,
        bound=bound,
        holds=float(cls.y_mass) <= bound + FLOAT_SLACK,
    )


def _single_axis(direction: DirectionSubspace | None) -> int | None:
    if direction is None or direction.dim_n != 1:
        return None
    v = direction.vectors[0]
    nz = [a for a, c in enumerate(v) if c != 0]
    return nz[0] if len(nz) == 1 else None


def _axis_subsets(d: int, n: int):
    from itertools import combinations

    return combinations(range(d), n)


@dataclass(frozen=True)
class TimeStage:
    j: int
    short: int
    long: int
    t: float


@dataclass(frozen=True)
class TimeSchedule:
    variant: str
    stages: tuple[TimeStage, ...]

    def t(self, j: int) -> float:
        for st in self.stages:
            if st.j == j:
                return st.t
        raise KeyError(j)


def time_schedule(
    variant: str, rect_stats: Sequence[tuple[int, int, int]]
) -> TimeSchedule:
    """Stage times from (j, short, long) statistics.

    theorem_all: t_j = sqrt(long * log long); theorem_main:
    t_j = sqrt(short * log long). Natural log; long >= 2 required so the
    times are positive.
    """
    if variant not in (VARIANT_ALL, VARIANT_MAIN):
        raise ValueError(f"unknown variant {variant!r}")
    stages = []
    for j, s, ell in rect_stats:
        if ell < 2:
            raise ValueError(f"stage {j}: long side {ell} < 2")
        base = ell if variant == VARIANT_ALL else s
        stages.append(TimeStage(j=j, short=s, long=ell, t=math.sqrt(base * math.log(ell))))
    return TimeSchedule(variant=variant, stages=tuple(stages))


def model_time_schedule(
    model: LevelKModel, variant: str, j_range: Sequence[int]
) -> TimeSchedule:
    """Time schedule from the model's per-axis level counts (extents)."""
    stats = [
        (j, model.rect(j).short_extent, model.rect(j).long_extent) for j in j_range
    ]
    return time_schedule(variant, stats)


@dataclass
class ScanRow:
    schedule_id: str
    K: int
    k: int
    j: int
    n: int
    m: float
    t: float
    variant: str
    e_mass: Fraction | None
    y_mass: Fraction | None
    lower: float | None
    upper: float | None
    norm_lower: float | None
    norm_upper: float | None
    good_rhs_norm: float | None
    bad_rhs_norm: float | None
    verdict: str
    skip_reason: str = ""
    short: int = 0
    long: int = 0
    window_size: int = 0
    good_part: float = 0.0
    lump_term: float = 0.0
    shields_term: float = 0.0
    good_rhs: float = 0.0
    bad_rhs: float = 0.0

    @property
    def skipped(self) -> bool:
        return self.verdict == "skipped"


@dataclass(frozen=True)
class DecayVerdict:
    m: float
    first_j: int
    last_j: int
    first_value: float
    last_value: float
    ratio: float
    factor: float
    passed: bool


@dataclass
class ScanResult:
    """Rows of a directional scan plus the per-m decay verdicts.

    The decay verdict compares the normalized upper bracket at the last
    feasible stage against decay_factor times its value at the first; it is a
    finite-scale diagnostic, never a statement about the t -> infinity limit.
    """

    direction_label: str
    variant: str
    rows: list[ScanRow]
    decay_verdicts: dict[float, DecayVerdict]

    @property
    def feasible_rows(self) -> list[ScanRow]:
        return [r for r in self.rows if not r.skipped]

    @property
    def verdict(self) -> bool:
        return bool(self.decay_verdicts) and all(
            v.passed for v in self.decay_verdicts.values()
        )


def directional_scan(
    model: LevelKModel,
    k: int,
    direction: DirectionSubspace | None,
    m_list: Sequence[Fraction | float | int],
    j_range: Sequence[int],
    variant: str,
    mode: str = "strict",
    decay_factor: float = 0.25,
    log_base: float | None = None,
    direction_label: str | None = None,
) -> ScanResult:
    """Evaluate entropy brackets along a time schedule for one direction.

    Infeasible stages (degenerate long side, cell budget) produce rows marked
    skipped, never silent truncation. Pure function of an immutable model;
    rows come out ordered by (j, m).
    """
    n = direction.dim_n if direction is not None else model.dim
    label = direction_label or (
        "cube" if direction is None else "v" + "_".join(str(c) for v in direction.vectors for c in v)
    )
    rows: list[ScanRow] = []
    sid = model.schedule.schedule_id
    for j in j_range:
        rect = model.rect(j)
        s_ext, l_ext = rect.short_extent, rect.long_extent
        if l_ext < 2:
            for m in m_list:
                rows.append(
                    _skipped_row(sid, model, k, j, n, m, variant, "degenerate stage")
                )
            continue
        sched = time_schedule(variant, [(j, s_ext, l_ext)])
        t = sched.stages[0].t
        for m in m_list:
            try:
                br = entropy_bracket(
                    model, k, j, direction, Fraction(t), Fraction(m), mode, log_base
                )
            except BudgetError as exc:
                rows.append(
                    _skipped_row(sid, model, k, j, n, m, variant, str(exc), t=t)
                )
                continue
            tn = float(t) ** n
            rows.append(
                ScanRow(
                    schedule_id=sid,
                    K=model.K,
                    k=k,
                    j=j,
                    n=n,
                    m=float(m),
                    t=t,
                    variant=variant,
                    e_mass=br.e_mass,
                    y_mass=br.bad_mass,
                    lower=br.lower,
                    upper=br.upper,
                    norm_lower=br.normalized_lower,
                    norm_upper=br.normalized_upper,
                    good_rhs_norm=br.good_rhs / tn,
                    bad_rhs_norm=br.bad_rhs / tn,
                    verdict="ok",
                    short=s_ext,
                    long=l_ext,
                    window_size=br.window_size,
                    good_part=br.good_part,
                    lump_term=br.lump_term,
                    shields_term=br.shields_term,
                    good_rhs=br.good_rhs,
                    bad_rhs=br.bad_rhs,
                )
            )
    verdicts: dict[float, DecayVerdict] = {}
    for m in m_list:
        mf = float(m)
        feas = [r for r in rows if not r.skipped and r.m == mf]
        if len(feas) >= 2:
            first, last = feas[0], feas[-1]
            ratio = (
                last.norm_upper / first.norm_upper
                if first.norm_upper > 0
                else math.inf
            )
            verdicts[mf] = DecayVerdict(
                m=mf,
                first_j=first.j,
                last_j=last.j,
                first_value=first.norm_upper,
                last_value=last.norm_upper,
                ratio=ratio,
                factor=decay_factor,
                passed=ratio <= decay_factor,
            )
    return ScanResult(
        direction_label=label, variant=variant, rows=rows, decay_verdicts=verdicts
    )


def _skipped_row(sid, model, k, j, n, m, variant, reason, t=float("nan")):
    return ScanRow(
        schedule_id=sid,
        K=model.K,
        k=k,
        j=j,
        n=n,
        m=float(m),
        t=t,
        variant=variant,
        e_mass=None,
        y_mass=None,
        lower=None,
        upper=None,
        norm_lower=None,
        norm_upper=None,
        good_rhs_norm=None,
        bad_rhs_norm=None,
        verdict="skipped",
        skip_reason=reason,
    )


SCAN_CSV_COLUMNS = [
    "schedule_id",
    "K",
    "k",
    "j",
    "n",
    "m",
    "t",
    "variant",
    "E_mass",
    "Y_mass",
    "lower",
    "upper",
    "norm_lower",
    "norm_upper",
    "good_rhs",
    "bad_rhs",
    "verdict",
    "E_mass_float",
    "Y_mass_float",
]


def write_scan_csv(rows: Sequence[ScanRow], fileobj, comment: str | None = None):
    """Fixed-column scan CSV; exact masses as p/q strings, floats elsewhere.

    good_rhs/bad_rhs columns carry the t^n-normalized cap values.
    """
    if comment:
        fileobj.write(f"# {comment}\n")
    writer = csv.writer(fileobj)
    writer.writerow(SCAN_CSV_COLUMNS)
    for r in rows:
        writer.writerow(
            [
                r.schedule_id,
                r.K,
                r.k,
                r.j,
                r.n,
                repr(r.m),
                repr(r.t),
                r.variant,
                "" if r.e_mass is None else str(r.e_mass),
                "" if r.y_mass is None else str(r.y_mass),
                _fmt(r.lower),
                _fmt(r.upper),
                _fmt(r.norm_lower),
                _fmt(r.norm_upper),
                _fmt(r.good_rhs_norm),
                _fmt(r.bad_rhs_norm),
                r.verdict if not r.skip_reason else f"skipped:{r.skip_reason}",
                "" if r.e_mass is None else repr(float(r.e_mass)),
                "" if r.y_mass is None else repr(float(r.y_mass)),
            ]
        )


def _fmt(x) -> str:
    return "" if x is None else repr(x)


@dataclass
class MStabilityRow:
    m: float
    top_j: int
    norm_lower: float
    norm_upper: float
    all_bad: bool


@dataclass
class MStabilityReport:
    """Normalized bracket values at the deepest feasible stage, per m.

    Exhibits stabilization of the lower member as the transverse width grows
    (the upper member's Shields term scales with the window volume, so it is
    reported but not expected to stabilize). No limit claim is made.
    """

    rows: list[MStabilityRow]
    lower_spread: float
    upper_spread: float


def m_stability_report(scan: ScanResult) -> MStabilityReport:
    by_m: dict[float, list[ScanRow]] = {}
    for r in scan.feasible_rows:
        by_m.setdefault(r.m, []).append(r)
    if len(by_m) < 2:
        raise ValueError("m-stability needs at least two m values")
    rows = []
    for m in sorted(by_m):
        top = max(by_m[m], key=lambda r: r.j)
        rows.append(
            MStabilityRow(
                m=m,
                top_j=top.j,
                norm_lower=top.norm_lower,
                norm_upper=top.norm_upper,
                all_bad=top.y_mass == 1,
            )
        )
    lowers = [r.norm_lower for r in rows]
    uppers = [r.norm_upper for r in rows]
    return MStabilityReport(
        rows=rows,
        lower_spread=_spread(lowers),
        upper_spread=_spread(uppers),
    )


def _spread(values: list[float]) -> float:
    lo, hi = min(values), max(values)
    if lo <= 0:
        return math.inf if hi > lo else 0.0
    return (hi - lo) / lo
