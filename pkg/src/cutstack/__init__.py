"""Rank-one Z^d actions from cutting-and-stacking schedules.

Exact lattice geometry, finite tower realizations with rational measures,
directional-entropy brackets and the tower refinement algebra, plus a
config-driven CLI (``cutstack``).
"""

from .lattice import (
    DirectionSubspace,
    EccentricityReport,
    Rectangle,
    Shape,
    boundary_containment_holds,
    boundary_ratio,
    cube_points,
    eccentricity_stats,
    folner_ratio,
    inner_boundary,
    is_separated,
    minkowski_sum,
    slab_points,
)
from .construction import (
    BudgetError,
    ConstructionSchedule,
    LevelKModel,
    NameDistribution,
    ScheduleError,
    Stage,
    brute_force_name_distribution,
    build_model,
    classify_levels,
    eccentric_exponential,
    eccentric_schedule,
    label_of_cell,
    load_schedule,
    name_distribution,
    odometer_schedule,
    save_schedule,
    schedule_from_json,
    schedule_to_json,
    spacered_schedule,
    translate_cell,
    validate_schedule,
)
from .entropy import (
    EntropyBracket,
    ScanResult,
    TimeSchedule,
    directional_scan,
    entropy_bracket,
    lemma_bad_rhs,
    lemma_good_rhs,
    m_stability_report,
    model_time_schedule,
    partition_entropy,
    shields_bound,
    time_schedule,
    y_mass_bound_check,
)
from .towers import (
    LabeledTower,
    RefinementError,
    TowerError,
    derived_tower,
    majority_set,
    model_tower,
    needgeom_check,
    perturb_tower,
    refine_sequence,
    refines,
    restrict_tower,
    tower_distance,
)

__version__ = "0.1.0"
