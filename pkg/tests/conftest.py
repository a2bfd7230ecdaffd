import math
import random
from fractions import Fraction

import pytest

from cutstack import (
    ConstructionSchedule,
    Rectangle,
    Shape,
    Stage,
    build_model,
    eccentric_exponential,
    odometer_schedule,
    spacered_schedule,
    validate_schedule,
)


@pytest.fixture(scope="session")
def odometer_2d_k10():
    return build_model(odometer_schedule(2, 2, 10), 10)


@pytest.fixture(scope="session")
def spacered_2d_k8():
    return build_model(spacered_schedule(2, 8, 8), 8)


@pytest.fixture(scope="session")
def eccentric_2d():
    return build_model(eccentric_exponential(1.5, 3), 4)


def random_schedule(rng: random.Random, dim: int, levels: int, max_cells: int = 100_000):
    """Seeded random valid schedule: grid-packed copies with jittered anchors."""
    for _ in range(50):
        extents = [tuple(rng.randint(2, 4) for _ in range(dim))]
        stages = []
        ok = True
        for _ in range(levels - 1):
            cur = extents[-1]
            copies = [rng.randint(1, 3) for _ in range(dim)]
            if all(c == 1 for c in copies):
                copies[rng.randrange(dim)] = 2
            extra = [rng.randint(0, 2) for _ in range(dim)]
            nxt = tuple(c * e + x for c, e, x in zip(copies, cur, extra))
            if math.prod(nxt) > max_cells:
                ok = False
                break
            shift = [rng.randint(0, x) for x in extra]
            axis_offsets = [
                [t * e + g for t in range(c)]
                for c, e, g in zip(copies, cur, shift)
            ]
            pts = [()]
            for offs in axis_offsets:
                pts = [(*p, o) for p in pts for o in offs]
            stages.append(
                Stage(Rectangle.from_extents(cur), Shape(pts, dim=dim))
            )
            extents.append(nxt)
        if not ok or len(extents) < levels:
            continue
        sched = ConstructionSchedule(
            stages,
            Rectangle.from_extents(extents[-1]),
            schedule_id=f"random-d{dim}-{rng.random():.6f}",
        )
        report = validate_schedule(sched)
        assert report.valid, report.violations
        return sched
    raise AssertionError("could not sample a schedule within the cell budget")


def schedule_farm():
    """Deterministic mix of builder and random schedules, d in {1, 2}."""
    rng = random.Random(20260809)
    farm = [
        odometer_schedule(1, 2, 3),
        odometer_schedule(1, 2, 5),
        odometer_schedule(1, 3, 3),
        spacered_schedule(1, 2, 4),
        spacered_schedule(1, 3, 4, spacer=2),
        odometer_schedule(2, 2, 3),
        odometer_schedule(2, 2, 4),
        odometer_schedule(2, 2, 6),
        odometer_schedule(2, 3, 3),
        odometer_schedule(2, 3, 4),
        spacered_schedule(2, 2, 3),
        spacered_schedule(2, 3, 3, spacer=2),
        spacered_schedule(2, 8, 5),
        spacered_schedule(2, 16, 5),
        eccentric_exponential(1.0, 2),
    ]
    farm += [random_schedule(rng, 1, levels=4) for _ in range(3)]
    farm += [random_schedule(rng, 2, levels=3) for _ in range(4)]
    return farm
