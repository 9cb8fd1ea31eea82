"""Synthetic reference cohort for the demo pipeline and the test suite.

Eighty-three municipalities with a fixed aggregate structure: population
bands of sizes 8 / 9 / 29 / 16 plus 21 with no population reported, four
loss events totalling $628,208 across nine distinct failed controls, and an
MFA maturity histogram of (23 not, 41 partially, 15 largely, 4 fully).
Everything else is sampled from a seeded generator, so the same seed always
yields byte-identical responses.
"""

from __future__ import annotations

import random
from typing import Dict, List, Optional, Tuple

from .controls import (
    CONTROL_IDS,
    COHORT_NO_POPULATION,
    MaturityLevel,
    ParticipantResponse,
    population_cohort,
)

DEFAULT_SEED = 42

COHORT_SIZE = 83

# (band size, low, high) for sampled populations; None means not reported.
_POPULATION_PLAN: Tuple[Tuple[int, Optional[int], Optional[int]], ...] = (
    (8, 26_000, 120_000),
    (9, 15_000, 25_000),
    (29, 5_000, 15_000),
    (16, 400, 5_000),
    (21, None, None),
)

# Loss events: (total USD, failed controls, population band of the holder).
_LOSS_EVENTS: Tuple[Tuple[int, Tuple[str, ...], str], ...] = (
    (500_000, ("2b", "5a", "5b", "8a", "8b"), "pop_5k_15k"),
    (72_650, ("5b", "6b", "8a", "8b", "8c"), "pop_gt_25k"),
    (32_500, ("5a", "5b"), COHORT_NO_POPULATION),
    (23_058, ("1a", "2a"), "pop_lt_5k"),
)

# Controls with pinned level histograms (not / partially / largely / fully).
_PINNED_LEVEL_COUNTS: Dict[str, Tuple[int, int, int, int]] = {
    "1a": (23, 41, 15, 4),
    "5a": (21, 22, 20, 20),
    "5b": (16, 17, 20, 30),
}

# Sampling weights for the remaining controls.
_LEVEL_WEIGHTS = (0.30, 0.34, 0.23, 0.13)


def build_reference_cohort(seed: int = DEFAULT_SEED) -> List[ParticipantResponse]:
    """Deterministically generate the 83 reference responses."""
    rng = random.Random(seed)

    populations: List[Optional[int]] = []
    for size, low, high in _POPULATION_PLAN:
        if low is None:
            populations.extend([None] * size)
        else:
            populations.extend(rng.randrange(low, high) for _ in range(size))
    rng.shuffle(populations)

    levels_by_control: Dict[str, List[MaturityLevel]] = {}
    for cid in CONTROL_IDS:
        if cid in _PINNED_LEVEL_COUNTS:
            counts = _PINNED_LEVEL_COUNTS[cid]
            levels = [MaturityLevel(i) for i, c in enumerate(counts) for _ in range(c)]
        else:
            levels = rng.choices([MaturityLevel(i) for i in range(4)], weights=_LEVEL_WEIGHTS, k=COHORT_SIZE)
        rng.shuffle(levels)
        levels_by_control[cid] = levels

    incidents: Dict[int, Tuple[int, Tuple[str, ...]]] = {}
    taken: set = set()
    for loss, failed, band in _LOSS_EVENTS:
        holder = next(
            i for i, pop in enumerate(populations)
            if i not in taken and population_cohort(pop) == band
        )
        taken.add(holder)
        incidents[holder] = (loss, failed)

    responses: List[ParticipantResponse] = []
    for i in range(COHORT_SIZE):
        loss, failed = incidents.get(i, (0, ()))
        responses.append(ParticipantResponse(
            participant_id=f"muni-{i + 1:03d}",
            population=populations[i],
            maturity={cid: levels_by_control[cid][i] for cid in CONTROL_IDS},
            incident_count=1 if loss else 0,
            total_loss_usd=loss,
            failed_controls=frozenset(failed),
        ))
    return responses
