"""Additive secret sharing and secure aggregation of questionnaire vectors.

Privacy model
-------------
Each participant packs its response into a fixed vector of non-negative
integers (the slot layout below), then splits the vector into ``M`` additive
shares over the prime field GF(p), p = 2^61 - 1:

    share_1 .. share_{M-1}  ~  uniform on [0, p)        (independent)
    share_M                 =  (value - sum(others)) mod p

Each aggregation server receives exactly one share per participant, adds the
shares it holds slot-wise mod p, and publishes only that per-cohort partial
sum.  Combining the M partial sums mod p yields the exact plaintext column
sums.  Any M-1 shares of a value are jointly uniform and carry no information
about it; a single honest server is therefore enough to keep individual
responses private.  Servers do learn the cohort tag and the participant count,
which are published anyway.

No wraparound
-------------
Every slot has a declared per-participant maximum (see ``SLOT_MAXIMA``).  With
honest inputs and at most ``MAX_PARTICIPANTS`` = 10^6 participants, the
largest possible true column sum is 10^6 * 10^10 = 10^16 < p ~ 2.3 * 10^18,
so combined sums never wrap and equal the integer plaintext sums exactly.

Randomness
----------
Production share generation draws from ``secrets`` (one vector per
participant, cost is negligible).  Simulations and tests may pass a seeded
``numpy.random.Generator`` for bulk speed and byte-reproducible runs; either
source yields uniform field elements.
"""

from __future__ import annotations

import json
import secrets
import warnings
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .controls import (
    CONTROL_IDS,
    MATURITY_WIRE_VALUES,
    SIGNIFICANCE_FLOOR_USD,
    ParticipantResponse,
)

# ---------------------------------------------------------------------------
# Field
# ---------------------------------------------------------------------------

MODULUS = 2**61 - 1  # Mersenne prime; fits uint64 with headroom for one add
_P = np.uint64(MODULUS)

# Honest-participant bound used by the no-wraparound argument.
MAX_PARTICIPANTS = 10**6


# ---------------------------------------------------------------------------
# Slot layout
# ---------------------------------------------------------------------------

LAYOUT_VERSION = "rri-slots-v1"

# Loss buckets: [lo, hi) in USD; the last bucket is open-ended.
LOSS_BUCKETS: Tuple[Tuple[int, Optional[int]], ...] = (
    (1_000, 50_000),
    (50_000, 100_000),
    (100_000, 500_000),
    (500_000, None),
)
LOSS_BUCKET_TAGS = ("1k_50k", "50k_100k", "100k_500k", "500k_plus")

MAX_DOLLAR_SLOT = 10**10  # per-participant cap on any dollar amount
MAX_INCIDENT_COUNT = 10**4  # per-participant cap on the incident counter


def _build_layout() -> Tuple[Tuple[str, ...], Tuple[int, ...]]:
    names: List[str] = []
    maxima: List[int] = []
    for cid in CONTROL_IDS:
        names.append(f"maturity_sum:{cid}")
        maxima.append(3)
    for cid in CONTROL_IDS:
        for level in MATURITY_WIRE_VALUES:
            names.append(f"level_count:{cid}:{level}")
            maxima.append(1)
    names.append("incident_count")
    maxima.append(MAX_INCIDENT_COUNT)
    names.append("total_loss_usd")
    maxima.append(MAX_DOLLAR_SLOT)
    for cid in CONTROL_IDS:
        names.append(f"attributed_loss:{cid}")
        maxima.append(MAX_DOLLAR_SLOT)
    for tag in LOSS_BUCKET_TAGS:
        names.append(f"loss_bucket:{tag}")
        maxima.append(1)
    return tuple(names), tuple(maxima)


SLOT_NAMES, SLOT_MAXIMA = _build_layout()
NUM_SLOTS = len(SLOT_NAMES)  # 138
SLOT_INDEX: Dict[str, int] = {name: i for i, name in enumerate(SLOT_NAMES)}

assert NUM_SLOTS == 22 + 88 + 1 + 1 + 22 + 4
assert max(SLOT_MAXIMA) * MAX_PARTICIPANTS < MODULUS


def loss_bucket_index(total_loss_usd: int) -> Optional[int]:
    """Bucket index for a significant total loss; None below the floor."""
    if total_loss_usd < LOSS_BUCKETS[0][0]:
        return None
    for i, (lo, hi) in enumerate(LOSS_BUCKETS):
        if total_loss_usd >= lo and (hi is None or total_loss_usd < hi):
            return i
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class AggregationError(Exception):
    """Base class; ``code`` is the stable wire-level error identifier."""

    code = "AggregationError"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)


class SlotOverflow(AggregationError):
    code = "SlotOverflow"


class DuplicateSubmission(AggregationError):
    code = "DuplicateSubmission"


class ModulusMismatch(AggregationError):
    code = "ModulusMismatch"


class ComputationMismatch(AggregationError):
    code = "ComputationMismatch"


class SealedCohort(AggregationError):
    code = "SealedCohort"


class MalformedSubmission(AggregationError):
    code = "MalformedSubmission"


class MissingPartial(AggregationError):
    code = "MissingPartial"


class MismatchedPartials(AggregationError):
    code = "MismatchedPartials"


class CohortTooSmall(AggregationError):
    code = "CohortTooSmall"


class SmallCohortWarning(UserWarning):
    """Cohort met the hard floor but is small enough to read with care."""


# ---------------------------------------------------------------------------
# Vector encoding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AggregationVector:
    """One participant's packed plaintext contribution."""

    layout: str
    slots: Tuple[int, ...]


def encode_response(resp: ParticipantResponse, allocated_losses: Mapping[str, int]) -> AggregationVector:
    """Pack a validated response plus its loss allocation into slot form.

    ``allocated_losses`` maps failed-control ids to integer dollar amounts
    that sum to ``resp.total_loss_usd`` (see ``benchmark.allocate_losses``).
    Raises :class:`SlotOverflow` when any slot exceeds its declared maximum.
    """
    slots = [0] * NUM_SLOTS
    for cid in CONTROL_IDS:
        level = resp.maturity[cid]
        slots[SLOT_INDEX[f"maturity_sum:{cid}"]] = int(level)
        slots[SLOT_INDEX[f"level_count:{cid}:{level.wire}"]] = 1
    slots[SLOT_INDEX["incident_count"]] = resp.incident_count
    slots[SLOT_INDEX["total_loss_usd"]] = resp.total_loss_usd
    for cid, amount in allocated_losses.items():
        slots[SLOT_INDEX[f"attributed_loss:{cid}"]] = int(amount)
    if resp.incident_count > 0 and resp.total_loss_usd >= SIGNIFICANCE_FLOOR_USD:
        bucket = loss_bucket_index(resp.total_loss_usd)
        if bucket is not None:
            slots[SLOT_INDEX[f"loss_bucket:{LOSS_BUCKET_TAGS[bucket]}"]] = 1
    for i, (value, cap) in enumerate(zip(slots, SLOT_MAXIMA)):
        if not 0 <= value <= cap:
            raise SlotOverflow(f"slot {SLOT_NAMES[i]} value {value} outside [0, {cap}]")
    return AggregationVector(LAYOUT_VERSION, tuple(slots))


# ---------------------------------------------------------------------------
# Sharing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShareBundle:
    """One server's share of one participant session."""

    computation_id: str
    cohort: str
    session_token: str
    server_index: int  # 1-based
    modulus: int
    slots: Tuple[int, ...]


@dataclass(frozen=True)
class PartialSum:
    """One server's sealed per-cohort column sums (still one share short)."""

    computation_id: str
    cohort: str
    server_index: int
    modulus: int
    n: int
    slots: Tuple[int, ...]


def _uniform_field_elements(count: int, rng: Optional[np.random.Generator]) -> np.ndarray:
    if rng is None:
        return np.array([secrets.randbelow(MODULUS) for _ in range(count)], dtype=np.uint64)
    return rng.integers(0, MODULUS, size=count, dtype=np.uint64)


def split_slots(values: Sequence[int], num_servers: int, rng: Optional[np.random.Generator] = None) -> List[Tuple[int, ...]]:
    """Split a slot vector into ``num_servers`` additive shares mod p.

    The first ``num_servers - 1`` shares are uniform field elements; the last
    one makes each slot's share-sum equal the plaintext value mod p.
    """
    if num_servers < 2:
        raise ValueError("secure aggregation needs at least 2 servers")
    vec = np.asarray(values, dtype=np.uint64)
    if vec.size and int(vec.max()) >= MODULUS:
        raise SlotOverflow("plaintext slot value is not a field element")
    running = np.zeros(vec.shape, dtype=np.uint64)
    shares: List[Tuple[int, ...]] = []
    for _ in range(num_servers - 1):
        share = _uniform_field_elements(vec.size, rng)
        running = (running + share) % _P
        shares.append(tuple(share.tolist()))
    last = (vec + (_P - running)) % _P
    shares.append(tuple(last.tolist()))
    return shares


def split_vector(
    vector: AggregationVector,
    *,
    computation_id: str,
    cohort: str,
    session_token: str,
    num_servers: int,
    rng: Optional[np.random.Generator] = None,
) -> List[ShareBundle]:
    """Produce one :class:`ShareBundle` per server for a participant session."""
    shares = split_slots(vector.slots, num_servers, rng)
    return [
        ShareBundle(computation_id, cohort, session_token, i + 1, MODULUS, share)
        for i, share in enumerate(shares)
    ]


def add_slots(a: Sequence[int], b: Sequence[int]) -> Tuple[int, ...]:
    """Slot-wise sum mod p.  Both inputs must already be field elements."""
    av = np.asarray(a, dtype=np.uint64)
    bv = np.asarray(b, dtype=np.uint64)
    return tuple(((av + bv) % _P).tolist())


# ---------------------------------------------------------------------------
# Server state
# ---------------------------------------------------------------------------

class _CohortAccumulator:
    __slots__ = ("n", "acc", "tokens", "sealed")

    def __init__(self) -> None:
        self.n = 0
        self.acc = np.zeros(NUM_SLOTS, dtype=np.uint64)
        self.tokens: set = set()
        self.sealed = False


class AggregationServerState:
    """One server's accumulator: share in, partial sums out, nothing else kept.

    Shares are folded into the running per-cohort sums immediately and then
    dropped, so a compromised server's memory holds only uniform noise plus
    the partial sums it will publish anyway.
    """

    def __init__(self, server_index: int, computation_id: str, modulus: int = MODULUS):
        if modulus != MODULUS:
            raise ModulusMismatch(f"unsupported modulus {modulus}")
        self.server_index = int(server_index)
        self.computation_id = computation_id
        self.modulus = modulus
        self._cohorts: Dict[str, _CohortAccumulator] = {}

    def submit(self, bundle: ShareBundle) -> None:
        if bundle.computation_id != self.computation_id:
            raise ComputationMismatch(f"share for computation {bundle.computation_id!r}, server runs {self.computation_id!r}")
        if bundle.modulus != self.modulus:
            raise ModulusMismatch(f"share uses modulus {bundle.modulus}, server uses {self.modulus}")
        if bundle.server_index != self.server_index:
            raise MalformedSubmission(f"share addressed to server {bundle.server_index}, this is server {self.server_index}")
        if len(bundle.slots) != NUM_SLOTS:
            raise MalformedSubmission(f"expected {NUM_SLOTS} slots, got {len(bundle.slots)}")
        try:
            arr = np.asarray(bundle.slots, dtype=np.uint64)
        except (OverflowError, TypeError, ValueError):
            raise MalformedSubmission("share slot is not a field element") from None
        if (arr >= _P).any():
            raise MalformedSubmission("share slot outside the field")
        cohort = self._cohorts.setdefault(bundle.cohort, _CohortAccumulator())
        if cohort.sealed:
            raise SealedCohort(f"cohort {bundle.cohort!r} is already sealed")
        if bundle.session_token in cohort.tokens:
            raise DuplicateSubmission(f"session {bundle.session_token!r} already submitted to cohort {bundle.cohort!r}")
        cohort.tokens.add(bundle.session_token)
        cohort.acc = (cohort.acc + arr) % _P
        cohort.n += 1

    def participant_count(self, cohort: str) -> int:
        acc = self._cohorts.get(cohort)
        return acc.n if acc else 0

    def seal(self, cohort: str) -> PartialSum:
        acc = self._cohorts.setdefault(cohort, _CohortAccumulator())
        acc.sealed = True
        return PartialSum(
            computation_id=self.computation_id,
            cohort=cohort,
            server_index=self.server_index,
            modulus=self.modulus,
            n=acc.n,
            slots=tuple(acc.acc.tolist()),
        )


# ---------------------------------------------------------------------------
# Combination
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AggregateReport:
    """Combined plaintext column sums for one cohort."""

    computation_id: str
    cohort: str
    n: int
    slots: Tuple[int, ...]
    layout: str = LAYOUT_VERSION

    def slot(self, name: str) -> int:
        return self.slots[SLOT_INDEX[name]]

    def maturity_sum(self, control_id: str) -> int:
        return self.slot(f"maturity_sum:{control_id}")

    def level_counts(self, control_id: str) -> Tuple[int, int, int, int]:
        return tuple(self.slot(f"level_count:{control_id}:{lvl}") for lvl in MATURITY_WIRE_VALUES)

    def attributed_loss(self, control_id: str) -> int:
        return self.slot(f"attributed_loss:{control_id}")

    def bucket_counts(self) -> Tuple[int, int, int, int]:
        return tuple(self.slot(f"loss_bucket:{tag}") for tag in LOSS_BUCKET_TAGS)

    @property
    def incident_count(self) -> int:
        return self.slot("incident_count")

    @property
    def total_loss_usd(self) -> int:
        return self.slot("total_loss_usd")


DEFAULT_MIN_COHORT_SIZE = 5
SMALL_COHORT_SIZE = 10


def combine_partials(
    partials: Sequence[PartialSum],
    num_servers: int,
    min_cohort_size: int = DEFAULT_MIN_COHORT_SIZE,
) -> AggregateReport:
    """Add the M partial sums mod p, recovering exact plaintext column sums.

    Requires exactly one partial from each of the ``num_servers`` servers, all
    for the same computation, cohort, and participant count.  Refuses cohorts
    below ``min_cohort_size``; warns below ``SMALL_COHORT_SIZE``.
    """
    if len(partials) != num_servers:
        raise MissingPartial(f"need {num_servers} partial sums, got {len(partials)}")
    indices = sorted(p.server_index for p in partials)
    if indices != list(range(1, num_servers + 1)):
        raise MissingPartial(f"need one partial from each server 1..{num_servers}, got indices {indices}")
    first = partials[0]
    for p in partials[1:]:
        if p.computation_id != first.computation_id:
            raise MismatchedPartials("partials from different computations")
        if p.cohort != first.cohort:
            raise MismatchedPartials("partials from different cohorts")
        if p.modulus != first.modulus:
            raise ModulusMismatch("partials use different moduli")
        if p.n != first.n:
            raise MismatchedPartials(f"participant counts disagree: {p.n} vs {first.n}")
        if len(p.slots) != len(first.slots):
            raise MismatchedPartials("slot counts disagree")
    if first.n < min_cohort_size:
        raise CohortTooSmall(f"cohort {first.cohort!r} has {first.n} participants, minimum is {min_cohort_size}")
    if first.n < SMALL_COHORT_SIZE:
        warnings.warn(
            f"cohort {first.cohort!r} has only {first.n} participants; averages will be noisy",
            SmallCohortWarning,
            stacklevel=2,
        )
    total = np.zeros(len(first.slots), dtype=np.uint64)
    for p in partials:
        total = (total + np.asarray(p.slots, dtype=np.uint64)) % _P
    return AggregateReport(
        computation_id=first.computation_id,
        cohort=first.cohort,
        n=first.n,
        slots=tuple(total.tolist()),
    )


# ---------------------------------------------------------------------------
# File form ("sneakernet" transport)
# ---------------------------------------------------------------------------
#
# Share bundles and partial sums serialize slot values as decimal strings:
# field elements exceed 2^53 and would be mangled by IEEE-754 JSON readers.

def share_bundle_to_dict(bundle: ShareBundle) -> dict:
    return {
        "kind": "share_bundle",
        "layout": LAYOUT_VERSION,
        "computation_id": bundle.computation_id,
        "cohort": bundle.cohort,
        "session_token": bundle.session_token,
        "server_index": bundle.server_index,
        "modulus": str(bundle.modulus),
        "slots": [str(s) for s in bundle.slots],
    }


def share_bundle_from_dict(data: Mapping) -> ShareBundle:
    if data.get("kind") != "share_bundle":
        raise MalformedSubmission("not a share bundle")
    return ShareBundle(
        computation_id=str(data["computation_id"]),
        cohort=str(data["cohort"]),
        session_token=str(data["session_token"]),
        server_index=int(data["server_index"]),
        modulus=int(data["modulus"]),
        slots=tuple(int(s) for s in data["slots"]),
    )


def partial_sum_to_dict(partial: PartialSum) -> dict:
    return {
        "kind": "partial_sum",
        "layout": LAYOUT_VERSION,
        "computation_id": partial.computation_id,
        "cohort": partial.cohort,
        "server_index": partial.server_index,
        "modulus": str(partial.modulus),
        "n": partial.n,
        "slots": [str(s) for s in partial.slots],
    }


def partial_sum_from_dict(data: Mapping) -> PartialSum:
    if data.get("kind") != "partial_sum":
        raise MalformedSubmission("not a partial sum")
    return PartialSum(
        computation_id=str(data["computation_id"]),
        cohort=str(data["cohort"]),
        server_index=int(data["server_index"]),
        modulus=int(data["modulus"]),
        n=int(data["n"]),
        slots=tuple(int(s) for s in data["slots"]),
    )


def aggregate_report_to_dict(report: AggregateReport) -> dict:
    # Combined sums are ordinary integers (far below 2^53); keep them numeric.
    return {
        "kind": "aggregate_report",
        "layout": report.layout,
        "computation_id": report.computation_id,
        "cohort": report.cohort,
        "n": report.n,
        "slots": {name: int(v) for name, v in zip(SLOT_NAMES, report.slots)},
    }


def aggregate_report_from_dict(data: Mapping) -> AggregateReport:
    if data.get("kind") != "aggregate_report":
        raise MalformedSubmission("not an aggregate report")
    slots = data["slots"]
    return AggregateReport(
        computation_id=str(data["computation_id"]),
        cohort=str(data["cohort"]),
        n=int(data["n"]),
        slots=tuple(int(slots[name]) for name in SLOT_NAMES),
    )


def write_json(path, payload: Mapping) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
