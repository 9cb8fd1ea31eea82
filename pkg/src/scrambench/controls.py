"""Control catalog, maturity scale, questionnaire responses, and cohorts.

The questionnaire asks a municipality three things: how far along it is on each
of 22 security controls (a four-level maturity scale), how many significant
incidents it suffered over the observation window, and the total losses those
incidents caused, attributed to up to five controls whose failure contributed
most.  This module defines the catalog, the response record, its validation
rules, and the population cohorts responses are grouped into.

A response travels as a single JSON object::

    {
      "participant_id": "town-017",
      "population": 12000,
      "maturity": {"1a": "large", "2a": "not", ...},   # all 22 controls
      "incident_count": 1,
      "total_loss_usd": 23058,
      "failed_controls": ["1a", "2a"]
    }

``population`` may be null or absent.  ``participant_id`` is local bookkeeping
only; the aggregation layer never transmits it.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------

# Losses below this floor do not count as significant incidents.
SIGNIFICANCE_FLOOR_USD = 1_000

# A respondent attributes losses to at most this many failed controls.
MAX_FAILED_CONTROLS = 5


@dataclass(frozen=True)
class Control:
    """One catalog entry, e.g. code ``5b`` in category 5 (Training)."""

    code: str
    category_index: int
    sub_letter: str
    category: str
    label: str


CONTROLS: tuple = (
    Control("1a", 1, "a", "MFA", "Deploy multi-factor authentication across the enterprise"),
    Control("2a", 2, "a", "EDR", "Deploy an endpoint detection and response (EDR) system / host-based IPS agent"),
    Control("2b", 2, "b", "EDR", "Hunt for malicious activity"),
    Control("3a", 3, "a", "Encryption", "Encrypt data in transit"),
    Control("3b", 3, "b", "Encryption", "Encrypt data at rest"),
    Control("4a", 4, "a", "Empowerment", "Remove barriers to sharing threat intelligence"),
    Control("4b", 4, "b", "Empowerment", "Receive external threat intelligence"),
    Control("5a", 5, "a", "Training", "Evaluate employee skills"),
    Control("5b", 5, "b", "Training", "Deliver regular training"),
    Control("6a", 6, "a", "Backup", "Perform regular backups of systems"),
    Control("6b", 6, "b", "Backup", "Test backup data"),
    Control("6c", 6, "c", "Backup", "Protect backups"),
    Control("6d", 6, "d", "Backup", "Store backups in offline location"),
    Control("7a", 7, "a", "Patch", "Deploy updates and patches in a timely manner"),
    Control("7b", 7, "b", "Patch", "Implement a centralized patch management system"),
    Control("7c", 7, "c", "Patch", "Apply patches using a risk-based approach"),
    Control("8a", 8, "a", "Incident response", "Codify an incident response plan"),
    Control("8b", 8, "b", "Incident response", "Test your incident response plan"),
    Control("8c", 8, "c", "Incident response", "Maintain your incident response plan"),
    Control("9a", 9, "a", "Check the work", "Establish an external penetration testing program"),
    Control("9b", 9, "b", "Check the work", "Perform red team exercises"),
    Control("10a", 10, "a", "Segment", "Adopt network segmentation to ensure isolation of critical systems in an attack"),
)

CONTROL_IDS: tuple = tuple(c.code for c in CONTROLS)
CONTROL_BY_ID: Dict[str, Control] = {c.code: c for c in CONTROLS}

# Catalog position, used for deterministic ordering and tie-breaks.
CONTROL_ORDER: Dict[str, int] = {c.code: i for i, c in enumerate(CONTROLS)}


# ---------------------------------------------------------------------------
# Maturity scale
# ---------------------------------------------------------------------------

class MaturityLevel(enum.IntEnum):
    """Four-level implementation scale; the index doubles as the raw score."""

    NOT_IMPLEMENTED = 0
    PARTIALLY_IMPLEMENTED = 1
    LARGELY_IMPLEMENTED = 2
    FULLY_IMPLEMENTED = 3

    @property
    def score(self) -> float:
        """Score on [0, 1]: index / 3."""
        return self.value / 3.0

    @property
    def display_percent(self) -> int:
        """Rounded percentage used in human-facing tables: 0/33/67/100."""
        return round(self.value / 3.0 * 100)

    @property
    def wire(self) -> str:
        return _LEVEL_TO_WIRE[self]

    @property
    def display_name(self) -> str:
        return _LEVEL_TO_DISPLAY[self]


_WIRE_TO_LEVEL: Dict[str, MaturityLevel] = {
    "not": MaturityLevel.NOT_IMPLEMENTED,
    "partial": MaturityLevel.PARTIALLY_IMPLEMENTED,
    "large": MaturityLevel.LARGELY_IMPLEMENTED,
    "full": MaturityLevel.FULLY_IMPLEMENTED,
}
_LEVEL_TO_WIRE: Dict[MaturityLevel, str] = {v: k for k, v in _WIRE_TO_LEVEL.items()}
_LEVEL_TO_DISPLAY: Dict[MaturityLevel, str] = {
    MaturityLevel.NOT_IMPLEMENTED: "Not implemented",
    MaturityLevel.PARTIALLY_IMPLEMENTED: "Partially implemented",
    MaturityLevel.LARGELY_IMPLEMENTED: "Largely implemented",
    MaturityLevel.FULLY_IMPLEMENTED: "Fully implemented",
}

MATURITY_WIRE_VALUES = tuple(_WIRE_TO_LEVEL)  # ("not", "partial", "large", "full")


def parse_maturity(value: str) -> MaturityLevel:
    """Parse the wire encoding ``not|partial|large|full`` (case-insensitive)."""
    try:
        return _WIRE_TO_LEVEL[value.strip().lower()]
    except (KeyError, AttributeError):
        raise ValueError(f"unknown maturity level: {value!r}") from None


# ---------------------------------------------------------------------------
# Responses and validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParticipantResponse:
    """One municipality's completed questionnaire."""

    participant_id: str
    population: Optional[int]
    maturity: Mapping[str, MaturityLevel]
    incident_count: int
    total_loss_usd: int
    failed_controls: frozenset = frozenset()

    def maturity_index(self, control_id: str) -> int:
        return int(self.maturity[control_id])


@dataclass(frozen=True)
class Violation:
    """One validation failure; ``code`` is stable, ``message`` is for humans."""

    code: str
    message: str
    field: Optional[str] = None


def validate_response(resp: ParticipantResponse) -> List[Violation]:
    """Check a response against the questionnaire rules.

    Returns an empty list when the response is acceptable.  Violations are
    data, not exceptions: a batch importer reports all of them at once.
    """
    out: List[Violation] = []

    if not resp.participant_id or not isinstance(resp.participant_id, str):
        out.append(Violation("MissingParticipantId", "participant_id must be a non-empty string", "participant_id"))

    if resp.population is not None:
        if not isinstance(resp.population, int) or isinstance(resp.population, bool) or resp.population < 0:
            out.append(Violation("InvalidPopulation", f"population must be a non-negative integer or absent, got {resp.population!r}", "population"))

    missing = [cid for cid in CONTROL_IDS if cid not in resp.maturity]
    if missing:
        out.append(Violation("MissingMaturity", f"maturity missing for controls: {', '.join(missing)}", "maturity"))
    unknown = sorted(set(resp.maturity) - set(CONTROL_IDS), key=str)
    if unknown:
        out.append(Violation("UnknownControl", f"maturity given for unknown controls: {', '.join(unknown)}", "maturity"))

    if not isinstance(resp.incident_count, int) or isinstance(resp.incident_count, bool) or resp.incident_count < 0:
        out.append(Violation("InvalidIncidentCount", f"incident_count must be a non-negative integer, got {resp.incident_count!r}", "incident_count"))
        return out  # the loss rules below assume a usable count

    if not isinstance(resp.total_loss_usd, int) or isinstance(resp.total_loss_usd, bool) or resp.total_loss_usd < 0:
        out.append(Violation("InvalidLoss", f"total_loss_usd must be a non-negative integer, got {resp.total_loss_usd!r}", "total_loss_usd"))
        return out

    if resp.incident_count == 0:
        if resp.total_loss_usd != 0:
            out.append(Violation("LossWithoutIncident", "total_loss_usd must be 0 when incident_count is 0", "total_loss_usd"))
        if resp.failed_controls:
            out.append(Violation("UnexpectedFailureAttribution", "failed_controls must be empty when incident_count is 0", "failed_controls"))
    else:
        if resp.total_loss_usd < SIGNIFICANCE_FLOOR_USD:
            out.append(Violation(
                "LossBelowSignificanceFloor",
                f"incidents reported but total_loss_usd {resp.total_loss_usd} is below the ${SIGNIFICANCE_FLOOR_USD:,} significance floor",
                "total_loss_usd",
            ))
        if not resp.failed_controls:
            out.append(Violation("MissingFailureAttribution", "incidents reported but no failed_controls selected", "failed_controls"))
        elif len(resp.failed_controls) > MAX_FAILED_CONTROLS:
            out.append(Violation("TooManyFailedControls", f"at most {MAX_FAILED_CONTROLS} failed_controls may be selected, got {len(resp.failed_controls)}", "failed_controls"))
        bad = sorted(set(resp.failed_controls) - set(CONTROL_IDS), key=str)
        if bad:
            out.append(Violation("UnknownControl", f"failed_controls references unknown controls: {', '.join(bad)}", "failed_controls"))

    return out


# ---------------------------------------------------------------------------
# JSON round-trip
# ---------------------------------------------------------------------------

def response_to_dict(resp: ParticipantResponse) -> dict:
    return {
        "participant_id": resp.participant_id,
        "population": resp.population,
        "maturity": {cid: resp.maturity[cid].wire for cid in CONTROL_IDS if cid in resp.maturity},
        "incident_count": resp.incident_count,
        "total_loss_usd": resp.total_loss_usd,
        "failed_controls": sorted(resp.failed_controls, key=lambda c: CONTROL_ORDER.get(c, 99)),
    }


def response_from_dict(data: Mapping) -> ParticipantResponse:
    """Build a response from parsed JSON.  Raises ValueError on shape errors.

    Shape errors (wrong types, unknown maturity strings) are not the same as
    rule violations: the latter come back from :func:`validate_response`.
    """
    if not isinstance(data, Mapping):
        raise ValueError("response must be a JSON object")
    maturity_raw = data.get("maturity")
    if not isinstance(maturity_raw, Mapping):
        raise ValueError("maturity must be an object mapping control ids to levels")
    maturity = {str(cid): parse_maturity(level) for cid, level in maturity_raw.items()}
    population = data.get("population")
    return ParticipantResponse(
        participant_id=str(data.get("participant_id", "")),
        population=population if population is None else int(population),
        maturity=maturity,
        incident_count=int(data.get("incident_count", 0)),
        total_loss_usd=int(data.get("total_loss_usd", 0)),
        failed_controls=frozenset(str(c) for c in data.get("failed_controls", ())),
    )


def load_response(path) -> ParticipantResponse:
    with open(path, "r", encoding="utf-8") as fh:
        return response_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Cohorts
# ---------------------------------------------------------------------------

COHORT_ALL = "all"
COHORT_NO_POPULATION = "no_population"

# (tag, display name, inclusive lower bound, exclusive upper bound)
POPULATION_BANDS = (
    ("pop_gt_25k", "Population over 25,000", 25_000, None),
    ("pop_15k_25k", "Population 15,000 to 25,000", 15_000, 25_000),
    ("pop_5k_15k", "Population 5,000 to 15,000", 5_000, 15_000),
    ("pop_lt_5k", "Population under 5,000", 0, 5_000),
)

COHORT_TAGS = (COHORT_ALL,) + tuple(b[0] for b in POPULATION_BANDS) + (COHORT_NO_POPULATION,)

COHORT_DISPLAY_NAMES: Dict[str, str] = {
    COHORT_ALL: "All municipalities",
    COHORT_NO_POPULATION: "No population reported",
    **{tag: name for tag, name, _, _ in POPULATION_BANDS},
}


def population_cohort(population: Optional[int]) -> str:
    """The single population-band tag a municipality falls into."""
    if population is None:
        return COHORT_NO_POPULATION
    for tag, _name, lo, hi in POPULATION_BANDS:
        if population >= lo and (hi is None or population < hi):
            return tag
    raise ValueError(f"population out of range: {population!r}")


def assign_cohorts(resp: ParticipantResponse) -> List[str]:
    """Every response lands in ``all`` plus exactly one population band."""
    return [COHORT_ALL, population_cohort(resp.population)]
