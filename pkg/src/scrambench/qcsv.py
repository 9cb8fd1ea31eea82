"""Spreadsheet-style CSV import for questionnaire responses.

Municipal staff fill the questionnaire in a spreadsheet; this accepts its CSV
export and converts it to the canonical JSON response.  The expected layout
is one row per question, keyed by the question code in the first column:

    code,label,not,partial,large,full
    0a,population,12000,,,
    1a,Deploy multi-factor authentication across the enterprise,,,x,
    2a,...,x,,,
    ...                                  (all 22 controls, any order)
    11a,significant incidents,1,,,
    11b,total losses usd,23058,,,
    12,failed controls,1a;2a,,,

Maturity rows mark exactly one of the four level columns with ``x`` (case
insensitive).  Numeric and selection rows put their value in the third
column.  ``0a`` may be left blank when the population is not reported; ``12``
lists failed control codes separated by semicolons.  The ``label`` column is
ignored on input.  Header row optional.
"""

from __future__ import annotations

import csv
import io
from typing import Dict, List, Optional

from .controls import CONTROL_BY_ID, CONTROL_IDS, MaturityLevel, ParticipantResponse

_LEVEL_COLUMNS = 4  # columns 3..6: not / partial / large / full


class QuestionnaireCSVError(ValueError):
    """The CSV does not follow the documented layout."""


def _is_header(row: List[str]) -> bool:
    return bool(row) and row[0].strip().lower() in ("code", "control", "question")


def parse_questionnaire_csv(text: str, participant_id: str) -> ParticipantResponse:
    """Parse one exported questionnaire into a canonical response."""
    maturity: Dict[str, MaturityLevel] = {}
    population: Optional[int] = None
    incident_count = 0
    total_loss = 0
    failed: List[str] = []
    seen: set = set()

    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not row[0].strip() or row[0].lstrip().startswith("#"):
            continue
        if lineno == 1 and _is_header(row):
            continue
        code = row[0].strip()
        if code in seen:
            raise QuestionnaireCSVError(f"line {lineno}: duplicate row for {code!r}")
        seen.add(code)
        cells = [c.strip() for c in row[1:]]
        value = cells[1] if len(cells) > 1 else ""

        if code == "0a":
            if value:
                try:
                    population = int(value.replace(",", ""))
                except ValueError:
                    raise QuestionnaireCSVError(f"line {lineno}: population must be a number, got {value!r}") from None
        elif code in CONTROL_BY_ID:
            marks = [i for i, cell in enumerate(cells[1:1 + _LEVEL_COLUMNS]) if cell.lower() == "x"]
            if len(marks) != 1:
                raise QuestionnaireCSVError(
                    f"line {lineno}: control {code} must mark exactly one level column with 'x'"
                )
            maturity[code] = MaturityLevel(marks[0])
        elif code == "11a":
            try:
                incident_count = int(value.replace(",", "")) if value else 0
            except ValueError:
                raise QuestionnaireCSVError(f"line {lineno}: incident count must be a number, got {value!r}") from None
        elif code == "11b":
            try:
                total_loss = int(value.replace(",", "").replace("$", "")) if value else 0
            except ValueError:
                raise QuestionnaireCSVError(f"line {lineno}: loss must be a number, got {value!r}") from None
        elif code == "12":
            failed = [c.strip() for c in value.split(";") if c.strip()]
        else:
            raise QuestionnaireCSVError(f"line {lineno}: unknown question code {code!r}")

    missing = [cid for cid in CONTROL_IDS if cid not in maturity]
    if missing:
        raise QuestionnaireCSVError(f"maturity rows missing for controls: {', '.join(missing)}")

    return ParticipantResponse(
        participant_id=participant_id,
        population=population,
        maturity=maturity,
        incident_count=incident_count,
        total_loss_usd=total_loss,
        failed_controls=frozenset(failed),
    )


def response_to_questionnaire_csv(resp: ParticipantResponse) -> str:
    """Inverse of :func:`parse_questionnaire_csv`, for round-trip checks."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["code", "label", "not", "partial", "large", "full"])
    writer.writerow(["0a", "population", "" if resp.population is None else resp.population, "", "", ""])
    for cid in CONTROL_IDS:
        marks = [""] * _LEVEL_COLUMNS
        marks[int(resp.maturity[cid])] = "x"
        writer.writerow([cid, CONTROL_BY_ID[cid].label, *marks])
    writer.writerow(["11a", "significant incidents", resp.incident_count, "", "", ""])
    writer.writerow(["11b", "total losses usd", resp.total_loss_usd, "", "", ""])
    from .controls import CONTROL_ORDER

    codes = ";".join(sorted(resp.failed_controls, key=lambda c: CONTROL_ORDER.get(c, 99)))
    writer.writerow(["12", "failed controls", codes, "", "", ""])
    return buf.getvalue()
