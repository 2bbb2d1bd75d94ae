"""Consistency checks and data-quality audits over record streams.

Checks never mutate records; all counters are additive so findings from
partitioned streams merge into the sequential result. Inconsistencies warn
but do not abort; strict mode is the caller's policy.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .schema import (
    CODED_FIELDS,
    CohortRecord,
    CodeBook,
    DEFAULT_CODEBOOK,
    SurveillanceRecord,
)

SEVERITY_INFO = "info"
SEVERITY_WARNING = "warning"
SEVERITY_INCONSISTENCY = "inconsistency"

#: How many offending row indices a finding retains.
EXAMPLE_LIMIT = 10


@dataclass
class Finding:
    check_id: str
    severity: str
    count: int
    description: str
    examples: list[int] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "severity": self.severity,
            "count": self.count,
            "description": self.description,
            "examples": list(self.examples),
        }


def is_male_pregnant(record: SurveillanceRecord) -> bool:
    return record.CS_SEXO == "M" and record.CS_GESTANT in (1, 2, 3, 4)


def is_male_puerperal(record: SurveillanceRecord) -> bool:
    return record.CS_SEXO == "M" and record.PUERPERA == 1


def _predicate_finding(
    records: Iterable[SurveillanceRecord],
    predicate,
    check_id: str,
    description: str,
) -> Finding:
    count = 0
    examples: list[int] = []
    for index, record in enumerate(records, start=1):
        if predicate(record):
            count += 1
            if len(examples) < EXAMPLE_LIMIT:
                examples.append(index)
    severity = SEVERITY_INCONSISTENCY if count else SEVERITY_INFO
    return Finding(check_id, severity, count, description, examples)


def check_male_pregnant(records: Iterable[SurveillanceRecord]) -> Finding:
    """Cases recorded as male with a pregnancy trimester code; expected 0."""
    return _predicate_finding(
        records,
        is_male_pregnant,
        "male_pregnant",
        "CS_SEXO=M with CS_GESTANT in 1..4",
    )


def check_male_puerperal(records: Iterable[SurveillanceRecord]) -> Finding:
    """Cases recorded as male and puerperal; expected 0."""
    return _predicate_finding(
        records,
        is_male_puerperal,
        "male_puerperal",
        "CS_SEXO=M with PUERPERA=1",
    )


def audited_fields(codebook: CodeBook = DEFAULT_CODEBOOK) -> tuple[str, ...]:
    """Coded fields whose domain is closed, i.e. where an undeclared code is
    reportable rather than merely unmodeled."""
    return tuple(
        name for name in CODED_FIELDS if not codebook.entry(name).open_domain
    )


def out_of_dictionary_findings(
    field_values: dict[str, Counter], codebook: CodeBook = DEFAULT_CODEBOOK
) -> list[Finding]:
    """Turn per-field value counts into one warning per (field, undocumented
    code) pair. Missing values are never out-of-dictionary."""
    findings = []
    for name in sorted(field_values):
        entry = codebook.entry(name)
        if entry.open_domain:
            continue
        counts = field_values[name]
        for code in sorted((c for c in counts if c is not None), key=str):
            if entry.in_domain(code):
                continue
            findings.append(
                Finding(
                    check_id=f"out_of_dictionary:{name}={code}",
                    severity=SEVERITY_WARNING,
                    count=counts[code],
                    description=(
                        f"{name}={code} has no entry in the data dictionary"
                    ),
                )
            )
    return findings


def missing_region_finding(unknown_count: int) -> Finding:
    return Finding(
        check_id="missing_region",
        severity=SEVERITY_WARNING if unknown_count else SEVERITY_INFO,
        count=unknown_count,
        description="cohort cases without state information (region unknown)",
    )


def fallback_state_findings(tokens: Counter) -> list[Finding]:
    """Unrecognized state tokens that the region rule sends to "north"."""
    return [
        Finding(
            check_id=f"unrecognized_state_token:{token}",
            severity=SEVERITY_WARNING,
            count=count,
            description=(
                f"SG_UF={token!r} is not a Brazilian state code; the region "
                "rule's fallback classified it as north"
            ),
        )
        for token, count in sorted(tokens.items())
    ]


def audit_out_of_dictionary(
    records: Iterable[SurveillanceRecord | CohortRecord],
    codebook: CodeBook = DEFAULT_CODEBOOK,
) -> list[Finding]:
    """Audit a stream: undocumented codes per coded field, plus the count of
    records without state information (the missing-region count). A stream
    with no anomalies yields an empty list."""
    fields = audited_fields(codebook)
    field_values: dict[str, Counter] = {name: Counter() for name in fields}
    no_state = 0
    for record in records:
        raw = record.record if isinstance(record, CohortRecord) else record
        for name in fields:
            field_values[name][getattr(raw, name)] += 1
        if raw.SG_UF is None:
            no_state += 1
    findings = out_of_dictionary_findings(field_values, codebook)
    if no_state:
        findings.append(missing_region_finding(no_state))
    return findings


def has_inconsistency(findings: Iterable[Finding]) -> bool:
    return any(f.severity == SEVERITY_INCONSISTENCY for f in findings)


def findings_report_obj(findings: Iterable[Finding]) -> dict:
    findings = list(findings)
    return {
        "inconsistencies": sum(
            1 for f in findings if f.severity == SEVERITY_INCONSISTENCY
        ),
        "warnings": sum(1 for f in findings if f.severity == SEVERITY_WARNING),
        "findings": [f.as_dict() for f in findings],
    }


def findings_report_text(findings: Iterable[Finding]) -> str:
    lines = []
    for f in findings:
        lines.append(f"[{f.severity:<13}] {f.check_id}: {f.count}  {f.description}")
        if f.examples:
            sample = ", ".join(str(i) for i in f.examples)
            lines.append(f"                 example rows: {sample}")
    return "\n".join(lines) + "\n"
