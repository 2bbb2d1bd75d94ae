"""Case-selection funnel: epidemiological window, week-53 correction, sex and
age filters, gestational/puerperal classification, cohort extraction.

All guards follow the source rules' three-valued logic: a comparison against
a missing value never matches, so evaluation falls through to later guards or
the default.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import ConfigurationError
from .schema import CohortRecord, EpiStamp, SurveillanceRecord

#: Funnel stage names, in the order the filters apply.
STAGE_NAMES: tuple[str, ...] = (
    "epi_window",
    "current_week",
    "female",
    "age_10_55",
    "obstetric",
)

GESTATIONAL_CLASSES: tuple[str, ...] = ("1tri", "2tri", "3tri", "IG_ig", "puerp")
NOT_OBSTETRIC = "não"


def assign_epi_stamp(record: SurveillanceRecord) -> EpiStamp | None:
    """Year of the onset date plus the notified week; None when the onset
    date is missing or failed to parse."""
    if record.DT_SIN_PRI is None:
        return None
    return EpiStamp(ano=record.DT_SIN_PRI.year, sem=record.SEM_PRI)


def in_epi_window(stamp: EpiStamp | None) -> bool:
    """Keep cases from week 8 of 2020 onward, and everything from 2021."""
    if stamp is None:
        return False
    if stamp.ano == 2021:
        return True
    return stamp.ano == 2020 and stamp.sem is not None and stamp.sem >= 8


def correct_week53(stamp: EpiStamp) -> EpiStamp:
    """Cases stamped (2021, week 53) belong to the last week of 2020.
    Idempotent; every other stamp is unchanged."""
    if stamp.ano == 2021 and stamp.sem == 53:
        return EpiStamp(ano=2020, sem=53)
    return stamp


def keep_for_current_week(stamp: EpiStamp, sem_current: int) -> bool:
    """Post-correction cut: 2020 cases stay, 2021 cases only up to the
    current epidemiological week."""
    if not 1 <= sem_current <= 53:
        raise ConfigurationError(
            f"current epidemiological week must be in 1..53, got {sem_current}"
        )
    if stamp.ano == 2020:
        return True
    return stamp.ano == 2021 and stamp.sem is not None and stamp.sem <= sem_current


def is_female(record: SurveillanceRecord) -> bool:
    return record.CS_SEXO == "F"


def in_age_range(record: SurveillanceRecord) -> bool:
    """Age filter as the pipeline defines it: NU_IDADE_N > 9 and <= 55."""
    age = record.NU_IDADE_N
    return age is not None and 9 < age <= 55


def classify_gestational_status(
    cs_gestant: int | None, puerpera: int | None
) -> str:
    """Gestational trimester or puerperium class; guards in listed order,
    missing never matches."""
    if cs_gestant == 1:
        return "1tri"
    if cs_gestant == 2:
        return "2tri"
    if cs_gestant == 3:
        return "3tri"
    if cs_gestant == 4:
        return "IG_ig"
    if cs_gestant == 5 and puerpera == 1:
        return "puerp"
    if cs_gestant == 9 and puerpera == 1:
        return "puerp"
    return NOT_OBSTETRIC


@dataclass(slots=True)
class FunnelStage:
    name: str
    n_in: int
    n_out: int
    removed: int
    detail: dict[str, int] = field(default_factory=dict)


@dataclass
class FunnelReport:
    """Record counts after each selection stage; conserves counts
    (out = in - removed, and each stage's out feeds the next stage)."""

    stages: list[FunnelStage] = field(default_factory=list)

    @property
    def total_in(self) -> int:
        return self.stages[0].n_in if self.stages else 0

    @property
    def cohort_out(self) -> int:
        return self.stages[-1].n_out if self.stages else 0

    def check_conservation(self) -> None:
        previous_out = None
        for stage in self.stages:
            if stage.n_out != stage.n_in - stage.removed:
                raise AssertionError(f"stage {stage.name} does not balance")
            if previous_out is not None and stage.n_in != previous_out:
                raise AssertionError(f"stage {stage.name} input mismatch")
            if stage.detail and sum(stage.detail.values()) != stage.removed:
                raise AssertionError(f"stage {stage.name} detail mismatch")
            previous_out = stage.n_out

    def rows(self) -> list[dict]:
        return [
            {
                "stage": s.name,
                "in": s.n_in,
                "out": s.n_out,
                "removed": s.removed,
                **({"removed_detail": dict(s.detail)} if s.detail else {}),
            }
            for s in self.stages
        ]

    def to_text(self) -> str:
        lines = [f"{'stage':<14}{'in':>12}{'out':>12}{'removed':>12}"]
        for s in self.stages:
            lines.append(f"{s.name:<14}{s.n_in:>12}{s.n_out:>12}{s.removed:>12}")
            for key, count in s.detail.items():
                lines.append(f"  {key:<21}{count:>27}")
        return "\n".join(lines) + "\n"

    def to_csv_rows(self) -> list[list[str]]:
        rows = [["stage", "in", "out", "removed"]]
        for s in self.stages:
            rows.append([s.name, str(s.n_in), str(s.n_out), str(s.removed)])
        return rows


class FunnelCounters:
    """Additive stage counters. Per-partition counters merge by addition, so
    the funnel is independent of how the stream was split."""

    __slots__ = (
        "n_in",
        "removed_missing_stamp",
        "removed_outside_window",
        "removed_current_week",
        "removed_not_female",
        "removed_age",
        "removed_not_obstetric",
        "cohort",
    )

    def __init__(self):
        self.n_in = 0
        self.removed_missing_stamp = 0
        self.removed_outside_window = 0
        self.removed_current_week = 0
        self.removed_not_female = 0
        self.removed_age = 0
        self.removed_not_obstetric = 0
        self.cohort = 0

    def merge(self, other: "FunnelCounters") -> None:
        for name in self.__slots__:
            setattr(self, name, getattr(self, name) + getattr(other, name))

    def report(self) -> FunnelReport:
        report = FunnelReport()
        n = self.n_in
        removed = self.removed_missing_stamp + self.removed_outside_window
        report.stages.append(
            FunnelStage(
                "epi_window",
                n,
                n - removed,
                removed,
                detail={
                    "missing_onset_date": self.removed_missing_stamp,
                    "outside_window": self.removed_outside_window,
                },
            )
        )
        n -= removed
        for name, removed in (
            ("current_week", self.removed_current_week),
            ("female", self.removed_not_female),
            ("age_10_55", self.removed_age),
            ("obstetric", self.removed_not_obstetric),
        ):
            report.stages.append(FunnelStage(name, n, n - removed, removed))
            n -= removed
        return report


def select_obstetric_cohort(
    records: Iterable[SurveillanceRecord],
    sem_current: int,
    counters: FunnelCounters | None = None,
) -> Iterator[CohortRecord]:
    """Run the full selection funnel over a record stream, yielding cohort
    records with ``classi_gesta_puerp`` populated.

    ``counters`` (mutated in place) accumulates the funnel; call
    ``counters.report()`` after consuming the stream.
    """
    if not 1 <= sem_current <= 53:
        raise ConfigurationError(
            f"current epidemiological week must be in 1..53, got {sem_current}"
        )
    if counters is None:
        counters = FunnelCounters()

    def _selected() -> Iterator[CohortRecord]:
        for record in records:
            counters.n_in += 1
            stamp = assign_epi_stamp(record)
            if stamp is None:
                counters.removed_missing_stamp += 1
                continue
            if not in_epi_window(stamp):
                counters.removed_outside_window += 1
                continue
            stamp = correct_week53(stamp)
            if not keep_for_current_week(stamp, sem_current):
                counters.removed_current_week += 1
                continue
            if not is_female(record):
                counters.removed_not_female += 1
                continue
            if not in_age_range(record):
                counters.removed_age += 1
                continue
            status = classify_gestational_status(record.CS_GESTANT, record.PUERPERA)
            if status == NOT_OBSTETRIC:
                counters.removed_not_obstetric += 1
                continue
            counters.cohort += 1
            yield CohortRecord(record=record, classi_gesta_puerp=status)

    return _selected()
