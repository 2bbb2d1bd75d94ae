"""Seeded generator of snapshot-shaped synthetic files with controllable
marginals and planted anomalies.

The generator emits files in the exact ingest dialect (semicolon delimiter,
ISO-8859-2 bytes, header row, minimal quoting) plus a JSON manifest of true
per-field counts and planted anomaly locations. The manifest is computed from
what was actually written, which makes every pipeline stage testable against
planted truth. Output is a pure function of (config, seed): blocks draw from
independently derived RNG streams, so generation could proceed per block in
parallel without changing a byte.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError
from .schema import FIELD_NAMES

_BLOCK_SIZE = 50_000

#: Free-text pools stay within the ISO-8859-2 repertoire on purpose.
_DEFAULT_FIELD_PROBS: dict[str, list[tuple[str, float]]] = {
    "CS_SEXO": [("F", 0.52), ("M", 0.44), ("I", 0.02), ("", 0.02)],
    "CS_GESTANT": [
        ("", 0.30),
        ("1", 0.010),
        ("2", 0.015),
        ("3", 0.022),
        ("4", 0.006),
        ("5", 0.350),
        ("6", 0.252),
        ("9", 0.045),
    ],
    "PUERPERA": [("", 0.60), ("1", 0.006), ("2", 0.369), ("9", 0.025)],
    "CLASSI_FIN": [
        ("", 0.105),
        ("1", 0.010),
        ("2", 0.010),
        ("3", 0.005),
        ("4", 0.370),
        ("5", 0.500),
    ],
    "PCR_SARS2": [("1", 0.30), ("", 0.70)],
    "DS_PCR_OUT": [
        ("", 0.915),
        ("COVID-19", 0.020),
        ("NOVO CORONAVIRUS", 0.010),
        ("SARS-COV-2 DETECTÁVEL", 0.010),
        ("VIRUS SINCICIAL", 0.020),
        ("INFLUENZA A; H3N2", 0.010),
        ("CIVID", 0.005),
        ("AGUARDANDO\nRESULTADO", 0.002),
        ("NEGATIVO", 0.008),
    ],
    "AN_SARS2": [("1", 0.10), ("", 0.90)],
    "DS_AN_OUT": [
        ("", 0.950),
        ("COVID", 0.010),
        ("CORONA", 0.005),
        ("CONA", 0.002),
        ("TESTE RÁPIDO", 0.030),
        ("NEGATIVO", 0.003),
    ],
    "RES_IGG": [("1", 0.05), ("2", 0.10), ("", 0.85)],
    "RES_IGM": [("1", 0.03), ("2", 0.10), ("", 0.87)],
    "RES_IGA": [("1", 0.01), ("2", 0.05), ("", 0.94)],
    "SG_UF": [
        ("SP", 0.220),
        ("RJ", 0.090),
        ("MG", 0.080),
        ("ES", 0.020),
        ("PR", 0.050),
        ("SC", 0.040),
        ("RS", 0.050),
        ("GO", 0.030),
        ("MT", 0.020),
        ("MS", 0.015),
        ("DF", 0.025),
        ("BA", 0.060),
        ("CE", 0.045),
        ("PE", 0.040),
        ("MA", 0.025),
        ("PB", 0.015),
        ("PI", 0.012),
        ("RN", 0.012),
        ("AL", 0.012),
        ("SE", 0.010),
        ("AM", 0.040),
        ("PA", 0.040),
        ("AC", 0.005),
        ("AP", 0.005),
        ("RO", 0.010),
        ("RR", 0.004),
        ("TO", 0.008),
        ("EX", 0.0005),
        ("", 0.0165),
    ],
    "CO_MUN_RES": [
        ("3550308", 0.30),
        ("3304557", 0.15),
        ("3106200", 0.10),
        ("2927408", 0.10),
        ("4106902", 0.10),
        ("2304400", 0.10),
        ("1302603", 0.07),
        ("5208707", 0.05),
        ("", 0.03),
    ],
    "CO_MU_INTE": [
        ("3550308", 0.25),
        ("3304557", 0.12),
        ("3106200", 0.08),
        ("2927408", 0.08),
        ("4106902", 0.08),
        ("2304400", 0.08),
        ("1302603", 0.05),
        ("5208707", 0.04),
        ("", 0.22),
    ],
    "CS_RACA": [
        ("1", 0.35),
        ("2", 0.08),
        ("3", 0.01),
        ("4", 0.35),
        ("5", 0.01),
        ("9", 0.10),
        ("", 0.10),
    ],
    "CS_ESCOL_N": [
        ("0", 0.03),
        ("1", 0.10),
        ("2", 0.15),
        ("3", 0.25),
        ("4", 0.12),
        ("9", 0.20),
        ("", 0.15),
    ],
    "HOSPITAL": [("1", 0.75), ("2", 0.15), ("9", 0.05), ("", 0.05)],
    "HISTO_VGM": [("1", 0.01), ("2", 0.60), ("9", 0.19), ("", 0.20)],
    "SURTO_SG": [("1", 0.05), ("2", 0.55), ("9", 0.20), ("", 0.20)],
    "NOSOCOMIAL": [("1", 0.02), ("2", 0.60), ("9", 0.18), ("", 0.20)],
    "AVE_SUINO": [("1", 0.01), ("2", 0.60), ("9", 0.19), ("", 0.20)],
    "VACINA": [("1", 0.20), ("2", 0.45), ("9", 0.20), ("", 0.15)],
    "ANTIVIRAL": [("1", 0.20), ("2", 0.03), ("3", 0.05), ("", 0.72)],
    "CS_ZONA": [("1", 0.70), ("2", 0.15), ("3", 0.03), ("9", 0.05), ("", 0.07)],
    "UTI": [("1", 0.12), ("2", 0.70), ("9", 0.08), ("", 0.10)],
    "SUPORT_VEN": [
        ("1", 0.05),
        ("2", 0.25),
        ("3", 0.50),
        ("9", 0.10),
        ("", 0.10),
    ],
    "EVOLUCAO": [("1", 0.70), ("2", 0.05), ("3", 0.01), ("9", 0.10), ("", 0.14)],
}

for _symptom, _w_yes in (
    ("FEBRE", 0.60),
    ("TOSSE", 0.65),
    ("GARGANTA", 0.20),
    ("DISPNEIA", 0.50),
    ("DESC_RESP", 0.40),
    ("SATURACAO", 0.35),
    ("DIARREIA", 0.08),
    ("VOMITO", 0.07),
    ("DOR_ABD", 0.04),
    ("FADIGA", 0.15),
    ("PERD_OLFT", 0.10),
    ("PERD_PALA", 0.10),
):
    _DEFAULT_FIELD_PROBS[_symptom] = [
        ("1", _w_yes),
        ("2", round(0.80 - _w_yes, 6)),
        ("9", 0.05),
        ("", 0.15),
    ]

for _comorbidity, _w_yes in (
    ("CARDIOPATI", 0.10),
    ("HEMATOLOGI", 0.01),
    ("HEPATICA", 0.01),
    ("ASMA", 0.05),
    ("DIABETES", 0.10),
    ("NEUROLOGIC", 0.02),
    ("PNEUMOPATI", 0.02),
    ("IMUNODEPRE", 0.02),
    ("RENAL", 0.02),
    ("OBESIDADE", 0.08),
):
    _DEFAULT_FIELD_PROBS[_comorbidity] = [
        ("1", _w_yes),
        ("2", round(0.60 - _w_yes, 6)),
        ("9", 0.10),
        ("", 0.30),
    ]

# Ages 0..95 uniform, with a small missing mass.
_AGE_MISSING = 0.005
_DEFAULT_FIELD_PROBS["NU_IDADE_N"] = [
    (str(age), (1.0 - _AGE_MISSING) / 96) for age in range(96)
] + [("", _AGE_MISSING)]

_DEFAULT_WEEK_PROBS: dict[int, list[tuple[str, float]]] = {
    # 2020: all 53 weeks, lighter before week 8 so the window filter bites.
    2020: [(str(w), (0.2 if w < 8 else 1.0)) for w in range(1, 54)],
    # 2021: weeks 1..17 so a week-16 cut removes something.
    2021: [(str(w), 1.0) for w in range(1, 18)],
}

ANOMALY_KINDS = ("male_pregnant", "out_of_dictionary", "malformed", "week53_2021")


@dataclass(frozen=True)
class AnomalyRates:
    male_pregnant: float = 0.0
    out_of_dictionary: float = 0.0
    malformed: float = 0.0
    week53_2021: float = 0.0

    def __post_init__(self):
        for kind in ANOMALY_KINDS:
            rate = getattr(self, kind)
            if not 0.0 <= rate <= 1.0:
                raise ConfigurationError(f"anomaly rate {kind} must be in [0,1]")


@dataclass
class SynthConfig:
    """Shape of a synthetic snapshot pair: rows per declared year, seed,
    per-field category probabilities (value "" is the missing mass) and
    anomaly rates. ``week_probs_by_year`` holds relative weights per week
    (including an optional "" entry), not normalized probabilities."""

    rows_by_year: dict[int, int]
    seed: int = 0
    field_probs: dict[str, list[tuple[str, float]]] = field(default_factory=dict)
    week_probs_by_year: dict[int, list[tuple[str, float]]] = field(
        default_factory=dict
    )
    anomalies: AnomalyRates = field(default_factory=AnomalyRates)
    date_missing_rate: float = 0.012
    date_invalid_rate: float = 0.002

    def __post_init__(self):
        for year in self.rows_by_year:
            if year not in (2020, 2021):
                raise ConfigurationError(f"snapshot year must be 2020 or 2021: {year}")
            if self.rows_by_year[year] < 0:
                raise ConfigurationError("row counts must be non-negative")
        for name, probs in {**_DEFAULT_FIELD_PROBS, **self.field_probs}.items():
            total = sum(w for _v, w in probs)
            if abs(total - 1.0) > 1e-6:
                raise ConfigurationError(
                    f"probabilities for {name} sum to {total:.6f}, expected 1"
                )

    @property
    def rows(self) -> int:
        return sum(self.rows_by_year.values())

    def probs_for(self, field_name: str) -> list[tuple[str, float]]:
        return self.field_probs.get(field_name, _DEFAULT_FIELD_PROBS[field_name])

    def week_probs_for(self, year: int) -> list[tuple[str, float]]:
        return self.week_probs_by_year.get(year, _DEFAULT_WEEK_PROBS[year])


@dataclass
class SynthResult:
    files: dict[int, Path]
    manifest_path: Path
    manifest: dict


def _rng(seed: int, *scope) -> random.Random:
    return random.Random(":".join([str(seed), *map(str, scope)]))


def _date_pool(year: int) -> list[str]:
    start = dt.date(year, 1, 1).toordinal()
    end = dt.date(year, 12, 31).toordinal()
    return [dt.date.fromordinal(o).strftime("%d/%m/%Y") for o in range(start, end + 1)]


def _plan_anomalies(
    config: SynthConfig, year: int, n_rows: int
) -> dict[int, str]:
    """Choose disjoint row indices (0-based within the year file) per anomaly
    kind. Week-53/2021 stamps are only planted on 2021-file rows."""
    rng = _rng(config.seed, "plan", year)
    wanted: list[tuple[str, int]] = []
    for kind in ANOMALY_KINDS:
        if kind == "week53_2021" and year != 2021:
            continue
        count = round(getattr(config.anomalies, kind) * n_rows)
        if count:
            wanted.append((kind, count))
    total = sum(c for _k, c in wanted)
    if total == 0:
        return {}
    if total > n_rows:
        raise ConfigurationError("anomaly rates exceed the available rows")
    indices = rng.sample(range(n_rows), total)
    plan: dict[int, str] = {}
    cursor = 0
    for kind, count in wanted:
        for idx in indices[cursor : cursor + count]:
            plan[idx] = kind
        cursor += count
    return plan


def _in_window_stamp(rng: random.Random, year: int) -> tuple[str, str]:
    """(DT_SIN_PRI, SEM_PRI) guaranteed to survive the epidemiological window
    and a week-16 current-week cut."""
    if year == 2020:
        week = rng.randint(8, 53)
    else:
        week = rng.randint(1, 16)
    pool = _date_pool(year)
    return rng.choice(pool), str(week)


def _patch_row(
    row: list[str],
    kind: str,
    config: SynthConfig,
    year: int,
    index: int,
    col: dict[str, int],
) -> list[str]:
    rng = _rng(config.seed, "patch", kind, year, index)
    if kind == "male_pregnant":
        date, week = _in_window_stamp(rng, year)
        row[col["DT_SIN_PRI"]] = date
        row[col["SEM_PRI"]] = week
        row[col["CS_SEXO"]] = "M"
        row[col["CS_GESTANT"]] = str(rng.randint(1, 4))
        row[col["PUERPERA"]] = "2"
    elif kind == "out_of_dictionary":
        date, week = _in_window_stamp(rng, year)
        row[col["DT_SIN_PRI"]] = date
        row[col["SEM_PRI"]] = week
        row[col["CS_GESTANT"]] = "0"
    elif kind == "week53_2021":
        row[col["DT_SIN_PRI"]] = rng.choice(("01/01/2021", "02/01/2021"))
        row[col["SEM_PRI"]] = "53"
    elif kind == "malformed":
        if index % 2 == 0:
            row[col["NU_IDADE_N"]] = "NI"
        else:
            row = row[:-1]  # column count mismatch
    return row


def _generate_year(
    config: SynthConfig, year: int, path: Path
) -> tuple[Counter, dict[str, Counter], dict[str, list[int]]]:
    """Write one year's file; returns (week/year joint counts, per-field value
    counts, anomaly row indices). Counts cover well-formed rows only."""
    import csv

    n_rows = config.rows_by_year[year]
    plan = _plan_anomalies(config, year, n_rows)
    anomaly_rows: dict[str, list[int]] = {kind: [] for kind in ANOMALY_KINDS}
    field_counts: dict[str, Counter] = {name: Counter() for name in FIELD_NAMES}
    week_year_counts: Counter = Counter()
    col = {name: i for i, name in enumerate(FIELD_NAMES)}

    date_pool = _date_pool(year)
    date_population = date_pool + ["", f"31/02/{year}"]
    ndays = len(date_pool)
    keep = 1.0 - config.date_missing_rate - config.date_invalid_rate
    date_weights = [keep / ndays] * ndays + [
        config.date_missing_rate,
        config.date_invalid_rate,
    ]
    week_probs = config.week_probs_for(year)
    week_population = [v for v, _w in week_probs]
    week_weights = [w for _v, w in week_probs]

    with open(path, "w", encoding="ISO-8859-2", newline="") as handle:
        writer = csv.writer(handle, delimiter=";", lineterminator="\n")
        writer.writerow(FIELD_NAMES)
        for block_start in range(0, n_rows, _BLOCK_SIZE):
            block_n = min(_BLOCK_SIZE, n_rows - block_start)
            rng = _rng(config.seed, "block", year, block_start)
            columns: list[list[str]] = []
            for name in FIELD_NAMES:
                if name == "DT_SIN_PRI":
                    columns.append(
                        rng.choices(date_population, date_weights, k=block_n)
                    )
                elif name == "SEM_PRI":
                    columns.append(
                        rng.choices(week_population, week_weights, k=block_n)
                    )
                else:
                    probs = config.probs_for(name)
                    columns.append(
                        rng.choices(
                            [v for v, _w in probs],
                            [w for _v, w in probs],
                            k=block_n,
                        )
                    )
            sex_i, gest_i, puerp_i = col["CS_SEXO"], col["CS_GESTANT"], col["PUERPERA"]
            date_i, week_i = col["DT_SIN_PRI"], col["SEM_PRI"]
            countable: list = []
            for offset, cells in enumerate(zip(*columns)):
                index = block_start + offset
                row = list(cells)
                # Base rows are consistent like the real data: males are never
                # pregnant or puerperal. Planted anomalies break this below.
                if row[sex_i] == "M":
                    if row[gest_i] in ("1", "2", "3", "4"):
                        row[gest_i] = "6"
                    if row[puerp_i] == "1":
                        row[puerp_i] = "2"
                kind = plan.get(index)
                if kind is not None:
                    anomaly_rows[kind].append(index + 1)  # 1-based data rows
                    row = _patch_row(row, kind, config, year, index, col)
                writer.writerow(row)
                if kind != "malformed":
                    countable.append(row)
            # manifest counts reflect what was actually written (well-formed
            # rows only); columnwise Counter.update keeps this cheap at scale
            for j, name in enumerate(FIELD_NAMES):
                field_counts[name].update(r[j] for r in countable)
            week_year_counts.update(
                f"{r[date_i][6:]}:{r[week_i]}"
                for r in countable
                if r[date_i] and not r[date_i].startswith("31/02/")
            )
    return week_year_counts, field_counts, anomaly_rows


def generate(config: SynthConfig, out_dir: str | Path) -> SynthResult:
    """Generate snapshot file(s) plus the ground-truth manifest.

    One file per declared year (``snapshot_<year>.csv``) and
    ``manifest.json`` are written under ``out_dir``.
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"cannot create output directory: {exc}") from exc

    files: dict[int, Path] = {}
    manifest: dict = {
        "seed": config.seed,
        "rows_by_year": {str(y): n for y, n in sorted(config.rows_by_year.items())},
        "anomaly_rates": {
            kind: getattr(config.anomalies, kind) for kind in ANOMALY_KINDS
        },
        "files": {},
        "field_counts": {},
        "week_year_counts": {},
        "anomalies": {},
    }
    total_field_counts: dict[str, Counter] = {name: Counter() for name in FIELD_NAMES}
    total_week_year: Counter = Counter()
    total_anomalies: dict[str, dict[str, list[int]]] = {
        kind: {} for kind in ANOMALY_KINDS
    }

    for year in sorted(config.rows_by_year):
        path = out_dir / f"snapshot_{year}.csv"
        try:
            week_year, field_counts, anomaly_rows = _generate_year(config, year, path)
        except OSError as exc:
            raise ConfigurationError(f"cannot write snapshot {path}: {exc}") from exc
        files[year] = path
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        manifest["files"][str(year)] = {
            "path": path.name,
            "rows": config.rows_by_year[year],
            "sha256": digest,
        }
        total_week_year.update(week_year)
        for name, counts in field_counts.items():
            total_field_counts[name].update(counts)
        for kind, rows in anomaly_rows.items():
            if rows:
                total_anomalies[kind][str(year)] = rows

    manifest["field_counts"] = {
        name: {value: counts[value] for value in sorted(counts)}
        for name, counts in total_field_counts.items()
    }
    manifest["week_year_counts"] = {
        key: total_week_year[key] for key in sorted(total_week_year)
    }
    manifest["anomalies"] = {
        kind: {
            "count": sum(len(rows) for rows in per_year.values()),
            "rows": per_year,
        }
        for kind, per_year in total_anomalies.items()
    }

    manifest_path = out_dir / "manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True, ensure_ascii=False)
        handle.write("\n")
    return SynthResult(files=files, manifest_path=manifest_path, manifest=manifest)
