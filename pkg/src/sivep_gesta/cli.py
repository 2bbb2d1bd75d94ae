"""Command-line entry point: build the cohort and its tables, generate
synthetic snapshots, run validation, or export the data dictionary.

Exit status: 0 ok, 1 fatal input/configuration error, 2 inconsistency found
in strict mode.

The build is a single streaming pass per input file. Chunks of raw rows are
processed by pure per-record functions into additive counters plus cohort
export rows; partial results merge in chunk order, so the artifacts are
byte-identical no matter how many worker processes run (only the run
manifest's ``generated_at`` field varies between runs).
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import hashlib
import json
import multiprocessing
import sys
from collections import Counter, deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from . import __version__, cohort, derive, ingest, tabulate, validate
from .errors import ConfigurationError, IngestError
from .schema import (
    DEFAULT_CODEBOOK,
    DERIVED_FIELDS,
    FIELD_NAMES,
    CohortRecord,
)
from .synth import AnomalyRates, SynthConfig, generate

_DEFAULT_CHUNK_SIZE = 20_000
_EXPORT_DELIMITER = ";"


@dataclass
class RunConfig:
    """Everything a build run needs; validated on construction."""

    inputs: list[ingest.SnapshotSource]
    sem_current: int
    out_dir: Path
    table_format: str = "csv"
    tables: tuple[str, ...] | None = None  # None = all
    strict: bool = False
    jobs: int = 1
    chunk_size: int = _DEFAULT_CHUNK_SIZE

    def __post_init__(self):
        if not self.inputs:
            raise ConfigurationError("at least one input snapshot is required")
        if not 1 <= self.sem_current <= 53:
            raise ConfigurationError(
                f"current epidemiological week must be in 1..53, got {self.sem_current}"
            )
        if self.table_format not in ("csv", "json", "text"):
            raise ConfigurationError(
                f"unsupported table format {self.table_format!r}"
            )
        if self.jobs < 1:
            raise ConfigurationError("--jobs must be >= 1")
        if self.chunk_size < 1:
            raise ConfigurationError("--chunk-size must be >= 1")
        if self.tables is not None:
            unknown = [t for t in self.tables if t not in TABLE_CATALOG]
            if unknown:
                raise ConfigurationError(
                    "unknown table name(s): "
                    + ", ".join(unknown)
                    + "; available: "
                    + ", ".join(TABLE_CATALOG)
                )


# --------------------------------------------------------------------------
# Table catalog


@dataclass(frozen=True)
class TableDef:
    name: str
    kind: str  # "frequency" | "cross"
    stage: str  # "window" | "selected" | "cohort"
    variable: str
    col_variable: str | None = None
    title: str | None = None


def _catalog() -> dict[str, TableDef]:
    defs = [
        TableDef(
            "week_by_year_precorrection",
            "cross",
            "window",
            "SEM_PRI",
            "ano",
            "Cases by epidemiological week and year (before week-53 correction)",
        ),
        TableDef(
            "week_by_year",
            "cross",
            "selected",
            "SEM_PRI",
            "ano",
            "Cases by epidemiological week and year",
        ),
        TableDef("cs_gestant", "frequency", "selected", "CS_GESTANT"),
        TableDef("cs_gestant_by_sex", "cross", "selected", "CS_GESTANT", "CS_SEXO"),
        TableDef("puerpera", "frequency", "selected", "PUERPERA"),
        TableDef("puerpera_by_sex", "cross", "selected", "PUERPERA", "CS_SEXO"),
        TableDef("classi_fin", "frequency", "cohort", "CLASSI_FIN"),
    ]
    defs.append(TableDef("classi_gesta_puerp", "frequency", "cohort", "classi_gesta_puerp"))
    for var in DERIVED_FIELDS:
        if var == "classi_gesta_puerp":
            continue
        defs.append(TableDef(var, "frequency", "cohort", var))
    return {d.name: d for d in defs}


TABLE_CATALOG: dict[str, TableDef] = _catalog()


# --------------------------------------------------------------------------
# Chunk processing (worker side)


@dataclass
class ChunkOutcome:
    """Additive result of processing one chunk of raw rows."""

    rows: int = 0
    records: int = 0
    date_parse_warnings: int = 0
    missing: Counter = field(default_factory=Counter)
    quarantine: list[tuple[int, list[str], str]] = field(default_factory=list)
    funnel: cohort.FunnelCounters = field(default_factory=cohort.FunnelCounters)
    pre_week_year: Counter = field(default_factory=Counter)
    d2_week_year: Counter = field(default_factory=Counter)
    d2_values: dict[str, Counter] = field(default_factory=dict)
    d2_gestant_sex: Counter = field(default_factory=Counter)
    d2_puerp_sex: Counter = field(default_factory=Counter)
    male_pregnant: int = 0
    male_pregnant_rows: list[int] = field(default_factory=list)
    male_puerperal: int = 0
    male_puerperal_rows: list[int] = field(default_factory=list)
    fallback_states: Counter = field(default_factory=Counter)
    cohort_counts: dict[str, Counter] = field(default_factory=dict)
    cohort_rows: list[list[str]] = field(default_factory=list)


_WORKER: dict = {}


def _init_worker(header_maps, sem_current, extras_union, audited):
    _WORKER["header_maps"] = header_maps
    _WORKER["sem_current"] = sem_current
    _WORKER["extras_union"] = extras_union
    _WORKER["audited"] = audited


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, dt.date):
        return value.isoformat()
    return str(value)


def _export_cells(
    cohort_record: CohortRecord, extras_union: tuple[str, ...]
) -> list[str]:
    raw = cohort_record.record
    cells = [_cell(getattr(raw, name)) for name in FIELD_NAMES]
    extras = raw.extra_fields
    cells += [extras.get(name, "") for name in extras_union]
    cells += [_cell(getattr(cohort_record, var)) for var in DERIVED_FIELDS]
    return cells


def _process_chunk(task) -> ChunkOutcome:
    file_pos, start_row, rows = task
    header_map: ingest.HeaderMap = _WORKER["header_maps"][file_pos]
    sem_current: int = _WORKER["sem_current"]
    extras_union: tuple[str, ...] = _WORKER["extras_union"]
    audited: tuple[str, ...] = _WORKER["audited"]

    out = ChunkOutcome()
    out.d2_values = {name: Counter() for name in audited}
    out.cohort_counts = {var: Counter() for var in DERIVED_FIELDS}
    out.cohort_counts["CLASSI_FIN"] = Counter()
    stats = ingest.IngestStats()
    stats.missing = out.missing
    funnel = out.funnel

    row_number = start_row - 1
    for row in rows:
        row_number += 1
        out.rows += 1
        record, reason = header_map.convert_row(row, stats)
        if record is None:
            out.quarantine.append((row_number, row, reason))
            continue
        out.records += 1

        funnel.n_in += 1
        stamp = cohort.assign_epi_stamp(record)
        if stamp is None:
            funnel.removed_missing_stamp += 1
            continue
        if not cohort.in_epi_window(stamp):
            funnel.removed_outside_window += 1
            continue
        out.pre_week_year[(stamp.sem, stamp.ano)] += 1
        stamp = cohort.correct_week53(stamp)
        if not cohort.keep_for_current_week(stamp, sem_current):
            funnel.removed_current_week += 1
            continue

        # dados2: the post-window, post-correction, post-cut stream the
        # consistency tables and audits are computed on.
        out.d2_week_year[(stamp.sem, stamp.ano)] += 1
        out.d2_gestant_sex[(record.CS_GESTANT, record.CS_SEXO)] += 1
        out.d2_puerp_sex[(record.PUERPERA, record.CS_SEXO)] += 1
        d2_values = out.d2_values
        for name in audited:
            d2_values[name][getattr(record, name)] += 1
        if record.CS_SEXO == "M":
            if record.CS_GESTANT in (1, 2, 3, 4):
                out.male_pregnant += 1
                if len(out.male_pregnant_rows) < validate.EXAMPLE_LIMIT:
                    out.male_pregnant_rows.append(row_number)
            if record.PUERPERA == 1:
                out.male_puerperal += 1
                if len(out.male_puerperal_rows) < validate.EXAMPLE_LIMIT:
                    out.male_puerperal_rows.append(row_number)

        if not cohort.is_female(record):
            funnel.removed_not_female += 1
            continue
        if not cohort.in_age_range(record):
            funnel.removed_age += 1
            continue
        status = cohort.classify_gestational_status(
            record.CS_GESTANT, record.PUERPERA
        )
        if status == cohort.NOT_OBSTETRIC:
            funnel.removed_not_obstetric += 1
            continue
        funnel.cohort += 1

        selected = derive.derive_all(
            CohortRecord(record=record, classi_gesta_puerp=status)
        )
        if derive.is_fallback_state(record.SG_UF):
            out.fallback_states[record.SG_UF] += 1
        counts = out.cohort_counts
        for var in DERIVED_FIELDS:
            counts[var][getattr(selected, var)] += 1
        counts["CLASSI_FIN"][record.CLASSI_FIN] += 1
        out.cohort_rows.append(_export_cells(selected, extras_union))

    out.date_parse_warnings = stats.date_parse_warnings
    return out


# --------------------------------------------------------------------------
# Build driver (main side)


@dataclass
class BuildState:
    """Merged accumulators across all chunks of all inputs."""

    per_file_stats: list[ingest.IngestStats] = field(default_factory=list)
    funnel: cohort.FunnelCounters = field(default_factory=cohort.FunnelCounters)
    pre_week_year: Counter = field(default_factory=Counter)
    d2_week_year: Counter = field(default_factory=Counter)
    d2_values: dict[str, Counter] = field(default_factory=dict)
    d2_gestant_sex: Counter = field(default_factory=Counter)
    d2_puerp_sex: Counter = field(default_factory=Counter)
    male_pregnant: int = 0
    male_pregnant_rows: list[int] = field(default_factory=list)
    male_puerperal: int = 0
    male_puerperal_rows: list[int] = field(default_factory=list)
    fallback_states: Counter = field(default_factory=Counter)
    cohort_counts: dict[str, Counter] = field(default_factory=dict)
    cohort_total: int = 0


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _absorb(
    state: BuildState,
    outcome: ChunkOutcome,
    stats: ingest.IngestStats,
    row_offset: int,
    cohort_writer,
    quarantine: ingest.QuarantineWriter,
) -> None:
    stats.rows += outcome.rows
    stats.records += outcome.records
    stats.date_parse_warnings += outcome.date_parse_warnings
    stats.missing.update(outcome.missing)
    for row_number, row, reason in outcome.quarantine:
        stats.note_malformed(row_number, reason)
        quarantine.write(row_number, row, reason)
    state.funnel.merge(outcome.funnel)
    state.pre_week_year.update(outcome.pre_week_year)
    state.d2_week_year.update(outcome.d2_week_year)
    for name, counts in outcome.d2_values.items():
        state.d2_values.setdefault(name, Counter()).update(counts)
    state.d2_gestant_sex.update(outcome.d2_gestant_sex)
    state.d2_puerp_sex.update(outcome.d2_puerp_sex)
    state.male_pregnant += outcome.male_pregnant
    state.male_puerperal += outcome.male_puerperal
    for rows, acc in (
        (outcome.male_pregnant_rows, state.male_pregnant_rows),
        (outcome.male_puerperal_rows, state.male_puerperal_rows),
    ):
        for row_number in rows:
            if len(acc) < validate.EXAMPLE_LIMIT:
                acc.append(row_offset + row_number)
    state.fallback_states.update(outcome.fallback_states)
    for var, counts in outcome.cohort_counts.items():
        state.cohort_counts.setdefault(var, Counter()).update(counts)
    state.cohort_total += len(outcome.cohort_rows)
    for cells in outcome.cohort_rows:
        cohort_writer.writerow(cells)


def _tasks_for_file(file_pos: int, chunks) -> Iterable[tuple[int, int, list]]:
    for start_row, rows in chunks:
        yield (file_pos, start_row, rows)


def _run_chunks(cfg: RunConfig, state, header_maps, extras_union, audited,
                cohort_writer) -> None:
    """Process every input file chunk by chunk, merging in chunk order."""
    init_args = (header_maps, cfg.sem_current, extras_union, audited)
    pool = None
    if cfg.jobs > 1:
        pool = multiprocessing.Pool(
            cfg.jobs, initializer=_init_worker, initargs=init_args
        )
    else:
        _init_worker(*init_args)
    try:
        row_offset = 0
        for file_pos, source in enumerate(cfg.inputs):
            stats = state.per_file_stats[file_pos]
            quarantine_path = (
                cfg.out_dir / f"quarantine_{source.year}_{file_pos}.csv"
            )
            _header_map, chunks = ingest.read_chunks(source, cfg.chunk_size)
            tasks = _tasks_for_file(file_pos, chunks)
            with ingest.QuarantineWriter(
                quarantine_path, source.delimiter, source.encoding
            ) as quarantine:
                if pool is None:
                    for task in tasks:
                        outcome = _process_chunk(task)
                        _absorb(
                            state, outcome, stats, row_offset,
                            cohort_writer, quarantine,
                        )
                else:
                    # Bounded dispatch window: keeps memory flat and merges
                    # strictly in submission order.
                    pending: deque = deque()
                    for task in tasks:
                        pending.append(pool.apply_async(_process_chunk, (task,)))
                        if len(pending) >= cfg.jobs * 2:
                            _absorb(
                                state, pending.popleft().get(), stats,
                                row_offset, cohort_writer, quarantine,
                            )
                    while pending:
                        _absorb(
                            state, pending.popleft().get(), stats,
                            row_offset, cohort_writer, quarantine,
                        )
            if stats.malformed == 0:
                quarantine_path.unlink(missing_ok=True)
            stats.finalize_missing()
            row_offset += stats.rows
    finally:
        if pool is not None:
            pool.close()
            pool.join()


def _build_tables(cfg: RunConfig, state: BuildState) -> dict[str, tabulate.RenderedTable]:
    selected = tuple(cfg.tables) if cfg.tables is not None else tuple(TABLE_CATALOG)
    tables: dict[str, tabulate.RenderedTable] = {}
    for name in selected:
        spec = TABLE_CATALOG[name]
        if spec.kind == "cross":
            if spec.stage == "window":
                counts = state.pre_week_year
            elif spec.variable == "SEM_PRI":
                counts = state.d2_week_year
            elif spec.variable == "CS_GESTANT":
                counts = state.d2_gestant_sex
            else:
                counts = state.d2_puerp_sex
            tables[name] = tabulate.cross_table_from_counts(
                counts, spec.variable, spec.col_variable, spec.title
            )
        else:
            if spec.stage == "selected":
                counts = state.d2_values.get(spec.variable, Counter())
            else:
                counts = state.cohort_counts.get(spec.variable, Counter())
            tables[name] = tabulate.frequency_table_from_counts(
                counts, spec.variable, spec.title
            )
    return tables


def _collect_findings(state: BuildState) -> list[validate.Finding]:
    findings = [
        validate.Finding(
            "male_pregnant",
            validate.SEVERITY_INCONSISTENCY
            if state.male_pregnant
            else validate.SEVERITY_INFO,
            state.male_pregnant,
            "CS_SEXO=M with CS_GESTANT in 1..4",
            state.male_pregnant_rows,
        ),
        validate.Finding(
            "male_puerperal",
            validate.SEVERITY_INCONSISTENCY
            if state.male_puerperal
            else validate.SEVERITY_INFO,
            state.male_puerperal,
            "CS_SEXO=M with PUERPERA=1",
            state.male_puerperal_rows,
        ),
    ]
    findings.extend(validate.out_of_dictionary_findings(state.d2_values))
    unknown_regions = state.cohort_counts.get("region", Counter()).get(
        derive.REGION_UNKNOWN, 0
    )
    findings.append(validate.missing_region_finding(unknown_regions))
    findings.extend(validate.fallback_state_findings(state.fallback_states))
    return findings


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(obj, handle, indent=2, sort_keys=True, ensure_ascii=False)
        handle.write("\n")


def _write_table(path_base: Path, table: tabulate.RenderedTable, fmt: str) -> None:
    if fmt == "json":
        _write_json(path_base.with_suffix(".json"), table.to_json_obj())
    elif fmt == "csv":
        with open(path_base.with_suffix(".csv"), "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, delimiter=_EXPORT_DELIMITER, lineterminator="\n")
            writer.writerows(table.to_csv_rows())
    else:
        path_base.with_suffix(".txt").write_text(table.to_text(), encoding="utf-8")


def run_build(cfg: RunConfig, emit_cohort: bool = True) -> int:
    """Run the full pipeline and write all artifacts. Returns the exit
    status (0, or 2 for strict-mode inconsistencies)."""
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "tables").mkdir(exist_ok=True)

    # Peek every header first: fatal problems surface before any work, and
    # the cohort export layout (extras union) must cover all inputs.
    header_maps = []
    for source in cfg.inputs:
        header_map, _rows, handle = ingest.open_snapshot(source)
        handle.close()
        header_maps.append(header_map)
    extras_union: list[str] = []
    seen = set()
    for header_map in header_maps:
        for name, _idx in header_map.extras:
            if name not in seen:
                seen.add(name)
                extras_union.append(name)
    extras_union = tuple(extras_union)
    audited = validate.audited_fields()

    state = BuildState()
    state.per_file_stats = [
        ingest.IngestStats(year=s.year, path=str(s.path)) for s in cfg.inputs
    ]
    for stats, header_map in zip(state.per_file_stats, header_maps):
        stats.absent_fields = header_map.absent_fields

    cohort_path = cfg.out_dir / "cohort.csv"
    with open(cohort_path, "w", encoding="utf-8", newline="") as cohort_handle:
        cohort_writer = csv.writer(
            cohort_handle, delimiter=_EXPORT_DELIMITER, lineterminator="\n"
        )
        cohort_writer.writerow(list(FIELD_NAMES) + list(extras_union) + list(DERIVED_FIELDS))
        _run_chunks(cfg, state, header_maps, extras_union, audited, cohort_writer)
    if not emit_cohort:
        cohort_path.unlink(missing_ok=True)

    funnel_report = state.funnel.report()
    funnel_report.check_conservation()
    findings = _collect_findings(state)
    tables = _build_tables(cfg, state)

    # aligned text always, plus a machine-readable table
    (cfg.out_dir / "funnel.txt").write_text(funnel_report.to_text(), encoding="utf-8")
    if cfg.table_format == "json":
        _write_json(cfg.out_dir / "funnel.json", {"stages": funnel_report.rows()})
    else:
        with open(cfg.out_dir / "funnel.csv", "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, delimiter=_EXPORT_DELIMITER, lineterminator="\n")
            writer.writerows(funnel_report.to_csv_rows())

    for name in sorted(tables):
        _write_table(cfg.out_dir / "tables" / name, tables[name], cfg.table_format)

    _write_json(cfg.out_dir / "findings.json", validate.findings_report_obj(findings))
    (cfg.out_dir / "findings.txt").write_text(
        validate.findings_report_text(findings), encoding="utf-8"
    )
    _write_json(
        cfg.out_dir / "ingest_stats.json",
        {
            "files": [stats.as_dict() for stats in state.per_file_stats],
            "totals": {
                "rows": sum(s.rows for s in state.per_file_stats),
                "records": sum(s.records for s in state.per_file_stats),
                "malformed": sum(s.malformed for s in state.per_file_stats),
            },
        },
    )
    manifest = {
        "tool": "sivep-gesta",
        "version": __version__,
        "generated_at": dt.datetime.now(dt.timezone.utc).isoformat(),
        "current_week": cfg.sem_current,
        "table_format": cfg.table_format,
        "tables": sorted(tables),
        "inputs": [
            {
                "year": source.year,
                "path": str(source.path),
                "sha256": _sha256(Path(source.path)),
                "rows": stats.rows,
                "records": stats.records,
                "malformed": stats.malformed,
            }
            for source, stats in zip(cfg.inputs, state.per_file_stats)
        ],
        "funnel": funnel_report.rows(),
        "cohort_rows": state.cohort_total,
    }
    _write_json(cfg.out_dir / "run_manifest.json", manifest)

    if cfg.strict and validate.has_inconsistency(findings):
        return 2
    return 0


# --------------------------------------------------------------------------
# argparse wiring


def _parse_inputs(pairs: list[str], encoding: str, delimiter: str) -> list[ingest.SnapshotSource]:
    sources = []
    for pair in pairs:
        if "=" not in pair:
            raise ConfigurationError(
                f"--in expects <year>=<path>, got {pair!r}"
            )
        year_text, path = pair.split("=", 1)
        try:
            year = int(year_text)
        except ValueError:
            raise ConfigurationError(f"--in year must be an integer: {pair!r}") from None
        sources.append(
            ingest.SnapshotSource(
                path=path, year=year, delimiter=delimiter, encoding=encoding
            )
        )
    return sources


def _add_input_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--in",
        dest="inputs",
        action="append",
        required=True,
        metavar="YEAR=PATH",
        help="input snapshot with its declared year; repeatable",
    )
    parser.add_argument("--current-week", type=int, required=True, metavar="N",
                        help="current epidemiological week of 2021 (1..53)")
    parser.add_argument("--encoding", default="ISO-8859-2")
    parser.add_argument("--delimiter", default=";")
    parser.add_argument("--jobs", type=int, default=1, metavar="N",
                        help="worker processes (results identical for any N)")
    parser.add_argument("--chunk-size", type=int, default=_DEFAULT_CHUNK_SIZE)
    parser.add_argument("--strict", action="store_true",
                        help="exit 2 when an inconsistency check is nonzero")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sivep-gesta",
        description=(
            "Select the pregnant/postpartum SARI cohort from SIVEP-Gripe "
            "snapshots and emit frequency/cross tables, funnel and findings."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="run the full pipeline")
    _add_input_flags(p_build)
    p_build.add_argument("--out", required=True, metavar="DIR")
    p_build.add_argument("--format", default="csv", choices=("csv", "json", "text"),
                         dest="table_format")
    p_build.add_argument(
        "--tables", default="all",
        help="'all' or a comma-separated list of table names",
    )

    p_validate = sub.add_parser("validate", help="run consistency checks only")
    _add_input_flags(p_validate)
    p_validate.add_argument("--out", default=None, metavar="DIR")

    p_synth = sub.add_parser("synth", help="generate a synthetic snapshot pair")
    p_synth.add_argument("--out", required=True, metavar="DIR")
    p_synth.add_argument("--rows-2020", type=int, default=0)
    p_synth.add_argument("--rows-2021", type=int, default=0)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--male-pregnant-rate", type=float, default=0.0)
    p_synth.add_argument("--out-of-dictionary-rate", type=float, default=0.0)
    p_synth.add_argument("--malformed-rate", type=float, default=0.0)
    p_synth.add_argument("--week53-2021-rate", type=float, default=0.0)

    p_dict = sub.add_parser(
        "dictionary", help="export the data dictionary and recode rules"
    )
    p_dict.add_argument("--out", default=None, metavar="DIR",
                        help="write files here instead of stdout")
    return parser


def _cmd_build(args) -> int:
    tables = None if args.tables == "all" else tuple(
        t for t in args.tables.split(",") if t
    )
    cfg = RunConfig(
        inputs=_parse_inputs(args.inputs, args.encoding, args.delimiter),
        sem_current=args.current_week,
        out_dir=Path(args.out),
        table_format=args.table_format,
        tables=tables,
        strict=args.strict,
        jobs=args.jobs,
        chunk_size=args.chunk_size,
    )
    return run_build(cfg)


def _cmd_validate(args) -> int:
    import tempfile

    out_dir = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix="sivep_validate_"))
    cfg = RunConfig(
        inputs=_parse_inputs(args.inputs, args.encoding, args.delimiter),
        sem_current=args.current_week,
        out_dir=out_dir,
        tables=(),
        strict=args.strict,
        jobs=args.jobs,
        chunk_size=args.chunk_size,
    )
    status = run_build(cfg, emit_cohort=False)
    sys.stdout.write((out_dir / "findings.txt").read_text(encoding="utf-8"))
    return status


def _cmd_synth(args) -> int:
    rows_by_year = {}
    if args.rows_2020 or not args.rows_2021:
        rows_by_year[2020] = args.rows_2020
    if args.rows_2021:
        rows_by_year[2021] = args.rows_2021
    config = SynthConfig(
        rows_by_year=rows_by_year,
        seed=args.seed,
        anomalies=AnomalyRates(
            male_pregnant=args.male_pregnant_rate,
            out_of_dictionary=args.out_of_dictionary_rate,
            malformed=args.malformed_rate,
            week53_2021=args.week53_2021_rate,
        ),
    )
    result = generate(config, args.out)
    for year in sorted(result.files):
        print(f"wrote {result.files[year]}")
    print(f"wrote {result.manifest_path}")
    return 0


def _cmd_dictionary(args) -> int:
    dictionary_text = DEFAULT_CODEBOOK.export_text()
    rules_text = derive.rules_manifest_text()
    if args.out is None:
        sys.stdout.write(dictionary_text)
        sys.stdout.write("\n")
        sys.stdout.write(rules_text)
        return 0
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "data_dictionary.txt").write_text(dictionary_text, encoding="utf-8")
    _write_json(out_dir / "data_dictionary.json", DEFAULT_CODEBOOK.export_json_obj())
    (out_dir / "recode_rules.txt").write_text(rules_text, encoding="utf-8")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "build": _cmd_build,
        "validate": _cmd_validate,
        "synth": _cmd_synth,
        "dictionary": _cmd_dictionary,
    }
    try:
        return handlers[args.command](args)
    except (ConfigurationError, IngestError) as exc:
        print(f"sivep-gesta: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
