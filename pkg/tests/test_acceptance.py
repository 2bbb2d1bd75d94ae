"""Acceptance suite: one test per criterion, each checked at its stated
tolerance (exact unless noted) and reporting a PASS line on success.

Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import io
import csv
import itertools
import json
import os
import random
import resource
import subprocess
import sys
import time
from collections import Counter
from pathlib import Path

import pytest

import _oracle as oracle
from conftest import FIXTURE_INPUTS, FIXTURE_WEEK, random_records
from make_goldens import findings_obj, funnel_stages, oracle_tables
from sivep_gesta.cli import RunConfig, run_build
from sivep_gesta.cohort import (
    FunnelCounters,
    classify_gestational_status,
    select_obstetric_cohort,
)
from sivep_gesta.derive import classify_covid_diagnosis, map_region
from sivep_gesta.ingest import SnapshotSource, read_snapshot
from sivep_gesta.synth import AnomalyRates, SynthConfig, generate
from sivep_gesta.tabulate import frequency_table


def _report(name: str) -> None:
    print(f"\n[ACCEPTANCE] {name}: PASS")


def _build(inputs, week, out_dir, jobs=1, chunk_size=20_000):
    cfg = RunConfig(
        inputs=[SnapshotSource(path, year=year) for year, path in inputs],
        sem_current=week,
        out_dir=Path(out_dir),
        table_format="json",
        jobs=jobs,
        chunk_size=chunk_size,
    )
    status = run_build(cfg)
    assert status == 0
    return Path(out_dir)


def _expected_cohort_csv(result) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, delimiter=";", lineterminator="\n")
    writer.writerow(result["export_header"])
    writer.writerows(result["export_rows"])
    return buffer.getvalue().encode("utf-8")


def _assert_pipeline_equals_oracle(out_dir: Path, inputs, week) -> None:
    """Exact, field-by-field equality of every artifact with the independent
    straight-line reference."""
    result = oracle.run_pipeline(inputs, week)

    # cohort membership, order, and every raw+derived field
    assert (out_dir / "cohort.csv").read_bytes() == _expected_cohort_csv(result)

    # funnel counts, stage by stage
    produced_funnel = json.loads((out_dir / "funnel.json").read_text("utf-8"))
    assert produced_funnel == {"stages": funnel_stages(result["funnel"])}

    # every emitted table
    expected_tables = oracle_tables(result)
    produced_names = {p.stem for p in (out_dir / "tables").glob("*.json")}
    assert produced_names == set(expected_tables)
    for name, expected in expected_tables.items():
        produced = json.loads((out_dir / "tables" / f"{name}.json").read_text("utf-8"))
        assert produced == expected, name

    # findings (consistency checks, out-of-dictionary audit, region audit)
    produced_findings = json.loads((out_dir / "findings.json").read_text("utf-8"))
    assert produced_findings == findings_obj(result)

    # per-file accounting
    stats = json.loads((out_dir / "ingest_stats.json").read_text("utf-8"))
    for per_file, expected_file in zip(stats["files"], result["files"]):
        for key in ("rows", "records", "malformed"):
            assert per_file[key] == expected_file[key]


class TestOracleEquivalence:
    """Criterion: full pipeline equals the rule-by-rule oracle on the bundled
    fixture and on 50 randomized synthetic snapshots (exact, < 60 s)."""

    def test_fixture_and_randomized_snapshots(self, tmp_path):
        started = time.perf_counter()

        out = _build(FIXTURE_INPUTS, FIXTURE_WEEK, tmp_path / "fixture")
        _assert_pipeline_equals_oracle(out, FIXTURE_INPUTS, FIXTURE_WEEK)

        rng = random.Random(20214)
        for i in range(50):
            rows_2020 = rng.choice((0, rng.randint(50, 2500), rng.randint(2500, 7000)))
            rows_2021 = rng.choice((0, rng.randint(50, 2000), rng.randint(2000, 3000)))
            if rows_2020 == rows_2021 == 0:
                rows_2020 = rng.randint(50, 500)
            assert rows_2020 + rows_2021 <= 10_000
            week_probs = {}
            if i % 5 == 0:
                # exercise missing SEM_PRI through the whole pipeline
                week_probs = {
                    2020: [(str(w), 1.0) for w in range(1, 54)] + [("", 4.0)],
                    2021: [(str(w), 1.0) for w in range(1, 18)] + [("", 2.0)],
                }
                total_2020 = sum(w for _v, w in week_probs[2020])
                week_probs[2020] = [(v, w / total_2020) for v, w in week_probs[2020]]
                total_2021 = sum(w for _v, w in week_probs[2021])
                week_probs[2021] = [(v, w / total_2021) for v, w in week_probs[2021]]
            config = SynthConfig(
                rows_by_year={
                    year: n
                    for year, n in ((2020, rows_2020), (2021, rows_2021))
                    if n
                },
                seed=rng.randint(0, 10**9),
                week_probs_by_year=week_probs,
                anomalies=AnomalyRates(
                    male_pregnant=rng.choice((0.0, 0.01)),
                    out_of_dictionary=rng.choice((0.0, 0.01)),
                    malformed=rng.choice((0.0, 0.005)),
                    week53_2021=rng.choice((0.0, 0.01)),
                ),
            )
            snap = generate(config, tmp_path / f"s{i}")
            inputs = [(year, snap.files[year]) for year in sorted(snap.files)]
            week = rng.choice((16, 53, rng.randint(1, 53)))
            out = _build(inputs, week, tmp_path / f"out{i}", jobs=2 if i % 7 == 0 else 1)
            _assert_pipeline_equals_oracle(out, inputs, week)

        elapsed = time.perf_counter() - started
        assert elapsed < 60, f"oracle equivalence took {elapsed:.1f}s"
        _report(f"oracle equivalence (fixture + 50 snapshots, {elapsed:.1f}s)")


class TestGuardSemanticsGrids:
    def test_covid_classification_grid_48(self):
        """Criterion: classify_covid_diagnosis matches the oracle on the
        exhaustive CLASSI_FIN x {sim,não}^3 grid (48 cases). Exact."""
        cases = 0
        for cf in (1, 2, 3, 4, 5, None):
            for pcr, antigen, serology in itertools.product(("sim", "não"), repeat=3):
                rec = {
                    "CLASSI_FIN": cf,
                    "pcr_SN": pcr,
                    "antigeno_SN": antigen,
                    "sorologia_SN": serology,
                }
                assert classify_covid_diagnosis(cf, pcr, antigen, serology) == (
                    oracle.classi_covid(rec)
                ), rec
                cases += 1
        assert cases == 48
        assert classify_covid_diagnosis(None, "não", "não", "não") == "outro"
        _report("covid diagnosis guard grid (48 cases)")

    def test_gestational_classification_grid_36(self):
        """Criterion: classify_gestational_status matches the oracle on the
        exhaustive CS_GESTANT x PUERPERA grid (36 cases). Exact."""
        cases = 0
        for gestant in (0, 1, 2, 3, 4, 5, 6, 9, None):
            for puerpera in (1, 2, 9, None):
                expected = oracle.classify_gesta_puerp(
                    {"CS_GESTANT": gestant, "PUERPERA": puerpera}
                )
                assert classify_gestational_status(gestant, puerpera) == expected
                cases += 1
        assert cases == 36
        assert classify_gestational_status(6, 1) == "não"
        assert classify_gestational_status(9, 1) == "puerp"
        _report("gestational status guard grid (36 cases)")


class TestWeek53Correction:
    def test_planted_week53_cases_move_to_2020(self, tmp_path):
        """Criterion: K planted (2021, week 53) records appear in the 2020
        column after correction and (2021, 53) shows zero. Exact."""
        config = SynthConfig(
            rows_by_year={2020: 3000, 2021: 2000},
            seed=53,
            anomalies=AnomalyRates(week53_2021=0.03),
        )
        snap = generate(config, tmp_path / "synth")
        manifest = snap.manifest
        planted = manifest["anomalies"]["week53_2021"]["count"]
        assert planted == round(2000 * 0.03)

        inputs = [(2020, snap.files[2020]), (2021, snap.files[2021])]
        out = _build(inputs, 16, tmp_path / "out")

        pre = json.loads(
            (out / "tables" / "week_by_year_precorrection.json").read_text("utf-8")
        )
        post = json.loads((out / "tables" / "week_by_year.json").read_text("utf-8"))

        def cell(table, row_label, col_label):
            col = table["col_labels"].index(col_label)
            for row in table["rows"]:
                if row["label"] == row_label:
                    return row["cells"][col]
            return 0

        natural_2020 = manifest["week_year_counts"].get("2020:53", 0)
        assert cell(pre, "53", "2021") == planted
        assert cell(pre, "53", "2020") == natural_2020
        assert cell(post, "53", "2021") == 0
        assert cell(post, "53", "2020") == natural_2020 + planted
        _report(f"week-53 correction (planted K={planted})")


class TestRegionPartition:
    def test_states_partition_and_synthetic_marginals(self, tmp_path):
        """Criterion: the 27 state codes partition into the five regions,
        missing maps to unknown, and region marginals over a uniform state
        distribution equal the manifest exactly."""
        state_region = {}
        for state in oracle.SOUTHEAST:
            state_region[state] = "southeast"
        for state in oracle.SOUTH:
            state_region[state] = "south"
        for state in oracle.CENTRAL:
            state_region[state] = "central"
        for state in oracle.NORTHEAST:
            state_region[state] = "northeast"
        for state in ("AC", "AP", "AM", "PA", "RO", "RR", "TO"):
            state_region[state] = "north"
        assert len(state_region) == 27
        for state, expected_region in state_region.items():
            assert map_region(state) == expected_region
        assert map_region(None) == "unknown"

        uniform = [(state, 0.036) for state in sorted(state_region)]
        uniform.append(("", 1.0 - 27 * 0.036))
        config = SynthConfig(
            rows_by_year={2020: 4000},
            seed=27,
            field_probs={"SG_UF": uniform},
        )
        snap = generate(config, tmp_path)
        expected = Counter()
        for state, count in snap.manifest["field_counts"]["SG_UF"].items():
            expected[state_region.get(state, "unknown" if state == "" else "north")] += count

        observed = Counter(
            map_region(record.SG_UF)
            for record in read_snapshot(SnapshotSource(snap.files[2020], year=2020))
        )
        assert observed == expected
        _report("region partition and synthetic marginals")


class TestTableFidelity:
    def test_hand_built_12_record_stream(self):
        """Criterion: frequency table over 12 hand-built records reproduces
        hand-computed n and one-decimal percentages, including the missing
        row and the Total row printing 100.0. Exact."""
        from conftest import make_record

        values = [1] * 7 + [2] * 3 + [9] + [None]
        records = [make_record(CS_RACA=v) for v in values]
        table = frequency_table(records, "CS_RACA")

        assert table.row_labels == ["1", "2", "9", "<NA>"]
        assert [c[0] for c in table.cells] == [7, 3, 1, 1]
        # 7/12 = 58.33 -> 58.3; 3/12 = 25.0; 1/12 = 8.33 -> 8.3 (twice);
        # the rows sum to 99.9 while the Total row prints 100.0
        assert table.percentages == ["58.3", "25.0", "8.3", "8.3"]
        assert table.total == 12
        rows = table.to_csv_rows()
        assert rows[-1] == ["Total", "12", "100.0"]
        _report("table fidelity (12-record hand count)")


class TestFunnelConservation:
    def test_1000_fuzzed_snapshots(self):
        """Criterion: in/out/removed balances at every stage for 1,000 fuzzed
        snapshots. Exact."""
        rng = random.Random(1000)
        for i in range(1000):
            records = random_records(rng, rng.randint(0, 40))
            week = rng.randint(1, 53)
            counters = FunnelCounters()
            cohort = list(select_obstetric_cohort(records, week, counters))
            report = counters.report()
            report.check_conservation()
            assert report.total_in == len(records)
            assert report.cohort_out == len(cohort)
            previous_out = None
            for stage in report.stages:
                assert stage.n_out == stage.n_in - stage.removed
                if previous_out is not None:
                    assert stage.n_in == previous_out
                previous_out = stage.n_out
        _report("funnel conservation (1000 fuzzed snapshots)")


def _compare_trees(dir_a: Path, dir_b: Path) -> list[str]:
    mismatches = []
    files_a = sorted(p.relative_to(dir_a) for p in dir_a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(dir_b) for p in dir_b.rglob("*") if p.is_file())
    if files_a != files_b:
        return [f"file sets differ: {files_a} vs {files_b}"]
    for rel in files_a:
        bytes_a = (dir_a / rel).read_bytes()
        bytes_b = (dir_b / rel).read_bytes()
        if rel.name == "run_manifest.json":
            obj_a = json.loads(bytes_a)
            obj_b = json.loads(bytes_b)
            obj_a.pop("generated_at")
            obj_b.pop("generated_at")
            if obj_a != obj_b:
                mismatches.append(str(rel))
        elif bytes_a != bytes_b:
            mismatches.append(str(rel))
    return mismatches


@pytest.fixture(scope="module")
def million_row_snapshot(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("million")
    config = SynthConfig(
        rows_by_year={2020: 650_000, 2021: 350_000},
        seed=1_000_000,
        anomalies=AnomalyRates(
            male_pregnant=0.0005,
            out_of_dictionary=0.0005,
            malformed=0.0002,
            week53_2021=0.001,
        ),
    )
    return generate(config, tmp)


class TestParallelDeterminism:
    def test_jobs_1_vs_8_byte_identical(self, tmp_path, million_row_snapshot):
        """Criterion: artifacts byte-identical across --jobs 1 and --jobs 8
        on a 10^6-row synthetic snapshot (timestamp field aside)."""
        snap = million_row_snapshot
        inputs = [(2020, snap.files[2020]), (2021, snap.files[2021])]
        _build(inputs, 16, tmp_path / "jobs1", jobs=1)
        _build(inputs, 16, tmp_path / "jobs8", jobs=8)
        mismatches = _compare_trees(tmp_path / "jobs1", tmp_path / "jobs8")
        assert not mismatches, mismatches
        _report("parallel determinism (10^6 rows, jobs 1 vs 8)")


class TestScaleTarget:
    def test_full_scale_merged_snapshot(self, tmp_path_factory):
        """Criterion (engineering): a 1,847,134-row merged synthetic snapshot
        builds end-to-end in < 120 s with < 2 GB memory."""
        tmp = tmp_path_factory.mktemp("scale")
        config = SynthConfig(
            rows_by_year={2020: 1_176_512, 2021: 670_622},
            seed=18471,
            anomalies=AnomalyRates(
                male_pregnant=0.0002,
                out_of_dictionary=0.0002,
                malformed=0.0001,
                week53_2021=0.0005,
            ),
        )
        snap = generate(config, tmp / "synth")
        total_rows = sum(
            per_file["rows"] for per_file in snap.manifest["files"].values()
        )
        assert total_rows == 1_847_134

        argv = [
            sys.executable, "-m", "sivep_gesta.cli", "build",
            "--in", f"2020={snap.files[2020]}",
            "--in", f"2021={snap.files[2021]}",
            "--current-week", "16",
            "--out", str(tmp / "out"),
            "--format", "json",
            "--jobs", "1",
        ]
        started = time.perf_counter()
        proc = subprocess.run(argv, capture_output=True, text=True)
        elapsed = time.perf_counter() - started
        assert proc.returncode == 0, proc.stderr
        # ru_maxrss is in KiB on Linux; the build ran in the waited-for child
        peak_kib = resource.getrusage(resource.RUSAGE_CHILDREN).ru_maxrss
        assert elapsed < 120, f"build took {elapsed:.1f}s"
        assert peak_kib < 2 * 1024 * 1024, f"peak memory {peak_kib / 1024:.0f} MiB"

        manifest = json.loads((tmp / "out" / "run_manifest.json").read_text("utf-8"))
        assert sum(entry["rows"] for entry in manifest["inputs"]) == 1_847_134
        _report(
            f"scale target (1,847,134 rows in {elapsed:.1f}s, "
            f"peak {peak_kib / 1024:.0f} MiB)"
        )


REAL_2020 = os.environ.get("SIVEP_SRAG_2020_CSV")
REAL_2021 = os.environ.get("SIVEP_SRAG_2021_CSV")


@pytest.mark.skipif(
    not (REAL_2020 and REAL_2021),
    reason=(
        "optional criterion: set SIVEP_SRAG_2020_CSV and SIVEP_SRAG_2021_CSV "
        "to the April 26, 2021 snapshot files to verify the reference totals"
    ),
)
class TestFullSnapshotReproduction:
    def test_reference_totals(self, tmp_path):
        """Optional criterion: with the real April 26, 2021 files at week 16,
        reproduce the known reference totals exactly."""
        inputs = [(2020, Path(REAL_2020)), (2021, Path(REAL_2021))]
        out = _build(inputs, 16, tmp_path, jobs=2)

        stats = json.loads((out / "ingest_stats.json").read_text("utf-8"))
        assert stats["totals"]["records"] == 1_847_134

        post = json.loads((out / "tables" / "week_by_year.json").read_text("utf-8"))
        assert post["total"] == 1_847_115

        gestant = json.loads((out / "tables" / "cs_gestant.json").read_text("utf-8"))
        by_label = {row["label"]: row["n"] for row in gestant["rows"]}
        assert by_label["0"] == 371

        classes = json.loads(
            (out / "tables" / "classi_gesta_puerp.json").read_text("utf-8")
        )
        by_label = {row["label"]: row["n"] for row in classes["rows"]}
        assert classes["total"] == 21_474
        assert by_label == {
            "1tri": 1914, "2tri": 4407, "3tri": 9575, "IG_ig": 917, "puerp": 4661,
        }

        covid = json.loads((out / "tables" / "classi_covid.json").read_text("utf-8"))
        by_label = {row["label"]: row["n"] for row in covid["rows"]}
        assert by_label == {
            "antigenio": 827, "não": 8344, "outro": 4354, "pcr": 6908,
            "sorologia": 1041,
        }

        region = json.loads((out / "tables" / "region.json").read_text("utf-8"))
        by_label = {row["label"]: row["n"] for row in region["rows"]}
        assert by_label == {
            "central": 2384, "north": 2363, "northeast": 5394, "south": 2671,
            "southeast": 8658, "unknown": 4,
        }
        _report("full-snapshot reproduction of reference totals")
