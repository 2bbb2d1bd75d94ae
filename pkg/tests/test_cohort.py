import datetime as dt
import random

import pytest
from hypothesis import given, settings, strategies as st

import _oracle as oracle
from conftest import make_record
from sivep_gesta.cohort import (
    FunnelCounters,
    GESTATIONAL_CLASSES,
    NOT_OBSTETRIC,
    assign_epi_stamp,
    classify_gestational_status,
    correct_week53,
    in_age_range,
    in_epi_window,
    is_female,
    keep_for_current_week,
    select_obstetric_cohort,
)
from sivep_gesta.errors import ConfigurationError
from sivep_gesta.schema import EpiStamp


class TestEpiStamp:
    def test_year_from_onset_date(self):
        record = make_record(DT_SIN_PRI="2020-03-15", SEM_PRI=12)
        assert assign_epi_stamp(record) == EpiStamp(2020, 12)

    def test_week53_of_2021_before_correction(self):
        record = make_record(DT_SIN_PRI="2021-01-02", SEM_PRI=53)
        assert assign_epi_stamp(record) == EpiStamp(2021, 53)

    def test_missing_date_is_missing_stamp(self):
        assert assign_epi_stamp(make_record(SEM_PRI=10)) is None

    def test_week_may_be_missing(self):
        record = make_record(DT_SIN_PRI="2021-04-01")
        assert assign_epi_stamp(record) == EpiStamp(2021, None)


class TestWindow:
    def test_2020_week7_removed(self):
        assert not in_epi_window(EpiStamp(2020, 7))

    def test_2020_week8_kept(self):
        assert in_epi_window(EpiStamp(2020, 8))

    def test_2021_week3_kept(self):
        assert in_epi_window(EpiStamp(2021, 3))

    def test_missing_stamp_removed(self):
        assert not in_epi_window(None)

    def test_2021_with_missing_week_kept(self):
        # the 2021 disjunct does not inspect the week
        assert in_epi_window(EpiStamp(2021, None))

    def test_2020_with_missing_week_removed(self):
        assert not in_epi_window(EpiStamp(2020, None))

    def test_other_years_removed(self):
        assert not in_epi_window(EpiStamp(2019, 30))
        assert not in_epi_window(EpiStamp(2022, 1))


class TestWeek53Correction:
    def test_moves_2021_week53_to_2020(self):
        assert correct_week53(EpiStamp(2021, 53)) == EpiStamp(2020, 53)

    def test_leaves_2020_week53(self):
        assert correct_week53(EpiStamp(2020, 53)) == EpiStamp(2020, 53)

    def test_leaves_other_2021_weeks(self):
        assert correct_week53(EpiStamp(2021, 16)) == EpiStamp(2021, 16)

    def test_idempotent_and_narrow(self):
        for ano in (2019, 2020, 2021, 2022):
            for sem in (*range(1, 54), None):
                stamp = EpiStamp(ano, sem)
                once = correct_week53(stamp)
                assert correct_week53(once) == once
                if (ano, sem) != (2021, 53):
                    assert once == stamp


class TestCurrentWeek:
    def test_2021_after_cut_removed(self):
        assert not keep_for_current_week(EpiStamp(2021, 17), 16)

    def test_2021_at_cut_kept(self):
        assert keep_for_current_week(EpiStamp(2021, 16), 16)

    def test_2020_unaffected(self):
        assert keep_for_current_week(EpiStamp(2020, 52), 16)

    def test_missing_week_2021_removed(self):
        assert not keep_for_current_week(EpiStamp(2021, None), 16)

    @pytest.mark.parametrize("week", [0, 54, -1])
    def test_week_out_of_range_is_configuration_error(self, week):
        with pytest.raises(ConfigurationError):
            keep_for_current_week(EpiStamp(2020, 10), week)


class TestSexAndAge:
    @pytest.mark.parametrize(
        "sex,kept", [("F", True), ("M", False), ("I", False), (None, False)]
    )
    def test_female_filter(self, sex, kept):
        assert is_female(make_record(CS_SEXO=sex)) is kept

    @pytest.mark.parametrize(
        "age,kept",
        [(10, True), (55, True), (9, False), (56, False), (None, False), (0, False)],
    )
    def test_age_filter(self, age, kept):
        assert in_age_range(make_record(NU_IDADE_N=age)) is kept


class TestGestationalStatus:
    def test_third_trimester(self):
        assert classify_gestational_status(3, 2) == "3tri"

    def test_puerperal_not_pregnant(self):
        assert classify_gestational_status(5, 1) == "puerp"

    def test_puerperal_ignored_gestation(self):
        assert classify_gestational_status(9, 1) == "puerp"

    def test_does_not_apply_with_puerpera_is_not_obstetric(self):
        assert classify_gestational_status(6, 1) == NOT_OBSTETRIC

    def test_exhaustive_grid_matches_oracle(self):
        for gestant in (0, 1, 2, 3, 4, 5, 6, 9, None):
            for puerpera in (1, 2, 9, None):
                expected = oracle.classify_gesta_puerp(
                    {"CS_GESTANT": gestant, "PUERPERA": puerpera}
                )
                assert classify_gestational_status(gestant, puerpera) == expected, (
                    gestant,
                    puerpera,
                )


from conftest import random_records


class TestFunnel:
    def test_empty_stream(self):
        counters = FunnelCounters()
        assert list(select_obstetric_cohort([], 16, counters)) == []
        report = counters.report()
        report.check_conservation()
        assert report.total_in == 0
        assert report.cohort_out == 0

    def test_week_out_of_range_rejected_eagerly(self):
        with pytest.raises(ConfigurationError):
            select_obstetric_cohort([], 99)

    def test_cohort_invariants_on_random_stream(self):
        rng = random.Random(42)
        counters = FunnelCounters()
        cohort = list(
            select_obstetric_cohort(random_records(rng, 3000), 16, counters)
        )
        counters.report().check_conservation()
        for selected in cohort:
            assert selected.record.CS_SEXO == "F"
            assert 10 <= selected.record.NU_IDADE_N <= 55
            assert selected.classi_gesta_puerp in GESTATIONAL_CLASSES
            assert selected.classi_gesta_puerp != NOT_OBSTETRIC

    def test_stage_detail_sums(self):
        rng = random.Random(7)
        counters = FunnelCounters()
        list(select_obstetric_cohort(random_records(rng, 500), 16, counters))
        report = counters.report()
        window = report.stages[0]
        assert window.removed == sum(window.detail.values())

    def test_partition_independent_counters(self):
        rng = random.Random(99)
        records = random_records(rng, 1000)
        whole = FunnelCounters()
        list(select_obstetric_cohort(records, 16, whole))
        merged = FunnelCounters()
        for start in range(0, 1000, 137):
            part = FunnelCounters()
            list(select_obstetric_cohort(records[start : start + 137], 16, part))
            merged.merge(part)
        assert merged.report().rows() == whole.report().rows()

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(
            st.tuples(
                st.booleans(),
                st.integers(1, 53) | st.none(),
                st.sampled_from((None, "F", "M", "I")),
                st.integers(0, 99) | st.none(),
                st.sampled_from((None, 0, 1, 2, 3, 4, 5, 6, 9)),
                st.sampled_from((None, 1, 2, 9)),
            ),
            max_size=60,
        ),
        st.integers(1, 53),
    )
    def test_conservation_property(self, rows, week):
        records = [
            make_record(
                DT_SIN_PRI=dt.date(2020 + (sem or 0) % 2, 3, 15) if has_date else None,
                SEM_PRI=sem,
                CS_SEXO=sexo,
                NU_IDADE_N=age,
                CS_GESTANT=gestant,
                PUERPERA=puerpera,
            )
            for has_date, sem, sexo, age, gestant, puerpera in rows
        ]
        counters = FunnelCounters()
        cohort = list(select_obstetric_cohort(records, week, counters))
        report = counters.report()
        report.check_conservation()
        assert report.total_in == len(records)
        assert report.cohort_out == len(cohort)


class TestPostSelectionInvariants:
    def test_no_2021_week53_survives_and_years_are_bounded(self):
        # after correction no stamp is (2021, 53), and survivors are 2020/2021
        rng = random.Random(321)
        for record in random_records(rng, 2000):
            stamp = assign_epi_stamp(record)
            if stamp is None or not in_epi_window(stamp):
                continue
            stamp = correct_week53(stamp)
            if not keep_for_current_week(stamp, 16):
                continue
            assert stamp.ano in (2020, 2021)
            assert (stamp.ano, stamp.sem) != (2021, 53)
            if stamp.ano == 2021:
                assert stamp.sem is not None and stamp.sem <= 16


class TestAgainstFixtureOracle:
    def test_fixture_funnel_matches_oracle(self):
        from conftest import FIXTURE_INPUTS, FIXTURE_WEEK
        from sivep_gesta.ingest import SnapshotSource, merge_snapshots, read_snapshot

        expected = oracle.run_pipeline(FIXTURE_INPUTS, FIXTURE_WEEK)["funnel"]
        counters = FunnelCounters()
        streams = [
            read_snapshot(SnapshotSource(path, year=year))
            for year, path in FIXTURE_INPUTS
        ]
        cohort = list(
            select_obstetric_cohort(merge_snapshots(*streams), FIXTURE_WEEK, counters)
        )
        assert counters.n_in == expected["n_in"]
        assert counters.removed_missing_stamp == expected["missing_onset_date"]
        assert counters.removed_outside_window == expected["outside_window"]
        assert counters.removed_current_week == expected["current_week_removed"]
        assert counters.removed_not_female == expected["not_female"]
        assert counters.removed_age == expected["age_removed"]
        assert counters.removed_not_obstetric == expected["not_obstetric"]
        assert len(cohort) == expected["cohort"]
