import json

import pytest

from vacone.catalog import (catalog_table, compare, consistency_violations, data_files, dump_json,
                            load_catalog, run_catalog, select)
from vacone.problem import SchemaError, dump_problem, load_problem
from vacone.stationarity import replay_am_sequence, replay_m_membership

ENTRIES = load_catalog()


def test_catalog_size_and_ids():
    assert len(ENTRIES) >= 10
    ids = [e.id for e in ENTRIES]
    assert len(set(ids)) == len(ids)
    assert [f.name.removesuffix(".json") for f in data_files()] == ids


@pytest.mark.parametrize("path", data_files(), ids=lambda p: p.name)
def test_round_trip_is_identical(path):
    text = path.read_text(encoding="utf-8")
    p = load_problem(text)
    assert dump_problem(p) == json.loads(text)
    assert dump_problem(load_problem(dump_problem(p))) == dump_problem(p)


@pytest.mark.parametrize("entry", [e for e in ENTRIES if e.problem.replay], ids=lambda e: e.id)
def test_stored_sequences_replay_exactly(entry):
    p = entry.problem
    for item in p.replay:
        fn = replay_am_sequence if item["kind"] == "am_sequence" else replay_m_membership
        assert fn(p, item)["ok"]


def test_full_run_has_no_hard_failures():
    rep = run_catalog()
    assert rep.hard_failures == 0, catalog_table(rep)
    assert rep.consistency == []


def test_filter_selects_by_id():
    assert [e.id for e in select(ENTRIES, "cubic")] == ["cubic_gacq_fails"]
    assert len(select(ENTRIES, "ccp_")) == 3
    assert select(ENTRIES, None) == ENTRIES
    rep = run_catalog("parabola")
    assert [e.id for e in rep.entries] == ["parabola_not_am_regular"]


def test_corrupted_expected_reports_entry_id():
    d = json.loads(data_files()[0].read_text(encoding="utf-8"))
    d["expected"]["not_a_check"] = "Proved"
    with pytest.raises(SchemaError) as err:
        load_problem(d)
    assert d["id"] in str(err.value)
    d["expected"] = ["Proved"]
    with pytest.raises(SchemaError):
        load_problem(d)


def test_compare_grades():
    assert compare("Proved", "Proved") == "pass"
    assert compare("Proved", "Unknown") == "soft"
    assert compare("Proved", "Refuted") == "hard"


def test_consistency_rules():
    assert consistency_violations("e", {"am_stat": "Certified", "am_reg": "Proved", "m_stat": "Refuted"})
    assert consistency_violations("e", {"nnamcq": "true", "fjm": "Proved"})
    assert consistency_violations("e", {"polyhedral": "true", "am_reg": "Unknown"})
    assert consistency_violations("e", {"m_stat": "Proved", "am_stat": "Refuted"})
    assert not consistency_violations("e", {"m_stat": "Proved", "am_stat": "Certified", "fjm": "Refuted"})


def test_json_report_is_parseable():
    rep = run_catalog("square")
    d = json.loads(dump_json(rep.to_json()))
    assert d["hard_failures"] == 0
    assert d["entries"][0]["values"]["m_stat"] == "Refuted"
