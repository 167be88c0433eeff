import json
import time

import pytest

from conftest import validate_schema
from ea_lab.suite import CHECKS, CheckResult, report_json, report_table, run_paper_checks


@pytest.fixture(scope="module")
def results():
    start = time.perf_counter()
    out = run_paper_checks()
    return out, time.perf_counter() - start


def test_all_checks_pass(results):
    res, _ = results
    failed = [(r.check_id, r.residual, r.witness) for r in res if not r.passed]
    assert not failed
    assert len(res) == len(CHECKS)


def test_suite_runtime(results):
    assert results[1] < 60


def test_ids_unique_and_ordered(results):
    ids = [r.check_id for r in results[0]]
    assert ids == [c[0] for c in CHECKS]
    assert len(set(ids)) == len(ids)
    for key in ("sl2.v0", "sol.adstar", "product.radial", "lattice.example"):
        assert key in ids


def test_every_check_has_a_claim(results):
    assert all(r.claim for r in results[0])


def test_filter():
    res = run_paper_checks("sol.")
    assert res and all(r.check_id.startswith("sol.") for r in res)
    assert run_paper_checks("nothing") == []


def test_exact_checks_report_exact_zero(results):
    for r in results[0]:
        if r.tolerance == 0:
            assert r.residual == 0


def test_status_matches_residual():
    r = CheckResult("x", "claim", "fail", 2, 1, {})
    assert not r.passed
    assert CheckResult("y", "claim", "pass", 0, 0, {}).passed


def test_report_deterministic_and_schema(results):
    first = report_json(results[0])
    assert first == report_json(run_paper_checks())
    assert first == report_json(run_paper_checks(parallel=True))
    data = json.loads(first)
    assert data["all_pass"] is True
    validate_schema(data, "verify")
    table = report_table(results[0])
    # header, one row per check, summary line
    assert table.count("\n") == len(results[0]) + 1
    assert table.endswith(f"{len(results[0])}/{len(results[0])} checks passed")
