from __future__ import annotations

import json

import pytest

from hypbilliards.tiling import build_atlas
from hypbilliards.verify import VerifyReport, verify_all, verify_counts, verify_dynamics, verify_reduction


@pytest.fixture(scope="module")
def a37():
    return build_atlas(3, 7, 8)


@pytest.fixture(scope="module")
def a45():
    return build_atlas(4, 5, 8)


def test_counts_report_37(a37):
    rep = verify_counts(3, 7, 4, a37)
    assert rep.passed, rep.summary()
    sizes = [c.observed for c in rep.checks if c.name.startswith("N-gon layer") and "size" in c.name]
    assert sizes == [3, 12, 33, 87]
    q2 = [f for f in rep.findings if f["kind"] == "q_printed" and f["k"] == 2][0]
    assert (q2["printed"], q2["geometric"]) == (pytest.approx(4.0), 12)
    assert any("q_printed = 4" in note for note in rep.discrepancy_notes)


def test_counts_report_45(a45):
    rep = verify_counts(4, 5, 4, a45)
    assert rep.passed, rep.summary()
    sizes = [c.observed for c in rep.checks if c.name.startswith("N-gon layer") and "size" in c.name]
    assert sizes == [4, 20, 76, 284]


def test_dynamics_reports(a37, a45):
    r37 = verify_dynamics(3, 7, 4, a37, n_points=30, iters=20_000)
    assert r37.passed, r37.summary()
    jumps = {c.name: c.observed for c in r37.checks if "jump vs" in c.name}
    assert jumps["N-gon layer 2 jump vs p_k"] == 5
    assert jumps["N-gon layer 3 jump vs p_k"] == 14
    assert jumps["M-gon layer 2 jump vs j_k"] == 19
    r45 = verify_dynamics(4, 5, 4, a45, n_points=30, iters=20_000)
    assert r45.passed, r45.summary()
    s3 = [f for f in r45.findings if f["kind"] == "s_sign" and f["k"] == 3][0]
    assert s3["simulated"] == 8 and s3["minus_form"] == pytest.approx(8.0)
    assert s3["plus_form"] == pytest.approx(7.660254, abs=1e-6)


def test_off_by_one_jump_fails(a37):
    rep = verify_dynamics(3, 7, 2, a37, n_points=10, iters=5_000, jump_offset=1)
    assert not rep.passed
    assert any("jump vs p_k" in c.name for c in rep.failures())


def test_reduction():
    rep = verify_reduction(5)
    assert rep.passed, rep.summary()
    names = {c.name: c for c in rep.checks}
    assert names["rank 2 size: geometry vs recurrence"].observed == 15
    assert names["rank 2 jump vs p"].observed == 4


def test_report_json_deterministic():
    one = verify_all(4, 5, 2, n_points=10, iters=5_000).to_json()
    two = verify_all(4, 5, 2, n_points=10, iters=5_000).to_json()
    assert one == two
    doc = json.loads(one)
    assert set(doc) == {"pair", "k_max", "pass", "checks", "discrepancy_notes", "findings"}
    assert set(doc["checks"][0]) == {"name", "expected", "observed", "tolerance", "pass"}


def test_report_pass_flag():
    rep = VerifyReport((3, 7), 1)
    rep.exact("a", 1, 1)
    assert rep.passed
    rep.close("b", 1.0, 1.1, 1e-3)
    assert not rep.passed and len(rep.failures()) == 1
    assert "FAIL b" in rep.summary()
