import logging

import numpy as np
import pytest

from lifecycle_childcare.data import (
    DataError,
    couple_survival,
    load_penalty,
    load_productivity,
    load_survival,
    load_tables,
    load_timeuse,
    synth_defaults,
    type_inputs,
)
from lifecycle_childcare.params import CalibratedParams, HouseholdType


def write_productivity(path, ages):
    lines = ["age,male_college,male_highschool,female_college,female_highschool"]
    lines += [f"{a},{1 + a / 100},{1 + a / 200},{0.8 + a / 100},{0.8 + a / 200}" for a in ages]
    path.write_text("\n".join(lines) + "\n")


def test_well_formed_productivity(tmp_path):
    p = tmp_path / "productivity.csv"
    write_productivity(p, range(20, 66))
    t = load_productivity(p)
    assert t.keys[0] == 20 and t.keys[-1] == 65 and len(t.keys) == 46


def test_missing_age_is_interpolated(tmp_path, caplog):
    p = tmp_path / "productivity.csv"
    write_productivity(p, [a for a in range(20, 66) if a != 40])
    with caplog.at_level(logging.WARNING):
        t = load_productivity(p)
    assert "interpolating" in caplog.text and "40" in caplog.text
    i = 40 - 20
    assert t["male_college"][i] == pytest.approx(0.5 * (t["male_college"][i - 1] + t["male_college"][i + 1]))


def test_flat_extrapolation(tmp_path):
    p = tmp_path / "productivity.csv"
    write_productivity(p, range(20, 66))
    t = load_productivity(p, ages=(20, 100))
    assert t.keys[-1] == 100 and t["male_college"][-1] == t["male_college"][65 - 20]


def test_survival_out_of_range_names_line(tmp_path):
    p = tmp_path / "survival.csv"
    p.write_text("age,male,female\n20,0.99,0.99\n21,1.2,0.99\n")
    with pytest.raises(DataError, match=r"survival.csv:3"):
        load_survival(p)


@pytest.mark.parametrize("body, match", [
    ("age,male,female\n20,0.9\n", ":2: expected 3 fields"),
    ("age,male,female\n20,x,0.9\n", ":2: non-numeric"),
    ("age,male\n20,0.9\n", ":1: missing columns"),
    ("age,male,female\n20,0.9,0.9\n20,0.9,0.9\n", ":3: duplicate"),
    ("", "empty file"),
])
def test_malformed_files(tmp_path, body, match):
    p = tmp_path / "survival.csv"
    p.write_text(body)
    with pytest.raises(DataError, match=match):
        load_survival(p)


def test_negative_productivity_rejected(tmp_path):
    p = tmp_path / "productivity.csv"
    p.write_text("age,male_college,male_highschool,female_college,female_highschool\n20,1,1,-0.1,1\n")
    with pytest.raises(DataError, match="productivity.csv:2"):
        load_productivity(p)


def test_timeuse_over_24_rejected(tmp_path):
    p = tmp_path / "timeuse.csv"
    p.write_text("age,work,leisure,childcare\n20,10,14,1\n")
    with pytest.raises(DataError, match="timeuse.csv:2"):
        load_timeuse(p)


def test_synthetic_defaults_shape():
    t = synth_defaults()
    pr, sv = t.productivity, t.survival
    assert np.all(pr["male_college"] >= pr["male_highschool"])
    assert np.all(pr["female_college"] >= pr["female_highschool"])
    assert np.all(sv["female"] >= sv["male"])
    assert sv["male"][0] > 0.99 and sv["male"][-1] < 0.2
    a = pr.keys
    assert a[np.argmax(pr["male_highschool"])] == 50
    tu = t.timeuse
    assert tu.keys[0] == 20 and tu.keys[-1] == 64
    total = tu["work"] + tu["leisure"] + tu["childcare"]
    assert np.all(total <= 24 + 1e-12)


def test_synthetic_round_trip(tmp_path):
    t = synth_defaults()
    t.write(tmp_path)
    back = load_tables(data_dir=tmp_path, cal=CalibratedParams())
    for name in ("productivity", "survival", "timeuse", "penalty"):
        a, b = getattr(t, name), getattr(back, name)
        assert np.array_equal(a.keys, b.keys)
        for c in a.columns:
            np.testing.assert_allclose(a[c], b[c], rtol=0, atol=1e-12)
    assert load_penalty(tmp_path / "penalty.csv").keys[0] == 0


def test_couple_survival_modes():
    m, f = np.array([0.9, 0.5]), np.array([0.95, 0.6])
    np.testing.assert_allclose(couple_survival(m, f), np.sqrt(m * f))
    assert np.array_equal(couple_survival(m, f, "male"), m)
    assert np.array_equal(couple_survival(m, f, "female"), f)
    with pytest.raises(ValueError):
        couple_survival(m, f, "mean")


def test_type_inputs_cover_model_ages():
    cal = CalibratedParams()
    inp = type_inputs(synth_defaults(cal), HouseholdType("highschool", False), cal)
    assert len(inp.survival) == cal.n_ages
    working = slice(0, cal.j_retire - cal.j_entry + 1)
    assert np.all(inp.kappa_1[working] >= inp.kappa_2[working])
