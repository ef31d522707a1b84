from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agitrack.ingest import (
    ParseError,
    PasEntry,
    SensorStream,
    SessionData,
    ShiftLabel,
    ValidationError,
    group_sessions,
    load_label_manifest,
    load_pas_manifest,
    parse_session,
    pas_missing_fractions,
    write_label_manifest,
    write_pas_manifest,
    write_session,
)

START = 1577862000  # 2020-01-01 07:00 UTC


def _write(path, text):
    path.write_text(text, encoding="ascii", newline="")


def _e4_dir(tmp_path, rates=(32, 64, 4, 4), n_sec=2):
    d = tmp_path / "P7" / "s1"
    d.mkdir(parents=True)
    acc_rate, bvp_rate, eda_rate, temp_rate = rates
    acc = "\n".join("12,-3,60" for _ in range(acc_rate * n_sec))
    _write(d / "ACC.csv", f"{START}, {START}, {START}\n{acc_rate}, {acc_rate}, {acc_rate}\n{acc}\n")
    for name, rate in (("BVP", bvp_rate), ("EDA", eda_rate), ("TEMP", temp_rate)):
        body = "\n".join(f"{0.5 * i:.2f}" for i in range(rate * n_sec))
        _write(d / f"{name}.csv", f"{START}.000000\n{rate}.000000\n{body}\n")
    return d


def test_parse_e4_directory_rates(tmp_path):
    s = parse_session(_e4_dir(tmp_path))
    assert s.participant_id == "P7"
    assert s.session_date == date(2020, 1, 1)
    assert {m: st.rate_hz for m, st in s.streams.items()} == {"ACC": 32, "BVP": 64, "EDA": 4, "TEMP": 4}
    assert s.streams["ACC"].samples.shape == (64, 3)
    assert len(s.streams["BVP"]) == 128


def test_partial_directory(tmp_path):
    d = _e4_dir(tmp_path)
    for name in ("ACC", "BVP", "TEMP"):
        (d / f"{name}.csv").unlink()
    s = parse_session(d)
    assert list(s.streams) == ["EDA"]


def test_zero_rate_is_validation_error(tmp_path):
    d = _e4_dir(tmp_path)
    _write(d / "BVP.csv", f"{START}\n0\n1.0\n2.0\n")
    with pytest.raises(ValidationError):
        parse_session(d)


def test_malformed_header_names_file_and_line(tmp_path):
    d = _e4_dir(tmp_path)
    _write(d / "EDA.csv", f"{START}\nfast\n1.0\n")
    with pytest.raises(ParseError) as err:
        parse_session(d)
    assert err.value.line == 2 and "EDA.csv" in str(err.value)


def test_bad_sample_row_located(tmp_path):
    d = _e4_dir(tmp_path)
    _write(d / "TEMP.csv", f"{START}\n4\n33.1\n33.2\nx\n")
    with pytest.raises(ParseError) as err:
        parse_session(d)
    assert err.value.line == 5


def test_crlf_and_trailing_newlines(tmp_path):
    d = _e4_dir(tmp_path)
    ref = parse_session(d)
    for name in ("ACC", "BVP", "EDA", "TEMP"):
        p = d / f"{name}.csv"
        text = p.read_text()
        _write(p, text.replace("\n", "\r\n") + "\r\n\r\n")
    again = parse_session(d)
    assert all(ref.streams[m].same_as(again.streams[m]) for m in ref.streams)


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=30, deadline=None)
@given(
    st.lists(finite, min_size=1, max_size=40),
    st.lists(st.tuples(finite, finite, finite), min_size=1, max_size=20),
    st.sampled_from([0.5, 1.0, 4.0, 32.0, 64.0, 0.25]),
)
def test_round_trip_bit_exact(tmp_path_factory, eda, acc, rate):
    session = SessionData(
        "P1",
        date(2020, 1, 1),
        {
            "EDA": SensorStream("EDA", START, rate, np.array(eda)),
            "ACC": SensorStream("ACC", START + 5, rate * 8, np.array(acc)),
        },
    )
    d = write_session(session, tmp_path_factory.mktemp("rt") / "P1" / "s")
    back = parse_session(d)
    assert back.streams.keys() == session.streams.keys()
    assert all(back.streams[m].same_as(session.streams[m]) for m in session.streams)


def test_group_sessions_orders_and_rejects_overlap():
    def sess(start, n):
        return SessionData("P1", date(2020, 1, 1), {"EDA": SensorStream("EDA", start, 1.0, np.ones(n))})

    a, b = sess(START + 100, 10), sess(START, 50)
    groups = group_sessions([a, b])
    assert groups[("P1", date(2020, 1, 1))] == [b, a]
    with pytest.raises(ValidationError):
        group_sessions([sess(START, 200), sess(START + 100, 10)])


def test_acc_needs_three_axes():
    with pytest.raises(ValidationError):
        SensorStream("ACC", START, 32.0, np.ones((4, 2)))


def _labels_file(tmp_path, rows):
    p = tmp_path / "labels.csv"
    p.write_text("participant_id,date,shift_kind,agitation\n" + "".join(r + "\n" for r in rows))
    return p


def test_label_manifest_positive_ratio(tmp_path):
    rows = [f"P{i // 20},2020-01-{1 + (i % 20) // 2:02d},{('Morning', 'Evening')[i % 2]},{int(i < 140)}" for i in range(693)]
    labels = load_label_manifest(_labels_file(tmp_path, rows))
    assert len(labels) == 693
    assert sum(l.agitation for l in labels) / 693 == pytest.approx(0.202, abs=5e-4)


def test_label_manifest_header_only(tmp_path):
    assert load_label_manifest(_labels_file(tmp_path, [])) == []


def test_label_manifest_duplicate_key(tmp_path):
    p = _labels_file(tmp_path, ["P1,2020-01-01,Morning,0", "P1,2020-01-01,Morning,1"])
    with pytest.raises(ParseError, match="duplicate"):
        load_label_manifest(p)


def test_label_manifest_bad_value_row_number(tmp_path):
    p = _labels_file(tmp_path, ["P1,2020-01-01,Morning,0", "P1,2020-01-02,Morning,2"])
    with pytest.raises(ParseError) as err:
        load_label_manifest(p)
    assert err.value.line == 3


def test_label_manifest_round_trip(tmp_path):
    labels = [ShiftLabel("P1", date(2020, 1, 1), "Morning", 1), ShiftLabel("P2", date(2020, 1, 3), "Evening", 0)]
    write_label_manifest(labels, tmp_path / "l.csv")
    assert load_label_manifest(tmp_path / "l.csv") == labels


def _pas_file(tmp_path, rows):
    p = tmp_path / "pas.csv"
    p.write_text("participant_id,date,shift_kind,AV,MA,AG,RC\n" + "".join(r + "\n" for r in rows))
    return p


def test_pas_missing_fraction(tmp_path):
    # 1472 of 10000 AV cells empty
    rows = [f"P{i // 400},{date.fromordinal(737425 + (i % 400) // 2)},{('Morning', 'Evening')[i % 2]},{'' if i < 1472 else 1},0,0,0" for i in range(10000)]
    entries = load_pas_manifest(_pas_file(tmp_path, rows))
    frac = pas_missing_fractions(entries)
    assert frac["AV"] == pytest.approx(0.1472, abs=1e-12)
    assert frac["MA"] == 0.0


def test_pas_all_zero_valid(tmp_path):
    entries = load_pas_manifest(_pas_file(tmp_path, ["P1,2020-01-01,Morning,0,0,0,0"]))
    assert entries[0].scores == (0, 0, 0, 0)


@pytest.mark.parametrize("bad", ["-1", "5"])
def test_pas_range_error(tmp_path, bad):
    with pytest.raises(ParseError, match="outside"):
        load_pas_manifest(_pas_file(tmp_path, [f"P1,2020-01-01,Morning,0,{bad},0,0"]))


def test_pas_round_trip(tmp_path):
    entries = [PasEntry("P1", date(2020, 1, 1), "Morning", (None, 3, 0, None))]
    write_pas_manifest(entries, tmp_path / "p.csv")
    assert load_pas_manifest(tmp_path / "p.csv") == entries
