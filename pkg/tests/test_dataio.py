import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsurv.dataio import (
    DataError,
    LongitudinalSample,
    MixedSurvivalDataset,
    SurvivalRecord,
    infer_window,
    join,
    load_longitudinal,
    load_survival,
    write_dataset,
)


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_groups_and_sorts_rows(tmp_path):
    f = _write(tmp_path / "l.csv", "id,time,value\na,3,30\nb,1,5\na,1,10\na,2,20\n")
    samples = {s.subject_id: s for s in load_longitudinal(f)}
    assert samples["a"].times.tolist() == [1.0, 2.0, 3.0]
    assert samples["a"].values.tolist() == [10.0, 20.0, 30.0]
    assert samples["b"].times.tolist() == [1.0]


def test_duplicate_observation_named(tmp_path):
    f = _write(tmp_path / "l.csv", "id,time,value\na,2,1\na,2,3\n")
    with pytest.raises(DataError, match=r"line 3.*'a'"):
        load_longitudinal(f)


@pytest.mark.parametrize(
    "body",
    ["id,time,value\na,x,1\n", "id,time,value\na,1,nan\n", "id,t,value\na,1,1\n", "id,time,value\na,1\n"],
)
def test_bad_longitudinal_rows(tmp_path, body):
    with pytest.raises(DataError):
        load_longitudinal(_write(tmp_path / "l.csv", body))


def test_survival_parse(tmp_path):
    f = _write(tmp_path / "s.csv", "id,time,status,x1\na,10,1,0.5\n")
    (rec,) = load_survival(f)
    assert (rec.subject_id, rec.event_time, rec.status, rec.covariates.tolist()) == ("a", 10.0, 1, [0.5])


def test_survival_without_covariates(tmp_path):
    (rec,) = load_survival(_write(tmp_path / "s.csv", "id,time,status\na,4,0\n"))
    assert rec.covariates.shape == (0,)


@pytest.mark.parametrize(
    "body",
    [
        "id,time,status,x1\na,10,2,0.5\n",
        "id,time,status,x1\na,10,1,\n",
        "id,time,status,x1\na,10,1\n",
        "id,time,status\na,-1,1\n",
        "id,time,status\na,1,1\na,2,0\n",
    ],
)
def test_bad_survival_rows(tmp_path, body):
    with pytest.raises(DataError):
        load_survival(_write(tmp_path / "s.csv", body))


def _pair(sid, times, t_star=5.0, status=1, x=(0.0,)):
    return LongitudinalSample(sid, times, np.ones(len(times))), SurvivalRecord(sid, t_star, status, np.array(x))


def test_join_two_subjects_and_keeps_late_observations():
    la, ra = _pair("a", [1.0, 6.0], t_star=2.0)
    lb, rb = _pair("b", [2.0], status=0)
    ds = join([lb, la], [ra, rb], (0.0, 10.0))
    assert len(ds) == 2 and ds.ids == ["a", "b"]
    assert ds.samples[0].times.tolist() == [1.0, 6.0]


def test_join_lists_orphans():
    la, ra = _pair("a", [1.0])
    lb, rb = _pair("b", [1.0])
    lc, _ = _pair("c", [1.0])
    with pytest.raises(DataError, match="c"):
        join([la, lb, lc], [ra, rb], (0.0, 10.0))


def test_join_rejects_out_of_window_and_single_subject():
    la, ra = _pair("a", [1.0, 12.0])
    lb, rb = _pair("b", [1.0])
    with pytest.raises(DataError):
        join([la, lb], [ra, rb], (0.0, 10.0))
    with pytest.raises(DataError):
        join([lb], [rb], (0.0, 10.0))


def test_invalid_samples_rejected():
    with pytest.raises(DataError):
        LongitudinalSample("a", [2.0, 1.0], [0.0, 0.0])
    with pytest.raises(DataError):
        LongitudinalSample("a", [], [])
    with pytest.raises(DataError):
        SurvivalRecord("a", 0.0, 1, [])


def test_simulated_dataset_joins_losslessly(tmp_path, scenario_a):
    dataset, _ = scenario_a
    long_path, surv_path = write_dataset(dataset, tmp_path)
    back = join(load_longitudinal(long_path), load_survival(surv_path), dataset.window)
    assert len(back) == 200
    assert back.ids == dataset.ids
    for (s0, r0), (s1, r1) in zip(dataset.records, back.records):
        assert np.array_equal(s0.times, s1.times) and np.array_equal(s0.values, s1.values)
        assert r0.event_time == r1.event_time and r0.status == r1.status
        assert np.array_equal(r0.covariates, r1.covariates)


def test_json_roundtrip(scenario_a):
    dataset, _ = scenario_a
    payload = dataset.to_json()
    assert set(payload) == {"window", "subjects"}
    assert set(payload["subjects"][0]) == {"id", "times", "values", "event_time", "status", "covariates"}
    back = MixedSurvivalDataset.from_json(payload)
    assert back.to_json() == payload


def test_infer_window_covers_everything(scenario_a):
    dataset, _ = scenario_a
    lo, hi = infer_window(dataset.samples, [r for _, r in dataset.records])
    assert lo <= min(s.times[0] for s in dataset.samples)
    assert hi >= dataset.event_times.max()


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@given(
    st.lists(st.tuples(st.integers(0, 4), st.integers(0, 50), finite), min_size=2, max_size=40, unique_by=lambda r: r[:2]),
    st.randoms(),
)
@settings(max_examples=50, deadline=None)
def test_roundtrip_and_row_order_insensitive(tmp_path_factory, rows, rnd):
    tmp = tmp_path_factory.mktemp("rt")
    ids = sorted({f"id{k}" for k, _, _ in rows})
    if len(ids) < 2:
        return
    surv = [(sid, 51.0 + n, n % 2, 0.1 * n) for n, sid in enumerate(ids)]

    def dump(long_rows, surv_rows, tag):
        lp, sp = tmp / f"l{tag}.csv", tmp / f"s{tag}.csv"
        lp.write_text("id,time,value\n" + "".join(f"id{k},{t!r},{v!r}\n" for k, t, v in long_rows))
        sp.write_text("id,time,status,x1\n" + "".join(f"{s},{t!r},{d},{x!r}\n" for s, t, d, x in surv_rows))
        return join(load_longitudinal(lp), load_survival(sp), (0.0, 100.0))

    shuffled_rows, shuffled_surv = list(rows), list(surv)
    rnd.shuffle(shuffled_rows)
    rnd.shuffle(shuffled_surv)
    a = dump(rows, surv, "a")
    b = dump(shuffled_rows, shuffled_surv, "b")
    assert a.to_json() == b.to_json()
    out = tmp / "out"
    lp, sp = write_dataset(a, out)
    c = join(load_longitudinal(lp), load_survival(sp), (0.0, 100.0))
    assert c.to_json() == a.to_json()
