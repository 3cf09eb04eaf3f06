import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sleepspike.analysis import (
    AnalysisError,
    MessageSummary,
    SelectionConfig,
    extract_peak,
    ingest_directory,
    ingest_raw,
    moving_average,
    parse_raw_trace,
    select_low_spike,
    summarize,
    summary_csv_text,
    write_selection,
    write_summary_csv,
)
from sleepspike.leakage import SpikeRecord


def test_moving_average_constant_input():
    out = moving_average([5.0] * 30, 10)
    assert out.shape == (21,)
    assert np.allclose(out, 5.0)


def test_moving_average_unit_impulse_plateau():
    v = [0.0] * 30
    v[15] = 1.0
    out = moving_average(v, 10)
    assert out.max() == pytest.approx(0.1)
    assert np.count_nonzero(np.isclose(out, 0.1)) == 10


def _brute_windowed_mean(v, w):
    return [sum(v[i : i + w]) / w for i in range(len(v) - w + 1)]


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(min_value=-1e3, max_value=1e3), min_size=10, max_size=80),
    st.integers(min_value=1, max_value=10),
)
def test_moving_average_matches_brute_force(values, w):
    got = moving_average(values, w)
    want = _brute_windowed_mean(values, w)
    assert np.all(np.abs(got - np.array(want)) <= 1e-12)


def test_moving_average_rejects_short_input():
    with pytest.raises(AnalysisError):
        moving_average([1.0, 2.0], 10)
    with pytest.raises(AnalysisError):
        moving_average([1.0], 0)


def test_extract_peak_examples():
    assert extract_peak([1.0, 3.0, 2.0]) == 3.0
    ramp = list(range(50))
    assert extract_peak(ramp) == 49.0
    with pytest.raises(AnalysisError):
        extract_peak([])


def test_extract_peak_matches_brute_max(rng):
    for _ in range(100):
        v = [rng.uniform(-10, 10) for _ in range(rng.randrange(1, 50))]
        assert extract_peak(v) == max(v)


def test_summarize_single_and_symmetric():
    one = summarize([SpikeRecord(0, 3, "e", 1, 2.5, None)])
    assert one == [MessageSummary(3, 2.5, 0.0, 1)]
    sym = summarize(
        [SpikeRecord(0, 1, "e", 1, 4.0 + 0.5, None), SpikeRecord(1, 1, "e", 1, 4.0 - 0.5, None)]
    )
    assert sym[0].mean_spike == pytest.approx(4.0)
    assert sym[0].std_spike == pytest.approx(0.5)


def test_summarize_matches_recomputation(rng):
    records = [
        SpikeRecord(i, i % 5, "e", 1, rng.uniform(0, 10), None) for i in range(50)
    ]
    for s in summarize(records):
        spikes = [r.spike for r in records if r.message_id == s.message_id]
        mean = sum(spikes) / len(spikes)
        var = sum((x - mean) ** 2 for x in spikes) / len(spikes)
        assert s.mean_spike == pytest.approx(mean)
        assert s.std_spike == pytest.approx(math.sqrt(var))
        assert s.n_traces == len(spikes)


def _make_summaries(means):
    return [MessageSummary(i, m, 0.0, 1) for i, m in enumerate(means)]


def test_select_rank_quota_arithmetic(rng):
    means = [rng.uniform(1, 2) for _ in range(160)]
    cfg = SelectionConfig(claimed_zero_bits=4, margin=1.0)  # prevalence 1/16
    picked = select_low_spike(_make_summaries(means), cfg)
    assert len(picked) == 10
    floor = sorted(means)[:10]
    assert sorted(means[i] for i in picked) == floor


def test_select_rank_is_invariant_under_monotone_transform(rng):
    means = [rng.uniform(1, 2) for _ in range(64)]
    cfg = SelectionConfig(claimed_zero_bits=3, margin=1.5)
    base = select_low_spike(_make_summaries(means), cfg)
    warped = select_low_spike(_make_summaries([math.exp(3 * m) + 7 for m in means]), cfg)
    assert base == warped


def test_select_threshold_mode():
    cfg = SelectionConfig(claimed_zero_bits=2, mode="threshold", threshold=1.5)
    picked = select_low_spike(_make_summaries([1.0, 2.0, 1.4]), cfg)
    assert picked == [0, 2]
    with pytest.raises(AnalysisError):
        select_low_spike([], SelectionConfig(2, mode="threshold"))


def test_select_empty_result_is_explicit():
    cfg = SelectionConfig(claimed_zero_bits=10, margin=1.0)
    assert select_low_spike(_make_summaries([1.0, 2.0]), cfg) == []


def test_select_noiseless_separation_is_perfect(rng):
    # planted low-spike class, no noise: precision 1.0
    truths = [i < 8 for i in range(128)]
    means = [0.5 if t else rng.uniform(1.0, 2.0) for t in truths]
    cfg = SelectionConfig(claimed_zero_bits=4, expected_prevalence=8 / 128, margin=1.0)
    picked = select_low_spike(_make_summaries(means), cfg)
    assert len(picked) == 8 and all(truths[i] for i in picked)


def test_selection_precision_degrades_with_noise(rng):
    truths = [i < 30 for i in range(1000)]

    def precision(sigma):
        means = [
            (0.6 if t else 1.0) + rng.gauss(0, sigma) for t in truths
        ]
        cfg = SelectionConfig(4, expected_prevalence=30 / 1000, margin=1.0)
        picked = select_low_spike(_make_summaries(means), cfg)
        return sum(truths[i] for i in picked) / len(picked)

    p0, p1, p2 = precision(0.0), precision(0.15), precision(0.5)
    assert p0 == 1.0
    assert p0 >= p1 >= p2


def test_selection_precision_nonincreasing_in_sigma_simulated(p256):
    """Real simulator, sigma in {0, default, 2x default}."""
    import random as _random

    from sleepspike import engines, leakage
    from sleepspike.signer import NoncePolicy, ecdsa_sign, generate_key

    priv, _ = generate_key(p256, _random.Random(40))
    rng = _random.Random(41)
    nonces = []
    truths = []
    for i in range(240):
        planted = i % 12 == 0  # 20 plants
        if planted:
            k = rng.randrange(1, 1 << (p256.bits - 36))
        else:
            k = rng.randrange(1, p256.n)
        nonces.append(k)
        truths.append(planted)
    traces = []
    for i, k in enumerate(nonces):
        probe = engines.ActivityProbe()
        ecdsa_sign(f"prec {i}".encode(), priv, p256,
                   policy=NoncePolicy.injected(k), engine="w4_identity_table", probe=probe)
        traces.append(probe.trace("w4_identity_table"))

    def precision(sigma):
        params = leakage.LeakageParams(sigma=sigma)
        records = [
            SpikeRecord(i, i, "w4_identity_table", 750,
                        leakage.simulate_spike(tr, 750, params, _random.Random(f"p:{sigma}:{i}")),
                        None)
            for i, tr in enumerate(traces)
        ]
        cfg = SelectionConfig(12, expected_prevalence=20 / 240, margin=1.0)
        picked = select_low_spike(summarize(records), cfg)
        return sum(truths[i] for i in picked) / len(picked)

    p0, p1, p2 = precision(0.0), precision(0.03), precision(0.06)
    assert p0 >= p1 >= p2
    assert p0 >= 0.9


def _write_trace(path, rows):
    path.write_text("\n".join(rows) + "\n")


def test_ingest_raw_known_peak(tmp_path):
    # 40 samples: baseline 1.0 with a 10-wide pulse of 1.25
    v = [1.0] * 40
    for i in range(12, 22):
        v[i] = 1.25
    rows = [f"{i * 1e-6},{val}" for i, val in enumerate(v)]
    path = tmp_path / "trace.txt"
    _write_trace(path, rows)
    raw, rec = ingest_raw(path)
    assert len(raw.v) == 40
    assert rec.spike == pytest.approx(1.25)


def test_ingest_raw_accepts_header_and_whitespace(tmp_path):
    path = tmp_path / "trace.txt"
    _write_trace(path, ["time volts"] + [f"{i}  {i * 0.5}" for i in range(20)])
    raw, rec = ingest_raw(path)
    assert len(raw.t) == 20
    assert rec.spike == pytest.approx(sum(range(20)[-10:]) * 0.5 / 10)


def test_ingest_raw_header_only_is_error(tmp_path):
    path = tmp_path / "trace.txt"
    _write_trace(path, ["time volts"])
    with pytest.raises(AnalysisError):
        ingest_raw(path)


def test_ingest_raw_reports_bad_line_number(tmp_path):
    path = tmp_path / "trace.txt"
    _write_trace(path, ["0,1.0", "1,2.0", "2,oops"])
    with pytest.raises(AnalysisError, match=":3"):
        ingest_raw(path)
    _write_trace(path, ["0,1.0", "1"])
    with pytest.raises(AnalysisError, match="2 columns"):
        ingest_raw(path)


def test_ingest_raw_requires_increasing_time(tmp_path):
    path = tmp_path / "trace.txt"
    _write_trace(path, ["0,1.0", "2,2.0", "1,3.0"] + [f"{i+3},0" for i in range(10)])
    with pytest.raises(AnalysisError, match="increasing"):
        ingest_raw(path)


def test_raw_trace_text_round_trip(tmp_path, rng):
    t = sorted(rng.uniform(0, 1) for _ in range(30))
    v = [rng.uniform(-2, 2) for _ in range(30)]
    path = tmp_path / "trace.txt"
    _write_trace(path, [f"{a!r},{b!r}" for a, b in zip(t, v)])
    raw = parse_raw_trace(path)
    assert raw.t.tolist() == t and raw.v.tolist() == v


def test_ingest_directory_mixed(tmp_path):
    good = tmp_path / "a_good.txt"
    _write_trace(good, [f"{i},{1.0 + 0.01 * i}" for i in range(15)])
    bad = tmp_path / "b_bad.txt"
    _write_trace(bad, ["nope"] )
    records, errors = ingest_directory([good, bad])
    assert len(records) == 1 and len(errors) == 1
    assert errors[0][0].endswith("b_bad.txt")


def test_summary_csv_format(tmp_path):
    summaries = [MessageSummary(2, 1.25, 0.5, 4)]
    path = tmp_path / "sum.csv"
    write_summary_csv(summaries, path)
    text = path.read_text()
    assert text.splitlines()[0] == "message_id,mean_spike,std_spike,n_traces"
    assert text == summary_csv_text(summaries)
    assert "2,1.25,0.5,4" in text


def test_selection_output_one_id_per_line(tmp_path):
    path = tmp_path / "sel.txt"
    write_selection([5, 2, 9], path)
    assert path.read_text() == "5\n2\n9\n"
