"""Measurement-side pipeline: smoothing, peaks, summaries, selection.

Works identically on simulated spike records and on archived raw
traces ingested from two-column text files (time, voltage). Selection
is rank-based by default: with claimed prevalence 2^-ell the lowest
floor(count * prevalence * margin) message means are flagged. Rank
selection needs no amplitude calibration and is invariant under any
monotone rescaling of the spike axis; the attack's subset resampling
absorbs the false positives the margin lets in.
"""

import os
from dataclasses import dataclass

import numpy as np

from ._fsio import atomic_write_text
from .leakage import SpikeRecord


class AnalysisError(ValueError):
    pass


@dataclass
class RawTrace:
    t: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class MessageSummary:
    message_id: int
    mean_spike: float
    std_spike: float
    n_traces: int


@dataclass(frozen=True)
class SelectionConfig:
    claimed_zero_bits: int
    expected_prevalence: float | None = None
    margin: float = 1.5
    mode: str = "rank"
    threshold: float | None = None

    def prevalence(self) -> float:
        if self.expected_prevalence is not None:
            if not 0 < self.expected_prevalence <= 1:
                raise AnalysisError("expected_prevalence must lie in (0, 1]")
            return self.expected_prevalence
        return 2.0 ** -self.claimed_zero_bits


def moving_average(v, w: int = 10) -> np.ndarray:
    """Unweighted sliding mean, valid windows only (len(v) - w + 1)."""
    v = np.asarray(v, dtype=np.float64)
    if w < 1:
        raise AnalysisError("window must be >= 1")
    if v.ndim != 1 or len(v) < w:
        raise AnalysisError("input shorter than the filter window")
    kernel = np.full(w, 1.0 / w)
    return np.convolve(v, kernel, mode="valid")


def extract_peak(filtered) -> float:
    arr = np.asarray(filtered, dtype=np.float64)
    if arr.size == 0:
        raise AnalysisError("cannot take the peak of an empty array")
    return float(arr.max())


def summarize(records: list[SpikeRecord]) -> list[MessageSummary]:
    """Per-message mean/std (population) over that message's traces."""
    spikes: dict[int, list[float]] = {}
    for rec in records:
        spikes.setdefault(rec.message_id, []).append(rec.spike)
    out = []
    for mid in sorted(spikes):
        arr = np.array(spikes[mid])
        out.append(MessageSummary(mid, float(arr.mean()), float(arr.std()), len(arr)))
    return out


def select_low_spike(summaries: list[MessageSummary], cfg: SelectionConfig) -> list[int]:
    """Message ids flagged as likely high-zero nonces, lowest mean first."""
    ranked = sorted(summaries, key=lambda s: (s.mean_spike, s.message_id))
    if cfg.mode == "rank":
        if cfg.margin < 1:
            raise AnalysisError("margin must be >= 1")
        quota = int(len(summaries) * cfg.prevalence() * cfg.margin)
        return [s.message_id for s in ranked[:quota]]
    if cfg.mode == "threshold":
        if cfg.threshold is None:
            raise AnalysisError("threshold mode needs a threshold value")
        return [s.message_id for s in ranked if s.mean_spike < cfg.threshold]
    raise AnalysisError(f"unknown selection mode {cfg.mode!r}")


def parse_raw_trace(path) -> RawTrace:
    """Two numeric columns (time, voltage), comma or whitespace
    separated, one optional non-numeric header line."""
    ts: list[float] = []
    vs: list[float] = []
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.replace(",", " ").split()
            try:
                values = [float(x) for x in fields]
            except ValueError:
                if lineno == 1:
                    continue
                raise AnalysisError(f"{path}:{lineno}: non-numeric row") from None
            if len(values) != 2:
                raise AnalysisError(f"{path}:{lineno}: expected 2 columns, got {len(values)}")
            ts.append(values[0])
            vs.append(values[1])
    if not ts:
        raise AnalysisError(f"{path}: no data rows")
    t = np.array(ts)
    v = np.array(vs)
    if not (np.diff(t) > 0).all():
        raise AnalysisError(f"{path}: time column must be strictly increasing")
    return RawTrace(t, v)


def ingest_raw(
    path, trace_id: int = 0, message_id: int = 0, window: int = 10
) -> tuple[RawTrace, SpikeRecord]:
    """Load a raw trace and extract its spike (filter then peak)."""
    raw = parse_raw_trace(path)
    if len(raw.v) < window:
        raise AnalysisError(f"{path}: fewer samples than the filter window ({window})")
    spike = extract_peak(moving_average(raw.v, window))
    return raw, SpikeRecord(trace_id, message_id, "ingested", 1, spike, None)


def ingest_directory(paths, window: int = 10):
    """Ingest many trace files; returns (records, errors).

    message_id follows the sorted file order; malformed files are
    reported and skipped rather than aborting the batch.
    """
    records: list[SpikeRecord] = []
    errors: list[tuple[str, str]] = []
    for message_id, path in enumerate(sorted(os.fspath(p) for p in paths)):
        try:
            _, rec = ingest_raw(path, trace_id=message_id, message_id=message_id, window=window)
            records.append(rec)
        except (AnalysisError, OSError) as exc:
            errors.append((path, str(exc)))
    return records, errors


SUMMARY_HEADER = "message_id,mean_spike,std_spike,n_traces"


def summary_csv_text(summaries: list[MessageSummary]) -> str:
    lines = [SUMMARY_HEADER]
    for s in summaries:
        lines.append(f"{s.message_id},{s.mean_spike!r},{s.std_spike!r},{s.n_traces}")
    return "\n".join(lines) + "\n"


def write_summary_csv(summaries: list[MessageSummary], path) -> None:
    atomic_write_text(path, summary_csv_text(summaries))


def write_selection(message_ids: list[int], path) -> None:
    atomic_write_text(path, "".join(f"{mid}\n" for mid in message_ids))
