"""Single-point sleep-spike observable simulated from activity traces.

The spike at a sleep-triggered context switch carries two components:
a switch-time term proportional to the Hamming weight of the values
live in the final window of the multiplication, and a residual term
reflecting recently executed work. The residual is modelled as a
leaky integrator over the per-window activity (hw_acc + hd_acc +
hw_selected): a decay-weighted mean over the last ``residual_window``
records, amplified by a saturation factor that grows with the number
of back-to-back signing repetitions before the sleep. Repetition is
meaningful because deterministic nonces make every repetition execute
the identical trace.

The default coefficients are calibration choices of this simulator,
not measured hardware values: they are picked so that class
distributions overlap while class means stay separated, and they are
exposed in the config/CLI so every figure can be regenerated under a
different model. Spike units are arbitrary.
"""

import random
from dataclasses import dataclass

from . import engines, signer
from ._fsio import atomic_write_text
from .curves import CurveParams
from .engines import ActivityTrace
from .signer import NoncePolicy, PrivateKey


class LeakageConfigError(ValueError):
    pass


ZERO_END_DEFAULT = {
    engines.W4_TABLE: "leading",
    engines.W4_QZ: "leading",
    engines.W6_BOOTH: "trailing",
}

GROUPING_WIDTH = {"zero_bits": 1, "zero_nibbles": 4, "zero_chunks": 6}


@dataclass(frozen=True)
class LeakageParams:
    beta0: float = 1.0
    beta1: float = 0.002
    beta2: float = 0.01
    sigma: float = 0.03
    residual_window: int = 64
    decay: float = 0.98

    def __post_init__(self):
        if self.sigma < 0 or self.beta1 < 0 or self.beta2 < 0:
            raise LeakageConfigError("coefficients must be nonnegative")
        if self.residual_window < 1:
            raise LeakageConfigError("residual_window must be >= 1")
        if not 0 < self.decay <= 1:
            raise LeakageConfigError("decay must lie in (0, 1]")


@dataclass(frozen=True)
class ExperimentPlan:
    engine: str
    traces: int
    iterations: int
    messages: tuple[bytes, ...]
    nonces: tuple[int, ...] | None = None
    seed: int = 0
    zero_end: str | None = None

    def __post_init__(self):
        if self.engine not in engines.ENGINES:
            raise LeakageConfigError(f"unknown engine {self.engine!r}")
        if self.traces < 1 or self.iterations < 1:
            raise LeakageConfigError("traces and iterations must be >= 1")
        if not self.messages:
            raise LeakageConfigError("at least one message required")
        if self.nonces is not None and len(self.nonces) != len(self.messages):
            raise LeakageConfigError("one injected nonce per message required")


@dataclass
class SpikeRecord:
    trace_id: int
    message_id: int
    engine: str
    iterations: int
    spike: float
    truth_zero_bits: int | None


def activity_series(trace: ActivityTrace) -> list[int]:
    return [r.hw_acc + r.hd_acc + r.hw_selected for r in trace.records]


def simulate_spike(trace: ActivityTrace, iterations: int, params: LeakageParams, rng) -> float:
    """One spike amplitude for a trace repeated `iterations` times.

    amplitude = beta0 + beta1 * snapshot_hw + beta2 * Ebar * amp + noise

    Ebar is the decay-weighted mean activity over the last
    residual_window records of the repeated stream. amp is the leaky
    integrator's saturation factor (1 - decay^(L * iterations)) /
    (1 - decay^L): it equals 1 for a single execution and grows toward
    its limit as repetitions keep the residual reservoir charged, which
    is what makes large iteration counts raise class separation.
    """
    records = trace.records
    length = len(records)
    if length == 0:
        raise LeakageConfigError("empty activity trace")
    if iterations < 1:
        raise LeakageConfigError("iterations must be >= 1")
    acts = activity_series(trace)
    total = length * iterations
    take = min(params.residual_window, total)
    num = 0.0
    den = 0.0
    weight = 1.0
    for age in range(take):
        num += weight * acts[(total - 1 - age) % length]
        den += weight
        weight *= params.decay
    ebar = num / den
    if params.decay == 1.0:
        amp = float(iterations)
    else:
        per_run = params.decay**length
        amp = (1.0 - per_run**iterations) / (1.0 - per_run)
    spike = params.beta0 + params.beta1 * trace.final_snapshot_hw + params.beta2 * ebar * amp
    if params.sigma > 0:
        spike += rng.gauss(0.0, params.sigma)
    return spike


def message_trace(
    plan: ExperimentPlan, index: int, key: PrivateKey, curve: CurveParams
) -> tuple[ActivityTrace, int]:
    """Instrumented signing of plan.messages[index]; returns (trace, nonce).

    Deterministic nonces make this independent of how many times the
    message is signed, so run_plan computes it once per message.
    """
    message = plan.messages[index]
    if plan.nonces is not None:
        nonce = plan.nonces[index]
        policy = NoncePolicy.injected(nonce)
    else:
        nonce = signer.rfc6979_nonce(key, message, curve)
        policy = NoncePolicy.deterministic()
    probe = engines.ActivityProbe()
    signer.ecdsa_sign(message, key, curve, policy=policy, engine=plan.engine, probe=probe)
    return probe.trace(plan.engine), nonce


def run_plan(
    plan: ExperimentPlan, key: PrivateKey, curve: CurveParams, params: LeakageParams
) -> list[SpikeRecord]:
    """Execute the signing/sleep loop: one spike per trace.

    Traces round-robin over the message list. Noise comes from
    per-trace substreams seeded by (plan.seed, trace_id), so records
    are reproducible and order-independent.
    """
    end = plan.zero_end or ZERO_END_DEFAULT[plan.engine]
    per_message = []
    for i in range(len(plan.messages)):
        trace, nonce = message_trace(plan, i, key, curve)
        per_message.append((trace, signer.nonce_zero_bits(nonce, curve, end)))
    records = []
    for trace_id in range(plan.traces):
        message_id = trace_id % len(plan.messages)
        trace, truth = per_message[message_id]
        rng = random.Random(f"{plan.seed}:spike:{trace_id}")
        spike = simulate_spike(trace, plan.iterations, params, rng)
        records.append(
            SpikeRecord(trace_id, message_id, plan.engine, plan.iterations, spike, truth)
        )
    return records


@dataclass(frozen=True)
class FigurePoint:
    z: int
    mean_spike: float
    std: float
    count: int


def figure_series(
    records: list[SpikeRecord], grouping: str, messages_per_class: int = 4
) -> list[FigurePoint]:
    """Per-class aggregation mirroring the measurement methodology:
    each class point is the mean over per-message mean spikes.

    grouping converts truth_zero_bits into the class label z:
    zero_bits keeps it, zero_nibbles divides by 4, zero_chunks by 6.
    """
    if grouping not in GROUPING_WIDTH:
        raise LeakageConfigError(f"unknown grouping {grouping!r}")
    width = GROUPING_WIDTH[grouping]
    by_message: dict[int, list[float]] = {}
    z_of_message: dict[int, int] = {}
    for rec in records:
        if rec.truth_zero_bits is None:
            raise LeakageConfigError("records lack truth labels; rerun in simulation mode")
        by_message.setdefault(rec.message_id, []).append(rec.spike)
        z_of_message[rec.message_id] = rec.truth_zero_bits // width
    classes: dict[int, list[tuple[int, list[float]]]] = {}
    for mid, spikes in by_message.items():
        classes.setdefault(z_of_message[mid], []).append((mid, spikes))
    points = []
    for z in sorted(classes):
        members = sorted(classes[z])[:messages_per_class]
        means = [sum(s) / len(s) for _, s in members]
        grand = sum(means) / len(means)
        var = sum((m - grand) ** 2 for m in means) / len(means)
        count = sum(len(s) for _, s in members)
        points.append(FigurePoint(z, grand, var**0.5, count))
    return points


# scenario construction: nonces with a prescribed zero pattern


def nonce_with_zero_windows(
    curve: CurveParams, z: int, width: int, end: str, rng, max_tries: int = 10000
) -> int:
    """Nonce with exactly z zero windows at the stated end.

    width 1 means plain bits (for bit-level figure classes), 4 and 6
    follow the engines' window geometry. Constructions are
    rejection-checked, so the count is exact and the value lies in
    [1, n-1].
    """
    order = "msb_first" if end == "leading" else "lsb_first"
    if width == 1:
        total = curve.bits
        if not 0 <= z < total:
            raise LeakageConfigError(f"z must lie in [0, {total - 1}] for this curve")
        for _ in range(max_tries):
            if end == "leading":
                k = rng.getrandbits(total - z - 1) | (1 << (total - z - 1))
                ok = 1 <= k < curve.n and signer.leading_zero_bits(k, total) == z
            else:
                k = (rng.getrandbits(total - z - 1) << (z + 1)) | (1 << z)
                ok = 1 <= k < curve.n and signer.trailing_zero_bits(k, total) == z
            if ok:
                return k
        raise LeakageConfigError(f"could not construct a nonce with {z} zero bits")
    if width == 4:
        total = engines.frame_bytes(curve) * 2
    elif width == 6:
        total = engines.booth_window_count(curve.bits)
    else:
        raise LeakageConfigError("window width must be 1, 4 or 6")
    if not 0 <= z < total:
        raise LeakageConfigError(f"z must lie in [0, {total - 1}] for this curve")
    frame_bits = engines.frame_bytes(curve) * 8 if width == 4 else curve.bits
    for _ in range(max_tries):
        if width == 4:
            low = frame_bits - 4 * (z + 1)
            head = rng.randrange(1, 16)
            if end == "leading":
                k = (head << low) | rng.getrandbits(low)
            else:
                k = (rng.getrandbits(low) << (4 * (z + 1))) | (head << (4 * z))
        else:
            if end == "trailing":
                rest = frame_bits - 6 * z - 6
                k = (rng.getrandbits(max(rest, 0)) << (6 * z + 6)) | (
                    rng.randrange(1, 64) << (6 * z)
                )
            else:
                # highest nonzero digit index i: bits above 6i+4 clear,
                # top set bit in [6i, 6i+4] makes digit i nonzero
                i = total - z - 1
                lo = 1 << (6 * i)
                hi = min(1 << (6 * i + 5), curve.n)
                k = rng.randrange(lo, hi)
        if 1 <= k < curve.n and engines.leading_zero_windows(k, curve, width, order) == z:
            return k
    raise LeakageConfigError(f"could not construct a nonce with {z} zero windows")


def build_zero_class_plan(
    engine: str,
    curve: CurveParams,
    classes: list[int],
    traces_per_class: int,
    iterations: int,
    seed: int,
    messages_per_class: int = 4,
    width: int | None = None,
    end: str | None = None,
) -> ExperimentPlan:
    """Plan with injected nonces spanning the requested zero classes.

    Message search at high zero counts costs ~2^(width * z) derivations
    per message, so class scenarios inject nonces instead; messages are
    synthetic placeholders whose content only feeds the hash. width 1
    builds bit-level classes; the default follows the engine geometry.
    """
    if width is None:
        width = 6 if engine == engines.W6_BOOTH else 4
    if end is None:
        end = ZERO_END_DEFAULT[engine]
    rng = random.Random(f"{seed}:classgen")
    messages = []
    nonces = []
    for z in classes:
        for i in range(messages_per_class):
            messages.append(f"class z={z} message {i} seed {seed}".encode())
            nonces.append(nonce_with_zero_windows(curve, z, width, end, rng))
    return ExperimentPlan(
        engine=engine,
        traces=traces_per_class * len(classes),
        iterations=iterations,
        messages=tuple(messages),
        nonces=tuple(nonces),
        seed=seed,
        zero_end=end,
    )


# CSV interfaces


SPIKE_HEADER = "trace_id,message_id,engine,iterations,spike,truth_zero_bits"


def spike_csv_text(records: list[SpikeRecord]) -> str:
    lines = [SPIKE_HEADER]
    for r in records:
        truth = "" if r.truth_zero_bits is None else str(r.truth_zero_bits)
        lines.append(
            f"{r.trace_id},{r.message_id},{r.engine},{r.iterations},{r.spike!r},{truth}"
        )
    return "\n".join(lines) + "\n"


def write_spike_csv(records: list[SpikeRecord], path) -> None:
    atomic_write_text(path, spike_csv_text(records))


def read_spike_csv(path) -> list[SpikeRecord]:
    records = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != SPIKE_HEADER:
            raise LeakageConfigError(f"{path}: unexpected header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 6:
                raise LeakageConfigError(f"{path}:{lineno}: expected 6 fields")
            try:
                records.append(
                    SpikeRecord(
                        trace_id=int(parts[0]),
                        message_id=int(parts[1]),
                        engine=parts[2],
                        iterations=int(parts[3]),
                        spike=float(parts[4]),
                        truth_zero_bits=int(parts[5]) if parts[5] else None,
                    )
                )
            except ValueError as exc:
                raise LeakageConfigError(f"{path}:{lineno}: bad field") from exc
    return records


def write_figure_csv(points: list[FigurePoint], path) -> None:
    lines = ["z,mean_spike,std,count"]
    for pt in points:
        lines.append(f"{pt.z},{pt.mean_spike!r},{pt.std!r},{pt.count}")
    atomic_write_text(path, "\n".join(lines) + "\n")
