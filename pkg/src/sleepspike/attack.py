"""End-to-end key-recovery drills tying the pipeline together.

Two entry points:

* :func:`run_oracle_recovery` - the lattice chain alone: inject d
  nonces whose top `ell` bits are zero, sign, build the instance,
  reduce, recover. No classifier in the loop.
* :func:`run_classifier_attack` - the full chain: a large candidate
  pool is signed and spike-simulated, the rank classifier flags
  low-spike messages, and subset resampling over the flagged set
  recovers the key. The pool is salted with planted messages whose
  injected nonces carry more zero bits than the claimed bound
  (plant_zero_bits >= ell), because the zero classes near the claim
  overlap with the bulk under the per-message structural spread; the
  claim fed to the lattice stays `ell`, which is still a sound bound
  for every planted nonce. Truth labels ride along for reporting
  only; the selection and the lattice never see them.

Natural RFC 6979 prevalence of >= ell zero bits is 2^-ell, so an
unsalted 50k-message pool at ell = 12 carries ~12 usable signatures,
below the ~22-sample information floor for a 256-bit order. Planting
is what makes the desk-scale drill solvable at all; the classifier
still has to find the plants among 50k candidates by spike alone.
"""

import random
import time
from dataclasses import dataclass

from . import analysis, engines, lattice, leakage, signer
from .curves import CurveParams, get_curve, scalar_to_hex
from .signer import NoncePolicy, PrivateKey


class AttackConfigError(ValueError):
    pass


@dataclass
class AttackReport:
    success: bool
    key: int | None
    tries: int
    seconds: float
    curve: str
    engine: str | None
    samples_available: int
    d_subset: int
    selected_true: int | None = None
    selected_total: int | None = None

    def render(self, curve: CurveParams) -> str:
        lines = [
            f"status: {'recovered' if self.success else 'not-found'}",
            f"curve: {self.curve}",
        ]
        if self.engine:
            lines.append(f"engine: {self.engine}")
        if self.selected_total is not None:
            lines.append(
                f"selected: {self.selected_total} messages"
                f" ({self.selected_true} with the claimed zero bits)"
            )
        lines.append(f"samples: {self.samples_available} available, {self.d_subset} per try")
        lines.append(f"tries: {self.tries}")
        lines.append(f"time_seconds: {self.seconds:.2f}")
        if self.success and self.key is not None:
            lines.append(f"key: {scalar_to_hex(self.key, curve)}")
            lines.append("verified: true")
        return "\n".join(lines) + "\n"


def _signature_with_nonce(message: bytes, k: int, priv: PrivateKey, curve: CurveParams):
    sig = signer.ecdsa_sign(message, priv, curve, policy=NoncePolicy.injected(k))
    return sig, signer.message_hash(message, curve)


def run_oracle_recovery(
    curve: CurveParams,
    d: int,
    ell: int,
    seed: int,
    priv: PrivateKey | None = None,
    max_tries: int = 1,
    delta: float = 0.99,
) -> AttackReport:
    """Recover the key from d signatures with oracle-exact zero bounds."""
    if d < 2 or not 1 <= ell < curve.bits:
        raise AttackConfigError("need d >= 2 and 1 <= ell < curve bits")
    rng = random.Random(f"{seed}:oracle")
    if priv is None:
        priv, pub = signer.generate_key(curve, rng)
    else:
        pub = signer.public_key(priv, curve)
    sigs = []
    for i in range(d):
        k = rng.randrange(1, 1 << (curve.bits - ell))
        message = f"oracle drill {seed} message {i}".encode()
        sigs.append(_signature_with_nonce(message, k, priv, curve))
    inst = lattice.build_instance(sigs, [ell] * d, curve)
    result = lattice.attack_with_resampling(
        inst.samples,
        pub,
        curve,
        d_subset=d,
        max_tries=max_tries,
        rng=rng,
        params=lattice.LLLParams(delta),
    )
    assert result.key is None or result.key == priv.d
    return AttackReport(
        success=result.success,
        key=result.key,
        tries=result.tries,
        seconds=result.seconds,
        curve=curve.name,
        engine=None,
        samples_available=d,
        d_subset=d,
    )


@dataclass(frozen=True)
class ClassifierScenario:
    curve: str = "p256"
    engine: str = engines.W4_TABLE
    ell: int = 12
    pool: int = 50_000
    plants: int = 60
    plant_zero_bits: int | None = None  # default: see plant_bits
    traces_per_message: int = 4
    iterations: int = 750
    margin: float = 1.5
    d_subset: int | None = None
    max_tries: int = 20
    delta: float = 0.99
    seed: int = 0

    def plant_bits(self) -> int:
        """Zero bits carried by planted nonces (the claim stays `ell`).

        Interior zero windows of ordinary nonces give every message a
        fixed spike offset, so rank selection only isolates a planted
        class that sits below the z=0 bulk's noise tail; under the
        default model that takes about nine zero nibbles. Plants also
        need to outnumber the subset size with margin, so the ranked
        prefix draws from the middle of the plant depth distribution.
        """
        if self.plant_zero_bits is not None:
            return self.plant_zero_bits
        return max(self.ell, 36)


def run_classifier_attack(
    scenario: ClassifierScenario,
    params: leakage.LeakageParams | None = None,
    priv: PrivateKey | None = None,
) -> AttackReport:
    """Full chain: pool -> spikes -> rank selection -> lattice resampling.

    The selection output is ordered most-suspicious first, and the
    resampler's first try takes that prefix, so a clean classifier
    usually recovers on try 1; noise and borderline classes fall back
    to the random subsets.
    """
    curve = get_curve(scenario.curve)
    if params is None:
        params = leakage.LeakageParams()
    if not 1 <= scenario.ell < curve.bits:
        raise AttackConfigError("ell out of range")
    if scenario.plant_bits() < scenario.ell:
        raise AttackConfigError("plants must satisfy the claimed bound")
    if scenario.plants > scenario.pool:
        raise AttackConfigError("more plants than candidates")

    rng_key = random.Random(f"{scenario.seed}:key")
    if priv is None:
        priv, pub = signer.generate_key(curve, rng_key)
    else:
        pub = signer.public_key(priv, curve)

    rng_pool = random.Random(f"{scenario.seed}:pool")
    messages = [rng_pool.getrandbits(128).to_bytes(16, "big") for _ in range(scenario.pool)]
    plant_ids = set(rng_pool.sample(range(scenario.pool), scenario.plants))
    plant_nonce_bits = scenario.plant_bits()

    start = time.perf_counter()
    sigs_by_id: dict[int, tuple[signer.Signature, int]] = {}
    truth_bits: dict[int, int] = {}
    records: list[leakage.SpikeRecord] = []
    trace_id = 0
    for mid, message in enumerate(messages):
        if mid in plant_ids:
            k = rng_pool.randrange(1, 1 << (curve.bits - plant_nonce_bits))
            policy = NoncePolicy.injected(k)
        else:
            k = signer.rfc6979_nonce(priv, message, curve)
            policy = NoncePolicy.deterministic()
        probe = engines.ActivityProbe()
        sig = signer.ecdsa_sign(
            message, priv, curve, policy=policy, engine=scenario.engine, probe=probe
        )
        sigs_by_id[mid] = (sig, signer.message_hash(message, curve))
        truth_bits[mid] = signer.leading_zero_bits(k, curve.bits)
        trace = probe.trace(scenario.engine)
        for _ in range(scenario.traces_per_message):
            rng_t = random.Random(f"{scenario.seed}:spike:{trace_id}")
            spike = leakage.simulate_spike(trace, scenario.iterations, params, rng_t)
            records.append(
                leakage.SpikeRecord(
                    trace_id, mid, scenario.engine, scenario.iterations, spike, truth_bits[mid]
                )
            )
            trace_id += 1

    summaries = analysis.summarize(records)
    cfg = analysis.SelectionConfig(
        claimed_zero_bits=scenario.ell,
        expected_prevalence=max(2.0**-scenario.ell, scenario.plants / scenario.pool),
        margin=scenario.margin,
    )
    selected = analysis.select_low_spike(summaries, cfg)

    sigs = [sigs_by_id[mid] for mid in selected]
    inst = lattice.build_instance(sigs, [scenario.ell] * len(sigs), curve)
    d_subset = scenario.d_subset or lattice.default_subset_size(curve, scenario.ell)
    if d_subset > len(inst.samples):
        raise AttackConfigError(
            f"selection produced {len(inst.samples)} samples, fewer than d_subset={d_subset}"
        )
    rng_attack = random.Random(f"{scenario.seed}:resample")
    result = lattice.attack_with_resampling(
        inst.samples,
        pub,
        curve,
        d_subset=d_subset,
        max_tries=scenario.max_tries,
        rng=rng_attack,
        params=lattice.LLLParams(scenario.delta),
    )
    seconds = time.perf_counter() - start
    true_selected = sum(1 for mid in selected if truth_bits[mid] >= scenario.ell)
    report = AttackReport(
        success=result.success,
        key=result.key,
        tries=result.tries,
        seconds=seconds,
        curve=curve.name,
        engine=scenario.engine,
        samples_available=len(inst.samples),
        d_subset=d_subset,
        selected_true=true_selected,
        selected_total=len(selected),
    )
    if report.success:
        assert report.key == priv.d
    return report
