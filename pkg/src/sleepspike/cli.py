"""Command-line front door.

Subcommands: keygen, search, simulate, figure, analyze, attack.
Exit codes: 0 success, 1 usage error, 2 data error, 3 attack-not-found.

Flags may be pre-seeded from a flat key=value file via --config
(keys are flag names with dashes or underscores); explicit flags win.
All randomness flows from --seed, so a fixed seed reproduces output
files byte for byte.
"""

import argparse
import random
import sys

from . import analysis, attack, engines, lattice, leakage, signer
from ._fsio import atomic_write_text
from .curves import CurveError, get_curve, list_curves, point_from_hex, point_to_hex


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(sub):
    sub.add_argument("--seed", type=int, default=0, help="root seed for all randomness")
    sub.add_argument("--config", help="flat key=value file applied before flags")


def _build_parser() -> _Parser:
    parser = _Parser(prog="sleepspike", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = subs.add_parser("keygen", help="generate a key file")
    _add_common(p)
    p.add_argument("--curve", default="p256", choices=list_curves())
    p.add_argument("--out", required=True, help="key file (curve name line + hex key line)")

    p = subs.add_parser("search", help="find messages with zero-rich nonces")
    _add_common(p)
    p.add_argument("--key", required=True, help="key file from keygen")
    p.add_argument("--target-bits", type=int, required=True)
    p.add_argument("--count", type=int, default=4)
    p.add_argument("--end", choices=("leading", "trailing"), default="leading")
    p.add_argument("--budget", type=int, default=None, help="max nonce derivations")
    p.add_argument("--out", help="write found messages (hex, one per line)")

    p = subs.add_parser("simulate", help="run a signing/sleep plan")
    _add_common(p)
    p.add_argument("--curve", default="p256", choices=list_curves())
    p.add_argument("--engine", required=True, choices=engines.ENGINES)
    p.add_argument("--traces", type=int, required=True)
    p.add_argument("--iterations", type=int, required=True)
    p.add_argument("--key", help="key file; default derives a key from the seed")
    p.add_argument("--messages-file", help="hex messages, one per line (deterministic nonces)")
    p.add_argument("--classes", help="comma list of zero-window classes, e.g. 0,1,2,3,4,5")
    p.add_argument("--messages-per-class", type=int, default=4)
    p.add_argument("--class-width", type=int, choices=(1, 4, 6), default=None,
                   help="zero-window width for --classes: 1=bits, 4=nibbles, 6=chunks"
                   " (default follows the engine)")
    p.add_argument("--zero-end", choices=("leading", "trailing"), default=None)
    p.add_argument("--out", required=True, help="spike CSV path")
    for name, default in leakage.LeakageParams().__dict__.items():
        p.add_argument(
            f"--{name.replace('_', '-')}",
            type=type(default),
            default=default,
            help=f"leakage model parameter (default {default})",
        )

    p = subs.add_parser("figure", help="aggregate spikes into figure points")
    _add_common(p)
    p.add_argument("--in", dest="infile", required=True, help="spike CSV from simulate")
    p.add_argument("--grouping", choices=sorted(leakage.GROUPING_WIDTH), default="zero_nibbles")
    p.add_argument("--messages-per-class", type=int, default=4)
    p.add_argument("--out", required=True, help="figure CSV path")

    p = subs.add_parser("analyze", help="ingest raw traces, emit summaries")
    _add_common(p)
    p.add_argument("paths", nargs="*", help="trace files or directories")
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--out", required=True, help="summary CSV path")

    p = subs.add_parser("attack", help="key-recovery drill")
    _add_common(p)
    p.add_argument("--curve", default="p256", choices=list_curves())
    p.add_argument("--ell", type=int, default=12, help="claimed known zero bits")
    p.add_argument("--max-tries", type=int, default=20)
    p.add_argument("--d-subset", type=int, default=None)
    p.add_argument("--delta", type=float, default=0.99)
    p.add_argument("--instance", help="attack a t,u,ell instance file directly")
    p.add_argument("--pubkey", help="uncompressed public key hex (with --instance)")
    p.add_argument("--oracle", action="store_true", help="oracle-filtered drill, no classifier")
    p.add_argument("--d", type=int, default=45, help="signature count for --oracle")
    p.add_argument("--engine", default=engines.W4_TABLE, choices=engines.ENGINES)
    p.add_argument("--pool", type=int, default=50_000, help="candidate messages (classifier path)")
    p.add_argument("--plants", type=int, default=60)
    p.add_argument("--plant-bits", type=int, default=None)
    p.add_argument("--traces-per-message", type=int, default=4)
    p.add_argument("--iterations", type=int, default=750)
    p.add_argument("--margin", type=float, default=1.5)
    p.add_argument("--report", help="also write the report to this path")
    return parser


def _apply_config(parser, argv):
    """Pre-parse --config and install its values as defaults; flags win."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv[1:])
    if not known.config:
        return argv
    defaults = {}
    try:
        with open(known.config, "r", encoding="ascii") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise DataError(f"{known.config}:{lineno}: expected key=value")
                key, _, value = line.partition("=")
                defaults[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise DataError(f"cannot read config: {exc}") from exc
    for sub in parser._subparsers._group_actions[0].choices.values():
        coerced = {}
        for action in sub._actions:
            if action.dest in defaults:
                raw = defaults[action.dest]
                if action.type is not None:
                    try:
                        coerced[action.dest] = action.type(raw)
                    except ValueError as exc:
                        raise DataError(f"config value {action.dest}={raw!r}: {exc}") from exc
                elif isinstance(action, argparse._StoreTrueAction):
                    coerced[action.dest] = raw.lower() in ("1", "true", "yes")
                else:
                    coerced[action.dest] = raw
                action.required = False
        sub.set_defaults(**coerced)
    return argv


def _load_or_derive_key(args, curve):
    if getattr(args, "key", None):
        priv, key_curve = signer.read_key_file(args.key)
        if key_curve.name != curve.name:
            raise DataError(f"key file is for {key_curve.name}, not {curve.name}")
        return priv
    rng = random.Random(f"{args.seed}:key")
    priv, _ = signer.generate_key(curve, rng)
    return priv


def cmd_keygen(args) -> int:
    curve = get_curve(args.curve)
    rng = random.Random(f"{args.seed}:key")
    priv, pub = signer.generate_key(curve, rng)
    signer.write_key_file(args.out, priv, curve)
    print(f"wrote {args.out} ({curve.name})")
    print(f"public: {point_to_hex(pub.Q, curve)}")
    return 0


def cmd_search(args) -> int:
    priv, curve = signer.read_key_file(args.key)
    rng = random.Random(f"{args.seed}:search")
    result = signer.search_messages(
        args.target_bits, args.count, args.end, priv, curve, rng, budget=args.budget
    )
    for fm in result.found:
        print(f"{fm.message.hex()} zero_bits={fm.zero_bits}")
    if args.out:
        atomic_write_text(args.out, "".join(fm.message.hex() + "\n" for fm in result.found))
    if not result.complete:
        print(
            f"INFEASIBLE: {len(result.found)}/{args.count} found after {result.draws} draws;"
            " consider injected nonces",
            file=sys.stderr,
        )
        return 2
    print(f"found {len(result.found)} messages in {result.draws} draws", file=sys.stderr)
    return 0


def _make_params(args) -> leakage.LeakageParams:
    return leakage.LeakageParams(
        beta0=args.beta0,
        beta1=args.beta1,
        beta2=args.beta2,
        sigma=args.sigma,
        residual_window=args.residual_window,
        decay=args.decay,
    )


def cmd_simulate(args) -> int:
    curve = get_curve(args.curve)
    if args.traces < 1 or args.iterations < 1:
        raise UsageError("--traces and --iterations must be >= 1")
    priv = _load_or_derive_key(args, curve)
    params = _make_params(args)
    if bool(args.messages_file) == bool(args.classes):
        raise UsageError("exactly one of --messages-file or --classes is required")
    if args.messages_file:
        try:
            with open(args.messages_file, "r", encoding="ascii") as fh:
                messages = tuple(bytes.fromhex(ln.strip()) for ln in fh if ln.strip())
        except (OSError, ValueError) as exc:
            raise DataError(f"bad messages file: {exc}") from exc
        if not messages:
            raise DataError("messages file is empty")
        plan = leakage.ExperimentPlan(
            engine=args.engine,
            traces=args.traces,
            iterations=args.iterations,
            messages=messages,
            seed=args.seed,
            zero_end=args.zero_end,
        )
    else:
        try:
            classes = [int(c) for c in args.classes.split(",") if c.strip()]
        except ValueError as exc:
            raise UsageError(f"bad --classes list: {exc}") from exc
        if not classes:
            raise UsageError("empty --classes list")
        if args.traces % len(classes):
            raise UsageError("--traces must divide evenly across the classes")
        plan = leakage.build_zero_class_plan(
            args.engine,
            curve,
            classes,
            traces_per_class=args.traces // len(classes),
            iterations=args.iterations,
            seed=args.seed,
            messages_per_class=args.messages_per_class,
            width=args.class_width,
            end=args.zero_end,
        )
    records = leakage.run_plan(plan, priv, curve, params)
    leakage.write_spike_csv(records, args.out)
    print(f"wrote {len(records)} spike records to {args.out}")
    return 0


def cmd_figure(args) -> int:
    try:
        records = leakage.read_spike_csv(args.infile)
    except (OSError, leakage.LeakageConfigError) as exc:
        raise DataError(str(exc)) from exc
    if any(r.truth_zero_bits is None for r in records):
        raise DataError("records lack truth labels; regenerate with the simulate command")
    points = leakage.figure_series(records, args.grouping, args.messages_per_class)
    leakage.write_figure_csv(points, args.out)
    print(f"wrote {len(points)} classes to {args.out}")
    return 0


def cmd_analyze(args) -> int:
    import os

    files = []
    for path in args.paths:
        if os.path.isdir(path):
            files.extend(os.path.join(path, name) for name in sorted(os.listdir(path)))
        else:
            files.append(path)
    records, errors = analysis.ingest_directory(files, window=args.window)
    for path, message in errors:
        print(f"error: {path}: {message}", file=sys.stderr)
    summaries = analysis.summarize(records)
    analysis.write_summary_csv(summaries, args.out)
    print(f"wrote {len(summaries)} summaries to {args.out} ({len(errors)} files failed)")
    if files and not records:
        return 2
    return 0


def cmd_attack(args) -> int:
    curve = get_curve(args.curve)
    if args.instance:
        if not args.pubkey:
            raise UsageError("--instance requires --pubkey")
        try:
            pub = signer.PublicKey(point_from_hex(args.pubkey, curve))
            inst = lattice.read_instance(args.instance, curve)
        except (OSError, CurveError, lattice.LatticeError) as exc:
            raise DataError(str(exc)) from exc
        if not inst.samples:
            raise DataError("instance file holds no samples")
        d_subset = args.d_subset or min(
            len(inst.samples),
            lattice.default_subset_size(curve, min(s.ell for s in inst.samples)),
        )
        rng = random.Random(f"{args.seed}:resample")
        result = lattice.attack_with_resampling(
            inst.samples,
            pub,
            curve,
            d_subset=d_subset,
            max_tries=args.max_tries,
            rng=rng,
            params=lattice.LLLParams(args.delta),
        )
        report = attack.AttackReport(
            success=result.success,
            key=result.key,
            tries=result.tries,
            seconds=result.seconds,
            curve=curve.name,
            engine=None,
            samples_available=len(inst.samples),
            d_subset=d_subset,
        )
    elif args.oracle:
        report = attack.run_oracle_recovery(
            curve,
            d=args.d,
            ell=args.ell,
            seed=args.seed,
            max_tries=args.max_tries,
            delta=args.delta,
        )
    else:
        scenario = attack.ClassifierScenario(
            curve=curve.name,
            engine=args.engine,
            ell=args.ell,
            pool=args.pool,
            plants=args.plants,
            plant_zero_bits=args.plant_bits,
            traces_per_message=args.traces_per_message,
            iterations=args.iterations,
            margin=args.margin,
            d_subset=args.d_subset,
            max_tries=args.max_tries,
            delta=args.delta,
            seed=args.seed,
        )
        report = attack.run_classifier_attack(scenario)
    text = report.render(curve)
    print(text, end="")
    if args.report:
        atomic_write_text(args.report, text)
    return 0 if report.success else 3


_COMMANDS = {
    "keygen": cmd_keygen,
    "search": cmd_search,
    "simulate": cmd_simulate,
    "figure": cmd_figure,
    "analyze": cmd_analyze,
    "attack": cmd_attack,
}


def main(argv=None) -> int:
    argv = list(sys.argv if argv is None else ["sleepspike", *argv])
    parser = _build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv[1:])
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (
        CurveError,
        signer.SigningError,
        lattice.LatticeError,
        leakage.LeakageConfigError,
        analysis.AnalysisError,
        attack.AttackConfigError,
    ) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
