"""Command-line entry point: ``agitrack {synth,features,experiment,pas-audit}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from .experiments import pas_audit, predecimate, run_baseline, run_downsample, run_lse, run_sse
from .features import FeatureTable, QualityTally, feature_table
from .ingest import MODALITIES, IngestError, load_label_manifest, load_pas_manifest, pas_missing_fractions
from .learners import LearnerSpec
from .pipeline import iter_directory_groups, iter_shift_records
from .synthcohort import DESK_RATES, CohortConfig, CohortConfigError, generate_cohort, write_cohort
from .timebase import bin_histogram
from .ingest import DEFAULT_RATES

log = logging.getLogger("agitrack")

EXPERIMENTS = ("baseline", "lse", "sse", "downsample", "pas-audit")


class CommandError(RuntimeError):
    """Input problem reported as a usage error."""


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _rates(text: str) -> dict:
    if text == "desk":
        return dict(DESK_RATES)
    if text == "full":
        return dict(DEFAULT_RATES)
    rates = {}
    for part in text.split(","):
        key, _, value = part.partition("=")
        key = key.strip().upper()
        if key not in MODALITIES:
            raise argparse.ArgumentTypeError(f"unknown modality {key!r}")
        rates[key] = float(value)
    missing = set(MODALITIES) - set(rates)
    if missing:
        raise argparse.ArgumentTypeError(f"rates missing for {sorted(missing)}")
    return rates


def _learner_specs(names: str, cost: str, seed: int) -> list[LearnerSpec]:
    kinds = [n.strip().upper() for n in names.split(",") if n.strip()]
    for k in kinds:
        if k not in ("LR", "RF", "SVM"):
            raise CommandError(f"unknown learner {k!r}")
    flags = {"yes": [True], "no": [False], "both": [False, True]}[cost]
    return [LearnerSpec(k, c, seed) for k in kinds for c in flags]


def _stamp(args) -> str:
    if args.no_timestamp:
        return ""
    return f"# generated {datetime.now(timezone.utc).isoformat(timespec='seconds')}\n"


def _write(path: Path, text: str, args) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_stamp(args) + text)


def _bin_table(coverages) -> str:
    counts = bin_histogram(coverages)
    head = " ".join(f"Bin{k:<3d}" for k in range(1, 9))
    row = " ".join(f"{c:<6d}" for c in counts)
    return f"{head}\n{row}"


def cmd_synth(args) -> int:
    try:
        config = CohortConfig(
            n_shifts=args.shifts,
            positive_ratio=args.positive_ratio,
            rates=args.rates,
            effect_size=args.effect,
            seed=args.seed,
        )
    except CohortConfigError as exc:
        raise CommandError(str(exc)) from exc
    cohort = generate_cohort(config)
    out = Path(args.output)
    write_cohort(cohort, out)
    n_pos = sum(lab.agitation for lab in cohort.labels)
    coverages = [p.coverage_s for p in cohort.sessions.plans]
    print(_stamp(args) + f"cohort: {len(cohort.labels)} shifts, {n_pos} with agitation, effect={args.effect}")
    print(_bin_table(coverages))
    print(f"written to {out}")
    return 0


def _records(args, labels):
    target = args.target_rate
    if target is None:
        # common rate: highest native rate, read from the first recording
        first = next(iter_directory_groups(args.data), None)
        if not first:
            raise CommandError(f"no sessions found under {args.data}")
        target = max(s.rate_hz for sess in first for s in sess.streams.values())
    return iter_shift_records(iter_directory_groups(args.data), labels, target)


def cmd_features(args) -> int:
    labels = load_label_manifest(args.labels)
    tally = QualityTally()
    table = feature_table(_records(args, labels), tally)
    if len(table) == 0:
        print("no shifts with complete sensor data found", file=sys.stderr)
        return 1
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "features.csv"
    table.write_csv(path)
    print(_stamp(args) + f"shifts: {len(table)} ({int(table.labels.sum())} with agitation)")
    print(_bin_table(table.coverage_s))
    if tally.total:
        print(f"non-finite features replaced: {dict(tally.replaced)}")
    print(f"features written to {path}")
    return 0


def _pas(args) -> int:
    if not args.pas or not args.labels:
        raise CommandError("pas-audit needs --pas and --labels")
    entries = load_pas_manifest(args.pas)
    result = pas_audit(entries, load_label_manifest(args.labels))
    missing = pas_missing_fractions(entries)
    _write(Path(args.output) / "pas_audit.csv", result.to_csv(), args)
    print(_stamp(args) + result.summary())
    print("missing: " + ", ".join(f"{g}={f:.4f}" for g, f in missing.items()))
    return 0


def cmd_experiment(args) -> int:
    name = args.name
    if name == "pas-audit":
        return _pas(args)
    specs = _learner_specs(args.learners, args.cost, args.seed)
    common = dict(k_outer=args.k_outer, k_inner=args.k_inner, workers=args.workers)
    if name == "downsample":
        if not (args.data and args.labels):
            raise CommandError("downsample needs --data and --labels (raw recordings)")
        shifts = predecimate(_records(args, load_label_manifest(args.labels)))
        result = run_downsample(shifts, specs, args.seed, **common)
    else:
        if args.features:
            table = FeatureTable.read_csv(args.features)
        elif args.data and args.labels:
            table = feature_table(_records(args, load_label_manifest(args.labels)))
        else:
            raise CommandError(f"{name} needs --features or --data with --labels")
        runner = {"baseline": run_baseline, "lse": run_lse, "sse": run_sse}[name]
        result = runner(table, specs, args.seed, **common)
    _write(Path(args.output) / f"{name}.csv", result.to_csv(), args)
    print(_stamp(args) + result.summary())
    return 1 if any(r.status == "error" for r in result.rows) else 0


def _read_config(path) -> dict:
    """``key=value`` lines; keys use flag spelling without leading dashes."""
    values = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise CommandError(f"{path}: expected key=value, got {line!r}")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="agitrack", description=__doc__)
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seeded=True):
        p.add_argument("--output", default=".", help="output directory (created if absent)")
        p.add_argument("--no-timestamp", action="store_true", help="omit the generated-at line")
        p.add_argument("--workers", type=_positive_int, default=os.cpu_count() or 1)
        p.add_argument("--config", help="key=value file supplying flag defaults")
        if seeded:
            p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("synth", help="generate a synthetic cohort")
    common(p)
    p.add_argument("--shifts", type=_positive_int, default=693)
    p.add_argument("--positive-ratio", type=float, default=0.202)
    p.add_argument("--effect", choices=("none", "small", "large"), default="large")
    p.add_argument("--rates", type=_rates, default=dict(DESK_RATES), help="desk, full, or ACC=..,BVP=..,EDA=..,TEMP=..")
    p.set_defaults(func=cmd_synth)

    def data_args(p, required=False):
        p.add_argument("--data", required=required, help="root of session directories")
        p.add_argument("--labels", required=required, help="label manifest")
        p.add_argument("--target-rate", type=float, default=None, help="common rate in Hz (default: highest native)")

    p = sub.add_parser("features", help="extract the per-shift feature table")
    common(p, seeded=False)
    data_args(p, required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("experiment", help="run an experiment family")
    common(p)
    p.add_argument("name", choices=EXPERIMENTS)
    data_args(p)
    p.add_argument("--features", help="feature table from the features command")
    p.add_argument("--pas", help="PAS manifest (pas-audit)")
    p.add_argument("--learners", default="lr,rf,svm")
    p.add_argument("--cost", choices=("yes", "no", "both"), default="both")
    p.add_argument("--k-outer", type=_positive_int, default=10)
    p.add_argument("--k-inner", type=_positive_int, default=5)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("pas-audit", help="PAS score distributions by shift class")
    common(p, seeded=False)
    p.add_argument("--pas", required=True)
    p.add_argument("--labels", required=True)
    p.set_defaults(func=_pas)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        sub = parser._subparsers._group_actions[0].choices[args.command]
        try:
            sub.set_defaults(**_read_config(args.config))
        except (OSError, CommandError) as exc:
            parser.error(str(exc))
        # re-parse so explicit flags still win over file values
        args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CommandError as exc:
        parser.error(str(exc))
    except (IngestError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
