"""
Lungtex CLI — Command-line front end
synth · extract · train · predict · eval · sweep · select · compare · tune-k · plot-data
"""

import argparse
import logging
import sys

import numpy as np
import pandas as pd

from src.analysis.evaluate import (
    SWEEP_PARAMETERS, best_k, compare, comparison_grid, evaluate_features, plan_for_table,
    plan_loocv, save_report, selection_sweep, sweep, sweep_table, tune_k,
)
from src.analysis.selection import discretize, load_selection, mrmr_select, save_selection
from src.classify.models import ClassifierSpec, from_signed, load_model, predict, save_model, train
from src.core.audio_io import load_manifest
from src.core.config import (
    CLASSIFIERS, FEATURES, GRANULARITIES, KERNELS, PROFILES, SCHEMES, RunConfig, load_config,
)
from src.core.errors import ConfigError, LungtexError
from src.core.log import setup_logging
from src.features.extract import extract_features, load_features, save_features
from src.synth.generator import DEFAULT_RATE, generate_dataset
from src.viz.plot_data import (
    PLOT_KINDS, best_point, filter_count_series, lbp_surface_series, load_table, selection_series,
    sweep_series, write_series,
)

logger = logging.getLogger("lungtex")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


# ── Argument helpers ────────────────────────────────────────────

def parse_values(text: str, integer: bool = False) -> list:
    """'20:200:10' (inclusive range) or '10,20,30'."""
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValueError("step must be positive")
            values = list(np.arange(start, stop + step / 2.0, step))
        else:
            values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad value list '{text}': {e}") from e
    if not values:
        raise argparse.ArgumentTypeError(f"empty value list '{text}'")
    return [int(round(v)) for v in values] if integer else [round(float(v), 10) for v in values]


def _int_values(text: str) -> list:
    return parse_values(text, integer=True)


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common")
    g.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    g.add_argument("--quiet", action="store_true", help="errors only, no progress bars")
    g.add_argument("--jobs", type=int, default=1, help="concurrent extractions / folds (default 1)")
    g.add_argument("--config", help="RunConfig JSON, or a report whose config is replayed")
    g.add_argument("--profile", choices=sorted(PROFILES),
                   help="front-end defaults (default optimized: 40 ms, 90%%, 20 filters)")
    g.add_argument("--seed", type=int, help="random seed (default 0)")
    return p


def _add_frontend(p: argparse.ArgumentParser):
    g = p.add_argument_group("front end")
    g.add_argument("--rate", type=int, help="analysis sample rate in Hz (default 4000)")
    g.add_argument("--frame-ms", dest="frame_ms", type=float, help="frame length in ms")
    g.add_argument("--overlap", dest="overlap_pct", type=float, help="frame overlap in %%")
    g.add_argument("--filters", dest="n_filters", type=int, help="mel filter count Q")
    g.add_argument("--feature", choices=FEATURES, help="feature kind (default lbp)")


def _add_classifier(p: argparse.ArgumentParser):
    g = p.add_argument_group("classifier")
    g.add_argument("--classifier", choices=CLASSIFIERS, help="back end (default svm)")
    g.add_argument("--kernel", choices=KERNELS, help="SVM kernel (default bhat)")
    g.add_argument("--k", type=int, help="kNN neighbours, odd (default 3)")
    g.add_argument("--c", type=float, help="SVM penalty C (default 1)")
    g.add_argument("--gamma", type=float, help="RBF gamma (default 1/d)")
    g.add_argument("--epochs", type=int, help="MLP RProp epochs (default 500)")
    g.add_argument("--repeats", type=int, help="MLP seeds averaged per evaluation (default 25)")


def _add_evaluation(p: argparse.ArgumentParser):
    g = p.add_argument_group("evaluation")
    g.add_argument("--granularity", choices=GRANULARITIES, help="LOOCV unit (default cycle)")
    g.add_argument("--select", dest="select_count", type=int, help="mRMR-select N features per fold")
    g.add_argument("--sigma", type=float, help="discretization threshold in std units (default 1)")
    g.add_argument("--scheme", choices=SCHEMES, help="mRMR scheme (default mid)")


def _add_source(p: argparse.ArgumentParser, required: bool = True):
    src = p.add_mutually_exclusive_group(required=required)
    src.add_argument("--manifest", help="dataset manifest CSV")
    src.add_argument("--features", help="features CSV written by `extract`")


CONFIG_FLAGS = ("rate", "frame_ms", "overlap_pct", "n_filters", "feature", "classifier", "kernel",
                "k", "c", "gamma", "epochs", "repeats", "granularity", "select_count", "sigma",
                "scheme", "seed")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="lungtex",
        description="Lung-sound classification: MFSC -> uniform LBP texture -> kNN / SVM / MLP, "
                    "with mRMR selection and leave-one-out evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("synth", parents=[common], help="write a synthetic WAV corpus + manifest")
    p.add_argument("--per-class", dest="per_class", type=int, default=24,
                   help="cycles per class (flat) or subjects per class (grouped); default 24")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--synth-rate", dest="synth_rate", type=int, default=DEFAULT_RATE,
                   help=f"WAV sample rate (default {DEFAULT_RATE})")
    p.add_argument("--grouped", action="store_true", help="subject-grouped corpus, normal vs crackle")
    p.add_argument("--cycles-per-subject", dest="cycles_per_subject", type=int, default=5)
    p.add_argument("--snr-db", dest="snr_db", type=float, default=30.0)

    p = sub.add_parser("extract", parents=[common], help="manifest -> features CSV")
    p.add_argument("--manifest", required=True)
    _add_frontend(p)
    p.add_argument("--out", required=True, help="features CSV")

    p = sub.add_parser("train", parents=[common], help="train one model on every cycle")
    _add_source(p)
    _add_frontend(p)
    _add_classifier(p)
    p.add_argument("--select", dest="select_count", type=int,
                   help="rejected: train fits on every feature, selection belongs to eval")
    p.add_argument("--out", required=True, help="model JSON")

    p = sub.add_parser("predict", parents=[common], help="label cycles with a saved model")
    p.add_argument("--model", required=True, help="model JSON written by `train`")
    _add_source(p)
    p.add_argument("--out", help="predictions CSV (default stdout)")

    p = sub.add_parser("eval", parents=[common], help="leave-one-out evaluation -> report JSON")
    _add_source(p)
    _add_frontend(p)
    _add_classifier(p)
    _add_evaluation(p)
    p.add_argument("--out", help="report JSON")

    p = sub.add_parser("sweep", parents=[common], help="evaluate over a front-end parameter range")
    p.add_argument("--manifest", required=True)
    p.add_argument("--param", required=True, choices=SWEEP_PARAMETERS)
    p.add_argument("--values", required=True, help="'start:stop:step' (inclusive) or 'a,b,c'")
    _add_frontend(p)
    _add_classifier(p)
    _add_evaluation(p)
    p.add_argument("--out", required=True, help="sweep CSV")

    p = sub.add_parser("select", parents=[common], help="mRMR selection or accuracy-vs-count sweep")
    _add_source(p)
    _add_frontend(p)
    _add_classifier(p)
    _add_evaluation(p)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--count", type=int, help="select N features on all cycles")
    mode.add_argument("--sweep", dest="counts", type=_int_values,
                      help="counts to evaluate by LOOCV, e.g. '5:150:5'")
    p.add_argument("--out", required=True, help="selection JSON (--count) or sweep CSV (--sweep)")

    p = sub.add_parser("compare", parents=[common], help="feature x classifier x kernel grid")
    p.add_argument("--manifest", required=True)
    p.add_argument("--only", choices=FEATURES, nargs="+", help="restrict to these features")
    _add_frontend(p)
    _add_classifier(p)
    _add_evaluation(p)
    p.add_argument("--out", required=True, help="comparison CSV")

    p = sub.add_parser("tune-k", parents=[common], help="kNN accuracy per odd k")
    _add_source(p)
    _add_frontend(p)
    _add_evaluation(p)
    p.add_argument("--candidates", type=_int_values, default=[1, 3, 5, 7, 9, 11])
    p.add_argument("--out", help="table CSV")

    p = sub.add_parser("plot-data", parents=[common], help="emit plot series as CSV (no rendering)")
    p.add_argument("--kind", required=True, choices=PLOT_KINDS)
    p.add_argument("--input", required=True,
                   help="sweep CSV, selection-sweep CSV, features CSV or selection JSON")
    p.add_argument("--out", help="series CSV (default stdout)")
    return parser


def resolve_config(args) -> RunConfig:
    """--config (or the profile) first, explicit flags on top."""
    overrides = {k: getattr(args, k, None) for k in CONFIG_FLAGS}
    if args.config:
        config = load_config(args.config)
        if args.profile:
            logger.warning("--profile ignored: configuration comes from %s", args.config)
        return config.with_overrides(**overrides)
    return RunConfig.from_profile(args.profile or "optimized", **overrides)


def _table_and_config(args, config: RunConfig):
    """Features from --features (config follows the table) or extracted from --manifest."""
    if getattr(args, "features", None):
        table = load_features(args.features)
        changes = {"feature": table.kind}
        if table.kind == "lbp" and table.n_filters:
            changes["n_filters"] = table.n_filters
        return table, config.with_overrides(**changes)
    manifest = load_manifest(args.manifest)
    return extract_features(manifest, config, args.jobs), config


def _emit(df: pd.DataFrame, out):
    if out:
        write_series(df, out)
    else:
        df.to_csv(sys.stdout, index=False, lineterminator="\n")


# ── Commands ────────────────────────────────────────────────────

def cmd_synth(args, config: RunConfig) -> int:
    manifest = generate_dataset(args.per_class, config.seed, args.out, args.synth_rate,
                                args.grouped, args.cycles_per_subject, args.snr_db)
    print(f"{len(manifest)} cycles, {len(manifest.subjects)} subjects -> {args.out}")
    return EXIT_OK


def cmd_extract(args, config: RunConfig) -> int:
    table = extract_features(load_manifest(args.manifest), config, args.jobs)
    save_features(table, args.out)
    print(f"{len(table)} cycles x {table.dim} {table.kind} features -> {args.out}")
    return EXIT_OK


def cmd_train(args, config: RunConfig) -> int:
    if config.select_count:
        raise ConfigError("train uses every feature; drop select_count from the configuration")
    table, config = _table_and_config(args, config)
    model = train(table.labeled(), ClassifierSpec.from_config(config))
    save_model(model, args.out, config)
    print(f"{config.classifier} model trained on {len(table)} cycles -> {args.out}")
    return EXIT_OK


def cmd_predict(args, config: RunConfig) -> int:
    model = load_model(args.model)
    try:
        config = load_config(args.model)
    except ConfigError:
        logger.warning("%s carries no configuration; using the current one for extraction", args.model)
    table, _ = _table_and_config(args, config)
    labels, scores = predict(model, table.matrix)
    df = pd.DataFrame({"cycle_id": list(table.ids), "label": table.labels,
                       "predicted": from_signed(labels), "score": scores})
    _emit(df, args.out)
    return EXIT_OK


def cmd_eval(args, config: RunConfig) -> int:
    if args.features:
        table, config = _table_and_config(args, config)
        plan = plan_for_table(table, config.granularity)
    else:
        manifest = load_manifest(args.manifest)
        plan = plan_loocv(manifest, config.granularity)
        table = extract_features(manifest, config, args.jobs)
    report = evaluate_features(table, config, plan, args.jobs)
    if args.out:
        save_report(report, args.out)
    print(f"SPE {report.spe:.2f}  SEN {report.sen:.2f}  OAA {report.oaa:.2f}  "
          f"({len(plan)} folds, {report.repeats} repeat(s))")
    return EXIT_OK


def _report_best(df: pd.DataFrame, x: str, out):
    best = best_point(df, x)
    if best is None:
        print(f"no defined OAA in {len(df)} rows -> {out}")
    else:
        print(f"best {x}={best[x]} (OAA {best['oaa']:.2f} %) of {len(df)} rows -> {out}")


def cmd_sweep(args, config: RunConfig) -> int:
    try:
        values = parse_values(args.values, integer=args.param == "n_filters")
    except argparse.ArgumentTypeError as e:
        raise ConfigError(str(e)) from e
    rows = sweep(load_manifest(args.manifest), config, args.param, values, args.jobs)
    df = sweep_table(args.param, rows)
    write_series(df, args.out)
    _report_best(df, args.param, args.out)
    return EXIT_OK


def cmd_select(args, config: RunConfig) -> int:
    table, config = _table_and_config(args, config)
    if args.count is not None:
        disc = discretize(table.matrix, config.sigma)
        n_filters = table.n_filters if table.kind == "lbp" else None
        result = mrmr_select(disc, table.labels, args.count, config.scheme, n_filters)
        save_selection(result, args.out, {"config": config.to_dict(), "fingerprint": config.fingerprint()})
        print(f"{len(result)} of {table.dim} features selected -> {args.out}")
        return EXIT_OK
    df = selection_sweep(table, config, args.counts, plan_for_table(table, config.granularity), args.jobs)
    write_series(df, args.out)
    _report_best(df, "n_selected", args.out)
    return EXIT_OK


def cmd_compare(args, config: RunConfig) -> int:
    configs = comparison_grid(config, tuple(args.only) if args.only else FEATURES)
    write_series(compare(load_manifest(args.manifest), configs, args.jobs), args.out)
    return EXIT_OK


def cmd_tune_k(args, config: RunConfig) -> int:
    table, config = _table_and_config(args, config)
    df = tune_k(table, config, args.candidates, plan_for_table(table, config.granularity), args.jobs)
    _emit(df, args.out)
    logger.info("best k for %s: %d", table.kind, best_k(df))
    return EXIT_OK


def cmd_plot_data(args, config: RunConfig) -> int:
    if args.kind == "sweep":
        df = sweep_series(load_table(args.input))
    elif args.kind == "selection":
        df = selection_series(load_table(args.input))
    elif args.kind == "lbp-surface":
        df = lbp_surface_series(load_features(args.input))
    else:
        df = filter_count_series(load_selection(args.input))
    _emit(df, args.out)
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "extract": cmd_extract,
    "train": cmd_train,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "select": cmd_select,
    "compare": cmd_compare,
    "tune-k": cmd_tune_k,
    "plot-data": cmd_plot_data,
}


def main(argv=None) -> int:
    """Exit codes: 0 ok, 1 pipeline failure, 2 usage (raised by argparse)."""
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose, args.quiet)
    try:
        config = resolve_config(args)
        return COMMANDS[args.command](args, config)
    except LungtexError as e:
        logger.error("%s", e)
        return EXIT_FAILURE
    except OSError as e:
        logger.error("I/O failure: %s", e)
        return EXIT_FAILURE
