"""Command-line entry point.

Subcommands mirror the pipeline stages: `campaign` drives scripted
sessions and captures corner cases, `train` fits a perceiver on a saved
dataset, `curate` builds/swaps/enriches datasets, `evaluate` scores
models or runs the preconfigured experiments, `serve` hosts a live
two-driver session, and `replay` streams a saved record as wire frames.

Every subcommand takes `--config <file>`, `--seed`, and `--out <dir>`.
Exit codes: 0 success, 2 config error, 3 runtime error.
"""

import argparse
import asyncio
import json
import os
import sys

from . import config as cfgmod
from .errors import AeyeError, ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _out_dir(args, default_subdir):
    out = args.out or os.path.join(cfgmod.default_data_dir(), default_subdir)
    os.makedirs(out, exist_ok=True)
    return out


def _load(args, required=True):
    if args.config is None:
        if required:
            raise ConfigError("--config is required for this subcommand")
        return {}
    return cfgmod.load_config(args.config)


def _dump_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_campaign(args):
    from .evaluation import campaign_stats, log_to_dict, stats_to_dict
    from .session import run_headless_campaign

    doc = _load(args)
    if "stop" not in doc:
        raise ConfigError("campaign config needs a [stop] section "
                          "(stop.max_km / stop.max_minutes / stop.max_cc)")
    stop = cfgmod.stop_condition(doc["stop"])
    sess = cfgmod.session_config(
        {k: v for k, v in doc.items() if k != "stop"}, seed=args.seed)
    out = _out_dir(args, "campaign")
    log, records, meta = run_headless_campaign(sess, stop,
                                               out_dir=os.path.join(out, "records"))
    _dump_json(os.path.join(out, "campaign_log.json"), log_to_dict(log))
    stats = campaign_stats(log)
    _dump_json(os.path.join(out, "campaign_stats.json"), stats_to_dict(stats))
    print(f"campaign: {log.distance_km:.2f} km, {log.time_min:.1f} min, "
          f"{len(log.events)} interventions, {len(records)} records "
          f"({meta['missed_underfull']} underfull) -> {out}")
    return EXIT_OK


def cmd_train(args):
    from .curation import load_dataset
    from .perception import save_model, train

    doc = _load(args)
    if "dataset" not in doc:
        raise ConfigError("train config needs dataset=<saved dataset dir>")
    tc = cfgmod.train_config(doc.get("train"), seed=args.seed)
    ds = load_dataset(doc["dataset"])
    model = train(list(ds.iter_samples()), tc)
    out = _out_dir(args, "train")
    path = os.path.join(out, "model.bin")
    save_model(model, path)
    print(f"train: {ds.n_frames} frames x {tc.epochs} epochs -> {path}")
    return EXIT_OK


def cmd_curate(args):
    from .capture import list_records, load
    from .curation import (build_pedestrian_enriched, class_stats, generate_base,
                           load_dataset, save_dataset, split_holdout,
                           swap_in_corner_cases)
    from .semantics import SemanticClass

    doc = _load(args)
    kind = doc.get("kind", "base")
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    out = _out_dir(args, "curate")

    if kind == "base":
        sampler = cfgmod.scene_sampler(doc.get("sampler"), seed=args.seed)
        scenes = doc.get("scenes", {})
        ds = generate_base(sampler,
                           n_scenes=int(scenes.get("n_scenes", 12)),
                           frames_per_scene=int(scenes.get("frames_per_scene", 30)),
                           name=str(doc.get("name", "natural")))
        holdout = doc.get("holdout")
        if holdout is not None:
            train_ds, held = split_holdout(ds, float(holdout))
            save_dataset(train_ds, os.path.join(out, "train"))
            save_dataset(held, os.path.join(out, "holdout"))
            print(f"curate base: {train_ds.n_frames}+{held.n_frames} frames -> {out}")
        else:
            save_dataset(ds, out)
            print(f"curate base: {ds.n_frames} frames -> {out}")
    elif kind == "swap":
        if "base" not in doc or "cc_root" not in doc:
            raise ConfigError("swap needs base=<dataset dir> and cc_root=<records dir>")
        base = load_dataset(doc["base"])
        records = [load(doc["cc_root"], rec_id)
                   for rec_id in list_records(doc["cc_root"])]
        ds = swap_in_corner_cases(base, records, seed=seed)
        save_dataset(ds, out)
        print(f"curate swap: {len(records)} records into {base.n_frames} frames -> {out}")
    elif kind == "enrich":
        if "base" not in doc or "target_mean" not in doc:
            raise ConfigError("enrich needs base=<dataset dir> and target_mean=<cells>")
        base = load_dataset(doc["base"])
        sampler = cfgmod.scene_sampler(doc.get("sampler"), seed=args.seed)
        ds = build_pedestrian_enriched(base, float(doc["target_mean"]),
                                       float(doc.get("tol", 0.05)),
                                       sampler.pedestrian_heavy(), seed=seed)
        save_dataset(ds, out)
        got = class_stats(ds).for_class(SemanticClass.PEDESTRIAN)
        print(f"curate enrich: pedestrian mean {got:.1f} cells/scene -> {out}")
    else:
        raise ConfigError(f"kind: must be base|swap|enrich, got {kind!r}")
    return EXIT_OK


def cmd_evaluate(args):
    from .curation import load_dataset
    from .evaluation import compare_report, render_report_text, save_report
    from .perception import load_model

    doc = _load(args)
    out = _out_dir(args, "evaluate")
    experiment = doc.get("experiment")
    if experiment == "enrichment":
        from .experiment import EnrichmentConfig, run_enrichment_experiment

        cfg = cfgmod._build(EnrichmentConfig, doc.get("enrichment") or {},
                            "enrichment")
        report = run_enrichment_experiment(cfg)
        path = os.path.join(out, "enrichment_report.json")
        _dump_json(path, report)
        m = report["mean"]
        for name in ("natural", "pedestrian_enriched", "cc_enriched"):
            row = m[name]["safety_critical"]
            print(f"{name:22s} safety-critical IoU_ped {row['iou_pedestrian']:.4f} "
                  f"mIoU {row['miou']:.4f}")
        print(f"cc>natural wins: {report['wins_cc_vs_natural']}/{report['n_seeds']} "
              f"-> {path}")
    elif experiment == "frequency":
        from .experiment import FrequencyConfig, run_frequency_experiment

        cfg = cfgmod._build(FrequencyConfig, doc.get("frequency") or {}, "frequency")
        report = run_frequency_experiment(cfg)
        path = os.path.join(out, "frequency_report.json")
        _dump_json(path, report)
        for row in report["rows"]:
            mean_d = "absent" if row["mean_d_cc"] is None else f"{row['mean_d_cc']:.3f}"
            print(f"seed {row['seed']} q={row['quality']}: {row['n_cc']} CC, "
                  f"mean km/CC {mean_d}")
        print(f"increasing in {report['n_increasing']}/{report['n_seeds']} seeds "
              f"-> {path}")
    elif experiment is not None:
        raise ConfigError(f"experiment: must be enrichment|frequency, got {experiment!r}")
    else:
        if "models" not in doc or "tests" not in doc:
            raise ConfigError("evaluate config needs models.<name>=<model.bin> "
                              "and tests.<name>=<dataset dir> (or experiment=...)")
        models = {name: load_model(path) for name, path in doc["models"].items()}
        tests = {name: load_dataset(path) for name, path in doc["tests"].items()}
        report = compare_report(models, tests)
        path = save_report(report, os.path.join(out, "report.json"))
        print(render_report_text(report))
        print(f"-> {path}")
    return EXIT_OK


def cmd_serve(args):
    from .server import serve_live

    doc = _load(args)
    doc.setdefault("mode", "live")
    sess = cfgmod.session_config({k: v for k, v in doc.items() if k != "stop"},
                                 seed=args.seed)
    out = _out_dir(args, "live")
    static_dir = _frontend_dir()
    print(f"serving live session on ws://{sess.listen_host}:{sess.listen_port}/ "
          f"(records -> {out})", flush=True)
    if static_dir:
        print(f"browser UI from {static_dir}", flush=True)
    try:
        asyncio.run(serve_live(sess, data_dir=out, static_dir=static_dir))
    except KeyboardInterrupt:
        print("stopped")
    return EXIT_OK


def _frontend_dir():
    here = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
    for candidate in (os.path.join(here, "frontend", "dist"),
                      os.path.join(here, "frontend", "public")):
        if os.path.isdir(candidate):
            return candidate
    return None


def cmd_replay(args):
    from .capture import load
    from .session import replay_record
    from .wire import dumps

    doc = _load(args, required=False)
    target = args.record or doc.get("record")
    if not target:
        raise ConfigError("replay needs a record id (positional) or record= in config")
    root = doc.get("data_root") or cfgmod.default_data_dir()
    if os.path.isdir(target) and os.path.isfile(os.path.join(target, "manifest.json")):
        record_dir = os.path.abspath(target)
    else:
        record_dir = _find_record_dir(root, target)
    record = load(os.path.dirname(record_dir), os.path.basename(record_dir))
    frames = replay_record(record)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, f"{record.id}.ndjson")
        with open(path, "w") as fh:
            for frame in frames:
                fh.write(dumps(frame) + "\n")
        print(f"replay: {len(frames)} frames -> {path}")
    else:
        for frame in frames:
            print(dumps(frame))
    return EXIT_OK


def _find_record_dir(root, record_id):
    candidates = [os.path.join(root, record_id),
                  os.path.join(root, "records", record_id),
                  os.path.join(root, "campaign", "records", record_id)]
    for c in candidates:
        if os.path.isfile(os.path.join(c, "manifest.json")):
            return c
    raise ConfigError(f"record {record_id!r} not found under {root}")


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="aeye",
        description="Desk-scale corner-case mining rig: scripted driving "
                    "campaigns, intervention capture, dataset curation, and "
                    "segmentation evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = [
        ("campaign", cmd_campaign, "run a scripted headless driving campaign"),
        ("train", cmd_train, "train a perceiver on a saved dataset"),
        ("curate", cmd_curate, "generate, swap, or enrich datasets"),
        ("evaluate", cmd_evaluate, "score models or run the preset experiments"),
        ("serve", cmd_serve, "host a live two-driver session"),
        ("replay", cmd_replay, "stream a saved record as wire frames"),
    ]
    for name, func, help_text in specs:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="config file (JSON or key=value lines)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help=f"output directory (default under "
                                     f"${cfgmod.DATA_DIR_ENV} or ./aeye-data)")
        if name == "replay":
            p.add_argument("record", nargs="?", help="record id or directory")
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except BrokenPipeError:
        # Downstream (e.g. `| head`) closed stdout; not our error. Point
        # stdout at devnull so the interpreter's exit flush stays quiet.
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return EXIT_OK
    except AeyeError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(f"unexpected error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
