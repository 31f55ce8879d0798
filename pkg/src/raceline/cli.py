"""Command line front-end: gen-data, train, predict, evaluate, plot, bench.

Configuration comes from an INI file (``--config``) overridden by flags;
every run is deterministic under a fixed seed.  Exit codes: 0 success,
1 input error, 2 internal invariant violation.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import evaluation, geometry, network, oracle, predictor, svg, synth, trackio, windows
from .errors import EmptyDataset, MissingTargets, RacelineError


@dataclass(frozen=True)
class RunConfig:
    spacing: float = 5.0
    foresight: int = 70
    sampling: int = 4
    l_ref: float = windows.DEFAULT_L_REF
    seed: int = 0
    jobs: int = 1
    max_tilt_deg: float = 45.0
    tilt_step_deg: float = 1.0
    oracle: oracle.OracleConfig = field(default_factory=oracle.OracleConfig)
    augment: ds.AugmentSpec = field(default_factory=ds.AugmentSpec)
    split: ds.SplitSpec = field(default_factory=ds.SplitSpec)
    train: network.TrainConfig = field(default_factory=network.TrainConfig)
    hidden: tuple = network.DEFAULT_HIDDEN

    def __post_init__(self) -> None:
        if self.sampling > self.foresight:
            raise ValueError("sampling level cannot exceed foresight")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")

    @property
    def max_tilt(self) -> float:
        return math.radians(self.max_tilt_deg)

    @property
    def tilt_step(self) -> float:
        return math.radians(self.tilt_step_deg)


def _get(parser: configparser.ConfigParser, section: str, key: str, cast, default):
    if parser.has_option(section, key):
        raw = parser.get(section, key)
        if cast is bool:
            return parser.getboolean(section, key)
        return cast(raw)
    return default


def load_config(path: str | None) -> RunConfig:
    """RunConfig from an INI file; missing keys keep their defaults."""
    base = RunConfig()
    if path is None:
        return base
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file {path} not found")
    pipeline = dict(
        spacing=_get(parser, "pipeline", "spacing", float, base.spacing),
        foresight=_get(parser, "pipeline", "foresight", int, base.foresight),
        sampling=_get(parser, "pipeline", "sampling", int, base.sampling),
        l_ref=_get(parser, "pipeline", "l_ref", float, base.l_ref),
        seed=_get(parser, "pipeline", "seed", int, base.seed),
        jobs=_get(parser, "pipeline", "jobs", int, base.jobs),
        max_tilt_deg=_get(parser, "pipeline", "max_tilt_deg", float, base.max_tilt_deg),
        tilt_step_deg=_get(parser, "pipeline", "tilt_step_deg", float, base.tilt_step_deg),
    )
    ocfg = oracle.OracleConfig(
        max_iters=_get(parser, "oracle", "max_iters", int, base.oracle.max_iters),
        tol=_get(parser, "oracle", "tol", float, base.oracle.tol),
        step_size=_get(parser, "oracle", "step_size", float, base.oracle.step_size),
        margin=_get(parser, "oracle", "margin", float, base.oracle.margin),
    )
    scales = _get(parser, "augment", "scales",
                  lambda s: tuple(float(v) for v in s.split(",")), base.augment.scales)
    acfg = ds.AugmentSpec(
        scales=scales,
        flip=_get(parser, "augment", "flip", bool, base.augment.flip),
        reverse=_get(parser, "augment", "reverse", bool, base.augment.reverse),
    )
    scfg = ds.SplitSpec(
        train_frac=_get(parser, "split", "train", float, base.split.train_frac),
        val_frac=_get(parser, "split", "val", float, base.split.val_frac),
        test_frac=_get(parser, "split", "test", float, base.split.test_frac),
        seed=_get(parser, "split", "seed", int, base.split.seed),
    )
    tcfg = network.TrainConfig(
        huber_delta=_get(parser, "train", "huber_delta", float, base.train.huber_delta),
        learning_rate=_get(parser, "train", "learning_rate", float, base.train.learning_rate),
        beta1=_get(parser, "train", "beta1", float, base.train.beta1),
        beta2=_get(parser, "train", "beta2", float, base.train.beta2),
        epsilon=_get(parser, "train", "epsilon", float, base.train.epsilon),
        batch_size=_get(parser, "train", "batch_size", int, base.train.batch_size),
        epochs=_get(parser, "train", "epochs", int, base.train.epochs),
        seed=_get(parser, "train", "seed", int, base.train.seed),
    )
    hidden = _get(parser, "train", "hidden",
                  lambda s: tuple(int(v) for v in s.split(",")), base.hidden)
    return RunConfig(**pipeline, oracle=ocfg, augment=acfg, split=scfg,
                     train=tcfg, hidden=hidden)


def _apply_flag_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    updates = {}
    for attr in ("spacing", "foresight", "sampling", "seed", "jobs"):
        value = getattr(args, attr, None)
        if value is not None:
            updates[attr] = value
    if getattr(args, "epochs", None) is not None:
        updates["train"] = replace(cfg.train, epochs=args.epochs)
    if getattr(args, "hidden", None) is not None:
        updates["hidden"] = tuple(int(v) for v in args.hidden.split(","))
    return replace(cfg, **updates) if updates else cfg


def _read_track(path: Path) -> trackio.Track:
    track = trackio.parse_track_csv(path.read_text(encoding="utf-8"))
    if track.name == "track":
        track = track.renamed(path.stem.replace(".track", ""))
    return track


def windows_path_for(track_path: Path) -> Path:
    name = track_path.name.replace(".track.csv", ".windows.csv")
    return track_path.parent.parent / "windows" / name


# ---------------------------------------------------------------------------
# gen-data


def _process_variant(variant: trackio.Track, cfg: RunConfig):
    ns = geometry.resolve_intersections(
        geometry.build_normals(geometry.resample_centerline(variant, cfg.spacing)),
        cfg.max_tilt, cfg.tilt_step)
    started = time.perf_counter()
    w = oracle.mcp_solve(ns, cfg.oracle)
    solve_s = time.perf_counter() - started
    feat = windows.feature_array(ns, cfg.l_ref)
    centers, x = windows.window_matrix(feat, cfg.foresight, ns.cyclic)
    y = windows.target_matrix(w, cfg.sampling, ns.cyclic, centers)
    return ns, w, centers, x, y, solve_s


def cmd_gen_data(args: argparse.Namespace) -> int:
    cfg = _apply_flag_overrides(load_config(args.config), args)
    out = Path(args.out)
    for sub in ("tracks", "lines", "windows"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    sources: list[trackio.Track] = []
    failures: list[str] = []
    for path in args.tracks:
        try:
            sources.append(_read_track(Path(path)))
        except (RacelineError, OSError) as exc:
            failures.append(f"{path}: {exc}")
    if args.synthetic:
        sources.extend(synth.corpus(args.synthetic, seed=cfg.seed))
    if not sources:
        raise EmptyDataset("no readable input tracks")

    assignment = {}
    train_f, val_f, test_f = ds.split_dataset([t.name for t in sources], cfg.split)
    for family, split in ((f, "train") for f in train_f):
        assignment[family] = split
    assignment.update({f: "val" for f in val_f})
    assignment.update({f: "test" for f in test_f})

    jobs = []
    for source in sources:
        for variant, tag in ds.augment_track(source, cfg.augment):
            jobs.append((source.name, tag, variant))

    def run(job):
        family, tag, variant = job
        try:
            produced = _process_variant(variant, cfg)
            return family, tag, variant, produced, None
        except RacelineError as exc:
            return family, tag, variant, None, f"{variant.name}: {exc}"

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]

    entries = []
    for family, tag, variant, produced, failure in results:
        if failure is not None:
            failures.append(failure)
            continue
        ns, w, centers, x, y, solve_s = produced
        stem = variant.name
        track_rel = f"tracks/{stem}.track.csv"
        line_rel = f"lines/{stem}.line.csv"
        (out / track_rel).write_text(trackio.write_track_csv(variant), encoding="utf-8")
        (out / line_rel).write_text(
            trackio.write_raceline_csv(oracle.oracle_line(ns, w)), encoding="utf-8")
        (out / "windows" / f"{stem}.windows.csv").write_text(
            ds.write_windows_csv(x, y, centers, cfg.foresight, cfg.sampling, cfg.l_ref),
            encoding="utf-8")
        entries.append(ds.ManifestEntry(family, tag, assignment[family], track_rel, line_rel))
        if args.verbose:
            print(f"{stem}: {len(ns)} normals, oracle {solve_s:.2f} s")

    entries.sort(key=lambda e: (e.family_id, e.transform_tag))
    (out / "manifest.csv").write_text(ds.write_manifest(entries), encoding="utf-8")
    print(f"wrote {len(entries)} circuits to {out} "
          f"(train/val/test families: {len(train_f)}/{len(val_f)}/{len(test_f)})")
    for failure in failures:
        print(f"FAILED {failure}", file=sys.stderr)
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# train


def _load_split_windows(manifest_path: Path, split: str, cfg: RunConfig):
    entries = [e for e in ds.parse_manifest(manifest_path.read_text(encoding="utf-8"))
               if e.split == split]
    base = manifest_path.parent
    xs, ys = [], []
    for entry in entries:
        wpath = windows_path_for(base / entry.track_path)
        if wpath.exists():
            x, y, _, f, s, l_ref = ds.parse_windows_csv(wpath.read_text(encoding="utf-8"))
            if (f, s) != (cfg.foresight, cfg.sampling) or l_ref != cfg.l_ref:
                raise network.VersionMismatch(
                    f"{wpath}: windows built for f={f}, s={s}, l_ref={l_ref}")
        else:
            track = _read_track(base / entry.track_path)
            ref = trackio.parse_raceline_csv((base / entry.targets_path).read_text(encoding="utf-8"))
            ns = geometry.resolve_intersections(
                geometry.build_normals(geometry.resample_centerline(track, cfg.spacing)),
                cfg.max_tilt, cfg.tilt_step)
            feat = windows.feature_array(ns, cfg.l_ref)
            centers, x = windows.window_matrix(feat, cfg.foresight, ns.cyclic)
            y = windows.target_matrix(ref.w, cfg.sampling, ns.cyclic, centers)
        xs.append(x)
        ys.append(y)
    if not xs:
        return None
    return np.vstack(xs), np.vstack(ys)


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _apply_flag_overrides(load_config(args.config), args)
    manifest_path = Path(args.manifest)
    train_set = _load_split_windows(manifest_path, "train", cfg)
    if train_set is None or train_set[0].shape[0] == 0:
        raise EmptyDataset("manifest has no train-split windows")
    val_set = _load_split_windows(manifest_path, "val", cfg)
    model = network.init_model(cfg.foresight, cfg.sampling, cfg.hidden,
                               cfg.l_ref, seed=cfg.seed)
    print(f"training {model.layer_sizes} on {train_set[0].shape[0]} windows "
          f"({'no ' if val_set is None else ''}validation split)")
    started = time.perf_counter()
    model, history = network.train(model, train_set, cfg.train, validation=val_set)
    elapsed = time.perf_counter() - started
    network.save_model(model, args.model)
    history_path = Path(args.model).with_suffix(".history.csv")
    with open(history_path, "w", encoding="utf-8") as fh:
        fh.write("# epoch,train_loss" + (",val_loss" if val_set is not None else "") + "\n")
        for epoch, loss in enumerate(history["train_loss"]):
            row = f"{epoch},{loss!r}"
            if val_set is not None:
                row += f",{history['val_loss'][epoch]!r}"
            fh.write(row + "\n")
    print(f"trained {cfg.train.epochs} epochs in {elapsed:.1f} s; "
          f"final train loss {history['train_loss'][-1]:.3e}; model -> {args.model}")
    return 0


# ---------------------------------------------------------------------------
# predict / evaluate / plot / bench


def cmd_predict(args: argparse.Namespace) -> int:
    cfg = _apply_flag_overrides(load_config(args.config), args)
    model = network.load_model(args.model)
    track = _read_track(Path(args.track))
    line = predictor.predict_line(model, track, vehicle_width=args.width,
                                  spacing=cfg.spacing, max_tilt=cfg.max_tilt,
                                  tilt_step=cfg.tilt_step)
    out_path = Path(args.out or (Path(args.track).stem + ".line.csv"))
    out_path.write_text(trackio.write_raceline_csv(line), encoding="utf-8")
    print(f"wrote {len(line)} waypoints to {out_path}")
    if args.svg:
        ns = geometry.resolve_intersections(
            geometry.build_normals(geometry.resample_centerline(track, cfg.spacing)),
            cfg.max_tilt, cfg.tilt_step)
        lines = [("prediction", line.points)]
        if args.reference:
            ref = trackio.parse_raceline_csv(Path(args.reference).read_text(encoding="utf-8"))
            lines.append(("reference", ref.points))
        Path(args.svg).write_text(svg.render_overlay(ns, lines), encoding="utf-8")
        print(f"wrote overlay to {args.svg}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _apply_flag_overrides(load_config(args.config), args)
    model = network.load_model(args.model)
    manifest_path = Path(args.manifest)
    entries = [e for e in ds.parse_manifest(manifest_path.read_text(encoding="utf-8"))
               if e.split == args.split]
    if not entries:
        raise EmptyDataset(f"manifest has no {args.split!r} circuits")
    base = manifest_path.parent
    rows = []
    reports = []
    for entry in entries:
        track = _read_track(base / entry.track_path)
        targets_file = base / entry.targets_path
        if not targets_file.exists():
            raise MissingTargets(f"{targets_file} not found")
        ref = trackio.parse_raceline_csv(targets_file.read_text(encoding="utf-8"))
        ns = geometry.resolve_intersections(
            geometry.build_normals(geometry.resample_centerline(track, cfg.spacing)),
            cfg.max_tilt, cfg.tilt_step)
        started = time.perf_counter()
        w = predictor.predict_waypoints(model, ns, vehicle_width=args.width)
        elapsed = time.perf_counter() - started
        pred = trackio.RacingLine(w=w, points=geometry.waypoints_to_world(ns, w),
                                  source="predicted")
        report = evaluation.compare_lines(pred, ref, ns).with_latency(elapsed)
        rows.append((track.name, report))
        reports.append(report)
    aggregate = evaluation.pooled_report(reports)
    rows.append((f"Aggregate ({len(reports)} circuits)", aggregate))
    table = evaluation.format_report_table(rows)
    print(table, end="")
    if args.report:
        kv = [evaluation.report_kv(rep, prefix=f"{name}.") for name, rep in rows]
        Path(args.report).write_text("".join(kv), encoding="utf-8")
        print(f"wrote report to {args.report}")
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    cfg = _apply_flag_overrides(load_config(args.config), args)
    track = _read_track(Path(args.track))
    ns = geometry.resolve_intersections(
        geometry.build_normals(geometry.resample_centerline(track, cfg.spacing)),
        cfg.max_tilt, cfg.tilt_step)
    lines = []
    for path in args.lines:
        line = trackio.parse_raceline_csv(Path(path).read_text(encoding="utf-8"))
        lines.append((Path(path).stem, line.points))
    Path(args.out).write_text(svg.render_overlay(ns, lines), encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = _apply_flag_overrides(load_config(args.config), args)
    model = network.load_model(args.model)
    track = _read_track(Path(args.track))
    result = evaluation.measure_latency(model, track, repetitions=args.reps,
                                        spacing=cfg.spacing)
    print(f"{track.name}: median {result.seconds * 1e3:.1f} ms over "
          f"{result.repetitions} runs ({result.n_normals} normals)")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="raceline",
        description="Racing-line prediction toolkit: dataset generation, "
                    "training, inference and evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="INI config file")
        p.add_argument("--spacing", type=float, help="normal spacing in metres")
        p.add_argument("--foresight", type=int, help="normals fore and aft per window")
        p.add_argument("--sampling", type=int, help="output sampling level s")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--jobs", type=int, help="parallel workers for batch steps")

    p = sub.add_parser("gen-data", help="augment tracks, solve oracle lines, emit windows")
    p.add_argument("tracks", nargs="*", help="input track CSV files")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--synthetic", type=int, default=0,
                   help="also generate N synthetic circuits")
    p.add_argument("--verbose", action="store_true")
    common(p)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train the network on a dataset manifest")
    p.add_argument("manifest", help="manifest.csv from gen-data")
    p.add_argument("--model", required=True, help="output model file")
    p.add_argument("--epochs", type=int, help="override epoch count")
    p.add_argument("--hidden", help="comma-separated hidden layer sizes")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict a racing line for a track")
    p.add_argument("model", help="trained model file")
    p.add_argument("track", help="track CSV")
    p.add_argument("--out", help="output raceline CSV")
    p.add_argument("--width", type=float, default=0.0, help="vehicle width in metres")
    p.add_argument("--svg", help="write an SVG overlay to this path")
    p.add_argument("--reference", help="reference raceline CSV for the overlay")
    common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score a model on a manifest split")
    p.add_argument("model", help="trained model file")
    p.add_argument("manifest", help="manifest.csv from gen-data")
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--width", type=float, default=0.0, help="vehicle width in metres")
    p.add_argument("--report", help="write machine-readable report here")
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("plot", help="render a track (and lines) as SVG")
    p.add_argument("track", help="track CSV")
    p.add_argument("lines", nargs="*", help="raceline CSV files to overlay")
    p.add_argument("--out", required=True, help="output SVG path")
    common(p)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("bench", help="measure prediction latency")
    p.add_argument("model", help="trained model file")
    p.add_argument("track", help="track CSV")
    p.add_argument("--reps", type=int, default=9, help="timed repetitions")
    common(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RacelineError, OSError, ValueError, configparser.Error) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except AssertionError as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
