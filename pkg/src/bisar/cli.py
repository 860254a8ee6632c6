"""Command-line front end: generate / train / evaluate / inspect.

All diagnostics go to stderr, all data to files or stdout.  Every output file
embeds the config hash of the dataset it came from; evaluate refuses to mix a
model with a dataset generated under a different configuration.
"""

import argparse
import os
import sys

import numpy as np

from . import evaluation, formats
from .classify import (CgbcModel, PcannModel, build_observation_matrix, cgbc_train,
                       pcann_train, variance_fraction)
from .config import load_config
from .dataset import GeneratedDataset
from .errors import BisarError, EmptyBin, EmptySplit, RankDeficient, ShapeMismatch
from .evaluation import (angle_binned_experiment, evaluate_confusion,
                         polarimetric_ablation, roc_curves)
from .imaging import mainlobe_width, theoretical_resolution
from .polarimetry import PARAM_NAMES, FeatureCube


def _clip_filename(index: int, channel: str) -> str:
    return f"clip_{index:05d}_{channel.lower()}.bsar"


def cmd_generate(args) -> int:
    config = load_config(args.config)
    dataset = GeneratedDataset.from_config(config)
    classes = [t.name for t in dataset.targets]
    class_id = {name: i for i, name in enumerate(classes)}
    os.makedirs(args.out, exist_ok=True)

    rows = []
    for recipe, clips in dataset.materialize():
        for channel, clip in clips.items():
            fname = _clip_filename(recipe.index, channel)
            formats.write_clip(os.path.join(args.out, fname), clip,
                               class_id[recipe.class_label])
            rows.append({
                "file": fname,
                "class": recipe.class_label,
                "class_id": class_id[recipe.class_label],
                "channel": channel,
                "role": recipe.role,
                "recipe_index": recipe.index,
                "mean_bistatic_angle": clip.meta.mean_bistatic_angle,
                "rx_elevation": clip.meta.rx_elevation,
                "rx_azimuth_center": clip.meta.rx_azimuth_center,
            })
    resolution = theoretical_resolution(config.bandwidth_hz, 0.0)
    manifest = formats.manifest_dict(config, classes, rows, resolution)
    path = os.path.join(args.out, formats.MANIFEST_NAME)
    formats.write_manifest(path, manifest)
    print(f"wrote {len(rows)} clips for {len(classes)} classes to {args.out}")
    print(f"monostatic resolution {resolution:.3f} m; manifest {path}")
    print(f"config hash {config.config_hash()}")
    return 0


def _load_split(manifest, channel):
    config = manifest["_config"]
    train, test = [], []
    for row in manifest["clips"]:
        if row["channel"] != channel:
            continue
        clip, _ = formats.read_clip_file(os.path.join(manifest["_dir"], row["file"]),
                                         manifest["classes"])
        (train if row["role"] == "train" else test).append(clip)
    if not train or not test:
        raise EmptySplit(f"manifest holds {len(train)} train / {len(test)} test "
                         f"clips on channel {channel}; need both elevations")
    provenance = {"config_hash": manifest["config_hash"], "seed": config.seed}
    return (evaluation.LabeledDataset(tuple(train), "train", provenance),
            evaluation.LabeledDataset(tuple(test), "test", provenance))


def cmd_train(args) -> int:
    manifest = formats.load_manifest(args.manifest)
    config = manifest["_config"]
    channel = config.channels[0]
    train = _load_split(manifest, channel)[0].clips
    if args.classifier == "pcann":
        obs = build_observation_matrix(train)
        try:
            model = pcann_train(obs, n=args.components)
        except RankDeficient as exc:
            raise RankDeficient(f"{exc} (use --components at most the training "
                                f"clip count, here {len(train)})") from exc
    else:
        model = cgbc_train(train, bin_width=args.bin_width)
    formats.save_model(args.out, model, config.config_hash())
    if isinstance(model, PcannModel):
        frac = variance_fraction(model, min(args.components, model.eigvals.size))
        print(f"pcann model: {model.v.shape[1]} components over {len(train)} clips; "
              f"variance fraction {frac:.4f}")
    elif isinstance(model, CgbcModel):
        print(f"cgbc model: bin width {model.bin_width:g} deg")
        for (label, bin_idx), t in sorted(model.templates.items()):
            print(f"  class {label} bin {bin_idx}: {t.count} clips")
    print(f"saved model to {args.out}")
    return 0


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def cmd_evaluate(args) -> int:
    manifest = formats.load_manifest(args.manifest)
    config = manifest["_config"]
    chash = config.config_hash()
    model, model_hash = formats.load_model(args.model)
    if model_hash and model_hash != chash:
        raise BisarError(f"model was trained on config {model_hash[:12]}..., "
                         f"manifest has {chash[:12]}...; refusing to evaluate")
    os.makedirs(args.out, exist_ok=True)
    channel = config.channels[0]
    test = _load_split(manifest, channel)[1].clips

    failures = []
    summary = {"classifier": type(model).__name__}

    confusion = evaluate_confusion(model, test)
    _write(os.path.join(args.out, "confusion.csv"), formats.confusion_csv(confusion, chash))
    base = evaluation.single_report("all-angles", _classifier_name(model), confusion)
    _write(os.path.join(args.out, "accuracy.csv"), formats.accuracy_csv(base, chash))
    summary["accuracy"] = confusion.accuracy()
    summary["per_class_accuracy"] = confusion.per_class_accuracy()

    if args.roc:
        aucs = {}
        for target, curve in roc_curves(model, test).items():
            _write(os.path.join(args.out, f"roc_{target}.csv"), formats.roc_csv(curve, chash))
            aucs[target] = curve.auc
        summary["auc"] = aucs

    if args.angle_bins or args.equal_support:
        dataset = GeneratedDataset.from_config(config)
        try:
            report = angle_binned_experiment(
                dataset, bins=config.angle_bins_deg, equal_support=args.equal_support,
                classifier=config.classifier, n_components=config.n_components,
                bin_width=config.cgbc_bin_width_deg)
            _write(os.path.join(args.out, "angle_accuracy.csv"),
                   formats.accuracy_csv(report, chash))
            summary["angle_bins"] = {r.setting: r.accuracy for r in report.rows
                                     if r.class_label == "all"}
        except (EmptyBin, ShapeMismatch) as exc:
            failures.append(f"angle-bin experiment: {exc}")

    if args.polar_sweep:
        if set(config.channels) != set(formats.CHANNELS):
            failures.append("polar sweep needs channels [HH, HV, VH, VV] in the config")
        else:
            dataset = GeneratedDataset.from_config(config)
            train_cubes, test_cubes = dataset.split_cubes()
            mode = "prefix_sweep" if args.polar_sweep == "prefix" else "ninth_feature_sweep"
            try:
                report = polarimetric_ablation(train_cubes, test_cubes, mode=mode)
                _write(os.path.join(args.out, f"polar_{args.polar_sweep}.csv"),
                       formats.accuracy_csv(report, chash))
                summary["polar_sweep"] = {r.setting: r.accuracy for r in report.rows
                                          if r.class_label == "all"}
            except (EmptyBin, ShapeMismatch) as exc:
                failures.append(f"polar sweep: {exc}")

    _write(os.path.join(args.out, "summary.json"),
           formats.summary_json(chash, config.seed, summary))
    for f in failures:
        print(f"error: {f}", file=sys.stderr)
    print(f"evaluation written to {args.out}")
    return 1 if failures else 0


def _classifier_name(model) -> str:
    return {"PcannModel": "pcann", "CgbcModel": "cgbc"}.get(type(model).__name__, "md-pcann")


def cmd_inspect(args) -> int:
    obj, class_id = formats.read_clip_file(args.file)
    if isinstance(obj, FeatureCube):
        print(f"feature cube {obj.values.shape[0]}x{obj.values.shape[1]}, "
              f"P={obj.param_count} parameters")
        print("parameters: " + ", ".join(PARAM_NAMES[i] for i in obj.selected))
        print(f"class id {class_id}; mean bistatic angle "
              f"{obj.meta.mean_bistatic_angle:.2f} deg")
        return 0
    clip = obj
    mag = np.abs(clip.pixels)
    iy, ix = np.unravel_index(int(np.argmax(mag)), mag.shape)
    print(f"clip {clip.n}x{clip.n}, channel {clip.meta.channel}, class id {class_id}")
    print(f"pixel spacing {clip.pixel_spacing:.4f} m")
    print(f"mean bistatic angle {clip.meta.mean_bistatic_angle:.2f} deg; "
          f"rx elevation {clip.meta.rx_elevation:.2f} deg; "
          f"rx azimuth center {clip.meta.rx_azimuth_center:.2f} deg")
    print(f"peak |pixel| {mag[iy, ix]:.6g} at (row {iy}, col {ix})")
    print(f"energy {clip.energy():.6g}")
    print(f"-3 dB width: {mainlobe_width(clip, 1):.4f} m along x, "
          f"{mainlobe_width(clip, 0):.4f} m along y")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bisar",
                                description="bistatic SAR clip simulation and target recognition")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="simulate a clip dataset from a JSON config")
    g.add_argument("--config", required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_generate)

    t = sub.add_parser("train", help="train a classifier on the manifest's training split")
    t.add_argument("--manifest", required=True)
    t.add_argument("--classifier", choices=("pcann", "cgbc"), default="pcann")
    t.add_argument("--components", type=int, default=20)
    t.add_argument("--bin-width", type=float, default=10.0)
    t.add_argument("--out", required=True)
    t.set_defaults(fn=cmd_train)

    e = sub.add_parser("evaluate", help="run evaluations and write CSV/JSON reports")
    e.add_argument("--manifest", required=True)
    e.add_argument("--model", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--roc", action="store_true")
    e.add_argument("--angle-bins", action="store_true")
    e.add_argument("--equal-support", action="store_true")
    e.add_argument("--polar-sweep", choices=("prefix", "ninth"))
    e.set_defaults(fn=cmd_evaluate)

    i = sub.add_parser("inspect", help="summarize a clip or feature-cube file")
    i.add_argument("file")
    i.set_defaults(fn=cmd_inspect)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except BisarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
