"""Evaluation harness: splits, confusion matrices, one-vs-rest ROC curves and
the comparative experiments (angle bins with/without equal k-support,
polarimetric parameter sweeps)."""

from dataclasses import dataclass, field

import numpy as np

from .classify import (CgbcModel, MdPcannModel, PcannModel, build_observation_matrix,
                       cgbc_classify, cgbc_train, md_pcann_classify, md_pcann_train,
                       pcann_classify, pcann_train)
from .errors import DegenerateLabels, EmptyBin, EmptySplit, ValidationError
from .polarimetry import MONOSTATIC_COUNT, PARAM_NAMES


@dataclass(frozen=True)
class LabeledDataset:
    """A split of clips (or feature cubes) with its provenance."""

    clips: tuple
    role: str                                    # "train" or "test"
    provenance: dict = field(default_factory=dict)   # config hash, seed

    def __post_init__(self):
        clips = tuple(self.clips)
        if self.role not in ("train", "test"):
            raise ValidationError(f"role must be 'train' or 'test', got {self.role!r}")
        shapes = {c.pixels.shape if hasattr(c, "pixels") else c.values.shape for c in clips}
        if len(shapes) > 1:
            raise ValidationError(f"clips differ in dimensions: {sorted(shapes)}")
        if len({c.meta.class_label for c in clips}) < 2:
            raise ValidationError("a labeled dataset needs at least 2 classes")
        object.__setattr__(self, "clips", clips)

    @property
    def labels(self):
        return [c.meta.class_label for c in self.clips]


def split_train_test(clips, train_elev: float = 10.0, test_elev: float = 15.0):
    """Partition clips by receiver elevation into (train, test)."""
    train, test = [], []
    for clip in clips:
        e = clip.meta.rx_elevation
        if abs(e - train_elev) < 1e-9:
            train.append(clip)
        elif abs(e - test_elev) < 1e-9:
            test.append(clip)
        else:
            raise ValidationError(
                f"clip at elevation {e} deg belongs to neither split ({train_elev}/{test_elev})")
    if not train or not test:
        raise EmptySplit(f"split left {len(train)} train / {len(test)} test clips")
    return train, test


def predict(model, item):
    if isinstance(model, PcannModel):
        return pcann_classify(model, item)
    if isinstance(model, CgbcModel):
        return cgbc_classify(model, item)
    if isinstance(model, MdPcannModel):
        return md_pcann_classify(model, item)
    raise ValidationError(f"unknown model type {type(model).__name__}")


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray    # (C, C) ints, rows = true class
    classes: tuple

    def accuracy(self) -> float:
        total = int(self.counts.sum())
        return float(np.trace(self.counts)) / total if total else 0.0

    def per_class_accuracy(self) -> dict:
        out = {}
        for i, c in enumerate(self.classes):
            row = int(self.counts[i].sum())
            if row:
                out[c] = float(self.counts[i, i]) / row
        return out


def evaluate_confusion(model, test_items) -> ConfusionMatrix:
    """One prediction per item; rows are true classes, columns predictions."""
    test_items = list(test_items)
    labels = [it.meta.class_label for it in test_items]
    classes = tuple(sorted(set(model.classes) | set(labels)))
    idx = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=int)
    for item, true in zip(test_items, labels):
        pred = predict(model, item).label
        counts[idx[true], idx[pred]] += 1
    return ConfusionMatrix(counts=counts, classes=classes)


# ---------------------------------------------------------------------------
# ROC

@dataclass(frozen=True)
class RocCurve:
    target: str
    points: tuple       # (threshold, fpr, tpr), fpr nondecreasing
    auc: float


def roc_curve(scored, target: str = "") -> RocCurve:
    """One-vs-rest ROC from (score, is_target) pairs.

    Thresholds sweep the distinct scores from high to low ("predict target
    when score >= threshold"); the area comes from the trapezoid rule.
    """
    scored = [(float(s), bool(t)) for s, t in scored]
    pos = sum(1 for _, t in scored if t)
    neg = len(scored) - pos
    if pos == 0 or neg == 0:
        raise DegenerateLabels(f"need positives and negatives, got {pos}/{neg}")
    points = [(float("inf"), 0.0, 0.0)]
    tp = fp = 0
    order = sorted(scored, key=lambda st: -st[0])
    i = 0
    while i < len(order):
        thr = order[i][0]
        while i < len(order) and order[i][0] == thr:
            if order[i][1]:
                tp += 1
            else:
                fp += 1
            i += 1
        points.append((thr, fp / neg, tp / pos))
    fprs = [p[1] for p in points]
    tprs = [p[2] for p in points]
    auc = float(np.trapezoid(tprs, fprs))
    return RocCurve(target=target, points=tuple(points), auc=auc)


def one_vs_rest_scores(model, test_items):
    """Per target class: list of (margin toward that class, is_target)."""
    test_items = list(test_items)
    results = [predict(model, it) for it in test_items]
    out = {}
    for c in model.classes:
        pairs = []
        for item, res in zip(test_items, results):
            others = [v for k, v in res.scores.items() if k != c]
            margin = res.scores[c] - max(others) if others else res.scores[c]
            pairs.append((margin, item.meta.class_label == c))
        out[c] = pairs
    return out


def roc_curves(model, test_items) -> dict:
    return {c: roc_curve(pairs, c) for c, pairs in one_vs_rest_scores(model, test_items).items()}


# ---------------------------------------------------------------------------
# Experiments

@dataclass(frozen=True)
class AccuracyRow:
    setting: str          # bin label or parameter-selection label
    equal_support: bool
    classifier: str
    class_label: str      # a class name, or "all" for the pooled figure
    accuracy: float


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple
    confusions: dict = field(default_factory=dict)   # setting -> ConfusionMatrix
    meta: dict = field(default_factory=dict)

    def accuracy(self, setting: str, class_label: str = "all") -> float:
        for row in self.rows:
            if row.setting == setting and row.class_label == class_label:
                return row.accuracy
        raise KeyError(f"no accuracy row for ({setting}, {class_label})")


def train_classifier(train_clips, kind: str, n_components: int = 20,
                     bin_width: float = 10.0, pixel_mode: str = "magnitude"):
    """Fit the requested classifier; PCANN component counts are capped at the
    numerical rank so small bins stay trainable."""
    if kind == "pcann":
        obs = build_observation_matrix(train_clips, pixel_mode=pixel_mode)
        rank = _matrix_rank(obs.x)
        return pcann_train(obs, n=min(n_components, rank))
    if kind == "cgbc":
        return cgbc_train(train_clips, bin_width=bin_width)
    raise ValidationError(f"classifier must be 'pcann' or 'cgbc', got {kind!r}")


def _matrix_rank(x) -> int:
    s = np.linalg.svd(x, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > 1e-10 * s[0]))


def _accuracy_rows(setting, equal_support, kind, confusion):
    rows = [AccuracyRow(setting, equal_support, kind, "all", confusion.accuracy())]
    for c, acc in sorted(confusion.per_class_accuracy().items()):
        rows.append(AccuracyRow(setting, equal_support, kind, c, acc))
    return rows


def bin_label(lo: float, hi: float) -> str:
    return f"{lo:g}-{hi:g}"


def single_report(setting: str, classifier: str, confusion: ConfusionMatrix,
                  equal_support: bool = False) -> ExperimentReport:
    """Wrap one confusion matrix as a report (pooled + per-class rows)."""
    return ExperimentReport(rows=tuple(_accuracy_rows(setting, equal_support,
                                                      classifier, confusion)),
                            confusions={setting: confusion})


def angle_binned_experiment(dataset, bins=((0.0, 60.0), (60.0, 80.0), (80.0, 100.0)),
                            equal_support: bool = False, classifier: str = "pcann",
                            n_components: int = 20, bin_width: float = 10.0) -> ExperimentReport:
    """Per-bin train/test accuracy over mean bistatic angle.

    With ``equal_support`` every clip (all bins, both splits) is re-formed
    after trimming its patch to the k-extent available in the largest-angle
    bin, so all images share roughly one resolution.
    """
    bins = [(float(lo), float(hi)) for lo, hi in bins]
    reference = dataset.min_patch_extent(*bins[-1]) if equal_support else None
    train, test = dataset.split_clips(reference_extent=reference)

    rows, confusions = [], {}
    for lo, hi in bins:
        tr = [c for c in train if lo <= c.meta.mean_bistatic_angle < hi]
        te = [c for c in test if lo <= c.meta.mean_bistatic_angle < hi]
        if not tr or not te:
            raise EmptyBin(f"bin [{lo}, {hi}) has {len(tr)} train / {len(te)} test clips")
        model = train_classifier(tr, classifier, n_components=n_components, bin_width=bin_width)
        confusion = evaluate_confusion(model, te)
        label = bin_label(lo, hi)
        confusions[label] = confusion
        rows.extend(_accuracy_rows(label, equal_support, classifier, confusion))
    meta = {"bins": bins, "equal_support": equal_support, "classifier": classifier,
            "reference_extent": reference}
    return ExperimentReport(rows=tuple(rows), confusions=confusions, meta=meta)


def polarimetric_ablation(train_cubes, test_cubes, mode: str = "prefix_sweep",
                          n_pix: int = 20, n_par: int = 2) -> ExperimentReport:
    """Parameter sweeps over the fixed ordering A0,B0,B,C,D,E,F,G,H,A,I..N.

    prefix_sweep: grow the selection one parameter at a time (16 settings).
    ninth_feature_sweep: keep the first eight fixed and try each of the seven
    asymmetry parameters as the ninth (7 settings).
    """
    full = tuple(range(len(PARAM_NAMES)))
    for cube in list(train_cubes) + list(test_cubes):
        if cube.selected != full:
            raise ValidationError("ablation needs cubes carrying all 16 parameters")

    if mode == "prefix_sweep":
        selections = [(f"p={p}", full[:p]) for p in range(1, len(PARAM_NAMES) + 1)]
    elif mode == "ninth_feature_sweep":
        fixed = full[:MONOSTATIC_COUNT - 1]
        selections = [(PARAM_NAMES[b], fixed + (b,))
                      for b in range(MONOSTATIC_COUNT, len(PARAM_NAMES))]
    else:
        raise ValidationError("mode must be 'prefix_sweep' or 'ninth_feature_sweep'")

    rows, confusions = [], {}
    for label, indices in selections:
        tr = [c.select(indices) for c in train_cubes]
        te = [c.select(indices) for c in test_cubes]
        model = md_pcann_train(tr, n_pix=n_pix, n_par=min(n_par, len(indices)), cap=True)
        confusion = evaluate_confusion(model, te)
        confusions[label] = confusion
        rows.extend(_accuracy_rows(label, False, "md-pcann", confusion))
    meta = {"mode": mode, "n_pix": n_pix, "n_par": n_par}
    return ExperimentReport(rows=tuple(rows), confusions=confusions, meta=meta)
