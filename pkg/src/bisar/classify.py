"""Target classifiers.

Two families:

* CGBC: per-pixel Gaussian templates per (class, receiver-azimuth bin),
  scored by the log-likelihood -sum[log(sigma_i) + ((r_i - mu_i)/sigma_i)^2].
* PCANN: stack pixels, normalize, project onto the leading eigenvectors of
  the data covariance (computed through an SVD of the observation matrix,
  which yields the same eigenbasis with better conditioning), then nearest
  neighbour in the reduced space.  A multidimensional variant reduces the
  pixel axis and the parameter axis of polarimetric feature cubes in turn.

Functions accept image clips / feature cubes or bare pixel arrays; toy
fixtures smaller than a real clip are fine.

Also here: truncated SVD of a clip seen as a scattering-centre decomposition
(positions in the singular vectors, intensities in the singular values) and
the two-sided projection U^H A V that recovers the intensity matrix.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RankDeficient, ShapeMismatch, TooFewClips, ValidationError
from .imaging import ImageClip
from .polarimetry import FeatureCube

_RANK_TOL = 1e-10
_SCALE_FLOOR = 1e-12   # times the largest per-row standard deviation

PIXEL_MODES = ("magnitude", "complex")


def _pixel_matrix(clip, pixel_mode: str):
    px = clip.pixels if isinstance(clip, ImageClip) else np.asarray(clip)
    if px.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D pixel array, got shape {px.shape}")
    if pixel_mode == "magnitude":
        return np.abs(px).astype(float)
    if pixel_mode == "complex":
        return px.astype(complex)
    raise ValidationError(f"pixel_mode must be one of {PIXEL_MODES}")


def _center_scale(x):
    """Row-center and row-normalize; zero-variance rows are floored, not NaN."""
    mean = x.mean(axis=1)
    centered = x - mean[:, None]
    std = np.sqrt(np.mean(np.abs(centered) ** 2, axis=1))
    top = std.max()
    if top == 0.0:
        scale = np.ones_like(std)
    else:
        scale = np.maximum(std, _SCALE_FLOOR * top)
    return centered / scale[:, None], mean, scale


def _fix_column_signs(v):
    """Deterministic sign/phase per column: largest entry made real positive."""
    v = v.copy()
    for j in range(v.shape[1]):
        i = int(np.argmax(np.abs(v[:, j])))
        pivot = v[i, j]
        if pivot != 0:
            v[:, j] *= np.conj(pivot) / abs(pivot)
    return v


def _numerical_rank(s):
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > _RANK_TOL * s[0]))


@dataclass(frozen=True)
class ObservationMatrix:
    """Stacked, normalized training clips: one column per clip."""

    x: np.ndarray            # (D, M)
    column_labels: tuple
    mean: np.ndarray         # (D,)
    scale: np.ndarray        # (D,)
    pixel_mode: str
    clip_shape: tuple


def build_observation_matrix(clips, labels=None, pixel_mode="magnitude") -> ObservationMatrix:
    """Stack clips into a (pixels x clips) matrix, remove the per-pixel mean
    and scale each pixel row to unit variance (population convention)."""
    clips = list(clips)
    if len(clips) < 2:
        raise TooFewClips(f"need at least 2 clips, got {len(clips)}")
    if labels is None:
        labels = [getattr(getattr(c, "meta", None), "class_label", "?") for c in clips]
    labels = tuple(labels)
    if len(labels) != len(clips):
        raise ValidationError("labels must match clips one to one")

    mats = [_pixel_matrix(c, pixel_mode) for c in clips]
    shape = mats[0].shape
    for m in mats:
        if m.shape != shape:
            raise ShapeMismatch(f"clip dimensions differ: {m.shape} vs {shape}")
    x = np.stack([m.ravel() for m in mats], axis=1)
    xn, mean, scale = _center_scale(x)
    return ObservationMatrix(x=xn, column_labels=labels, mean=mean, scale=scale,
                             pixel_mode=pixel_mode, clip_shape=shape)


@dataclass(frozen=True)
class PcannModel:
    v: np.ndarray            # (D, n) orthonormal pixel-space basis
    reduced_db: np.ndarray   # (n, M)
    labels: tuple
    classes: tuple
    mean: np.ndarray
    scale: np.ndarray
    eigvals: np.ndarray      # all covariance eigenvalues, descending
    pixel_mode: str
    clip_shape: tuple


@dataclass(frozen=True)
class ClassifyResult:
    label: str
    margin: float
    scores: dict             # class -> score, higher is better
    distances: dict = field(default_factory=dict)


def pcann_train(obs: ObservationMatrix, n: int = 20) -> PcannModel:
    """Fit the projection basis from the top-n covariance eigenvectors."""
    d, m = obs.x.shape
    if not (1 <= n <= min(d, m)):
        raise RankDeficient(f"n={n} outside [1, min(D, M)={min(d, m)}]")
    u, s, _ = np.linalg.svd(obs.x, full_matrices=False)
    rank = _numerical_rank(s)
    if n > rank:
        raise RankDeficient(
            f"n={n} exceeds numerical rank {rank}; lower n or add distinct training clips")
    v = _fix_column_signs(u[:, :n])
    return PcannModel(v=v, reduced_db=v.conj().T @ obs.x, labels=obs.column_labels,
                      classes=tuple(sorted(set(obs.column_labels))),
                      mean=obs.mean, scale=obs.scale, eigvals=s ** 2,
                      pixel_mode=obs.pixel_mode, clip_shape=obs.clip_shape)


def variance_fraction(model: PcannModel, n: int) -> float:
    """Fraction of total data variance carried by the first n eigenvalues."""
    if not (0 <= n <= model.eigvals.size):
        raise ValidationError(f"n must be in [0, {model.eigvals.size}]")
    total = float(model.eigvals.sum())
    if total == 0.0:
        return 1.0
    return float(model.eigvals[:n].sum()) / total


def _project(model, clip):
    px = _pixel_matrix(clip, model.pixel_mode)
    if px.shape != model.clip_shape:
        raise ShapeMismatch(f"clip shape {px.shape} does not match training {model.clip_shape}")
    xn = (px.ravel() - model.mean) / model.scale
    return model.v.conj().T @ xn


def _nn_result(classes, labels, dists):
    """Per-class minimum distance -> label with deterministic tie-breaks."""
    per_class = {}
    for c in classes:
        idx = [i for i, lab in enumerate(labels) if lab == c]
        per_class[c] = float(np.min(dists[idx])) if idx else math.inf
    ordered = [per_class[c] for c in classes]
    best = int(np.argmin(ordered))
    rest = [v for i, v in enumerate(ordered) if i != best]
    margin = (min(rest) - ordered[best]) if rest else math.inf
    return ClassifyResult(label=classes[best], margin=float(margin),
                          scores={c: -v for c, v in per_class.items()},
                          distances=per_class)


def pcann_classify(model: PcannModel, clip) -> ClassifyResult:
    """Nearest training clip in the reduced space; ties go to the lowest
    class index, then the lowest training column index."""
    z = _project(model, clip)
    dists = np.linalg.norm(model.reduced_db - z[:, None], axis=0)
    return _nn_result(model.classes, model.labels, dists)


# ---------------------------------------------------------------------------
# CGBC

@dataclass(frozen=True)
class GaussianTemplate:
    mu: np.ndarray
    sigma: np.ndarray
    count: int


@dataclass(frozen=True)
class CgbcModel:
    templates: dict          # (class, azimuth bin index) -> GaussianTemplate
    classes: tuple
    bin_width: float
    sigma_floor: float
    clip_shape: tuple


def cgbc_train(clips, bin_width: float = 10.0, sigma_floor: float = None) -> CgbcModel:
    """Per-pixel mean/std templates per (class, receiver azimuth bin).

    Population (divide-by-count) standard deviations, floored at
    ``sigma_floor`` (default 1e-6 times the global mean pixel magnitude).
    """
    clips = list(clips)
    if not clips:
        raise TooFewClips("no training clips")
    if not (bin_width > 0):
        raise ValidationError("bin_width must be positive")
    shape = clips[0].pixels.shape
    groups = {}
    for clip in clips:
        if clip.pixels.shape != shape:
            raise ShapeMismatch(f"clip dimensions differ: {clip.pixels.shape} vs {shape}")
        key = (clip.meta.class_label, int(math.floor(clip.meta.rx_azimuth_center / bin_width)))
        groups.setdefault(key, []).append(np.abs(clip.pixels).ravel())

    if sigma_floor is None:
        sigma_floor = 1e-6 * float(np.mean([np.mean(v) for vs in groups.values() for v in vs]))
    if not (sigma_floor > 0):
        sigma_floor = 1e-12

    classes = sorted({label for label, _ in groups})
    lacking = [c for c in classes
               if not any(len(v) >= 2 for (lab, _), v in groups.items() if lab == c)]
    if lacking:
        raise TooFewClips(f"classes with no azimuth bin holding >= 2 clips: {lacking}")

    templates = {}
    for key, vecs in sorted(groups.items()):
        stack = np.stack(vecs, axis=1)
        mu = stack.mean(axis=1)
        sigma = np.sqrt(np.mean((stack - mu[:, None]) ** 2, axis=1))
        templates[key] = GaussianTemplate(mu=mu, sigma=np.maximum(sigma, sigma_floor),
                                          count=len(vecs))
    return CgbcModel(templates=templates, classes=tuple(classes),
                     bin_width=float(bin_width), sigma_floor=float(sigma_floor),
                     clip_shape=shape)


def cgbc_score(clip, template: GaussianTemplate) -> float:
    """Gaussian log-likelihood (up to constants) of the magnitude pixels."""
    px = clip.pixels if isinstance(clip, ImageClip) else np.asarray(clip)
    r = np.abs(px).ravel().astype(float)
    if r.shape != template.mu.shape:
        raise ShapeMismatch(f"pixel count {r.shape} does not match template {template.mu.shape}")
    return float(-np.sum(np.log(template.sigma) + ((r - template.mu) / template.sigma) ** 2))


def cgbc_classify(model: CgbcModel, clip) -> ClassifyResult:
    """Best template score per class, equal priors; ties to lowest class index."""
    px = clip.pixels if isinstance(clip, ImageClip) else np.asarray(clip)
    if px.shape != model.clip_shape:
        raise ShapeMismatch(f"clip shape {px.shape} does not match training {model.clip_shape}")
    scores = {}
    for (label, _), template in model.templates.items():
        s = cgbc_score(px, template)
        if label not in scores or s > scores[label]:
            scores[label] = s
    ordered = [scores[c] for c in model.classes]
    best = int(np.argmax(ordered))
    rest = [v for i, v in enumerate(ordered) if i != best]
    margin = (ordered[best] - max(rest)) if rest else math.inf
    return ClassifyResult(label=model.classes[best], margin=float(margin), scores=scores)


# ---------------------------------------------------------------------------
# Scattering-centre SVD analysis

@dataclass(frozen=True)
class SvdDecomposition:
    u: np.ndarray   # (N, k)
    s: np.ndarray   # (k,) descending
    v: np.ndarray   # (N, k); pixels ~= u @ diag(s) @ v^H


def svd_scatter_decompose(clip, k: int) -> SvdDecomposition:
    """Truncated SVD of the pixel matrix.

    For an image of distinct point scatterers the singular values are the
    scatterer intensities and the singular vectors localize their rows and
    columns, so the rank equals the number of scattering centres.
    """
    px = clip.pixels if isinstance(clip, ImageClip) else np.asarray(clip)
    n = px.shape[0]
    if not (1 <= k <= n):
        raise ValidationError(f"k must be in [1, {n}], got {k}")
    u, s, vh = np.linalg.svd(px)
    return SvdDecomposition(u=u[:, :k], s=s[:k], v=vh[:k].conj().T)


def two_dim_pca_reduce(clip, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Two-sided projection U^H A V; with A's own singular bases this
    recovers the diagonal matrix of singular values."""
    px = clip.pixels if isinstance(clip, ImageClip) else np.asarray(clip)
    if u.shape[0] != px.shape[0] or v.shape[0] != px.shape[1]:
        raise ShapeMismatch(
            f"basis rows {u.shape[0]}x{v.shape[0]} do not match image {px.shape}")
    return u.conj().T @ px @ v


# ---------------------------------------------------------------------------
# Multidimensional PCANN for polarimetric feature cubes

@dataclass(frozen=True)
class MdPcannModel:
    v_pix: np.ndarray        # (D, n_pix)
    v_par: np.ndarray        # (P, n_par)
    reduced_db: tuple        # M matrices of shape (n_pix, n_par)
    labels: tuple
    classes: tuple
    mean_pix: np.ndarray
    scale_pix: np.ndarray
    mean_par: np.ndarray
    scale_par: np.ndarray
    selected: tuple
    cube_shape: tuple


def _cube_matrix(cube):
    v = cube.values if isinstance(cube, FeatureCube) else np.asarray(cube, dtype=float)
    if v.ndim != 3:
        raise ShapeMismatch(f"expected a 3-D feature cube, got shape {v.shape}")
    return v.reshape(-1, v.shape[2])    # (D, P)


def md_pcann_train(cubes, n_pix: int = 20, n_par: int = 2, cap: bool = False) -> MdPcannModel:
    """Fit pixel-axis then parameter-axis bases and store doubly-reduced cubes.

    The pixel basis comes from the parameter-averaged cubes (same
    preprocessing as the plain classifier); the parameter basis from the
    pixel-projected data.  Identically-zero parameter layers stay zero under
    the floored normalization and cannot influence distances.  With ``cap``
    the component counts shrink to the numerical ranks instead of raising.
    """
    cubes = list(cubes)
    if len(cubes) < 2:
        raise TooFewClips(f"need at least 2 cubes, got {len(cubes)}")
    shape = cubes[0].values.shape if isinstance(cubes[0], FeatureCube) else np.asarray(cubes[0]).shape
    selected = cubes[0].selected if isinstance(cubes[0], FeatureCube) else tuple(range(shape[2]))
    mats = []
    labels = []
    for cube in cubes:
        m = _cube_matrix(cube)
        if isinstance(cube, FeatureCube):
            if cube.values.shape != shape or cube.selected != selected:
                raise ShapeMismatch("cubes differ in shape or parameter selection")
            labels.append(cube.meta.class_label)
        else:
            if np.asarray(cube).shape != shape:
                raise ShapeMismatch("cubes differ in shape")
            labels.append("?")
        mats.append(m)
    p = shape[2]
    if not (1 <= n_par <= p):
        raise RankDeficient(f"n_par={n_par} outside [1, P={p}]")

    # pixel axis
    avg = np.stack([m.mean(axis=1) for m in mats], axis=1)      # (D, M)
    xn, mean_pix, scale_pix = _center_scale(avg)
    u, s, _ = np.linalg.svd(xn, full_matrices=False)
    rank = _numerical_rank(s)
    if cap:
        n_pix = max(1, min(n_pix, rank))
    if not (1 <= n_pix <= rank):
        raise RankDeficient(f"n_pix={n_pix} exceeds pixel-axis rank {rank}")
    v_pix = _fix_column_signs(u[:, :n_pix])

    # parameter axis, on the pixel-projected data
    projected = [v_pix.T @ ((m - mean_pix[:, None]) / scale_pix[:, None]) for m in mats]
    z = np.concatenate([y.T for y in projected], axis=1)        # (P, M * n_pix)
    zn, mean_par, scale_par = _center_scale(z)
    up, sp, _ = np.linalg.svd(zn, full_matrices=False)
    rank_p = _numerical_rank(sp)
    if cap:
        n_par = max(1, min(n_par, rank_p))
    if n_par > rank_p:
        raise RankDeficient(f"n_par={n_par} exceeds parameter-axis rank {rank_p}")
    v_par = _fix_column_signs(up[:, :n_par])

    reduced = []
    for y in projected:
        w = (y.T - mean_par[:, None]) / scale_par[:, None]      # (P, n_pix)
        reduced.append((v_par.T @ w).T)                         # (n_pix, n_par)
    return MdPcannModel(v_pix=v_pix, v_par=v_par, reduced_db=tuple(reduced),
                        labels=tuple(labels), classes=tuple(sorted(set(labels))),
                        mean_pix=mean_pix, scale_pix=scale_pix,
                        mean_par=mean_par, scale_par=scale_par,
                        selected=tuple(selected), cube_shape=tuple(shape))


def md_pcann_reduce(model: MdPcannModel, cube) -> np.ndarray:
    m = _cube_matrix(cube)
    shape = cube.values.shape if isinstance(cube, FeatureCube) else np.asarray(cube).shape
    if tuple(shape) != model.cube_shape:
        raise ShapeMismatch(f"cube shape {shape} does not match training {model.cube_shape}")
    y = model.v_pix.T @ ((m - model.mean_pix[:, None]) / model.scale_pix[:, None])
    w = (y.T - model.mean_par[:, None]) / model.scale_par[:, None]
    return (model.v_par.T @ w).T


def md_pcann_classify(model: MdPcannModel, cube) -> ClassifyResult:
    """Nearest stored cube under the Frobenius distance; PCANN tie-breaks."""
    r = md_pcann_reduce(model, cube)
    dists = np.array([np.linalg.norm(r - q) for q in model.reduced_db])
    return _nn_result(model.classes, model.labels, dists)
