"""On-disk formats: clip and feature-cube binaries, model containers,
dataset manifests and the CSV/JSON report emitters.

Clip file (little-endian): magic "BSAR", u32 version=1, u32 rows, u32 cols,
f64 pixel_spacing, f64 mean_bistatic_angle, f64 rx_elevation,
f64 rx_azimuth_center, u8 channel code (0..3 = HH,HV,VH,VV), u8 class id,
6 reserved zero bytes, then rows*cols interleaved float32 (re, im) pairs in
row-major order.  A feature cube inserts u32 P after cols, uses channel code
255 and stores rows*cols*P float32 values (parameter index fastest).  The two
layouts are told apart by the file size and the channel byte.

Model container: magic "BATM", u32 version=1, u8 model kind, 32-byte config
hash of the training dataset, then dimension-prefixed f64 arrays in the field
order written below.
"""

import json
import os
import struct

import numpy as np

from . import __version__
from .classify import CgbcModel, GaussianTemplate, MdPcannModel, PcannModel
from .config import RunConfig, config_from_dict
from .errors import IoError, ParseError, ValidationError
from .evaluation import ConfusionMatrix, ExperimentReport, RocCurve
from .imaging import CHANNELS, ClipMeta, ImageClip
from .polarimetry import FeatureCube

CLIP_MAGIC = b"BSAR"
MODEL_MAGIC = b"BATM"
FORMAT_VERSION = 1
CUBE_CHANNEL_CODE = 255

_CLIP_HEADER = struct.Struct("<4sIII4dBB6s")
_CUBE_HEADER = struct.Struct("<4sIIII4dBB6s")

_MODEL_KINDS = {PcannModel: 0, CgbcModel: 1, MdPcannModel: 2}


# ---------------------------------------------------------------------------
# Clip and cube binaries

def write_clip(path, clip: ImageClip, class_id: int) -> None:
    if not (0 <= class_id < 255):
        raise ValidationError(f"class id must fit a byte, got {class_id}")
    m = clip.meta
    header = _CLIP_HEADER.pack(CLIP_MAGIC, FORMAT_VERSION,
                               clip.pixels.shape[0], clip.pixels.shape[1],
                               clip.pixel_spacing, m.mean_bistatic_angle,
                               m.rx_elevation, m.rx_azimuth_center,
                               CHANNELS.index(m.channel), class_id, b"\0" * 6)
    data = np.empty(clip.pixels.shape + (2,), dtype="<f4")
    data[..., 0] = clip.pixels.real
    data[..., 1] = clip.pixels.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def write_cube(path, cube: FeatureCube, class_id: int) -> None:
    """Persist a feature cube; only prefix selections of the fixed parameter
    order can be stored (the format records P, not arbitrary indices)."""
    if not (0 <= class_id < 255):
        raise ValidationError(f"class id must fit a byte, got {class_id}")
    p = cube.param_count
    if cube.selected != tuple(range(p)):
        raise ValidationError("only prefix parameter selections can be persisted")
    m = cube.meta
    header = _CUBE_HEADER.pack(CLIP_MAGIC, FORMAT_VERSION,
                               cube.values.shape[0], cube.values.shape[1], p,
                               0.0, m.mean_bistatic_angle,
                               m.rx_elevation, m.rx_azimuth_center,
                               CUBE_CHANNEL_CODE, class_id, b"\0" * 6)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(cube.values.astype("<f4").tobytes())


def _class_name(class_id, classes):
    if classes is not None and 0 <= class_id < len(classes):
        return classes[class_id]
    return f"class{class_id}"


def read_clip_file(path, classes=None):
    """Read a clip or cube file; returns (object, class_id)."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < 16:
        raise ParseError(f"{path}: truncated header at byte {len(buf)}")
    magic, version, rows, cols = struct.unpack_from("<4sIII", buf, 0)
    if magic != CLIP_MAGIC:
        raise ParseError(f"{path}: bad magic {magic!r} at byte 0")
    if version != FORMAT_VERSION:
        raise ParseError(f"{path}: unsupported version {version} at byte 4")

    clip_size = _CLIP_HEADER.size + rows * cols * 8
    if len(buf) == clip_size and buf[_CLIP_HEADER.size - 8] < len(CHANNELS):
        fields = _CLIP_HEADER.unpack_from(buf, 0)
        (_, _, rows, cols, spacing, beta, elev, az_center, channel, class_id, _) = fields
        if channel >= len(CHANNELS):
            raise ParseError(f"{path}: bad channel code {channel}")
        raw = np.frombuffer(buf, dtype="<f4", offset=_CLIP_HEADER.size)
        px = raw.reshape(rows, cols, 2)
        meta = ClipMeta(class_label=_class_name(class_id, classes),
                        channel=CHANNELS[channel], mean_bistatic_angle=beta,
                        rx_elevation=elev, rx_azimuth_center=az_center)
        clip = ImageClip(pixels=(px[..., 0] + 1j * px[..., 1]).astype(complex),
                         pixel_spacing=spacing, meta=meta)
        return clip, class_id

    if len(buf) < _CUBE_HEADER.size:
        raise ParseError(f"{path}: truncated at byte {len(buf)}, "
                         f"expected {clip_size} (clip) or a cube header")
    fields = _CUBE_HEADER.unpack_from(buf, 0)
    (_, _, rows, cols, p, _, beta, elev, az_center, channel, class_id, _) = fields
    cube_size = _CUBE_HEADER.size + rows * cols * p * 4
    if channel != CUBE_CHANNEL_CODE or len(buf) != cube_size:
        raise ParseError(f"{path}: expected {clip_size} bytes (clip) or "
                         f"{cube_size} (cube), got {len(buf)}")
    raw = np.frombuffer(buf, dtype="<f4", offset=_CUBE_HEADER.size)
    meta = ClipMeta(class_label=_class_name(class_id, classes), channel="POL",
                    mean_bistatic_angle=beta, rx_elevation=elev,
                    rx_azimuth_center=az_center)
    cube = FeatureCube(values=raw.reshape(rows, cols, p).astype(float),
                       meta=meta, selected=tuple(range(p)))
    return cube, class_id


# ---------------------------------------------------------------------------
# Manifest

MANIFEST_NAME = "manifest.json"


def manifest_dict(config: RunConfig, classes, clip_rows, resolution_m: float) -> dict:
    return {
        "format": "bisar-manifest",
        "version": 1,
        "tool_version": __version__,
        "config": config.canonical_dict(),
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "classes": list(classes),
        "monostatic_resolution_m": resolution_m,
        "clips": clip_rows,
    }


def write_manifest(path, manifest: dict) -> None:
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_manifest(path, strict: bool = True) -> dict:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")
    except OSError as exc:
        raise ParseError(f"{path}: {exc}")
    for key in ("format", "config", "config_hash", "clips", "classes"):
        if key not in obj:
            raise ParseError(f"{path}: missing manifest key '{key}'")
    if obj["format"] != "bisar-manifest":
        raise ParseError(f"{path}: not a bisar manifest")
    config = config_from_dict(obj["config"])
    if config.config_hash() != obj["config_hash"]:
        raise ParseError(f"{path}: config hash mismatch (edited manifest?)")
    if strict:
        base = os.path.dirname(os.path.abspath(path))
        for row in obj["clips"]:
            full = os.path.join(base, row["file"])
            if not os.path.exists(full):
                raise IoError(f"manifest lists missing file {row['file']}")
    obj["_config"] = config
    obj["_dir"] = os.path.dirname(os.path.abspath(path))
    return obj


# ---------------------------------------------------------------------------
# Model container

def _w_str(fh, s: str):
    raw = s.encode()
    fh.write(struct.pack("<I", len(raw)))
    fh.write(raw)


def _w_arr(fh, a):
    a = np.asarray(a)
    iscomplex = 1 if np.iscomplexobj(a) else 0
    fh.write(struct.pack("<BB", iscomplex, a.ndim))
    fh.write(struct.pack(f"<{a.ndim}I", *a.shape))
    if iscomplex:
        data = np.empty(a.shape + (2,))
        data[..., 0] = a.real
        data[..., 1] = a.imag
        fh.write(data.astype("<f8").tobytes())
    else:
        fh.write(a.astype("<f8").tobytes())


class _Reader:
    def __init__(self, buf, path):
        self.buf = buf
        self.off = 0
        self.path = path

    def take(self, fmt):
        try:
            out = struct.unpack_from(fmt, self.buf, self.off)
        except struct.error:
            raise ParseError(f"{self.path}: truncated at byte {self.off}")
        self.off += struct.calcsize(fmt)
        return out

    def r_str(self):
        (n,) = self.take("<I")
        raw = self.buf[self.off:self.off + n]
        if len(raw) != n:
            raise ParseError(f"{self.path}: truncated string at byte {self.off}")
        self.off += n
        return raw.decode()

    def r_arr(self):
        iscomplex, ndim = self.take("<BB")
        shape = self.take(f"<{ndim}I")
        count = int(np.prod(shape)) if ndim else 1
        width = 16 if iscomplex else 8
        raw = self.buf[self.off:self.off + count * width]
        if len(raw) != count * width:
            raise ParseError(f"{self.path}: truncated array at byte {self.off}")
        self.off += count * width
        flat = np.frombuffer(raw, dtype="<f8")
        if iscomplex:
            flat = flat[0::2] + 1j * flat[1::2]
        return flat.reshape(shape).copy()


def save_model(path, model, config_hash: str = "") -> None:
    kind = _MODEL_KINDS.get(type(model))
    if kind is None:
        raise ValidationError(f"cannot persist model type {type(model).__name__}")
    hash_raw = bytes.fromhex(config_hash) if config_hash else b"\0" * 32
    if len(hash_raw) != 32:
        raise ValidationError("config hash must be 32 bytes of hex")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<IB", FORMAT_VERSION, kind))
        fh.write(hash_raw)
        if isinstance(model, PcannModel):
            fh.write(struct.pack("<BII", 0 if model.pixel_mode == "magnitude" else 1,
                                 *model.clip_shape))
            fh.write(struct.pack("<I", len(model.labels)))
            for lab in model.labels:
                _w_str(fh, lab)
            for arr in (model.mean, model.scale, model.v, model.reduced_db, model.eigvals):
                _w_arr(fh, arr)
        elif isinstance(model, CgbcModel):
            fh.write(struct.pack("<ddII", model.bin_width, model.sigma_floor,
                                 *model.clip_shape))
            fh.write(struct.pack("<I", len(model.templates)))
            for (label, bin_idx), t in sorted(model.templates.items()):
                _w_str(fh, label)
                fh.write(struct.pack("<qI", bin_idx, t.count))
                _w_arr(fh, t.mu)
                _w_arr(fh, t.sigma)
        else:
            fh.write(struct.pack("<III", *model.cube_shape))
            fh.write(struct.pack("<I", len(model.selected)))
            fh.write(struct.pack(f"<{len(model.selected)}I", *model.selected))
            fh.write(struct.pack("<I", len(model.labels)))
            for lab in model.labels:
                _w_str(fh, lab)
            for arr in (model.mean_pix, model.scale_pix, model.mean_par,
                        model.scale_par, model.v_pix, model.v_par):
                _w_arr(fh, arr)
            fh.write(struct.pack("<I", len(model.reduced_db)))
            for arr in model.reduced_db:
                _w_arr(fh, arr)


def load_model(path):
    """Returns (model, config_hash_hex)."""
    with open(path, "rb") as fh:
        buf = fh.read()
    r = _Reader(buf, path)
    (magic,) = r.take("<4s")
    if magic != MODEL_MAGIC:
        raise ParseError(f"{path}: bad magic {magic!r}")
    version, kind = r.take("<IB")
    if version != FORMAT_VERSION:
        raise ParseError(f"{path}: unsupported version {version}")
    (hash_raw,) = r.take("<32s")
    config_hash = hash_raw.hex() if hash_raw != b"\0" * 32 else ""

    if kind == 0:
        mode_flag, rows, cols = r.take("<BII")
        (nlab,) = r.take("<I")
        labels = tuple(r.r_str() for _ in range(nlab))
        mean, scale, v, reduced, eigvals = (r.r_arr() for _ in range(5))
        model = PcannModel(v=v, reduced_db=reduced, labels=labels,
                           classes=tuple(sorted(set(labels))), mean=mean.real,
                           scale=scale.real, eigvals=eigvals.real,
                           pixel_mode="magnitude" if mode_flag == 0 else "complex",
                           clip_shape=(rows, cols))
    elif kind == 1:
        bin_width, sigma_floor, rows, cols = r.take("<ddII")
        (ntpl,) = r.take("<I")
        templates = {}
        for _ in range(ntpl):
            label = r.r_str()
            bin_idx, count = r.take("<qI")
            mu = r.r_arr().real
            sigma = r.r_arr().real
            templates[(label, bin_idx)] = GaussianTemplate(mu=mu, sigma=sigma, count=count)
        classes = tuple(sorted({lab for lab, _ in templates}))
        model = CgbcModel(templates=templates, classes=classes, bin_width=bin_width,
                          sigma_floor=sigma_floor, clip_shape=(rows, cols))
    elif kind == 2:
        rows, cols, p = r.take("<III")
        (nsel,) = r.take("<I")
        selected = r.take(f"<{nsel}I")
        (nlab,) = r.take("<I")
        labels = tuple(r.r_str() for _ in range(nlab))
        mean_pix, scale_pix, mean_par, scale_par, v_pix, v_par = (r.r_arr().real for _ in range(6))
        (nred,) = r.take("<I")
        reduced = tuple(r.r_arr().real for _ in range(nred))
        model = MdPcannModel(v_pix=v_pix, v_par=v_par, reduced_db=reduced, labels=labels,
                             classes=tuple(sorted(set(labels))), mean_pix=mean_pix,
                             scale_pix=scale_pix, mean_par=mean_par, scale_par=scale_par,
                             selected=tuple(selected), cube_shape=(rows, cols, p))
    else:
        raise ParseError(f"{path}: unknown model kind {kind}")
    if r.off != len(buf):
        raise ParseError(f"{path}: {len(buf) - r.off} trailing bytes at byte {r.off}")
    return model, config_hash


# ---------------------------------------------------------------------------
# CSV / JSON reports

def _fmt(x) -> str:
    return repr(float(x))


def accuracy_csv(report: ExperimentReport, config_hash: str) -> str:
    lines = [f"# config_hash={config_hash}",
             "setting,equal_support,classifier,class,accuracy"]
    for row in report.rows:
        lines.append(f"{row.setting},{int(row.equal_support)},{row.classifier},"
                     f"{row.class_label},{_fmt(row.accuracy)}")
    return "\n".join(lines) + "\n"


def roc_csv(curve: RocCurve, config_hash: str) -> str:
    lines = [f"# config_hash={config_hash}", "target,threshold,fpr,tpr"]
    for thr, fpr, tpr in curve.points:
        t = "inf" if thr == float("inf") else _fmt(thr)
        lines.append(f"{curve.target},{t},{_fmt(fpr)},{_fmt(tpr)}")
    return "\n".join(lines) + "\n"


def confusion_csv(confusion: ConfusionMatrix, config_hash: str) -> str:
    lines = [f"# config_hash={config_hash}",
             "true_class," + ",".join(confusion.classes)]
    for i, c in enumerate(confusion.classes):
        lines.append(c + "," + ",".join(str(int(v)) for v in confusion.counts[i]))
    return "\n".join(lines) + "\n"


def summary_json(config_hash: str, seed: int, payload: dict) -> str:
    obj = {"config_hash": config_hash, "seed": seed, "tool_version": __version__}
    obj.update(payload)
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"
