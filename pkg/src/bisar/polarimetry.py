"""Radar polarimetry: Stokes vectors, Kennaugh matrices and the 16
Huynen/Germond target parameters extracted per pixel from four-channel clips.

The Kennaugh matrix K is defined here by its contract: for every Jones vector
E, the un-normalized Stokes vector of S*E equals K times the un-normalized
Stokes vector of E.  K is recovered by applying S to four basis polarizations
(H, V, 45 deg linear, right circular) and solving the linear system, which is
exact because the Stokes map spans R^4 on that basis.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch, ValidationError, ZeroField
from .imaging import CHANNELS, ClipMeta, ImageClip

# Fixed parameter order: nine shared with the monostatic case, then the seven
# extra ones available when K is asymmetric.
PARAM_NAMES = ("A0", "B0", "B", "C", "D", "E", "F", "G", "H",
               "A", "I", "J", "K", "L", "M", "N")
MONOSTATIC_COUNT = 9


@dataclass(frozen=True)
class JonesVector:
    e_h: complex
    e_v: complex


@dataclass(frozen=True)
class StokesVector:
    g0: float
    g1: float
    g2: float
    g3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.g0, self.g1, self.g2, self.g3])


@dataclass(frozen=True)
class SinclairMatrix:
    s_hh: complex
    s_hv: complex
    s_vh: complex
    s_vv: complex

    def matrix(self) -> np.ndarray:
        return np.array([[self.s_hh, self.s_hv], [self.s_vh, self.s_vv]])


@dataclass(frozen=True)
class KennaughMatrix:
    k: np.ndarray   # (4, 4) real

    def __post_init__(self):
        k = np.asarray(self.k, dtype=float)
        if k.shape != (4, 4):
            raise ValidationError(f"Kennaugh matrix must be 4x4, got {k.shape}")
        if not np.all(np.isfinite(k)):
            raise ValidationError("Kennaugh matrix must be finite")
        k.setflags(write=False)
        object.__setattr__(self, "k", k)


@dataclass(frozen=True)
class HuynenGermondParams:
    """The 16 real parameters; order matches PARAM_NAMES."""

    a0: float
    b0: float
    b: float
    c: float
    d: float
    e: float
    f: float
    g: float
    h: float
    a: float
    i: float
    j: float
    k: float
    l: float
    m: float
    n: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a0, self.b0, self.b, self.c, self.d, self.e,
                         self.f, self.g, self.h, self.a, self.i, self.j,
                         self.k, self.l, self.m, self.n])

    @classmethod
    def from_array(cls, v):
        v = np.asarray(v, dtype=float)
        if v.shape != (16,):
            raise ValidationError("parameter vector must have 16 entries")
        return cls(*[float(x) for x in v])


def stokes_unnormalized(e: JonesVector) -> np.ndarray:
    """The Stokes 4-vector without normalization (linear in the coherency)."""
    eh, ev = complex(e.e_h), complex(e.e_v)
    cross = np.conj(eh) * ev
    return np.array([abs(eh) ** 2 + abs(ev) ** 2,
                     abs(eh) ** 2 - abs(ev) ** 2,
                     2.0 * cross.real,
                     2.0 * cross.imag])


def stokes_of(e: JonesVector) -> StokesVector:
    """Normalized Stokes vector (g0 = 1) of a fully polarized wave."""
    g = stokes_unnormalized(e)
    if g[0] <= 0.0:
        raise ZeroField("cannot normalize the Stokes vector of a zero field")
    g = g / g[0]
    return StokesVector(*[float(x) for x in g])


# Basis polarizations used to pin down K: H, V, 45 deg linear, right circular.
_BASIS = (JonesVector(1, 0), JonesVector(0, 1),
          JonesVector(1 / np.sqrt(2), 1 / np.sqrt(2)),
          JonesVector(1 / np.sqrt(2), 1j / np.sqrt(2)))

# Inverse of the matrix whose columns are the basis Stokes vectors
# (1,1,0,0), (1,-1,0,0), (1,0,1,0), (1,0,0,1); entries are exact in binary.
_BASIS_STOKES_INV = np.array([
    [0.5, 0.5, -0.5, -0.5],
    [0.5, -0.5, -0.5, -0.5],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
])


def kennaugh_from_sinclair(s: SinclairMatrix) -> KennaughMatrix:
    """Kennaugh matrix satisfying g(S*E) = K g(E) for un-normalized Stokes g."""
    m = s.matrix()
    cols = []
    for e in _BASIS:
        out = m @ np.array([e.e_h, e.e_v])
        cols.append(stokes_unnormalized(JonesVector(out[0], out[1])))
    g_out = np.stack(cols, axis=1)
    return KennaughMatrix(k=g_out @ _BASIS_STOKES_INV)


def params_from_kennaugh(k: KennaughMatrix) -> HuynenGermondParams:
    """Invert the Kennaugh layout; closed form, exact linear map.

    Diagonal entries give A0, B0, B, A; each off-diagonal pair gives one sum
    and one difference parameter, so a symmetric K has I..N identically zero.
    """
    return HuynenGermondParams.from_array(_params_stack(k.k))


def kennaugh_from_params(p: HuynenGermondParams) -> KennaughMatrix:
    a0, b0, b, c, d, e, f, g, h, a, i, j, kk, l, m, n = p.as_array()
    return KennaughMatrix(k=np.array([
        [a0 + b0 + a, c + i, h + n, f + l],
        [c - i, a0 + b - a, e + kk, g + m],
        [h - n, e - kk, a0 - b - a, d + j],
        [f - l, g - m, d - j, b0 - a0 - a],
    ]))


def _params_stack(k: np.ndarray) -> np.ndarray:
    """Vectorized parameter extraction; k has shape (..., 4, 4)."""
    K = np.asarray(k, dtype=float)
    out = np.empty(K.shape[:-2] + (16,))
    out[..., 0] = (K[..., 0, 0] + K[..., 1, 1] + K[..., 2, 2] - K[..., 3, 3]) / 4.0   # A0
    out[..., 1] = (K[..., 0, 0] + K[..., 3, 3]) / 2.0                                 # B0
    out[..., 2] = (K[..., 1, 1] - K[..., 2, 2]) / 2.0                                 # B
    out[..., 3] = (K[..., 0, 1] + K[..., 1, 0]) / 2.0                                 # C
    out[..., 4] = (K[..., 2, 3] + K[..., 3, 2]) / 2.0                                 # D
    out[..., 5] = (K[..., 1, 2] + K[..., 2, 1]) / 2.0                                 # E
    out[..., 6] = (K[..., 0, 3] + K[..., 3, 0]) / 2.0                                 # F
    out[..., 7] = (K[..., 1, 3] + K[..., 3, 1]) / 2.0                                 # G
    out[..., 8] = (K[..., 0, 2] + K[..., 2, 0]) / 2.0                                 # H
    out[..., 9] = (K[..., 0, 0] - K[..., 1, 1] - K[..., 2, 2] - K[..., 3, 3]) / 4.0   # A
    out[..., 10] = (K[..., 0, 1] - K[..., 1, 0]) / 2.0                                # I
    out[..., 11] = (K[..., 2, 3] - K[..., 3, 2]) / 2.0                                # J
    out[..., 12] = (K[..., 1, 2] - K[..., 2, 1]) / 2.0                                # K
    out[..., 13] = (K[..., 0, 3] - K[..., 3, 0]) / 2.0                                # L
    out[..., 14] = (K[..., 1, 3] - K[..., 3, 1]) / 2.0                                # M
    out[..., 15] = (K[..., 0, 2] - K[..., 2, 0]) / 2.0                                # N
    return out


def _stokes_cols(eh: np.ndarray, ev: np.ndarray) -> np.ndarray:
    cross = np.conj(eh) * ev
    return np.stack([np.abs(eh) ** 2 + np.abs(ev) ** 2,
                     np.abs(eh) ** 2 - np.abs(ev) ** 2,
                     2.0 * cross.real, 2.0 * cross.imag], axis=-1)


def _kennaugh_stack(shh, shv, svh, svv) -> np.ndarray:
    """Per-pixel Kennaugh matrices from channel stacks, shape (..., 4, 4)."""
    rt2 = np.sqrt(2.0)
    cols = [
        _stokes_cols(shh, svh),                                  # S applied to H
        _stokes_cols(shv, svv),                                  # S applied to V
        _stokes_cols((shh + shv) / rt2, (svh + svv) / rt2),      # 45 deg linear
        _stokes_cols((shh + 1j * shv) / rt2, (svh + 1j * svv) / rt2),  # right circular
    ]
    g_out = np.stack(cols, axis=-1)    # (..., 4 stokes, 4 basis)
    return g_out @ _BASIS_STOKES_INV


@dataclass(frozen=True)
class FeatureCube:
    """Per-pixel polarimetric parameters: values[row, col, p]."""

    values: np.ndarray
    meta: ClipMeta
    selected: tuple   # parameter indices into PARAM_NAMES, fixed order

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        sel = tuple(int(i) for i in self.selected)
        if v.ndim != 3:
            raise ValidationError(f"cube values must be 3-D, got shape {v.shape}")
        if len(sel) != v.shape[2]:
            raise ValidationError("selected parameter list must match the last axis")
        if any(i < 0 or i >= len(PARAM_NAMES) for i in sel):
            raise ValidationError("parameter indices must be in [0, 16)")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "selected", sel)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def param_count(self) -> int:
        return self.values.shape[2]

    def select(self, indices) -> "FeatureCube":
        """Sub-cube restricted to the given PARAM_NAMES indices."""
        indices = tuple(int(i) for i in indices)
        pos = []
        for i in indices:
            if i not in self.selected:
                raise ValidationError(f"parameter {PARAM_NAMES[i]} not present in cube")
            pos.append(self.selected.index(i))
        return FeatureCube(values=self.values[:, :, pos], meta=self.meta, selected=indices)


def _require_same_meta(clips):
    ref = clips[0]
    for clip, ch in zip(clips, CHANNELS):
        if clip.meta.channel != ch:
            raise ShapeMismatch(f"expected channel {ch}, got {clip.meta.channel}")
        if clip.pixels.shape != ref.pixels.shape:
            raise ShapeMismatch(f"clip dimensions differ: {clip.pixels.shape} vs {ref.pixels.shape}")
        if clip.pixel_spacing != ref.pixel_spacing:
            raise ShapeMismatch("clip pixel spacings differ")
        m, r = clip.meta, ref.meta
        if (m.class_label, m.mean_bistatic_angle, m.rx_elevation, m.rx_azimuth_center) != \
           (r.class_label, r.mean_bistatic_angle, r.rx_elevation, r.rx_azimuth_center):
            raise ShapeMismatch("clip geometry metadata differs between channels")


def feature_cube_from_clips(hh: ImageClip, hv: ImageClip, vh: ImageClip,
                            vv: ImageClip, selected=None) -> FeatureCube:
    """Per-pixel Sinclair matrix -> Kennaugh -> parameters, selected subset.

    The four complex channel amplitudes of a pixel are taken as the Sinclair
    matrix of the scattering element mapped to that pixel.
    """
    clips = (hh, hv, vh, vv)
    _require_same_meta(clips)
    if selected is None:
        selected = tuple(range(len(PARAM_NAMES)))
    selected = tuple(int(i) for i in selected)

    kmats = _kennaugh_stack(hh.pixels, hv.pixels, vh.pixels, vv.pixels)
    params = _params_stack(kmats)
    meta = ClipMeta(class_label=hh.meta.class_label, channel="POL",
                    mean_bistatic_angle=hh.meta.mean_bistatic_angle,
                    rx_elevation=hh.meta.rx_elevation,
                    rx_azimuth_center=hh.meta.rx_azimuth_center)
    return FeatureCube(values=params[:, :, list(selected)], meta=meta, selected=selected)
