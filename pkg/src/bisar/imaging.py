"""Bistatic phase-history simulation, k-space patches and SAR clip formation.

Each (transmitter, receiver, frequency) measurement samples one point of the
scene's spatial-frequency (k) space at

    k = (2*pi*f/c) * (u_tx + u_rx)            (ground-plane projection kept)

after motion compensation to the scene center.  A clip is the inverse 2-D DFT
of the samples binned onto a uniform n x n grid centered at the k centroid.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometry, EmptySupport, ValidationError
from .scene import (CollectionGeometry, SensorPose, TargetModel,
                    bistatic_angle, bisector_direction)

SPEED_OF_LIGHT = 299_792_458.0  # m/s, exact

CHANNELS = ("HH", "HV", "VH", "VV")
_CHANNEL_INDEX = {"HH": (0, 0), "HV": (0, 1), "VH": (1, 0), "VV": (1, 1)}

WINDOWS = ("none", "cosine")


@dataclass(frozen=True)
class FrequencySweep:
    """Uniformly spaced transmit frequencies."""

    center: float      # Hz
    bandwidth: float   # Hz
    count: int

    def __post_init__(self):
        if not (self.center > 0 and self.bandwidth > 0):
            raise ValidationError("center and bandwidth must be positive")
        if not (self.bandwidth < 2.0 * self.center):
            raise ValidationError("bandwidth must keep all frequencies positive")
        if self.count < 2:
            raise ValidationError("need at least 2 frequency samples")

    def frequencies(self) -> np.ndarray:
        return np.linspace(self.center - self.bandwidth / 2.0,
                           self.center + self.bandwidth / 2.0, self.count)


@dataclass(frozen=True)
class KSpaceSample:
    """One motion-compensated phase-history sample."""

    kvec: np.ndarray          # (2,) rad/m, ground-plane
    value: complex
    geometry: CollectionGeometry
    frequency: float
    channel: str


@dataclass(frozen=True)
class ClipMeta:
    class_label: str
    channel: str
    mean_bistatic_angle: float
    rx_elevation: float
    rx_azimuth_center: float


class KSpacePatch:
    """A set of k-space samples sharing one polarization channel.

    Samples are stored as flat arrays (pose-major, frequency-minor order);
    ``samples`` materializes them as :class:`KSpaceSample` objects on demand.
    """

    def __init__(self, kvecs, values, frequencies, pose_index, geometries,
                 pose_betas, channel, class_label, rx_elevation, rx_azimuth_center):
        kvecs = np.asarray(kvecs, dtype=float)
        values = np.asarray(values, dtype=complex)
        if kvecs.ndim != 2 or kvecs.shape[1] != 2 or kvecs.shape[0] == 0:
            raise ValidationError("kvecs must be a nonempty (S, 2) array")
        if values.shape != (kvecs.shape[0],):
            raise ValidationError("values must match kvecs in length")
        if channel not in CHANNELS:
            raise ValidationError(f"channel must be one of {CHANNELS}")
        kmax = 2.0 * (2.0 * math.pi * np.asarray(frequencies, dtype=float) / SPEED_OF_LIGHT)
        if np.any(np.linalg.norm(kvecs, axis=1) > kmax * (1 + 1e-9)):
            raise ValidationError("k-vector magnitude exceeds 2*(2*pi*f/c)")
        self.kvecs = kvecs
        self.values = values
        self.frequencies = np.asarray(frequencies, dtype=float)
        self.pose_index = np.asarray(pose_index, dtype=int)
        self.geometries = tuple(geometries)
        self.pose_betas = np.asarray(pose_betas, dtype=float)
        self.channel = channel
        self.class_label = class_label
        self.rx_elevation = float(rx_elevation)
        self.rx_azimuth_center = float(rx_azimuth_center)

    def __len__(self):
        return self.kvecs.shape[0]

    @property
    def mean_bistatic_angle(self) -> float:
        """Mean bistatic angle over the poses still referenced by samples."""
        return float(np.mean(self.pose_betas[np.unique(self.pose_index)]))

    @property
    def samples(self):
        return [
            KSpaceSample(kvec=self.kvecs[i], value=complex(self.values[i]),
                         geometry=self.geometries[self.pose_index[i]],
                         frequency=float(self.frequencies[i]), channel=self.channel)
            for i in range(len(self))
        ]

    def principal_frame(self):
        """Rotation angle (rad) of the range axis: direction of the k centroid."""
        kc = self.kvecs.mean(axis=0)
        if np.hypot(kc[0], kc[1]) < 1e-12:
            return 0.0
        return math.atan2(kc[1], kc[0])

    def principal_spans(self) -> np.ndarray:
        """(range, cross-range) k-extents measured in the principal frame."""
        psi = self.principal_frame()
        kc = self.kvecs.mean(axis=0)
        d = self.kvecs - kc
        cs, sn = math.cos(psi), math.sin(psi)
        du = cs * d[:, 0] + sn * d[:, 1]
        dv = -sn * d[:, 0] + cs * d[:, 1]
        return np.array([du.max() - du.min(), dv.max() - dv.min()])

    def principal_extent(self) -> float:
        return float(self.principal_spans().max())

    def _replaced(self, mask):
        return KSpacePatch(
            kvecs=self.kvecs[mask], values=self.values[mask],
            frequencies=self.frequencies[mask], pose_index=self.pose_index[mask],
            geometries=self.geometries, pose_betas=self.pose_betas,
            channel=self.channel, class_label=self.class_label,
            rx_elevation=self.rx_elevation, rx_azimuth_center=self.rx_azimuth_center)

    def with_values(self, values):
        return KSpacePatch(
            kvecs=self.kvecs, values=values, frequencies=self.frequencies,
            pose_index=self.pose_index, geometries=self.geometries,
            pose_betas=self.pose_betas, channel=self.channel,
            class_label=self.class_label, rx_elevation=self.rx_elevation,
            rx_azimuth_center=self.rx_azimuth_center)


@dataclass(frozen=True)
class ImageClip:
    """Complex n x n SAR image of one target, scene center at (n/2, n/2)."""

    pixels: np.ndarray
    pixel_spacing: float   # meters
    meta: ClipMeta

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=complex)
        if px.ndim != 2 or px.shape[0] != px.shape[1]:
            raise ValidationError(f"clip pixels must be square, got {px.shape}")
        if px.shape[0] < 8:
            raise ValidationError(f"clip must be at least 8x8, got {px.shape}")
        if not np.all(np.isfinite(px.view(float))):
            raise ValidationError("clip pixels must be finite")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def n(self) -> int:
        return self.pixels.shape[0]

    def energy(self) -> float:
        return float(np.sum(np.abs(self.pixels) ** 2))


# ---------------------------------------------------------------------------
# Phase-history simulation

def _sensor_delta_ranges(positions, sensor_xyz):
    """Scatterer-to-sensor range minus scene-center-to-sensor range, (G, P).

    Computed as (|r|^2 - 2 p.r) / (|p - r| + |p|), which is exact algebra but
    avoids the catastrophic cancellation of |p - r| - |p| at far-field ranges
    (the difference is meters while the ranges are kilometers or more).
    """
    diff = sensor_xyz[:, None, :] - positions[None, :, :]
    sensor_range = np.linalg.norm(sensor_xyz, axis=1)[:, None]
    num = (positions ** 2).sum(axis=1)[None, :] - 2.0 * (sensor_xyz @ positions.T)
    return num / (np.linalg.norm(diff, axis=2) + sensor_range)


def _channel_weights(target: TargetModel, channel: str) -> np.ndarray:
    r, c = _CHANNEL_INDEX[channel]
    return target.amplitudes() * target.sinclair_stack()[:, r, c]


def _phase_block(target, tx_xyz, rx_xyz, freqs, channels):
    """Phase-history values for every (pose, frequency), one array per channel.

    Motion compensation is referenced to the scene center, so a scatterer at
    the origin contributes its weight with zero phase at every frequency.
    """
    positions = target.positions()
    dr = _sensor_delta_ranges(positions, tx_xyz) + _sensor_delta_ranges(positions, rx_xyz)
    # (G, F, P) phase kernel; modest sizes (64 poses x 64 freqs x ~20 scatterers)
    phase = np.exp(-2j * math.pi / SPEED_OF_LIGHT * freqs[None, :, None] * dr[:, None, :])
    out = {}
    for ch in channels:
        out[ch] = phase @ _channel_weights(target, ch)
    return out


def phase_history_sample(target: TargetModel, g: CollectionGeometry,
                         frequency: float, channel: str) -> complex:
    """One motion-compensated sample: sum over scattering centres of
    amp * S[channel] * exp(-j*2*pi*f*(dR_tx + dR_rx)/c)."""
    if frequency <= 0:
        raise ValidationError("frequency must be positive")
    if channel not in CHANNELS:
        raise ValidationError(f"channel must be one of {CHANNELS}")
    block = _phase_block(target, g.tx.position[None, :], g.rx.position[None, :],
                         np.array([float(frequency)]), (channel,))
    return complex(block[channel][0, 0])


def _as_pose_list(tx, count):
    if isinstance(tx, SensorPose):
        return [tx] * count
    txs = list(tx)
    if len(txs) != count:
        raise ValidationError(f"need one tx pose or {count}, got {len(txs)}")
    return txs


def collect_patch(target: TargetModel, tx, rx_sweep, sweep: FrequencySweep,
                  channel: str) -> KSpacePatch:
    """Collect one k-space patch over receiver poses and the frequency sweep.

    ``tx`` is a single pose (fixed transmitter) or one pose per receiver pose
    (moving transmitter; pass the receiver list itself for a monostatic run).
    """
    patches = collect_patch_channels(target, tx, rx_sweep, sweep, (channel,))
    return patches[channel]


def collect_patch_channels(target, tx, rx_sweep, sweep, channels):
    """Same as :func:`collect_patch` for several channels sharing the geometry."""
    rx_list = list(rx_sweep)
    if not rx_list:
        raise ValidationError("receiver sweep must be nonempty")
    tx_list = _as_pose_list(tx, len(rx_list))
    for ch in channels:
        if ch not in CHANNELS:
            raise ValidationError(f"channel must be one of {CHANNELS}")

    geometries = [CollectionGeometry(t, r) for t, r in zip(tx_list, rx_list)]
    betas = np.array([bistatic_angle(g) for g in geometries])
    sums = np.stack([g.tx.unit_vector + g.rx.unit_vector for g in geometries])
    for g, beta in zip(geometries, betas):
        if beta >= 180.0 - 1e-6:
            bisector_direction(g)  # raises DegenerateGeometry

    freqs = sweep.frequencies()
    nG, nF = len(rx_list), len(freqs)
    kscale = 2.0 * math.pi * freqs / SPEED_OF_LIGHT            # (F,)
    kvecs = kscale[None, :, None] * sums[:, None, :2]          # (G, F, 2)

    tx_xyz = np.stack([p.position for p in tx_list])
    rx_xyz = np.stack([p.position for p in rx_list])
    values = _phase_block(target, tx_xyz, rx_xyz, freqs, channels)

    # circular mean of receiver azimuths
    az = np.radians([p.azimuth for p in rx_list])
    center = math.degrees(math.atan2(np.sin(az).mean(), np.cos(az).mean())) % 360.0
    rx_elev = float(np.mean([p.elevation for p in rx_list]))

    pose_index = np.repeat(np.arange(nG), nF)
    freq_flat = np.tile(freqs, nG)
    out = {}
    for ch in channels:
        out[ch] = KSpacePatch(
            kvecs=kvecs.reshape(-1, 2), values=values[ch].reshape(-1),
            frequencies=freq_flat, pose_index=pose_index, geometries=geometries,
            pose_betas=betas, channel=ch, class_label=target.name,
            rx_elevation=rx_elev, rx_azimuth_center=center)
    return out


def add_noise(patch: KSpacePatch, snr_db: float, rng: np.random.Generator) -> KSpacePatch:
    """Additive circular complex Gaussian noise at the given SNR (dB) per sample."""
    rms = math.sqrt(float(np.mean(np.abs(patch.values) ** 2)))
    sigma = rms * 10.0 ** (-snr_db / 20.0)
    noise = rng.normal(0.0, sigma / math.sqrt(2.0), size=(len(patch), 2))
    return patch.with_values(patch.values + noise[:, 0] + 1j * noise[:, 1])


# ---------------------------------------------------------------------------
# Support equalization and image formation

def equalize_support(patch: KSpacePatch, reference_extent: float) -> KSpacePatch:
    """Trim the patch to a centered square of side ``reference_extent``.

    The square is axis-aligned in the patch's principal frame (range axis
    along the k centroid direction), so collections at different bisector
    azimuths are trimmed consistently.
    """
    if not (reference_extent > 0):
        raise ValidationError("reference_extent must be positive")
    psi = patch.principal_frame()
    kc = patch.kvecs.mean(axis=0)
    d = patch.kvecs - kc
    cs, sn = math.cos(psi), math.sin(psi)
    du = cs * d[:, 0] + sn * d[:, 1]
    dv = -sn * d[:, 0] + cs * d[:, 1]
    half = reference_extent / 2.0 + 1e-9 * reference_extent
    mask = (np.abs(du) <= half) & (np.abs(dv) <= half)
    if not mask.any():
        raise EmptySupport("no k-space samples inside the reference rectangle")
    return patch._replaced(mask)


def _window_1d(n: int, kind: str) -> np.ndarray:
    if kind == "none":
        return np.ones(n)
    if kind == "cosine":
        m = (np.arange(n) - n / 2) / (n / 2)
        return 0.54 + 0.46 * np.cos(math.pi * m)
    raise ValidationError(f"window must be one of {WINDOWS}")


def form_clip(patch: KSpacePatch, n: int, window: str = "none") -> ImageClip:
    """Bin samples onto an n x n k-grid and inverse transform to an image.

    Colliding samples are averaged, empty bins stay zero.  The transform is
    normalized so that image energy equals (1/n^2) * sum |grid|^2, and the
    scene center maps to pixel (n/2, n/2).
    """
    if n < 8 or n > 256 or (n & (n - 1)) != 0:
        raise ValidationError(f"grid size must be a power of two in [8, 256], got {n}")
    if len(patch) == 0:
        raise EmptySupport("empty patch")

    kc = patch.kvecs.mean(axis=0)
    d = patch.kvecs - kc
    half = float(np.abs(d).max())
    if half <= 0.0:
        raise EmptySupport("patch has zero k-extent")
    extent = 2.0 * half * (1.0 + 1e-12)
    dk = extent / n

    ix = np.floor(d[:, 0] / dk).astype(int) + n // 2
    iy = np.floor(d[:, 1] / dk).astype(int) + n // 2
    grid = np.zeros((n, n), dtype=complex)
    counts = np.zeros((n, n), dtype=float)
    np.add.at(grid, (iy, ix), patch.values)
    np.add.at(counts, (iy, ix), 1.0)
    np.divide(grid, counts, out=grid, where=counts > 0)

    w = _window_1d(n, window)
    grid *= w[:, None] * w[None, :]

    pixels = np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(grid))) / (n * n)
    meta = ClipMeta(class_label=patch.class_label, channel=patch.channel,
                    mean_bistatic_angle=patch.mean_bistatic_angle,
                    rx_elevation=patch.rx_elevation,
                    rx_azimuth_center=patch.rx_azimuth_center)
    return ImageClip(pixels=pixels, pixel_spacing=2.0 * math.pi / extent, meta=meta)


def theoretical_resolution(bandwidth: float, beta: float) -> float:
    """Range resolution c / (2 * B * cos(beta/2)) in meters.

    Within 1e-4 deg of forward scatter the cell size blows past any usable
    value, so that region is rejected as degenerate.
    """
    if not (0.0 <= beta < 180.0):
        raise ValidationError(f"bistatic angle must be in [0, 180), got {beta}")
    if beta >= 180.0 - 1.0001e-4:
        raise DegenerateGeometry(f"resolution undefined at bistatic angle {beta}")
    return SPEED_OF_LIGHT / (2.0 * bandwidth * math.cos(math.radians(beta) / 2.0))


def mainlobe_width(clip: ImageClip, axis: int) -> float:
    """Half-power mainlobe width through the peak, in meters.

    Counts the contiguous run of pixels around the peak whose power stays
    above half the peak power, so the result is quantized to pixel_spacing.
    ``axis=0`` walks down a column (y), ``axis=1`` along a row (x).
    """
    power = np.abs(clip.pixels) ** 2
    iy, ix = np.unravel_index(int(np.argmax(power)), power.shape)
    profile = power[:, ix] if axis == 0 else power[iy, :]
    center = iy if axis == 0 else ix
    level = profile[center] / 2.0
    count = 1
    j = center + 1
    while j < profile.size and profile[j] >= level:
        count += 1
        j += 1
    j = center - 1
    while j >= 0 and profile[j] >= level:
        count += 1
        j -= 1
    return count * clip.pixel_spacing
