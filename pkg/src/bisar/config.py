"""Run configuration: a single strict JSON object driving generation,
training and evaluation.  Unknown keys are rejected; a seed is mandatory."""

import hashlib
import json
from dataclasses import dataclass, fields

from .errors import ConfigError
from .imaging import CHANNELS, WINDOWS
from .polarimetry import PARAM_NAMES

_TABLE_AZIMUTHS = (0.0, 60.0, 120.0, 180.0, 240.0, 300.0)


@dataclass(frozen=True)
class RunConfig:
    seed: int
    targets: tuple = ("mbt", "apc", "str", "msl")
    center_hz: float = 1.0e9
    bandwidth_hz: float = 450.0e6
    frequency_count: int = 48
    tx_elevations_deg: tuple = (10.0, 15.0)
    tx_azimuths_deg: tuple = _TABLE_AZIMUTHS
    poses_per_clip: int = 64
    arc_width_deg: float = 20.0
    # Receiver-center offsets from the transmitter azimuth; one pose cluster
    # per offset, 0 means a monostatic (paired tx/rx) sweep.  Signs are chosen
    # so the bisector-aligned transmitter picks keep all clusters near one
    # target aspect (see dataset._aligned_tx_azimuth).
    rx_offsets_deg: tuple = (0.0, 50.0, -70.0, -86.0, -97.0)
    max_bistatic_deg: float = 110.0
    clip_size: int = 64
    window: str = "none"
    noise_snr_db: float = None
    clips_per_class: int = 60
    pose_jitter_deg: float = 0.003
    classifier: str = "pcann"
    n_components: int = 20
    cgbc_bin_width_deg: float = 10.0
    angle_bins_deg: tuple = ((0.0, 60.0), (60.0, 80.0), (80.0, 100.0))
    equal_support: bool = False
    channels: tuple = ("HH",)
    polar_params: tuple = None
    train_elevation_deg: float = 10.0
    test_elevation_deg: float = 15.0

    def __post_init__(self):
        def fail(msg):
            raise ConfigError(msg)

        if not isinstance(self.seed, int):
            fail("'seed' must be an integer (reproducibility is mandatory)")
        for name in ("center_hz", "bandwidth_hz", "arc_width_deg", "cgbc_bin_width_deg"):
            if not (float(getattr(self, name)) > 0):
                fail(f"'{name}' must be positive")
        if self.frequency_count < 2:
            fail("'frequency_count' must be at least 2")
        if self.poses_per_clip < 1:
            fail("'poses_per_clip' must be at least 1")
        if not self.targets:
            fail("'targets' must list at least one target")
        n = self.clip_size
        if n < 8 or n > 256 or (n & (n - 1)) != 0:
            fail("'clip_size' must be a power of two in [8, 256]")
        if self.window not in WINDOWS:
            fail(f"'window' must be one of {list(WINDOWS)}")
        if not (0.0 < self.max_bistatic_deg < 180.0):
            fail("'max_bistatic_deg' must be in (0, 180)")
        if not self.rx_offsets_deg:
            fail("'rx_offsets_deg' must be nonempty")
        worst = max(abs(o) for o in self.rx_offsets_deg) \
            + self.arc_width_deg / 2.0 + self.pose_jitter_deg
        if worst > self.max_bistatic_deg:
            fail(f"receiver offsets reach {worst:.1f} deg of azimuth separation, "
                 f"beyond 'max_bistatic_deg'={self.max_bistatic_deg}")
        if self.clips_per_class < len(self.rx_offsets_deg):
            fail("'clips_per_class' must cover every receiver offset at least once")
        if self.pose_jitter_deg < 0:
            fail("'pose_jitter_deg' must be >= 0")
        if self.noise_snr_db is not None and not isinstance(self.noise_snr_db, (int, float)):
            fail("'noise_snr_db' must be a number or null")
        if self.classifier not in ("pcann", "cgbc"):
            fail("'classifier' must be 'pcann' or 'cgbc'")
        if self.n_components < 1:
            fail("'n_components' must be at least 1")
        if not self.channels or any(c not in CHANNELS for c in self.channels):
            fail(f"'channels' must be a nonempty subset of {list(CHANNELS)}")
        if len(set(self.channels)) != len(self.channels):
            fail("'channels' must not repeat")
        if self.polar_params is not None:
            bad = [p for p in self.polar_params if p not in PARAM_NAMES]
            if bad:
                fail(f"unknown polarimetric parameters {bad}; valid: {list(PARAM_NAMES)}")
        if self.train_elevation_deg == self.test_elevation_deg:
            fail("'train_elevation_deg' and 'test_elevation_deg' must differ")
        for name in ("train_elevation_deg", "test_elevation_deg"):
            if float(getattr(self, name)) not in [float(e) for e in self.tx_elevations_deg]:
                fail(f"'{name}' must appear in 'tx_elevations_deg'")
        for lo, hi in self.angle_bins_deg:
            if not (0 <= lo < hi):
                fail(f"angle bin [{lo}, {hi}) is not ordered")

    def canonical_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = [list(x) if isinstance(x, tuple) else x for x in v]
            out[f.name] = v
        return out

    def config_hash(self) -> str:
        payload = json.dumps(self.canonical_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()


def _tupled(value):
    if isinstance(value, list):
        return tuple(_tupled(v) for v in value)
    return value


def config_from_dict(obj: dict) -> RunConfig:
    if not isinstance(obj, dict):
        raise ConfigError("configuration must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "seed" not in obj:
        raise ConfigError("missing required config key 'seed'")
    kwargs = {k: _tupled(v) for k, v in obj.items()}
    try:
        return RunConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}")
    return config_from_dict(obj)
