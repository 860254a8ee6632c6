"""Scene description: point-scatterer targets and bistatic collection geometry.

Targets are modelled as a handful of dominant scattering centres, each with a
position, a reflectivity amplitude and a 2x2 complex Sinclair matrix.  Sensors
sit in the far field on a scene-centered sphere (z up, azimuth from +x).
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometry, ParseError, ValidationError

# Far-field default: ~100 x the extent of a 10 m class vehicle.
DEFAULT_RANGE_M = 1000.0

# Degeneracy guard for the forward-scatter direction, in degrees.
FORWARD_SCATTER_TOL_DEG = 1e-6

# Canonical per-scatterer polarimetric responses.
SINCLAIR_TRIHEDRAL = np.eye(2, dtype=complex)
SINCLAIR_DIHEDRAL = np.diag([1.0 + 0j, -1.0 + 0j])


def sinclair_dipole(orientation_deg: float) -> np.ndarray:
    """Rank-1 dipole response for a thin wire at the given orientation."""
    t = math.radians(orientation_deg)
    ct, st = math.cos(t), math.sin(t)
    return np.array([[ct * ct, ct * st], [ct * st, st * st]], dtype=complex)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Scatterer:
    """One scattering centre: position (m), amplitude and Sinclair matrix."""

    position: np.ndarray     # (3,) scene-centered, z up
    amplitude: float
    sinclair: np.ndarray     # (2, 2) complex, rows = received H/V, cols = transmitted H/V

    def __post_init__(self):
        pos = _readonly(np.asarray(self.position, dtype=float))
        sin = _readonly(np.asarray(self.sinclair, dtype=complex))
        if pos.shape != (3,):
            raise ValidationError(f"scatterer position must be a 3-vector, got shape {pos.shape}")
        if not np.all(np.isfinite(pos)):
            raise ValidationError("scatterer position must be finite")
        if sin.shape != (2, 2):
            raise ValidationError(f"sinclair matrix must be 2x2, got shape {sin.shape}")
        if not np.all(np.isfinite(sin.view(float))):
            raise ValidationError("sinclair matrix must be finite")
        if not (self.amplitude >= 0.0):
            raise ValidationError(f"scatterer amplitude must be >= 0, got {self.amplitude}")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "sinclair", sin)

    def __eq__(self, other):
        if not isinstance(other, Scatterer):
            return NotImplemented
        return (
            np.array_equal(self.position, other.position)
            and self.amplitude == other.amplitude
            and np.array_equal(self.sinclair, other.sinclair)
        )


@dataclass(frozen=True)
class TargetModel:
    """A named target: ordered scattering centres plus a bounding radius."""

    name: str
    scatterers: tuple
    extent: float = 0.0      # meters; derived from the layout when left at 0

    def __post_init__(self):
        scat = tuple(self.scatterers)
        if len(scat) < 1:
            raise ValidationError("target needs at least one scatterer")
        if not all(isinstance(s, Scatterer) for s in scat):
            raise ValidationError("scatterers must be Scatterer instances")
        radius = max(float(np.linalg.norm(s.position)) for s in scat)
        extent = float(self.extent) if self.extent else radius
        if extent + 1e-12 < radius:
            raise ValidationError(
                f"target '{self.name}': scatterer at radius {radius:.3f} m exceeds extent {extent:.3f} m"
            )
        object.__setattr__(self, "scatterers", scat)
        object.__setattr__(self, "extent", extent)

    def positions(self) -> np.ndarray:
        return np.array([s.position for s in self.scatterers])

    def amplitudes(self) -> np.ndarray:
        return np.array([s.amplitude for s in self.scatterers])

    def sinclair_stack(self) -> np.ndarray:
        return np.array([s.sinclair for s in self.scatterers])

    def __eq__(self, other):
        if not isinstance(other, TargetModel):
            return NotImplemented
        return (
            self.name == other.name
            and self.extent == other.extent
            and self.scatterers == other.scatterers
        )


@dataclass(frozen=True)
class SensorPose:
    """Sensor placement: elevation/azimuth in degrees, range in meters."""

    elevation: float
    azimuth: float
    range: float = DEFAULT_RANGE_M

    def __post_init__(self):
        if not (0.0 <= self.elevation < 90.0):
            raise ValidationError(f"elevation must be in [0, 90), got {self.elevation}")
        if not (self.range > 0.0):
            raise ValidationError(f"range must be positive, got {self.range}")
        object.__setattr__(self, "elevation", float(self.elevation))
        object.__setattr__(self, "azimuth", float(self.azimuth) % 360.0)
        object.__setattr__(self, "range", float(self.range))

    @property
    def unit_vector(self) -> np.ndarray:
        """Line of sight from scene center toward the sensor (unit norm)."""
        e = math.radians(self.elevation)
        a = math.radians(self.azimuth)
        return np.array([math.cos(e) * math.cos(a), math.cos(e) * math.sin(a), math.sin(e)])

    @property
    def position(self) -> np.ndarray:
        return self.range * self.unit_vector


@dataclass(frozen=True)
class CollectionGeometry:
    """One transmitter/receiver pose pair."""

    tx: SensorPose
    rx: SensorPose


def bistatic_angle(g: CollectionGeometry) -> float:
    """Angle in degrees subtended at the scene center by the two lines of sight.

    atan2 of the cross/dot pair is exact at zero separation and keeps full
    precision near both ends of the range, unlike acos of the dot product.
    """
    u, v = g.tx.unit_vector, g.rx.unit_vector
    return math.degrees(math.atan2(np.linalg.norm(np.cross(u, v)), float(np.dot(u, v))))


def bisector_direction(g: CollectionGeometry) -> np.ndarray:
    """Unit vector along u_tx + u_rx; undefined in the forward-scatter limit."""
    beta = bistatic_angle(g)
    if beta >= 180.0 - FORWARD_SCATTER_TOL_DEG:
        raise DegenerateGeometry(f"bisector undefined at bistatic angle {beta:.6f} deg")
    s = g.tx.unit_vector + g.rx.unit_vector
    return s / np.linalg.norm(s)


# ---------------------------------------------------------------------------
# Built-in targets
#
# Four generic vehicle layouts, fixed constants of this package.  Only gross,
# classifiable structure is modelled: hull outlines, raised clusters
# (turret / launcher), long rails.  Heights reach ~2.5 m so that elevation
# changes re-phase merged cells once resolution coarsens.  Entries are
# (x, y, z, amplitude, kind) with kind one of "tri", "di", or a dipole
# orientation in degrees.

_BUILTIN_LAYOUTS = {
    # Main battle tank: long hull, raised turret pair, forward barrel line.
    # Discriminating detail sits in tight pairs (~0.3 m ground separation,
    # 0.6-1.1 m height steps): resolved cleanly at fine resolution, but as a
    # cell coarsens the two returns interfere and the blob re-phases with
    # elevation, which is what degrades coarse-resolution recognition.
    "mbt": [
        (-3.2, -1.2, 0.3, 1.0, "tri"), (-3.2, 1.2, 0.3, 1.0, "tri"),
        (3.2, -1.2, 0.3, 1.0, "tri"), (3.2, 1.2, 0.3, 1.0, "tri"),
        (-1.6, -1.3, 0.5, 0.7, "di"), (-1.6, 1.3, 0.5, 0.7, "di"),
        (1.6, -1.3, 0.5, 0.7, "di"), (1.6, 1.3, 0.5, 0.7, "di"),
        # turret: tight pair with a tall height step
        (-0.65, -0.1, 1.0, 1.4, "tri"), (-0.86, 0.11, 2.1, 1.4, "tri"),
        # barrel: root pair plus resolvable muzzle
        (1.7, -0.05, 1.6, 1.0, 0.0), (1.94, 0.19, 1.55, 1.0, 0.0),
        (3.5, 0.0, 1.5, 1.0, 0.0),
        (-3.6, 0.0, 0.8, 0.9, "di"),
    ],
    # Armoured personnel carrier: hull close to the tank's, roof hatches at
    # the tank-turret spot (shallower height step) and a nose pair where the
    # tank carries its barrel root.
    "apc": [
        (-2.9, -1.2, 0.4, 1.0, "tri"), (-2.9, 1.2, 0.4, 1.0, "tri"),
        (2.9, -1.2, 0.4, 1.0, "tri"), (2.9, 1.2, 0.4, 1.0, "tri"),
        (-1.4, -1.3, 0.6, 0.7, "di"), (-1.4, 1.3, 0.6, 0.7, "di"),
        (1.4, -1.3, 0.6, 0.7, "di"), (1.4, 1.3, 0.6, 0.7, "di"),
        (-0.65, -0.1, 1.2, 1.4, "tri"), (-0.86, 0.11, 1.8, 1.4, "tri"),
        (2.95, -0.1, 1.0, 1.0, "tri"), (3.19, 0.14, 1.8, 1.0, "tri"),
        (-3.3, 0.0, 0.9, 0.9, "di"),
    ],
    # Stinger launcher: short chassis, canted launcher tubes as a raised
    # tight pair plus a low mount pair.
    "str": [
        (-1.8, -0.9, 0.4, 0.9, "tri"), (-1.8, 0.9, 0.4, 0.9, "tri"),
        (1.8, -0.9, 0.4, 0.9, "tri"), (1.8, 0.9, 0.4, 0.9, "tri"),
        (-1.15, -0.1, 1.4, 1.2, 60.0), (-1.36, 0.11, 2.3, 1.2, 75.0),
        (0.4, -0.12, 1.1, 0.9, "di"), (0.64, 0.12, 1.7, 0.9, "di"),
        (1.9, 0.0, 0.9, 0.7, "tri"),
        (2.3, 0.0, 0.5, 0.6, "tri"),
    ],
    # Land missile launcher: long horizontal rail dominating the return, a
    # raised tip pair at the rail end and a cab pair up front.
    "msl": [
        (-5.2, 0.0, 1.2, 1.0, 0.0), (-3.9, 0.0, 1.3, 1.0, 0.0),
        (-2.6, 0.0, 1.4, 1.0, 0.0), (-1.3, 0.0, 1.5, 1.0, 0.0),
        (0.0, 0.0, 1.6, 1.0, 0.0),
        # rail tip: tight pair, large height step
        (2.55, -0.1, 1.8, 1.1, 0.0), (2.76, 0.11, 2.8, 1.1, 0.0),
        # cab pair up front
        (4.0, -0.12, 0.6, 1.0, "di"), (4.24, 0.12, 1.4, 1.0, "di"),
        (4.7, 0.7, 1.3, 0.9, "tri"),
        (-5.0, -0.8, 0.3, 0.6, "tri"), (-5.0, 0.8, 0.3, 0.6, "tri"),
    ],
}


def _kind_matrix(kind):
    if kind == "tri":
        return SINCLAIR_TRIHEDRAL
    if kind == "di":
        return SINCLAIR_DIHEDRAL
    return sinclair_dipole(float(kind))


def builtin_targets() -> list:
    """The four built-in target models (deterministic constants)."""
    models = []
    for name, rows in _BUILTIN_LAYOUTS.items():
        scatterers = tuple(
            Scatterer(position=np.array([x, y, z]), amplitude=amp, sinclair=_kind_matrix(kind))
            for x, y, z, amp, kind in rows
        )
        models.append(TargetModel(name=name, scatterers=scatterers))
    return models


def builtin_target(name: str) -> TargetModel:
    for t in builtin_targets():
        if t.name == name:
            return t
    raise ValidationError(f"unknown builtin target '{name}'; have {sorted(_BUILTIN_LAYOUTS)}")


# ---------------------------------------------------------------------------
# Target file I/O (strict JSON schema, see README)

_TARGET_KEYS = {"name", "scatterers"}
_SCATTERER_KEYS = {"pos", "amp", "sinclair"}


def target_to_dict(t: TargetModel) -> dict:
    return {
        "name": t.name,
        "scatterers": [
            {
                "pos": [float(v) for v in s.position],
                "amp": s.amplitude,
                "sinclair": [[float(c.real), float(c.imag)] for c in s.sinclair.ravel()],
            }
            for s in t.scatterers
        ],
    }


def save_target(t: TargetModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(target_to_dict(t), fh, indent=2)
        fh.write("\n")


def target_from_dict(obj) -> TargetModel:
    if not isinstance(obj, dict):
        raise ParseError("target definition must be a JSON object")
    extra = set(obj) - _TARGET_KEYS
    if extra:
        raise ParseError(f"unknown target keys: {sorted(extra)}")
    missing = _TARGET_KEYS - set(obj)
    if missing:
        raise ParseError(f"missing target keys: {sorted(missing)}")
    if not isinstance(obj["name"], str):
        raise ParseError("target 'name' must be a string")
    if not isinstance(obj["scatterers"], list):
        raise ParseError("'scatterers' must be a list")
    scatterers = []
    for idx, row in enumerate(obj["scatterers"]):
        if not isinstance(row, dict):
            raise ParseError(f"scatterer {idx} must be an object")
        extra = set(row) - _SCATTERER_KEYS
        if extra:
            raise ParseError(f"scatterer {idx}: unknown keys {sorted(extra)}")
        missing = _SCATTERER_KEYS - set(row)
        if missing:
            raise ParseError(f"scatterer {idx}: missing keys {sorted(missing)}")
        pos = row["pos"]
        if not (isinstance(pos, list) and len(pos) == 3):
            raise ParseError(f"scatterer {idx}: 'pos' must be [x, y, z]")
        sin = row["sinclair"]
        if not (isinstance(sin, list) and len(sin) == 4
                and all(isinstance(p, list) and len(p) == 2 for p in sin)):
            raise ParseError(f"scatterer {idx}: 'sinclair' must be four [re, im] pairs")
        matrix = np.array([complex(p[0], p[1]) for p in sin]).reshape(2, 2)
        scatterers.append(Scatterer(position=np.array(pos, dtype=float),
                                    amplitude=row["amp"], sinclair=matrix))
    return TargetModel(name=obj["name"], scatterers=tuple(scatterers))


def load_target(path) -> TargetModel:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return target_from_dict(obj)
