"""Deterministic dataset synthesis from a run configuration.

Every clip comes from a recipe: (target, elevation, transmitter azimuth,
receiver-center offset, jittered center).  Clips at the training elevation
form the training split, the rest the test split.  Recipes regenerate
byte-identical clips for a given (config, seed), which also lets experiments
re-form every image under a common (equalized) k-space support.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .errors import EmptyBin, ValidationError
from .imaging import (CHANNELS, ClipMeta, FrequencySweep, ImageClip, add_noise,
                      collect_patch_channels, equalize_support, form_clip)
from .polarimetry import PARAM_NAMES, feature_cube_from_clips
from .scene import (CollectionGeometry, Scatterer, SensorPose, TargetModel,
                    bistatic_angle, builtin_target, load_target)

_NOISE_TAG = 0x6E6F6973  # distinguishes noise streams from pose-jitter streams

# Patch extents depend only on geometry, so one probe target serves every recipe.
_UNIT_PROBE = TargetModel(name="probe", scatterers=(
    Scatterer(position=np.zeros(3), amplitude=1.0, sinclair=np.eye(2, dtype=complex)),))


def thread_count() -> int:
    """Parallelism cap from BISAR_THREADS (0 or unset = auto)."""
    raw = os.environ.get("BISAR_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"BISAR_THREADS must be an integer, got {raw!r}")
    if n < 0:
        raise ValidationError("BISAR_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def parallel_map(fn, items):
    """Order-preserving map, threaded when BISAR_THREADS allows."""
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class ClipRecipe:
    index: int
    class_label: str
    target_index: int
    elevation: float
    role: str              # "train" or "test"
    tx_azimuth: float
    rx_offset: float
    monostatic: bool
    rx_center: float       # jittered arc-center azimuth, degrees


def _aligned_tx_azimuth(config: RunConfig, offset: float) -> float:
    """Pick the table transmitter azimuth whose bisector direction stays
    closest to the first cluster's, so every bistatic-angle band views the
    target from about the same aspect and the k-space patches stay one
    contiguous family."""
    table = config.tx_azimuths_deg
    reference = (table[0] + config.rx_offsets_deg[0] / 2.0) % 360.0

    def misalignment(tx):
        d = ((tx + offset / 2.0) - reference) % 360.0
        return min(d, 360.0 - d)

    return float(min(table, key=misalignment))


def resolve_targets(names) -> list:
    out = []
    for name in names:
        if isinstance(name, str) and (name.endswith(".json") or os.path.sep in name):
            out.append(load_target(name))
        else:
            out.append(builtin_target(name))
    labels = [t.name for t in out]
    if len(set(labels)) != len(labels):
        raise ValidationError(f"duplicate target names in {labels}")
    return out


class GeneratedDataset:
    """Recipe-driven clip factory for one (config, seed)."""

    def __init__(self, config: RunConfig, targets, recipes):
        self.config = config
        self.targets = list(targets)
        self.recipes = tuple(recipes)
        self._geom_cache = {}

    @classmethod
    def from_config(cls, config: RunConfig) -> "GeneratedDataset":
        targets = resolve_targets(config.targets)
        recipes = []
        offsets = list(config.rx_offsets_deg)
        elevations = [(config.train_elevation_deg, "train"), (config.test_elevation_deg, "test")]
        index = 0
        for class_idx, target in enumerate(targets):
            for elev_idx, (elevation, role) in enumerate(elevations):
                # clips_per_class split as evenly as possible over the pose clusters
                base, extra = divmod(config.clips_per_class, len(offsets))
                for cluster_idx, offset in enumerate(offsets):
                    repeats = base + (1 if cluster_idx < extra else 0)
                    tx_az = _aligned_tx_azimuth(config, offset)
                    for rep in range(repeats):
                        rng = np.random.default_rng(np.random.SeedSequence(
                            entropy=config.seed,
                            spawn_key=(class_idx, elev_idx, cluster_idx, rep)))
                        jitter = rng.uniform(-config.pose_jitter_deg, config.pose_jitter_deg)
                        recipes.append(ClipRecipe(
                            index=index, class_label=target.name, target_index=class_idx,
                            elevation=float(elevation), role=role, tx_azimuth=float(tx_az),
                            rx_offset=float(offset), monostatic=(offset == 0.0),
                            rx_center=(float(tx_az) + float(offset) + float(jitter)) % 360.0))
                        index += 1
        return cls(config, targets, recipes)

    # -- geometry ------------------------------------------------------------

    def poses_for(self, recipe: ClipRecipe):
        cfg = self.config
        azimuths = np.linspace(recipe.rx_center - cfg.arc_width_deg / 2.0,
                               recipe.rx_center + cfg.arc_width_deg / 2.0,
                               cfg.poses_per_clip)
        rx = [SensorPose(elevation=recipe.elevation, azimuth=float(a)) for a in azimuths]
        if recipe.monostatic:
            return rx, rx
        tx = SensorPose(elevation=recipe.elevation, azimuth=recipe.tx_azimuth)
        return [tx] * len(rx), rx

    def sweep(self) -> FrequencySweep:
        cfg = self.config
        return FrequencySweep(center=cfg.center_hz, bandwidth=cfg.bandwidth_hz,
                              count=cfg.frequency_count)

    def _geometry_summary(self, recipe: ClipRecipe):
        """(nominal mean bistatic angle, principal patch extent), phase-free."""
        if recipe.index not in self._geom_cache:
            txs, rxs = self.poses_for(recipe)
            beta = float(np.mean([bistatic_angle(CollectionGeometry(t, r))
                                  for t, r in zip(txs, rxs)]))
            patch = collect_patch_channels(_UNIT_PROBE, txs, rxs, self.sweep(), ("HH",))["HH"]
            self._geom_cache[recipe.index] = (beta, patch.principal_extent())
        return self._geom_cache[recipe.index]

    def nominal_beta(self, recipe: ClipRecipe) -> float:
        return self._geometry_summary(recipe)[0]

    def patch_extent(self, recipe: ClipRecipe) -> float:
        return self._geometry_summary(recipe)[1]

    def min_patch_extent(self, beta_lo: float, beta_hi: float) -> float:
        """Smallest patch extent among clips whose nominal angle falls in the bin."""
        extents = [self.patch_extent(r) for r in self.recipes
                   if beta_lo <= self.nominal_beta(r) < beta_hi]
        if not extents:
            raise EmptyBin(f"no clips with bistatic angle in [{beta_lo}, {beta_hi})")
        return float(min(extents))

    # -- materialization -----------------------------------------------------

    def _patches(self, recipe: ClipRecipe, channels):
        txs, rxs = self.poses_for(recipe)
        target = self.targets[recipe.target_index]
        patches = collect_patch_channels(target, txs, rxs, self.sweep(), channels)
        if self.config.noise_snr_db is not None:
            for ch in channels:
                rng = np.random.default_rng(np.random.SeedSequence(
                    entropy=self.config.seed,
                    spawn_key=(_NOISE_TAG, recipe.index, CHANNELS.index(ch))))
                patches[ch] = add_noise(patches[ch], self.config.noise_snr_db, rng)
        return patches

    def clip_for(self, recipe: ClipRecipe, channels=None, reference_extent=None):
        """Form clips for one recipe; returns {channel: ImageClip}.

        The clip keeps the collection's nominal mean bistatic angle even when
        support trimming drops samples: the angle describes the collection,
        not the post-processing.
        """
        cfg = self.config
        channels = tuple(channels or cfg.channels)
        patches = self._patches(recipe, channels)
        out = {}
        for ch in channels:
            patch = patches[ch]
            beta = patch.mean_bistatic_angle
            if reference_extent is not None:
                patch = equalize_support(patch, reference_extent)
            clip = form_clip(patch, cfg.clip_size, cfg.window)
            meta = ClipMeta(class_label=clip.meta.class_label, channel=ch,
                            mean_bistatic_angle=beta,
                            rx_elevation=clip.meta.rx_elevation,
                            rx_azimuth_center=clip.meta.rx_azimuth_center)
            out[ch] = ImageClip(pixels=clip.pixels, pixel_spacing=clip.pixel_spacing, meta=meta)
        return out

    def materialize(self, channels=None, reference_extent=None):
        """All clips, ordered by recipe index: list of (recipe, {channel: clip})."""
        def job(recipe):
            return recipe, self.clip_for(recipe, channels, reference_extent)
        return parallel_map(job, self.recipes)

    def split_clips(self, channel=None, reference_extent=None):
        """(train, test) lists of single-channel clips."""
        channel = channel or self.config.channels[0]
        rows = self.materialize((channel,), reference_extent)
        train = [clips[channel] for r, clips in rows if r.role == "train"]
        test = [clips[channel] for r, clips in rows if r.role == "test"]
        return train, test

    def split_cubes(self, reference_extent=None, selected=None):
        """(train, test) lists of 16-parameter feature cubes (all channels)."""
        rows = self.materialize(CHANNELS, reference_extent)
        if selected is None:
            selected = tuple(range(len(PARAM_NAMES)))
        train, test = [], []
        for r, clips in rows:
            cube = feature_cube_from_clips(clips["HH"], clips["HV"], clips["VH"],
                                           clips["VV"], selected)
            (train if r.role == "train" else test).append(cube)
        return train, test
