"""Bistatic SAR target-recognition sandbox.

Simulates bistatic phase histories for point-scatterer targets, forms SAR
image clips from k-space patches, extracts per-pixel polarimetric parameters,
and runs two classifiers (per-pixel Gaussian templates and PCA nearest
neighbour) through a reproducible experiment harness.
"""

__version__ = "0.1.0"

from .classify import (CgbcModel, ClassifyResult, MdPcannModel, ObservationMatrix,
                       PcannModel, build_observation_matrix, cgbc_classify,
                       cgbc_score, cgbc_train, md_pcann_classify, md_pcann_train,
                       pcann_classify, pcann_train, svd_scatter_decompose,
                       two_dim_pca_reduce, variance_fraction)
from .config import RunConfig, config_from_dict, load_config
from .dataset import GeneratedDataset
from .evaluation import (ConfusionMatrix, ExperimentReport, LabeledDataset, RocCurve,
                         angle_binned_experiment, evaluate_confusion,
                         polarimetric_ablation, roc_curve, roc_curves,
                         split_train_test)
from .imaging import (CHANNELS, FrequencySweep, ImageClip, KSpacePatch,
                      KSpaceSample, add_noise, collect_patch, equalize_support,
                      form_clip, mainlobe_width, phase_history_sample,
                      theoretical_resolution)
from .polarimetry import (PARAM_NAMES, FeatureCube, HuynenGermondParams,
                          JonesVector, KennaughMatrix, SinclairMatrix,
                          StokesVector, feature_cube_from_clips,
                          kennaugh_from_params, kennaugh_from_sinclair,
                          params_from_kennaugh, stokes_of)
from .scene import (CollectionGeometry, Scatterer, SensorPose, TargetModel,
                    bisector_direction, bistatic_angle, builtin_targets,
                    load_target, save_target)
