"""Synthetic fisheye imagery and seven-DoF augmentation for segmentation.

Converts rectilinear urban-driving datasets into equidistant-model
fisheye images with aligned label maps, sampling the virtual rig's
focal length, rotation, and translation from reproducible seeded
policies.  Includes fixed-focal-length test-set generation, mIoU
evaluation, and a CLI (``fisheyeaug``).
"""

from ._version import __version__
from .errors import (
    ConfigError,
    DimensionMismatch,
    EmptySplit,
    FisheyeAugError,
    IncidenceOutOfRange,
    MissingLabel,
    NoDefinedClasses,
    UnknownPreset,
    ValueOutOfRange,
)
from .geometry import (
    FisheyeIntrinsics,
    PinholeIntrinsics,
    RigPose,
    WarpParams,
    fisheye_ray,
    fisheye_to_source,
    fisheye_to_source_batch,
    incidence_angle,
    max_incidence,
    pinhole_project,
    rig_transform,
    rotation_from_euler,
    source_to_fisheye,
)
from .remap import (
    RemapTable,
    apply_bilinear,
    apply_nearest,
    build_remap,
    coverage_ratio,
    load_table,
    save_table,
)
from .policy import (
    AugPolicy,
    ColorJitter,
    Range,
    SampleDecisions,
    PRESET_NAMES,
    augment_sample,
    apply_base_augs,
    load_policy,
    preset,
    sample_params,
    sample_stream,
    save_policy,
)
from .dataset import (
    DatasetManifest,
    DatasetRecord,
    encode_labels,
    generate_testset,
    load_label_encoding,
    scan_dataset,
    stream_training_samples,
    zoom_params,
)
from .metrics import (
    ConfusionMatrix,
    EvalReport,
    evaluate_testsets,
    iou_per_class,
    mean_iou,
)

__all__ = [name for name in dir() if not name.startswith("_")]
