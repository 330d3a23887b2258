"""Augmentation policies: presets, seeded sampling, and the per-sample pipeline.

Eight presets combine a base recipe (random crop + random horizontal
flip + color jitter + fixed-focal-length fisheye conversion) with three
optional randomized groups:

=========  ============================================
base       base recipe only (f fixed at 300 px)
rand_f     base + random focal length
rand_r     base + random rotation
rand_t     base + random translation
rand_fr    base + random focal length + rotation
rand_ft    base + random focal length + translation
six_dof    base + random rotation + translation
seven_dof  base + random focal length + rotation + translation
=========  ============================================

Randomized ranges: focal length [200, 400] px, rotations [-25, 25]
degrees per axis, translations x [-0.5, 0.5] / y [-0.1, 0.1] (units of
output width) / z [-0.4, 0.4] (units of pinhole focal).  Disabled groups
are degenerate ranges.  The fixed focal length 300 is the midpoint of
[200, 400].

Every scalar draws independently and uniformly from its range.  The
generator is pcg64; per-sample streams derive from
seed_sequence(seed, spawn_key=(epoch, index)), so results never depend
on data-loading order or worker count.

Geometric base augmentations run on the rectilinear source *before*
warping (translating or scaling a finished fisheye image would destroy
its distortion pattern).  Order: crop (aspect-preserving, resized back
to the source dims) -> horizontal flip -> color jitter (image only,
brightness then contrast then saturation).
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np
from PIL import Image

from .errors import ConfigError, DimensionMismatch, UnknownPreset
from .geometry import FisheyeIntrinsics, PinholeIntrinsics, RigPose, WarpParams
from .remap import apply_bilinear, apply_nearest, build_remap

GENERATOR_NAME = "pcg64"

FIXED_F = 300.0
F_RANGE = (200.0, 400.0)
ROT_RANGE = (-25.0, 25.0)
TX_RANGE = (-0.5, 0.5)
TY_RANGE = (-0.1, 0.1)
TZ_RANGE = (-0.4, 0.4)

PRESET_NAMES = (
    "base", "rand_f", "rand_r", "rand_t",
    "rand_fr", "rand_ft", "six_dof", "seven_dof",
)

# Which parameter groups each preset randomizes: f(ocal), r(otation),
# t(ranslation).
_PRESET_GROUPS = {
    "base": "",
    "rand_f": "f",
    "rand_r": "r",
    "rand_t": "t",
    "rand_fr": "fr",
    "rand_ft": "ft",
    "six_dof": "rt",
    "seven_dof": "frt",
}


@dataclass(frozen=True)
class Range:
    """Closed scalar interval; lo == hi means a fixed value."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ConfigError(f"range bounds must be finite, got [{self.lo}, {self.hi}]")
        if self.lo > self.hi:
            raise ConfigError(f"range lo {self.lo} > hi {self.hi}")

    @property
    def fixed(self) -> bool:
        return self.lo == self.hi

    def sample(self, rng: np.random.Generator) -> float:
        # Always consumes one draw so the stream layout is preset-independent.
        return float(rng.uniform(self.lo, self.hi))


@dataclass(frozen=True)
class ColorJitter:
    """Half-widths of the multiplicative jitter factors, per property."""

    brightness: float = 0.2
    contrast: float = 0.2
    saturation: float = 0.2


@dataclass(frozen=True)
class AugPolicy:
    """Ranges and toggles for one augmentation configuration."""

    f_range: Range
    rot_x_range: Range = Range(0.0, 0.0)
    rot_y_range: Range = Range(0.0, 0.0)
    rot_z_range: Range = Range(0.0, 0.0)
    t_x_range: Range = Range(0.0, 0.0)
    t_y_range: Range = Range(0.0, 0.0)
    t_z_range: Range = Range(0.0, 0.0)
    flip_prob: float = 0.5
    crop_scale: Range = Range(0.7, 1.0)
    jitter: ColorJitter = field(default_factory=ColorJitter)
    out_size: int = 640
    z1: float = 500.0

    def __post_init__(self):
        if self.f_range.lo <= 0:
            raise ConfigError(f"focal range must be positive, got {self.f_range}")
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ConfigError(f"flip_prob must be in [0, 1], got {self.flip_prob}")
        if not (0.0 < self.crop_scale.lo and self.crop_scale.hi <= 1.0):
            raise ConfigError(f"crop_scale must lie in (0, 1], got {self.crop_scale}")
        if self.out_size <= 0:
            raise ConfigError(f"out_size must be positive, got {self.out_size}")


@dataclass(frozen=True)
class SampleDecisions:
    """Everything sampled for one training example."""

    warp: WarpParams
    do_flip: bool
    crop_rect: tuple[int, int, int, int]  # x, y, w, h in source pixels
    jitter_factors: tuple[float, float, float]  # brightness, contrast, saturation


def preset(name: str) -> AugPolicy:
    """Return the policy for one of the eight named presets."""
    if name not in _PRESET_GROUPS:
        raise UnknownPreset(
            f"unknown preset {name!r}; choose one of {', '.join(PRESET_NAMES)}"
        )
    groups = _PRESET_GROUPS[name]
    f_range = Range(*F_RANGE) if "f" in groups else Range(FIXED_F, FIXED_F)
    rot = Range(*ROT_RANGE) if "r" in groups else Range(0.0, 0.0)
    policy = AugPolicy(f_range=f_range, rot_x_range=rot, rot_y_range=rot,
                       rot_z_range=rot)
    if "t" in groups:
        policy = replace(
            policy,
            t_x_range=Range(*TX_RANGE),
            t_y_range=Range(*TY_RANGE),
            t_z_range=Range(*TZ_RANGE),
        )
    return policy


def sample_stream(seed: int, epoch: int, index: int) -> np.random.Generator:
    """Independent pcg64 generator for one (seed, epoch, sample index)."""
    seq = np.random.SeedSequence(seed, spawn_key=(epoch, index))
    return np.random.Generator(np.random.PCG64(seq))


def sample_params(policy: AugPolicy, rng: np.random.Generator,
                  src_cols: int, src_rows: int) -> SampleDecisions:
    """Draw one SampleDecisions for a src_cols x src_rows source.

    Draw order is fixed (focal, rotations, translations, flip, crop,
    jitter) so a given (seed, draw index) always lands on the same
    parameter.
    """
    f_fish = policy.f_range.sample(rng)
    pose = RigPose(
        rot_x=policy.rot_x_range.sample(rng),
        rot_y=policy.rot_y_range.sample(rng),
        rot_z=policy.rot_z_range.sample(rng),
        t_x=policy.t_x_range.sample(rng),
        t_y=policy.t_y_range.sample(rng),
        t_z=policy.t_z_range.sample(rng),
    )
    do_flip = bool(rng.uniform(0.0, 1.0) < policy.flip_prob)

    scale = policy.crop_scale.sample(rng)
    cw = max(1, int(scale * src_cols + 0.5))
    ch = max(1, int(scale * src_rows + 0.5))
    cx = min(int(rng.uniform(0.0, 1.0) * (src_cols - cw + 1)), src_cols - cw)
    cy = min(int(rng.uniform(0.0, 1.0) * (src_rows - ch + 1)), src_rows - ch)

    jb = float(rng.uniform(1.0 - policy.jitter.brightness, 1.0 + policy.jitter.brightness))
    jc = float(rng.uniform(1.0 - policy.jitter.contrast, 1.0 + policy.jitter.contrast))
    js = float(rng.uniform(1.0 - policy.jitter.saturation, 1.0 + policy.jitter.saturation))

    warp = WarpParams(
        fisheye=FisheyeIntrinsics(f_fish, policy.out_size, policy.out_size),
        pinhole=PinholeIntrinsics(policy.z1, src_cols, src_rows),
        pose=pose,
    )
    return SampleDecisions(warp, do_flip, (cx, cy, cw, ch), (jb, jc, js))


def _resize(arr: np.ndarray, cols: int, rows: int, resample) -> np.ndarray:
    return np.asarray(Image.fromarray(arr).resize((cols, rows), resample))


def _luma(img: np.ndarray) -> np.ndarray:
    return 0.299 * img[..., 0] + 0.587 * img[..., 1] + 0.114 * img[..., 2]


def color_jitter(img: np.ndarray, factors: tuple[float, float, float]) -> np.ndarray:
    """Scale brightness, contrast, and saturation by the given factors.

    Unit factors return the image unchanged (bit for bit).
    """
    jb, jc, js = factors
    if factors == (1.0, 1.0, 1.0):
        return img.copy()
    x = img.astype(np.float64)
    x = x * jb
    mean = float(_luma(x).mean())
    x = mean + (x - mean) * jc
    gray = _luma(x)[..., None]
    x = gray + (x - gray) * js
    return np.clip(np.floor(x + 0.5), 0, 255).astype(np.uint8)


def apply_base_augs(img: np.ndarray, lbl: np.ndarray,
                    d: SampleDecisions) -> tuple[np.ndarray, np.ndarray]:
    """Crop, flip, and jitter the rectilinear source pair.

    Crop and flip hit both rasters identically; jitter touches only the
    image.  The output keeps the input dimensions (the crop is resized
    back), so the warp that follows sees unchanged source geometry.
    """
    if img.shape[:2] != lbl.shape[:2]:
        raise DimensionMismatch(
            f"image {img.shape[:2]} and label {lbl.shape[:2]} dims differ"
        )
    rows, cols = img.shape[:2]
    x, y, w, h = d.crop_rect
    if not (0 <= x and 0 <= y and x + w <= cols and y + h <= rows and w > 0 and h > 0):
        raise ConfigError(f"crop rect {d.crop_rect} outside {cols}x{rows} source")

    if (w, h) != (cols, rows):
        img = _resize(img[y:y + h, x:x + w], cols, rows, Image.BILINEAR)
        lbl = _resize(lbl[y:y + h, x:x + w], cols, rows, Image.NEAREST)
    if d.do_flip:
        img = np.fliplr(img)
        lbl = np.fliplr(lbl)
    img = color_jitter(np.ascontiguousarray(img), d.jitter_factors)
    return img, np.ascontiguousarray(lbl)


def augment_sample(img: np.ndarray, lbl: np.ndarray, policy: AugPolicy,
                   rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Run the full online pipeline on one source pair.

    Base augmentations first, then the sampled warp compiled against the
    source dims and applied bilinearly to the image and nearest-neighbor
    to the label.  Both outputs are out_size x out_size.
    """
    rows, cols = img.shape[:2]
    d = sample_params(policy, rng, cols, rows)
    return augment_with_decisions(img, lbl, d)


def augment_with_decisions(img: np.ndarray, lbl: np.ndarray,
                           d: SampleDecisions) -> tuple[np.ndarray, np.ndarray]:
    """Apply an already-sampled SampleDecisions to one source pair."""
    img2, lbl2 = apply_base_augs(img, lbl, d)
    table = build_remap(d.warp, d.warp.pinhole.cols, d.warp.pinhole.rows)
    return (
        apply_bilinear(table, img2, fill=(0, 0, 0)),
        apply_nearest(table, lbl2, fill_label=255),
    )


# ---------------------------------------------------------------------------
# Policy files: a [policy] section of key = value pairs covering every
# range, probability, the seed, the generator name, out_size, and z1.
# ---------------------------------------------------------------------------

_SECTION = "policy"


def save_policy(policy: AugPolicy, seed: int, path) -> None:
    """Write a policy (plus its seed) as a plain-text config file."""
    lines = [f"[{_SECTION}]", f"generator = {GENERATOR_NAME}", f"seed = {seed}"]
    lines.append(f"out_size = {policy.out_size}")
    lines.append(f"z1 = {_fmt(policy.z1)}")
    for key, rng in _range_items(policy):
        lines.append(f"{key}_min = {_fmt(rng.lo)}")
        lines.append(f"{key}_max = {_fmt(rng.hi)}")
    lines.append(f"flip_prob = {_fmt(policy.flip_prob)}")
    lines.append(f"crop_min = {_fmt(policy.crop_scale.lo)}")
    lines.append(f"crop_max = {_fmt(policy.crop_scale.hi)}")
    lines.append(f"jitter_brightness = {_fmt(policy.jitter.brightness)}")
    lines.append(f"jitter_contrast = {_fmt(policy.jitter.contrast)}")
    lines.append(f"jitter_saturation = {_fmt(policy.jitter.saturation)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_policy(path) -> tuple[AugPolicy, int]:
    """Parse a policy file; returns (policy, seed).

    Raises ConfigError on syntax errors (with line numbers), missing
    keys, or an unsupported generator name.
    """
    cp = configparser.ConfigParser()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cp.read_file(fh, source=str(path))
    except (configparser.Error, OSError) as exc:
        raise ConfigError(f"cannot parse policy file: {exc}") from exc
    if not cp.has_section(_SECTION):
        raise ConfigError(f"{path}: missing [{_SECTION}] section")
    sec = cp[_SECTION]

    generator = sec.get("generator", GENERATOR_NAME)
    if generator != GENERATOR_NAME:
        raise ConfigError(
            f"{path}: unsupported generator {generator!r} (only {GENERATOR_NAME})"
        )
    try:
        ranges = {key: Range(sec.getfloat(f"{key}_min"), sec.getfloat(f"{key}_max"))
                  for key in ("f", "rot_x", "rot_y", "rot_z", "t_x", "t_y", "t_z")}
        policy = AugPolicy(
            f_range=ranges["f"],
            rot_x_range=ranges["rot_x"],
            rot_y_range=ranges["rot_y"],
            rot_z_range=ranges["rot_z"],
            t_x_range=ranges["t_x"],
            t_y_range=ranges["t_y"],
            t_z_range=ranges["t_z"],
            flip_prob=sec.getfloat("flip_prob"),
            crop_scale=Range(sec.getfloat("crop_min"), sec.getfloat("crop_max")),
            jitter=ColorJitter(
                brightness=sec.getfloat("jitter_brightness"),
                contrast=sec.getfloat("jitter_contrast"),
                saturation=sec.getfloat("jitter_saturation"),
            ),
            out_size=sec.getint("out_size"),
            z1=sec.getfloat("z1"),
        )
        seed = sec.getint("seed", 0)
    except (TypeError, ValueError, configparser.Error) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return policy, seed


def bundled_policy_path(name: str):
    """Filesystem path of a bundled preset's policy file."""
    if name not in _PRESET_GROUPS:
        raise UnknownPreset(
            f"unknown preset {name!r}; choose one of {', '.join(PRESET_NAMES)}"
        )
    return resources.files(__package__) / "presets" / f"{name}.policy"


def _range_items(policy: AugPolicy):
    return (
        ("f", policy.f_range),
        ("rot_x", policy.rot_x_range),
        ("rot_y", policy.rot_y_range),
        ("rot_z", policy.rot_z_range),
        ("t_x", policy.t_x_range),
        ("t_y", policy.t_y_range),
        ("t_z", policy.t_z_range),
    )


def _fmt(x: float) -> str:
    return repr(float(x)) if x != int(x) else str(int(x))
