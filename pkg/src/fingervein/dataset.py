"""Dataset loading, the train/evaluation split, and a synthetic generator.

The on-disk layout follows the common finger-vein collection structure:
one directory per subject, one per hand, files named finger_sample. The
synthetic generator renders smooth dark ridges on a brighter background
with per-sample jitter and noise, giving a deterministic stand-in with a
real identity signal for desk-scale runs.
"""

import re
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .validation import check_image

HANDS = ("left", "right")
FINGERS = ("index", "middle", "ring")
DEFAULT_LAYOUT = "{subject}/{hand}/{finger}_{sample}.bmp"

# Default combination list mirrors a both-hands, three-finger collection.
ALL_FINGER_COMBOS = tuple((hand, finger) for hand in HANDS for finger in FINGERS)


class EmptyDatasetError(ValueError):
    """A dataset location exists but matches no sample files."""


@dataclass(frozen=True, eq=False)
class SampleRecord:
    """One capture: who, which finger, which repetition, and the pixels."""

    subject_id: str
    hand: str
    finger: str
    sample_index: int
    image: np.ndarray

    def key(self):
        return (self.subject_id, self.hand, self.finger, self.sample_index)


@dataclass(frozen=True)
class SplitPlan:
    """Disjoint feature-learning and enrollment/evaluation record lists."""

    feature_learning: tuple
    enrollment_evaluation: tuple


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the synthetic vein-image generator."""

    subjects: int = 20
    samples_per_subject: int = 6
    image_height: int = 64
    image_width: int = 96
    vein_count_min: int = 4
    vein_count_max: int = 8
    vein_width_min: float = 1.5
    vein_width_max: float = 3.5
    noise_sigma: float = 0.02
    deformation_sigma: float = 1.0
    combos: tuple = ALL_FINGER_COMBOS
    seed: int = 0

    def __post_init__(self):
        if self.subjects < 1:
            raise ValueError("subjects must be >= 1")
        if self.samples_per_subject < 1:
            raise ValueError("samples_per_subject must be >= 1")
        if self.image_height < 8 or self.image_width < 8:
            raise ValueError("image dimensions must be >= 8")
        if not 1 <= self.vein_count_min <= self.vein_count_max:
            raise ValueError("vein count range is empty or non-positive")
        if not 0 < self.vein_width_min <= self.vein_width_max:
            raise ValueError("vein width range is empty or non-positive")
        if self.noise_sigma < 0 or self.deformation_sigma < 0:
            raise ValueError("noise and deformation sigmas must be >= 0")
        for combo in self.combos:
            hand, finger = combo
            if hand not in HANDS or finger not in FINGERS:
                raise ValueError(f"invalid hand/finger combination {combo!r}")


def load_image(path):
    """Decode an 8-bit grayscale BMP/PNG to a float array in [0, 1]."""
    with Image.open(path) as img:
        if img.mode != "L":
            raise ValueError(
                f"{path}: unsupported image mode {img.mode!r}; "
                "only 8-bit grayscale is accepted"
            )
        return np.asarray(img, dtype=np.float64) / 255.0


def _pattern_to_regex(layout_pattern):
    placeholders = {
        "{subject}": r"(?P<subject>[^/\\]+)",
        "{hand}": r"(?P<hand>left|right)",
        "{finger}": r"(?P<finger>index|middle|ring)",
        "{sample}": r"(?P<sample>\d+)",
    }
    for token in placeholders:
        if token not in layout_pattern:
            raise ValueError(f"layout_pattern is missing the {token} placeholder")
    regex = ""
    token_re = re.compile(r"\{(subject|hand|finger|sample)\}")
    pos = 0
    for match in token_re.finditer(layout_pattern):
        regex += re.escape(layout_pattern[pos:match.start()])
        regex += placeholders[match.group(0)]
        pos = match.end()
    regex += re.escape(layout_pattern[pos:])
    return re.compile(regex + r"\Z")


def load_dataset(root_path, layout_pattern=DEFAULT_LAYOUT):
    """Load all records matching the layout under ``root_path``.

    Records come back sorted by (subject, hand, finger, sample) so two
    loads of the same tree are identical. Files that match the layout
    but cannot be decoded are reported with a warning, never silently
    dropped.
    """
    root = Path(root_path)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root {root} does not exist")
    matcher = _pattern_to_regex(layout_pattern)
    entries = []
    for path in root.rglob("*"):
        if not path.is_file():
            continue
        rel = path.relative_to(root).as_posix()
        match = matcher.match(rel)
        if match:
            entries.append((match.groupdict(), path))
    if not entries:
        raise EmptyDatasetError(
            f"no files under {root} match layout {layout_pattern!r}"
        )
    records = []
    for groups, path in entries:
        try:
            image = load_image(path)
            check_image(image, str(path))
        except (OSError, ValueError) as exc:
            warnings.warn(f"skipping unreadable sample {path}: {exc}")
            continue
        records.append(
            SampleRecord(
                subject_id=groups["subject"],
                hand=groups["hand"],
                finger=groups["finger"],
                sample_index=int(groups["sample"]),
                image=image,
            )
        )
    records.sort(key=SampleRecord.key)
    return records


def split_protocol(records):
    """Right-hand index fingers go to enrollment/evaluation, the rest to
    feature learning. The two sets are disjoint and exhaustive."""
    evaluation = tuple(
        r for r in records if r.hand == "right" and r.finger == "index"
    )
    learning = tuple(
        r for r in records if not (r.hand == "right" and r.finger == "index")
    )
    return SplitPlan(feature_learning=learning, enrollment_evaluation=evaluation)


def _render_veins(height, width, centers, widths, depths, background):
    """Soft dark ridges: Gaussian intensity dips around each curve point."""
    ys, xs = np.mgrid[0:height, 0:width]
    pixels = np.column_stack([xs.ravel(), ys.ravel()]).astype(np.float64)
    pixel_norms = np.sum(pixels * pixels, axis=1)
    image = np.full(height * width, background)
    for points, vein_width, depth in zip(centers, widths, depths):
        dist = pixels @ points.T
        dist *= -2.0
        dist += pixel_norms[:, None]
        dist += np.sum(points * points, axis=1)[None, :]
        d2 = np.clip(dist.min(axis=1), 0.0, None)
        sigma = vein_width / 2.0
        image = image - depth * np.exp(-d2 / (2.0 * sigma * sigma))
    return image.reshape(height, width)


def _bezier_points(p0, control, p1, n_points):
    t = np.linspace(0.0, 1.0, n_points)[:, None]
    return (1 - t) ** 2 * p0 + 2 * t * (1 - t) * control + t**2 * p1


def synthesize_dataset(config):
    """Generate records for every subject/combo/sample in the config.

    Each (subject, hand, finger) gets its own latent vein pattern shared
    by all its samples; every sample applies a small seeded rotation and
    translation plus pixel noise. Fully deterministic under the seed.
    """
    rng = np.random.default_rng(config.seed)
    h, w = config.image_height, config.image_width
    # One trace point per pixel of the longer side keeps ridge scalloping
    # below the rendering sigma.
    n_trace = max(h, w)
    records = []
    for subject in range(config.subjects):
        subject_id = f"{subject + 1:03d}"
        for hand, finger in config.combos:
            n_veins = int(rng.integers(config.vein_count_min, config.vein_count_max + 1))
            curves = []
            widths = rng.uniform(config.vein_width_min, config.vein_width_max, n_veins)
            depths = rng.uniform(0.25, 0.5, n_veins)
            background = 0.8
            for _ in range(n_veins):
                y0, y1 = rng.uniform(0.1 * h, 0.9 * h, size=2)
                p0 = np.array([0.02 * w, y0])
                p1 = np.array([0.98 * w, y1])
                control = np.array(
                    [rng.uniform(0.25 * w, 0.75 * w), (y0 + y1) / 2 + rng.normal(0, h / 5)]
                )
                curves.append(_bezier_points(p0, control, p1, n_trace))
            center = np.array([w / 2.0, h / 2.0])
            for sample in range(1, config.samples_per_subject + 1):
                shift = rng.normal(0.0, config.deformation_sigma, size=2)
                angle = np.deg2rad(rng.normal(0.0, config.deformation_sigma))
                cos_a, sin_a = np.cos(angle), np.sin(angle)
                rotation = np.array([[cos_a, -sin_a], [sin_a, cos_a]])
                moved = [
                    (points - center) @ rotation.T + center + shift
                    for points in curves
                ]
                image = _render_veins(h, w, moved, widths, depths, background)
                image = image + rng.normal(0.0, config.noise_sigma, size=(h, w))
                records.append(
                    SampleRecord(
                        subject_id=subject_id,
                        hand=hand,
                        finger=finger,
                        sample_index=sample,
                        image=np.clip(image, 0.0, 1.0),
                    )
                )
    records.sort(key=SampleRecord.key)
    return records


def export_dataset(records, out_dir, layout_pattern=DEFAULT_LAYOUT):
    """Write records as 8-bit grayscale files in the loader's layout.

    Pixels are quantized with round(p * 255); the written tree can be
    read back with :func:`load_dataset` and the same layout pattern.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    count = 0
    for record in records:
        rel = layout_pattern.format(
            subject=record.subject_id,
            hand=record.hand,
            finger=record.finger,
            sample=record.sample_index,
        )
        path = out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        pixels = np.clip(np.round(record.image * 255.0), 0, 255).astype(np.uint8)
        Image.fromarray(pixels, mode="L").save(path)
        count += 1
    return count
