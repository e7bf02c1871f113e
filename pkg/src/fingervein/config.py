"""Pipeline configuration: defaults, flat key=value files, validation.

The config file format is one ``key = value`` pair per line with ``#``
comments; keys match the field names below. Every tunable of every
pipeline stage lives here so a single file reproduces a run.
"""

from dataclasses import dataclass, fields

import numpy as np

from .dataset import ALL_FINGER_COMBOS, FINGERS, HANDS, SynthConfig

# Stable sub-seed roles: child seeds are derived from the master seed so
# stages stay decoupled (changing GA draws does not shift patch draws).
SEED_ROLES = {"ga": 1, "patches": 2, "init": 3, "protocol": 4, "synth": 5}


def derive_seed(master_seed, role):
    """Deterministic per-stage child seed from the master seed."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(SEED_ROLES[role],))
    return int(seq.generate_state(1)[0])


@dataclass
class PipelineConfig:
    # working image size (area-average downscale on load)
    working_height: int = 64
    working_width: int = 96
    # contrast enhancement
    enhance: bool = True
    sobel_threshold: float = 0.5
    ga_population: int = 30
    ga_generations: int = 50
    ga_crossover_rate: float = 0.8
    ga_mutation_rate: float = 0.1
    ga_mutation_sigma: float = 0.05
    ga_elitism: int = 2
    ga_tournament: int = 3
    ga_control_points: int = 8
    ga_sample_images: int = 8
    # patch sampling and whitening
    patch_side: int = 8
    patch_count: int = 100000
    retained_dim: int = 0  # 0 keeps all patch_side**2 dimensions
    whitening_epsilon: float = 0.1
    # autoencoder
    hidden_dim: int = 4000
    max_iterations: int = 700
    lbfgs_memory: int = 20
    weight_decay: float = 1e-4
    sparsity_weight: float = 3.0
    sparsity_target: float = 0.05
    # convolution + pooling
    pool_rows: int = 4
    pool_cols: int = 4
    # classifier
    shrinkage: float = 0.5
    regularizer: float = 1e-3
    threshold_kind: str = "global"
    threshold_target: str = "eer_point"
    fixed_far_value: float = 0.01
    # evaluation protocol
    n_folds: int = 10
    n_enroll: int = 3
    n_test: int = 3
    # dataset layout
    layout_pattern: str = "{subject}/{hand}/{finger}_{sample}.bmp"
    # master seed; per-stage seeds are derived from it
    seed: int = 0

    def validate(self):
        """Check every field against its consumer's preconditions.

        Raises ValueError naming the offending key.
        """
        positive_ints = (
            "working_height", "working_width", "ga_population", "ga_tournament",
            "ga_control_points", "ga_sample_images", "patch_side", "patch_count",
            "hidden_dim", "lbfgs_memory", "pool_rows", "pool_cols", "n_folds",
            "n_test",
        )
        for key in positive_ints:
            if getattr(self, key) < 1:
                raise ValueError(f"config key {key!r} must be >= 1")
        for key in ("ga_generations", "ga_elitism", "max_iterations"):
            if getattr(self, key) < 0:
                raise ValueError(f"config key {key!r} must be >= 0")
        for key in ("ga_crossover_rate", "ga_mutation_rate"):
            if not 0.0 <= getattr(self, key) <= 1.0:
                raise ValueError(f"config key {key!r} must lie in [0, 1]")
        for key in ("ga_mutation_sigma", "sobel_threshold", "whitening_epsilon",
                    "regularizer"):
            if getattr(self, key) <= 0:
                raise ValueError(f"config key {key!r} must be positive")
        for key in ("weight_decay", "sparsity_weight"):
            if getattr(self, key) < 0:
                raise ValueError(f"config key {key!r} must be >= 0")
        if not 0.0 < self.sparsity_target < 1.0:
            raise ValueError("config key 'sparsity_target' must lie in (0, 1)")
        if not 0.0 <= self.shrinkage <= 1.0:
            raise ValueError("config key 'shrinkage' must lie in [0, 1]")
        if self.ga_elitism >= self.ga_population:
            raise ValueError(
                "config key 'ga_elitism' must be smaller than 'ga_population'"
            )
        if self.retained_dim < 0 or self.retained_dim > self.patch_side**2:
            raise ValueError(
                "config key 'retained_dim' must lie in [0, patch_side**2]"
            )
        if self.patch_side > min(self.working_height, self.working_width):
            raise ValueError(
                "config key 'patch_side' exceeds the working image size"
            )
        if self.threshold_kind not in ("global", "per_user"):
            raise ValueError(
                "config key 'threshold_kind' must be 'global' or 'per_user'"
            )
        if self.threshold_target not in ("eer_point", "fixed_far"):
            raise ValueError(
                "config key 'threshold_target' must be 'eer_point' or 'fixed_far'"
            )
        if self.threshold_target == "fixed_far" and not 0.0 < self.fixed_far_value < 1.0:
            raise ValueError("config key 'fixed_far_value' must lie in (0, 1)")
        if self.n_enroll < 2:
            raise ValueError("config key 'n_enroll' must be >= 2")
        for token in ("{subject}", "{hand}", "{finger}", "{sample}"):
            if token not in self.layout_pattern:
                raise ValueError(
                    f"config key 'layout_pattern' is missing the {token} placeholder"
                )
        return self

    def effective_retained_dim(self):
        return self.patch_side**2 if self.retained_dim == 0 else self.retained_dim

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _parse_value(text, target_type, key):
    text = text.strip()
    try:
        if target_type is bool:
            lowered = text.lower()
            if lowered in ("true", "1", "yes", "on"):
                return True
            if lowered in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if target_type is int:
            return int(text)
        if target_type is float:
            return float(text)
        return text
    except ValueError as exc:
        raise ValueError(f"config key {key!r}: {exc}") from None


def _parse_lines(text, path_label):
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(
                f"{path_label}:{lineno}: expected 'key = value', got {raw!r}"
            )
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()
    return pairs


def parse_config(text, base=None, path_label="<config>"):
    """Overlay key=value text onto ``base`` (defaults when omitted)."""
    config = PipelineConfig(**(base.to_dict() if base is not None else {}))
    types = {f.name: f.type for f in fields(PipelineConfig)}
    for key, value in _parse_lines(text, path_label).items():
        if key not in types:
            raise ValueError(f"unknown config key {key!r}")
        setattr(config, key, _parse_value(value, types[key], key))
    return config.validate()


def load_config(path, base=None):
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config(handle.read(), base=base, path_label=str(path))


def format_config(config):
    """Render a config as reloadable key=value text."""
    lines = ["# fingervein pipeline configuration"]
    for f in fields(PipelineConfig):
        value = getattr(config, f.name)
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


_SYNTH_KEYS = {
    "subjects": int,
    "samples_per_subject": int,
    "image_height": int,
    "image_width": int,
    "vein_count_min": int,
    "vein_count_max": int,
    "vein_width_min": float,
    "vein_width_max": float,
    "noise_sigma": float,
    "deformation_sigma": float,
    "combos": str,
    "seed": int,
}


def _parse_combos(text):
    if text.strip().lower() == "all":
        return ALL_FINGER_COMBOS
    combos = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        hand, _, finger = item.partition("-")
        if hand not in HANDS or finger not in FINGERS:
            raise ValueError(
                f"config key 'combos': bad entry {item!r}; expected "
                "hand-finger like 'right-index' or 'all'"
            )
        combos.append((hand, finger))
    if not combos:
        raise ValueError("config key 'combos' must list at least one entry")
    return tuple(combos)


def parse_synth_config(text, path_label="<synth-config>"):
    """Parse generator settings from flat key=value text."""
    kwargs = {}
    for key, value in _parse_lines(text, path_label).items():
        if key not in _SYNTH_KEYS:
            raise ValueError(f"unknown synth config key {key!r}")
        if key == "combos":
            kwargs[key] = _parse_combos(value)
        else:
            kwargs[key] = _parse_value(value, _SYNTH_KEYS[key], key)
    try:
        return SynthConfig(**kwargs)
    except ValueError as exc:
        raise ValueError(f"invalid synth config: {exc}") from None


def load_synth_config(path):
    with open(path, "r", encoding="utf-8") as handle:
        return parse_synth_config(handle.read(), path_label=str(path))
