"""End-to-end wiring: feature learning, enrollment, verification, evaluation.

Preprocessing order everywhere: resize to the working size, remap
through the evolved curve (pixels stay in [0, 1]), then zero-mean
normalize. Training and inference share this path, so convolution sees
exactly the pixel statistics the patches were sampled from.
"""

import time
import warnings
from dataclasses import dataclass

import numpy as np

from . import autoencoder as ae
from .classifier import OneClassGaussian, ThresholdStrategy, select_threshold
from .config import derive_seed
from .dataset import split_protocol
from .enhancement import GaConfig, apply_remap, evolve
from .features import build_feature_bank, represent
from .images import normalize_zero_mean, resize_area, sample_patches
from .bundle import ModelBundle
from .protocol import run_protocol
from .whitening import PCAWhitening


@dataclass(frozen=True)
class TrainSummary:
    """What cmd-level callers print after feature learning."""

    n_learning_images: int
    n_patches: int
    final_cost: float
    final_gradient_norm: float
    iterations_run: int
    enhancement_fitness: float
    wall_seconds: float


def prepare_image(image, config, curve=None):
    """Resize, optionally remap, then zero-mean normalize one image."""
    resized = resize_area(image, config.working_height, config.working_width)
    resized = np.clip(resized, 0.0, 1.0)
    if curve is not None:
        resized = apply_remap(resized, curve)
    return normalize_zero_mean(resized)


def _resized_unit_images(records, config):
    return [
        np.clip(resize_area(r.image, config.working_height, config.working_width),
                0.0, 1.0)
        for r in records
    ]


def learn_features(records, config):
    """Train the full representation and return (bundle, summary).

    Uses the feature-learning side of the split: evolves the remap curve
    on a seeded sample of images, samples patches from the enhanced and
    normalized images, fits whitening, then trains the autoencoder.
    """
    config.validate()
    started = time.perf_counter()
    split = split_protocol(records)
    learning = split.feature_learning
    if not learning:
        raise ValueError(
            "no feature-learning images: the dataset only contains "
            "right-hand index samples"
        )
    images = _resized_unit_images(learning, config)

    curve = None
    enhancement_fitness = float("nan")
    if config.enhance:
        ga_seed = derive_seed(config.seed, "ga")
        picker = np.random.default_rng(ga_seed)
        chosen = picker.choice(
            len(images), size=min(config.ga_sample_images, len(images)),
            replace=False,
        )
        ga_config = GaConfig(
            population_size=config.ga_population,
            generations=config.ga_generations,
            crossover_rate=config.ga_crossover_rate,
            mutation_rate=config.ga_mutation_rate,
            mutation_sigma=config.ga_mutation_sigma,
            elitism_count=config.ga_elitism,
            tournament_size=config.ga_tournament,
            control_points=config.ga_control_points,
            seed=ga_seed,
        )
        result = evolve(
            [images[i] for i in chosen], ga_config, config.sobel_threshold
        )
        curve = result.best_curve
        enhancement_fitness = result.best_fitness
        images = [apply_remap(img, curve) for img in images]

    images = [normalize_zero_mean(img) for img in images]
    patches = sample_patches(
        images, config.patch_side, config.patch_count,
        derive_seed(config.seed, "patches"),
    )
    whitening = PCAWhitening(
        n_components=config.effective_retained_dim(),
        epsilon=config.whitening_epsilon,
    ).fit(patches)
    whitened = whitening.transform(patches)

    hyper = ae.SparsityHyper(
        weight_decay=config.weight_decay,
        sparsity_weight=config.sparsity_weight,
        sparsity_target=config.sparsity_target,
    )
    init = ae.init_params(
        whitened.shape[1], config.hidden_dim, derive_seed(config.seed, "init")
    )
    params, report = ae.train_lbfgs(
        init, whitened, hyper,
        max_iterations=config.max_iterations,
        memory=config.lbfgs_memory,
    )

    bundle = ModelBundle(
        config=config.to_dict(),
        whitening=whitening,
        autoencoder=params,
        patch_side=config.patch_side,
        pool_rows=config.pool_rows,
        pool_cols=config.pool_cols,
        remap_curve=curve,
    )
    final_cost = report.cost_trace[-1] if report.cost_trace else float("nan")
    summary = TrainSummary(
        n_learning_images=len(images),
        n_patches=patches.shape[0],
        final_cost=final_cost,
        final_gradient_norm=report.final_gradient_norm,
        iterations_run=report.iterations_run,
        enhancement_fitness=enhancement_fitness,
        wall_seconds=time.perf_counter() - started,
    )
    return bundle, summary


def _bundle_config(bundle):
    from .config import PipelineConfig

    return PipelineConfig(**bundle.config)


def represent_image(bundle, image):
    """Raw [0, 1] image to pooled feature vector using the bundle's settings."""
    config = _bundle_config(bundle)
    prepared = prepare_image(image, config, bundle.remap_curve)
    bank = build_feature_bank(bundle.autoencoder, bundle.whitening, bundle.patch_side)
    return represent(prepared, bank, bundle.pool_rows, bundle.pool_cols)


def _representations_by_user(bundle, records, user_filter=None):
    """Pooled features of the evaluation split, grouped per subject."""
    config = _bundle_config(bundle)
    split = split_protocol(records)
    bank = build_feature_bank(bundle.autoencoder, bundle.whitening, bundle.patch_side)
    grouped = {}
    for record in split.enrollment_evaluation:
        if user_filter is not None and record.subject_id not in user_filter:
            continue
        prepared = prepare_image(record.image, config, bundle.remap_curve)
        vector = represent(prepared, bank, bundle.pool_rows, bundle.pool_cols)
        grouped.setdefault(record.subject_id, []).append((record.sample_index, vector))
    return {
        user: np.array([vec for _, vec in sorted(pairs, key=lambda p: p[0])])
        for user, pairs in grouped.items()
    }


def enroll_users(bundle, records, user_ids):
    """Fit per-user models on each user's first ``n_enroll`` samples.

    Thresholds follow the bundle's configured strategy: ``global`` pools
    enrollment scores across all just-enrolled users into one threshold
    (also stored on the bundle), ``per_user`` calibrates each model on
    its own scores. Returns the list of users that were re-enrolled.
    """
    config = _bundle_config(bundle)
    available = _representations_by_user(bundle, records)
    unknown = [u for u in user_ids if u not in available]
    if unknown:
        raise ValueError(
            f"unknown user(s) {unknown}; available: {sorted(available)}"
        )
    replaced = [u for u in user_ids if u in bundle.user_models]

    enrollment = {}
    for user in user_ids:
        feats = available[user][: config.n_enroll]
        if feats.shape[0] < 2:
            raise ValueError(
                f"user {user!r} has {feats.shape[0]} enrollment samples, needs >= 2"
            )
        enrollment[user] = feats
    for user, feats in enrollment.items():
        bundle.user_models[user] = OneClassGaussian(
            shrinkage=config.shrinkage, regularizer=config.regularizer
        ).fit(feats)
    for user in replaced:
        warnings.warn(f"user {user!r} is already enrolled; replacing the model")

    # Calibration spans every enrolled user whose enrollment samples are in
    # this dataset, so incremental enrollment keeps thresholds consistent.
    calibration = dict(enrollment)
    for user in bundle.user_models:
        if user not in calibration and user in available:
            feats = available[user][: config.n_enroll]
            if feats.shape[0] >= 2:
                calibration[user] = feats

    strategy = ThresholdStrategy(
        kind=config.threshold_kind,
        target=config.threshold_target,
        fixed_far_value=(
            config.fixed_far_value
            if config.threshold_target == "fixed_far" else None
        ),
    )
    users = sorted(calibration)
    if len(users) < 2:
        warnings.warn(
            "threshold calibration needs at least 2 enrolled users for "
            "impostor scores; thresholds left unset"
        )
        return replaced
    if strategy.kind == "global":
        genuine, impostor = [], []
        for user in users:
            genuine.append(bundle.user_models[user].score_samples(calibration[user]))
            for other in users:
                if other != user:
                    impostor.append(
                        bundle.user_models[user].score_samples(calibration[other])
                    )
        threshold = select_threshold(
            np.concatenate(genuine), np.concatenate(impostor), strategy
        )
        bundle.global_threshold = threshold
        for model in bundle.user_models.values():
            model.set_threshold(threshold)
    else:
        for user in users:
            genuine = bundle.user_models[user].score_samples(calibration[user])
            impostor = np.concatenate([
                bundle.user_models[user].score_samples(calibration[other])
                for other in users if other != user
            ])
            bundle.user_models[user].set_threshold(
                select_threshold(genuine, impostor, strategy)
            )
    return replaced


def verify_image(bundle, user_id, image):
    """Score one raw image against an enrolled user's model."""
    if user_id not in bundle.user_models:
        raise ValueError(
            f"user {user_id!r} is not enrolled; enrolled: "
            f"{sorted(bundle.user_models)}"
        )
    vector = represent_image(bundle, image)
    model = bundle.user_models[user_id]
    accepted, score = model.verify(vector)
    return accepted, score, model.threshold_


def evaluate_bundle(bundle, records):
    """Run the repeated-split protocol on the evaluation side of the split."""
    config = _bundle_config(bundle)
    features = _representations_by_user(bundle, records)
    return run_protocol(
        features,
        n_folds=config.n_folds,
        n_enroll=config.n_enroll,
        n_test=config.n_test,
        seed=derive_seed(config.seed, "protocol"),
        shrinkage=config.shrinkage,
        regularizer=config.regularizer,
        config_echo=config.to_dict(),
    )


def sweep(records, config, hidden_sizes, iteration_counts):
    """Retrain per grid cell and evaluate; returns (hidden, iters, report) rows.

    Every cell re-derives the same preprocessing (curve, patches,
    whitening) from the same per-stage seeds, so cells differ only in
    hidden size and optimizer budget.
    """
    config.validate()
    if not hidden_sizes or not iteration_counts:
        raise ValueError("sweep grid must be non-empty")
    results = []
    for hidden in hidden_sizes:
        for iterations in iteration_counts:
            cell = type(config)(**config.to_dict())
            cell.hidden_dim = int(hidden)
            cell.max_iterations = int(iterations)
            bundle, _ = learn_features(records, cell)
            results.append((int(hidden), int(iterations), evaluate_bundle(bundle, records)))
    return results
