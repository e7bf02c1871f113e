"""Repeated enroll/test splits producing per-fold EER and AUC.

Each user contributes a handful of feature vectors; every fold redraws
which vectors enroll the user's model and which test it. Genuine scores
come from a user's test vectors against their own model, impostor scores
from the same vectors against every other user's model, and the fold's
EER/AUC are computed from the pooled lists.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .classifier import OneClassGaussian
from .metrics import auc, eer, roc


@dataclass(frozen=True)
class ProtocolReport:
    """Per-fold metrics plus their means and the settings that made them."""

    per_fold_eer: tuple
    per_fold_auc: tuple
    mean_eer: float
    mean_auc: float
    n_folds: int
    users: tuple
    skipped_users: tuple
    config_echo: dict = field(default_factory=dict)


def run_protocol(
    features_by_user,
    n_folds=10,
    n_enroll=3,
    n_test=3,
    seed=0,
    shrinkage=0.5,
    regularizer=1e-3,
    config_echo=None,
):
    """Run the repeated-split verification protocol.

    Parameters
    ----------
    features_by_user : mapping of user id -> ndarray (n_samples, dim)
        Pooled feature vectors per user. Users with fewer than
        ``n_enroll + n_test`` samples are skipped with a warning and
        listed in the report.
    n_folds : int
        Number of repeated random splits; each fold draws a fresh
        permutation of every user's samples.
    seed : int
        Drives all fold assignments; identical inputs reproduce the
        report exactly.
    """
    if n_folds < 1:
        raise ValueError("n_folds must be >= 1")
    if n_enroll < 2:
        raise ValueError("n_enroll must be >= 2 to fit a model")
    if n_test < 1:
        raise ValueError("n_test must be >= 1")
    needed = n_enroll + n_test

    users, skipped = [], []
    for user in sorted(features_by_user):
        count = np.asarray(features_by_user[user]).shape[0]
        if count < needed:
            skipped.append(user)
            warnings.warn(
                f"user {user!r} has {count} samples, needs {needed}; skipped"
            )
        else:
            users.append(user)
    if len(users) < 2:
        raise ValueError(
            f"protocol needs at least 2 usable users, got {len(users)}"
        )

    rng = np.random.default_rng(seed)
    fold_eer, fold_auc = [], []
    for _ in range(n_folds):
        models = {}
        test_sets = {}
        for user in users:
            feats = np.asarray(features_by_user[user], dtype=np.float64)
            order = rng.permutation(feats.shape[0])
            enroll = feats[order[:n_enroll]]
            test_sets[user] = feats[order[n_enroll:needed]]
            models[user] = OneClassGaussian(
                shrinkage=shrinkage, regularizer=regularizer
            ).fit(enroll)

        genuine, impostor = [], []
        for user in users:
            genuine.append(models[user].score_samples(test_sets[user]))
            for other in users:
                if other != user:
                    impostor.append(models[other].score_samples(test_sets[user]))
        curve = roc(np.concatenate(genuine), np.concatenate(impostor))
        fold_eer.append(eer(curve))
        fold_auc.append(auc(curve))

    return ProtocolReport(
        per_fold_eer=tuple(fold_eer),
        per_fold_auc=tuple(fold_auc),
        mean_eer=float(np.mean(fold_eer)),
        mean_auc=float(np.mean(fold_auc)),
        n_folds=n_folds,
        users=tuple(users),
        skipped_users=tuple(skipped),
        config_echo=dict(config_echo or {}),
    )


def report_rows(report, hidden_size, iterations):
    """Flatten a report into (hidden_size, iterations, fold, eer, auc) rows.

    Fold numbers are 1-based; a final row labeled ``mean`` carries the
    aggregates.
    """
    rows = [
        (hidden_size, iterations, str(fold + 1), report.per_fold_eer[fold],
         report.per_fold_auc[fold])
        for fold in range(report.n_folds)
    ]
    rows.append((hidden_size, iterations, "mean", report.mean_eer, report.mean_auc))
    return rows


def write_report_csv(path, reports_with_settings):
    """Write fold-level results as CSV.

    ``reports_with_settings`` is a sequence of (hidden_size, iterations,
    report). Floats are rendered with ``repr`` so identical runs produce
    byte-identical files.
    """
    lines = ["hidden_size,iterations,fold,eer,auc"]
    for hidden_size, iterations, report in reports_with_settings:
        for h, it, fold, e, a in report_rows(report, hidden_size, iterations):
            lines.append(f"{h},{it},{fold},{e!r},{a!r}")
    text = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)
    return text


SCORE_LABELS = ("genuine", "impostor")


def write_score_file(path, entries):
    """Write labeled scores as text lines: ``label user_id score``.

    ``entries`` is an iterable of (label, user_id, score) with label
    ``genuine`` or ``impostor``. Scores render with full precision.
    """
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for label, user_id, score in entries:
            if label not in SCORE_LABELS:
                raise ValueError(
                    f"score label must be one of {SCORE_LABELS}, got {label!r}"
                )
            handle.write(f"{label} {user_id} {float(score)!r}\n")
            count += 1
    return count


def read_score_file(path):
    """Read (label, user_id, score) entries written by :func:`write_score_file`."""
    entries = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3 or parts[0] not in SCORE_LABELS:
                raise ValueError(f"{path}:{lineno}: malformed score line {line!r}")
            entries.append((parts[0], parts[1], float(parts[2])))
    return entries


def split_score_entries(entries):
    """Separate entries into (genuine, impostor) score arrays for the metrics."""
    genuine = np.array([s for label, _, s in entries if label == "genuine"])
    impostor = np.array([s for label, _, s in entries if label == "impostor"])
    return genuine, impostor


def format_fold_table(report):
    """Human-readable per-fold table with a trailing mean row."""
    lines = [f"{'fold':>6}  {'eer':>10}  {'auc':>10}"]
    for fold in range(report.n_folds):
        lines.append(
            f"{fold + 1:>6}  {report.per_fold_eer[fold]:>10.6f}  "
            f"{report.per_fold_auc[fold]:>10.6f}"
        )
    lines.append(f"{'mean':>6}  {report.mean_eer:>10.6f}  {report.mean_auc:>10.6f}")
    return "\n".join(lines)


def format_sweep_tables(results):
    """Two grids (mean EER, mean AUC): iteration rows by hidden-size columns."""
    hidden_sizes = sorted({h for h, _, _ in results})
    iteration_counts = sorted({i for _, i, _ in results})
    cell = {(h, i): r for h, i, r in results}

    def grid(metric, title):
        header = "iterations/hidden".ljust(18) + "".join(
            f"{h:>12}" for h in hidden_sizes
        )
        lines = [title, header]
        for it in iteration_counts:
            row = f"{it:<18}"
            for h in hidden_sizes:
                report = cell.get((h, it))
                row += f"{getattr(report, metric):>12.6f}" if report else f"{'-':>12}"
            lines.append(row)
        return lines

    return "\n".join(
        grid("mean_eer", "mean EER") + [""] + grid("mean_auc", "mean AUC")
    )
