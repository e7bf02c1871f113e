import numpy as np
import pytest

from fingervein import ProtocolReport, run_protocol, write_report_csv
from fingervein.protocol import format_fold_table, format_sweep_tables, report_rows


def clustered_users(rng, n_users=4, n_samples=6, dim=8, spread=0.01, gap=5.0):
    """Widely separated per-user clusters: trivially verifiable."""
    features = {}
    for u in range(n_users):
        center = rng.normal(scale=gap, size=dim) + gap * u
        features[f"{u + 1:03d}"] = center + rng.normal(
            scale=spread, size=(n_samples, dim)
        )
    return features


class TestRunProtocol:
    def test_separated_clusters_give_zero_eer(self, rng):
        report = run_protocol(clustered_users(rng), n_folds=10, seed=1)
        assert report.mean_eer == 0.0
        assert report.mean_auc == 1.0

    def test_deterministic_under_seed(self, rng):
        features = clustered_users(rng, spread=2.0, gap=3.0)
        a = run_protocol(features, n_folds=5, seed=9)
        b = run_protocol(features, n_folds=5, seed=9)
        assert a.per_fold_eer == b.per_fold_eer
        assert a.per_fold_auc == b.per_fold_auc

    def test_different_seeds_reshuffle_folds(self, rng):
        features = clustered_users(rng, spread=2.5, gap=2.0)
        a = run_protocol(features, n_folds=5, seed=1)
        b = run_protocol(features, n_folds=5, seed=2)
        assert a.per_fold_eer != b.per_fold_eer

    def test_users_with_too_few_samples_are_skipped(self, rng):
        features = clustered_users(rng)
        features["short"] = rng.normal(size=(4, 8))
        with pytest.warns(UserWarning, match="short"):
            report = run_protocol(features, n_folds=2, seed=0)
        assert report.skipped_users == ("short",)
        assert "short" not in report.users

    def test_fewer_than_two_users_rejected(self, rng):
        with pytest.raises(ValueError):
            run_protocol({"only": rng.normal(size=(6, 4))}, n_folds=2)

    def test_mean_equals_arithmetic_mean(self, rng):
        report = run_protocol(
            clustered_users(rng, spread=2.0, gap=2.0), n_folds=7, seed=4
        )
        assert abs(report.mean_eer - np.mean(report.per_fold_eer)) < 1e-12
        assert abs(report.mean_auc - np.mean(report.per_fold_auc)) < 1e-12

    def test_config_echo_is_carried(self, rng):
        report = run_protocol(
            clustered_users(rng), n_folds=2, seed=0, config_echo={"hidden_dim": 10}
        )
        assert report.config_echo == {"hidden_dim": 10}


class TestReportOutput:
    @pytest.fixture
    def report(self, rng):
        return run_protocol(clustered_users(rng, spread=2.0, gap=2.0),
                            n_folds=10, seed=3)

    def test_rows_have_fold_entries_plus_mean(self, report):
        rows = report_rows(report, 100, 50)
        assert len(rows) == 11
        assert rows[-1][2] == "mean"
        assert rows[0][:2] == (100, 50)

    def test_csv_written_with_header_and_rows(self, tmp_path, report):
        path = tmp_path / "report.csv"
        text = write_report_csv(path, [(100, 50, report)])
        lines = path.read_text().splitlines()
        assert lines[0] == "hidden_size,iterations,fold,eer,auc"
        assert len(lines) == 12
        assert text == path.read_text()

    def test_csv_is_byte_stable(self, tmp_path, rng):
        features = clustered_users(rng, spread=2.0, gap=2.0)
        r1 = run_protocol(features, n_folds=4, seed=5)
        r2 = run_protocol(features, n_folds=4, seed=5)
        t1 = write_report_csv(tmp_path / "a.csv", [(8, 4, r1)])
        t2 = write_report_csv(tmp_path / "b.csv", [(8, 4, r2)])
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert t1 == t2

    def test_fold_table_mentions_every_fold(self, report):
        table = format_fold_table(report)
        for fold in range(1, 11):
            assert f"\n{fold:>6}  " in "\n" + table
        assert "mean" in table

    def test_sweep_table_lays_out_grid(self, report):
        results = [(100, 10, report), (200, 10, report),
                   (100, 20, report), (200, 20, report)]
        text = format_sweep_tables(results)
        assert "mean EER" in text and "mean AUC" in text
        assert text.count("100") >= 2 and text.count("200") >= 2


class TestProtocolReportType:
    def test_is_frozen(self, rng):
        report = run_protocol(clustered_users(rng), n_folds=1, seed=0)
        assert isinstance(report, ProtocolReport)
        with pytest.raises(AttributeError):
            report.mean_eer = 1.0
