import pytest

from faircert.cli import main as cli_main
from faircert.experiment import (
    ConfigError,
    ExperimentConfig,
    PLOT_MEASURES,
    SweepRow,
    config_from_fields,
    emit_plot_data,
    parse_experiment_config,
    run_sweep,
    sweep_table_text,
)
from faircert.data import SplitSpec
from faircert.neural import TrainConfig


def tiny_config(out_dir: str, **overrides) -> ExperimentConfig:
    base = dict(
        dataset="synthetic",
        lambda_grid=(0.0, 2.0),
        seed=5,
        split=SplitSpec(0.7, 5),
        train=TrainConfig(epochs=6, batch_size=50, learning_rate=0.003, seed=5),
        out_dir=out_dir,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestConfigParsing:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "dataset=synthetic\nlambda_grid=0,1,2\nseed=9\ntrain_fraction=0.8\n"
            "split_seed=4\nepochs=12\nbatch_size=64\nlearning_rate=0.002\n"
            "shuffle=true\nepsilon_rule=0.2\nc_y=0.4\nc_s=0.6\neta_slack=0.02\n"
            "out_dir=/tmp/zzz\n"
        )
        cfg = parse_experiment_config(path)
        assert cfg.lambda_grid == (0.0, 1.0, 2.0)
        assert cfg.split == SplitSpec(0.8, 4)
        assert cfg.train.epochs == 12
        assert cfg.train.seed == 9
        assert cfg.c_y == 0.4
        assert cfg.eta_slack == 0.02

    def test_unknown_field_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("dataset=synthetic\nwhatever=1\n")
        with pytest.raises(ConfigError, match="unknown config field"):
            parse_experiment_config(path)

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("dataset synthetic\n")
        with pytest.raises(ConfigError, match="key=value"):
            parse_experiment_config(path)

    def test_empty_lambda_grid_rejected(self):
        with pytest.raises(ConfigError, match="non-empty"):
            config_from_fields({"lambda_grid": ""})

    def test_negative_lambda_rejected(self):
        with pytest.raises(ConfigError, match=">= 0"):
            config_from_fields({"lambda_grid": "0,-1"})

    def test_overrides(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("dataset=synthetic\nseed=1\n")
        cfg = parse_experiment_config(path, {"seed": "33", "out_dir": "/tmp/o"})
        assert cfg.seed == 33
        assert cfg.out_dir == "/tmp/o"


class TestSweep:
    def test_outputs_and_determinism(self, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        res_a = run_sweep(tiny_config(str(out_a)))
        res_b = run_sweep(tiny_config(str(out_b)))
        assert len(res_a.rows) == 2
        assert res_a.failures == ()
        for name in (
            "sweep_table.csv",
            "report_lambda_0p0.txt",
            "report_lambda_2p0.json",
            "plot_risk_y.tsv",
        ):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_rows_carry_config_provenance(self, tmp_path):
        res = run_sweep(tiny_config(str(tmp_path / "run")))
        for index, row in enumerate(res.rows):
            assert row.seed == 5 + index
        for index, report in enumerate(res.reports):
            assert report.seed == 5 + index
            assert report.split == "test"
            assert report.dataset == "synthetic"

    def test_certificate_dominance_in_every_report(self, tmp_path):
        res = run_sweep(tiny_config(str(tmp_path / "run")))
        for report in res.reports:
            assert report.sp_bound_ber <= report.sp_bound_entropy + 1e-9

    def test_table_header_order_fixed(self):
        row = SweepRow(
            lam=0.0, sp_via_ber_rule=0.1, di_via_di_rule=0.2, large_recon_rate=0.3,
            avg_recon_error=0.4, risk_y=0.5, cost_of_mistrust=0.6, sp_bound_ber=0.7,
            sp_bound_entropy=0.8, di_bound=0.9, runtime_seconds=1.0, seed=3,
        )
        text = sweep_table_text([row])
        header = text.splitlines()[0]
        assert header == (
            "lambda,sp_via_ber_rule,di_via_di_rule,large_recon_rate,avg_recon_error,"
            "risk_y,cost_of_mistrust,sp_bound_ber,sp_bound_entropy,di_bound,seed"
        )

    def test_lambda_zero_is_nearly_free(self, tmp_path):
        # pure autoencoding on easily reconstructable data: negligible
        # reconstruction error and negligible cost of mistrust
        cfg = tiny_config(
            str(tmp_path / "run"), lambda_grid=(0.0,),
            train=TrainConfig(epochs=60, batch_size=50, learning_rate=0.003, seed=5),
        )
        res = run_sweep(cfg)
        row = res.rows[0]
        assert row.avg_recon_error < 0.5
        assert abs(row.cost_of_mistrust) < 0.1

    def test_failure_isolation(self, tmp_path, monkeypatch):
        import faircert.experiment as exp

        real = exp.evaluate_lambda

        def flaky(train_ds, test_ds, lam, config, job_seed):
            if lam == 2.0:
                raise RuntimeError("synthetic stage failure")
            return real(train_ds, test_ds, lam, config, job_seed)

        monkeypatch.setattr(exp, "evaluate_lambda", flaky)
        out = tmp_path / "flaky"
        res = exp.run_sweep(tiny_config(str(out)))
        assert len(res.rows) == 1
        assert len(res.failures) == 1
        assert res.failures[0][0] == 2.0
        assert "synthetic stage failure" in (out / "failures.txt").read_text()


class TestPlotEmission:
    def test_one_file_per_measure_with_all_rows(self, tmp_path):
        res = run_sweep(tiny_config(str(tmp_path / "run"), lambda_grid=(0.0, 1.0, 2.0)))
        out = tmp_path / "plots"
        written = emit_plot_data(res.rows, out)
        assert len(written) == len(PLOT_MEASURES)
        for path in written:
            lines = path.read_text().strip().splitlines()
            assert len(lines) == 3
            lams = [float(line.split("\t")[0]) for line in lines]
            assert lams == sorted(lams)

    def test_values_round_trip_exactly(self, tmp_path):
        res = run_sweep(tiny_config(str(tmp_path / "run")))
        out = tmp_path / "plots"
        emit_plot_data(res.rows, out)
        lines = (out / "plot_avg_recon_error.tsv").read_text().strip().splitlines()
        by_lam = {r.lam: r for r in res.rows}
        for line in lines:
            lam, value = (float(v) for v in line.split("\t"))
            assert value == by_lam[lam].avg_recon_error

    def test_empty_table_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="empty sweep table"):
            emit_plot_data([], tmp_path)


class TestCli:
    def test_sweep_then_rerun_identical(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        out = tmp_path / "out"
        cfg.write_text(
            f"dataset=synthetic\nlambda_grid=0,1\nseed=2\nepochs=4\nbatch_size=50\n"
            f"learning_rate=0.003\nout_dir={out}\n"
        )
        assert cli_main(["sweep", "--config", str(cfg)]) == 0
        first = (out / "sweep_table.csv").read_bytes()
        assert cli_main(["sweep", "--config", str(cfg)]) == 0
        assert (out / "sweep_table.csv").read_bytes() == first

    def test_oracle_check_and_gradcheck(self, capsys):
        assert cli_main(["oracle-check", "--seed", "1", "--joints", "40"]) == 0
        assert "violations: 0" in capsys.readouterr().out
        assert cli_main(["gradcheck", "--seed", "2", "--architectures", "4"]) == 0

    def test_train_then_certify(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        out = tmp_path / "out"
        cfg.write_text(
            f"dataset=synthetic\nseed=3\nepochs=4\nbatch_size=50\n"
            f"learning_rate=0.003\nout_dir={out}\n"
        )
        assert cli_main(["train", "--config", str(cfg), "--lambda", "1.0"]) == 0
        model = out / "representation.npz"
        assert model.exists()
        assert cli_main(["certify", "--config", str(cfg), "--model", str(model)]) == 0
        report = (out / "certificate_report.txt").read_text()
        assert "sp_bound_ber=" in report
        assert "split=test" in report

    def test_config_error_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("nope=1\n")
        assert cli_main(["sweep", "--config", str(cfg)]) == 2
        assert "error:" in capsys.readouterr().err

    def test_runtime_error_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("dataset=adult\ndata_path=/nonexistent/adult.csv\n")
        assert cli_main(["ingest", "--config", str(cfg)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_flag_exits_two(self):
        with pytest.raises(SystemExit) as excinfo:
            cli_main(["sweep", "--config", "x", "--bogus"])
        assert excinfo.value.code == 2
