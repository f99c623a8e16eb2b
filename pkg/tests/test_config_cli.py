"""Configuration parsing and the command-line interface."""

import numpy as np
import pytest

from dualspike.cli import EXIT_CONFIG, EXIT_NO_SUPPORT, EXIT_OK, main
from dualspike.config import parse_config
from dualspike.errors import ConfigError

TINY_CONFIG = """\
# one source, quick solve
sources = 0.5
amplitudes = 1.0
sigma = 0.1
m = 7
tau = 100
pi = 2
alpha = 0.25
iterations = 60
seed = 3
"""


class TestParsing:
    def test_full_roundtrip(self):
        cfg = parse_config(TINY_CONFIG)
        np.testing.assert_array_equal(cfg.sources, [0.5])
        np.testing.assert_array_equal(cfg.samples, np.linspace(0, 1, 7))
        assert cfg.tau == 100.0 and cfg.pi == 2.0 and cfg.seed == 3
        assert cfg.iterations == 60
        assert len(cfg.digest) == 12

    def test_defaults(self):
        cfg = parse_config("sources=0.2,0.6\namplitudes=1,0.5\nsigma=0.1\nm=9\n")
        assert cfg.tau == 1e5
        assert cfg.pi == pytest.approx(3.0)  # 2 * sum(amplitudes)
        assert cfg.alpha == 0.25
        assert cfg.seed == 0
        assert (cfg.window_start, cfg.window_end) == (20, 270)
        assert cfg.iterations is None and cfg.noise_grid is None

    def test_explicit_samples(self):
        cfg = parse_config("sources=0.5\namplitudes=1\nsigma=0.1\nsamples=0.1,0.5,0.9\n")
        np.testing.assert_array_equal(cfg.samples, [0.1, 0.5, 0.9])

    @pytest.mark.parametrize("text,key", [
        ("amplitudes=1\nsigma=0.1\nm=5\n", "sources"),
        ("sources=0.5\namplitudes=1\nm=5\n", "sigma"),
        ("sources=0.5\namplitudes=1\nsigma=0.1\n", "m"),
        ("sources=0.5\namplitudes=1\nsigma=abc\nm=5\n", "sigma"),
        ("sources=0.5\namplitudes=1\nsigma=0.1\nm=5\nbogus=1\n", "bogus"),
        ("sources=0.5\namplitudes=1\nsigma=0.1\nm=5\nsamples=0.1,0.9\n", "samples"),
        ("sources=0.5\namplitudes=1\nsigma=0.1\nm=5\ntau=-1\n", "tau"),
        ("sources=0.5\namplitudes=1\nsigma=0.1\nm=5\nalpha=1.5\n", "alpha"),
        ("sources=0.7,0.2\namplitudes=1,1\nsigma=0.1\nm=5\n", "sources"),
        ("sources=0.5\namplitudes=1\nsigma=0.1\nm=5\nwindow_start=9\nwindow_end=4\n",
         "window_start"),
    ])
    def test_errors_name_the_key(self, text, key):
        with pytest.raises(ConfigError) as excinfo:
            parse_config(text)
        assert excinfo.value.key == key

    def test_duplicate_key(self):
        with pytest.raises(ConfigError):
            parse_config("sigma=0.1\nsigma=0.2\nsources=0.5\namplitudes=1\nm=5\n")

    def test_noise_grid_override(self):
        cfg = parse_config("sources=0.5\namplitudes=1\nsigma=0.1\nm=5\nnoise_grid=0.01,0.02\n")
        np.testing.assert_array_equal(cfg.noise_grid, [0.01, 0.02])


class TestCli:
    def test_solve_writes_artifacts(self, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text(TINY_CONFIG)
        out = tmp_path / "out"
        assert main(["solve", "--config", str(cfg_path), "--out", str(out)]) == EXIT_OK
        for name in ("convergence.csv", "certificate.csv", "recovery.csv"):
            path = out / name
            assert path.exists()
            lines = path.read_text().splitlines()
            assert lines[0].startswith("# config=")
            assert "seed=3" in lines[0]
            assert "," in lines[1]  # header row

    def test_solve_deterministic(self, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text(TINY_CONFIG)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["solve", "--config", str(cfg_path), "--out", str(out1)]) == EXIT_OK
        assert main(["solve", "--config", str(cfg_path), "--out", str(out2)]) == EXIT_OK
        for name in ("convergence.csv", "certificate.csv", "recovery.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_recovered_location(self, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text(TINY_CONFIG)
        out = tmp_path / "out"
        main(["solve", "--config", str(cfg_path), "--out", str(out)])
        rows = (out / "recovery.csv").read_text().splitlines()[2:]
        locs = [float(r.split(",")[0]) for r in rows]
        assert len(locs) == 1
        assert abs(locs[0] - 0.5) < 1e-4

    def test_config_error_exit_code(self, tmp_path, capsys):
        cfg_path = tmp_path / "bad.cfg"
        cfg_path.write_text("sources=0.5\namplitudes=1\nsigma=-1\nm=5\n")
        assert main(["solve", "--config", str(cfg_path)]) == EXIT_CONFIG
        assert "sigma" in capsys.readouterr().err

    def test_missing_file_exit_code(self, tmp_path):
        assert main(["solve", "--config", str(tmp_path / "nope.cfg")]) == EXIT_CONFIG

    def test_zero_iterations_no_support(self, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text(TINY_CONFIG)
        code = main(["solve", "--config", str(cfg_path), "--out",
                     str(tmp_path / "o"), "--iters", "0"])
        assert code == EXIT_NO_SUPPORT

    def test_window_precondition(self, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text(TINY_CONFIG + "window_start=2\nwindow_end=50\n"
                            "reference_iterations=40\n")
        code = main(["exp-lambda-t", "--config", str(cfg_path), "--out",
                     str(tmp_path / "o")])
        assert code == EXIT_CONFIG

    def test_seed_override_recorded(self, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text(TINY_CONFIG)
        out = tmp_path / "out"
        main(["solve", "--config", str(cfg_path), "--out", str(out), "--seed", "77"])
        first = (out / "convergence.csv").read_text().splitlines()[0]
        assert "seed=77" in first

    def test_ratio_experiment_row_count(self, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text(TINY_CONFIG + "window_start=5\nwindow_end=20\n"
                            "reference_iterations=40\n")
        out = tmp_path / "out"
        assert main(["exp-lambda-t", "--config", str(cfg_path), "--out", str(out)]) == EXIT_OK
        lines = (out / "exp_lambda_t.csv").read_text().splitlines()
        header = lines[1].split(",")
        assert header[:5] == ["iter", "source", "loc_err", "dual_err", "ratio"]
        data = [l for l in lines[2:] if l]
        # one row per (iteration, source) across the window
        assert len(data) == 16

    def test_noise_experiment_with_override(self, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text(TINY_CONFIG + "noise_grid=0.001,0.01\n")
        out = tmp_path / "out"
        assert main(["exp-noise", "--config", str(cfg_path), "--out", str(out),
                     "--iters", "40"]) == EXIT_OK
        lines = (out / "exp_noise.csv").read_text().splitlines()
        data = [l for l in lines[2:] if l]
        assert len(data) == 2
        ratios = [float(r.split(",")[3]) for r in data]
        assert all(r > 0 for r in ratios)

    def test_bounds_report_files(self, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text(TINY_CONFIG)
        out = tmp_path / "out"
        assert main(["bounds", "--config", str(cfg_path), "--out", str(out),
                     "--iters", "80"]) == EXIT_OK
        text = (out / "bounds_report.txt").read_text()
        assert "noise_rate" in text
        assert (out / "bounds_report.csv").exists()
