import csv
import json

import numpy as np
import pytest

from wavebcd.cli import main
from wavebcd.imageio import read_pfm, write_pgm
from wavebcd.synthetic import piecewise_smooth

TIMING = {"time_s", "eval_s"}


@pytest.fixture
def truth_pgm(tmp_path):
    img = piecewise_smooth(32, np.random.default_rng(3))
    path = tmp_path / "truth.pgm"
    write_pgm(path, img, bits=16)
    return path


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _strip_timing(rows):
    return [{k: v for k, v in r.items() if k not in TIMING} for r in rows]


def tiny_config(tmp_path, **over):
    values = dict(instances=2, crop=32, levels=2, wavelet="db4", iterations=10, grid_iters=5,
                  lambda_grid="1e-3, 1e-2", reference_factor=2)
    values.update(over)
    path = tmp_path / "bench.cfg"
    path.write_text("# tiny suite\n" + "".join(f"{k} = {v}\n" for k, v in values.items()))
    return path


def test_degrade_then_solve(tmp_path, truth_pgm, capsys):
    obs = tmp_path / "obs.pfm"
    assert main(["degrade", str(truth_pgm), "--sigma-blur", "2", "--sigma-noise", "0.01", "--seed", "4", "--out", str(obs)]) == 0
    meta = json.loads((tmp_path / "obs.pfm.json").read_text())
    assert meta["sigma_blur"] == 2.0 and meta["seed"] == 4
    assert read_pfm(obs).shape == (32, 32)
    out = tmp_path / "run" / "magic"
    assert main(["solve", str(obs), "--truth", str(truth_pgm), "--method", "magic", "--iters", "15",
                 "--levels", "2", "--wavelet", "db4", "--out", str(out)]) == 0
    assert "PSNR" in capsys.readouterr().out
    rows = _rows(f"{out}.csv")
    assert len(rows) == 15 and list(rows[0])[:4] == ["iter", "time_s", "objective", "mask"]
    summary = json.loads(open(f"{out}.json").read())
    assert summary["config"]["method"] == "magic" and summary["psnr_db"] > 0
    for ext in (".pfm", ".pgm"):
        assert (tmp_path / "run" / f"magic{ext}").exists()


def test_degrade_is_deterministic(tmp_path, truth_pgm):
    for name in ("a", "b"):
        main(["degrade", str(truth_pgm), "--sigma-blur", "3", "--sigma-noise", "0.05", "--seed", "9", "--out", str(tmp_path / f"{name}.pfm")])
    assert (tmp_path / "a.pfm").read_bytes() == (tmp_path / "b.pfm").read_bytes()


def test_zero_noise_degrade_is_pure_blur(tmp_path):
    from wavebcd.degradation import blur_apply, make_blur
    from wavebcd.imageio import read_image

    write_pgm(tmp_path / "t.pgm", piecewise_smooth(16, np.random.default_rng(0)), bits=16)
    truth = read_image(tmp_path / "t.pgm")
    assert main(["degrade", str(tmp_path / "t.pgm"), "--sigma-blur", "1", "--sigma-noise", "0", "--out", str(tmp_path / "y.pfm")]) == 0
    expected = blur_apply(make_blur(1.0, 16), truth).astype(np.float32)
    np.testing.assert_array_equal(read_pfm(tmp_path / "y.pfm"), expected)


def test_noiseless_fb_recovers_truth(tmp_path):
    # sigma 0.5 keeps |H|^2 >= 0.08 at Nyquist; at sigma 1 it is 5e-5 and FB needs ~1e6 steps
    from wavebcd.degradation import DegradationSpec, degrade
    from wavebcd.imageio import read_image, write_pfm

    write_pgm(tmp_path / "t.pgm", piecewise_smooth(16, np.random.default_rng(0)), bits=16)
    y = degrade(read_image(tmp_path / "t.pgm"), DegradationSpec(0.5, 0.0, check_ranges=False))
    write_pfm(tmp_path / "y.pfm", y)
    out = tmp_path / "fb"
    assert main(["solve", str(tmp_path / "y.pfm"), "--truth", str(tmp_path / "t.pgm"), "--sigma-blur", "0.5",
                 "--method", "fb", "--lambda", "0", "--iters", "3000", "--levels", "2", "--wavelet", "haar",
                 "--out", str(out)]) == 0
    assert json.loads(open(f"{out}.json").read())["psnr_db"] > 60


def test_magic_reruns_identical(tmp_path, truth_pgm):
    obs = tmp_path / "obs.pfm"
    main(["degrade", str(truth_pgm), "--sigma-blur", "2", "--sigma-noise", "0.01", "--out", str(obs)])
    args = ["solve", str(obs), "--method", "magic", "--iters", "20", "--levels", "2", "--wavelet", "db4", "--seed", "5"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    assert _strip_timing(_rows(tmp_path / "a.csv")) == _strip_timing(_rows(tmp_path / "b.csv"))
    assert (tmp_path / "a.pfm").read_bytes() == (tmp_path / "b.pfm").read_bytes()


def test_mlfb_mask_pattern(tmp_path, truth_pgm):
    obs = tmp_path / "obs.pfm"
    main(["degrade", str(truth_pgm), "--sigma-blur", "2", "--sigma-noise", "0.01", "--out", str(obs)])
    main(["solve", str(obs), "--method", "mlfb", "--iters", "7", "--levels", "2", "--wavelet", "db4", "--out", str(tmp_path / "m")])
    assert [r["mask"] for r in _rows(tmp_path / "m.csv")] == ["100", "110", "111", "100", "110", "111", "100"]


def test_non_square_input_is_cropped(tmp_path):
    write_pgm(tmp_path / "r.pgm", np.random.default_rng(0).random((40, 50)))
    main(["degrade", str(tmp_path / "r.pgm"), "--sigma-blur", "2", "--sigma-noise", "0.01", "--out", str(tmp_path / "y.pfm")])
    assert read_pfm(tmp_path / "y.pfm").shape == (32, 32)


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "OBS", "--method", "ista", "--out", "X"],
        ["solve", "OBS", "--step-factor", "2.5", "--out", "X"],
        ["degrade", "TRUTH", "--sigma-blur", "20", "--sigma-noise", "0.01", "--out", "X"],
        ["degrade", "TRUTH", "--sigma-blur", "2", "--sigma-noise", "0.5", "--out", "X"],
        ["frobnicate"],
        ["solve", "OBS", "--levels", "9", "--out", "X"],
    ],
)
def test_user_errors_exit_1(tmp_path, truth_pgm, argv, capsys):
    obs = tmp_path / "obs.pfm"
    main(["degrade", str(truth_pgm), "--sigma-blur", "2", "--sigma-noise", "0.01", "--out", str(obs)])
    argv = [str(obs) if a == "OBS" else str(truth_pgm) if a == "TRUTH" else str(tmp_path / "x") if a == "X" else a for a in argv]
    assert main(argv) == 1
    assert "error" in capsys.readouterr().err


def test_data_errors_exit_2(tmp_path):
    (tmp_path / "junk.pgm").write_bytes(b"P5\n4 4\n255\n")
    assert main(["degrade", str(tmp_path / "junk.pgm"), "--sigma-blur", "2", "--sigma-noise", "0.01", "--out", str(tmp_path / "o.pfm")]) == 2
    assert main(["degrade", str(tmp_path / "none.pgm"), "--sigma-blur", "2", "--sigma-noise", "0.01", "--out", str(tmp_path / "o.pfm")]) == 2


def test_bench_contract_and_profile(tmp_path, capsys):
    cfg = tiny_config(tmp_path, methods="fb, magic")
    out = tmp_path / "b1"
    assert main(["bench", "--config", str(cfg), "--out", str(out)]) == 0
    csvs = sorted(p.name for p in (out / "traces").glob("*.csv"))
    assert csvs == ["inst0000_fb.csv", "inst0000_magic.csv", "inst0001_fb.csv", "inst0001_magic.csv"]
    assert len(_rows(out / "instances.csv")) == 2
    for name in ("bench.json", "grid.csv", "profile.csv", "heatmap_fb.csv", "heatmap_magic.csv"):
        assert (out / name).exists()
    # the chosen lambda is the best-PSNR grid value for each instance
    grid = _rows(out / "grid.csv")
    for rec in _rows(out / "instances.csv"):
        rows = [g for g in grid if g["instance"] == rec["instance"]]
        best = max(rows, key=lambda g: float(g["psnr"]))
        assert float(rec["lambda"]) == float(best["lambda"])
        assert float(rec["reference_objective"]) <= min(float(rec["final_fb"]), float(rec["final_magic"]))
    assert main(["profile", str(out), "--budget-iters", "5", "--out", str(tmp_path / "p5.csv")]) == 0
    assert "rho(2)" in capsys.readouterr().out
    assert _rows(tmp_path / "p5.csv")[0].keys() == {"method", "beta", "rho"}
    assert main(["profile", str(out), "--budget-s", "10"]) == 0
    assert main(["profile", str(out), "--budget-iters", "5", "--budget-s", "1"]) == 1


def test_bench_seed_determinism(tmp_path):
    cfg = tiny_config(tmp_path, methods="stoc, magic")
    for name in ("a", "b"):
        assert main(["bench", "--config", str(cfg), "--seed", "7", "--out", str(tmp_path / name)]) == 0
    for f in ("instances.csv", "grid.csv", "profile.csv", "heatmap_stoc.csv", "heatmap_magic.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    for f in (tmp_path / "a" / "traces").glob("*.csv"):
        assert _strip_timing(_rows(f)) == _strip_timing(_rows(tmp_path / "b" / "traces" / f.name))
    main(["bench", "--config", str(cfg), "--seed", "8", "--out", str(tmp_path / "c")])
    assert (tmp_path / "a" / "instances.csv").read_bytes() != (tmp_path / "c" / "instances.csv").read_bytes()


def test_bench_workers_match_serial(tmp_path):
    cfg = tiny_config(tmp_path, methods="fb, gs")
    main(["bench", "--config", str(cfg), "--out", str(tmp_path / "s")])
    cfg2 = tiny_config(tmp_path, methods="fb, gs", workers=2)
    main(["bench", "--config", str(cfg2), "--out", str(tmp_path / "w")])
    for f in ("instances.csv", "profile.csv", "heatmap_gs.csv"):
        assert (tmp_path / "s" / f).read_bytes() == (tmp_path / "w" / f).read_bytes()


def test_bench_images_directory(tmp_path):
    imgs = tmp_path / "imgs"
    imgs.mkdir()
    write_pgm(imgs / "a.pgm", np.random.default_rng(0).random((40, 48)))
    cfg = tiny_config(tmp_path, methods="fb", images="imgs", instances=1)
    assert main(["bench", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert _rows(tmp_path / "o" / "instances.csv")[0]["source"].startswith("a.pgm@")
    empty = tmp_path / "empty"
    empty.mkdir()
    cfg = tiny_config(tmp_path, methods="fb", images=str(empty))
    assert main(["bench", "--config", str(cfg), "--out", str(tmp_path / "o2")]) == 2


@pytest.mark.parametrize("line", ["bogus = 1", "methods = fb, ista", "iterations = many", "crop = 48", "no equals sign"])
def test_bad_bench_config_exit_1(tmp_path, line):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(line + "\n")
    assert main(["bench", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    cfg.write_text("iterations = 5\niterations = 6\n")
    assert main(["bench", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_incomplete_bench_exit_2(tmp_path):
    cfg = tiny_config(tmp_path, methods="fb, magic")
    out = tmp_path / "b"
    main(["bench", "--config", str(cfg), "--out", str(out)])
    (out / "traces" / "inst0001_magic.csv").unlink()
    assert main(["profile", str(out), "--budget-iters", "5"]) == 2
    assert main(["profile", str(tmp_path / "nowhere"), "--budget-iters", "5"]) == 2
