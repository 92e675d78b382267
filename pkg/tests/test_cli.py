"""End-to-end CLI behavior: subcommands, exit codes, env fallbacks."""

import numpy as np
import pytest

from steerkit import LoopbackBridgeServer, build_schedule, read_depth
from steerkit.cli import exit_code_for, main
from steerkit.errors import (
    BridgeError,
    DataError,
    DegenerateFitError,
    DimensionError,
    EmptyReportError,
    FileFormatError,
    ParameterError,
    SteerkitError,
)


def _synth(tmp_path, count=1, seed=3, height=40, width=56, sparse=60):
    out = tmp_path / "scenes"
    rc = main([
        "synth", "--out-dir", str(out), "--count", str(count),
        "--height", str(height), "--width", str(width),
        "--seed", str(seed), "--sparse", str(sparse),
    ])
    assert rc == 0
    return out


def test_exit_code_table():
    assert exit_code_for(ParameterError("x")) == 3
    assert exit_code_for(DimensionError("x")) == 4
    assert exit_code_for(DataError("x")) == 5
    assert exit_code_for(DegenerateFitError("x")) == 6
    assert exit_code_for(EmptyReportError("x")) == 7
    assert exit_code_for(FileFormatError("x")) == 8
    assert exit_code_for(BridgeError("x")) == 9
    assert exit_code_for(SteerkitError("x")) == 11
    assert exit_code_for(RuntimeError("x")) == 70


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_schedule_dump_matches_tables(capsys):
    rc = main(["schedule-dump", "--steps", "10"])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("# kind=linear T=10")
    rows = [line.split("\t") for line in lines[2:]]
    assert len(rows) == 10
    sched = build_schedule(10)
    for row in rows:
        t = int(row[0])
        assert float(row[1]) == pytest.approx(sched.beta[t], abs=5e-7)
        assert float(row[3]) == pytest.approx(sched.alpha_bar[t], abs=5e-7)
        assert float(row[4]) == pytest.approx(np.sqrt(sched.sigma2[t]), abs=5e-7)


def test_synth_writes_scene_files(tmp_path):
    out = _synth(tmp_path, count=2, seed=5)
    for i in (5, 6):
        assert (out / f"scene-{i:03d}.rgb.png").exists()
        assert (out / f"scene-{i:03d}.depth.npy").exists()
        assert (out / f"scene-{i:03d}.sparse.csv").exists()
    gt = read_depth(out / "scene-005.depth.npy")
    assert gt.values.shape == (40, 56)
    assert gt.values.min() > 0


def test_synth_seed_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("STEERKIT_SEED", "7")
    out = tmp_path / "scenes"
    rc = main(["synth", "--out-dir", str(out), "--count", "1",
               "--height", "24", "--width", "32"])
    assert rc == 0
    assert (out / "scene-007.depth.npy").exists()
    # explicit flag beats the environment
    rc = main(["synth", "--out-dir", str(out), "--count", "1",
               "--height", "24", "--width", "32", "--seed", "2"])
    assert rc == 0
    assert (out / "scene-002.depth.npy").exists()


def test_complete_round_trip(tmp_path, capsys):
    scenes = _synth(tmp_path, seed=3)
    out = tmp_path / "dense.npy"
    args = [
        "complete",
        "--rgb", str(scenes / "scene-003.rgb.png"),
        "--sparse", str(scenes / "scene-003.sparse.csv"),
        "--gt", str(scenes / "scene-003.depth.npy"),
        "--out", str(out),
        "--denoiser", "oracle", "--steps", "8", "--k", "0.3", "--seed", "1",
    ]
    assert main(args) == 0
    d = read_depth(out)
    assert d.values.shape == (40, 56)
    assert np.all(np.isfinite(d.values))
    gt = read_depth(scenes / "scene-003.depth.npy")
    # the exact oracle reproduces the scene through the identity codec
    assert float(np.sqrt(np.mean((d.values - gt.values) ** 2))) < 1e-3

    out2 = tmp_path / "dense2.npy"
    rerun = list(args)
    rerun[rerun.index(str(out))] = str(out2)
    assert main(rerun) == 0
    np.testing.assert_array_equal(read_depth(out2).values, d.values)


def test_complete_biased_oracle_with_bias_spec(tmp_path):
    scenes = _synth(tmp_path, seed=4)
    out = tmp_path / "dense.npy"
    rc = main([
        "complete",
        "--rgb", str(scenes / "scene-004.rgb.png"),
        "--sparse", str(scenes / "scene-004.sparse.csv"),
        "--gt", str(scenes / "scene-004.depth.npy"),
        "--out", str(out),
        "--denoiser", "biased-oracle", "--bias", "affine:1.2,-0.3+blur:3",
        "--trust", "1.0", "--harmonize-radius", "4",
        "--steps", "8", "--k", "0.2", "--seed", "1", "--float32",
    ])
    assert rc == 0
    assert read_depth(out).values.dtype == np.float64  # npy stores what complete returned
    assert np.isfinite(read_depth(out).values).all()


def test_complete_missing_flags_exit_3(tmp_path, capsys):
    assert main(["complete", "--rgb", "x.png"]) == 3
    assert "error:" in capsys.readouterr().err


def test_complete_missing_config_exit_8(tmp_path):
    assert main(["complete", "--config", str(tmp_path / "nope.cfg")]) == 8


def test_complete_missing_input_exit_3(tmp_path):
    rc = main([
        "complete", "--rgb", str(tmp_path / "a.png"),
        "--sparse", str(tmp_path / "b.csv"), "--out", str(tmp_path / "c.npy"),
    ])
    assert rc == 3  # path check fires before any reads


def test_config_file_drives_complete(tmp_path):
    scenes = _synth(tmp_path, seed=9)
    out = tmp_path / "dense.npy"
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        f"rgb = {scenes / 'scene-009.rgb.png'}\n"
        f"sparse = {scenes / 'scene-009.sparse.csv'}\n"
        f"gt = {scenes / 'scene-009.depth.npy'}\n"
        f"out = {out}\n"
        "denoiser = oracle\n"
        "steps = 8\n"
        "k = 0\n"
        "seed = 2\n"
    )
    assert main(["complete", "--config", str(cfg)]) == 0
    assert out.exists()


def test_benchmark_smoke(tmp_path, capsys):
    scenes = _synth(tmp_path, count=1, seed=0, height=448, width=608, sparse=0)
    reports = tmp_path / "reports"
    rc = main([
        "benchmark", "--scenes", str(scenes), "--out-dir", str(reports),
        "--n-depth", "400", "--ks", "0,0.2", "--areas", "large,medium",
        "--denoiser", "oracle", "--steps", "6", "--seed", "1", "--float32",
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert (reports / "reports.jsonl").exists()
    assert (reports / "reports.csv").exists()
    assert out.count("aggregate area=") == 4  # two areas x two ks


def test_benchmark_scene_failures_exit_1(tmp_path, capsys):
    # medium area cannot fit in 40x56 scenes: every scene fails, none succeed
    scenes = _synth(tmp_path, count=1, seed=0)
    rc = main([
        "benchmark", "--scenes", str(scenes), "--out-dir", str(tmp_path / "r"),
        "--n-depth", "40", "--ks", "0", "--areas", "medium",
        "--denoiser", "oracle", "--steps", "4",
    ])
    assert rc == 1
    assert "FAILED" in capsys.readouterr().err


def test_benchmark_empty_dir_exit_7(tmp_path):
    empty = tmp_path / "none"
    empty.mkdir()
    assert main(["benchmark", "--scenes", str(empty), "--denoiser", "oracle"]) == 7


def test_bridge_ping_against_loopback(capsys):
    with LoopbackBridgeServer(build_schedule(6)) as srv:
        rc = main(["bridge-ping", "--bridge", srv.spec,
                   "--height", "16", "--width", "20"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "ok: T=6" in out
    assert "(3, 16, 20)" in out


def test_bridge_ping_refused_exit_9(capsys):
    assert main(["bridge-ping", "--bridge", "127.0.0.1:9"]) == 9
    assert "error:" in capsys.readouterr().err


def test_bad_bias_spec_exit_3(tmp_path):
    scenes = _synth(tmp_path, seed=1)
    rc = main([
        "complete",
        "--rgb", str(scenes / "scene-001.rgb.png"),
        "--sparse", str(scenes / "scene-001.sparse.csv"),
        "--gt", str(scenes / "scene-001.depth.npy"),
        "--out", str(tmp_path / "o.npy"),
        "--denoiser", "biased-oracle", "--bias", "wavelet:3", "--steps", "4",
    ])
    assert rc == 3
