import numpy as np

from parmcmc import cli, perf
from parmcmc.ising import flip_noise, read_pbm, synthetic_binary_image, write_pbm


def read_csv_rows(path):
    lines = [l for l in path.read_text().splitlines() if l and not l.startswith("#")]
    return lines[0], lines[1:]


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def test_bench_inline_grid(tmp_path):
    out = tmp_path / "bench.csv"
    rc = cli.main(["bench", "--N", "500", "--K", "6", "--strategies", "som,plf",
                   "--workers", "1,4", "--evals", "2", "--reps", "2",
                   "--seed", "3", "--out", str(out)])
    assert rc == 0
    header, rows = read_csv_rows(out)
    assert header.startswith("label,")
    assert len(rows) == 4  # 2 strategies x 2 worker counts


def test_bench_missing_k_is_usage_error(tmp_path):
    rc = cli.main(["bench", "--N", "100", "--out", str(tmp_path / "x.csv")])
    assert rc == 2


def test_bench_determinism_of_non_timing_columns(tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        assert cli.main(["bench", "--N", "300", "--K", "4", "--strategies", "plf",
                         "--workers", "1,2", "--evals", "2", "--reps", "2",
                         "--seed", "11", "--out", str(out)]) == 0
        _, rows = read_csv_rows(out)
        outs.append([",".join(np.array(r.split(","))[[0, 1, 2, 3, 4, 7]]) for r in rows])
    assert outs[0] == outs[1]


def test_bench_config_file_wins(tmp_path):
    cfgfile = tmp_path / "grid.cfg"
    cfgfile.write_text("N = 200\nK = 3\nstrategies = plf\nworkers = 1\nevals = 2\nreps = 2\n")
    out = tmp_path / "c.csv"
    rc = cli.main(["bench", "--config", str(cfgfile), "--N", "999999",
                   "--K", "77", "--out", str(out)])
    assert rc == 0
    _, rows = read_csv_rows(out)
    assert len(rows) == 1 and rows[0].split(",")[1] == "200"


def test_bench_bad_config_is_input_error(tmp_path):
    cfgfile = tmp_path / "bad.cfg"
    cfgfile.write_text("nonsense = 1\n")
    assert cli.main(["bench", "--config", str(cfgfile)]) == 2


def test_bench_internal_error_returns_one(tmp_path, monkeypatch):
    def boom(cfg):
        raise RuntimeError("kaput")
    monkeypatch.setattr(perf, "run_grid", boom)
    assert cli.main(["bench", "--N", "10", "--K", "2",
                     "--out", str(tmp_path / "x.csv")]) == 1


def test_bench_cell_failures_still_exit_zero(tmp_path):
    # a config whose fantasy clock makes the roofline check reject every
    # cell: rows are flagged in the CSV but the command succeeds
    cfgfile = tmp_path / "absurd.cfg"
    cfgfile.write_text("N = 200\nK = 4\nstrategies = plf\nworkers = 1\n"
                       "evals = 2\nreps = 2\nwarmup = 0\ncpu_clock_ghz = 1e-9\n")
    out = tmp_path / "f.csv"
    assert cli.main(["bench", "--config", str(cfgfile), "--out", str(out)]) == 0
    assert "[failed:" in out.read_text()


# ---------------------------------------------------------------------------
# glm-sample
# ---------------------------------------------------------------------------

def test_glm_sample_synthetic(tmp_path, capsys):
    out = tmp_path / "draws.csv"
    rc = cli.main(["glm-sample", "--synthetic", "200,3", "--iters", "40",
                   "--burnin", "10", "--seed", "5", "--out", str(out)])
    assert rc == 0
    assert "posterior_mean:" in capsys.readouterr().out
    draws = np.loadtxt(out, delimiter=",", skiprows=1)
    assert draws.shape == (30, 3)


def test_glm_sample_diff_toggle_same_draws(tmp_path):
    args = ["glm-sample", "--synthetic", "150,3", "--iters", "30", "--burnin", "5",
            "--seed", "9"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(args + ["--diff-update", "--out", str(a)]) == 0
    assert cli.main(args + ["--no-diff-update", "--out", str(b)]) == 0
    da = np.loadtxt(a, delimiter=",", skiprows=1)
    db = np.loadtxt(b, delimiter=",", skiprows=1)
    assert np.max(np.abs(da - db)) <= 1e-6


def test_glm_sample_reads_csv(tmp_path):
    data_file = tmp_path / "d.csv"
    gen = np.random.default_rng(0)
    x = gen.standard_normal((50, 2))
    y = (gen.random(50) < 0.5).astype(int)
    np.savetxt(data_file, np.column_stack([x, y]), delimiter=",", fmt="%.8g")
    rc = cli.main(["glm-sample", "--data", str(data_file), "--iters", "20",
                   "--burnin", "5", "--out", str(tmp_path / "o.csv")])
    assert rc == 0


def test_glm_sample_bad_file_is_input_error(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1.0,oops,1\n")
    rc = cli.main(["glm-sample", "--data", str(bad), "--out", str(tmp_path / "o.csv")])
    assert rc == 2
    assert "column 2" in capsys.readouterr().err
    rc = cli.main(["glm-sample", "--data", str(tmp_path / "missing.csv"),
                   "--out", str(tmp_path / "o.csv")])
    assert rc == 2


def test_glm_sample_nonbinary_response_is_input_error(tmp_path):
    bad = tmp_path / "nb.csv"
    bad.write_text("0.5,2\n0.1,0\n")
    assert cli.main(["glm-sample", "--data", str(bad),
                     "--out", str(tmp_path / "o.csv")]) == 2


def test_glm_sample_requires_a_source(tmp_path):
    assert cli.main(["glm-sample", "--out", str(tmp_path / "o.csv")]) == 2


# ---------------------------------------------------------------------------
# ising-denoise
# ---------------------------------------------------------------------------

def _noisy_pbm(tmp_path, shape=(32, 32), rate=0.1):
    img = synthetic_binary_image(*shape)
    noisy = flip_noise(img, rate, seed=3)
    path = tmp_path / "noisy.pbm"
    write_pbm(path, noisy, fmt="P4")
    return img, noisy, path


def test_ising_denoise_end_to_end(tmp_path):
    img, noisy, path = _noisy_pbm(tmp_path)
    out = tmp_path / "restored.pbm"
    trace = tmp_path / "trace.csv"
    rc = cli.main(["ising-denoise", "--in", str(path), "--out", str(out),
                   "--w", "1.0", "--bias", "2.0", "--sweeps", "25", "--burnin", "8",
                   "--seed", "7", "--trace", str(trace)])
    assert rc == 0
    restored = read_pbm(out)
    assert (restored != img).mean() < (noisy != img).mean()
    assert trace.read_text().startswith("sweep,flip_fraction")


def test_ising_denoise_zero_sweeps_is_identity(tmp_path):
    _, noisy, path = _noisy_pbm(tmp_path)
    out = tmp_path / "same.pbm"
    rc = cli.main(["ising-denoise", "--in", str(path), "--out", str(out),
                   "--sweeps", "0", "--burnin", "0"])
    assert rc == 0
    np.testing.assert_array_equal(read_pbm(out), noisy)


def test_ising_denoise_deterministic(tmp_path):
    _, _, path = _noisy_pbm(tmp_path)
    outs = []
    for name in ("r1.pbm", "r2.pbm"):
        out = tmp_path / name
        assert cli.main(["ising-denoise", "--in", str(path), "--out", str(out),
                         "--sweeps", "15", "--burnin", "5", "--seed", "21",
                         "--diff-update"]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_ising_denoise_unreadable_image(tmp_path):
    missing = tmp_path / "nope.pbm"
    assert cli.main(["ising-denoise", "--in", str(missing),
                     "--out", str(tmp_path / "o.pbm")]) == 2
    garbage = tmp_path / "garbage.pbm"
    garbage.write_bytes(b"GIF89a....")
    assert cli.main(["ising-denoise", "--in", str(garbage),
                     "--out", str(tmp_path / "o.pbm")]) == 2


# ---------------------------------------------------------------------------
# hb-bench / rng-bench
# ---------------------------------------------------------------------------

def test_hb_bench_grid(tmp_path):
    out = tmp_path / "hb.csv"
    rc = cli.main(["hb-bench", "--groups", "3", "--K", "3", "--navg", "60,120",
                   "--neval", "1,2", "--modes", "coarse,fine", "--workers", "1",
                   "--sweeps", "1", "--reps", "1", "--out", str(out)])
    assert rc == 0
    _, rows = read_csv_rows(out)
    assert len(rows) == 8  # 2 navg x 2 neval x 2 modes
    assert {r.split(",")[0] for r in rows} == {
        "hb/coarse/neval1", "hb/coarse/neval2", "hb/fine/neval1", "hb/fine/neval2"}


def test_rng_bench_cli(tmp_path):
    out = tmp_path / "rng.csv"
    rc = cli.main(["rng-bench", "--dists", "uniform,gamma", "--modes", "oaat,batch",
                   "--n", "20000", "--out", str(out)])
    assert rc == 0
    _, rows = read_csv_rows(out)
    assert len(rows) == 4


def test_unknown_command_is_usage_error():
    assert cli.main(["frobnicate"]) == 2
    assert cli.main([]) == 2
