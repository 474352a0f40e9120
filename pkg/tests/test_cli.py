import json
import math

import pytest

from zigzag import cli, diagnostics, io, model

SMALL = ["--dim", "3", "--rho", "0.5"]


def run(tmp_path, *argv):
    return cli.main([*argv, "--out-dir", str(tmp_path)])


def read(path):
    with open(path) as fh:
        return fh.read()


def test_sample_is_byte_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run(out, "sample", *SMALL, "--n-samples", "50", "--seed", "7") == 0
    for name in ("samples.csv", "diagnostics.csv"):
        assert read(a / name) == read(b / name)
    header, rows = io.read_csv(a / "samples.csv")
    assert header == ["replicate", "sample", "events", "x1", "x2", "x3"]
    assert len(rows) == 50 and all(min(r[3:]) >= 0 for r in rows)


def test_seed_changes_output(tmp_path):
    run(tmp_path / "a", "sample", *SMALL, "--n-samples", "20", "--seed", "1")
    run(tmp_path / "b", "sample", *SMALL, "--n-samples", "20", "--seed", "2")
    assert read(tmp_path / "a" / "samples.csv") != read(tmp_path / "b" / "samples.csv")


@pytest.mark.parametrize("sampler", ["markovian", "hzz-fixed-T"])
def test_sample_other_kernels(tmp_path, sampler):
    assert run(tmp_path, "sample", *SMALL, "--n-samples", "20", "--sampler", sampler) == 0
    _, rows = io.read_csv(tmp_path / "diagnostics.csv")
    assert {r[0] for r in rows} == {sampler}


def test_config_file_and_flag_precedence(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"dim": 2, "n_samples": 15, "seed": 4}))
    assert run(tmp_path, "sample", "--config", str(conf), "--n-samples", "12") == 0
    header, rows = io.read_csv(tmp_path / "samples.csv")
    assert len(header) == 5 and len(rows) == 12


@pytest.mark.parametrize(
    "content,needle",
    [("{not json", "line 1"), ('{"dimm": 3}', "dimm"), ('{"rho": 1.5}', "rho"), ('{"replicates": 0}', "replicates"),
     ('{"seed": null}', "seed"), ("[1, 2]", "object"), ('{"sampler": "gibbs"}', "sampler")],
)
def test_config_errors_exit_2(tmp_path, capsys, content, needle):
    conf = tmp_path / "c.json"
    conf.write_text(content)
    assert run(tmp_path, "sample", "--config", str(conf)) == 2
    assert needle in capsys.readouterr().err


def test_missing_files(tmp_path, capsys):
    assert run(tmp_path, "sample", "--config", str(tmp_path / "none.json")) == 2
    assert run(tmp_path, "sample", "--target-file", str(tmp_path / "none.txt")) == 2
    assert "target_file" in capsys.readouterr().err


def test_target_file(tmp_path):
    path = tmp_path / "t.txt"
    io.save_target(path, model.ar1_target(2, 0.3, orthant=[1, 0]))
    assert run(tmp_path, "sample", "--target-file", str(path), "--n-samples", "20") == 0
    bad = tmp_path / "bad.txt"
    bad.write_text("2\n0 0\n1 0\n0 1\n* ?\n")
    assert run(tmp_path, "sample", "--target-file", str(bad)) == 2


def test_x0_outside_support(tmp_path, capsys):
    assert run(tmp_path, "sample", *SMALL, "--x0", "-1") == 2
    assert "x0" in capsys.readouterr().err


def test_couple_requires_replicates_and_smooth_target(tmp_path, capsys):
    assert run(tmp_path, "couple", "--replicates", "50") == 2
    assert run(tmp_path, "couple", "--orthant", "positive", "--dim", "4", "--replicates", "100") == 2
    err = capsys.readouterr().err
    assert "100" in err and "untruncated" in err


def test_couple_output(tmp_path):
    argv = ["couple", "--dim", "2", "--rho", "0.5", "--replicates", "100", "--scales", "0.4", "0.2", "--horizon", "2"]
    assert run(tmp_path, *argv) == 0
    header, rows = io.read_csv(tmp_path / "divergence.csv")
    assert len(rows) == 2 and header[0] == "dt"


def test_duel_summary(tmp_path):
    argv = ["duel", *SMALL, "--n-samples", "30", "--replicates", "2"]
    assert run(tmp_path, *argv) == 0
    _, rows = io.read_csv(tmp_path / "summary.csv")
    assert [r[0] for r in rows] == ["x1", "pc", "min_coord"]
    for r in rows:
        assert r[3] == 2 and r[-1] == pytest.approx((r[4] / r[5]) / (r[6] / r[7]))
    _, diag = io.read_csv(tmp_path / "diagnostics.csv")
    assert len(diag) == 2 * 2 * 3


def test_duel_summary_averages_before_dividing():
    rows = [["a", 0, "x1", 10.0, 100, 0.1], ["a", 1, "x1", 30.0, 300, 0.1],
            ["b", 0, "x1", 5.0, 100, 0.05], ["b", 1, "x1", 5.0, 100, 0.05]]
    (out,) = cli.duel_summary(rows, "a", "b")
    assert out[-1] == pytest.approx((20 / 200) / (5 / 100))


def test_figure_sq_distance_benchmark(tmp_path):
    argv = ["figure", "sq-distance", "--family", "ar1", "--dim", "16", "--rho", "0.9", "--x0", "-1"]
    assert cli.main(argv + ["--out-dir", str(tmp_path), "--events", "200"]) == 0
    header, rows = io.read_csv(tmp_path / "sq_distance.csv")
    bench = diagnostics.expected_squared_distance(model.ar1_target(16, 0.9), [-1.0] * 16)
    assert {r[0] for r in rows} == {"hamiltonian", "markovian"} and len(rows) == 400
    assert all(r[-1] == bench for r in rows)


def test_figure_trajectory_and_traceplot(tmp_path):
    assert run(tmp_path, "figure", "trajectory", "--dim", "4", "--rho", "0.5", "--events", "50") == 0
    _, rows = io.read_csv(tmp_path / "trajectory.csv")
    assert len(rows) == 2 * 51
    argv = ["figure", "traceplot", "--family", "compound-symmetric", "--dim", "4", "--rho", "0.5",
            "--orthant", "positive", "--n-samples", "20"]
    assert run(tmp_path, *argv) == 0
    _, rows = io.read_csv(tmp_path / "traceplot.csv")
    assert rows[0][0] == "zigzag-nuts" and rows[-1][0] == "markovian"


def test_figure_unknown_name_rejected():
    with pytest.raises(SystemExit):
        cli.main(["figure", "histogram"])


def test_eigen(tmp_path):
    assert run(tmp_path, "eigen", "--dim", "64", "--rho", "0.9") == 0
    _, (row,) = io.read_csv(tmp_path / "eigen.csv")
    assert row[2] == pytest.approx(1 / (1 + 63 * 0.9), rel=1e-6) and row[4] == 1
    assert row[-1] == pytest.approx(0.1 * math.sqrt(1 + 63 * 0.9), rel=1e-6)
