import json
import subprocess
import sys

import numpy as np
import pytest

from sosfield import cli
from sosfield.acf import exponential_acf, sample_acf
from sosfield.io import load_process, load_table


@pytest.fixture(scope="module")
def tables(tmp_path_factory):
    d = tmp_path_factory.mktemp("tables")
    t3 = d / "t3.json"
    t2 = d / "t2.json"
    assert cli.main(["fit", "--acf", "gauss-exp", "--n", "60", "--max-sweeps", "4", "--seed", "1", "--out", str(t3)]) == 0
    assert cli.main(["fit", "--acf", "exp", "--n", "40", "--dims", "2", "--max-sweeps", "4", "--out", str(t2)]) == 0
    return t3, t2


def _manifest(path):
    return json.loads(path.with_name(path.name + ".manifest.json").read_text())


def test_fit_writes_table_and_manifest(tables, capsys):
    t3, t2 = tables
    s = load_table(t3)
    assert s.n_sinusoids == 60 and s.dims == 3 and s.acf_name == "gauss-exp"
    m = _manifest(t3)
    assert m["command"] == "fit" and m["rng_seed"] == 1
    assert m["outputs"] == [str(t3)]
    assert {"argv", "config", "duration_s", "version"} <= set(m)
    assert load_table(t2).dims == 2


def test_fit_prints_ase(tmp_path, capsys):
    out = tmp_path / "t.json"
    cli.main(["fit", "--acf", "exp", "--n", "5", "--max-sweeps", "1", "--out", str(out)])
    assert "fit_ase_db = " in capsys.readouterr().out


def test_fit_from_acf_file(tmp_path):
    csv = tmp_path / "acf.csv"
    sample_acf(exponential_acf, 5.0, 0.5, 60).to_csv(csv)
    out = tmp_path / "t.json"
    assert cli.main(["fit", "--acf-file", str(csv), "--n", "8", "--max-sweeps", "2", "--out", str(out)]) == 0
    s = load_table(out)
    assert s.d_max == pytest.approx(29.5)
    assert s.decorr_distance == pytest.approx(5.0, abs=0.5)


@pytest.mark.parametrize(
    "argv",
    [
        ["fit", "--acf", "nope", "--out", "x.json"],
        ["fit", "--n", "0", "--out", "{tmp}/x.json"],
        ["fit", "--acf-file", "{tmp}/missing.csv", "--out", "{tmp}/x.json"],
        ["bench", "--n", "", "--out", "{tmp}/b.csv"],
        ["bench", "--n", "a,b", "--out", "{tmp}/b.csv"],
        ["generate", "--out", "{tmp}/g.csv", "--cube", "10"],
        ["rescale", "--table", "{tmp}/missing.json", "--dlambda", "5", "--out", "{tmp}/r.json"],
    ],
)
def test_usage_errors(tmp_path, argv):
    argv = [a.replace("{tmp}", str(tmp_path)) for a in argv]
    try:
        code = cli.main(argv)
    except SystemExit as exc:  # argparse rejections
        code = exc.code
    assert code == 2


def test_unwritable_output(tables, tmp_path):
    t3, _ = tables
    code = cli.main(["rescale", "--table", str(t3), "--dlambda", "5", "--out", str(tmp_path / "no" / "dir" / "r.json")])
    assert code == 2


def test_malformed_table_reports_field(tables, tmp_path, capsys):
    t3, _ = tables
    doc = json.loads(t3.read_text())
    doc["freq_y"] = doc["freq_y"][:3]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert cli.main(["generate", "--table", str(bad), "--cube", "10", "--out", str(tmp_path / "g.csv")]) == 2
    assert "freq_y" in capsys.readouterr().err


def test_generate_grid(tables, tmp_path):
    t3, _ = tables
    out = tmp_path / "g.csv"
    assert cli.main(["generate", "--table", str(t3), "--grid", "10x5", "--spacing", "0.5", "--z", "1.5", "--out", str(out)]) == 0
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    assert out.read_text().splitlines()[0] == "x,y,z,value"
    assert data.shape == (20 * 10, 4)
    assert np.all(data[:, 2] == 1.5)


def test_generate_uniform_and_snapshot(tables, tmp_path):
    t3, _ = tables
    out = tmp_path / "g.csv"
    snap = tmp_path / "p.json"
    assert cli.main(["generate", "--table", str(t3), "--cube", "56", "--count", "300", "--uniform", "--snapshot", str(snap), "--seed", "4", "--out", str(out)]) == 0
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    assert np.all((data[:, 3] > 0) & (data[:, 3] < 1))
    assert np.all((data[:, :3] >= 0) & (data[:, :3] <= 56))
    # the snapshot reproduces the values at fresh positions
    positions = tmp_path / "pos.csv"
    np.savetxt(positions, data[:50, :3], delimiter=",", header="x,y,z", comments="")
    out2 = tmp_path / "g2.csv"
    assert cli.main(["generate", "--process", str(snap), "--positions", str(positions), "--uniform", "--out", str(out2)]) == 0
    again = np.loadtxt(out2, delimiter=",", skiprows=1)
    np.testing.assert_array_equal(again[:, 3], data[:50, 3])
    assert load_process(snap).phases.size == 60
    assert str(snap) in _manifest(out)["outputs"]


def test_generate_rescale(tables, tmp_path):
    t3, _ = tables
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    cli.main(["generate", "--table", str(t3), "--grid", "4x4", "--spacing", "1", "--seed", "2", "--out", str(a)])
    cli.main(["generate", "--table", str(t3), "--grid", "8x8", "--spacing", "2", "--rescale", "20", "--seed", "2", "--out", str(b)])
    va = np.loadtxt(a, delimiter=",", skiprows=1)[:, 3]
    vb = np.loadtxt(b, delimiter=",", skiprows=1)[:, 3]
    np.testing.assert_allclose(vb, va, atol=1e-12)


def test_generate_d2d(tables, tmp_path):
    t3, _ = tables
    out = tmp_path / "d.csv"
    assert cli.main(["generate", "--table", str(t3), "--d2d", str(t3), "--box", "20x20x5", "--count", "100", "--out", str(out)]) == 0
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    assert data.shape == (100, 7)
    shorter = tmp_path / "short.json"
    cli.main(["rescale", "--table", str(t3), "--dlambda", "5", "--out", str(shorter)])
    with pytest.warns(UserWarning, match="d_max"):
        cli.main(["generate", "--table", str(t3), "--d2d", str(shorter), "--grid", "4x4", "--out", str(out)])
    assert cli.main(["generate", "--process", str(t3), "--d2d", str(t3), "--cube", "5", "--out", str(out)]) == 2


def test_rescale_command(tables, tmp_path):
    t3, _ = tables
    out = tmp_path / "r.json"
    assert cli.main(["rescale", "--table", str(t3), "--dlambda", "20", "--out", str(out)]) == 0
    np.testing.assert_array_equal(load_table(out).freqs, load_table(t3).freqs / 2)
    assert cli.main(["rescale", "--table", str(t3), "--dlambda", "0", "--out", str(out)]) == 2


def test_validate_cdf(tables, tmp_path, capsys):
    t3, _ = tables
    out = tmp_path / "cdf.csv"
    # a 60-sinusoid table has a few very slow components that do not average out
    # over one realization of the box, so the plumbing check uses a looser threshold
    assert cli.main(["validate", "cdf", "--table", str(t3), "--count", "2000", "--tolerance", "0.15", "--out", str(out)]) == 0
    assert "PASS cdf" in capsys.readouterr().out
    assert out.read_text().startswith("quantile,empirical,gaussian\n")
    # shifted values fail
    vals = tmp_path / "v.csv"
    np.savetxt(vals, np.c_[np.zeros((500, 3)), np.random.default_rng(0).normal(1.0, 1.0, 500)], delimiter=",", header="x,y,z,value", comments="")
    assert cli.main(["validate", "cdf", "--values", str(vals), "--out", str(out)]) == 1


def test_validate_plane_ase(tables, tmp_path, capsys):
    t3, t2 = tables
    out = tmp_path / "p.csv"
    assert cli.main(["validate", "plane-ase", "--table", str(t2), "--out", str(out)]) == 0
    assert "PASS plane-ase" in capsys.readouterr().out
    code = cli.main(["validate", "plane-ase", "--table", str(t3), "--out", str(out)])
    text = capsys.readouterr().out
    assert code in (0, 1)
    assert "info: ASE over 2000 directions" in text
    assert cli.main(["validate", "plane-ase", "--out", str(out)]) == 2


def test_validate_acf_small(tables, tmp_path, capsys):
    t3, _ = tables
    out = tmp_path / "a.csv"
    code = cli.main(["validate", "acf", "--table", str(t3), "--count", "800", "--repeats", "2", "--max-distance", "10", "--tolerance", "1.0", "--out", str(out)])
    assert code == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "bin_center,mean_corr,min_corr,max_corr,pair_count,target"
    # tight tolerance fails
    assert cli.main(["validate", "acf", "--table", str(t3), "--count", "300", "--repeats", "1", "--tolerance", "0.0001", "--out", str(out)]) == 1
    assert "FAIL acf" in capsys.readouterr().out


def test_validate_acf_from_values(tables, tmp_path):
    t3, _ = tables
    vals = tmp_path / "v.csv"
    cli.main(["generate", "--table", str(t3), "--cube", "20", "--count", "500", "--out", str(vals)])
    out = tmp_path / "a.csv"
    assert cli.main(["validate", "acf", "--values", str(vals), "--table", str(t3), "--max-distance", "9", "--tolerance", "1.0", "--out", str(out)]) == 0
    assert cli.main(["validate", "acf", "--values", str(vals), "--out", str(out)]) == 2


def test_validate_d2d_reports_undefined(tables, tmp_path, capsys):
    t3, _ = tables
    out = tmp_path / "d.csv"
    code = cli.main(["validate", "acf-d2d", "--table", str(t3), "--count", "300", "--repeats", "1", "--max-distance", "9", "--tolerance", "2.5", "--out", str(out)])
    text = capsys.readouterr().out
    assert code == 0
    # with 300 links nearly no pair has both ends within 2 m
    assert "undefined" in text
    assert "undefined" in out.read_text()


def test_bench(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert cli.main(["bench", "--n", "10,20", "--positions", "5000", "--repeats", "1", "--dims", "2", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "linear fit" in text
    rows = np.loadtxt(out, delimiter=",", skiprows=1)
    assert rows[:, 4].tolist() == [30, 60]


def test_rerun_byte_identical(tables, tmp_path):
    t3, _ = tables
    out = tmp_path / "g.csv"
    cli.main(["generate", "--table", str(t3), "--cube", "30", "--count", "200", "--seed", "9", "--out", str(out)])
    first = out.read_bytes()
    out.unlink()
    assert cli.main(["rerun", str(out) + ".manifest.json"]) == 0
    assert out.read_bytes() == first
    assert cli.main(["rerun", str(tmp_path / "missing.json")]) == 2


def test_console_entry_point(tmp_path):
    out = tmp_path / "r.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "sosfield.cli", "bench", "--n", "5", "--positions", "100", "--repeats", "1", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
