import math

import pytest

from evenwave.cli import main
from evenwave.scaling import read_csv

CHEAP = """
[problem]
p = 1.45
q = 1.45
n = 6
k = 1.5
data = bump4

[sweep]
eps = 16, 12, 8, 6

[solver]
dr = 0.1
tmax = 300

[certificate]
A = 0.2
C = 10
"""


@pytest.fixture
def cheap(tmp_path):
    path = tmp_path / "cheap.ini"
    path.write_text(CHEAP)
    return path


def test_exponents(tmp_path, capsys):
    assert main(["exponents", "--p", "1.6", "--n", "6", "--out", str(tmp_path)]) == 0
    rows = {row["name"]: row["value"] for row in read_csv(tmp_path / "exponents.csv")}
    assert rows["branch"] == "Supercritical" and float(rows["strauss_root"]) == pytest.approx((7 + math.sqrt(89)) / 10)
    assert "branch" in capsys.readouterr().out


def test_invalid_input_exit_code(tmp_path):
    assert main(["exponents", "--p", "0.5", "--out", str(tmp_path)]) == 2
    assert main(["exponents", "--p", "1.6", "--n", "7", "--out", str(tmp_path)]) == 2
    assert main(["sweep", "--out", str(tmp_path)]) == 2


def test_region_map(tmp_path):
    assert main(["--out", str(tmp_path), "region-map", "--res", "4"]) == 0
    assert len(read_csv(tmp_path / "region_map.csv")) == 16


def test_free_solve(tmp_path):
    assert main(["free-solve", "--nr", "5", "--nt", "3", "--level", "3", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "free_solution.csv")
    assert len(rows) == 15 and float(rows[0]["t"]) == 0.0


def test_fd_solve(tmp_path):
    args = ["fd-solve", "--p", "1.45", "--eps", "8", "--tmax", "100", "--nr", "1000", "--out", str(tmp_path)]
    assert main(args) == 0
    series = read_csv(tmp_path / "timeseries.csv")
    assert float(series[-1]["max_u"]) >= 1e3 * float(series[0]["max_u"]) * 0.99
    assert (tmp_path / "snapshot.csv").exists()


def test_sweep_then_certify(tmp_path, cheap):
    out = tmp_path / "o"
    assert main(["--config", str(cheap), "--out", str(out), "sweep"]) == 0
    fit = read_csv(out / "fit.csv")[0]
    assert fit["passed"] == "true"
    before = (out / "sweep.csv").read_bytes()
    assert main(["certify", "--config", str(cheap), "--out", str(out)]) == 0
    assert (out / "sweep.csv").read_bytes() == before
    rows = read_csv(out / "certificate.csv")
    assert all(row["consistent"] == "true" for row in rows)
    assert all(float(row["t_blow"]) > 0 for row in rows)
