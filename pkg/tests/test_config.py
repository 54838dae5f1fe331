import pytest

from evenwave.config import ConfigError, load_config

FULL = """
[problem]
p = 1.45
q = 1.5
n = 6
k = 1.5
data = bump6

[sweep]
eps = 2, 1.4, 1, 0.7
workers = 1

[solver]
dr = 0.1
tmax = 300
confirm = false

[certificate]
A = 0.2
C = 10

[output]
dir = results
"""


def write(tmp_path, text):
    path = tmp_path / "c.ini"
    path.write_text(text)
    return path


def test_full_config(tmp_path):
    cfg = load_config(write(tmp_path, FULL))
    assert (cfg.p, cfg.q, cfg.n, cfg.data) == (1.45, 1.5, 6, "bump6")
    assert cfg.eps_grid == (2.0, 1.4, 1.0, 0.7)
    assert cfg.solver.dr == 0.1 and cfg.solver.tmax == 300 and cfg.solver.confirm is False
    assert cfg.A == 0.2 and cfg.C == 10 and cfg.B == 1.0
    assert cfg.out_dir == "results"
    assert load_config(write(tmp_path, FULL), out_dir="elsewhere").out_dir == "elsewhere"


def test_defaults(tmp_path):
    cfg = load_config(write(tmp_path, "[problem]\np = 1.45\n"))
    assert cfg.q == 1.45 and cfg.k == 1.5 and cfg.out_dir == "out"
    assert cfg.eps_grid == (2.0, 1.4, 1.0, 0.7, 0.5) and cfg.solver.dr == 0.05


@pytest.mark.parametrize(
    "text",
    [
        "[problem]\nq = 1.4\n",
        "[sweep]\neps = 1, 0.5\n",
        "[problem]\np = 1.45\n[mystery]\nx = 1\n",
        "[problem]\np = 1.45\nshape = round\n",
        "[problem]\np = abc\n",
        "[problem]\np = 1.45\n[sweep]\neps = 1, 0.5, 2, 0.1\n",
        "[problem]\np = 1.45\n[sweep]\neps = 1, x\n",
        "[problem]\np = 1.45\ndata = gauss\n",
        "[problem]\np = 1.45\nn = 7\n",
        "[problem]\np = 1.45\n[solver]\nconfirm = perhaps\n",
        "not an ini file",
    ],
)
def test_bad_configs(tmp_path, text):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")
