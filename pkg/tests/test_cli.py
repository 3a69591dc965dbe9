import json
import math

import pytest

from hardylab.cli import DEFAULTS, build_config, load_config, main, parse_config
from hardylab.errors import ConfigError

BASE = """
# minimal configuration
N = 3
k = 3
s = 0.5
alpha = 0
g_amp = 1
g_eps = 0.3
r0 = 0.2
modes = 16
seed = 0
grids.r = 16
grids.trials = 20
"""


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_parse_config_types():
    d = parse_config(BASE)
    assert d["N"] == 3 and isinstance(d["N"], int)
    assert d["alpha"] == 0.0 and d["grids.r"] == 16
    assert d["grids.theta"] == DEFAULTS["grids.theta"]


@pytest.mark.parametrize("text", [
    "N = 3\n",                      # missing keys
    BASE + "bogus = 1\n",           # unknown key
    BASE + "N = 4\n",               # duplicate key
    BASE.replace("modes = 16", "modes = 1.5"),
    BASE + "just text\n",
])
def test_parse_config_rejects(text):
    with pytest.raises(ConfigError):
        parse_config(text)


@pytest.mark.parametrize("change", [
    ("alpha = 0", "alpha = 0.25"),   # alpha at the Hardy constant
    ("modes = 16", "modes = 0"),     # empty mode request
    ("r0 = 0.2", "r0 = 0.5"),        # coercivity margin negative
    ("seed = 0", ""),                # missing key
])
def test_cli_config_errors_exit_2(tmp_path, change):
    path = write(tmp_path, BASE.replace(*change))
    assert main(["spectrum", "--config", str(path), "--outdir", str(tmp_path / "o")]) == 2


def test_cli_usage_error():
    assert main(["nonsense"]) == 2


def test_coercivity_uses_galerkin_constant():
    cfg = build_config(parse_config(BASE))
    assert cfg.c_g > 1.0
    assert cfg.params.coercivity_margin(cfg.c_g) > 0


def test_spectrum_default(tmp_path):
    out = tmp_path / "o"
    assert main(["spectrum", "--outdir", str(out)]) == 0
    rep = json.loads((out / "spectrum.json").read_text())
    assert rep["mu_1"] == pytest.approx(math.pi ** 2, rel=1e-14)
    assert (out / "catalog.csv").exists()
    assert all("tolerance" in a for a in rep["audits"])


def test_sphere_identity_case(tmp_path):
    out = tmp_path / "o"
    assert main(["sphere", "--config", str(write(tmp_path, BASE)), "--outdir", str(out)]) == 0
    rep = json.loads((out / "sphere.json").read_text())
    assert abs(rep["audits"][0]["numeric"]) <= 1e-6


def test_sphere_k_below_n(tmp_path):
    text = BASE.replace("N = 3", "N = 5").replace("alpha = 0", "alpha = 0.05")
    out = tmp_path / "o"
    assert main(["sphere", "--config", str(write(tmp_path, text)), "--outdir", str(out)]) == 0
    assert (out / "sprime_spectrum.csv").exists()


def test_sphere_coarse_grid_fails(tmp_path, capsys):
    path = write(tmp_path, BASE + "grids.theta = 10\n")
    assert main(["sphere", "--config", str(path), "--outdir", str(tmp_path / "o")]) == 1
    assert "refine grids.theta" in capsys.readouterr().err


def test_frequency_homogeneous(tmp_path):
    text = BASE.replace("alpha = 0", "alpha = -0.75").replace("r0 = 0.2", "r0 = 0.5")
    text += "field = homogeneous\nfield_index = 1\n"
    out = tmp_path / "o"
    assert main(["frequency", "--config", str(write(tmp_path, text)), "--outdir", str(out)]) == 0
    rep = json.loads((out / "frequency.json").read_text())
    names = {a["name"] for a in rep["audits"]}
    assert {"frequency_constancy", "monotone_drop"} <= names


def test_blowup_mode(tmp_path):
    text = BASE.replace("alpha = 0", "alpha = -0.75").replace("r0 = 0.2", "r0 = 0.5")
    text += "field = mode\n"
    out = tmp_path / "o"
    assert main(["blowup", "--config", str(write(tmp_path, text)), "--outdir", str(out)]) == 0
    rep = json.loads((out / "blowup.json").read_text())
    assert rep["report"]["gamma_predicted"] == pytest.approx(0.5, abs=1e-4)


def test_verify_all_and_sabotage(tmp_path):
    good = tmp_path / "good"
    assert main(["verify-all", "--config", str(write(tmp_path, BASE)), "--outdir", str(good)]) == 0
    path = write(tmp_path, BASE + "c_s_scale = 1.01\n", "bad.cfg")
    bad = tmp_path / "bad"
    assert main(["verify-all", "--config", str(path), "--outdir", str(bad)]) == 1
    rep = json.loads((bad / "verify_all.json").read_text())
    assert not rep["results"]["frequency"]["passed"]
    assert "hprime_residual" in rep["results"]["frequency"]["failed"]


def test_seed_flag_overrides(tmp_path):
    cfg = load_config(write(tmp_path, BASE), seed=5, outdir=tmp_path / "x")
    assert cfg.seed == 5 and cfg.outdir == tmp_path / "x"
