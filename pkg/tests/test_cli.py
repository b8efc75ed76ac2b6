import json
import subprocess
import sys

import pytest

from furstlab.cli import ExperimentConfig, int_list, load_config, main
from furstlab.errors import ConfigError


def run_lab(tmp_path, sub, body, *extra, name="run"):
    cfg = tmp_path / f"{name}.ini"
    cfg.write_text(body)
    out = tmp_path / name
    code = main([sub, "--config", str(cfg), "--out", str(out), *extra])
    return code, out


def body_lines(path):
    return [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]


def test_orbit_example(tmp_path):
    code, out = run_lab(tmp_path, "orbit", "[orbit]\nx = 1/7\nq = 3\nL = 7\n")
    assert code == 0
    rows = body_lines(out / "orbit.csv")
    assert rows[0] == "n,point" and len(rows) == 8
    assert rows[1].split(",")[1] == rows[-1].split(",")[1] == "1/7"
    assert json.loads((out / "summary.json").read_text())["result"]["period"] == 6


def test_config_is_echoed_in_headers(tmp_path):
    code, out = run_lab(tmp_path, "orbit", "[orbit]\nx = 1/7\nq = 3\nL = 7\n", "--seed", "9")
    head = [ln for ln in (out / "orbit.csv").read_text().splitlines() if ln.startswith("#")]
    assert head == ["# subcommand = orbit", "# seed = 9", "# x = 1/7", "# digits = 60",
                    "# q = 3", "# L = 7"]


def test_entropy_example(tmp_path):
    code, out = run_lab(tmp_path, "entropy",
                        "[entropy]\nspec = kind=geometric, c=2\nq = 6\nN_max = 8\n")
    assert code == 0
    assert (out / "entropy_p2.csv").exists() and (out / "entropy_p3.csv").exists()
    res = json.loads((out / "summary.json").read_text())["result"]
    assert res["verdict_text"] == "positive via p=3"


def test_padic_example(tmp_path):
    code, out = run_lab(tmp_path, "padic", "[padic]\na = 3\np = 2\n")
    assert code == 0
    cert = json.loads((out / "summary.json").read_text())["result"]["certificates"][0]
    assert cert["S"] == 2 and cert["guard_ok"] is True and cert["v_log"] == 3


def test_dim_subcommand(tmp_path):
    code, out = run_lab(tmp_path, "dim", "[dim]\nsource = grid:729\nd_min = 1/729\nd_max = 1/3\n")
    assert code == 0
    assert abs(json.loads((out / "summary.json").read_text())["result"]["slope"] - 1) < 0.02


def test_pipeline_prototype(tmp_path):
    body = ("[pipeline]\nq = 6\na = kind=geometric, c=5\nb = kind=double_exp, c=2, d=2\n"
            "x = sqrt2\nN_range = 1-2\n")
    code, out = run_lab(tmp_path, "pipeline", body)
    assert code == 0
    table = body_lines(out / "hypotheses.csv")
    assert "q_host,2,norm_to_zero,2 4 8 16 32 64 64 64,pass" in table
    assert "q_host,3,stride,S=2 v_log=1,pass" in table
    for name in ("growth.csv", "density.csv", "summary.json"):
        assert (out / name).exists()


def test_pipeline_polynomial_b(tmp_path):
    body = "[pipeline]\nq = 6\na = kind=geometric, c=5\nb = kind=polynomial, p=n^2+1\nN_range = 1\n"
    code, out = run_lab(tmp_path, "pipeline", body)
    assert code == 0
    assert "q_host,2,continuity,plausible,pass" in body_lines(out / "hypotheses.csv")


def test_pipeline_degenerate_a_is_hypothesis_violation(tmp_path, capsys):
    body = "[pipeline]\nq = 6\na = kind=polynomial, p=7\nb = kind=double_exp, c=2, d=2\n"
    code, out = run_lab(tmp_path, "pipeline", body)
    assert code == 5
    assert "stage (i)" in capsys.readouterr().err
    assert not (out / "summary.json").exists()


@pytest.mark.parametrize("sub,body", [
    ("orbit", "[orbit]\nx = 1/7\nq = 3\n"),                      # missing key
    ("orbit", "[orbit]\nx = 1/7\nq = 3\nL = 7\ncolour = red\n"),  # unknown key
    ("orbit", "[entropy]\nq = 3\n"),                              # wrong section
    ("orbit", "[orbit]\nx = 1/7\nq = three\nL = 7\n"),           # bad value
    ("entropy", "[entropy]\nspec = kind=zeta\nq = 6\n"),         # bad spec
    ("orbit", "[orbit]\nx = pi\nq = 3\nL = 7\n"),                 # unsupported tag
])
def test_config_errors_exit_2(tmp_path, sub, body):
    assert run_lab(tmp_path, sub, body)[0] == 2


def test_missing_config_file_exit_2(tmp_path):
    assert main(["orbit", "--config", str(tmp_path / "nope.ini")]) == 2


def test_unknown_subcommand_exit_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["fly", "--config", "x.ini"])
    assert exc.value.code == 2


def test_precision_error_exit_3(tmp_path):
    assert run_lab(tmp_path, "orbit", "[orbit]\nx = sqrt2\ndigits = 20\nq = 3\nL = 50\n")[0] == 3


def test_guard_error_exit_4(tmp_path):
    assert run_lab(tmp_path, "padic", "[padic]\na = 4\np = 2\n")[0] == 4


def test_measure_with_checks_is_deterministic(tmp_path):
    body = "[measure]\nq = 3\na = kind=geometric, c=2\nN_range = 1-2\nchecks = 20\n"
    c1, o1 = run_lab(tmp_path, "measure", body, "--seed", "3", name="a")
    c2, o2 = run_lab(tmp_path, "measure", body, "--seed", "3", name="b")
    assert c1 == c2 == 0
    for f in ("growth.csv", "witnesses.csv", "inequalities.csv"):
        assert (o1 / f).read_bytes() == (o2 / f).read_bytes()


def test_density_byte_identical_across_seeds(tmp_path):
    body = ("[density]\na = kind=polynomial, p=n\nb = kind=polynomial, p=n\n"
            "c = kind=geometric, c=2\nmax_index = 20,20,5\nmax_product = 10^6\n")
    _, o1 = run_lab(tmp_path, "density", body, "--seed", "1", name="a")
    _, o2 = run_lab(tmp_path, "density", body, "--seed", "2", name="b")
    assert body_lines(o1 / "density.csv") == body_lines(o2 / "density.csv")


def test_load_config_and_seeded_generators(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[orbit]\nseed = 4\nx = 1/5\nq = 2\nL = 3\n")
    cfg = load_config(p, "orbit")
    assert isinstance(cfg, ExperimentConfig) and cfg.seed == 4
    assert cfg.rng("a").random() == load_config(p, "orbit").rng("a").random()
    assert cfg.rng("a").random() != cfg.rng("b").random()
    with pytest.raises(ConfigError):
        load_config(p, "nonsense")


def test_int_list():
    assert int_list("1-4") == (1, 2, 3, 4)
    assert int_list("3, 5") == (3, 5)


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[orbit]\nx = 1/3\nq = 2\nL = 2\n")
    proc = subprocess.run([sys.executable, "-m", "furstlab", "orbit", "--config", str(cfg),
                           "--out", str(tmp_path / "o")], capture_output=True)
    assert proc.returncode == 0
