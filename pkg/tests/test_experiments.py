import csv
import io
import subprocess
import sys
from pathlib import Path

import pytest

from hetshrink import cli
from hetshrink.experiments import (
    CELL_HEADER,
    DEFAULT_SEED,
    ConfigError,
    ExperimentConfig,
    override,
    parse_config,
    parse_config_text,
    render,
    render_cells,
    run_check_suite,
    run_table1,
    run_table2,
)

ROOT = Path(__file__).resolve().parents[1]
SMALL = ExperimentConfig(a_list=(1.01, 1.5), m_grid=(0.0, 2.0, 40.0), tau_grid=(1.0, 20.0), n_mc=20_000, n_sure=20_000)


def test_shipped_config_is_the_default():
    assert parse_config(ROOT / "configs" / "default.conf") == ExperimentConfig()


def test_default_seed_is_fixed():
    assert parse_config_text("p = 10\n").seed == DEFAULT_SEED == 0xC0FFEE


def test_parse_values_and_comments():
    cfg = parse_config_text("# header\na_list = 1.1, 1.2  # trailing\nseed = 0x10\nestimators = GB\n\n")
    assert cfg.a_list == (1.1, 1.2) and cfg.seed == 16 and cfg.estimators == ("GB",)


@pytest.mark.parametrize(
    "text,fragment",
    [
        ("m_grid =\n", "m_grid must be non-empty"),
        ("p = 10\nbogus = 3\n", ":2: unknown key 'bogus'"),
        ("p = 10\np = 11\n", ":2: duplicate key 'p'"),
        ("n_mc = lots\n", ":1: bad value for 'n_mc'"),
        ("just words\n", ":1: expected 'key = value'"),
        ("n_mc = 1\n", "sample counts"),
        ("tau_grid = 0, 1\n", "tau_grid"),
        ("a_list = 0.9\n", "a_list"),
        ("engine = magic\n", "engine"),
        ("seed = -1\n", "seed"),
        ("output_format = xml\n", "output_format"),
    ],
)
def test_parse_errors(text, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config_text(text, "cfg")
    assert fragment in str(info.value)


def test_override_ignores_none():
    cfg = override(ExperimentConfig(), p=5, seed=None)
    assert cfg.p == 5 and cfg.seed == DEFAULT_SEED


def test_table1_shape_and_engines():
    cells = run_table1(SMALL)
    assert len(cells) == 2 * 2 * 3
    assert {c.engine for c in cells if c.index >= 10} == {"SURE"}
    assert {c.engine for c in cells if c.index < 10} == {"MC"}
    assert all(c.n == 20_000 for c in cells)


def test_table2_mle_row_is_zero():
    cells = run_table2(override(SMALL, estimators=("MLE",)))
    assert all(abs(c.value) <= 3 * c.stderr + 1e-12 for c in cells)


def test_tables_deterministic_and_worker_independent():
    a = render_cells(run_table2(SMALL), "csv")
    b = render_cells(run_table2(override(SMALL, workers=2)), "csv")
    assert a == b == render_cells(run_table2(SMALL), "csv")


def test_check_suite_examples():
    rows = {(r.estimator, r.a, r.kind): r for r in run_check_suite(ExperimentConfig(a_list=(1.01, 1.25, 1.5)))}
    assert rows[("GB", 1.01, "ordinary")].holds and rows[("GB", 1.01, "ensemble")].holds
    assert not rows[("GB", 1.5, "ordinary")].holds and rows[("GB", 1.5, "ensemble")].holds
    js = rows[("JS", 1.25, "ensemble")]
    assert js.holds and js.method == "ANALYTIC"


def test_render_formats():
    rows = [("a,b", 1.23456789, 3, True, None)]
    header = ("name", "x", "n", "flag", "empty")
    parsed = list(csv.reader(io.StringIO(render(rows, header, "csv"))))
    assert parsed == [list(header), ["a,b", "1.23457", "3", "true", ""]]
    md = render([("x|y", 0.5)], ("k", "v"), "md").splitlines()
    assert md[0] == "| k | v |" and md[1] == "|---|---|" and md[2] == "| x\\|y | 0.5 |"
    with pytest.raises(ValueError):
        render(rows, header, "xml")


# -- command line -------------------------------------------------------------


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_phi_eval(capsys):
    code, out, _ = run_cli(capsys, "phi-eval", "--z", "0,8", "--phi", "stein:8,8", "--output", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[1]["phi"] == "4" and rows[0]["phi_over_z"] == "1"


def test_cli_estimate(capsys):
    code, out, _ = run_cli(capsys, "estimate", "--x", "2,2,2", "--estimator", "js", "--sigma2", "1,1,1", "--output", "csv")
    assert code == 0
    assert out.startswith("z = 12\n")
    rows = list(csv.DictReader(io.StringIO(out.split("\n", 1)[1])))
    assert float(rows[0]["factor"]) == pytest.approx(1 - 1 / 13)


def test_cli_risk_and_bayes(capsys):
    code, out, _ = run_cli(capsys, "risk", "--a", "1.5", "--m", "2", "--n", "5000", "--engine", "sure", "--output", "csv")
    assert code == 0 and "SURE" in out
    code, out, _ = run_cli(capsys, "bayes-risk", "--a", "1.01", "--tau", "1", "--n", "5000", "--engine", "dirichlet")
    assert code == 0 and "DIRICHLET" in out


def test_cli_table_overrides_config(tmp_path, capsys):
    conf = tmp_path / "small.conf"
    conf.write_text("a_list = 1.25\nm_grid = 0\nn_mc = 3000\nestimators = GB\n")
    code, out, _ = run_cli(capsys, "table1", "--config", str(conf), "--estimators", "JS", "--output", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert tuple(rows[0]) == CELL_HEADER
    assert [r["estimator"] for r in rows] == ["JS"] and rows[0]["n"] == "3000"


def test_cli_output_file_byte_identical(tmp_path, capsys):
    args = ["table2", "--a-list", "1.05", "--tau-grid", "1,5", "--n-mc", "4000", "--seed", "7"]
    first, second = tmp_path / "a.md", tmp_path / "b.md"
    assert cli.main(args + ["--out", str(first)]) == 0
    assert cli.main(args + ["--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    assert capsys.readouterr().out == ""


def test_cli_check(capsys):
    code, out, _ = run_cli(capsys, "check", "--a-list", "1.5", "--estimators", "GB")
    assert code == 0 and "| GB | 1.5 | ordinary | false |" in out


def test_cli_errors(tmp_path, capsys):
    bad = tmp_path / "bad.conf"
    bad.write_text("p = 10\nwhat = 1\n")
    code, _, err = run_cli(capsys, "table1", "--config", str(bad))
    assert code == 2 and "bad.conf:2" in err
    code, _, err = run_cli(capsys, "phi-eval", "--z", "-1")
    assert code == 2 and "z must be >= 0" in err
    with pytest.raises(SystemExit):
        cli.main(["table1", "--engine", "nope"])


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "hetshrink", "phi-eval", "--z", "1", "--output", "csv"],
        capture_output=True, text=True, check=True,
    )
    assert proc.stdout.splitlines()[0] == "z,phi,phi_prime,phi_over_z"
