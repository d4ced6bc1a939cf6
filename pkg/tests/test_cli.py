from pathlib import Path

import pytest

from mallows_lab.cli import main
from mallows_lab.runner import EXIT_CONFIG, EXIT_GUARD, EXIT_OK, run_experiment
from mallows_lab.verify import verify_suite

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL = """[model]
coupling = finite_range
J = 0.2
spins = interval
N = 128
boundary = periodic
burn_in = 40
R = 200
seed = 3

[analysis]
n = 8, 32, 128
r = 1, 2, 3
max_lag = 16

[output]
directory = {out}
"""


def _write(tmp_path, text, name="exp.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_run_writes_all_artifacts(tmp_path):
    cfg = _write(tmp_path, SMALL.format(out=tmp_path / "a"))
    assert main(["run", str(cfg)]) == EXIT_OK
    out = tmp_path / "a"
    names = sorted(p.name for p in out.iterdir())
    assert names == ["blocks.csv", "covariance.csv", "manifest.txt", "plotdata_r1.tsv", "plotdata_r2.tsv", "plotdata_r3.tsv", "report.csv"]
    tsv = (out / "plotdata_r2.tsv").read_text().splitlines()
    assert tsv[0] == "# n\td_r" and [line.split("\t")[0] for line in tsv[1:]] == ["8", "32", "128"]
    manifest = (out / "manifest.txt").read_text()
    assert "build: " in manifest and "wall_clock_seconds" in manifest and "seed_rule" in manifest
    assert "[model]" in manifest and "J = 0.20000000000000001" in manifest
    assert len((out / "report.csv").read_text().splitlines()) == 1 + 3 * 3


def test_rerun_is_byte_identical(tmp_path):
    cfg = _write(tmp_path, SMALL.format(out="unused"))
    assert main(["--no-cache", "--out-dir", str(tmp_path / "a"), "run", str(cfg)]) == EXIT_OK
    assert main(["--out-dir", str(tmp_path / "b"), "--cache-dir", str(tmp_path / "c"), "run", str(cfg)]) == EXIT_OK
    assert main(["--out-dir", str(tmp_path / "d"), "--cache-dir", str(tmp_path / "c"), "run", str(cfg)]) == EXIT_OK
    for name in ("report.csv", "covariance.csv", "blocks.csv", "plotdata_r2.tsv"):
        body = (tmp_path / "a" / name).read_bytes()
        assert (tmp_path / "b" / name).read_bytes() == body
        assert (tmp_path / "d" / name).read_bytes() == body
    assert "cache: hit" in (tmp_path / "d" / "manifest.txt").read_text()


def test_seed_override_changes_output(tmp_path):
    cfg = _write(tmp_path, SMALL.format(out="unused"))
    main(["--out-dir", str(tmp_path / "a"), "run", str(cfg)])
    main(["--seed", "4", "--out-dir", str(tmp_path / "b"), "run", str(cfg)])
    assert (tmp_path / "a" / "report.csv").read_bytes() != (tmp_path / "b" / "report.csv").read_bytes()


def test_threads_do_not_change_output(tmp_path):
    cfg = _write(tmp_path, SMALL.format(out="unused"))
    main(["--no-cache", "--out-dir", str(tmp_path / "a"), "run", str(cfg)])
    main(["--no-cache", "--threads", "3", "--out-dir", str(tmp_path / "b"), "run", str(cfg)])
    assert (tmp_path / "a" / "report.csv").read_bytes() == (tmp_path / "b" / "report.csv").read_bytes()


def test_malformed_config_exits_2(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL.format(out=tmp_path).replace("J = 0.2", "J = -1"))
    assert main(["run", str(cfg)]) == EXIT_CONFIG
    assert "line 3:" in capsys.readouterr().err


def test_invalid_experiment_exits_2(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL.format(out=tmp_path).replace("n = 8, 32, 128", "n = 8, 32, 256"))
    assert main(["run", str(cfg)]) == EXIT_CONFIG
    assert "exceeds" in capsys.readouterr().err


def test_tail_guard_exits_3(tmp_path, capsys):
    text = SMALL.format(out=tmp_path).replace("coupling = finite_range\nJ = 0.2", "coupling = long_range\nbeta = 0.05\nalpha = 1.5\nR_cut = 2")
    assert main(["run", str(_write(tmp_path, text))]) == EXIT_GUARD
    assert "tail mass" in capsys.readouterr().err


def test_degenerate_law_exits_2(tmp_path, capsys):
    text = SMALL.format(out=tmp_path).replace("coupling = finite_range\nJ = 0.2\nspins = interval", "coupling = zero\nspins = real\ndist = uniform\nparams = 1, 0")
    assert main(["run", str(_write(tmp_path, text))]) == EXIT_CONFIG
    assert "positive variance" in capsys.readouterr().err


def test_zero_variance_exits_3(tmp_path, capsys):
    # positive variance in principle, constant in every draw
    text = SMALL.format(out=tmp_path).replace("coupling = finite_range\nJ = 0.2\nspins = interval", "coupling = zero\nspins = real\ndist = bernoulli\nparams = 1e-12")
    assert main(["run", str(_write(tmp_path, text))]) == EXIT_GUARD
    assert "variance" in capsys.readouterr().err


def test_bad_threads():
    assert main(["--threads", "0", "verify"]) == 2


def test_cache_clear(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL.format(out=tmp_path / "a"))
    cache = tmp_path / "cache"
    assert run_experiment(cfg, cache_dir=cache) == EXIT_OK
    assert any(cache.iterdir())
    assert main(["--cache-dir", str(cache), "cache", "--clear"]) == 0
    assert "removed 1" in capsys.readouterr().out
    assert main(["--cache-dir", str(cache), "cache"]) == 0


def test_shipped_example1_is_at_noise_floor(tmp_path):
    assert main(["--out-dir", str(tmp_path), "run", str(CONFIGS / "example1_iid_normal.ini")]) == EXIT_OK
    rows = [line.split(",") for line in (tmp_path / "report.csv").read_text().splitlines()[1:]]
    d2 = [(float(r[4]), float(r[5])) for r in rows if r[3] == "2"]
    assert len(d2) == 4 and all(d < 0.08 for d, _ in d2)


@pytest.fixture(scope="module")
def suite():
    return verify_suite()


def test_verify_suite_passes(suite):
    assert suite.passed, "\n".join(suite.lines())
    assert suite.lines()[-1].startswith("PASS")


def test_flipped_sign_fails_gks():
    rep = verify_suite(hamiltonian_sign=-1.0)
    failed = [c.name for c in rep.checks if not c.passed]
    assert failed == ["oracle: GKS positivity and monotonicity"]


def test_disabled_dk_check_keeps_the_rest(suite):
    rep = verify_suite(check_dk_bound=False)
    names = {c.name for c in rep.checks}
    assert not any("corollary" in n for n in names)
    assert names == {c.name for c in suite.checks} - {"invariant: Kolmogorov corollary bound on every row"}
    assert rep.passed


def test_verify_command(capsys):
    assert main(["verify"]) == 0
    assert capsys.readouterr().out.strip().splitlines()[-1].startswith("PASS")
