import json

import numpy as np
import pytest

from oseen_tp.cli import _bound_cases, config_from_dict, main, parse_config
from oseen_tp.exceptions import InvalidParameterError
from oseen_tp.steady import gamma0, grad_gamma0
from oseen_tp.torus import read_tpf


def _write(tmp_path, text, name="cfg.json"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_config_defaults(tmp_path):
    cfg = parse_config(_write(tmp_path, '{"lambda": 1.0}'))
    g = cfg.grid
    assert (g.n_time, g.n_space, g.box_half_length) == (32, 64, 40.0)
    assert cfg.period == pytest.approx(2 * np.pi)
    assert cfg.force["kind"] == "zero" and cfg.source() is None
    assert cfg.picard.max_iter == 50 and cfg.picard.tol == 1e-10
    assert cfg.mean_policy == "subtract"
    assert len(cfg.digest) == 16
    assert cfg.digest == config_from_dict({"lambda": 1.0, "seed": 0}).digest
    assert cfg.digest != config_from_dict({"lambda": 2.0}).digest


@pytest.mark.parametrize(
    "text, msg",
    [
        ('{"lambda": 0}', "lambda"),
        ('{"period": 1}', "lambda"),
        ('{"lambda": 1, "lambda": 2}', "duplicate"),
        ('{"lambda": 1, "force": {"foo": 1}}', "force.foo"),
        ('{"lambda": 1, "colour": 1}', "colour"),
        ('{"lambda": 1, "grid": {"n_space": 1}}', "grid.n_space"),
        ('{"lambda": 1, "force": {"kind": "bump", "radius": -1}}', "force.radius"),
        ('{"lambda": 1, "mean_policy": "keep"}', "mean"),
        ("{lambda: 1}", "invalid JSON"),
    ],
)
def test_config_rejects(tmp_path, text, msg):
    with pytest.raises(InvalidParameterError, match=msg):
        parse_config(_write(tmp_path, text))


def test_bound_case_expansion():
    assert _bound_cases("3.3", 2, 0) == [("3.3grad", 2, 0)]
    assert _bound_cases("3.3", 4, 0) == [("3.3grad", 4, 0), ("3.3value", 4, 0)]
    assert _bound_cases("lemma3.5", 1, 1.5) == [("lemma3.5", 1, 1.5)]
    with pytest.raises(InvalidParameterError):
        _bound_cases("9.9", 1, 1)


def test_eval_gamma0_json(tmp_path):
    out = tmp_path / "g.json"
    assert main(["eval-gamma0", "--lambda", "1.5", "--point", "1,-2,0.5", "--grad", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    x = np.array([1.0, -2.0, 0.5])
    assert np.allclose(data["gamma0"], gamma0(x, 1.5), rtol=1e-15)
    assert np.allclose(data["grad_gamma0"], grad_gamma0(x, 1.5), rtol=1e-15)


def test_exit_codes(tmp_path, capsys):
    assert main(["eval-gamma0", "--lambda", "0", "--point", "1,0,0"]) == 2
    assert "error" in capsys.readouterr().err
    assert main(["eval-gamma0", "--lambda", "1", "--point", "0,0,0"]) == 2
    assert main(["solve", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "u.tpf")]) == 2
    with pytest.raises(SystemExit):
        main(["no-such-command"])


def test_solve_zero_force(tmp_path):
    cfg = _write(tmp_path, json.dumps({"lambda": 1, "period": 1, "grid": {"n_time": 4, "n_space": 8, "box_half_length": 5}}))
    out, pres = tmp_path / "u.tpf", tmp_path / "p.tpf"
    assert main(["solve", "--config", str(cfg), "--out", str(out), "--pressure", str(pres)]) == 0
    u = read_tpf(out)
    meta = u.meta
    assert u.values.shape == (4, 8, 8, 8, 3)
    assert np.all(u.values == 0)
    assert meta["converged"] and meta["config_hash"] == parse_config(cfg).digest
    p = read_tpf(pres)
    assert np.all(p.values == 0)


def test_solve_bump_force(tmp_path):
    cfg = _write(tmp_path, json.dumps({
        "lambda": 1, "period": 1,
        "grid": {"n_time": 4, "n_space": 16, "box_half_length": 8},
        "force": {"kind": "bump", "amplitude": 1e-2, "radius": 3},
    }))
    out = tmp_path / "u.tpf"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
    u = read_tpf(out)
    meta = u.meta
    assert meta["iterations"] >= 2 and meta["fixed_point_residual"] < 1e-9
    assert np.abs(u.values).max() > 0


def test_selftest_csv_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["selftest", "--only", "1,2,10", "--out", str(a)]) == 0
    assert main(["selftest", "--only", "1,2,10", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "criterion,check,passed,values"
    assert len(lines) == 4
