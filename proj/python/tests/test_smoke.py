import json
import math
import os

import numpy as np
import pytest

import noisyslp

CONFIG_DIR = os.environ.get(
    "NOISYSLP_CONFIG_DIR", os.path.join(os.path.dirname(__file__), "..", "..", "configs")
)


def test_noiseless_quadratic_reaches_optimum():
    res = noisyslp.solve(os.path.join(CONFIG_DIR, "quadratic_noiseless.json"))
    assert res["termination"] == "Critical"
    assert np.max(np.abs(res["x_final"])) <= 1e-4
    assert res["records"][-1]["psi_hat_1"] < 1e-6
    assert res["outcome"]["ok"]


def test_dict_config_and_defaults():
    cfg = noisyslp.load_config({"problem": "rosenbrock_l1"})
    assert cfg["solver"]["delta_lp_max"] == 10.0
    assert cfg["solver"]["rho_u"] == 0.1
    with pytest.raises(noisyslp.ConfigError):
        noisyslp.load_config({"problem": "rosenbrock_l1", "solver": {"max_iters": 3}})


def test_solve_is_reproducible():
    cfg = {
        "problem": "quadratic_l1",
        "noise": {"model": "ball_uniform", "eps_f": 0.1, "eps_jac": 1e-5},
        "solver": {"max_iter": 20},
    }
    a = noisyslp.solve(cfg, seed=5)
    b = noisyslp.solve(json.dumps(cfg), seed=5)
    assert np.array_equal(a["x_final"], b["x_final"])
    assert [r["phi_hat"] for r in a["records"]] == [r["phi_hat"] for r in b["records"]]


def test_sweep_layout():
    cfg = {
        "problem": "quadratic_l1",
        "noise": {"model": "ball_uniform", "eps_f": 0.1, "eps_jac": 1e-5},
        "solver": {"max_iter": 10},
        "seed_count": 2,
        "sweep": {"vartheta": [0, "required"]},
    }
    res = noisyslp.sweep(cfg, jobs=2)
    assert len(res["cells"]) == 2
    assert res["cells"][1]["vartheta"] > 0
    assert res["summary_csv"].startswith("cell,vartheta,")


def test_problem_and_lp():
    p = noisyslp.make_problem("rosenbrock_l1")
    assert p.phi(np.ones(2)) == 0.0
    assert p.jacobian(np.array([-1.5, 0.0])).shape == (3, 2)
    assert p.criticality(np.ones(2)) == pytest.approx(0.0, abs=1e-12)
    vartheta = p.required_stabilization(json.dumps({"model": "ball_uniform", "eps_f": 1e-2, "eps_jac": 1e-5}))
    assert math.isfinite(vartheta) and vartheta > 0

    sol = noisyslp.solve_lp(
        c=np.array([-1.0, -1.0]),
        a_ub=np.array([[1.0, 2.0]]),
        b_ub=np.array([2.0]),
        a_eq=np.zeros((0, 2)),
        b_eq=np.zeros(0),
        lower=np.zeros(2),
        upper=np.ones(2),
    )
    assert sol["status"] == "Optimal"
    assert sol["objective"] == pytest.approx(-1.5)

    spec = noisyslp.PolyhedralSpec.penalty(2.0, 1, 1)
    assert spec(np.array([1.0, 3.0, -2.0])) == pytest.approx(1.0 + 2.0 * (3.0 + 2.0))


def test_verify_and_pgm(tmp_path):
    results = noisyslp.verify(seed=1, instances=20)
    assert all(r["passed"] for r in results)
    img = noisyslp.synthetic_image(8, 10)
    path = tmp_path / "img.pgm"
    noisyslp.write_pgm(img, str(path))
    back = noisyslp.read_pgm(str(path))
    assert back.shape == (8, 10)
    assert np.max(np.abs(back - img)) <= 1 / 510 + 1e-12
    with pytest.raises(noisyslp.PgmError, match="byte offset"):
        noisyslp.parse_pgm(b"P5\n32 x32\n255\n")
