"""Smoke test for the orlicz_py extension module.

Build and install first:
    pip install --no-build-isolation ./crates/python
then run:
    python python/smoke_test.py
"""

import json
import math
import random

import orlicz_py as oz


def check_norms():
    phi = oz.Phi.power(3.0)
    nu = oz.Measure.torus_grid(16)
    rng = random.Random(0)
    values = [complex(rng.gauss(0, 1), rng.gauss(0, 1)) for _ in range(len(nu))]
    lux = oz.luxemburg_norm(phi, values, nu)
    lp = oz.lp_norm(values, nu, 3.0)
    assert abs(lux - lp) <= 1e-8 * lp, (lux, lp)
    assert abs(oz.modular(phi, [v / lux for v in values], nu) - 1.0) < 1e-8


def check_phi():
    phi = oz.Phi.pab(2.0, 1.0, 1.0)
    assert abs(phi(1.0) - 1.0) < 1e-12
    assert abs(phi.inverse(1.0) - 1.0) < 1e-9
    p_hat, q_hat = phi.estimate_indices()
    assert p_hat >= 2.0 - 1e-6 and q_hat <= 4.0 + 1e-6
    same = oz.Phi.from_json('{"family": "pab", "p": 2, "alpha": 1, "beta": 1}')
    assert same(3.0) == phi(3.0)
    try:
        oz.Phi.from_json('{"family": "bogus", "p": 2}')
    except ValueError:
        pass
    else:
        raise AssertionError("bogus family accepted")


def check_spaces():
    grid = oz.Measure.torus_grid(64)
    x = oz.Subspace.trig(5, grid)
    assert x.dim == 5
    assert abs(x.nikolskii_constant() - math.sqrt(5)) < 1e-8
    weights, max_sigma, iterations = oz.kw_design(x, grid)
    assert iterations == 0 and abs(sum(weights) - 1.0) < 1e-12
    sol = oz.lewis_basis(oz.Phi.power(2.0), x, grid)
    assert abs(sol.c_dim - 2.0) < 1e-6
    assert max(sol.residuals) < 1e-6
    assert "basis" in json.loads(sol.to_json())


def check_runner():
    cfg = {"task": {"classify-phi": {"phi": {"family": "pab", "p": 2, "alpha": 1, "beta": 0}}}}
    report = json.loads(oz.run_config(json.dumps(cfg)))
    assert report["command"] == "classify-phi"
    assert all(c["passed"] for c in report["certificates"])
    sq = oz.Phi.power(2.0)
    assert abs(oz.recovery_constant(sq, sq, 2.0, 1.0) - 6.0 * math.sqrt(2.0)) < 1e-12


if __name__ == "__main__":
    check_norms()
    check_phi()
    check_spaces()
    check_runner()
    print("smoke test passed")
