"""Smoke test for the pylerch extension module.

Build and install first, e.g.

    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o target/wheels
    pip install target/wheels/pylerch-*.whl

then run ``python3 python/smoke_test.py``.
"""

import json
import math

import pylerch


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def main():
    # zeta(2) and the alternating case eta(2) = pi^2 / 12
    value, bound = pylerch.eval_continued(2.0, 0.0, alpha=1.0, lam=1.0)
    close(value, math.pi ** 2 / 6, 1e-10)
    assert bound < 1e-9
    value, _ = pylerch.eval_continued(2.0, 0.0, alpha=1.0, lam=0.5)
    close(value, math.pi ** 2 / 12, 1e-10)

    # series and continuation agree where both apply
    s_val, s_bound = pylerch.eval_series(1.5, 4.0, alpha=0.3, lam=0.2, terms=20000)
    c_val, c_bound = pylerch.eval_continued(1.5, 4.0, alpha=0.3, lam=0.2)
    assert abs(s_val - c_val) <= s_bound + c_bound

    # zeta'(2) = -0.93754825431584375...
    d_val, _ = pylerch.eval_derivative(2.0, 0.0, 1, alpha=1.0, lam=1.0)
    close(d_val, -0.9375482543158437, 1e-8)

    close(pylerch.phi_pair_sum(0.25, 3.0), 0.0, 1e-15)
    close(pylerch.phi_pair_sum(0.5, 2.0), 1.0, 1e-15)

    a = pylerch.random_series(0.75, 0.0, 500, 11)
    assert a == pylerch.random_series(0.75, 0.0, 500, 11)
    assert a != pylerch.random_series(0.75, 0.0, 500, 12)
    assert pylerch.second_moment(0.75, 500) > 1.0

    try:
        pylerch.eval_continued(0.75, 0.0, alpha=0.0)
    except ValueError:
        pass
    else:
        raise AssertionError("alpha = 0 must be rejected")

    settings = {
        "lambdas": "1/3, 2/3",
        "centers": "0.75+0.1i, 0.75-0.1i",
        "targets": "1.1; 0.9",
        "tau-max": "50",
        "epsilon": "1e9",
    }
    doc = json.loads(pylerch.run("scan", settings, threads=2))
    assert doc["result"]["density"] == 1.0
    again = dict(pylerch.parse_config(json.dumps(doc)))
    assert pylerch.run("scan", again, threads=1) == pylerch.run("scan", settings)

    try:
        pylerch.run("scan", dict(settings, lambdas="0.5, 1/2"))
    except ValueError as e:
        assert "0.5" in str(e)
    else:
        raise AssertionError("duplicate lambdas must be rejected")

    print("pylerch smoke test passed")


if __name__ == "__main__":
    main()
