"""Smoke test for the pyfanobound extension.

Run with `python python/smoke_test.py` or `pytest python/smoke_test.py`
after `pip install --no-build-isolation -e crates/python`.
"""

import math

import pyfanobound as fb


def close(a, b, rel=1e-12):
    return abs(a - b) <= rel * max(abs(a), abs(b), 1e-300)


def test_information_measures():
    assert close(fb.entropy([0.25] * 4), math.log(4))
    assert close(fb.binary_entropy(0.5), math.log(2))
    assert fb.kl_divergence([0.5, 0.5], [0.5, 0.5]) == 0.0
    # Noiseless binary channel carries one bit.
    assert close(fb.mutual_information([0.5, 0.5], [[1, 0], [0, 1]]), math.log(2))
    assert close(fb.kl_gaussian([0.0, 0.0], [1.0, 1.0], 2.0), 0.5)


def test_discrete_space_and_chain():
    space = fb.DiscreteSpace.sparse_sign(4, 2)
    assert len(space) == 24
    cube = fb.DiscreteSpace.hypercube(3)
    profile = cube.neighborhood_profile(1.0)
    assert profile["n_max"] == 4 and profile["n_min"] == 4

    prior = [1 / 3] * 3
    channel = [[0.8, 0.1, 0.1], [0.1, 0.8, 0.1], [0.1, 0.1, 0.8]]
    decoder = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    chain = fb.MarkovChain(prior, channel, decoder)
    sides = chain.fano_sides(fb.DiscreteSpace.zero_one(3), 0.0)
    assert sides["lhs"] >= sides["rhs"] - 1e-9
    assert close(sides["lhs"], chain.classical_fano_lhs())

    bound = fb.fano_tail_lower_bound(8, 1, 1, chain.mutual_information())
    assert bound["valid"] and 0.0 <= bound["value"] <= 1.0


def test_displayed_constants():
    nm = fb.normal_mean_bound(10, 1.0, 100, "integrated")
    assert close(nm["value"], 81 * math.log(2) / 400 * 0.1)
    simple = fb.normal_mean_bound(2, 1.0, 10, "simple")
    assert simple["aux"]["tail_probability"] == 0.25

    for d in range(2, 10):
        c = fb.continuum_fano_bound(d * math.log(2), 0.0)
        assert abs(c["value"] - (d - 1) / d) < 1e-15

    n, d = 9, 9
    design = [[math.sqrt(n) if i == j else 0.0 for j in range(d)] for i in range(n)]
    reg = fb.linear_regression_bound(design, 1.0)
    assert reg["value"] == d / (12 * n)
    assert reg["aux"]["exact_form"] >= reg["value"]

    sparse = fb.sparse_location_bound(32, 4, 1.0, 200)
    assert sparse["valid"] and sparse["eps"] > 0


def test_volume_ratio():
    est = fb.mc_ball_volume_ratio(2, 2.0, 1.0, points=200_000, seed=1)
    assert abs(est["ratio"] / fb.ball_volume_ratio(2.0, 1.0, 2) - 1) < 0.03


def test_simulation_and_suites():
    a = fb.simulate_risk("normal-mean", "sample-mean", d=4, n=20, reps=2000, seed=3)
    b = fb.simulate_risk("normal-mean", "sample-mean", d=4, n=20, reps=2000, seed=3)
    assert a == b
    risk = a["empirical_risk"]
    assert risk["lower"] <= 0.2 <= risk["upper"]
    assert a["bounds_hold"]

    ok = fb.run_suite("quadrature", seed=2)
    assert ok["pass"] and ok["report"].startswith("suite quadrature")
    assert not fb.run_suite("quadrature", seed=2, inject_fault=True)["pass"]


def test_errors_are_value_errors():
    for call in (
        lambda: fb.entropy([0.5, 0.6]),
        lambda: fb.normal_mean_bound(1, 1.0, 10),
        lambda: fb.run_suite("nope"),
    ):
        try:
            call()
        except ValueError:
            continue
        raise AssertionError("expected ValueError")


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"ok {name}")
    print("smoke test passed")
