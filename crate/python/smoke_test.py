"""Smoke test for the invlab extension module.

Build and install first:
    maturin build --release -m crates/py/Cargo.toml
    pip install target/wheels/invlab-*.whl
"""

import math
import pathlib

import invlab

SCENARIOS = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "scenarios"


def main():
    sc = invlab.Scenario.from_file(str(SCENARIOS / "r1d.scenario"))
    assert sc.dim == 1 and "restoring-optimal" in sc.policies

    th = sc.threshold()
    kappa_star = th["certificates"][0]["evidence"]["kappa_star"]
    assert abs(kappa_star - 1.0) < 1e-6, kappa_star
    assert abs(sc.a2_margin([1.0], 1.5) - 0.5) < 1e-12

    run = sc.simulate(policy="zero")
    assert run["terminated"] == "exit" and not run["invariant"]
    assert len(run["t"]) == len(run["g"])

    harness = sc.harness()
    assert harness["overall"] == "pass", harness["narrative"]

    sub = invlab.Scenario.from_file(str(SCENARIOS / "r1d_subcritical.scenario"))
    assert sub.harness()["narrative"] == "subcritical regime; Theorem 1 not instantiated"

    u = invlab.restoring_optimal_control([[1.0, 0.0], [0.0, 1.0]], [0.6, 0.8], 2.0)
    assert math.isclose(u[0], -1.2) and math.isclose(u[1], -1.6)

    try:
        invlab.Scenario.from_toml("dimension = 1")
    except ValueError as e:
        assert "missing required key" in str(e)
    else:
        raise AssertionError("invalid scenario accepted")

    print("smoke test passed:", harness["narrative"])


if __name__ == "__main__":
    main()
