"""Smoke test for the compiled extension: python python/smoke_test.py"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import derham  # noqa: E402


def main():
    assert "quad-enriched" in derham.diagrams()

    s = derham.mesh_info("tri", 2, 2)
    assert s["counts"]["cells"] == 8, s

    r = derham.verify("quad-enriched", 2, 2, 1)
    assert r["passed"] and r["dim_ker_second"] == 17, r["betti"]

    naive = derham.naive_diagnostic(3, 4)
    assert (naive["rank"], naive["kernel_dim"]) == (17, 7)

    assert derham.appendix_nullity(3, 3) == 10

    rep = derham.refcheck("tri", 1, samples=3)
    assert all(c["pass"] for c in rep["checks"]), rep

    assert all(c["pass"] for c in derham.dof_comparison(2)["checks"])

    camp = derham.hodge("tri-dp", seed=7)
    assert all(c["pass"] for c in camp["checks"])

    coeffs = [f"{i % 5 - 2}/{1 + i % 3}" for i in range(16)]
    parts = derham.hodge("tri-dp", coeffs)
    assert len(parts["u_harm"]) == 16

    try:
        derham.mesh_info("quad", 1, 3)
    except ValueError as e:
        assert "nx" in str(e)
    else:
        raise AssertionError("expected ValueError")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
