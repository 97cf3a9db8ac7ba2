#!/usr/bin/env python3
"""Smoke test for the sgtraffic_py extension module.

Build the extension first:

    cargo build --release -p sgtraffic-py

then run:

    python3 python/smoke_test.py
"""

import importlib.util
import math
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / "release" / "libsgtraffic_py.so",
        ROOT / "target" / "debug" / "libsgtraffic_py.so",
        ROOT / "target" / "release" / "sgtraffic_py.so",
    ]
    for path in candidates:
        if path.exists():
            spec = importlib.util.spec_from_file_location("sgtraffic_py", path)
            mod = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(mod)
            return mod
    sys.exit(
        "sgtraffic_py extension not found; run "
        "`cargo build --release -p sgtraffic-py` first"
    )


def check(name, ok):
    print(f"smoke {name}: {'pass' if ok else 'FAIL'}")
    if not ok:
        sys.exit(1)


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol


def main():
    sg = load_module()

    basis = sg.Basis("haar", 3)
    check("basis construction", basis.modes == 4 and basis.family == "haar")
    check(
        "quadrature normalization",
        close(sum(basis.quad_weights()), 1.0) and len(basis.quad_nodes()) == 32,
    )

    # Projection of the uncertain left state 0.75 + 0.2*xi at order 1:
    # mean 0.85 and first-wavelet coefficient -0.05.
    b1 = sg.Basis("haar", 1)
    coeffs = b1.project(lambda xi: 0.75 + 0.2 * xi)
    check(
        "projection coefficients",
        close(coeffs[0], 0.85) and close(coeffs[1], -0.05),
    )
    check(
        "moment helpers",
        close(sg.mean(coeffs), 0.85) and close(sg.variance(coeffs), 0.05**2),
    )

    # Two-mode Haar coefficients act like values on the two half-cells, so
    # (1, 2) * (3, 4) has the exact Galerkin product (11, 10).
    prod = b1.galerkin_product([1.0, 2.0], [3.0, 4.0])
    check("galerkin product", close(prod[0], 11.0) and close(prod[1], 10.0))
    solved = b1.galerkin_solve([1.0, 2.0], prod)
    check("galerkin solve", close(solved[0], 3.0) and close(solved[1], 4.0))

    # Reconstruction at xi inside each half-interval recovers the pointwise
    # values of the projected affine function.
    check(
        "reconstruction",
        close(b1.reconstruct(coeffs, 0.25), 0.8)
        and close(b1.reconstruct(coeffs, 0.75), 0.9),
    )

    hy_haar = basis.hyperbolicity()
    hy_leg = sg.Basis("legendre", 3).hyperbolicity()
    check(
        "hyperbolicity certificates",
        hy_haar["passed"]
        and not hy_leg["passed"]
        and hy_leg["a1_max_commutator"] > 0.05,
    )

    run = sg.solve_lwr_riemann(
        sg.Basis("haar", 7), n_x=100, t_f=0.25, snapshots=[0.1]
    )
    final_mean = run["mean"][-1]
    final_var = run["variance"][-1]
    ok = (
        len(run["times"]) == 2
        and close(run["times"][-1], 0.25)
        and len(final_mean) == 100
        and all(-1e-8 <= r <= 1.0 + 1e-8 for r in final_mean)
        and max(final_var) > 1e-4
        and all(math.isfinite(v) and v >= -1e-14 for v in final_var)
    )
    check("SG-LWR Riemann run", ok)

    report = sg.mc_compare_lwr(
        final_mean, final_var, n_x=100, t_f=0.25, samples=400, seed=7
    )
    check(
        "Monte Carlo cross-check",
        report["passed"] and report["mean_discrepancy"] < 0.01,
    )

    print("all smoke tests passed")


if __name__ == "__main__":
    main()
