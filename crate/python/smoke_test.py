"""Smoke test for the cavity_qsl_py extension module."""

import math

import cavity_qsl_py as cq


def main():
    sys = cq.SystemParams.lorentzian(5.0, coupling=2.0)
    print(sys)
    assert sys.family == "lorentzian"

    a0 = cq.amplitude(sys, 0.0)
    assert abs(a0 - 1.0) < 1e-12
    assert abs(cq.excited_population(sys, 0.3) - abs(cq.amplitude(sys, 0.3)) ** 2) < 1e-12

    g = cq.decay_rate(sys, 1, 1.0)
    g_bf = cq.decay_rate_bruteforce(sys, 1, 1.0)
    assert abs(g - g_bf) < 1e-5 * max(1.0, abs(g)), (g, g_bf)

    m = cq.metrics(sys, 1.0)
    print("metrics", {k: m[k] for k in ("n_blp", "qslt_ratio", "final_pop")})
    assert m["n_blp"] > 0.0
    assert m["qslt_ratio"] < 1.0
    assert m["relation_residual"] < 1e-9
    assert abs(cq.non_markovianity(sys, 1.0) - m["n_blp"]) < 1e-12

    tr = cq.trajectory(sys, 1.0, 11)
    assert len(tr["t"]) == len(tr["pop"]) >= 11

    weak = cq.SystemParams.lorentzian(5.0)
    rows = cq.run_sweep(weak, "coupling", 0.0, 4.0, steps=41)
    assert len(rows) == 41
    value, (lo, hi) = cq.find_critical(weak, "coupling", 0.0, 4.0)
    print("lorentzian onset", value)
    assert lo <= value <= hi and hi - lo <= 1e-3
    assert abs(value - 1.5717) < 5e-3

    ohm = cq.SystemParams.ohmic(0.1)
    value, _ = cq.find_critical(ohm, "coupling", 0.0, 1.0, tau=8.73)
    print("ohmic onset", value)
    assert abs(value - 0.18) < 0.01

    times, rho11, _ = cq.evolve_dressed(sys, 1.0)
    assert abs(rho11[-1] - cq.excited_population(sys, times[-1])) < 1e-6

    try:
        cq.SystemParams.ohmic(1.0, coupling=2.0)
    except ValueError as e:
        print("rejected:", e)
    else:
        raise AssertionError("ohmic coupling above omega0 accepted")

    checks = cq.oracle_check()
    assert all(c[3] for c in checks), checks
    assert not math.isnan(m["final_pop"])
    print("smoke test ok")


if __name__ == "__main__":
    main()
