"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected and repeated in the pytest terminal summary.
"""
import math
import time

import numpy as np
import pytest

from gsqg import moc as M
from gsqg.certify import (CriterionConstants, certify_eventual, certify_subcritical,
                          eventual_bounds, regularity_ladder, subcritical_thresholds)
from gsqg.diagnostics import Tracker, fit_stationary_holder
from gsqg.evolution import SolverParams, integrate
from gsqg.functionals import omega1, upsilon_beta
from gsqg.initial import random_smooth, single_mode
from gsqg.spectral import Grid2D, ScalarField2D
from oracles import omega1_oracle, upsilon_oracle

RESULTS = []


def report(number, title, ok, detail):
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    RESULTS.append(line)
    print(line)
    assert ok, line


class TestAcceptance:
    def test_1_single_mode_exact_decay(self):
        t0 = time.perf_counter()
        g = Grid2D(64)
        th0 = single_mode(g, (3, 4))
        p = SolverParams(alpha=0.5, beta=1.5, nu=1.0, epsilon=0.0, dt=1e-4, t_end=0.1)
        res = integrate(th0, p)
        exact = math.exp(-5 ** 1.5 * 0.1) * th0.physical
        err = float(np.max(np.abs(res.final_state.theta.physical - exact)))
        elapsed = time.perf_counter() - t0
        report(1, "single-mode decay", err <= 1e-6 and elapsed < 10 and res.n_steps == 1000,
               f"Linf error {err:.2e}, {elapsed:.1f} s")

    def test_2_quadrature_oracle_equivalence(self):
        adaptive_time = 0.0
        worst_const = 0.0
        H = 1.7
        for beta in (0.2, 0.7, 1.0, 1.5):
            xi = np.array([1e-6, 1e-2, 0.5, 3.0, 1e4])
            t0 = time.perf_counter()
            r = upsilon_beta(M.constant(H), xi, beta)
            adaptive_time += time.perf_counter() - t0
            want = -(2 ** (1 + beta)) * H / (beta * xi ** beta)
            worst_const = max(worst_const, float(np.max(np.abs(r.value / want - 1))))

        cases = [
            ("power", M.power_law(0.6), 1.3, 0.3, np.geomspace(1e-3, 1e3, 10)),
            ("kisel", M.kisel_nv(0.01, 0.005, 1.6), 1.6, 0.3,
             np.array([1e-4, 5e-4, 3e-3, 5e-3, 8e-3, 2e-2, 5e-2, 0.3, 3.0, 100.0])),
        ]
        worst_oracle = 0.0
        for _, m, beta, alpha, xi in cases:
            t0 = time.perf_counter()
            up = upsilon_beta(m, xi, beta).value
            om = omega1(m, xi, alpha).value
            adaptive_time += time.perf_counter() - t0
            for k, x in enumerate(xi):
                ref_u = upsilon_oracle(m.eval, x, beta, second_derivative=float(m.deriv2(x)))
                ref_o = omega1_oracle(m.eval, x, alpha)
                worst_oracle = max(worst_oracle, abs(up[k] / ref_u - 1), abs(om[k] / ref_o - 1))
        ok = worst_const <= 1e-8 and worst_oracle <= 1e-6 and adaptive_time < 60
        report(2, "quadrature vs closed form and Riemann oracle", ok,
               f"constant {worst_const:.1e}, oracle {worst_oracle:.1e}, "
               f"adaptive {adaptive_time:.1f} s")

    def test_3_scaling_laws(self):
        worst = 0.0
        xi = np.geomspace(1e-5, 1e5, 50)
        for alpha, beta in ((0.1, 1.3), (0.3, 1.6), (0.5, 1.8)):
            m = M.kisel_nv(0.01, 0.005, beta)
            for lam in (0.1, 1.0, 10.0):
                s = m.scaled(lam, alpha, beta)
                o = omega1(s, xi, alpha).value / (lam ** (beta - 1) * omega1(m, lam * xi, alpha).value)
                u = (upsilon_beta(s, xi, beta).value
                     / (lam ** (2 * beta - alpha - 1) * upsilon_beta(m, lam * xi, beta).value))
                worst = max(worst, float(np.max(np.abs(o - 1))), float(np.max(np.abs(u - 1))))
        report(3, "scaling covariance", worst <= 1e-8, f"worst relative deviation {worst:.1e}")

    def test_4_subcritical_dichotomy(self):
        t0 = time.perf_counter()
        lines = []
        ok = True
        for alpha, beta in ((0.1, 1.3), (0.3, 1.6), (0.5, 1.8)):
            c = CriterionConstants(alpha, beta, nu=1.0, c_alpha=1.0, c_beta=1.0)
            delta = 0.5 * subcritical_thresholds(c)["delta_max"]
            gamma = 0.5 * subcritical_thresholds(c, delta)["gamma_max"]
            good = certify_subcritical(M.kisel_nv(delta, gamma, beta), c)
            bad = certify_subcritical(M.kisel_nv(delta, 100 * gamma, beta), c)
            xi = good.table["xi"]
            covers = xi[0] <= 1e-8 * delta * (1 + 1e-12) and xi[-1] >= 1e8 * delta * (1 - 1e-12)
            this = (good.passed and good.grid["n_points"] >= 4000 and covers
                    and bad.verdict == "FAIL" and bool(bad.witness))
            ok &= this
            lines.append(f"({alpha},{beta}) {good.verdict}/{bad.verdict} "
                         f"n={good.grid['n_points']}")
        elapsed = time.perf_counter() - t0
        report(4, "subcritical PASS/FAIL", ok and elapsed < 300,
               "; ".join(lines) + f", {elapsed:.1f} s")

    def test_5_eventual_coefficients(self):
        c = CriterionConstants(0.3, 0.9, nu=1.0, c_beta_prime=1.0, A=1.0)
        b = eventual_bounds(c, 0.8)
        good = certify_eventual(c, 0.8, b["C1_max"] / 2, b["C2_max"] / 2)
        bad = certify_eventual(c, 0.8, 10 * b["C1_max"], 10 * b["C2_max"])
        grid_ok = all(x.grid["n_xi"] == 200 and x.grid["n_xi0"] == 50 for x in (good, bad))
        report(5, "eventual-regularity checks", good.passed and bad.verdict == "FAIL" and grid_ok,
               f"half bounds {good.verdict}, 10x bounds {bad.verdict}")

    def test_6_ladder(self):
        r = regularity_ladder(0.5, 1.2, 0.4, 40)
        stall = regularity_ladder(0.5, 1.2, 0.4, r.p2)
        ok = (r.N0 == 4 and abs(r.sigma[4] - 1.15) <= 1e-12
              and r.flags["max_discrepancy"] <= 1e-12
              and stall.stalled and stall.N0 is None
              and stall.min_p == max(stall.p1, stall.p2) and math.isfinite(stall.min_p))
        report(6, "ladder arithmetic", ok,
               f"N0={r.N0}, sigma_5={r.sigma[4]!r}, stall min_p={stall.min_p:.6g}")

    def test_7_conservation_and_monotonicity(self):
        t0 = time.perf_counter()
        g = Grid2D(128)
        base = random_smooth(g, seed=5)
        th0 = ScalarField2D(g, physical=base.physical + 0.3)
        p = SolverParams(alpha=0.5, beta=1.5, nu=1.0, dt=1e-4, t_end=1.0)
        res = integrate(th0, p, tracker=Tracker(p), sample_every=1)
        elapsed = time.perf_counter() - t0
        rec = res.records
        mean = np.array([r.mean for r in rec])
        l2 = np.array([r.L2 for r in rec])
        linf = np.array([r.Linf for r in rec])
        resid = np.array([r.energy_residual for r in rec])
        e0 = l2[0] ** 2
        mean_dev = float(np.max(np.abs(mean - mean[0])))
        l2_rise = float(np.max(l2[1:] / l2[:-1] - 1))
        linf_rise = float(np.max(linf[1:] / np.minimum.accumulate(linf)[:-1] - 1))
        worst_resid = float(np.max(np.abs(resid)) / e0)
        ok = (res.n_steps == 10 ** 4 and not res.truncated and mean_dev <= 1e-12
              and l2_rise <= 1e-10 and worst_resid <= 1e-8 and linf_rise <= 1e-3
              and elapsed < 300)
        report(7, "conservation and monotonicity", ok,
               f"mean drift {mean_dev:.1e}, L2 rise {l2_rise:.1e}, energy residual "
               f"{worst_resid:.1e}, Linf rise {linf_rise:.1e}, {elapsed:.0f} s")

    def test_8_uniform_in_epsilon_holder(self):
        g = Grid2D(64)
        th0 = random_smooth(g, seed=0, amplitude=5.0)
        series, ratios = {}, {}
        for eps in (1e-3, 1e-4):
            p = SolverParams(alpha=0.2, beta=0.5, nu=1.0, epsilon=eps, dt=2e-3, t_end=2.0)
            snaps = {}

            def keep(_, new):
                if new.step_count % 50 == 0:
                    snaps[new.step_count] = new

            res = integrate(th0, p, tracker=Tracker(p, holder_gamma=0.3), sample_every=50,
                            on_step=keep)
            assert not res.truncated
            series[eps] = np.array([(r.t, r.holder_seminorm) for r in res.records])
            mid = res.n_steps // 2
            fitted = fit_stationary_holder(snaps[mid].theta, 0.3)
            ratios[eps] = max(M.obeys(s.theta, fitted).ratio
                              for k, s in snaps.items() if k >= mid)
        a, b = series[1e-3], series[1e-4]
        after = a[:, 0] >= 0.2
        spread = float(np.max(np.abs(b[after, 1] / a[after, 1] - 1)))
        worst_ratio = max(ratios.values())
        report(8, "uniform-in-epsilon Hölder observation", spread <= 0.2 and worst_ratio < 1,
               f"series spread {spread:.1%}, obedience ratio {worst_ratio:.3f}")
