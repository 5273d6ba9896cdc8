import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gsqg import moc as M
from gsqg.errors import ParameterError
from gsqg.initial import single_mode
from gsqg.spectral import Grid2D, ScalarField2D

# Reference values of the kisel-nv tail from 30-digit mpmath quadrature of
# its derivative (delta = 0.01, gamma = 0.005).
KISEL_B16_AT_05 = 0.012961936640528741738
KISEL_B16_AT_100 = 0.01475646273248511421
KISEL_B16_SUP = 0.014883931807345584
KISEL_B10_AT_7 = 0.013094425209402127921

FAMILY_INSTANCES = [
    M.kisel_nv(1 / 9, 0.01, 1.6),
    M.kisel_nv(0.01, 0.005, 1.0),
    M.stationary_holder(1.0, 0.5, 0.3),
    M.eventual(1.0, 0.5, 0.3, 0.1),
    M.eventual(2.0, 1.0, 0.8, 1.0),
    M.power_law(0.6),
    M.kisel_nv(0.05, 0.01, 1.8).scaled(3.0, 0.3, 1.8),
]


class TestEvaluation:
    def test_cubic_root_head(self):
        m = M.kisel_nv(1 / 9, 0.01, 1.6)
        assert abs(m.eval(1 / 16) - 3 / 64) < 1e-16

    def test_kisel_tail_against_reference(self):
        m = M.kisel_nv(0.01, 0.005, 1.6)
        assert abs(m.eval(0.5) / KISEL_B16_AT_05 - 1) < 1e-13
        assert abs(m.eval(100.0) / KISEL_B16_AT_100 - 1) < 1e-13
        assert abs(m.sup / KISEL_B16_SUP - 1) < 1e-13
        assert abs(M.kisel_nv(0.01, 0.005, 1.0).eval(7.0) / KISEL_B10_AT_7 - 1) < 1e-13

    def test_eventual_origin_value(self):
        H, gamma = 1.5, 0.4
        m = M.eventual(H, 0.3, gamma, 0.3)
        assert abs(m.omega0 - H * (1 - gamma)) < 1e-15

    def test_stationary_constant_beyond_delta(self):
        m = M.stationary_holder(2.0, 0.5, 0.3)
        assert np.all(m.eval(np.array([0.6, 1.0, 1e6])) == 2.0)

    def test_nonpositive_argument(self):
        m = M.power_law(0.5)
        for x in (0.0, -1.0):
            with pytest.raises(ParameterError):
                m.eval(x)

    def test_one_sided_derivatives_at_delta(self):
        delta, gamma, beta = 0.04, 0.01, 1.6
        m = M.kisel_nv(delta, gamma, beta)
        assert abs(m.deriv(delta, "left") - (1 - 1.5 * math.sqrt(delta))) < 1e-14
        right = m.deriv(delta, "right")
        assert abs(right - gamma / (4 * (delta + delta ** beta))) < 1e-15
        assert right < 0.25
        assert m.deriv(delta, "max") == m.deriv(delta, "left")

    def test_derivatives_match_finite_differences(self):
        for m in FAMILY_INSTANCES:
            for x in (0.003, 0.07, 0.9, 13.0):
                if any(abs(x / b - 1) < 1e-3 for b in m.breakpoints):
                    continue
                h = 1e-6 * x
                fd = (m.eval(x + h) - m.eval(x - h)) / (2 * h)
                assert abs(fd - m.deriv(x)) <= 1e-6 * max(1.0, abs(fd))
                fd2 = (m.deriv(x + h) - m.deriv(x - h)) / (2 * h)
                assert abs(fd2 - m.deriv2(x)) <= 1e-5 * max(1.0, abs(fd2))


class TestDomains:
    @pytest.mark.parametrize("args", [(0.0, 0.1, 1.5), (1.0, 0.1, 1.5), (0.1, 0.0, 1.5),
                                      (0.1, 0.05, 2.5)])
    def test_kisel_domain(self, args):
        with pytest.raises(ParameterError):
            M.kisel_nv(*args)

    def test_kisel_soft_conditions_recorded(self):
        m = M.kisel_nv(0.5, 0.6, 1.5)
        assert m.params["domain"] == {"gamma_lt_delta": False, "delta_le_1_9": False}

    def test_eventual_domain(self):
        with pytest.raises(ParameterError):
            M.eventual(1.0, 0.5, 0.3, 0.6)
        with pytest.raises(ParameterError):
            M.stationary_holder(1.0, 0.5, 1.0)


class TestInverse:
    def test_power_piece(self):
        H, delta, gamma = 1.0, 0.5, 0.3
        m = M.stationary_holder(H, delta, gamma)
        assert abs(m.inverse(H / 2) / (delta * 2 ** (-1 / gamma)) - 1) < 1e-12

    def test_above_sup(self):
        assert M.stationary_holder(1.0, 0.5, 0.3).inverse(2.0) == math.inf
        assert M.kisel_nv(0.01, 0.005, 1.6).inverse(1.0) == math.inf

    def test_kisel_delta(self):
        m = M.kisel_nv(0.01, 0.005, 1.6)
        assert abs(m.inverse(m.eval(0.01)) / 0.01 - 1) < 1e-10

    def test_negative(self):
        with pytest.raises(ParameterError):
            M.power_law(0.5).inverse(-1.0)

    @settings(max_examples=60, deadline=None)
    @given(i=st.integers(0, len(FAMILY_INSTANCES) - 1), u=st.floats(-6, 3))
    def test_inverse_of_eval(self, i, u):
        m = FAMILY_INSTANCES[i]
        x = 10.0 ** u
        if m.deriv(x, "right") <= 0:
            return
        y = m.eval(x)
        assert abs(m.eval(m.inverse(y)) / y - 1) < 1e-10


class TestScaling:
    def test_identity(self):
        m = M.kisel_nv(0.05, 0.01, 1.8)
        xs = np.geomspace(1e-4, 1e4, 50)
        assert np.array_equal(m.scaled(1.0, 0.3, 1.8).eval(xs), m.eval(xs))

    @settings(max_examples=40, deadline=None)
    @given(lam=st.floats(0.01, 100), u=st.floats(-5, 5))
    def test_definition(self, lam, u):
        a, b = 0.3, 1.8
        m = M.kisel_nv(0.05, 0.01, b)
        x = 10.0 ** u
        got = m.scaled(lam, a, b).eval(x)
        want = lam ** (b - a - 1) * m.eval(lam * x)
        assert abs(got / want - 1) < 1e-14

    def test_inverse_of_scaled(self):
        a, b, lam = 0.3, 1.8, 4.0
        m = M.kisel_nv(0.05, 0.01, b)
        s = m.scaled(lam, a, b)
        for y in (1e-4, 0.01, 0.04):
            want = m.inverse(y / lam ** (b - a - 1)) / lam
            assert abs(s.inverse(y) / want - 1) < 1e-12

    def test_composition(self):
        a, b = 0.2, 1.5
        m = M.kisel_nv(0.05, 0.01, b)
        two = m.scaled(2.0, a, b).scaled(3.5, a, b)
        one = m.scaled(7.0, a, b)
        xs = np.geomspace(1e-5, 1e3, 20)
        assert np.allclose(two.eval(xs), one.eval(xs), rtol=1e-14, atol=0)


class TestConcavity:
    @pytest.mark.parametrize("i", range(len(FAMILY_INSTANCES)))
    def test_family_instances_are_concave(self, i):
        m = FAMILY_INSTANCES[i]
        assert m.concave
        for b in m.breakpoints:
            assert m.deriv(b, "left") >= m.deriv(b, "right")
        xs = np.geomspace(1e-4, 1e4, 200)
        d = m.deriv(xs)
        assert np.all(np.diff(d) <= 1e-12 * np.abs(d[:-1]))

    def test_large_delta_breaks_concavity(self):
        # right derivative above the left one at delta
        assert not M.kisel_nv(0.5, 0.6, 1.2).concave

    def test_conditions(self):
        assert M.kisel_nv(0.01, 0.005, 1.6).condition == "c"
        assert M.eventual(1.0, 0.5, 0.3, 0.1).condition == "a"
        assert M.power_law(0.5).condition == "b"
        assert M.linear().condition == "none"


class TestTimeDependence:
    def test_vanish_time(self):
        assert M.vanish_time(0.5, 0.9, 0.3) == 0.5 ** 0.9 / (0.3 * 0.9)

    def test_endpoints(self):
        delta, beta, C2 = 0.5, 0.9, 0.3
        T0 = M.vanish_time(delta, beta, C2)
        assert abs(M.xi0_of_t(delta, beta, C2, 0.0) - delta) < 1e-15
        assert M.xi0_of_t(delta, beta, C2, T0) == 0.0
        with pytest.raises(ParameterError):
            M.xi0_of_t(delta, beta, C2, 1.01 * T0)

    def test_solves_ode(self):
        delta, beta, C2 = 0.5, 0.9, 0.3
        t = M.vanish_time(delta, beta, C2) / 2
        h = 1e-6
        fd = (M.xi0_of_t(delta, beta, C2, t + h) - M.xi0_of_t(delta, beta, C2, t - h)) / (2 * h)
        x0 = M.xi0_of_t(delta, beta, C2, t)
        assert abs(fd + C2 * x0 ** (1 - beta)) < 1e-6

    def test_eventual_converges_to_stationary(self):
        H, delta, gamma = 1.0, 0.5, 0.3
        ev = M.eventual(H, delta, gamma, 1e-8)
        st_ = M.stationary_holder(H, delta, gamma)
        xs = np.geomspace(1e-6, 10, 50)
        assert np.allclose(ev.eval(xs), st_.eval(xs), rtol=1e-12, atol=0)

    def test_eventual_at_degenerates(self):
        T0 = M.vanish_time(0.5, 0.9, 0.3)
        assert M.eventual_at(1.0, 0.5, 0.3, 0.9, 0.3, T0).family == "stationary-holder"


class TestTabulated:
    def test_linear_interpolation(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("xi,omega\n1,1\n2,1.5\n4,2\n")
        m = M.read_tabulated_csv(p)
        assert m.approximate
        assert abs(m.eval(3.0) - 1.75) < 1e-15 and m.eval(10.0) == 2.0

    def test_rejects_nonconcave(self):
        with pytest.raises(ParameterError):
            M.tabulated([1, 2, 3], [1, 1.1, 2])

    def test_from_description(self):
        m = M.from_description({"family": "stationary-holder", "H": 1.0, "delta": 0.5,
                                "gamma": 0.3})
        assert m.family == "stationary-holder"
        with pytest.raises(ParameterError):
            M.from_description({"family": "nope"})


class TestObedience:
    def test_constant_field(self):
        f = ScalarField2D(Grid2D(16), physical=np.full((16, 16), 3.0))
        assert M.obeys(f, M.linear()).ratio == 0.0

    def test_sine_against_identity(self):
        f = single_mode(Grid2D(32), (1, 0), phase=-math.pi / 2)
        rep = M.obeys(f, M.linear(1.0))
        assert rep.exhaustive and rep.ratio <= 1.0

    def test_sine_against_half_slope(self):
        # exhaustive 32x32 pair search, ratio frozen from a brute-force loop
        f = single_mode(Grid2D(32), (1, 0), phase=-math.pi / 2)
        rep = M.obeys(f, M.linear(0.5))
        assert not rep.obeys
        assert abs(rep.ratio - 1.9871737022884162) < 1e-12
        (i1, _), (i2, _), d = rep.witness
        assert abs(d - 2 * math.pi / 32) < 1e-12

    def test_point_cloud(self):
        pts = np.random.default_rng(0).uniform(0, 1, size=(40, 2))
        rep = M.obeys(lambda p: p[:, 0], M.linear(1.0), points=pts)
        assert rep.ratio <= 1.0 + 1e-15 and rep.n_pairs == 780
        assert rep.undersampled
