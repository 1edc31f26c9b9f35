"""Rotation vectors, small divisors, nonresonance scans."""

import pytest
from mpmath import mp, mpf

from wbirkhoff.errors import DomainError, ParseError, SupportMismatch
from wbirkhoff.lattice import MultiIndex, enumerate_ball_eta, eta_norm
from wbirkhoff.rotations import (make_approx, make_rotation,
                                 nonresonance_scan, small_divisor)


@pytest.fixture(scope="module")
def golden():
    return make_rotation("golden", 60)


def test_golden_coordinate(golden):
    with mp.workdps(60):
        assert abs(golden.coords[0] - (mp.sqrt(5) - 1) / 2) < mpf("1e-58")


def test_sqrtprimes_finite():
    r = make_rotation("sqrtprimes:d=2", 50)
    with mp.workdps(50):
        assert abs(r.coords[0] - mp.frac(mp.sqrt(2))) < mpf("1e-48")
        assert abs(r.coords[1] - mp.frac(mp.sqrt(3))) < mpf("1e-48")
    assert r.regime == "finite"


def test_sqrtprimes_infinite():
    r = make_rotation("sqrtprimes:D=3,eta=2", 50)
    assert r.regime == "infinite"
    assert r.eta == 2
    assert all(1 <= c <= 2 for c in r.coords)


def test_uniform_rotation_deterministic():
    a = make_rotation("uniform:D=6,seed=42", 60)
    b = make_rotation("uniform:D=6,seed=42", 60)
    assert a.coords == b.coords
    c = make_rotation("uniform:D=6,seed=43", 60)
    assert a.coords != c.coords
    assert all(1 <= x <= 2 for x in a.coords)


def test_list_rotation_reduced_mod_1():
    r = make_rotation("list:1.25,0.5", 50)
    with mp.workdps(50):
        assert r.coords[0] == mpf("0.25")
        assert r.coords[1] == mpf("0.5")


def test_parse_errors():
    for bad in ("nonsense", "uniform:D=6", "sqrtprimes:x=2", "list:"):
        with pytest.raises(ParseError):
            make_rotation(bad, 50)


def test_small_divisor_resonant_rational():
    half = make_rotation("list:0.5", 50)
    k2 = MultiIndex(((0, 2),), 1)
    assert small_divisor(half, k2, "discrete") == 0


def test_small_divisor_golden_k1(golden):
    k1 = MultiIndex(((0, 1),), 1)
    with mp.workdps(60):
        expect = (3 - mp.sqrt(5)) / 2
        assert abs(small_divisor(golden, k1, "discrete") - expect) < mpf("1e-55")


def test_small_divisor_zero_mode(golden):
    k0 = MultiIndex((), 1)
    assert small_divisor(golden, k0, "continuous") == 0
    assert small_divisor(golden, k0, "discrete") == 0


def test_small_divisor_at_most_half(golden):
    with mp.workdps(60):
        for k in range(1, 200):
            v = small_divisor(golden, MultiIndex(((0, k),), 1), "discrete")
            assert v <= mpf(1) / 2


def test_small_divisor_doubled_precision_agreement():
    lo = make_rotation("golden", 40)
    hi = make_rotation("golden", 40)   # same dyadic coordinates
    k = MultiIndex(((0, 987),), 1)
    a = small_divisor(lo, k, "discrete")
    with mp.workdps(100):
        dot = 987 * hi.coords[0]
        b = abs(dot - mp.nint(dot))
        assert abs(a - b) < mpf("1e-35")


def test_support_mismatch(golden):
    with pytest.raises(SupportMismatch):
        small_divisor(golden, MultiIndex(((3, 1),)), "discrete")


def test_scan_golden_linear_gauge(golden):
    # frozen oracle: the ball minimum of |k| * dist(k rho, Z) sits at k = +-1
    # with value dist(rho, Z) = (3 - sqrt 5)/2, not at the Fibonacci liminf
    res = nonresonance_scan(golden, make_approx("pow:tau=1"), 100)
    with mp.workdps(60):
        assert abs(res.alpha - (3 - mp.sqrt(5)) / 2) < mpf("1e-55")
    assert res.argmin.entries in (((0, 1),), ((0, -1),))
    assert res.radius == 100


def test_scan_resonant_vector_gives_zero():
    half = make_rotation("list:0.5", 50)
    res = nonresonance_scan(half, make_approx("pow:tau=1"), 4)
    assert res.alpha == 0


def test_scan_monotone_in_radius(golden):
    approx = make_approx("pow:tau=1.2")
    vals = [nonresonance_scan(golden, approx, K).alpha for K in (5, 20, 80)]
    assert vals[0] >= vals[1] >= vals[2]


def test_golden_three_distance_band(golden):
    # frozen oracle band for K * min_{k<=K} dist(k rho, Z) on this K grid:
    # observed [0.4531, 0.6611]
    with mp.workdps(50):
        for K in (10, 31, 100, 316, 1000):
            md = min(small_divisor(golden, MultiIndex(((0, k),), 1), "discrete")
                     for k in range(1, K + 1))
            assert mpf("0.44") <= K * md <= mpf("0.70")


def test_monte_carlo_infinite_scans_positive():
    d = make_approx("dioprod:mu=2,eta=2")
    for seed in (42, 7, 19):
        rho = make_rotation(f"uniform:D=6,seed={seed}", 60)
        res = nonresonance_scan(rho, d, 12)
        assert res.alpha > 0


def test_dioprod_product_value():
    d = make_approx("dioprod:mu=2,eta=2")
    k = MultiIndex(((0, 1), (3, -2)))
    with mp.workdps(30):
        assert d.product(k) == (1 + 1) * (1 + 4 * 9)


def test_dioprod_envelope_bound():
    # product bound d(k) <= exp(A) * exp(rho* |k|_eta); frozen calibration
    # over |k|_eta <= 40: A(1/4) <= 5.3, A(1) <= 0 + margin
    d = make_approx("dioprod:mu=2,eta=2")
    with mp.workdps(30):
        worst_q, worst_1 = -mp.inf, -mp.inf
        for k in enumerate_ball_eta(2, 40):
            ln = mp.log(d.product(k))
            nrm = eta_norm(k, 2)
            worst_q = max(worst_q, ln - nrm / mpf(4))
            worst_1 = max(worst_1, ln - nrm)
        assert worst_q <= mpf("5.3")
        assert worst_1 <= mpf("0.0")


def test_approx_function_normalization():
    pw = make_approx("pow:tau=1.7")
    sx = make_approx("sexp:mu=2,nu=0.5")
    with mp.workdps(30):
        assert pw(1) == 1
        assert abs(sx(1) - 1) == 0
        assert sx(16) > sx(4) > sx(1)
        # inverse round-trips
        for y in ("3.5", "120"):
            assert abs(pw(pw.inverse(y)) - mpf(y)) < mpf("1e-25")
            assert abs(sx(sx.inverse(y)) - mpf(y)) < mpf("1e-20")


def test_approx_rejects_bad_params():
    with pytest.raises(DomainError):
        make_approx("pow:tau=0")
    with pytest.raises(DomainError):
        make_approx("dioprod:mu=1,eta=2")
    with pytest.raises(ParseError):
        make_approx("pow:x=1")


def test_tabulated_monotone():
    t = make_approx("table:1:1,2:4,4:16")
    with mp.workdps(30):
        assert t(1) == 1
        assert t(2) == 4
        assert t(3) == 10          # linear between knots
    with pytest.raises(DomainError):
        t(5)
    with pytest.raises(DomainError):
        make_approx("table:1:5,2:4")
