"""Window families, derivative tables, and L1 norms."""

import math

import pytest
from mpmath import mp, mpf

from wbirkhoff import weights as W
from wbirkhoff.errors import DegenerateWindow, DomainError

# frozen from the high-precision quadrature oracle (120 digits, three
# independent splittings agree): C* = 1 / int_0^1 exp(-1/(s(1-s))) ds
CSTAR_40 = "142.2503757770958681344851836954481540805"
W_HALF_40 = "2.605406514520027724777623987442754989812"


@pytest.fixture(scope="module")
def wexp():
    return W.make_weight("exp", 50)


def test_exp_normalizer_matches_oracle(wexp):
    with mp.workdps(60):
        assert abs(wexp.normalizer - mpf(CSTAR_40)) < mpf("1e-36")


def test_exp_endpoints_exactly_zero(wexp):
    assert W.eval_weight(wexp, 0) == 0
    assert W.eval_weight(wexp, 1) == 0
    # below the underflow knee: exact zero, no exception
    assert W.eval_weight(wexp, "1e-6") == 0


def test_exp_midpoint_value(wexp):
    with mp.workdps(60):
        assert abs(W.eval_weight(wexp, "0.5") - mpf(W_HALF_40)) < mpf("1e-37")


def test_domain_error_outside_unit_interval(wexp):
    with pytest.raises(DomainError):
        W.eval_weight(wexp, "1.5")
    with pytest.raises(DomainError):
        W.eval_weight(wexp, "-0.1")


def test_bump_symmetry_p_equals_q():
    w = W.make_weight("bump:p=2,q=2", 40)
    with mp.workdps(50):
        # exact dyadic points x and 1-x; values agree to working accuracy
        for num in (5, 3, 1):
            a = W.eval_weight(w, mpf(num) / 16)
            b = W.eval_weight(w, mpf(16 - num) / 16)
            assert abs(a - b) <= abs(a) * mpf("1e-45")


def test_bump_asymmetric_when_p_ne_q():
    w = W.make_weight("bump:p=1,q=2", 40)
    assert W.eval_weight(w, "0.3") != W.eval_weight(w, "0.7")


def test_positive_inside_unit_interval(wexp):
    for x in ("0.1", "0.25", "0.5", "0.8"):
        assert W.eval_weight(wexp, x) > 0


@pytest.mark.parametrize("spec,order", [
    ("exp", math.inf), ("bump:p=1,q=3", math.inf), ("poly:s=3", 2),
    ("poly:s=5", 4), ("flat", 0),
])
def test_smoothness_orders(spec, order):
    assert W.make_weight(spec, 40).smoothness_order == order


@pytest.mark.parametrize("spec", ["exp", "bump:p=2,q=2", "bump:p=1,q=3",
                                  "poly:s=3", "poly:s=4", "flat"])
def test_unit_integral(spec):
    w = W.make_weight(spec, 40)
    with mp.workdps(50):
        val = mp.quad(lambda t: W.eval_weight(w, t), [0, mpf(1) / 2, 1])
        assert abs(val - 1) < mpf("1e-38")


def test_normalizer_consistency_with_integral(wexp):
    # finite difference of the cumulative integral reproduces the density
    with mp.workdps(60):
        x, h = mpf("0.4"), mpf("1e-12")
        cum = lambda t: mp.quad(lambda s: W.eval_weight(wexp, s), [0, t])
        fd = (cum(x + h) - cum(x - h)) / (2 * h)
        assert abs(fd - W.eval_weight(wexp, x)) < mpf("1e-20")


def test_a_n_flat():
    w = W.make_weight("flat", 40)
    assert W.normalization_A_N(w, 10) == 10


def test_a_n_exp_two_samples(wexp):
    # only the n=1 term survives: A_2 = w(1/2)
    with mp.workdps(55):
        assert abs(W.normalization_A_N(wexp, 2) - mpf(W_HALF_40)) < mpf("1e-37")


def test_a_n_degenerate(wexp):
    with pytest.raises(DegenerateWindow):
        W.normalization_A_N(wexp, 1)


def test_a_n_over_all_integers(wexp):
    # the window vanishes outside [0,1]: summing any larger index range
    # changes nothing
    N = 37
    with mp.workdps(60):
        full = mp.fsum(W.eval_weight_extended(wexp, mpf(n) / N)
                       for n in range(-2 * N, 3 * N))
        assert full == W.normalization_A_N(wexp, N)


def test_a_n_over_n_poisson_decay(wexp):
    # A_N/N -> 1 superpolynomially for the exp window
    with mp.workdps(70):
        dev = abs(W.normalization_A_N(wexp, 256) / 256 - 1)
        assert dev < mpf("1e-8")


# ---------------------------------------------------------------------------
# Derivative coefficient tables
# ---------------------------------------------------------------------------

def test_table_n1():
    t = W.deriv_coeff_table(1)
    assert t.coeffs == (0, 1)
    assert t.b == 1


def test_table_n2_symbolic_oracle():
    # differentiating (x^-2) e^(-1/x) once: a4=1, a3=-2, a2=a1=0
    t = W.deriv_coeff_table(2)
    assert t.coeffs == (0, 0, -2, 1)
    assert t.b == 2


@pytest.mark.parametrize("n", range(1, 21))
def test_leading_coefficient_is_one(n):
    t = W.deriv_coeff_table(n)
    assert t.coeffs[2 * n - 1] == 1


def test_b_recurrence_and_factorial_bound():
    prev = W.deriv_coeff_table(1)
    for n in range(1, 20):
        cur = W.deriv_coeff_table(n + 1)
        assert cur.b <= 8 * n * n * prev.b
        prev = cur
    for n in range(1, 21):
        assert W.deriv_coeff_table(n).b <= 8 ** n * math.factorial(n) ** 2


def test_tables_match_symbolic_differentiation():
    # independent oracle: sympy differentiates exp(-1/x) symbolically
    import sympy as sp
    x = sp.Symbol("x")
    expr = sp.exp(-1 / x)
    for n in range(1, 8):
        expr = sp.diff(expr, x)
        poly = sp.expand(sp.simplify(expr * sp.exp(1 / x)))
        t = W.deriv_coeff_table(n)
        recon = sum(a * x ** -(j + 1) for j, a in enumerate(t.coeffs))
        assert sp.simplify(poly - recon) == 0


def test_wbar_derivative_matches_symbolic():
    import sympy as sp
    x = sp.Symbol("x")
    w = W.make_weight("exp", 40)
    raw = sp.exp(-1 / (x * (1 - x)))
    pt = sp.Rational(37, 100)
    for n in (1, 2, 3, 5):
        with mp.workdps(45):
            val = mpf(str(sp.N(sp.diff(raw, x, n).subs(x, pt), 40)))
            mine = W.wbar_derivative(w, n, mpf(37) / 100)
            assert abs(mine - w.normalizer * val) < abs(mine) * mpf("1e-30")


# frozen from the antiderivative-telescoping oracle at 80 digits
L1_ORACLE = {
    2: "44.1422605959783920120504813277",
    3: "502.887828110456980644240007755",
    4: "8408.82785901467429301492481051",
    5: "227273.017891402159148914588348",
    6: "10395027.4906162561591033987801",
}


@pytest.mark.parametrize("n", sorted(L1_ORACLE))
def test_l1_norms_match_frozen_oracle(n):
    with mp.workdps(50):
        val = W.l1_derivative_norm(n, 40)
        ref = mpf(L1_ORACLE[n])
        assert abs(val - ref) < ref * mpf("1e-25")


def test_l1_norms_grow(wexp):
    with mp.workdps(45):
        table = W.l1_norm_table(6, 40)
        assert all(table[n + 1] > table[n] for n in range(2, 6))


def test_l1_rejects_small_order():
    with pytest.raises(DomainError):
        W.l1_derivative_norm(1, 40)


def test_empirical_beta_band():
    # growth exponent max_n log(L1_n)/(n log n); the derivation admits any
    # beta > 6, the measured value is far smaller
    with mp.workdps(45):
        beta = W.empirical_beta(8, 40)
        assert 1 < beta < 6
