"""Weighting functions for accelerated Birkhoff averaging.

Four families are provided, all normalized to unit integral over [0, 1]:

* ``exp``            the special C0-infinity bump
                     w(x) = C * exp(-1/x - 1/(1-x)) = C * exp(-1/(x(1-x))),
                     the workhorse for exponential-rate averaging;
* ``bump:p=..,q=..`` the two-parameter C0-infinity family
                     w(x) = C_pq * exp(-x^-p (1-x)^-q);
* ``poly:s=..``      the finite-smoothness bump w(x) = C_s * (x(1-x))^s,
                     which vanishes to order s at both endpoints and is the
                     canonical C0^(s-1) window for polynomial-rate tests;
* ``flat``           w == 1 (the unweighted average).

For the ``exp`` window the module also carries exact integer machinery for
its derivatives.  With P(x) = exp(-1/x) one has

    P^(n)(x) = (sum_{j=1..2n} a_j^(n) x^-j) * exp(-1/x),   a_j^(n) integers,

and the n-th derivative of the unnormalized window P(x)P(1-x) collapses,
after clearing denominators, to an integer polynomial G_n:

    (P(x)P(1-x))^(n) = G_n(x) * x^(-2n) (1-x)^(-2n) * exp(-1/(x(1-x))).

The coefficient tables drive both the L1 norms of high derivatives (needed
by variable-order integration by parts) and exact sign-change subdivision
for those L1 integrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import sympy
from mpmath import mp, mpf

from .errors import DegenerateWindow, DomainError, PrecisionExhausted
from .prec import GUARD_DIGITS, fsum, working

__all__ = [
    "WeightFunction",
    "DerivCoeffTable",
    "make_weight",
    "eval_weight",
    "normalization_A_N",
    "deriv_coeff_table",
    "wbar_derivative",
    "wbar_derivative_roots",
    "l1_derivative_norm",
    "l1_norm_table",
    "empirical_beta",
]


@dataclass(frozen=True)
class WeightFunction:
    """An immutable, normalized weighting function.

    kind is one of "exp", "bump", "poly", "flat".  ``normalizer`` is the
    constant making the integral over [0,1] equal to 1, computed once at
    ``precision`` digits.  ``smoothness_order`` is the largest m such that
    the window is C0^m (math.inf for the exponential bumps, s-1 for the
    polynomial bump, 0 for flat).
    """

    kind: str
    p: mpf | None
    q: mpf | None
    s: int | None
    precision: int
    normalizer: mpf
    smoothness_order: float

    def at_precision(self, dps: int) -> "WeightFunction":
        """Return this weight with its normalizer valid at >= dps digits."""
        if self.precision >= dps:
            return self
        return make_weight(self.spec_string(), dps)

    def spec_string(self) -> str:
        if self.kind == "exp":
            return "exp"
        if self.kind == "flat":
            return "flat"
        if self.kind == "poly":
            return f"poly:s={self.s}"
        return f"bump:p={mp.nstr(self.p, 17)},q={mp.nstr(self.q, 17)}"

    def __hash__(self):
        return hash((self.kind, str(self.p), str(self.q), self.s, self.precision))


def _parse_params(body: str) -> dict:
    out = {}
    for item in body.split(","):
        if not item:
            continue
        if "=" not in item:
            raise DomainError(f"malformed weight parameter {item!r}")
        key, val = item.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def make_weight(spec: str, precision: int | None = None) -> WeightFunction:
    """Build a weight from its spec string: exp | bump:p=,q= | poly:s= | flat."""
    from .prec import default_precision
    from .errors import ParseError

    dps = precision or default_precision()
    spec = spec.strip()
    with working(dps + GUARD_DIGITS):
        if spec == "exp":
            norm = 1 / mp.quad(lambda t: mp.exp(-1 / (t * (1 - t))), [0, mpf(1) / 2, 1])
            return WeightFunction("exp", mpf(1), mpf(1), None, dps, norm, math.inf)
        if spec == "flat":
            return WeightFunction("flat", None, None, None, dps, mpf(1), 0)
        if spec.startswith("poly:"):
            params = _parse_params(spec[len("poly:"):])
            try:
                s = int(params["s"])
            except (KeyError, ValueError) as exc:
                raise ParseError(f"bad poly weight spec {spec!r}") from exc
            if s < 3:
                raise DomainError("poly weight needs s >= 3")
            norm = 1 / mp.beta(s + 1, s + 1)
            return WeightFunction("poly", None, None, s, dps, norm, s - 1)
        if spec.startswith("bump:"):
            params = _parse_params(spec[len("bump:"):])
            try:
                p = mpf(params["p"])
                q = mpf(params["q"])
            except (KeyError, ValueError) as exc:
                raise ParseError(f"bad bump weight spec {spec!r}") from exc
            if p <= 0 or q <= 0:
                raise DomainError("bump weight needs p, q > 0")
            integrand = lambda t: mp.exp(-(t ** -p) * (1 - t) ** -q)
            norm = 1 / mp.quad(integrand, [0, mpf(1) / 2, 1])
            return WeightFunction("bump", p, q, None, dps, norm, math.inf)
    raise ParseError(f"unknown weight spec {spec!r}")


def _bump_exponent_knee(dps: int) -> mpf:
    # below exp(-knee) the window is indistinguishable from zero at the
    # working precision of any O(N)-term sum; return exact 0 there
    return mp.log(10) * (dps + 40)


def _raw_weight(w: WeightFunction, x: mpf) -> mpf:
    """Unnormalized window value, exactly 0 at and beyond the knee."""
    if w.kind == "flat":
        return mpf(1)
    if x <= 0 or x >= 1:
        return mp.zero
    if w.kind == "poly":
        return (x * (1 - x)) ** w.s
    exponent = (x ** -w.p) * (1 - x) ** -w.q
    if exponent > _bump_exponent_knee(mp.dps):
        return mp.zero
    return mp.exp(-exponent)


def eval_weight(w: WeightFunction, x) -> mpf:
    """Normalized weight value at x in [0, 1]."""
    with working(w.precision + GUARD_DIGITS):
        x = mpf(x)
        if x < 0 or x > 1:
            raise DomainError(f"weight argument {mp.nstr(x, 8)} outside [0, 1]")
        if w.kind == "flat":
            return mpf(1)
        raw = _raw_weight(w, x)
        return w.normalizer * raw if raw else mp.zero


def eval_weight_extended(w: WeightFunction, x) -> mpf:
    """Weight value with the C0 extension by zero outside [0, 1].

    Flat is the exception: it is only defined on the window and extends by 0
    as well (this is the convention that makes sum-over-all-integers
    identities hold for every kind).
    """
    with working(w.precision + GUARD_DIGITS):
        x = mpf(x)
        if x < 0 or x > 1:
            return mp.zero
        return eval_weight(w, x)


@lru_cache(maxsize=256)
def normalization_A_N(w: WeightFunction, N: int) -> mpf:
    """A_N = sum_{n=0}^{N-1} w(n/N), by exact accumulation.

    Raises DegenerateWindow when every term vanishes (bump weights with
    N < 2: the only sample sits at the endpoint zero).
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    with working(w.precision + GUARD_DIGITS):
        if w.kind == "flat":
            return mpf(N)
        terms = []
        for n in range(N):
            v = _raw_weight(w, mpf(n) / N)
            if v:
                terms.append(v)
        if not terms:
            raise DegenerateWindow(
                f"window sum A_N vanishes for kind={w.kind!r}, N={N}")
        return w.normalizer * fsum(terms)


def weight_samples(w: WeightFunction, N: int, dps: int) -> list[mpf]:
    """The list [w(n/N)] for n=0..N-1 at >= dps digits (cached upstream)."""
    ww = w.at_precision(dps)
    with working(dps + GUARD_DIGITS):
        return [eval_weight(ww, mpf(n) / N) for n in range(N)]


# ---------------------------------------------------------------------------
# Exact derivative machinery for the exponential window
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DerivCoeffTable:
    """Exact integer coefficients of the n-th derivative of exp(-1/x).

    coeffs[j-1] is the integer multiplying x^-j, j = 1..2n.  The leading
    coefficient (j = 2n) is always 1; b is the maximum absolute value.
    """

    order: int
    coeffs: tuple[int, ...]
    b: int


@lru_cache(maxsize=None)
def deriv_coeff_table(n: int) -> DerivCoeffTable:
    """Coefficient table of d^n/dx^n exp(-1/x), exact integers.

    Differentiating (sum a_j x^-j) e^(-1/x) sends a_j to the pair of
    contributions -j*a_j at x^-(j+1) and a_j at x^-(j+2); the recurrence is
    applied symbolically in integer arithmetic.
    """
    if n < 1:
        raise DomainError("derivative order must be >= 1")
    if n == 1:
        return DerivCoeffTable(1, (0, 1), 1)
    prev = deriv_coeff_table(n - 1)
    m = 2 * (n - 1)
    coeffs = [0] * (2 * n)
    for j in range(1, m + 1):
        a = prev.coeffs[j - 1]
        if a == 0:
            continue
        coeffs[j] -= j * a          # index j   <-> power x^-(j+1)
        coeffs[j + 1] += a          # index j+1 <-> power x^-(j+2)
    return DerivCoeffTable(n, tuple(coeffs), max(abs(c) for c in coeffs))


def _poly_mul(a: list[int], b: list[int]) -> list[int]:
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            if bj:
                out[i + j] += ai * bj
    return out


def _poly_sub_1mx(c: list[int]) -> list[int]:
    """Coefficients of p(1-x) from coefficients of p(x) (ascending order)."""
    out = [0] * len(c)
    for j, cj in enumerate(c):
        if cj == 0:
            continue
        # (1-x)^j = sum_m C(j,m) (-1)^m x^m
        for m in range(j + 1):
            out[m] += cj * math.comb(j, m) * (-1) ** m
    return out


def _p_poly(i: int) -> list[int]:
    """x^(2i) * (coefficient sum of P^(i)), a polynomial of degree 2i-1."""
    if i == 0:
        return [1]
    tab = deriv_coeff_table(i)
    # sum_j a_j x^(2i-j), ascending powers 0..2i-1
    out = [0] * (2 * i)
    for j in range(1, 2 * i + 1):
        out[2 * i - j] = tab.coeffs[j - 1]
    return out


@lru_cache(maxsize=None)
def wbar_deriv_poly(n: int) -> tuple[int, ...]:
    """Integer polynomial G_n with
    (P(x)P(1-x))^(n) = G_n(x) x^(-2n) (1-x)^(-2n) exp(-1/(x(1-x))).

    Assembled from the Leibniz expansion; the (1-x)-side derivative of
    order m carries the sign (-1)^m.
    """
    if n == 0:
        return (1,)
    acc = [0] * (4 * n - 1)
    for i in range(n + 1):
        left = _poly_mul(_p_poly(i), [0] * (2 * (n - i)) + [1])      # x^(2(n-i)) * poly_i(x)
        right_base = _poly_sub_1mx(_p_poly(n - i))                   # poly_{n-i}(1-x)
        right = _poly_mul(right_base, _pow_1mx(2 * i))               # (1-x)^(2i) * ...
        term = _poly_mul(left, right)
        sign = (-1) ** (n - i)
        coeff = math.comb(n, i) * sign
        for d, v in enumerate(term):
            if v:
                acc[d] += coeff * v
    while len(acc) > 1 and acc[-1] == 0:
        acc.pop()
    return tuple(acc)


@lru_cache(maxsize=None)
def _pow_1mx(m: int) -> tuple[int, ...]:
    out = [1]
    for _ in range(m):
        out = _poly_mul(out, [1, -1])
    return tuple(out)


def _poly_eval(coeffs, x: mpf) -> mpf:
    acc = mp.zero
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def wbar_derivative(w: WeightFunction, n: int, x) -> mpf:
    """n-th derivative of the normalized exponential window at x in [0,1].

    Exact zeros at the endpoints (the window vanishes to all orders there).
    """
    if w.kind != "exp":
        raise DomainError("derivative tables exist only for the exp window")
    with working(w.precision + GUARD_DIGITS):
        x = mpf(x)
        if x <= 0 or x >= 1:
            return mp.zero
        expo = 1 / (x * (1 - x))
        if expo > _bump_exponent_knee(mp.dps):
            return mp.zero
        g = _poly_eval(wbar_deriv_poly(n), x)
        return w.normalizer * g * x ** (-2 * n) * (1 - x) ** (-2 * n) * mp.exp(-expo)


@lru_cache(maxsize=None)
def wbar_derivative_roots(n: int, dps: int) -> tuple[mpf, ...]:
    """Roots of the n-th derivative of the exp window inside (0, 1).

    Sign changes of the derivative coincide with real roots of the integer
    polynomial G_n; sympy isolates them and bisection on exact-coefficient
    Horner evaluation refines to ~dps digits.
    """
    poly = sympy.Poly(list(reversed(wbar_deriv_poly(n))), sympy.Symbol("x"))
    intervals = poly.intervals(inf=0, sup=1)
    roots = []
    with working(2 * dps + 20):
        coeffs = wbar_deriv_poly(n)
        target = mpf(10) ** (-dps - 5)
        for (lo, hi), _mult in intervals:
            a, b = mpf(sympy.Rational(lo)), mpf(sympy.Rational(hi))
            if b <= 0 or a >= 1:
                continue
            fa = _poly_eval(coeffs, a)
            while b - a > target:
                mid = (a + b) / 2
                fm = _poly_eval(coeffs, mid)
                if fm == 0:
                    a = b = mid
                    break
                if (fa < 0) == (fm < 0):
                    a, fa = mid, fm
                else:
                    b = mid
            roots.append((a + b) / 2)
    return tuple(sorted(roots))


def l1_derivative_norm(n: int, precision: int) -> mpf:
    """L1 norm over [0,1] of the n-th derivative of the exp window.

    Adaptive quadrature subdivided at the sign changes of the integer
    polynomial factor, so each panel has a one-signed integrand; relative
    target accuracy is 10^(-precision/2).
    """
    if n < 2:
        raise DomainError("L1 derivative norms are tabulated for n >= 2")
    w = make_weight("exp", precision)
    pts = [mpf(0)] + list(wbar_derivative_roots(n, precision)) + [mpf(1)]
    with working(precision + GUARD_DIGITS):
        total = []
        err_acc = mp.zero
        for a, b in zip(pts[:-1], pts[1:]):
            if b - a <= 0:
                continue
            val, err = mp.quad(lambda t: wbar_derivative(w, n, t), [a, b],
                               error=True)
            total.append(abs(val))
            err_acc += err
        result = fsum(total)
        if not result or err_acc / result > mpf(10) ** (-(precision // 2)):
            raise PrecisionExhausted(
                f"L1 quadrature for n={n} missed relative target at"
                f" {precision} digits (err={mp.nstr(err_acc, 3)})")
        return result


def l1_norm_table(n_max: int, precision: int) -> dict[int, mpf]:
    """L1 norms of derivatives 2..n_max of the exp window."""
    return {n: l1_derivative_norm(n, precision) for n in range(2, n_max + 1)}


def empirical_beta(n_max: int, precision: int = 40) -> mpf:
    """Empirical growth exponent of the derivative L1 norms.

    Returns max over 2 <= n <= n_max of log(L1_n) / (n log n); the L1 norms
    then satisfy L1_n <= n^(beta*n) over the tabulated range.
    """
    table = l1_norm_table(n_max, precision)
    with working(precision):
        return max(mp.log(v) / (n * mp.log(n)) for n, v in table.items())
