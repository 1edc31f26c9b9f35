"""Rotation vectors, approximation functions, and nonresonance scans.

A rotation vector is a tuple of extended-precision torus coordinates:
either a finite-dimensional vector with coordinates reduced mod 1, or a
truncated stand-in for an infinite-dimensional vector with coordinates in
[1, 2] (the standard probability cube for almost-periodic rotations).
Coordinates are *fixed dyadics*: whatever irrational a spec names, the
stored vector is its binary rounding at construction precision, and every
computation downstream (orbits, small divisors, kernels) uses that same
dyadic.  Experiments are therefore exactly reproducible, and orbit
generation by repeated mod-1 addition is exact (no drift to compensate).

Approximation functions calibrate how fast small divisors may shrink:

* ``pow:tau=..``          Delta(x) = x^tau            (Diophantine scale)
* ``sexp:mu=..,nu=..``    Delta(x) = exp(mu (x^nu-1)) (rescaled so Delta(1)=1)
* ``dioprod:mu=..,eta=..``  the product bound
      d(k) = prod_j (1 + |k_j|^mu <j>^mu)
  evaluated exactly from a multi-index; as a *scalar* function of x it is
  represented by its exponential envelope exp(x) (any rotation satisfying
  the product condition satisfies the scalar one after adjusting gamma).
* ``dexp``                Delta(x) = exp(exp(x)), the coefficient gauge of
  the doubly-exponential decay class.
* ``table:x1:y1,x2:y2,...``  user-supplied monotone table, linear between
  knots; queries outside the table are refused.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Iterator

from mpmath import mp, mpf

from .errors import DimensionError, DomainError, ParseError, SupportMismatch
from .lattice import MultiIndex, enumerate_ball_eta, enumerate_ball_finite, eta_norm
from .prec import GUARD_DIGITS, default_precision, dist_to_z, fsum, working

__all__ = [
    "ApproximationFunction",
    "RotationVector",
    "ScanResult",
    "make_approx",
    "make_rotation",
    "small_divisor",
    "nonresonance_scan",
]

#: mantissa bits for seeded uniform coordinates (dyadics on a 2^-96 grid)
UNIFORM_BITS = 96

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


@dataclass(frozen=True)
class ApproximationFunction:
    """Continuous, strictly increasing, unbounded rate gauge."""

    kind: str
    tau: mpf | None = None
    mu: mpf | None = None
    nu: mpf | None = None
    eta: int | None = None
    table: tuple[tuple[mpf, mpf], ...] | None = None

    def __post_init__(self):
        if self.kind == "pow" and not self.tau > 0:
            raise DomainError("pow approximation function needs tau > 0")
        if self.kind == "sexp" and (not self.mu > 0 or not self.nu > 0):
            raise DomainError("sexp approximation function needs mu, nu > 0")
        if self.kind == "dioprod" and (not self.mu > 1 or self.eta < 2):
            raise DomainError("dioprod needs mu > 1 and integer eta >= 2")
        if self.kind == "table":
            xs = [x for x, _ in self.table]
            ys = [y for _, y in self.table]
            if len(xs) < 2 or xs != sorted(xs) or ys != sorted(ys):
                raise DomainError("table must be strictly increasing")

    def __call__(self, x) -> mpf:
        x = mpf(x)
        if self.kind == "pow":
            return x ** self.tau
        if self.kind == "sexp":
            return mp.exp(self.mu * (x ** self.nu - 1))
        if self.kind == "dioprod":
            # scalar envelope of the product bound
            return mp.exp(x)
        if self.kind == "dexp":
            return mp.exp(mp.exp(x))
        lo = self.table[0][0]
        hi = self.table[-1][0]
        if x < lo or x > hi:
            raise DomainError("tabulated approximation function queried "
                              f"outside [{lo}, {hi}]")
        for (x0, y0), (x1, y1) in zip(self.table[:-1], self.table[1:]):
            if x <= x1:
                t = (x - x0) / (x1 - x0)
                return y0 + t * (y1 - y0)
        return self.table[-1][1]

    def inverse(self, y) -> mpf:
        """Inverse on [1, inf); values below the left endpoint clamp to 1."""
        y = mpf(y)
        if self.kind == "pow":
            return max(mpf(1), y ** (1 / self.tau))
        if self.kind == "sexp":
            if y <= 1:
                return mpf(1)
            return (1 + mp.log(y) / self.mu) ** (1 / self.nu)
        if self.kind == "dioprod":
            return max(mpf(1), mp.log(y)) if y > 1 else mpf(1)
        if self.kind == "dexp":
            return max(mpf(1), mp.log(mp.log(y))) if y > mp.exp(mp.e) else mpf(1)
        raise DomainError(f"no inverse for kind {self.kind!r}")

    def product(self, k: MultiIndex) -> mpf:
        """Exact product bound prod_j (1 + |k_j|^mu <j>^mu) for dioprod."""
        if self.kind != "dioprod":
            raise DomainError("product evaluation needs the dioprod kind")
        out = mpf(1)
        for j, v in k.entries:
            out *= 1 + mpf(abs(v)) ** self.mu * max(1, abs(j)) ** self.mu
        return out

    def gauge(self, k: MultiIndex, eta: int | None = None) -> mpf:
        """The value dividing the nonresonance constant for mode k."""
        if self.kind == "dioprod":
            return self.product(k)
        if eta is not None:
            return self(eta_norm(k, eta))
        return self(k.norm1)

    def spec_string(self) -> str:
        if self.kind == "pow":
            return f"pow:tau={mp.nstr(self.tau, 17)}"
        if self.kind == "sexp":
            return f"sexp:mu={mp.nstr(self.mu, 17)},nu={mp.nstr(self.nu, 17)}"
        if self.kind == "dioprod":
            return f"dioprod:mu={mp.nstr(self.mu, 17)},eta={self.eta}"
        if self.kind == "dexp":
            return "dexp"
        return "table:" + ",".join(
            f"{mp.nstr(x, 17)}:{mp.nstr(y, 17)}" for x, y in self.table)


def make_approx(spec: str) -> ApproximationFunction:
    """Parse an approximation-function spec string."""
    spec = spec.strip()
    try:
        if spec.startswith("pow:"):
            params = _params(spec[4:])
            return ApproximationFunction("pow", tau=mpf(params["tau"]))
        if spec.startswith("sexp:"):
            params = _params(spec[5:])
            return ApproximationFunction("sexp", mu=mpf(params["mu"]),
                                         nu=mpf(params["nu"]))
        if spec.startswith("dioprod:"):
            params = _params(spec[8:])
            return ApproximationFunction("dioprod", mu=mpf(params["mu"]),
                                         eta=int(params["eta"]))
        if spec == "dexp":
            return ApproximationFunction("dexp")
        if spec.startswith("table:"):
            knots = []
            for item in spec[6:].split(","):
                xs, ys = item.split(":")
                knots.append((mpf(xs), mpf(ys)))
            return ApproximationFunction("table", table=tuple(knots))
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad approximation-function spec {spec!r}") from exc
    raise ParseError(f"unknown approximation-function spec {spec!r}")


def _params(body: str) -> dict:
    out = {}
    for item in body.split(","):
        if not item:
            continue
        key, _, val = item.partition("=")
        if not val:
            raise ParseError(f"malformed parameter {item!r}")
        out[key.strip()] = val.strip()
    return out


@dataclass(frozen=True)
class ScanResult:
    """Empirical nonresonance constant, valid up to the scan radius."""

    alpha: mpf
    argmin: MultiIndex | None
    radius: int
    mode: str


@dataclass(frozen=True)
class RotationVector:
    """Frequency vector on T^d or on a truncated infinite torus."""

    coords: tuple[mpf, ...]
    regime: str                      # "finite" | "infinite"
    eta: int | None
    precision: int
    nonres_meta: ScanResult | None = None

    def __post_init__(self):
        if self.regime not in ("finite", "infinite"):
            raise DomainError(f"unknown regime {self.regime!r}")
        if self.regime == "infinite" and (self.eta is None or self.eta < 2):
            raise DomainError("infinite regime needs integer eta >= 2")
        for c in self.coords:
            if self.regime == "finite" and not (0 <= c < 1):
                raise DomainError("finite coordinates must lie in [0, 1)")
            if self.regime == "infinite" and not (1 <= c <= 2):
                raise DomainError("infinite coordinates must lie in [1, 2]")

    @property
    def dim(self) -> int:
        return len(self.coords)

    def with_certificate(self, cert: ScanResult) -> "RotationVector":
        return replace(self, nonres_meta=cert)

    def __hash__(self):
        return hash((tuple(str(c) for c in self.coords), self.regime,
                     self.eta, self.precision))


def make_rotation(spec: str, precision: int | None = None,
                  eta: int = 2) -> RotationVector:
    """Build a rotation vector from its spec string.

    Grammar: ``golden | sqrtprimes:d=<int> | sqrtprimes:D=<int> |
    list:<r>,<r>,... | uniform:D=<int>,seed=<int>``.  Lowercase d builds the
    finite family frac(sqrt(p_i)); uppercase D builds the truncated
    infinite family 1+frac(sqrt(p_i)) or the seeded uniform sample of
    [1,2]^D (coordinates are 96-bit dyadics drawn from the documented
    Mersenne-Twister stream ``random.Random(seed).getrandbits(96)``).
    """
    dps = precision or default_precision()
    spec = spec.strip()
    with working(dps):
        if spec == "golden":
            return RotationVector(((mp.sqrt(5) - 1) / 2,), "finite", None, dps)
        if spec.startswith("sqrtprimes:"):
            params = _params(spec[len("sqrtprimes:"):])
            if "d" in params:
                d = int(params["d"])
                if not 1 <= d <= len(_SMALL_PRIMES):
                    raise DimensionError(f"sqrtprimes supports 1..{len(_SMALL_PRIMES)}")
                coords = tuple(mp.frac(mp.sqrt(p)) for p in _SMALL_PRIMES[:d])
                return RotationVector(coords, "finite", None, dps)
            if "D" in params:
                D = int(params["D"])
                if not 1 <= D <= len(_SMALL_PRIMES):
                    raise DimensionError(f"sqrtprimes supports 1..{len(_SMALL_PRIMES)}")
                coords = tuple(1 + mp.frac(mp.sqrt(p)) for p in _SMALL_PRIMES[:D])
                return RotationVector(coords, "infinite",
                                      int(params.get("eta", eta)), dps)
            raise ParseError(f"sqrtprimes spec needs d= or D=: {spec!r}")
        if spec.startswith("list:"):
            try:
                coords = tuple(mp.frac(mpf(v)) for v in spec[5:].split(","))
            except ValueError as exc:
                raise ParseError(f"bad coordinate list {spec!r}") from exc
            if not coords:
                raise ParseError("empty coordinate list")
            return RotationVector(coords, "finite", None, dps)
        if spec.startswith("uniform:"):
            params = _params(spec[len("uniform:"):])
            try:
                D = int(params["D"])
                seed = int(params["seed"])
            except (KeyError, ValueError) as exc:
                raise ParseError(f"bad uniform spec {spec!r}") from exc
            rng = random.Random(seed)
            scale = mpf(2) ** -UNIFORM_BITS
            coords = tuple(1 + rng.getrandbits(UNIFORM_BITS) * scale
                           for _ in range(D))
            return RotationVector(coords, "infinite",
                                  int(params.get("eta", eta)), dps)
    raise ParseError(f"unknown rotation spec {spec!r}")


def mode_frequency(rho: RotationVector, k: MultiIndex) -> mpf:
    """The exact dot product k . rho at working precision (not reduced)."""
    if k.max_index >= rho.dim:
        raise SupportMismatch(
            f"mode touches coordinate {k.max_index} of a {rho.dim}-dim vector")
    return fsum(v * rho.coords[j] for j, v in k.entries)


def small_divisor(rho: RotationVector, k: MultiIndex, mode: str) -> mpf:
    """dist(k.rho, Z) in discrete mode; |k.rho| in continuous mode.

    The dot product is accumulated exactly and reduced once, so the small
    divisor is the exact distance for the stored dyadic coordinates.
    """
    if mode not in ("discrete", "continuous"):
        raise DomainError(f"unknown small-divisor mode {mode!r}")
    with working(rho.precision + GUARD_DIGITS):
        if k.is_zero:
            return mp.zero
        dot = mode_frequency(rho, k)
        return dist_to_z(dot) if mode == "discrete" else abs(dot)


def _scan_modes(rho: RotationVector, K: int) -> Iterator[MultiIndex]:
    if rho.regime == "finite":
        yield from enumerate_ball_finite(rho.dim, K)
    else:
        yield from enumerate_ball_eta(rho.eta, K, max_dim=rho.dim)


def nonresonance_scan(rho: RotationVector, approx: ApproximationFunction,
                      K: int, mode: str = "discrete") -> ScanResult:
    """Empirical nonresonance constant over all modes up to radius K.

    Returns the minimum of gauge(k) * small_divisor(k) together with the
    minimizing mode; this is the largest alpha (resp. gamma) for which the
    nonresonance inequality holds over the scanned ball.  The claim is
    finite-radius evidence only and the radius is recorded.
    """
    if K < 1:
        raise DomainError("scan radius must be >= 1")
    best = None
    best_k = None
    with working(rho.precision + GUARD_DIGITS):
        for k in _scan_modes(rho, K):
            sd = small_divisor(rho, k, mode)
            val = approx.gauge(k, rho.eta) * sd
            if best is None or val < best:
                best, best_k = val, k
    return ScanResult(best, best_k, K, mode)
