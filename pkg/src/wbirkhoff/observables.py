"""Test functions defined by explicit Fourier coefficient rules.

Every observable is a real-valued function on the torus given by a
coefficient rule with known modulus and a deterministic phase, so its mean
(the k=0 coefficient) is exact by construction and averaging errors can be
measured against truth rather than against another numeric estimate.

Coefficient rules:

* ``trig``           explicit finite list (trigonometric polynomial);
* ``poly:M=..``      |f_k| = |k|_1^(-M);
* ``analytic:mu=..`` |f_k| = exp(-mu |k|_1);
* ``gevrey:mu=..,nu=..``  |f_k| = exp(-mu |k|_1^nu);
* ``eta-analytic:mu=..``  |f_k| = exp(-mu |k|_eta);
* ``double-exp``     |f_k| = exp(-exp(|k|_eta)).

Phases: for the rule-based kinds the coefficient of a canonical mode k
(first nonzero coordinate positive) is modulus * exp(2 pi i sigma(k)),
where sigma(k) is the first 64 bits of SHA-256 of the canonical entry
serialization ("j:v;j:v;...") divided by 2^64; the opposite mode carries
the conjugate, so the function is real.  Nontrivial phases avoid the
accidental cancellations an all-ones choice would produce; tests that need
closed-form sums can request ``phase="one"``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache

from mpmath import mp, mpc, mpf

from .errors import DomainError, ParseError, SupportMismatch, TailBoundUnavailable
from .lattice import (MultiIndex, count_shell_finite, enumerate_ball_eta,
                      enumerate_ball_finite, eta_norm)
from .prec import GUARD_DIGITS, fsum_c, working

__all__ = [
    "Observable",
    "make_observable",
    "trig_poly",
    "coefficient",
    "evaluate",
    "class_certificate",
    "modes_within",
    "mode_cutoff",
]

_RULE_KINDS = ("poly", "analytic", "gevrey", "eta-analytic", "double-exp")


@dataclass(frozen=True)
class Observable:
    """Fourier-defined observable with exactly known mean."""

    kind: str
    dim: int | None                  # ambient dimension (None = truncated torus)
    trunc: int | None                # truncation dimension for the infinite case
    eta: int | None
    params: tuple
    mean: mpc
    phase: str = "hash"
    modes: tuple[tuple[MultiIndex, mpc], ...] | None = None  # canonical, trig only
    precision: int = 50

    def __post_init__(self):
        if self.kind not in ("trig",) + _RULE_KINDS:
            raise DomainError(f"unknown observable kind {self.kind!r}")
        if self.kind in ("eta-analytic", "double-exp") and self.eta is None:
            raise DomainError(f"{self.kind} needs eta")
        if abs(mp.im(self.mean)) != 0:
            raise DomainError("mean must be real (observables are real-valued)")

    @property
    def ambient_dim(self) -> int:
        return self.dim if self.dim is not None else self.trunc

    def support_radius(self) -> int | None:
        """Largest mode norm with nonzero coefficient (None if infinite)."""
        if self.kind != "trig":
            return None
        if not self.modes:
            return 0
        return max(self._grade(k) for k, _ in self.modes)

    def _grade(self, k: MultiIndex) -> int:
        if self.kind in ("eta-analytic", "double-exp") or (
                self.kind == "trig" and self.dim is None):
            return eta_norm(k, self.eta)
        return k.norm1

    def __hash__(self):
        return hash((self.kind, self.dim, self.trunc, self.eta,
                     tuple(str(p) for p in self.params), str(self.mean),
                     self.phase, self.modes, self.precision))


def _phase_unit(k: MultiIndex) -> mpc:
    """exp(2 pi i sigma(k)) for canonical k (documented SHA-256 hash)."""
    digest = hashlib.sha256(k.key().encode()).digest()
    sigma = int.from_bytes(digest[:8], "big") / 2 ** 64
    return mp.expjpi(2 * mpf(sigma))


def _modulus(obs: Observable, k: MultiIndex) -> mpf:
    if obs.kind == "poly":
        return mpf(k.norm1) ** (-obs.params[0])
    if obs.kind == "analytic":
        return mp.exp(-obs.params[0] * k.norm1)
    if obs.kind == "gevrey":
        mu, nu = obs.params
        return mp.exp(-mu * mpf(k.norm1) ** nu)
    if obs.kind == "eta-analytic":
        return mp.exp(-obs.params[0] * eta_norm(k, obs.eta))
    if obs.kind == "double-exp":
        return mp.exp(-mp.exp(eta_norm(k, obs.eta)))
    raise DomainError(f"no modulus rule for kind {obs.kind!r}")


def coefficient(obs: Observable, k: MultiIndex) -> mpc:
    """The Fourier coefficient of mode k (0 outside a trig support)."""
    if k.max_index >= obs.ambient_dim:
        raise SupportMismatch(
            f"mode touches coordinate {k.max_index} of a "
            f"{obs.ambient_dim}-dim observable")
    with working(obs.precision + GUARD_DIGITS):
        if k.is_zero:
            return obs.mean
        if obs.kind == "trig":
            for kk, c in obs.modes:
                if kk == k:
                    return c
                if kk == k.neg():
                    return mp.conj(c)
            return mpc(0)
        modulus = _modulus(obs, k)
        if obs.phase == "one":
            return mpc(modulus)
        if k.is_canonical():
            return modulus * _phase_unit(k)
        return mp.conj(modulus * _phase_unit(k.neg()))


def trig_poly(modes: dict[MultiIndex, complex] | list, dim: int,
              precision: int = 50, eta: int | None = None,
              trunc: int | None = None) -> Observable:
    """Trigonometric polynomial from an explicit mode -> coefficient map.

    The conjugate of every listed mode is implied (Hermitian closure); if
    both k and -k are given they must be conjugate.  A k=0 entry sets the
    mean, which must be real.
    """
    if isinstance(modes, dict):
        modes = list(modes.items())
    with working(precision + GUARD_DIGITS):
        mean = mpc(0)
        canon: dict[MultiIndex, mpc] = {}
        for k, c in modes:
            c = mpc(c)
            if k.is_zero:
                mean = c
                continue
            kk, cc = (k, c) if k.is_canonical() else (k.neg(), mp.conj(c))
            if kk in canon and abs(canon[kk] - cc) != 0:
                raise DomainError(f"modes {kk.entries} given twice with "
                                  "non-conjugate coefficients")
            canon[kk] = cc
        ordered = tuple(sorted(canon.items(), key=lambda kv: (kv[0].norm1, kv[0].entries)))
        ambient = dim if trunc is None else None
        return Observable("trig", ambient, trunc, eta, (), mean,
                          "hash", ordered, precision)


def make_observable(spec: str, dim: int | None = None, eta: int = 2,
                    trunc: int | None = None, precision: int = 50,
                    mean=0) -> Observable:
    """Build an observable from its spec string.

    Grammar: ``trig:<k>:<re>,<im>;...`` with <k> the underscore-joined
    coordinates of the mode (e.g. ``trig:1:0.5,0`` on T^1 or
    ``trig:1_-2:0.25,0.1;0_1:0.5,0`` on T^2), or ``poly:M=<r> |
    analytic:mu=<r> | gevrey:mu=<r>,nu=<r> | eta-analytic:mu=<r> |
    double-exp``, each optionally with ``,phase=one``.  The ambient
    dimension (or truncation) is supplied by the caller, normally from the
    rotation vector.
    """
    spec = spec.strip()
    with working(precision + GUARD_DIGITS):
        if spec.startswith("trig:"):
            if dim is None and trunc is None:
                raise DomainError("trig observable needs a dimension")
            d = dim if dim is not None else trunc
            modes = []
            for item in spec[5:].split(";"):
                if not item:
                    continue
                try:
                    kpart, cpart = item.split(":")
                    kvec = [int(x) for x in kpart.split("_")]
                    re_s, im_s = cpart.split(",")
                    c = mpc(mpf(re_s), mpf(im_s))
                except ValueError as exc:
                    raise ParseError(f"bad trig mode {item!r}") from exc
                if len(kvec) != d:
                    raise ParseError(
                        f"trig mode {kpart!r} has {len(kvec)} coordinates, "
                        f"dimension is {d}")
                modes.append((MultiIndex.from_dense(kvec, d), c))
            if mean:
                modes.append((MultiIndex((), d), mpc(mean)))
            return trig_poly(modes, d, precision, eta=eta, trunc=trunc)

        name, _, body = spec.partition(":")
        params = _params(body) if body else {}
        phase = params.pop("phase", "hash")
        if phase not in ("hash", "one"):
            raise ParseError(f"unknown phase rule {phase!r}")
        try:
            if name == "poly":
                ptuple = (mpf(params.pop("M")),)
                if ptuple[0] <= 1:
                    raise DomainError("poly decay needs M > 1")
            elif name == "analytic":
                ptuple = (mpf(params.pop("mu")),)
            elif name == "gevrey":
                ptuple = (mpf(params.pop("mu")), mpf(params.pop("nu")))
            elif name == "eta-analytic":
                ptuple = (mpf(params.pop("mu")),)
            elif name == "double-exp":
                ptuple = ()
            else:
                raise ParseError(f"unknown observable spec {spec!r}")
        except KeyError as exc:
            raise ParseError(f"missing parameter in {spec!r}") from exc
        if params:
            raise ParseError(f"unused parameters {sorted(params)} in {spec!r}")
        if dim is None and trunc is None:
            raise DomainError("observable needs a dimension or truncation")
        return Observable(name, dim, trunc, eta, ptuple, mpc(mean), phase,
                          None, precision)


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


# ---------------------------------------------------------------------------
# Mode enumeration with certified tails
# ---------------------------------------------------------------------------

def _shell_modulus(obs: Observable, s: int) -> mpf:
    """Coefficient modulus on the grade-s shell (same for every k there
    for l1-graded kinds; exact for eta kinds too since the rule depends
    only on the grade)."""
    if obs.kind == "poly":
        return mpf(s) ** (-obs.params[0])
    if obs.kind == "analytic":
        return mp.exp(-obs.params[0] * s)
    if obs.kind == "gevrey":
        mu, nu = obs.params
        return mp.exp(-mu * mpf(s) ** nu)
    if obs.kind == "eta-analytic":
        return mp.exp(-obs.params[0] * s)
    if obs.kind == "double-exp":
        return mp.exp(-mp.exp(s))
    raise DomainError(obs.kind)


def _shell_count_bound(obs: Observable, s: int) -> mpf:
    """A valid upper bound for the number of grade-s modes."""
    if obs.kind in ("eta-analytic", "double-exp"):
        # support fits in nu^(1/eta)+1 coordinates, each bounded by s
        width = int(mpf(s) ** (mpf(1) / obs.eta)) + 1
        if obs.trunc is not None:
            width = min(width, obs.trunc)
        return mpf(2 * s + 1) ** width
    d = obs.ambient_dim
    return mpf(count_shell_finite(d, s))


def _envelope(obs: Observable):
    """Continuous upper envelope g(t) >= shell-count-bound * modulus at
    every integer t, eventually decreasing for every summable kind."""
    if obs.kind in ("eta-analytic", "double-exp"):
        eta = obs.eta
        trunc = obs.trunc

        def width(t):
            w = t ** (mpf(1) / eta) + 1
            return min(w, mpf(trunc)) if trunc is not None else w

        if obs.kind == "eta-analytic":
            mu = obs.params[0]
            return lambda t: (2 * t + 1) ** width(t) * mp.exp(-mu * t)
        return lambda t: (2 * t + 1) ** width(t) * mp.exp(-mp.exp(t))
    d = obs.ambient_dim
    # count_shell_finite(d, t) <= 2^d binom(t+d-1, d-1) <= 2^d (t+d)^(d-1)/(d-1)!
    c = mpf(2) ** d / mp.factorial(d - 1)
    if obs.kind == "poly":
        M = obs.params[0]
        return lambda t: c * (t + d) ** (d - 1) * t ** (-M)
    if obs.kind == "analytic":
        mu = obs.params[0]
        return lambda t: c * (t + d) ** (d - 1) * mp.exp(-mu * t)
    mu, nu = obs.params
    return lambda t: c * (t + d) ** (d - 1) * mp.exp(-mu * t ** nu)


def tail_bound(obs: Observable, R: int) -> mpf:
    """Certified bound for sum of |f_k| over modes of grade > R.

    Exact shell terms are accumulated while the continuous envelope g is
    still shallow; once its log drops by a settled factor q < 3/4 per shell
    with steepening decrements (true for every shipped exponential-type
    kind beyond its hump), the remainder is dominated by the geometric
    series g(s)/(1-q).  Polynomial decay uses the integral comparison
    directly.
    """
    if obs.kind == "trig":
        return mp.zero
    d = obs.ambient_dim
    if obs.kind == "poly":
        M = obs.params[0]
        if M <= d:
            raise TailBoundUnavailable(
                f"poly decay M={M} is not summable in dimension {d}")
        total = mp.zero
        s = R + 1
        c = mpf(2) ** d / mp.factorial(d - 1)
        while s < max(d, 2):
            total += _shell_count_bound(obs, s) * _shell_modulus(obs, s)
            s += 1
        g_s = c * (2 * mpf(s)) ** (d - 1) * mpf(s) ** (-M)
        rest = c * mpf(2) ** (d - 1) * mpf(s) ** (d - M) / (M - d)
        return total + g_s + rest
    if obs.kind == "gevrey":
        # log-decrements of the envelope shrink back toward zero for nu < 1,
        # so geometric domination is unsound; integral comparison instead:
        # int_s^inf t^(d-1) e^(-mu t^nu) dt = Gamma(d/nu, mu s^nu)/(nu mu^(d/nu))
        mu, nu = obs.params
        g = _envelope(obs)
        total = mp.zero
        s = max(R + 1, d, 2)
        for t in range(R + 1, s):
            total += _shell_count_bound(obs, t) * _shell_modulus(obs, t)
        while g(s + 1) >= g(s):
            total += _shell_count_bound(obs, s) * _shell_modulus(obs, s)
            s += 1
            if s > R + 100000:
                raise TailBoundUnavailable("gevrey envelope has no descent")
        c = mpf(2) ** d / mp.factorial(d - 1)
        integral = (c * mpf(2) ** (d - 1) / nu * mp.mpf(mu) ** (-mpf(d) / nu)
                    * mp.gammainc(mpf(d) / nu, a=mu * mpf(s) ** nu))
        return total + g(s) + integral
    # analytic / eta-analytic / double-exp: envelope log-decrements are
    # non-increasing beyond the hump, so a settled ratio dominates the tail
    g = _envelope(obs)
    total = mp.zero
    s = R + 1
    while True:
        lg0, lg1, lg2 = mp.log(g(s)), mp.log(g(s + 1)), mp.log(g(s + 2))
        if lg1 - lg0 <= mp.log(mpf("0.95")) and lg2 - lg1 <= lg1 - lg0:
            q = mp.exp(lg1 - lg0)
            return total + g(s) / (1 - q)
        total += _shell_count_bound(obs, s) * _shell_modulus(obs, s)
        s += 1
        if s > R + 100000:
            raise TailBoundUnavailable("tail envelope never became steep")


def mode_cutoff(obs: Observable, tol: mpf) -> int:
    """Smallest grade R with certified tail below tol (doubling + bisection)."""
    if obs.kind == "trig":
        return obs.support_radius()
    tol = mpf(tol)
    hi = 1
    while tail_bound(obs, hi) >= tol:
        hi *= 2
        if hi > 100000:
            raise TailBoundUnavailable("no admissible cutoff below 100000")
    lo = hi // 2 if hi > 1 else 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mid == 0 or tail_bound(obs, mid) >= tol:
            lo = mid
        else:
            hi = mid
    return hi


def modes_within(obs: Observable, R: int) -> list[tuple[MultiIndex, mpc]]:
    """Canonical modes of grade 1..R with their coefficients.

    Each listed mode represents the conjugate pair {k, -k}; the k=0 mean is
    not included.  Deterministic graded-lexicographic order.
    """
    if obs.kind == "trig":
        return [(k, c) for k, c in obs.modes if obs._grade(k) <= R]
    out = []
    if obs.kind in ("eta-analytic", "double-exp") or obs.dim is None:
        it = enumerate_ball_eta(obs.eta, R, max_dim=obs.trunc)
    else:
        it = enumerate_ball_finite(obs.dim, R)
    for k in it:
        if k.is_canonical():
            out.append((k, coefficient(obs, k)))
    return out


def evaluate(obs: Observable, theta, tail_tol) -> mpc:
    """Evaluate the Fourier series at a torus point with certified tail.

    Sums all modes of grade <= R with R chosen so the omitted tail is below
    tail_tol; conjugate pairs are summed explicitly, so the imaginary part
    of the result is a genuine roundoff/tail residual.
    """
    with working(obs.precision + GUARD_DIGITS):
        tail_tol = mpf(tail_tol)
        if tail_tol < 0 or (obs.kind != "trig" and tail_tol == 0):
            raise DomainError("tail_tol must be positive (0 allowed for trig)")
        theta = tuple(mpf(t) for t in theta)
        if len(theta) != obs.ambient_dim:
            raise DomainError(
                f"point has dimension {len(theta)}, observable has "
                f"{obs.ambient_dim}")
        R = mode_cutoff(obs, tail_tol) if obs.kind != "trig" else obs.support_radius()
        terms = [obs.mean]
        for k, c in modes_within(obs, R):
            phase = fsum_c(v * theta[j] for j, v in k.entries)
            e = mp.expjpi(2 * phase)
            terms.append(c * e)
            terms.append(mp.conj(c * e))
        return fsum_c(terms)


def class_certificate(obs: Observable, approx, K: int):
    """sup over modes of grade <= K of approx(grade) * |f_k|.

    Returns (member, sup, arg). ``member`` is the stabilized-sup heuristic:
    the sup is attained at grade <= K/2, i.e. enlarging the ball stopped
    moving it; a sup that keeps migrating to the boundary diverges.
    """
    if K < 1:
        raise DomainError("certificate radius must be >= 1")
    with working(obs.precision + GUARD_DIGITS):
        sup = mp.zero
        arg = None
        for k, c in modes_within(obs, K):
            val = approx(obs._grade(k)) * abs(c)
            if val > sup:
                sup, arg = val, k
        member = arg is not None and obs._grade(arg) <= max(1, K // 2)
        return member, sup, arg
