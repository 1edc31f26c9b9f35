"""Unweighted and weighted Birkhoff averages, kernels, and error oracles.

Two genuinely independent routes to the averaging error exist for every
discrete experiment:

* the *time-domain* route generates the orbit theta + n rho by repeated
  mod-1 addition (exact for the stored dyadic coordinates, so there is no
  drift to compensate) and averages pointwise evaluations of the
  observable with window weights;
* the *Fourier-domain* route never touches the orbit: each mode k
  contributes coefficient * exp(2 pi i k.theta0) * S_N(k.rho) through the
  one-dimensional kernel

      S_N(x) = (1/A_N) sum_{n=0}^{N-1} w(n/N) exp(2 pi i n x),

  and for trigonometric polynomials the mode sum is the exact error.

Their agreement to near working precision is the central anti-bug property
of the package.  The continuous-time analogue replaces S_N by the window
transform I(T omega) computed by certified oscillatory quadrature.

All computations are pure functions of an AveragingRun; sweeps execute
points sequentially and reductions use exact accumulation, so results are
bit-stable and independent of any execution interleaving.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache

from mpmath import mp, mpc, mpf

from .errors import (DegenerateWindow, DimensionError, DomainError,
                     QuadratureBudgetExceeded)
from .lattice import MultiIndex
from .observables import Observable, mode_cutoff, modes_within, tail_bound
from .oscquad import (_order_for, integrate_over_edges, panel_edges,
                      weight_transform)
from .prec import GUARD_DIGITS, MIN_PRECISION, digits_of, fsum, fsum_c, working
from .rotations import RotationVector, mode_frequency
from .weights import WeightFunction, eval_weight, normalization_A_N

__all__ = [
    "Discrete",
    "Continuous",
    "AveragingRun",
    "RunResult",
    "birkhoff_unweighted",
    "birkhoff_weighted_discrete",
    "birkhoff_weighted_continuous",
    "continuous_time_domain",
    "kernel_S_N",
    "fourier_error_oracle",
]


@dataclass(frozen=True)
class Discrete:
    N: int


@dataclass(frozen=True)
class Continuous:
    T: int
    quad_tol: mpf | None = None


@dataclass(frozen=True)
class AveragingRun:
    """One averaging experiment: what to average, along what, how far."""

    observable: Observable
    rotation: RotationVector
    weight: WeightFunction
    theta0: tuple
    mode: Discrete | Continuous
    precision: int
    eval_tol: mpf | None = None     # pointwise-evaluation tail target

    def __post_init__(self):
        if self.precision < MIN_PRECISION:
            raise DomainError(f"precision must be >= {MIN_PRECISION}")
        if isinstance(self.mode, Discrete):
            if self.mode.N < 1:
                raise DomainError("discrete runs need N >= 1")
        elif isinstance(self.mode, Continuous):
            if self.mode.T < 1:
                raise DomainError("continuous runs need T >= 1")
        else:
            raise DomainError("mode must be Discrete or Continuous")
        if len(self.theta0) != self.rotation.dim:
            raise DimensionError(
                f"theta0 has dimension {len(self.theta0)}, rotation has "
                f"{self.rotation.dim}")
        if self.observable.ambient_dim != self.rotation.dim:
            raise DimensionError(
                f"observable dimension {self.observable.ambient_dim} != "
                f"rotation dimension {self.rotation.dim}")

    @property
    def scale(self) -> int:
        return self.mode.N if isinstance(self.mode, Discrete) else self.mode.T


@dataclass(frozen=True)
class RunResult:
    """Averaging value with its exact-mean error and diagnostics."""

    value: mpc
    abs_error: mpf
    scale: int
    wall_s: float
    diagnostics: dict

    @property
    def precision_floor(self) -> mpf:
        return self.diagnostics["precision_floor"]


def _work_dps(run: AveragingRun) -> int:
    return (max(run.precision, run.rotation.precision) + GUARD_DIGITS
            + digits_of(run.scale))


def _eval_tol(run: AveragingRun) -> mpf:
    if run.eval_tol is not None:
        return mpf(run.eval_tol)
    return mpf(10) ** (-(run.precision + 5))


def _floor(run: AveragingRun) -> mpf:
    return 2 * _eval_tol(run) + run.scale * mpf(10) ** (-_work_dps(run))


class _ModePlan:
    """Flattened canonical mode list for fast pointwise evaluation.

    Every stored mode stands for the conjugate pair {k, -k} (observables
    are Hermitian by construction), so pointwise values are accumulated as
    mean + sum 2 Re(c_k z^k) in real arithmetic.
    """

    def __init__(self, obs: Observable, tol: mpf):
        self.mean = mp.re(obs.mean)
        if obs.kind == "trig":
            self.radius = obs.support_radius()
            self.tail = mp.zero
            pairs = obs.modes
        else:
            self.radius = mode_cutoff(obs, tol)
            self.tail = tail_bound(obs, self.radius)
            pairs = modes_within(obs, self.radius)
        self.modes = [(k.entries, c) for k, c in pairs]
        self.active = sorted({j for ent, _ in self.modes for j, _ in ent})
        self.maxexp = {j: 0 for j in self.active}
        for ent, _ in self.modes:
            for j, v in ent:
                self.maxexp[j] = max(self.maxexp[j], abs(v))

    def value_at(self, theta) -> mpf:
        """Observable value at a torus point via cached coordinate powers."""
        pows = {}
        for j in self.active:
            z = mp.expjpi(2 * theta[j])
            lst = [mpc(1), z]
            for _ in range(2, self.maxexp[j] + 1):
                lst.append(lst[-1] * z)
            pows[j] = lst
        terms = [self.mean]
        for ent, c in self.modes:
            prod = c
            for j, v in ent:
                prod = prod * (pows[j][v] if v > 0 else mp.conj(pows[j][-v]))
            terms.append(2 * mp.re(prod))
        return fsum(terms)


def _orbit(run: AveragingRun, N: int):
    """Exact orbit theta0 + n rho mod 1, one coordinate tuple per step."""
    theta = [mp.frac(mpf(t)) for t in run.theta0]
    rho = run.rotation.coords
    for _ in range(N):
        yield tuple(theta)
        for j, r in enumerate(rho):
            t = theta[j] + r
            while t >= 1:
                t -= 1
            theta[j] = t


def _discrete_average(run: AveragingRun) -> RunResult:
    t0 = time.perf_counter()
    N = run.mode.N
    dps = _work_dps(run)
    with working(dps):
        plan = _ModePlan(run.observable, _eval_tol(run))
        w = run.weight.at_precision(run.precision)
        if w.kind == "flat":
            samples = None
            a_n = mpf(N)
        else:
            if N < 2:
                raise DegenerateWindow("bump windows need N >= 2")
            samples = [eval_weight(w, mpf(n) / N) for n in range(N)]
            a_n = fsum(samples)
            if a_n <= 0:
                raise DegenerateWindow(f"window sum vanished at N={N}")
        terms = []
        for n, theta in enumerate(_orbit(run, N)):
            if samples is not None and not samples[n]:
                continue
            fv = plan.value_at(theta)
            terms.append(fv if samples is None else samples[n] * fv)
        value = mpc(fsum(terms) / a_n)
        abs_error = abs(value - run.observable.mean)
    diag = {
        "A_N": a_n,
        "orbit_residual": mp.zero,   # mod-1 addition is exact on the dyadic grid
        "mode_radius": plan.radius,
        "tail_bound": plan.tail,
        "precision_floor": _floor(run),
        "work_dps": dps,
    }
    return RunResult(value, abs_error, N, time.perf_counter() - t0, diag)


def birkhoff_unweighted(run: AveragingRun) -> RunResult:
    """(1/N) sum f(theta0 + n rho) for the flat window."""
    if run.weight.kind != "flat":
        raise DomainError("birkhoff_unweighted requires the flat weight")
    if not isinstance(run.mode, Discrete):
        raise DomainError("birkhoff_unweighted is a discrete operation")
    return _discrete_average(run)


def birkhoff_weighted_discrete(run: AveragingRun) -> RunResult:
    """(1/A_N) sum w(n/N) f(theta0 + n rho); flat weights reduce to the
    unweighted average through the identical code path."""
    if not isinstance(run.mode, Discrete):
        raise DomainError("birkhoff_weighted_discrete is a discrete operation")
    return _discrete_average(run)


@lru_cache(maxsize=64)
def _kernel_samples(w: WeightFunction, N: int, dps: int) -> tuple:
    with working(dps):
        return tuple(eval_weight(w, mpf(n) / N) for n in range(N))


def kernel_S_N(w: WeightFunction, N: int, x, precision: int | None = None) -> mpc:
    """S_N(x) = (1/A_N) sum_n w(n/N) exp(2 pi i n x), the mode kernel."""
    if N < 1:
        raise DomainError("kernel needs N >= 1")
    dps = (precision or w.precision) + GUARD_DIGITS + digits_of(N)
    ww = w.at_precision(precision or w.precision)
    with working(dps):
        x = mpf(x)
        samples = _kernel_samples(ww, N, dps)
        a_n = fsum(samples)
        if a_n <= 0:
            raise DegenerateWindow(f"window sum vanished at N={N}")
        z = mp.expjpi(2 * x)
        zp = mpc(1)
        terms = []
        for n in range(N):
            if n:
                zp = zp * z
            if samples[n]:
                terms.append(samples[n] * zp)
        return fsum_c(terms) / a_n


def fourier_error_oracle(run: AveragingRun, radius: int | None = None) -> mpc:
    """The averaging error computed entirely in Fourier space.

    error = sum_{k != 0} f_k exp(2 pi i k.theta0) S_N(k.rho): exact to
    working precision for trigonometric polynomials (shares no averaging
    code with the orbit route), within a certified coefficient tail
    otherwise.
    """
    if not isinstance(run.mode, Discrete):
        raise DomainError("the Fourier oracle is a discrete-mode check")
    N = run.mode.N
    dps = _work_dps(run)
    obs = run.observable
    with working(dps):
        if obs.kind == "trig":
            pairs = obs.modes
        else:
            R = radius if radius is not None else mode_cutoff(obs, _eval_tol(run))
            pairs = modes_within(obs, R)
        terms = []
        for k, c in pairs:
            x = mode_frequency(run.rotation, k)
            s = kernel_S_N(run.weight, N, mp.frac(x), run.precision)
            phase = fsum_c(v * mpf(run.theta0[j]) for j, v in k.entries)
            contrib = c * mp.expjpi(2 * phase) * s
            terms.append(contrib)
            terms.append(mp.conj(contrib))
        return fsum_c(terms)


def birkhoff_weighted_continuous(run: AveragingRun) -> RunResult:
    """Continuous-time weighted average via per-mode window transforms.

    value = mean + sum_k f_k exp(2 pi i k.theta0) I(T k.rho) with each
    I value certified to the per-mode share of quad_tol.
    """
    if not isinstance(run.mode, Continuous):
        raise DomainError("birkhoff_weighted_continuous needs continuous mode")
    t0 = time.perf_counter()
    T = run.mode.T
    quad_tol = (mpf(run.mode.quad_tol) if run.mode.quad_tol is not None
                else mpf(10) ** (-(run.precision - 10)))
    dps = _work_dps(run)
    obs = run.observable
    with working(dps):
        if obs.kind == "trig":
            pairs = obs.modes
            tail = mp.zero
            radius = obs.support_radius()
        else:
            radius = mode_cutoff(obs, quad_tol / 4)
            tail = tail_bound(obs, radius)
            pairs = modes_within(obs, radius)
        per_mode = quad_tol / (8 * max(1, len(pairs)))
        w = run.weight.at_precision(run.precision)
        terms = [obs.mean]
        for k, c in pairs:
            omega = T * mode_frequency(run.rotation, k)
            iv = weight_transform(w, omega, per_mode, dps)
            phase = fsum_c(v * mpf(run.theta0[j]) for j, v in k.entries)
            contrib = c * mp.expjpi(2 * phase) * iv
            terms.append(contrib)
            terms.append(mp.conj(contrib))
        value = fsum_c(terms)
        abs_error = abs(value - obs.mean)
    diag = {
        "quad_tol": quad_tol,
        "mode_radius": radius,
        "tail_bound": tail,
        "n_modes": len(pairs),
        "precision_floor": quad_tol + mpf(10) ** (-(run.precision + 4)),
        "work_dps": dps,
    }
    return RunResult(value, abs_error, T, time.perf_counter() - t0, diag)


def continuous_time_domain(run: AveragingRun) -> mpc:
    """Direct quadrature of (1/T) int w(t/T) f(rho t + theta0) dt.

    Cross-check path for trigonometric polynomials: the integrand is
    evaluated pointwise in time, sharing nothing with the per-mode route.
    """
    if not isinstance(run.mode, Continuous):
        raise DomainError("continuous_time_domain needs continuous mode")
    if run.observable.kind != "trig":
        raise DomainError("time-domain quadrature cross-check is for "
                          "trigonometric polynomials")
    T = run.mode.T
    quad_tol = (mpf(run.mode.quad_tol) if run.mode.quad_tol is not None
                else mpf(10) ** (-(run.precision - 10)))
    dps = _work_dps(run)
    with working(dps):
        plan = _ModePlan(run.observable, quad_tol)
        w = run.weight.at_precision(run.precision)
        theta0 = [mpf(t) for t in run.theta0]
        rho = run.rotation.coords

        def integrand(y):
            wv = eval_weight(w, y)
            if not wv:
                return mpc(0)
            theta = tuple(theta0[j] + T * rho[j] * y for j in range(len(rho)))
            return wv * plan.value_at(theta)

        max_omega = max((abs(T * mode_frequency(run.rotation, MultiIndex(ent)))
                         for ent, _ in plan.modes), default=mpf(0))
        order = _order_for(quad_tol, mpf(4) * mp.pi)
        for round_ in range(3):
            edges = panel_edges(w, max_omega, mpf(0), mpf(1), dps,
                                refine=2 ** round_)
            base = integrate_over_edges(integrand, edges, order, dps)
            check = integrate_over_edges(integrand, edges, order + 12, dps)
            if abs(base - check) <= quad_tol:
                return check
        raise QuadratureBudgetExceeded(
            "time-domain quadrature failed its certification")
