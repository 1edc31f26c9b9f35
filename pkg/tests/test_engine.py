"""Averaging engine: dual-route error agreement, kernels, continuous mode."""

import random

import pytest
from mpmath import mp, mpf

from wbirkhoff.engine import (AveragingRun, Continuous, Discrete,
                              birkhoff_unweighted, birkhoff_weighted_continuous,
                              birkhoff_weighted_discrete,
                              continuous_time_domain, fourier_error_oracle,
                              kernel_S_N)
from wbirkhoff.errors import DegenerateWindow, DimensionError, DomainError
from wbirkhoff.lattice import MultiIndex
from wbirkhoff.observables import make_observable, trig_poly
from wbirkhoff.oscquad import weight_transform
from wbirkhoff.rotations import make_rotation
from wbirkhoff.weights import make_weight, normalization_A_N

P = 60


@pytest.fixture(scope="module")
def golden():
    return make_rotation("golden", P)


@pytest.fixture(scope="module")
def wbar():
    return make_weight("exp", P)


@pytest.fixture(scope="module")
def flat():
    return make_weight("flat", P)


@pytest.fixture(scope="module")
def cos_obs():
    return make_observable("trig:1:0.5,0", dim=1, precision=P)


def test_constant_observable_is_exact(golden, wbar):
    const = trig_poly({MultiIndex((), 1): mpf("0.625")}, dim=1, precision=P)
    run = AveragingRun(const, golden, wbar, (0,), Discrete(64), P)
    res = birkhoff_weighted_discrete(run)
    assert res.abs_error == 0
    assert res.value == mpf("0.625")


def test_single_point_unweighted(golden, flat, cos_obs):
    run = AveragingRun(cos_obs, golden, flat, ("0.25",), Discrete(1), P)
    res = birkhoff_unweighted(run)
    with mp.workdps(P):
        assert abs(res.value) < mpf("1e-55")   # cos(pi/2) = 0


def test_unweighted_requires_flat(golden, wbar, cos_obs):
    run = AveragingRun(cos_obs, golden, wbar, (0,), Discrete(16), P)
    with pytest.raises(DomainError):
        birkhoff_unweighted(run)


def test_degenerate_window(golden, wbar, cos_obs):
    run = AveragingRun(cos_obs, golden, wbar, (0,), Discrete(1), P)
    with pytest.raises(DegenerateWindow):
        birkhoff_weighted_discrete(run)


def test_dimension_validation(golden, wbar, cos_obs):
    with pytest.raises(DimensionError):
        AveragingRun(cos_obs, golden, wbar, (0, 0), Discrete(16), P)
    obs2 = make_observable("trig:1_0:0.5,0", dim=2, precision=P)
    with pytest.raises(DimensionError):
        AveragingRun(obs2, golden, wbar, (0,), Discrete(16), P)


def test_flat_unweighted_closed_form(golden, flat, cos_obs):
    # geometric-sum oracle: (1/N) sum cos(2 pi n rho) = Re[(z^N - 1)/(N(z-1))]
    N = 1000
    run = AveragingRun(cos_obs, golden, flat, (0,), Discrete(N), P)
    res = birkhoff_unweighted(run)
    with mp.workdps(P + 10):
        z = mp.expjpi(2 * golden.coords[0])
        oracle = mp.re((z ** N - 1) / (N * (z - 1)))
        assert abs((res.value - cos_obs.mean) - oracle) < mpf("1e-50")
        assert mpf("1e-4") <= res.abs_error <= mpf("1e-2")


def test_flat_path_equals_unweighted_bitwise(golden, flat, cos_obs):
    run = AveragingRun(cos_obs, golden, flat, ("0.3",), Discrete(500), P)
    a = birkhoff_unweighted(run)
    b = birkhoff_weighted_discrete(run)
    assert a.value == b.value
    assert a.abs_error == b.abs_error


def test_weighted_discrete_fast_convergence(golden, wbar, cos_obs):
    run = AveragingRun(cos_obs, golden, wbar, (0,), Discrete(1024), 50)
    res = birkhoff_weighted_discrete(run)
    assert res.abs_error < mpf("1e-10")


def test_diagnostics(golden, wbar, cos_obs):
    run = AveragingRun(cos_obs, golden, wbar, (0,), Discrete(256), P)
    res = birkhoff_weighted_discrete(run)
    assert res.diagnostics["orbit_residual"] == 0
    with mp.workdps(P):
        a_ref = normalization_A_N(wbar, 256)
        assert abs(res.diagnostics["A_N"] - a_ref) < mpf("1e-50")


def test_kernel_normalization(wbar, flat):
    for w in (wbar, flat):
        for N in (2, 16, 257):
            assert kernel_S_N(w, N, 0, P) == 1


def test_kernel_half_point_real_and_small(wbar):
    v = kernel_S_N(wbar, 64, "0.5", P)
    assert mp.im(v) == 0
    assert abs(v) < mpf("0.01")


def test_kernel_bounded_by_one(wbar):
    random.seed(5)
    with mp.workdps(P):
        for _ in range(12):
            x = mpf(random.random())
            assert abs(kernel_S_N(wbar, 101, x, P)) <= 1 + mpf("1e-55")


def test_kernel_direct_summation_oracle(wbar):
    # doubled-precision brute force shares no power-recurrence code
    N, x = 37, mpf("0.3125")
    v = kernel_S_N(wbar, N, x, P)
    with mp.workdps(2 * P):
        w2 = wbar.at_precision(2 * P)
        from wbirkhoff.weights import eval_weight
        terms = [eval_weight(w2, mpf(n) / N) * mp.expjpi(2 * n * x)
                 for n in range(N)]
        a_n = mp.fsum(eval_weight(w2, mpf(n) / N) for n in range(N))
        ref = mp.fsum(terms) / a_n
        assert abs(v - ref) < mpf(10) ** (-(P - 5))


def _random_trig(dim, rng, precision):
    modes = {}
    for _ in range(rng.randint(2, 5)):
        while True:
            vec = [rng.randint(-3, 3) for _ in range(dim)]
            if any(vec):
                break
        modes[MultiIndex.from_dense(vec, dim)] = complex(
            rng.uniform(-1, 1), rng.uniform(-1, 1))
    return trig_poly(modes, dim, precision)


@pytest.mark.parametrize("dim,rotation_spec", [(1, "golden"),
                                               (2, "sqrtprimes:d=2")])
def test_oracle_equivalence_random_trig(dim, rotation_spec, wbar):
    rng = random.Random(100 + dim)
    rho = make_rotation(rotation_spec, P)
    with mp.workdps(P + 10):
        for _ in range(3):
            obs = _random_trig(dim, rng, P)
            theta0 = tuple(mpf(rng.random()) for _ in range(dim))
            run = AveragingRun(obs, rho, wbar, theta0, Discrete(512), P)
            res = birkhoff_weighted_discrete(run)
            oracle = fourier_error_oracle(run)
            assert abs((res.value - obs.mean) - oracle) < mpf("1e-50")


def test_resonant_mode_never_averages_out(wbar):
    rho = make_rotation("list:0.5", P)
    obs = make_observable("trig:2:0.5,0", dim=1, precision=P)
    run = AveragingRun(obs, rho, wbar, (0,), Discrete(128), P)
    res = birkhoff_weighted_discrete(run)
    with mp.workdps(P):
        # k.rho = 1 is an exact resonance: the kernel sits at S_N(0) = 1 and
        # the conjugate pair contributes its full size 2 * 0.5
        assert abs(res.abs_error - 1) < mpf("1e-50")


def test_shift_covariance_single_mode(golden, wbar):
    # the phase of theta0 factors out of the kernel: reconstruct the mode's
    # complex kernel value from runs at theta0 = 0 and 1/(4k), then predict
    # a third base point
    k = 2
    obs = make_observable(f"trig:{k}:0.5,0", dim=1, precision=P)
    N = 256

    def err_at(theta0):
        run = AveragingRun(obs, golden, wbar, (theta0,), Discrete(N), P)
        r = birkhoff_weighted_discrete(run)
        return r.value - obs.mean

    with mp.workdps(P + 10):
        e0 = err_at(mpf(0))                   # 2 Re(z)
        e1 = err_at(mpf(1) / (4 * k))         # 2 Re(iz) = -2 Im(z)
        z = (e0 - 1j * e1) / 2
        theta = mpf("0.3")
        predicted = 2 * mp.re(mp.expjpi(2 * k * theta) * z)
        assert abs(err_at(theta) - predicted) < mpf("1e-50")


def test_precision_scaling(golden, cos_obs):
    vals = {}
    for prec in (40, 60):
        w = make_weight("exp", prec)
        run = AveragingRun(cos_obs, golden, w, ("0.2",), Discrete(512), prec)
        vals[prec] = birkhoff_weighted_discrete(run).value
    with mp.workdps(80):
        assert abs(vals[40] - vals[60]) < mpf("1e-30")


def test_weighted_beats_flat_margin(golden, wbar, flat):
    # frozen from the sweep oracle: at N = 2^12 the window buys ~20 orders
    # of magnitude on the analytic observable; assert half that margin
    an = make_observable("analytic:mu=1", dim=1, precision=P)
    tol = mpf("1e-50")
    rw = birkhoff_weighted_discrete(AveragingRun(
        an, golden, wbar, (0,), Discrete(4096), P, eval_tol=tol))
    rf = birkhoff_weighted_discrete(AveragingRun(
        an, golden, flat, (0,), Discrete(4096), P, eval_tol=tol))
    assert rf.abs_error > rw.abs_error * mpf("1e10")


# ---------------------------------------------------------------------------
# Continuous mode
# ---------------------------------------------------------------------------

def test_continuous_constant(golden, wbar):
    const = trig_poly({MultiIndex((), 1): mpf("0.5")}, dim=1, precision=P)
    run = AveragingRun(const, golden, wbar, (0,),
                       Continuous(16, mpf("1e-40")), P)
    res = birkhoff_weighted_continuous(run)
    assert res.abs_error < mpf("1e-40")


def test_continuous_resonant_mode(wbar):
    # k=(1,-1) against equal coordinates: k.rho = 0, I_T(0) = 1, the pair
    # contributes its full size
    rho = make_rotation("list:0.3,0.3", P)
    obs = make_observable("trig:1_-1:0.5,0", dim=2, precision=P)
    run = AveragingRun(obs, rho, wbar, (0, 0), Continuous(64, mpf("1e-40")), P)
    res = birkhoff_weighted_continuous(run)
    with mp.workdps(P):
        assert abs(res.abs_error - 1) < mpf("1e-39")


def test_continuous_per_mode_vs_time_domain(golden, wbar, cos_obs):
    with mp.workdps(P + 10):
        for T in (16, 128):
            run = AveragingRun(cos_obs, golden, wbar, ("0.2",),
                               Continuous(T, mpf("1e-45")), P)
            a = birkhoff_weighted_continuous(run)
            b = continuous_time_domain(run)
            assert abs(a.value - b) < mpf("1e-44")


def test_window_transform_doubled_panel_oracle(wbar):
    # I(omega) against the same integral on a refined mesh at higher order
    from wbirkhoff.oscquad import panel_edges, integrate_over_edges, _is_symmetric
    from wbirkhoff.weights import eval_weight
    with mp.workdps(P + 10):
        omega = 512 * (mp.sqrt(5) - 1) / 2
        iv = weight_transform(wbar, omega, mpf("1e-45"), P)
        edges = panel_edges(wbar, omega, mpf(0), mpf(1), P, refine=2)

        def f(y):
            wv = eval_weight(wbar, y)
            return wv * mp.expjpi(2 * omega * y) if wv else mp.zero

        ref = integrate_over_edges(f, edges, 80, P)
        assert abs(iv - ref) < mpf("1e-25")
