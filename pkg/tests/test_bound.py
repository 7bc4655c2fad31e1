import math

import numpy as np
import pytest

from floras import bound as bnd
from floras.cauchy import truncated_variance


def _params(**kw):
    base = dict(mu=0.1, l_smooth=1.0, hetero_gap=0.2, grad_bound=1.0,
                local_steps=1, k_clients=20, m_clients=40, clip_norm=1.0,
                trunc_bound=50.0, eps=0.8, init_dist=1.0, lr_shift=0.0)
    base.update(kw)
    return bnd.BoundParams(**base)


def test_d_epsilon_reference_value():
    got = bnd.d_epsilon(0.8, 1.0, 50.0, 20, 1, 1.0)
    assert got == pytest.approx(1.4493766371659191, rel=1e-12)


def test_d_epsilon_decreasing_in_eps():
    grid = np.linspace(0.01, 10.0, 300)
    values = [bnd.d_epsilon(e, 1.0, 50.0, 20, 1, 1.0) for e in grid]
    assert np.all(np.diff(values) < 0)


def test_d_epsilon_nonnegative():
    rng = np.random.default_rng(3)
    for _ in range(200):
        got = bnd.d_epsilon(rng.uniform(1e-3, 20), rng.uniform(0.1, 5),
                            rng.uniform(1, 500), int(rng.integers(1, 100)),
                            int(rng.integers(1, 10)), rng.uniform(0, 5))
        assert got >= 0.0


def test_d_epsilon_diverges_at_zero():
    assert bnd.d_epsilon(0.0, 1.0, 50.0, 20, 1, 1.0) == math.inf


def test_d_epsilon_ties_to_truncated_cauchy_moment():
    # substituting gap = 4C/eps reduces D to the truncated second moment
    for eps in (0.1, 0.8, 3.0):
        for clip, trunc, k, steps, h in ((1.0, 50.0, 20, 1, 1.0),
                                         (2.0, 80.0, 10, 3, 0.7)):
            direct = bnd.d_epsilon(eps, clip, trunc, k, steps, h)
            gap = 4.0 * clip / eps
            via_moment = (4.0 * steps ** 2 * h ** 2 / (k ** 2 * clip ** 2)
                          * truncated_variance(gap, trunc))
            assert direct == pytest.approx(via_moment, rel=1e-12)


def test_gap_to_eps_bridge():
    assert bnd.gap_to_eps(1.0, 5.0) == pytest.approx(0.8)


def test_sampling_term_reference_value():
    got = bnd.sampling_term(40, 20, 0.01, 1, 1.0)
    assert got == pytest.approx(1.0256410256410256e-05, rel=1e-12)


def test_sampling_term_degenerate_cases():
    assert bnd.sampling_term(20, 20, 0.01, 1, 1.0) == 0.0
    assert bnd.sampling_term(1, 1, 0.01, 1, 1.0) == 0.0


def test_bound_constant_variance_only():
    # E=1, M=K, Gamma=0, eps huge so D ~ 0: only the variance term remains
    params = _params(hetero_gap=0.0, m_clients=20, k_clients=20, eps=1e12)
    g = bnd.bound_constant(params, eta=0.01)
    expected = float(np.sum(params.client_grad_bounds ** 2)) / 400
    assert g == pytest.approx(expected, rel=1e-6)


def test_bound_constant_monotone_in_drivers():
    etas = 0.01
    gammas = [bnd.bound_constant(_params(hetero_gap=v), etas) for v in np.linspace(0, 5, 20)]
    assert np.all(np.diff(gammas) >= 0)
    steps = [bnd.bound_constant(_params(local_steps=e), etas) for e in range(1, 10)]
    assert np.all(np.diff(steps) >= 0)
    grads = [bnd.bound_constant(_params(grad_bound=h,
                                        client_grad_bounds=np.full(40, h)), etas)
             for h in np.linspace(0.1, 5, 20)]
    assert np.all(np.diff(grads) >= 0)


def test_bound_strictly_decreasing_in_t():
    params = _params()
    ts = np.unique(np.geomspace(1, 1e6, 200).astype(int))
    values = [bnd.convergence_bound(int(t), params) for t in ts]
    assert np.all(np.diff(values) < 0)


def test_bound_one_over_t_asymptotics():
    params = _params()
    t = 1_000_000
    ratio = bnd.convergence_bound(2 * t, params) / bnd.convergence_bound(t, params)
    assert ratio == pytest.approx(0.5, rel=1e-3)


def test_bound_grows_as_eps_shrinks():
    params_grid = [bnd.convergence_bound(100, _params(eps=e))
                   for e in np.linspace(0.01, 10.0, 100)]
    assert np.all(np.diff(params_grid) < 0)  # larger eps, smaller bound


def test_bound_closed_form_no_noise():
    params = _params(hetero_gap=0.0, grad_bound=0.0,
                     client_grad_bounds=np.zeros(40), eps=1.0,
                     init_dist=1.0, lr_shift=0.0)
    for t in (1, 10, 1000):
        assert bnd.convergence_bound(t, params) == pytest.approx(
            params.l_smooth / (2.0 * t), rel=1e-12)


def test_invalid_curvature_rejected():
    with pytest.raises(ValueError):
        _params(mu=0.0)
    with pytest.raises(ValueError):
        _params(l_smooth=0.01, mu=0.1)
