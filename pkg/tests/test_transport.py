import numpy as np
import pytest
from scipy import stats

from floras import channel as ch
from floras import transport as tp
from floras.cauchy import CauchyParams, cdf, ks_test
from floras.errors import ConfigurationError, SingularEstimateError
from floras.sequences import generate_orthonormal_set


def test_normalize_zero_mean_input():
    xhat, params = tp.normalize_differential(np.array([1.0, -1.0]), 1.0)
    np.testing.assert_allclose(xhat, [1 / np.sqrt(2), -1 / np.sqrt(2)])
    assert params.mean == 0.0
    assert params.scale == pytest.approx(np.sqrt(2.0))


def test_normalize_removes_mean():
    xhat, params = tp.normalize_differential(np.array([3.0, 1.0]), 1.0)
    np.testing.assert_allclose(xhat, [1 / np.sqrt(2), -1 / np.sqrt(2)])
    assert params.mean == 2.0
    assert params.scale == pytest.approx(np.sqrt(2.0))


def test_normalize_norm_and_mean_contracts():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(512)
    xhat, _ = tp.normalize_differential(x, 5.0)
    assert np.linalg.norm(xhat) == pytest.approx(5.0, abs=1e-9)
    assert abs(xhat.mean()) < 1e-9


def test_normalize_constant_input_flags_zero_scale():
    xhat, params = tp.normalize_differential(np.full(16, 3.25), 1.0)
    np.testing.assert_array_equal(xhat, np.zeros(16))
    assert params.scale == 0.0
    assert params.mean == 3.25


def test_estimate_channels_noiseless():
    sset = generate_orthonormal_set(8)
    gains = np.array([0.7, -1.2, 2.0])
    used = np.array([1, 4, 6])
    est, _ = tp.estimate_channels(sset, used, gains, 0.0,
                                  np.random.default_rng(0))
    np.testing.assert_allclose(est[used], gains, atol=1e-12)
    mask = np.ones(8, bool)
    mask[used] = False
    np.testing.assert_allclose(est[mask], 0.0, atol=1e-12)


def test_estimate_channels_unused_noise_variance():
    sset = generate_orthonormal_set(32)
    used = np.arange(4)
    gains = np.ones(4)
    rng = np.random.default_rng(1)
    vals = np.empty(100_000)
    for i in range(vals.size):
        est, _ = tp.estimate_channels(sset, used, gains, 1.0, rng)
        vals[i] = est[17]
    assert np.var(vals) == pytest.approx(1.0 / 32, rel=0.02)


def test_projector_single_sequence():
    sset = generate_orthonormal_set(2)
    v = tp.build_projector(np.array([2.0, 1.0]), sset)
    # contribution of column 0 alone: (1/(2*sqrt(2))) * [1, 1]
    contrib = sset.columns[:, 0] / 2.0
    np.testing.assert_allclose(v - sset.columns[:, 1], contrib, atol=1e-12)


def test_projector_inverts_estimates():
    sset = generate_orthonormal_set(32)
    rng = np.random.default_rng(2)
    est = rng.uniform(0.5, 2.0, 32) * rng.choice([-1.0, 1.0], 32)
    v = tp.build_projector(est, sset)
    np.testing.assert_allclose(sset.columns.T @ v, 1.0 / est, atol=1e-10)


def test_projector_rejects_zero_estimate():
    sset = generate_orthonormal_set(4)
    with pytest.raises(SingularEstimateError):
        tp.build_projector(np.array([1.0, 0.0, 1.0, 1.0]), sset)


@pytest.mark.parametrize("set_size", [20, 25])
def test_noiseless_round_decodes_exact_sum(set_size):
    rng = np.random.default_rng(3)
    k, d = 20, 64
    sset = generate_orthonormal_set(set_size)
    xhats = rng.standard_normal((k, d))
    gains = np.abs(rng.standard_normal(k)) + 0.1
    used = rng.permutation(set_size)[:k]
    transcript = tp.floras_round(xhats, sset, used, gains, 0.0, rng)
    expected = xhats.sum(axis=0)
    np.testing.assert_allclose(transcript.decoded_sum, expected,
                               rtol=1e-9, atol=1e-12)


def test_decode_error_vanishes_with_sigma_full_set():
    # N = K: no unused sequences, error shrinks with the noise
    rng = np.random.default_rng(4)
    k, d = 8, 32
    sset = generate_orthonormal_set(k)
    xhats = rng.standard_normal((k, d))
    gains = np.abs(rng.standard_normal(k)) + 0.5
    used = np.arange(k)
    errs = []
    for sigma2 in (1e-4, 1e-8):
        t = tp.floras_round(xhats, sset, used, gains, sigma2,
                            np.random.default_rng(5))
        errs.append(np.max(np.abs(t.decoded_sum - xhats.sum(axis=0))))
    assert errs[1] < errs[0] * 1e-1


def test_decode_invariant_to_client_ordering():
    rng = np.random.default_rng(6)
    k, d, n = 10, 16, 12
    sset = generate_orthonormal_set(n)
    xhats = rng.standard_normal((k, d))
    gains = np.abs(rng.standard_normal(k)) + 0.2
    used = rng.permutation(n)[:k]
    order = rng.permutation(k)
    a = tp.floras_round(xhats, sset, used, gains, 0.0, rng)
    b = tp.floras_round(xhats[order], sset, used[order], gains[order], 0.0, rng)
    np.testing.assert_allclose(a.decoded_sum, b.decoded_sum, rtol=1e-12)


def test_residual_sampler_matches_full_round():
    # one-slot rounds through floras_round vs the vectorized sampler: same law
    n, k, snr = 24, 20, 40.0
    sset = generate_orthonormal_set(n)
    rng = np.random.default_rng(7)
    sigma2 = ch.snr_to_sigma2(snr, 1.0, 1)
    n_rounds = 20_000
    slow = np.empty(n_rounds)
    xhats = np.ones((k, 1))
    for i in range(n_rounds):
        gains = np.abs(ch.sample_fading(k, ch.RAYLEIGH_COMPLEX, rng).gains)
        t = tp.floras_round(xhats, sset, np.arange(k), gains, sigma2, rng)
        slow[i] = t.decoded_sum[0] - k
    fast = tp.decode_residual_samples(n_rounds, n, k, snr,
                                      np.random.default_rng(8))
    res = stats.ks_2samp(slow, fast)
    assert res.pvalue > 0.01


def test_residual_law_is_cauchy():
    samples = tp.decode_residual_samples(100_000, 25, 20, 40.0,
                                         np.random.default_rng(9))
    _, p = ks_test(samples, lambda v: cdf(v, CauchyParams(scale=5.0)))
    assert p > 0.01


def test_truncate_basics():
    np.testing.assert_allclose(tp.truncate(np.array([0.5]), 1.0), [0.5])
    np.testing.assert_allclose(tp.truncate(np.array([-7.0, 7.0]), 5.0),
                               [-5.0, 5.0])


def test_truncate_idempotent():
    rng = np.random.default_rng(10)
    x = rng.standard_cauchy(1000)
    once = tp.truncate(x, 3.0)
    np.testing.assert_array_equal(tp.truncate(once, 3.0), once)


def test_truncate_requires_positive_bound():
    with pytest.raises(ConfigurationError):
        tp.truncate(np.zeros(3), 0.0)


def test_denormalize_identical_clients():
    rng = np.random.default_rng(11)
    x = rng.standard_normal(64)
    xhat, params = tp.normalize_differential(x, 1.0)
    decoded = 4.0 * xhat  # exact sum of four identical normalized vectors
    recovered = tp.denormalize_sum(decoded, [params] * 4, 1.0)
    np.testing.assert_allclose(recovered, 4.0 * x, atol=1e-9)


def test_denormalize_single_client_inverts_normalize():
    rng = np.random.default_rng(12)
    x = rng.standard_normal(32)
    xhat, params = tp.normalize_differential(x, 2.5)
    np.testing.assert_allclose(tp.denormalize_sum(xhat, [params], 2.5), x,
                               atol=1e-10)


def test_denormalize_heterogeneous_scale_residual():
    # reconstruction error equals the (s_bar - s_k) mixing term exactly
    rng = np.random.default_rng(13)
    base = rng.standard_normal(128)
    x1 = 1.0 * base + 0.3          # scale s1 = ||base||
    x2 = 3.0 * base - 1.1          # scale s2 = 3 ||base||
    xh1, p1 = tp.normalize_differential(x1, 1.0)
    xh2, p2 = tp.normalize_differential(x2, 1.0)
    decoded = xh1 + xh2
    recovered = tp.denormalize_sum(decoded, [p1, p2], 1.0)
    s_bar = (p1.scale + p2.scale) / 2.0
    expected_residual = (s_bar - p1.scale) * xh1 + (s_bar - p2.scale) * xh2
    np.testing.assert_allclose(recovered - (x1 + x2), expected_residual,
                               atol=1e-9)


def test_inversion_noiseless_exact():
    rng = np.random.default_rng(14)
    xhats = rng.standard_normal((6, 40))
    gains = np.array([0.5 + 0.1j, -0.9, 1.2, 0.3 - 0.4j, 2.0, -1.5])
    decoded, n = tp.channel_inversion_round(xhats, gains, 0.0, 1.0, 0.01, rng)
    assert n == 6
    np.testing.assert_allclose(decoded, xhats.sum(axis=0), atol=1e-10)


def test_inversion_threshold_excludes_deep_fades():
    rng = np.random.default_rng(15)
    xhats = np.ones((3, 5))
    gains = np.array([1.0, 0.05, 1.0])  # |h|^2 = 0.0025 < 0.01
    decoded, n = tp.channel_inversion_round(xhats, gains, 0.0, 1.0, 0.01, rng)
    assert n == 2
    np.testing.assert_allclose(decoded, 2.0 * np.ones(5) * 3 / 2)


def test_inversion_zero_survivors():
    decoded, n = tp.channel_inversion_round(np.ones((2, 4)),
                                            np.array([1e-3, 1e-3]), 0.1, 1.0,
                                            0.01, np.random.default_rng(0))
    assert decoded is None and n == 0


def test_inversion_noise_grows_as_worst_gain_shrinks():
    # decode MSE is sigma2 / (p_max * min |h|^2): monotone in the worst gain
    rng = np.random.default_rng(16)
    xhats = np.zeros((4, 2000))
    sigma2 = 0.01
    mses = []
    for worst in (1.0, 0.5, 0.25, 0.12):
        gains = np.array([worst, 1.0, 1.3, 0.9])
        decoded, _ = tp.channel_inversion_round(xhats, gains, sigma2, 1.0,
                                                0.01, rng)
        mses.append(np.mean(decoded ** 2))
    assert np.all(np.diff(mses) > 0)


def test_floras_transport_round_shapes_and_energy():
    rng = np.random.default_rng(17)
    transport = tp.FlorasTransport(set_size=25, clip_norm=1.0, trunc_bound=10.0,
                                   snr_db=30.0, key=b"k")
    xhats = np.stack([tp.normalize_differential(rng.standard_normal(100), 1.0)[0]
                      for _ in range(20)])
    np.testing.assert_allclose(np.linalg.norm(xhats, axis=1), 1.0, atol=1e-9)
    out = transport.aggregate(xhats, round_id=3, rng=rng)
    assert out.estimate.shape == (100,)
    assert out.n_contributing == 20
    assert transport.gap_for(20) == 5


def test_floras_transport_rejects_oversized_cohort():
    transport = tp.FlorasTransport(set_size=4, clip_norm=1.0, trunc_bound=10.0,
                                   snr_db=10.0, key=b"k")
    with pytest.raises(ConfigurationError):
        transport.aggregate(np.ones((5, 3)), 0, np.random.default_rng(0))


def test_transport_bound_must_exceed_clip():
    with pytest.raises(ConfigurationError):
        tp.FlorasTransport(set_size=8, clip_norm=1.0, trunc_bound=0.5,
                           snr_db=10.0, key=b"k")
    with pytest.raises(ConfigurationError):
        tp.ChannelInversionTransport(clip_norm=1.0, trunc_bound=1.0, snr_db=10.0)


def test_floras_round_records_truncation():
    rng = np.random.default_rng(19)
    sset = generate_orthonormal_set(25)
    xhats = rng.standard_normal((20, 8))
    gains = np.abs(rng.standard_normal(20)) + 0.05
    t = tp.floras_round(xhats, sset, np.arange(20), gains, 1e-4, rng,
                        trunc_bound=2.0)
    assert t.trunc_bound == 2.0
    assert np.all(np.abs(t.decoded_sum) <= 2.0)
    untouched = tp.floras_round(xhats, sset, np.arange(20), gains, 1e-4, rng)
    assert untouched.trunc_bound is None


def test_inversion_power_cap_pins_common_scale():
    # zero-signal rounds expose the decode noise variance sigma2 / c^2 with
    # c = sqrt(p_max) * min |h|: the worst survivor sits exactly at the cap
    rng = np.random.default_rng(20)
    gains = np.array([0.6, 1.4, 0.9])
    sigma2, p_max = 0.05, 2.0
    xhats = np.zeros((3, 200_000))
    decoded, _ = tp.channel_inversion_round(xhats, gains, sigma2, p_max,
                                            0.01, rng)
    expected_var = sigma2 / (p_max * 0.6 ** 2)
    assert np.var(decoded) == pytest.approx(expected_var, rel=0.02)
