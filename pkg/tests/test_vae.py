import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latentmjpf.errors import TrainingError
from latentmjpf.nn import MlpParams, init_mlp
from latentmjpf.synthetic import ScenarioSpec, generate
from latentmjpf.vae import (Frame, LatentFrame, VaeParams, VaeTrainConfig, decode,
                            elbo_grad, elbo_loss, encode, encode_frames,
                            reparameterize, train_vae)


def zero_vae(width=2, height=2, latent_dim=2):
    d = width * height
    enc = MlpParams((d, 2 * latent_dim),
                    [np.zeros((2 * latent_dim, d))], [np.zeros(2 * latent_dim)], "tanh")
    dec = MlpParams((latent_dim, d), [np.zeros((d, latent_dim))], [np.zeros(d)], "tanh")
    return VaeParams(enc, dec, latent_dim, width, height)


def small_vae(seed=0, width=2, height=2, latent_dim=2, hidden=3):
    d = width * height
    rng = np.random.default_rng(seed)
    enc = init_mlp((d, hidden, 2 * latent_dim), rng=rng)
    dec = init_mlp((latent_dim, hidden, d), rng=rng)
    return VaeParams(enc, dec, latent_dim, width, height)


@pytest.fixture(scope="module")
def dot_frames():
    frames, _ = generate(ScenarioSpec(segments=(("loop_cw", 100),), seed=4))
    return frames


@pytest.fixture(scope="module")
def trained(dot_frames):
    cfg = VaeTrainConfig(latent_dim=4, hidden=64, epochs=3000, learning_rate=5e-3, seed=1)
    return train_vae(dot_frames, cfg), cfg


def test_encode_zero_network():
    p = zero_vae()
    lf = encode(p, Frame(2, 2, np.full(4, 0.5)))
    assert np.array_equal(lf.mu, np.zeros(2))
    assert np.array_equal(lf.sigma2, np.ones(2))  # exp(0)


def test_encode_is_deterministic():
    p = small_vae(seed=5)
    f = Frame(2, 2, np.array([0.1, 0.9, 0.4, 0.2]))
    a, b = encode(p, f), encode(p, f)
    assert np.array_equal(a.mu, b.mu) and np.array_equal(a.sigma2, b.sigma2)


def test_encode_rejects_wrong_size():
    p = small_vae()
    with pytest.raises(ValueError):
        encode(p, Frame(3, 3, np.full(9, 0.5)))


def test_encode_frames_matches_single(dot_frames):
    p = small_vae(width=16, height=16, latent_dim=2, hidden=4)
    batch = encode_frames(p, dot_frames[:5])
    for f, lf in zip(dot_frames[:5], batch):
        single = encode(p, f)
        assert np.allclose(lf.mu, single.mu, atol=1e-12)
        assert np.allclose(lf.sigma2, single.sigma2, atol=1e-12)


def test_reparameterize_zero_noise():
    lf = LatentFrame(mu=np.array([1.0, -2.0]), sigma2=np.array([0.5, 2.0]))
    assert np.array_equal(reparameterize(lf, np.zeros(2)), lf.mu)


def test_reparameterize_variance_floor():
    lf = LatentFrame(mu=np.array([1.0]), sigma2=np.array([1e-8]))
    z = reparameterize(lf, np.array([3.0]))
    assert abs(z[0] - 1.0) < 1e-3


def test_reparameterize_monte_carlo_mean():
    rng = np.random.default_rng(17)
    lf = LatentFrame(mu=np.array([0.7, -1.2]), sigma2=np.array([0.3, 2.5]))
    n = 100_000
    draws = np.stack([reparameterize(lf, rng.standard_normal(2)) for _ in range(n)])
    se = np.sqrt(lf.sigma2 / n)
    assert np.all(np.abs(draws.mean(axis=0) - lf.mu) < 4 * se)


def test_decode_zero_network_gives_half():
    p = zero_vae()
    f = decode(p, np.zeros(2))
    assert np.allclose(f.pixels, 0.5, atol=0.0)


def test_decode_output_in_unit_interval():
    p = small_vae(seed=9)
    rng = np.random.default_rng(0)
    for _ in range(20):
        f = decode(p, rng.normal(size=2) * 10)
        assert f.pixels.min() >= 0.0 and f.pixels.max() <= 1.0


def test_decode_continuity():
    p = small_vae(seed=11)
    z = np.array([0.2, -0.4])
    base = decode(p, z).pixels
    near = decode(p, z + 1e-4).pixels
    assert np.abs(base - near).max() < 1e-2


def test_decode_rejects_wrong_length():
    p = small_vae()
    with pytest.raises(ValueError):
        decode(p, np.zeros(3))


def test_kl_zero_at_prior():
    # zero-weight encoder emits mu = 0, log sigma2 = 0: the prior exactly
    p = zero_vae()
    _, kl, _ = elbo_loss(p, Frame(2, 2, np.full(4, 0.5)), np.zeros(2))
    assert kl == pytest.approx(0.0, abs=1e-14)


def test_kl_closed_form_unit_shift():
    # mu = (1, 0), sigma2 = 1 gives kl = 1/2
    p = zero_vae()
    p.encoder.biases[0][0] = 1.0
    _, kl, _ = elbo_loss(p, Frame(2, 2, np.full(4, 0.5)), np.zeros(2))
    assert kl == pytest.approx(0.5, abs=1e-14)


@given(st.lists(st.floats(min_value=-5, max_value=5), min_size=2, max_size=2),
       st.lists(st.floats(min_value=-6, max_value=6), min_size=2, max_size=2))
@settings(max_examples=60, deadline=None)
def test_kl_nonnegative(mu, log_sigma2):
    p = zero_vae()
    p.encoder.biases[0][:2] = mu
    p.encoder.biases[0][2:] = log_sigma2
    _, kl, _ = elbo_loss(p, Frame(2, 2, np.full(4, 0.5)), np.zeros(2))
    assert kl >= -1e-12


def flatten_params(p):
    return [("enc", "w", i) for i in range(len(p.encoder.weights))]


def test_elbo_grad_matches_finite_differences():
    p = small_vae(seed=23)
    frame = Frame(2, 2, np.array([0.1, 0.8, 0.45, 0.9]))
    noise = np.random.default_rng(3).standard_normal(2)
    enc_g, dec_g = elbo_grad(p, frame, noise)
    h = 1e-5

    def loss_at(params):
        return elbo_loss(params, frame, noise)[0]

    for net_name, grads in (("encoder", enc_g), ("decoder", dec_g)):
        net = getattr(p, net_name)
        for li in range(len(net.weights)):
            for arrays, garrs in ((net.weights, grads.weights), (net.biases, grads.biases)):
                for idx in np.ndindex(*arrays[li].shape):
                    orig = arrays[li][idx]
                    arrays[li][idx] = orig + h
                    lp = loss_at(p)
                    arrays[li][idx] = orig - h
                    lm = loss_at(p)
                    arrays[li][idx] = orig
                    fd = (lp - lm) / (2 * h)
                    assert abs(garrs[li][idx] - fd) / (abs(fd) + 1e-8) < 1e-4, (net_name, li, idx)


def test_train_deterministic(dot_frames):
    cfg = VaeTrainConfig(latent_dim=2, hidden=8, epochs=3, seed=7)
    a = train_vae(dot_frames[:20], cfg)
    b = train_vae(dot_frames[:20], cfg)
    for wa, wb in zip(a.encoder.weights + a.decoder.weights,
                      b.encoder.weights + b.decoder.weights):
        assert np.array_equal(wa, wb)


def test_train_overfits_single_frame(dot_frames):
    frame = dot_frames[0]
    cfg = VaeTrainConfig(latent_dim=2, hidden=16, epochs=400, batch_size=1,
                         learning_rate=5e-3, seed=2)
    p = train_vae([frame], cfg)
    recon = decode(p, encode(p, frame).mu)
    assert np.abs(recon.pixels - frame.pixels).mean() < 0.05


def test_train_reduces_loss_by_thirty_percent(dot_frames):
    cfg = VaeTrainConfig(latent_dim=4, hidden=32, epochs=150, seed=3)
    p = train_vae(dot_frames, cfg)
    fresh = train_vae(dot_frames, VaeTrainConfig(latent_dim=4, hidden=32, epochs=0, seed=3))
    noise = np.zeros(4)
    initial = np.mean([elbo_loss(fresh, f, noise)[0] for f in dot_frames])
    final = np.mean([elbo_loss(p, f, noise)[0] for f in dot_frames])
    assert final < 0.7 * initial


def test_train_diverges_with_huge_learning_rate(dot_frames):
    cfg = VaeTrainConfig(latent_dim=2, hidden=8, epochs=50, learning_rate=1e6, seed=0)
    with pytest.raises(TrainingError, match="epoch"):
        with np.errstate(all="ignore"):
            train_vae(dot_frames[:10], cfg)


def test_trained_vae_separates_distinct_frames(trained, dot_frames):
    p, _ = trained
    # opposite corners of the patrol are visually distinct
    a = encode(p, dot_frames[0])
    b = encode(p, dot_frames[18])
    gap = np.abs(a.mu - b.mu).max()
    spread = np.sqrt(max(a.sigma2.max(), b.sigma2.max()))
    assert gap > 3 * spread


def test_trained_vae_beats_untrained_reconstruction(trained, dot_frames):
    p, cfg = trained
    fresh = train_vae(dot_frames, VaeTrainConfig(latent_dim=4, hidden=64, epochs=0, seed=1))

    def mean_err(params):
        errs = []
        for f in dot_frames[:25]:
            recon = decode(params, encode(params, f).mu)
            errs.append(np.abs(recon.pixels - f.pixels).mean())
        return np.mean(errs)

    assert mean_err(p) < mean_err(fresh)
