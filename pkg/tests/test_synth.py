import hashlib

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from emhkit import synth
from emhkit.synth import GeneratorSpec, make_rng

N = 2 ** 14


def digest(x):
    return hashlib.sha256(np.ascontiguousarray(x).tobytes()).hexdigest()


# -------------------------------------------------------------------- fGn

def test_fgn_half_is_white():
    x = synth.gen_fgn(0.5, N, 1)
    xc = x - x.mean()
    assert abs(np.dot(xc[:-1], xc[1:]) / np.dot(xc, xc)) < 3 / np.sqrt(N)


def test_fgn_lag_one_correlation():
    target = 2 ** (2 * 0.8 - 1) - 1
    x = synth.gen_fgn(0.8, N, 2)
    xc = x - x.mean()
    assert abs(np.dot(xc[:-1], xc[1:]) / np.dot(xc, xc) - target) < 0.03


def test_fgn_autocovariance_formula():
    g = synth.fgn_autocovariance(0.7, np.arange(4))
    assert g[0] == 1.0
    assert g[1] == pytest.approx(2 ** 0.4 - 1)
    assert np.allclose(synth.fgn_autocovariance(0.5, np.arange(1, 10)), 0.0)


def test_fgn_deterministic_and_exact():
    a, flag = synth.gen_fgn(0.7, 4096, 42, return_flag=True)
    assert flag == "exact"
    assert digest(a) == digest(synth.gen_fgn(0.7, 4096, 42))
    assert digest(a) != digest(synth.gen_fgn(0.7, 4096, 43))


def test_fgn_errors():
    for H in (0.0, 1.0, -0.2):
        with pytest.raises(ValueError):
            synth.gen_fgn(H, 100)


@pytest.mark.parametrize("H", [0.3, 0.5, 0.7])
def test_fgn_moments(H):
    x = synth.gen_fgn(H, N, 3)
    # Var(mean) = N^(2H-2) for unit-variance fGn
    assert abs(x.mean()) < 4 * N ** (H - 1)
    g = synth.fgn_autocovariance(H, np.arange(N))
    se_var = np.sqrt(2.0 / N * (g[0] ** 2 + 2 * np.sum(g[1:] ** 2)))
    assert abs(x.var() - (1 - N ** (2 * H - 2))) < 4 * se_var


def test_fbm_is_cumsum():
    b = synth.gen_fbm(0.6, 1000, 5)
    assert b[0] == 0.0 and len(b) == 1000
    assert np.allclose(np.diff(b), synth.gen_fgn(0.6, 999, 5))


# ----------------------------------------------------------------- ARFIMA

def test_arfima_weights():
    psi = synth.arfima_weights(0.3, 5)
    assert psi[0] == 1.0 and psi[1] == 0.3
    from scipy.special import gamma
    j = np.arange(5)
    assert np.allclose(psi, gamma(j + 0.3) / (gamma(j + 1) * gamma(0.3)))


def test_arfima_zero_is_white():
    x = synth.gen_arfima(0.0, N, 6)
    xc = x - x.mean()
    assert abs(np.dot(xc[:-1], xc[1:]) / np.dot(xc, xc)) < 3 / np.sqrt(N)


def test_arfima_variance_and_lag_one():
    from scipy.special import gammaln
    d = 0.2
    x = synth.gen_arfima(d, N, 7)
    var = np.exp(gammaln(1 - 2 * d) - 2 * gammaln(1 - d))
    assert abs(x.var() / var - 1) < 0.1
    rho1 = d / (1 - d)
    xc = x - x.mean()
    assert abs(np.dot(xc[:-1], xc[1:]) / np.dot(xc, xc) - rho1) < 0.03


def test_arfima_errors():
    with pytest.raises(ValueError):
        synth.gen_arfima(0.5, 100)


# ------------------------------------------------------------- AR / noise

def test_white_noise_and_ar1_moments():
    w = synth.gen_white_noise(N, 8, sigma=2.0)
    assert abs(w.mean()) < 4 * 2 / np.sqrt(N)
    assert abs(w.var() - 4) < 4 * 4 * np.sqrt(2 / N)
    phi = 0.6
    a = synth.gen_ar1(phi, N, 9)
    v = 1 / (1 - phi ** 2)
    assert abs(a.mean()) < 4 * np.sqrt(v * (1 + phi) / (1 - phi) / N)
    assert abs(a.var() / v - 1) < 0.06


# ------------------------------------------------------------ GARCH family

def test_garch_long_run_variance():
    r, s = synth.gen_garch_family("garch11", 200_000, 10, k=0.1, gamma=0.5, alpha=0.3)
    assert abs(r.var() / 0.5 - 1) < 0.05
    assert np.all(s > 0) and len(s) == len(r)


def test_garch_degenerate_iid():
    r, s = synth.gen_garch_family("garch", N, 11, k=0.1, gamma=0.0, alpha=0.0)
    assert np.allclose(s, np.sqrt(0.1))
    assert abs(r.var() / 0.1 - 1) < 4 * np.sqrt(2 / N)


def test_egarch_leverage():
    r, s = synth.gen_garch_family("egarch", 50_000, 12, k=-0.1, gamma=0.9, alpha=0.3, xi=-0.1)
    z = r / s
    assert np.corrcoef(z[:-1], np.log(s[1:] ** 2))[0, 1] < 0


def test_garch_explosive():
    with pytest.raises(ValueError):
        synth.gen_garch_family("garch", 100, 0, k=0.1, gamma=0.7, alpha=0.4)
    with pytest.raises(ValueError):
        synth.gen_garch_family("egarch", 100, 0, gamma=1.1)
    with pytest.raises(ValueError):
        synth.gen_garch_family("figarch", 100, 0)


# ----------------------------------------------------------------- chaotic

def test_logistic_tangent_map():
    assert abs(synth.logistic_lyapunov(1_000_000) - np.log(2)) < 0.001


def test_henon_tangent_map():
    assert abs(synth.henon_lyapunov(1_000_000) - 0.419) < 0.005


def test_sine_map_contracting():
    r = 0.5
    x = synth.gen_chaotic("sine_map", 5000, seed=1, r=r)
    lam = np.mean(np.log(np.abs(r * np.pi * np.cos(np.pi * x))))
    assert lam < 0


def test_noise_free_path_and_snr():
    clean = synth.gen_chaotic("logistic", 5000, seed=2)
    assert np.array_equal(clean, synth.gen_chaotic("logistic", 5000, seed=2, noise_snr=np.inf))
    noisy = synth.gen_chaotic("logistic", 5000, seed=2, noise_snr=20.0)
    ratio = np.var(noisy - clean) / np.var(clean)
    assert abs(10 * np.log10(1 / ratio) - 20) < 0.5


def test_chaotic_burn_in_and_kind():
    with pytest.raises(ValueError):
        synth.gen_chaotic("logistic", 100, burn=10)
    with pytest.raises(ValueError):
        synth.gen_chaotic("lorenz", 100)


def test_gbm_log_returns():
    p = synth.gen_gbm(N, 13, sigma=0.02)
    r = np.diff(np.log(p))
    assert p[0] == 50.0 and np.all(p > 0)
    assert abs(r.std() / 0.02 - 1) < 4 * np.sqrt(1 / (2 * N))


# ------------------------------------------------------------------ specs

@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["white_noise", "ar1", "fgn", "fbm", "arfima", "garch11", "egarch11",
                        "gjr11", "logistic", "henon", "sine", "gbm"]),
       st.integers(0, 2 ** 32 - 1))
def test_generate_deterministic(kind, seed):
    spec = GeneratorSpec(kind, 256, seed)
    assert digest(synth.generate(spec)) == digest(synth.generate(spec))
    assert len(synth.generate(spec)) == 256


def test_spec_validation():
    with pytest.raises(ValueError):
        GeneratorSpec("brownian", 10)
    with pytest.raises(ValueError):
        GeneratorSpec("fgn", 0)


def test_rng_is_philox():
    assert isinstance(make_rng(0).bit_generator, np.random.Philox)
