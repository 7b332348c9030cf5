import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from emhkit import bds, hurst, synth
from emhkit import market as Mk
from emhkit.series import PriceSeries, log_returns
from emhkit.synth import make_rng


# --------------------------------------------------------------------- HHI

def test_hhi_examples():
    r = Mk.hhi([1.0])
    assert (r.value, r.cls) == (10000.0, "monopoly")
    r = Mk.hhi([0.5, 0.5])
    assert r.value == pytest.approx(5000.0) and r.cls == "concentrated"


def test_hhi_footnote_shares():
    shares = [0.8854, 0.1148, 0.0738, 0.0746, 0.0375]
    r = Mk.hhi(shares)
    assert r.value == pytest.approx(1e4 * sum(s * s for s in shares), abs=1e-9)
    assert r.value == pytest.approx(8095.3, abs=0.05)
    assert "shares_exceed_one" in r.flags


def test_hhi_percent_autodetect():
    assert Mk.hhi([50, 30, 20]).value == pytest.approx(Mk.hhi([0.5, 0.3, 0.2]).value)
    assert Mk.hhi([50, 30, 20]).flags["unit"] == "percent"


def test_hhi_errors():
    with pytest.raises(ValueError):
        Mk.hhi([1.2], percent=False)
    with pytest.raises(ValueError):
        Mk.hhi([])
    with pytest.raises(ValueError):
        Mk.hhi([-0.1, 0.5])


def test_hhi_classes():
    assert Mk.hhi_class(6000) == "over-concentrated"
    assert Mk.hhi_class(1800) == "moderately competitive"
    assert Mk.hhi_class(1801) == "concentrated"
    assert Mk.hhi_class(1000) == "competitive"
    assert Mk.hhi_class(1000.5) == "moderately competitive"


@settings(max_examples=100, deadline=None)
@given(arrays(float, 3, elements=st.floats(0.01, 1.0)), st.permutations(range(3)))
def test_hhi_permutation_invariant(w, perm):
    s = w / w.sum()
    assert Mk.hhi(s[list(perm)], percent=False).value == pytest.approx(Mk.hhi(s, percent=False).value,
                                                                       rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(arrays(float, 3, elements=st.floats(0.05, 1.0)), st.floats(0.01, 0.99))
def test_hhi_transfer_to_largest_increases(w, frac):
    s = np.sort(w / w.sum())[::-1].copy()
    t = s.copy()
    d = frac * t[2]
    t[2] -= d
    t[0] += d
    assert Mk.hhi(t, percent=False).value > Mk.hhi(s, percent=False).value


# ------------------------------------------------------------ correlations

@pytest.fixture
def panel(data_dir):
    return Mk.load_panel(data_dir / "annual_panel_2005_2013.csv")


def test_panel_loaded(panel):
    assert list(panel.index) == list(range(2005, 2014))


def test_printed_panel_correlations(panel):
    mat, flags = Mk.correlation_matrix(panel)
    assert abs(mat.loc["uv_pun", "pun_lyap"] - (-0.734)) < 0.01
    assert abs(mat.loc["uv_smp", "smp_lyap"] - (-0.26)) < 0.01
    x, y = panel["uv_pun"].to_numpy(), panel["pun_lyap"].to_numpy()
    assert mat.loc["uv_pun", "pun_lyap"] == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-12)
    assert np.allclose(np.diag(mat), 1.0)
    assert np.allclose(mat.to_numpy(), mat.to_numpy().T)
    assert not flags


def test_correlation_mirror_column():
    df = pd.DataFrame({"a": [1.0, 2, 4, 3, 5], "b": [-1.0, -2, -4, -3, -5]})
    mat, _ = Mk.correlation_matrix(df)
    assert mat.loc["a", "b"] == pytest.approx(-1.0)


def test_correlation_affine_invariance(panel):
    m1, _ = Mk.correlation_matrix(panel)
    scaled = panel * 3.7 + 11.0
    m2, _ = Mk.correlation_matrix(scaled)
    assert np.allclose(m1.to_numpy(), m2.to_numpy(), atol=1e-12)


def test_correlation_flags():
    df = pd.DataFrame({"a": [1.0, 2, 3, 4], "b": [1.0, 1, 1, 1], "c": [np.nan, np.nan, 1.0, 2.0]})
    mat, flags = Mk.correlation_matrix(df)
    assert flags["constant_columns"] == ["b"]
    assert np.isnan(mat.loc["a", "b"])
    assert ("a", "c", 2) in flags["insufficient_pairs"]


def test_correlation_null_n9():
    small = 0
    for s in range(200):
        x = make_rng(s).standard_normal((9, 2))
        mat, _ = Mk.correlation_matrix(pd.DataFrame(x, columns=["u", "v"]))
        small += abs(mat.loc["u", "v"]) < 0.8
    assert small >= 180


# -------------------------------------------------------- direction of change

def _panel(lam, vol, start=2008):
    return pd.DataFrame({"lam": lam, "vol": vol}, index=range(start, start + len(lam)))


def test_direction_rule():
    out = Mk.direction_of_change(_panel([-0.1, -0.2], [0.2, 0.15]), "lam", "vol")
    row = out.loc[2009]
    assert (row.d_lambda, row.stability, row.d_sigma, row.consistent) == ("MN", "I", "D", True)


def test_direction_printed_pun_2009():
    out = Mk.direction_of_change(_panel([-0.116, -0.128], [0.0077, 0.014]), "lam", "vol")
    row = out.loc[2009]
    assert (row.d_lambda, row.stability, row.d_sigma, row.consistent) == ("MN", "I", "I", False)


def test_direction_tie():
    out = Mk.direction_of_change(_panel([-0.1, -0.1], [0.2, 0.3]), "lam", "vol")
    assert out.loc[2009].d_lambda == "no-change" and out.loc[2009].consistent is None


def test_direction_errors():
    with pytest.raises(ValueError):
        Mk.direction_of_change(_panel([-0.1], [0.2]), "lam", "vol")
    gap = pd.DataFrame({"lam": [0.1, 0.2], "vol": [1.0, 2.0]}, index=[2005, 2007])
    with pytest.raises(ValueError):
        Mk.direction_of_change(gap, "lam", "vol")


def test_direction_on_printed_panel(panel):
    for lam, vol in (("pun_lyap", "uv_pun"), ("smp_lyap", "uv_smp")):
        out = Mk.direction_of_change(panel, lam, vol)
        assert len(out) == 8
        assert ((out.d_lambda == "MN") == (out.stability == "I")).all()
        d = panel[lam].diff().dropna()
        assert list(out.d_lambda) == ["MN" if v < 0 else "LN" for v in d]


# -------------------------------------------------------------- efficiency

def _bundle_from_prices(prices):
    r = log_returns(PriceSeries(prices)).values
    H = {"rs-al": hurst.rs_hurst_corrected(r).H, "dfa": hurst.dfa(r).H}
    return {"mkt": {"hurst": H, "bds_rejects": bds.bds_test(r, 6).rejects()}}


def test_gbm_market_efficient():
    rep = Mk.efficiency_report(_bundle_from_prices(synth.gen_gbm(4000, seed=1)))
    eff = rep["markets"]["mkt"]["efficiency"]
    assert eff["verdict"] == "indistinguishable from random walk"
    assert abs(rep["markets"]["mkt"]["hurst_mean"] - 0.5) < 0.05
    assert rep["markets"]["mkt"]["bds_rejects"] is False
    assert eff["efficient"]


def test_antipersistent_market():
    r = 0.01 * synth.gen_fgn(0.25, 4000, 2)
    prices = 50 * np.exp(np.concatenate([[0.0], np.cumsum(r)]))
    eff = Mk.efficiency_report(_bundle_from_prices(prices))["markets"]["mkt"]["efficiency"]
    assert eff["verdict"] == "anti-persistent (mean reverting)"
    assert not eff["efficient"]


def test_empty_bundle():
    with pytest.raises(ValueError):
        Mk.efficiency_report({})


def test_report_passthrough_and_render():
    bundle = {"x": {"hurst": {"dfa": 0.3}, "lyapunov": {"jacobian": {"lambda_max": -0.1, "verdict": "no_chaos"}},
                    "hhi": 8095.3, "volatility": {"uv": 0.2}}}
    rep = Mk.efficiency_report(bundle)
    assert rep["markets"]["x"]["volatility"] == {"uv": 0.2}
    text = Mk.render_report(rep)
    assert "anti-persistent" in text and "over-concentrated" in text and "lambda[jacobian]" in text


def test_classify_efficiency_chaos_reason():
    out = Mk.classify_efficiency(0.5, False, "chaos")
    assert out["verdict"] == "indistinguishable from random walk" and not out["efficient"]


def test_hhi_boundary_rounding():
    assert Mk.hhi([0.1] * 10, percent=False).cls == "competitive"
    assert Mk.hhi([10.0] * 10, percent=True).cls == "competitive"
