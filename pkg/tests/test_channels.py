from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from backhaul_lab import channels as ch
from backhaul_lab.channels import (
    AbsorptionModel,
    AccessLinkParams,
    FsoLinkParams,
    PointingGeometry,
    ThzLinkParams,
)
from backhaul_lab.montecarlo import RngStream, sample_fso_snr, sample_thz_snr

# frozen from a 2-D integration of the Gaussian beam over the equal-area square aperture
A0_SQUARE_APERTURE = 0.3900061737674388
XI_FSO_DEFAULT = 4.574660643337136


def _gaussian_capture(a, w, shape):
    def intensity(y, x):
        return 2 / (math.pi * w * w) * math.exp(-2 * (x * x + y * y) / w ** 2)

    if shape == "square":
        s = math.sqrt(math.pi) * a / 2
        return integrate.dblquad(intensity, -s, s, -s, s, epsabs=0, epsrel=1e-12)[0]
    return integrate.dblquad(lambda r, t: intensity(r, 0.0) * r, 0, 2 * math.pi, 0, a, epsabs=0, epsrel=1e-12)[0]


# --------------------------------------------------------------------------
# pointing geometry
# --------------------------------------------------------------------------


def test_pointing_fields_follow_the_definitions():
    p = PointingGeometry(0.20, 0.40, 0.05)
    v0 = math.sqrt(math.pi * 0.2 ** 2 / (2 * 0.4 ** 2))
    assert p.v0 == pytest.approx(v0, rel=1e-15)
    assert p.a0 == pytest.approx(math.erf(v0) ** 2, rel=1e-15)
    w_eq2 = math.sqrt(math.pi * p.a0) * 0.4 ** 2 / (2 * v0 * math.exp(-v0 * v0))
    assert p.w_eq == pytest.approx(math.sqrt(w_eq2), rel=1e-15)
    assert p.xi == pytest.approx(p.w_eq / 0.1, rel=1e-15)


def test_fso_end_capture_fraction_and_jitter_ratio():
    p = PointingGeometry(0.20, 0.40, 0.05)
    assert p.a0 == pytest.approx(A0_SQUARE_APERTURE, rel=1e-12)
    assert p.a0 == pytest.approx(_gaussian_capture(0.2, 0.4, "square"), rel=1e-10)
    # the erf^2 form is the square-aperture value; the circle collects slightly more
    assert _gaussian_capture(0.2, 0.4, "circle") > p.a0
    assert p.a0 == pytest.approx(0.3898, abs=5e-4)
    assert p.xi == pytest.approx(XI_FSO_DEFAULT, rel=1e-12)
    assert p.xi == pytest.approx(4.57, abs=0.01)


def test_wide_aperture_captures_the_whole_beam():
    assert PointingGeometry(4.0, 0.4, 0.05).a0 == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError, match="too large"):
        PointingGeometry(50.0, 0.4, 0.05)


def test_large_jitter_removes_misalignment_diversity():
    assert PointingGeometry(0.2, 0.4, 1e6).xi < 1e-5


@pytest.mark.parametrize("args", [(0, 0.4, 0.05), (0.2, -1, 0.05), (0.2, 0.4, 0)])
def test_pointing_rejects_non_positive_geometry(args):
    with pytest.raises(ValueError):
        PointingGeometry(*args)


@given(st.floats(0.01, 2.0), st.floats(0.05, 10.0), st.floats(0.005, 1.0))
def test_pointing_invariants(a, ratio, eps):
    w = a / ratio
    p = PointingGeometry(a, w, eps)
    assert 0 < p.a0 <= 1
    assert p.w_eq >= w * (1 - 1e-12)
    assert p.xi > 0


# --------------------------------------------------------------------------
# FSO link parameters
# --------------------------------------------------------------------------


@pytest.mark.parametrize("cn2, expected", [(1e-12, (4.343, 2.492)), (5e-13, (5.838, 4.249))])
def test_turbulence_pairs_match_the_tabulated_values(cn2, expected):
    alpha, beta = ch.fso_turbulence_params(cn2, 1550e-9, 200.0)
    assert alpha == pytest.approx(expected[0], rel=0.01)
    assert beta == pytest.approx(expected[1], rel=0.01)


def test_no_turbulence_limit():
    assert ch.fso_turbulence_params(0.0, 1550e-9, 200.0) == (math.inf, math.inf)
    alpha, beta = ch.fso_turbulence_params(1e-20, 1550e-9, 200.0)
    assert alpha > 1e6 and beta > 1e6


@given(st.floats(1e-16, 1e-11), st.floats(500e-9, 2000e-9), st.floats(50.0, 5000.0))
def test_alpha_exceeds_beta(cn2, wavelength, length):
    alpha, beta = ch.fso_turbulence_params(cn2, wavelength, length)
    assert alpha > beta > 0


def test_clear_air_attenuation():
    i_l = ch.fso_attenuation(10.0, 1550e-9, 200.0)
    q = ch.visibility_exponent(10.0)
    c_a_per_km = 3.912 / 10.0 * (1550 / 550) ** (-q)
    assert c_a_per_km == pytest.approx(0.1017, abs=5e-4)
    assert i_l == pytest.approx(math.exp(-c_a_per_km * 0.2), rel=1e-12)
    assert i_l == pytest.approx(0.980, abs=5e-4)


def test_literal_sign_attenuates_more():
    assert ch.fso_attenuation(10.0, 1550e-9, 200.0, kruse_sign=+1) < ch.fso_attenuation(10.0, 1550e-9, 200.0)


def test_zero_length_has_no_attenuation():
    assert ch.fso_attenuation(10.0, 1550e-9, 0.0) == 1.0


@pytest.mark.parametrize("vi, q", [(60.0, 1.6), (6.0, 1.3), (10.0, 1.3), (3.0, 0.585 * 3.0 ** (1 / 3))])
def test_visibility_exponent_pieces(vi, q):
    assert ch.visibility_exponent(vi) == pytest.approx(q)


def test_snr_scale_power_law():
    assert ch.fso_snr_scale(1, 1, 1, 1, 1) == 1.0
    assert ch.fso_snr_scale(2, 1, 0.9, 1, 2) / ch.fso_snr_scale(1, 1, 0.9, 1, 2) == pytest.approx(4.0)


def test_snr_scale_matches_sampled_mean_ratio():
    link = FsoLinkParams()
    rng = RngStream(11, 0).generator()
    from backhaul_lab.montecarlo import sample_gamma_gamma, sample_pointing

    n = 200_000
    turb = sample_gamma_gamma(rng, link.alpha, link.beta, n)
    point = sample_pointing(rng, link.pointing, n)
    gain = turb * point
    snr = link.delta * gain ** link.kappa
    assert np.mean(snr / gain ** link.kappa) == pytest.approx(link.delta, rel=1e-12)
    assert np.mean(snr) == pytest.approx(
        link.delta * np.mean(turb ** 2) * np.mean(point ** 2), rel=0.05
    )


# --------------------------------------------------------------------------
# FSO distribution
# --------------------------------------------------------------------------


def _fso_draw(draw) -> FsoLinkParams:
    alpha = draw(st.floats(1.5, 12.0))
    beta = draw(st.floats(0.6, alpha))
    eps = draw(st.floats(0.02, 0.2))
    return FsoLinkParams(
        turbulence=(alpha, beta),
        detector=draw(st.sampled_from([1, 2])),
        pointing=PointingGeometry(0.2, 0.4, eps),
        power=draw(st.floats(0.2, 5.0)),
    )


def test_fso_cdf_bounds():
    link = FsoLinkParams()
    assert ch.fso_snr_dist(0.0, link) == 0.0
    assert ch.fso_snr_dist(math.inf, link) == 1.0
    assert ch.fso_snr_dist(1e6 * link.delta, link) == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=100)
@given(data=st.data())
def test_fso_cdf_is_monotone(data):
    link = _fso_draw(data.draw)
    grid = link.delta * np.logspace(-6, 4, 1000)
    values = np.array([ch.fso_snr_dist(g, link) for g in grid])
    assert np.all((values >= 0) & (values <= 1))
    assert np.all(np.diff(values) >= -1e-12 * values[1:])


@settings(max_examples=100)
@given(data=st.data())
def test_fso_pdf_integrates_to_one(data):
    link = _fso_draw(data.draw)
    # integrate in log-SNR, where the density is smooth and compact
    f = lambda u: ch.fso_snr_dist(link.delta * math.exp(u), link, "pdf") * link.delta * math.exp(u)
    total = integrate.quad(f, -60, 25, epsabs=0, epsrel=1e-10, limit=400)[0]
    assert total == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("rel_snr", [1e-4, 1e-2, 0.3, 1.0, 3.0, 30.0])
def test_fso_pdf_is_the_cdf_derivative(rel_snr):
    link = FsoLinkParams()
    g = rel_snr * link.delta
    h = 1e-5 * g
    slope = (ch.fso_snr_dist(g + h, link) - ch.fso_snr_dist(g - h, link)) / (2 * h)
    assert ch.fso_snr_dist(g, link, "pdf") == pytest.approx(slope, rel=1e-5)


@settings(max_examples=20)
@given(data=st.data())
def test_fso_cdf_backends_agree(data):
    link = _fso_draw(data.draw)
    for g in link.delta * np.logspace(-5, 2, 8):
        closed = ch.fso_snr_dist(g, link)
        if closed < 1e-12:
            continue
        assert ch.fso_snr_dist(g, link, backend="quadrature") == pytest.approx(closed, rel=1e-6)


@pytest.mark.slow
def test_fso_cdf_matches_sampling():
    link = FsoLinkParams()
    n = 10_000_000
    gen = RngStream(2024, 1).generator()
    hits = 0
    for _ in range(10):
        hits += int(np.count_nonzero(sample_fso_snr(gen, link, n // 10) < link.delta))
    p = ch.fso_snr_dist(link.delta, link)
    assert abs(hits / n - p) < 3 * math.sqrt(p * (1 - p) / n)


def test_fso_asymptote_converges_with_snr():
    base = FsoLinkParams()
    errors = []
    for scale_db in (60, 70, 80, 90):
        link = ch.with_noise(base, 10 ** (-scale_db / 10))
        exact = ch.fso_snr_dist(1.0, link)
        assert exact <= 1e-4
        errors.append(abs(ch.fso_snr_dist(1.0, link, "cdf_asymptotic") / exact - 1))
    assert errors[-1] < 0.05
    assert all(b < a for a, b in zip(errors, errors[1:]))


def test_fso_boresight_has_no_closed_form():
    link = FsoLinkParams(pointing=PointingGeometry(0.2, 0.4, 0.05, boresight=(0.01, 0.0)))
    with pytest.raises(ch.ClosedFormUnsupportedError):
        ch.fso_snr_dist(1.0, link)


def test_gamma_gamma_pdf_normalised():
    total = integrate.quad(lambda x: ch.gamma_gamma_pdf(x, 4.3, 2.5), 0, np.inf, epsrel=1e-12)[0]
    assert total == pytest.approx(1.0, abs=1e-9)


# --------------------------------------------------------------------------
# THz link
# --------------------------------------------------------------------------


def test_friis_spreading_at_the_default_carrier():
    link = ThzLinkParams()
    assert link.h_l == pytest.approx(0.3169814749161244, rel=1e-12)
    assert link.h_l == pytest.approx(0.317, abs=5e-4)


def test_pathloss_doubling_law():
    absorption = AbsorptionModel(k_abs=1e-3)
    d = 150.0
    h1 = ch.thz_pathloss(119e9, d, 55, 55, absorption)
    h2 = ch.thz_pathloss(119e9, 2 * d, 55, 55, absorption)
    assert h2 / h1 == pytest.approx(0.5 * math.exp(-0.5 * d * 1e-3), rel=1e-12)


def test_zero_absorption_is_friis():
    h = ch.thz_pathloss(300e9, 80.0, 40, 40, AbsorptionModel(k_abs=0.0))
    assert h == pytest.approx(ch.C_LIGHT * 1e4 / (4 * math.pi * 300e9 * 80.0), rel=1e-12)


def _thz_draw(draw) -> ThzLinkParams:
    return ThzLinkParams(
        alpha=draw(st.floats(1.0, 4.0)),
        mu=draw(st.floats(0.5, 4.0)),
        n_rx=draw(st.integers(1, 4)),
        omega=draw(st.floats(0.5, 2.0)),
        pointing=PointingGeometry(draw(st.floats(0.05, 0.3)), 0.5, draw(st.floats(0.03, 0.2))),
    )


@settings(max_examples=100)
@given(data=st.data())
def test_thz_cdf_is_monotone(data):
    link = _thz_draw(data.draw)
    grid = link.gamma_hat * np.logspace(-6, 4, 1000)
    values = np.array([ch.thz_snr_dist(g, link) for g in grid])
    assert np.all((values >= 0) & (values <= 1))
    assert np.all(np.diff(values) >= -1e-12 * values[1:])


@settings(max_examples=30)
@given(data=st.data())
def test_thz_cdf_forms_agree(data):
    link = _thz_draw(data.draw)
    for g in link.gamma_hat * np.logspace(-3, 1.5, 6):
        closed = ch.thz_snr_dist(g, link)
        if closed < 1e-250:
            continue
        assert ch.thz_snr_dist(g, link, "cdf_meijer") == pytest.approx(closed, rel=1e-8)


@settings(max_examples=30)
@given(data=st.data())
def test_thz_pdf_integrates_to_one(data):
    link = _thz_draw(data.draw)
    f = lambda u: ch.thz_snr_dist(link.gamma_hat * math.exp(u), link, "pdf") * link.gamma_hat * math.exp(u)
    total = integrate.quad(f, -80, 15, epsabs=0, epsrel=1e-10, limit=400)[0]
    assert total == pytest.approx(1.0, abs=1e-6)


def test_thz_cdf_at_zero():
    assert ch.thz_snr_dist(0.0, ThzLinkParams()) == 0.0


def _exponential_gap(eps):
    p = PointingGeometry(0.2, 0.5, eps)
    link = ThzLinkParams(alpha=2.0, mu=1.0, n_rx=1, pointing=p)
    gaps = []
    for t in (1e-5, 0.01, 0.3, 1.0, 4.0):
        g = t * link.gamma_hat
        # with no jitter the gain is A0 and the SNR is exponential with mean gamma_bar A0^2
        expected = -math.expm1(-g / (link.gamma_bar * p.a0 ** 2))
        gaps.append(abs(ch.thz_snr_dist(g, link) / expected - 1))
    return max(gaps)


def test_thz_reduces_to_exponential_without_misalignment():
    gaps = [_exponential_gap(eps) for eps in (1e-2, 1e-3, 1e-4)]
    assert gaps[-1] < 1e-6
    # the gap closes as 1/xi^2
    assert gaps[0] / gaps[1] == pytest.approx(100, rel=0.2)
    assert gaps[1] / gaps[2] == pytest.approx(100, rel=0.2)


@pytest.mark.slow
def test_thz_cdf_matches_sampling():
    link = ThzLinkParams()
    n = 10_000_000
    gen = RngStream(2024, 2).generator()
    hits = 0
    # mean SNR is about gamma_hat A0^2, so test below it where the cdf is mid-range
    g = 0.05 * link.gamma_hat
    for _ in range(10):
        hits += int(np.count_nonzero(sample_thz_snr(gen, link, n // 10) < g))
    p = ch.thz_snr_dist(g, link)
    assert 0.01 < p < 0.99
    assert abs(hits / n - p) < 3 * math.sqrt(p * (1 - p) / n)


def test_thz_asymptote_converges_with_snr():
    base = ThzLinkParams()
    errors = []
    for scale_db in (30, 40, 50, 60):
        link = ch.with_noise(base, 10 ** (-scale_db / 10))
        exact = ch.thz_snr_dist(1.0, link)
        assert exact <= 1e-4
        errors.append(abs(ch.thz_snr_dist(1.0, link, "cdf_asymptotic") / exact - 1))
    assert errors[-1] < 1e-3
    assert all(b < a for a, b in zip(errors, errors[1:]))


def test_thz_default_pointing_parameters():
    link = ThzLinkParams()
    assert link.a0 == pytest.approx(0.33163, abs=1e-4)
    assert link.xi == pytest.approx(4.64509, abs=1e-4)


def test_integer_pole_in_incomplete_gamma_order_is_continuous():
    # choose jitter so that (alpha*N*mu - xi^2)/alpha lands on -4
    base = ThzLinkParams()
    xi_target = math.sqrt(2 * (6 + 4))
    eps = base.pointing.w_eq / (2 * xi_target)
    on = ThzLinkParams(pointing=PointingGeometry(base.pointing.aperture_radius, 0.5, eps))
    near = ThzLinkParams(pointing=PointingGeometry(base.pointing.aperture_radius, 0.5, eps * (1 + 1e-7)))
    g = 0.5 * on.gamma_hat
    assert ch.thz_snr_dist(g, on) == pytest.approx(ch.thz_snr_dist(g, near), rel=1e-5)


# --------------------------------------------------------------------------
# absorption
# --------------------------------------------------------------------------


def test_absorption_table_parsing(tmp_path):
    path = tmp_path / "abs.csv"
    path.write_text("# centre, degree, coefficients\n119.0, 1, 0.001, 0.02\n\n300, 0, 0.5  # trailing\n", encoding="utf-8")
    rows = ch.load_absorption_table(path)
    assert rows == ((119.0, (0.001, 0.02)), (300.0, (0.5,)))
    model = AbsorptionModel.from_file(path)
    assert model.coefficient(119.2e9) == pytest.approx(0.001 + 0.02 * model.water_vapour)
    assert model.coefficient(300e9) == 0.5


@pytest.mark.parametrize("line", ["119, 2, 0.1, 0.2\n", "abc, 1, 0, 1\n", "119\n"])
def test_malformed_absorption_rows_report_the_line(tmp_path, line):
    path = tmp_path / "abs.csv"
    path.write_text("# header\n" + line, encoding="utf-8")
    with pytest.raises(ValueError, match=r"abs\.csv:2"):
        ch.load_absorption_table(path)


def test_uncovered_frequency_is_an_explicit_error(tmp_path):
    path = tmp_path / "abs.csv"
    path.write_text("119, 0, 0.01\n", encoding="utf-8")
    model = AbsorptionModel.from_file(path)
    with pytest.raises(ch.UnresolvedAbsorptionError):
        ThzLinkParams(frequency=240e9, absorption=model)


def test_shipped_placeholder_table_loads():
    from backhaul_lab import PLACEHOLDER_ABSORPTION_TABLE

    assert len(ch.load_absorption_table(PLACEHOLDER_ABSORPTION_TABLE)) > 0


def test_humidity_raises_water_vapour():
    assert AbsorptionModel(humidity=80).water_vapour > AbsorptionModel(humidity=20).water_vapour


# --------------------------------------------------------------------------
# access link
# --------------------------------------------------------------------------


def test_access_pathloss_budget():
    link = AccessLinkParams()
    assert 10 * math.log10(link.p_l) == pytest.approx(-14.900943848727758, abs=1e-9)
    far = AccessLinkParams(length=200.0)
    extra = 10 * math.log10(link.p_l / far.p_l)
    assert extra == pytest.approx(20 * math.log10(2) + 15.1 * 0.1, rel=1e-12)


def test_oxygen_term_at_one_kilometre():
    with_ox = AccessLinkParams(length=1000.0)
    without = AccessLinkParams(length=1000.0, oxygen_db_per_km=0.0)
    assert 10 * math.log10(without.p_l / with_ox.p_l) == pytest.approx(15.1, rel=1e-12)


def test_access_exponential_case():
    link = AccessLinkParams(m=1.0, n_tx=1)
    for t in (0.01, 1.0, 5.0):
        assert ch.access_snr_cdf(t * link.gamma_bar, link) == pytest.approx(-math.expm1(-t), rel=1e-12)
    assert ch.access_snr_cdf(0.0, link) == 0.0


def test_access_cdf_small_argument():
    link = AccessLinkParams()
    # m=2, N_t=3 at gamma/gamma_bar = 0.1 is P(6, 0.2): 1 - e^-0.2 sum_{k<6} 0.2^k/k!
    series = -math.expm1(-0.2) - math.exp(-0.2) * sum(0.2 ** k / math.factorial(k) for k in range(1, 6))
    value = ch.access_snr_cdf(0.1 * link.gamma_bar, link)
    assert value == pytest.approx(7.49085447498689e-08, rel=1e-9)
    assert value == pytest.approx(series, rel=1e-6)


@settings(max_examples=100)
@given(st.floats(0.5, 6.0), st.integers(1, 6))
def test_access_cdf_is_monotone(m, n_tx):
    link = AccessLinkParams(m=m, n_tx=n_tx)
    values = np.array([ch.access_snr_cdf(g, link) for g in link.gamma_bar * np.logspace(-6, 3, 1000)])
    assert np.all((values >= 0) & (values <= 1))
    assert np.all(np.diff(values) >= 0)


def test_access_pdf_integrates_to_one():
    link = AccessLinkParams(m=1.5, n_tx=2)
    total = integrate.quad(lambda g: ch.access_snr_pdf(g, link), 0, np.inf, epsrel=1e-12)[0]
    assert total == pytest.approx(1.0, abs=1e-6)


def test_access_rejects_low_fading_severity():
    with pytest.raises(ValueError):
        AccessLinkParams(m=0.3)


# --------------------------------------------------------------------------
# diversity
# --------------------------------------------------------------------------


def test_fso_diversity_is_turbulence_limited():
    link = FsoLinkParams()
    assert ch.link_diversity(link) == pytest.approx(link.beta / 2)
    assert ch.link_diversity(link) == pytest.approx(1.246, abs=1e-3)


def test_heterodyne_doubles_fso_diversity():
    assert ch.link_diversity(FsoLinkParams(detector=1)) == pytest.approx(2 * ch.link_diversity(FsoLinkParams()))


def test_thz_diversity_is_fading_limited():
    link = ThzLinkParams()
    assert link.xi ** 2 / 2 == pytest.approx(10.8, abs=0.05)
    assert ch.link_diversity(link) == 6.0


def test_links_are_immutable():
    link = FsoLinkParams()
    with pytest.raises(Exception):
        link.power = 2.0
    louder = ch.with_power(link, 4.0)
    assert louder.delta == pytest.approx(16 * link.delta)


def test_special_function_sanity():
    assert special.gammainc(6, 0.2) == pytest.approx(7.49085447498689e-08, rel=1e-9)
