"""Physical link parameters and SNR distributions for the three link types.

FSO backhaul: Gamma-Gamma turbulence times zero-boresight pointing loss.
THz backhaul: alpha-mu fading with N_r-branch MRC and misalignment loss.
mmWave access: Gamma-distributed channel power (Nakagami-m, MRT).

Links are frozen dataclasses; every derived quantity (turbulence shape,
attenuation, SNR scale, closed-form coefficients) is computed once at
construction.  Use :func:`dataclasses.replace` to vary a parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate, special

from . import specfun
from .specfun import MeijerGSpec

C_LIGHT = 299_792_458.0

__all__ = [
    "AbsorptionModel",
    "AccessLinkParams",
    "ClosedFormUnsupportedError",
    "FsoCoefficients",
    "FsoLinkParams",
    "PointingGeometry",
    "ThzCoefficients",
    "ThzLinkParams",
    "UnresolvedAbsorptionError",
    "access_pathloss",
    "access_snr_cdf",
    "access_snr_pdf",
    "db_to_linear",
    "derive_pointing",
    "fso_attenuation",
    "fso_snr_dist",
    "fso_snr_scale",
    "fso_turbulence_params",
    "gamma_gamma_pdf",
    "link_diversity",
    "load_absorption_table",
    "thz_pathloss",
    "thz_snr_dist",
    "visibility_exponent",
]


class ClosedFormUnsupportedError(ValueError):
    """The requested closed form does not cover these parameters (e.g. boresight)."""


class UnresolvedAbsorptionError(LookupError):
    """The absorption table has no rows for the requested frequency."""


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


# --------------------------------------------------------------------------
# Pointing error
# --------------------------------------------------------------------------


def derive_pointing(a: float, w: float, eps: float) -> tuple[float, float, float, float]:
    """Return (v0, A0, w_eq, xi) for aperture radius a, beamwidth w, jitter eps."""
    if not (a > 0 and w > 0 and eps > 0):
        raise ValueError(f"pointing geometry needs positive a, w, eps; got {a}, {w}, {eps}")
    v0 = math.sqrt(math.pi * a * a / (2.0 * w * w))
    a0 = math.erf(v0) ** 2
    log_w_eq2 = 0.5 * math.log(math.pi * a0) + 2.0 * math.log(w) - math.log(2.0 * v0) + v0 * v0
    if log_w_eq2 > 1400:
        raise ValueError(f"aperture radius {a} is too large for beamwidth {w}: equivalent beamwidth overflows")
    w_eq = math.exp(0.5 * log_w_eq2)
    return v0, a0, w_eq, w_eq / (2.0 * eps)


@dataclass(frozen=True)
class PointingGeometry:
    """Receiver aperture, Gaussian beam and jitter for one link end (metres)."""

    aperture_radius: float
    beamwidth: float
    jitter_std: float
    boresight: tuple[float, float] = (0.0, 0.0)
    v0: float = field(init=False)
    a0: float = field(init=False)
    w_eq: float = field(init=False)
    xi: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "boresight", tuple(float(v) for v in self.boresight))
        v0, a0, w_eq, xi = derive_pointing(self.aperture_radius, self.beamwidth, self.jitter_std)
        object.__setattr__(self, "v0", v0)
        object.__setattr__(self, "a0", a0)
        object.__setattr__(self, "w_eq", w_eq)
        object.__setattr__(self, "xi", xi)

    @property
    def has_boresight(self) -> bool:
        return any(v != 0.0 for v in self.boresight)


# --------------------------------------------------------------------------
# FSO link
# --------------------------------------------------------------------------


def fso_turbulence_params(cn2: float, wavelength: float, length: float) -> tuple[float, float]:
    """Gamma-Gamma shapes (alpha, beta) for plane-wave propagation.

    The Rytov variance uses the plane-wave k^(7/6) scaling.
    """
    if cn2 < 0 or wavelength <= 0 or length <= 0:
        raise ValueError("cn2 must be >= 0 and wavelength, length > 0")
    k0 = 2.0 * math.pi / wavelength
    rytov = 1.23 * cn2 * k0 ** (7.0 / 6.0) * length ** (11.0 / 6.0)
    if rytov == 0.0:
        return math.inf, math.inf
    s125 = rytov ** (6.0 / 5.0)
    alpha = 1.0 / math.expm1(0.49 * rytov / (1.0 + 1.11 * s125) ** (7.0 / 6.0))
    beta = 1.0 / math.expm1(0.51 * rytov / (1.0 + 0.69 * s125) ** (5.0 / 6.0))
    return alpha, beta


def visibility_exponent(visibility_km: float) -> float:
    """Kruse size-distribution exponent q(Vi)."""
    if visibility_km <= 0:
        raise ValueError("visibility must be positive")
    if visibility_km < 6.0:
        return 0.585 * visibility_km ** (1.0 / 3.0)
    if visibility_km <= 50.0:
        return 1.3
    return 1.6


def fso_attenuation(visibility_km: float, wavelength: float, length: float, kruse_sign: int = -1) -> float:
    """Beer-Lambert power fraction exp(-C_A L) with the Kruse coefficient.

    ``kruse_sign=-1`` is the physical model (longer wavelengths attenuate
    less); ``+1`` flips the sign of the exponent.
    """
    if kruse_sign not in (-1, 1):
        raise ValueError("kruse_sign must be -1 or +1")
    q = visibility_exponent(visibility_km)
    coeff_per_km = 3.912 / visibility_km * (wavelength * 1e9 / 550.0) ** (kruse_sign * q)
    return math.exp(-coeff_per_km * length / 1000.0)


def fso_snr_scale(power: float, eta: float, i_l: float, noise_var: float, kappa: int) -> float:
    """delta_kappa = (P eta I_l)^kappa / sigma^2, so that gamma_F = delta * I^kappa."""
    if kappa not in (1, 2):
        raise ValueError("detector kappa must be 1 (heterodyne) or 2 (IM/DD)")
    return (power * eta * i_l) ** kappa / noise_var


@dataclass(frozen=True)
class FsoCoefficients:
    """Constants of the Meijer-G CDF: F(g) = d1 * G[g * scale | 1, psi1; psi2, 0]."""

    d1: float
    d2: float
    psi1: tuple[float, ...]
    psi2: tuple[float, ...]
    scale: float

    def cdf_spec(self, last_bottom: float = 0.0) -> MeijerGSpec:
        return MeijerGSpec.of([1.0], self.psi1, self.psi2, [last_bottom])


@dataclass(frozen=True)
class FsoLinkParams:
    wavelength: float = 1550e-9
    length: float = 200.0
    cn2: float = 1e-12
    visibility_km: float = 10.0
    detector: int = 2
    eta: float = 1.0
    power: float = 1.0
    noise_var: float = 1.0
    pointing: PointingGeometry = field(default_factory=lambda: PointingGeometry(0.20, 0.40, 0.05))
    kruse_sign: int = -1
    # explicit (alpha, beta) overrides the Rytov-derived pair
    turbulence: tuple[float, float] | None = None
    alpha: float = field(init=False)
    beta: float = field(init=False)
    i_l: float = field(init=False)
    delta: float = field(init=False)
    coeffs: FsoCoefficients = field(init=False, repr=False)

    def __post_init__(self):
        if self.detector not in (1, 2):
            raise ValueError("detector must be 1 (heterodyne) or 2 (IM/DD)")
        for name in ("wavelength", "length", "eta", "power", "noise_var"):
            if not getattr(self, name) > 0:
                raise ValueError(f"FSO {name} must be positive")
        if self.turbulence is not None:
            alpha, beta = (float(v) for v in self.turbulence)
        else:
            alpha, beta = fso_turbulence_params(self.cn2, self.wavelength, self.length)
        i_l = fso_attenuation(self.visibility_km, self.wavelength, self.length, self.kruse_sign)
        delta = fso_snr_scale(self.power, self.eta, i_l, self.noise_var, self.detector)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "i_l", i_l)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "coeffs", _fso_coefficients(self))

    @property
    def kappa(self) -> int:
        return self.detector

    @property
    def xi(self) -> float:
        return self.pointing.xi

    @property
    def a0(self) -> float:
        return self.pointing.a0


def _fso_coefficients(link: FsoLinkParams) -> FsoCoefficients:
    k, a, b, xi2 = link.kappa, link.alpha, link.beta, link.xi ** 2
    if math.isinf(a) or math.isinf(b):
        return FsoCoefficients(math.nan, math.nan, (), (), math.nan)
    log_d1 = (a + b - 2) * math.log(k) + math.log(xi2) - (k - 1) * math.log(2 * math.pi)
    log_d1 -= special.gammaln(a) + special.gammaln(b)
    d2 = (a * b) ** k / k ** (2 * k)
    psi1 = tuple((xi2 + i) / k for i in range(1, k + 1))
    psi2 = tuple((v + i) / k for v in (xi2, a, b) for i in range(k))
    scale = d2 / (link.a0 ** k * link.delta)
    return FsoCoefficients(math.exp(log_d1), d2, psi1, psi2, scale)


def gamma_gamma_pdf(x: float, alpha: float, beta: float) -> float:
    """Unit-mean Gamma-Gamma irradiance density."""
    if x <= 0 or math.isinf(x):
        return 0.0
    s = 2.0 * math.sqrt(alpha * beta * x)
    k = special.kve(alpha - beta, s)
    if not k > 0:
        return 0.0
    log_f = (
        math.log(2.0)
        + 0.5 * (alpha + beta) * math.log(alpha * beta)
        - special.gammaln(alpha)
        - special.gammaln(beta)
        + (0.5 * (alpha + beta) - 1.0) * math.log(x)
        + math.log(k)
        - s
    )
    return math.exp(log_f)


def _require_closed_form(link) -> None:
    if link.pointing.has_boresight:
        raise ClosedFormUnsupportedError("nonzero boresight has no closed form; use the Monte Carlo engine")


def _fso_pdf(g: float, link: FsoLinkParams) -> float:
    if g <= 0:
        return 0.0
    k, a, b, xi2 = link.kappa, link.alpha, link.beta, link.xi ** 2
    z = a * b / link.a0 * (g / link.delta) ** (1.0 / k)
    log_pref = math.log(xi2 / (k * g)) - special.gammaln(a) - special.gammaln(b)
    return specfun.meijer_g(MeijerGSpec.of([], [xi2 + 1.0], [xi2, a, b], []), z, log_scale=log_pref)


def _fso_cdf_meijer(g: float, link: FsoLinkParams) -> float:
    if g <= 0:
        return 0.0
    c = link.coeffs
    return min(1.0, c.d1 * specfun.meijer_g(c.cdf_spec(), c.scale * g))


def _fso_cdf_quadrature(g: float, link: FsoLinkParams) -> float:
    if g <= 0:
        return 0.0
    i0 = (g / link.delta) ** (1.0 / link.kappa)
    a, b, xi2, a0 = link.alpha, link.beta, link.xi ** 2, link.a0
    split = i0 / a0

    def below(v):
        x = math.exp(v)
        return gamma_gamma_pdf(x, a, b) * x

    def above(u):
        # x = split * e^u: the pointing factor becomes e^(-xi^2 u)
        x = split * math.exp(u)
        return gamma_gamma_pdf(x, a, b) * x * math.exp(-xi2 * u)

    opts = dict(epsabs=0.0, epsrel=1e-12, limit=500)
    # turbulence mass below i0/A0 is fully in outage
    # in log coordinates; below x = e^-30 the density behaves as x^(beta-1)
    v_split = math.log(split)
    v0 = min(v_split, -30.0)
    head = integrate.quad(lambda x: gamma_gamma_pdf(x, a, b), 0.0, math.exp(v0), **opts)[0]
    cuts = sorted({v0, v_split, min(max(v0, 0.0), v_split)})
    head += sum(integrate.quad(below, lo, hi, **opts)[0] for lo, hi in zip(cuts, cuts[1:]))
    # break the tail at the pointing decay and at the turbulence scale x ~ 1
    edges = {0.0, 40.0 / xi2}
    if split < 1.0:
        edges.update({-math.log(split), -math.log(split) + 5.0})
    edges = sorted(edges)
    tail = sum(integrate.quad(above, lo, hi, **opts)[0] for lo, hi in zip(edges, edges[1:]))
    # Gamma-Gamma mass beyond x = e^12 is below exp(-2 sqrt(alpha beta) e^6)
    tail += integrate.quad(above, edges[-1], max(edges[-1], -math.log(split)) + 12.0, **opts)[0]
    return min(1.0, head + tail)


def _fso_cdf_asymptotic(g: float, link: FsoLinkParams) -> float:
    if g <= 0:
        return 0.0
    c = link.coeffs
    return c.d1 * specfun.meijer_g_leading(c.cdf_spec(), c.scale * g)


def fso_pdf_asymptotic_terms(link: FsoLinkParams) -> list[tuple[float, float]]:
    """High-SNR density as (coefficient, exponent) pairs: f(g) ~ sum c * g^(s - 1)."""
    k, a, b, xi2 = link.kappa, link.alpha, link.beta, link.xi ** 2
    bottoms = list(specfun.separate_poles([xi2, a, b]))
    top = xi2 + 1.0
    base = math.log(xi2 / k) - special.gammaln(a) - special.gammaln(b)
    log_scale = math.log(a * b / link.a0) - math.log(link.delta) / k
    terms = []
    for j, bj in enumerate(bottoms):
        coef = float(special.rgamma(top - bj))
        for i, bi in enumerate(bottoms):
            if i != j:
                coef *= float(special.gamma(bi - bj))
        if coef == 0.0:
            continue
        terms.append((coef * math.exp(base + bj * log_scale), bj / k))
    return terms


def fso_pdf_asymptotic(g: float, link: FsoLinkParams) -> float:
    """High-SNR expansion of the FSO SNR density (three power-law terms)."""
    if g <= 0:
        return 0.0
    return sum(c * g ** (s - 1.0) for c, s in fso_pdf_asymptotic_terms(link))


def fso_snr_dist(g: float, link: FsoLinkParams, kind: str = "cdf", backend: str = "meijer") -> float:
    """FSO SNR pdf / cdf / high-SNR cdf at g.

    ``backend`` selects the cdf route: ``"meijer"`` (closed form) or
    ``"quadrature"`` (turbulence integral against the pointing power law).
    """
    _require_closed_form(link)
    if g < 0:
        raise ValueError("SNR must be non-negative")
    if math.isinf(g):
        return 0.0 if kind == "pdf" else 1.0
    if kind == "pdf":
        return _fso_pdf(g, link)
    if kind == "cdf":
        if backend == "meijer":
            return _fso_cdf_meijer(g, link)
        if backend == "quadrature":
            return _fso_cdf_quadrature(g, link)
        raise ValueError(f"unknown backend {backend!r}")
    if kind == "cdf_asymptotic":
        return _fso_cdf_asymptotic(g, link)
    if kind == "pdf_asymptotic":
        return fso_pdf_asymptotic(g, link)
    raise ValueError(f"unknown kind {kind!r}")


# --------------------------------------------------------------------------
# THz link
# --------------------------------------------------------------------------


def _water_vapour_ratio(pressure: float, temperature: float, humidity: float) -> float:
    # Buck saturation pressure (hPa) with enhancement factor; humidity in %.
    t_c = temperature - 273.15
    p_hpa = pressure / 100.0
    p_sat = (1.0007 + 3.46e-6 * p_hpa) * 6.1121 * math.exp((18.678 - t_c / 234.5) * (t_c / (257.14 + t_c)))
    return humidity / 100.0 * p_sat / p_hpa


@dataclass(frozen=True)
class AbsorptionModel:
    """Molecular absorption coefficient k_abs (1/m) at a THz carrier.

    ``mode="direct"`` uses ``k_abs`` as given.  ``mode="polynomial"`` sums
    the table rows whose centre frequency lies within ``band_ghz`` of the
    carrier, each row a polynomial in the water-vapour ratio derived from
    pressure (Pa), temperature (K) and relative humidity (%).
    """

    mode: str = "direct"
    k_abs: float = 0.0
    rows: tuple[tuple[float, tuple[float, ...]], ...] = ()
    pressure: float = 101325.0
    temperature: float = 298.0
    humidity: float = 50.0
    band_ghz: float = 0.5

    def __post_init__(self):
        if self.mode not in ("direct", "polynomial"):
            raise ValueError(f"absorption mode must be 'direct' or 'polynomial', got {self.mode!r}")
        if self.mode == "direct" and self.k_abs < 0:
            raise ValueError("k_abs must be non-negative")

    @classmethod
    def from_file(cls, path: str | Path, **env) -> "AbsorptionModel":
        return cls(mode="polynomial", rows=load_absorption_table(path), **env)

    @property
    def water_vapour(self) -> float:
        return _water_vapour_ratio(self.pressure, self.temperature, self.humidity)

    def coefficient(self, frequency: float) -> float:
        if self.mode == "direct":
            return self.k_abs
        f_ghz = frequency / 1e9
        hits = [coeffs for centre, coeffs in self.rows if abs(centre - f_ghz) <= self.band_ghz]
        if not hits:
            raise UnresolvedAbsorptionError(f"no absorption rows cover {f_ghz:g} GHz")
        nu = self.water_vapour
        total = sum(float(np.polynomial.polynomial.polyval(nu, c)) for c in hits)
        if total < 0:
            raise ValueError(f"absorption table gives negative k_abs at {f_ghz:g} GHz")
        return total


def load_absorption_table(path: str | Path) -> tuple[tuple[float, tuple[float, ...]], ...]:
    """Parse ``f_center_ghz, degree, c0, ..., c_degree`` rows; ``#`` starts a comment."""
    rows = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        try:
            centre, degree = float(fields[0]), int(fields[1])
            coeffs = tuple(float(v) for v in fields[2:])
        except (IndexError, ValueError) as exc:
            raise ValueError(f"{path}:{lineno}: malformed absorption row: {raw!r}") from exc
        if len(coeffs) != degree + 1:
            raise ValueError(f"{path}:{lineno}: degree {degree} needs {degree + 1} coefficients, got {len(coeffs)}")
        rows.append((centre, coeffs))
    return tuple(rows)


def thz_pathloss(frequency: float, length: float, gt_dbi: float, gr_dbi: float, absorption: AbsorptionModel) -> float:
    """Amplitude path gain h_l: Friis spreading times exp(-k_abs d / 2)."""
    if frequency <= 0 or length <= 0:
        raise ValueError("frequency and length must be positive")
    spread = C_LIGHT * math.sqrt(db_to_linear(gt_dbi) * db_to_linear(gr_dbi)) / (4 * math.pi * frequency * length)
    return spread * math.exp(-0.5 * length * absorption.coefficient(frequency))


def thz_default_pointing(frequency: float, gt_dbi: float, beamwidth: float = 0.5, jitter: float = 0.06) -> PointingGeometry:
    """Aperture lambda/(2 pi) sqrt(G_t) with the default beam and jitter."""
    radius = C_LIGHT / frequency / (2 * math.pi) * math.sqrt(db_to_linear(gt_dbi))
    return PointingGeometry(radius, beamwidth, jitter)


@dataclass(frozen=True)
class ThzCoefficients:
    log_c1: float
    c2: float
    c3: float
    order: float  # N_r * mu


@dataclass(frozen=True)
class ThzLinkParams:
    frequency: float = 119e9
    length: float = 200.0
    gt_dbi: float = 55.0
    gr_dbi: float = 55.0
    alpha: float = 2.0
    mu: float = 3.0
    n_rx: int = 2
    omega: float = 1.0
    absorption: AbsorptionModel = field(default_factory=AbsorptionModel)
    pointing: PointingGeometry | None = None
    power: float = 1.0
    noise_var: float = 1.0
    h_l: float = field(init=False)
    gamma_bar: float = field(init=False)
    gamma_hat: float = field(init=False)
    coeffs: ThzCoefficients = field(init=False, repr=False)

    def __post_init__(self):
        if not (self.alpha > 0 and self.mu > 0 and self.omega > 0):
            raise ValueError("alpha, mu and omega must be positive")
        if int(self.n_rx) != self.n_rx or self.n_rx < 1:
            raise ValueError("n_rx must be a positive integer")
        if not (self.power > 0 and self.noise_var > 0):
            raise ValueError("power and noise_var must be positive")
        if self.pointing is None:
            object.__setattr__(self, "pointing", thz_default_pointing(self.frequency, self.gt_dbi))
        h_l = thz_pathloss(self.frequency, self.length, self.gt_dbi, self.gr_dbi, self.absorption)
        gamma_bar = self.power * h_l ** 2 / self.noise_var
        object.__setattr__(self, "h_l", h_l)
        object.__setattr__(self, "gamma_bar", gamma_bar)
        object.__setattr__(self, "gamma_hat", self.n_rx * gamma_bar)
        object.__setattr__(self, "coeffs", _thz_coefficients(self))

    @property
    def xi(self) -> float:
        return self.pointing.xi

    @property
    def a0(self) -> float:
        return self.pointing.a0


def _thz_coefficients(link: ThzLinkParams) -> ThzCoefficients:
    al, order, om, a0 = link.alpha, link.n_rx * link.mu, link.omega, link.a0
    xi2 = link.xi ** 2
    c2 = (al * order - xi2) / al
    if c2 <= 0 and abs(c2 - round(c2)) < 1e-9:
        # Gamma(c2) has a pole here; the cdf is continuous, shift off it
        c2 += 1e-9
        xi2 = al * (order - c2)
    log_c1 = math.log(xi2) - xi2 * math.log(a0) + xi2 / al * math.log(order) - xi2 * math.log(om) - special.gammaln(order)
    c3 = order / (a0 * om) ** al
    return ThzCoefficients(log_c1, c2, c3, order)


def _thz_parts(g: float, link: ThzLinkParams):
    c = link.coeffs
    xi2 = link.alpha * (c.order - c.c2)
    t = g / link.gamma_hat
    x = c.c3 * t ** (link.alpha / 2.0)
    return c, xi2, t, x


def _thz_cdf(g: float, link: ThzLinkParams) -> float:
    if g <= 0:
        return 0.0
    c, xi2, t, x = _thz_parts(g, link)
    lower = float(special.gammainc(c.order, x))
    head = math.exp(c.log_c1 - math.log(xi2) + 0.5 * xi2 * math.log(t) + specfun.log_upper_gamma(c.c2, x))
    return min(1.0, head + lower)


def _thz_pdf(g: float, link: ThzLinkParams) -> float:
    if g <= 0:
        return 0.0
    c, xi2, t, x = _thz_parts(g, link)
    return math.exp(c.log_c1 - math.log(2.0 * g) + 0.5 * xi2 * math.log(t) + specfun.log_upper_gamma(c.c2, x))


def _thz_cdf_meijer(g: float, link: ThzLinkParams) -> float:
    if g <= 0:
        return 0.0
    c, xi2, t, x = _thz_parts(g, link)
    r = xi2 / link.alpha
    spec = MeijerGSpec.of([1.0 - r], [1.0], [0.0, c.c2], [-r])
    log_pref = c.log_c1 - math.log(link.alpha) + 0.5 * xi2 * math.log(t)
    return min(1.0, specfun.meijer_g(spec, x, log_scale=log_pref))


def thz_cdf_asymptotic_terms(link: ThzLinkParams) -> tuple[tuple[float, float], tuple[float, float]]:
    """High-SNR cdf as two (coefficient, exponent) pairs in g / gamma_hat."""
    c = link.coeffs
    xi2 = link.alpha * (c.order - c.c2)
    c1 = math.exp(c.log_c1)
    am = link.alpha * c.order
    first = (c1 * special.gamma(c.c2) / xi2, xi2 / 2.0)
    second = (-c1 * c.c3 ** c.c2 / (c.c2 * am), am / 2.0)
    return first, second


def _thz_cdf_asymptotic(g: float, link: ThzLinkParams) -> float:
    if g <= 0:
        return 0.0
    t = g / link.gamma_hat
    return sum(coef * t ** power for coef, power in thz_cdf_asymptotic_terms(link))


def thz_snr_dist(g: float, link: ThzLinkParams, kind: str = "cdf") -> float:
    """THz SNR pdf / cdf (incomplete gamma) / cdf_meijer / cdf_asymptotic at g."""
    _require_closed_form(link)
    if g < 0:
        raise ValueError("SNR must be non-negative")
    if math.isinf(g):
        return 0.0 if kind == "pdf" else 1.0
    fn = {
        "pdf": _thz_pdf,
        "cdf": _thz_cdf,
        "cdf_meijer": _thz_cdf_meijer,
        "cdf_asymptotic": _thz_cdf_asymptotic,
    }.get(kind)
    if fn is None:
        raise ValueError(f"unknown kind {kind!r}")
    return fn(g, link)


# --------------------------------------------------------------------------
# mmWave access link
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AccessLinkParams:
    m: float = 2.0
    n_tx: int = 3
    omega: float = 1.0
    frequency: float = 28e9
    length: float = 100.0
    gt_dbi: float = 44.0
    gr_dbi: float = 44.0
    oxygen_db_per_km: float = 15.1
    rain_db_per_km: float = 0.0
    power: float = 1.0
    noise_var: float = 1.0
    p_l: float = field(init=False)
    gamma_bar: float = field(init=False)

    def __post_init__(self):
        if self.m < 0.5:
            raise ValueError("Nakagami m must be >= 0.5")
        if int(self.n_tx) != self.n_tx or self.n_tx < 1:
            raise ValueError("n_tx must be a positive integer")
        if not (self.length > 0 and self.power > 0 and self.noise_var > 0 and self.omega > 0):
            raise ValueError("length, power, noise_var and omega must be positive")
        p_l = access_pathloss(self)
        object.__setattr__(self, "p_l", p_l)
        object.__setattr__(self, "gamma_bar", self.omega * self.power * p_l / self.noise_var)

    @property
    def shape(self) -> float:
        return self.m * self.n_tx


def access_pathloss(link: AccessLinkParams) -> float:
    """Linear path gain from the dB budget: gains - free-space spreading - gas/rain."""
    lam = C_LIGHT / link.frequency
    db = (
        link.gt_dbi
        + link.gr_dbi
        - 20.0 * math.log10(4.0 * math.pi * link.length / lam)
        - (link.oxygen_db_per_km + link.rain_db_per_km) * link.length / 1000.0
    )
    return db_to_linear(db)


def access_snr_cdf(g: float, link: AccessLinkParams) -> float:
    if g <= 0:
        return 0.0
    return float(special.gammainc(link.shape, link.m * g / link.gamma_bar))


def access_snr_pdf(g: float, link: AccessLinkParams) -> float:
    if g <= 0:
        return 0.0
    k, rate = link.shape, link.m / link.gamma_bar
    return math.exp(k * math.log(rate) + (k - 1) * math.log(g) - rate * g - special.gammaln(k))


# --------------------------------------------------------------------------
# Diversity
# --------------------------------------------------------------------------


def link_diversity(link: FsoLinkParams | ThzLinkParams) -> float:
    """High-SNR outage slope of a single link versus its average SNR."""
    if isinstance(link, FsoLinkParams):
        k = link.kappa
        return min(link.xi ** 2 / k, link.alpha / k, link.beta / k)
    if isinstance(link, ThzLinkParams):
        return min(link.xi ** 2 / 2.0, link.alpha * link.n_rx * link.mu / 2.0)
    raise TypeError(f"no diversity order for {type(link).__name__}")


def with_power(link, power: float):
    """Copy of ``link`` with a new transmit power (derived fields recomputed)."""
    return replace(link, power=power)


def with_noise(link, noise_var: float):
    return replace(link, noise_var=noise_var)


def cdf_of(link) -> "callable":
    """Closed-form SNR cdf for any link type."""
    if isinstance(link, FsoLinkParams):
        return lambda g: fso_snr_dist(g, link, "cdf")
    if isinstance(link, ThzLinkParams):
        return lambda g: thz_snr_dist(g, link, "cdf")
    if isinstance(link, AccessLinkParams):
        return lambda g: access_snr_cdf(g, link)
    raise TypeError(type(link).__name__)
