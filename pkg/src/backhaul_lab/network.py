"""Hop, chain, end-to-end, IAB and mesh outage from the per-link distributions.

A hop carries an FSO and a THz link in parallel.  Either may be ``None``,
in which case that branch never delivers SNR (its cdf is identically 1).
Receivers either switch to the FSO link when THz fails or add the two
SNRs (combining).

System S1 stacks hybrid hops with decode-and-forward.  System S2 runs one
FSO link from the donor to the last node alongside a chain of THz hops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import integrate, special

from . import specfun
from .channels import (
    AccessLinkParams,
    ClosedFormUnsupportedError,
    FsoLinkParams,
    ThzLinkParams,
    access_snr_cdf,
    fso_pdf_asymptotic_terms,
    fso_snr_dist,
    link_diversity,
    thz_cdf_asymptotic_terms,
    thz_snr_dist,
)

MODES = ("switching", "combining")
SYSTEMS = ("S1", "S2")

SERIES_TERMS = 50
SERIES_TAIL = 1e-14
# largest tolerated max|term| / |sum| before the series is declared unreliable
SERIES_CANCELLATION = 1e6


@dataclass(frozen=True)
class HopConfig:
    fso: FsoLinkParams | None
    thz: ThzLinkParams | None
    mode: str = "combining"
    threshold: float = 1.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"hop mode must be one of {MODES}, got {self.mode!r}")
        if not self.threshold > 0:
            raise ValueError("hop threshold must be positive")


@dataclass(frozen=True)
class OutageEstimate:
    value: float
    method: str
    ci_halfwidth: float = 0.0
    backend: str = ""
    wide_ci: bool = False
    samples: int = 0
    failures: int = 0

    def __post_init__(self):
        v = self.value
        if not math.isnan(v):
            object.__setattr__(self, "value", min(1.0, max(0.0, float(v))))

    @property
    def lower(self) -> float:
        return max(0.0, self.value - self.ci_halfwidth)

    @property
    def upper(self) -> float:
        return min(1.0, self.value + self.ci_halfwidth)


@dataclass(frozen=True)
class Topology:
    """A backhaul chain plus optional access link.

    For S2 every hop's ``fso`` is ignored; ``fso_e2e`` is the single FSO
    link spanning the chain and all hops share one reception mode.

    In IAB mode hop n must carry the traffic of every UE served at node n
    or beyond, so its threshold is ``2^(load * rate) - 1``.  ``donor_ues``
    UEs attached directly to the donor see only their access link.
    """

    system: str
    hops: tuple[HopConfig, ...]
    access: AccessLinkParams | None = None
    ue_threshold: float | None = None
    fso_e2e: FsoLinkParams | None = None
    iab: bool = False
    ues_per_node: tuple[int, ...] = ()
    rate: float = 0.0
    donor_ues: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hops", tuple(self.hops))
        object.__setattr__(self, "ues_per_node", tuple(int(v) for v in self.ues_per_node))
        if self.system not in SYSTEMS:
            raise ValueError(f"system must be one of {SYSTEMS}")
        if not self.hops:
            raise ValueError("topology needs at least one hop")
        if self.system == "S2":
            if len({h.mode for h in self.hops}) != 1:
                raise ValueError("S2 hops must share one reception mode")
            if any(h.thz is None for h in self.hops):
                raise ValueError("S2 needs a THz link on every hop")
            if self.iab:
                raise ValueError("IAB averaging is defined for S1 chains only")
        if self.iab:
            if len(self.ues_per_node) != len(self.hops) or any(v < 0 for v in self.ues_per_node):
                raise ValueError("IAB needs one non-negative UE count per node")
            if not self.rate > 0:
                raise ValueError("IAB needs a positive per-UE rate")
            if sum(self.ues_per_node) + self.donor_ues == 0:
                raise ValueError("IAB needs at least one UE")
        if self.ue_threshold is not None and not self.ue_threshold > 0:
            raise ValueError("UE threshold must be positive")

    @property
    def mode(self) -> str:
        return self.hops[-1].mode

    def resolved_hops(self) -> tuple[HopConfig, ...]:
        """Hops with IAB load thresholds applied (unchanged outside IAB)."""
        if not self.iab:
            return self.hops
        loads = np.cumsum(self.ues_per_node[::-1])[::-1]
        return tuple(replace(h, threshold=iab_threshold(int(l), self.rate)) if l > 0 else h for h, l in zip(self.hops, loads))


# --------------------------------------------------------------------------
# per-link helpers
# --------------------------------------------------------------------------


def _fso_cdf(link: FsoLinkParams | None, g: float, kind: str = "cdf") -> float:
    return 1.0 if link is None else fso_snr_dist(g, link, kind)


def _thz_cdf(link: ThzLinkParams | None, g: float, kind: str = "cdf") -> float:
    return 1.0 if link is None else thz_snr_dist(g, link, kind)


# --------------------------------------------------------------------------
# single hop
# --------------------------------------------------------------------------


def hop_outage_switching(hop: HopConfig) -> OutageEstimate:
    g = hop.threshold
    return OutageEstimate(_thz_cdf(hop.thz, g) * _fso_cdf(hop.fso, g), "closed", backend="product")


def _series_terms(fso: FsoLinkParams, thz: ThzLinkParams, g: float, n_terms: int):
    """Yield signed terms of the convolution series for P[g_F + g_T < g]."""
    fc, tc = fso.coeffs, thz.coeffs
    xi2 = thz.alpha * (tc.order - tc.c2)
    log_d1 = math.log(fc.d1)
    log_g, log_hat = math.log(g), math.log(thz.gamma_hat)
    base = tc.log_c1 - math.log(xi2)

    def weighted(e: float, log_coef: float) -> float:
        # coefficient * int_0^g f_F(x) (g - x)^e dx
        spec = fc.cdf_spec(last_bottom=-e)
        log_scale = log_coef + log_d1 + special.gammaln(e + 1.0) + e * (log_g - log_hat)
        return specfun.meijer_g(spec, fc.scale * g, log_scale=log_scale)

    e0 = xi2 / 2.0
    yield float(special.gammasgn(tc.c2)) * weighted(e0, base + special.gammaln(tc.c2))
    log_c3 = math.log(tc.c3)
    for k in range(n_terms):
        bracket = 1.0 / (tc.order + k) - 1.0 / (tc.c2 + k)
        if bracket == 0.0:
            yield 0.0
            continue
        e = thz.alpha * (tc.order + k) / 2.0
        log_coef = base + (tc.c2 + k) * log_c3 - special.gammaln(k + 1.0) + math.log(abs(bracket))
        sign = (-1.0) ** k * math.copysign(1.0, bracket)
        yield sign * weighted(e, log_coef)


def combining_series(fso: FsoLinkParams, thz: ThzLinkParams, g: float, n_terms: int = SERIES_TERMS, adaptive: bool = True) -> tuple[float, bool]:
    """Series value of P[g_F + g_T < g] and whether it is trustworthy.

    Stops early once a term falls below SERIES_TAIL of the partial sum
    (after the terms start shrinking).  Reports non-convergence when the
    tail test never passes or cancellation exceeds SERIES_CANCELLATION.
    """
    terms: list[float] = []
    converged = False
    prev = math.inf
    for i, term in enumerate(_series_terms(fso, thz, g, n_terms)):
        terms.append(term)
        partial = math.fsum(terms)
        mag = abs(term)
        if i >= 2 and mag <= prev and mag < SERIES_TAIL * abs(partial):
            converged = True
            if adaptive:
                break
        prev = mag if i >= 1 else math.inf
    total = math.fsum(terms)
    peak = max(abs(t) for t in terms)
    if total <= 0 or peak > SERIES_CANCELLATION * abs(total):
        converged = False
    return total, converged


def combining_quadrature(fso: FsoLinkParams, thz: ThzLinkParams, g: float) -> float:
    """P[g_F + g_T < g] = int_0^g f_F(x) F_T(g - x) dx by adaptive quadrature."""

    def integrand(u: float) -> float:
        return fso_snr_dist(g * u, fso, "pdf") * thz_snr_dist(g * (1.0 - u), thz, "cdf")

    edges = [0.0, 1e-8, 1e-5, 1e-3, 0.03, 0.2, 0.5, 0.8, 0.97, 0.999, 0.99999, 1.0]
    parts = [integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-11, limit=200)[0] for lo, hi in zip(edges, edges[1:])]
    return g * math.fsum(parts)


def hop_outage_combining(hop: HopConfig, backend: str = "series", n_terms: int = SERIES_TERMS) -> OutageEstimate:
    g = hop.threshold
    if hop.fso is None:
        return OutageEstimate(_thz_cdf(hop.thz, g), "closed", backend="single-link")
    if hop.thz is None:
        return OutageEstimate(_fso_cdf(hop.fso, g), "closed", backend="single-link")
    if backend not in ("series", "quadrature"):
        raise ValueError(f"unknown combining backend {backend!r}")
    # a sum below g needs both SNRs below g, so the switching product bounds it
    if _fso_cdf(hop.fso, g) * _thz_cdf(hop.thz, g) == 0.0:
        return OutageEstimate(0.0, "closed", backend="bound")
    if backend == "series":
        value, ok = combining_series(hop.fso, hop.thz, g, n_terms)
        if ok:
            return OutageEstimate(value, "closed", backend="series")
        backend = "quadrature-fallback"
    return OutageEstimate(combining_quadrature(hop.fso, hop.thz, g), "closed", backend=backend)


def hop_outage(hop: HopConfig, backend: str = "series") -> OutageEstimate:
    if hop.mode == "switching":
        return hop_outage_switching(hop)
    return hop_outage_combining(hop, backend)


# --------------------------------------------------------------------------
# asymptotics
# --------------------------------------------------------------------------


def _fso_cdf_asym_terms(link: FsoLinkParams) -> list[tuple[float, float]]:
    # integrate c g^(s-1) -> (c/s) g^s
    return [(c / s, s) for c, s in fso_pdf_asymptotic_terms(link)]


def _thz_cdf_asym_terms(link: ThzLinkParams) -> list[tuple[float, float]]:
    # rewrite c (g / gamma_hat)^e as (c gamma_hat^-e) g^e
    return [(c * link.gamma_hat ** -e, e) for c, e in thz_cdf_asymptotic_terms(link)]


def asymptotic_hop_outage(hop: HopConfig, mode: str | None = None) -> float:
    """High-SNR hop outage from the power-law expansions of both links."""
    mode = mode or hop.mode
    g = hop.threshold
    if hop.fso is None:
        return _thz_cdf(hop.thz, g, "cdf_asymptotic")
    if hop.thz is None:
        return _fso_cdf(hop.fso, g, "cdf_asymptotic")
    thz_terms = _thz_cdf_asym_terms(hop.thz)
    if mode == "switching":
        fso_part = sum(cf * g ** sf for cf, sf in _fso_cdf_asym_terms(hop.fso))
        return fso_part * sum(ct * g ** et for ct, et in thz_terms)
    total = 0.0
    for cf, sf in fso_pdf_asymptotic_terms(hop.fso):
        for ct, et in thz_terms:
            total += cf * ct * g ** (sf + et) * specfun.beta(sf, et + 1.0)
    return total


# --------------------------------------------------------------------------
# composition
# --------------------------------------------------------------------------


def df_chain(hop_outages: Sequence[float]) -> float:
    """Decode-and-forward: the chain fails if any hop fails."""
    if any(p >= 1.0 for p in hop_outages):
        return 1.0
    # log1p/expm1 keep tiny outages from rounding away
    return -math.expm1(math.fsum(math.log1p(-p) for p in hop_outages))


def multihop_outage_s1(hops: Sequence[HopConfig], backend: str = "series") -> OutageEstimate:
    parts = [hop_outage(h, backend) for h in hops]
    tags = sorted({p.backend for p in parts})
    return OutageEstimate(df_chain([p.value for p in parts]), "closed", backend="+".join(tags))


def _s2_compose(fso_cdf: float, thz_cdfs: Sequence[float], last_combining: float | None) -> float:
    if last_combining is None:
        return fso_cdf * df_chain(thz_cdfs)
    head = thz_cdfs[:-1]
    survive = 1.0
    early = 0.0
    for f in head:
        early += f * survive
        survive *= 1.0 - f
    return fso_cdf * early + survive * last_combining


def s2_outage(hops: Sequence[HopConfig], fso_e2e: FsoLinkParams | None, mode: str, backend: str = "series") -> OutageEstimate:
    """S2 outage: THz chain backed by one end-to-end FSO link.

    The FSO link uses the final hop's threshold.  With combining, only the
    final node can add the FSO and THz SNRs.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    g_last = hops[-1].threshold
    thz_cdfs = [_thz_cdf(h.thz, h.threshold) for h in hops]
    f_fso = _fso_cdf(fso_e2e, g_last)
    last = None
    tag = "product"
    if mode == "combining":
        est = hop_outage_combining(HopConfig(fso_e2e, hops[-1].thz, "combining", g_last), backend)
        last, tag = est.value, est.backend
    return OutageEstimate(_s2_compose(f_fso, thz_cdfs, last), "closed", backend=tag)


def s2_asymptotic(hops: Sequence[HopConfig], fso_e2e: FsoLinkParams | None, mode: str) -> float:
    g_last = hops[-1].threshold
    thz_cdfs = [_thz_cdf(h.thz, h.threshold, "cdf_asymptotic") for h in hops]
    f_fso = _fso_cdf(fso_e2e, g_last, "cdf_asymptotic")
    last = None
    if mode == "combining":
        last = asymptotic_hop_outage(HopConfig(fso_e2e, hops[-1].thz, "combining", g_last))
    return _s2_compose(f_fso, thz_cdfs, last)


def e2e_outage(backhaul: OutageEstimate | float, access_cdf: float) -> OutageEstimate:
    if isinstance(backhaul, OutageEstimate):
        p, method, tag = backhaul.value, backhaul.method, backhaul.backend
    else:
        p, method, tag = float(backhaul), "closed", ""
    return OutageEstimate(p + access_cdf - p * access_cdf, method, backend=tag)


def iab_threshold(n_ues: int, rate: float) -> float:
    """SNR needed to carry n_ues * rate bps/Hz: 2^(n R) - 1."""
    if n_ues < 1 or not rate > 0:
        raise ValueError("need n_ues >= 1 and rate > 0")
    return 2.0 ** (n_ues * rate) - 1.0


def iab_average(per_node: Sequence[float]) -> float:
    if len(per_node) == 0:
        raise ValueError("iab_average needs at least one node")
    return math.fsum(per_node) / len(per_node)


def mesh_outage(route_outages: Sequence[float]) -> float:
    """Independent disjoint routes: all of them must fail."""
    if len(route_outages) == 0:
        raise ValueError("mesh needs at least one route")
    return math.prod(route_outages)


# --------------------------------------------------------------------------
# topology-level evaluation
# --------------------------------------------------------------------------


def access_threshold(topology: Topology, n_ues: int | None = None) -> float:
    if topology.ue_threshold is not None:
        return topology.ue_threshold
    if topology.iab and n_ues:
        return iab_threshold(n_ues, topology.rate)
    return topology.hops[-1].threshold


def backhaul_outage(topology: Topology, engine: str = "closed", backend: str = "series", n_hops: int | None = None) -> OutageEstimate:
    """Outage of the first ``n_hops`` hops (all by default)."""
    hops = topology.resolved_hops()[: n_hops or len(topology.hops)]
    if engine == "closed":
        if topology.system == "S1":
            return multihop_outage_s1(hops, backend)
        return s2_outage(hops, topology.fso_e2e, topology.mode, backend)
    if engine == "asymptotic":
        if topology.system == "S1":
            value = df_chain([asymptotic_hop_outage(h) for h in hops])
        else:
            value = s2_asymptotic(hops, topology.fso_e2e, topology.mode)
        if not value >= 0:
            raise ValueError(f"asymptote is {value:.3g}: SNR is below the range where the expansion holds")
        return OutageEstimate(value, "asymptotic", backend="power-law")
    raise ValueError(f"unknown analytic engine {engine!r}")


def topology_outage(topology: Topology, engine: str = "closed", backend: str = "series") -> OutageEstimate:
    """End-to-end outage: backhaul, plus access if present, IAB-averaged if set."""
    if topology.access is None:
        return backhaul_outage(topology, engine, backend)
    if not topology.iab:
        bh = backhaul_outage(topology, engine, backend)
        return e2e_outage(bh, access_snr_cdf(access_threshold(topology), topology.access))
    per_node = []
    tags = set()
    if topology.donor_ues:
        per_node.append(access_snr_cdf(access_threshold(topology, topology.donor_ues), topology.access))
    for n, count in enumerate(topology.ues_per_node, 1):
        if count == 0:
            continue
        bh = backhaul_outage(topology, engine, backend, n_hops=n)
        tags.add(bh.backend)
        per_node.append(e2e_outage(bh, access_snr_cdf(access_threshold(topology, count), topology.access)).value)
    method = "asymptotic" if engine == "asymptotic" else "closed"
    return OutageEstimate(iab_average(per_node), method, backend="+".join(sorted(tags)))


# --------------------------------------------------------------------------
# diversity
# --------------------------------------------------------------------------


def hop_diversity(hop: HopConfig) -> float:
    return sum(link_diversity(l) for l in (hop.fso, hop.thz) if l is not None)


def system_diversity(topology: Topology) -> float:
    """High-SNR outage slope versus a common SNR scale on every link."""
    if topology.system == "S1":
        return min(hop_diversity(h) for h in topology.hops)
    fso = link_diversity(topology.fso_e2e) if topology.fso_e2e is not None else 0.0
    return fso + min(link_diversity(h.thz) for h in topology.hops)


def scale_snr(topology: Topology, factor: float) -> Topology:
    """Multiply every backhaul link's SNR scale by ``factor`` (noise / factor)."""

    def scaled(link):
        return None if link is None else replace(link, noise_var=link.noise_var / factor)

    hops = tuple(replace(h, fso=scaled(h.fso), thz=scaled(h.thz)) for h in topology.hops)
    return replace(topology, hops=hops, fso_e2e=scaled(topology.fso_e2e))


__all__ = [
    "ClosedFormUnsupportedError",
    "HopConfig",
    "OutageEstimate",
    "Topology",
    "access_threshold",
    "asymptotic_hop_outage",
    "backhaul_outage",
    "combining_quadrature",
    "combining_series",
    "df_chain",
    "e2e_outage",
    "hop_diversity",
    "hop_outage",
    "hop_outage_combining",
    "hop_outage_switching",
    "iab_average",
    "iab_threshold",
    "mesh_outage",
    "multihop_outage_s1",
    "s2_asymptotic",
    "s2_outage",
    "scale_snr",
    "system_diversity",
    "topology_outage",
]
