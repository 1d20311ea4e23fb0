"""Monte Carlo outage estimator, independent of the closed forms.

Every sample draws fresh channel states for all links and applies the
receiver decision rules directly.  Random numbers come from Philox with
the 128-bit key ``seed * 2**64 + stream_id``; chunk ``c`` of a run sets
the top counter word to ``c``.  Chunks therefore never overlap, and the
result depends only on (seed, stream_id, n_samples, chunk_size), not on
how many worker threads process the chunks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .channels import AccessLinkParams, FsoLinkParams, PointingGeometry, ThzLinkParams
from .network import HopConfig, OutageEstimate, Topology, access_threshold

THREADS_ENV = "BACKHAUL_LAB_THREADS"
MAX_SAMPLES = 10 ** 9
THZ_SUM_MODES = ("exact_sum", "alpha_mu_approx")


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not 0 <= v < 2 ** 64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer")

    def generator(self, chunk: int = 0) -> np.random.Generator:
        bitgen = np.random.Philox(key=self.seed * 2 ** 64 + self.stream_id, counter=[0, 0, 0, chunk])
        return np.random.Generator(bitgen)

    def substream(self, index: int) -> "RngStream":
        return RngStream(self.seed, (self.stream_id + index) % 2 ** 64)


@dataclass(frozen=True)
class AccessOnly:
    """A UE served directly by the donor: only the access link can fail."""

    link: AccessLinkParams
    threshold: float


@dataclass(frozen=True)
class SampleSpec:
    n_samples: int = 10 ** 7
    confidence: float = 0.95
    thz_sum_mode: str = "exact_sum"
    boresight: bool = True
    chunk_size: int = 1 << 20

    def __post_init__(self):
        if not 10 ** 3 <= self.n_samples <= MAX_SAMPLES:
            raise ValueError(f"n_samples must be within [1e3, 1e9], got {self.n_samples}")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must be in (0, 1)")
        if self.thz_sum_mode not in THZ_SUM_MODES:
            raise ValueError(f"thz_sum_mode must be one of {THZ_SUM_MODES}")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be positive")


# --------------------------------------------------------------------------
# primitive samplers
# --------------------------------------------------------------------------


def sample_gamma_gamma(rng: np.random.Generator, alpha: float, beta: float, size: int) -> np.ndarray:
    """Unit-mean Gamma-Gamma irradiance: product of unit-mean Gamma(alpha) and Gamma(beta)."""
    out = np.ones(size)
    if math.isfinite(alpha):
        out *= rng.gamma(alpha, 1.0 / alpha, size)
    if math.isfinite(beta):
        out *= rng.gamma(beta, 1.0 / beta, size)
    return out


def sample_pointing(rng: np.random.Generator, geometry: PointingGeometry, size: int, boresight: bool = True) -> np.ndarray:
    """Collected-power fraction A0 exp(-2 r^2 / w_eq^2) for Gaussian jitter."""
    bx, by = geometry.boresight if boresight else (0.0, 0.0)
    dx = rng.normal(bx, geometry.jitter_std, size)
    dy = rng.normal(by, geometry.jitter_std, size)
    return geometry.a0 * np.exp(-2.0 * (dx * dx + dy * dy) / geometry.w_eq ** 2)


def sample_alpha_mu(rng: np.random.Generator, alpha: float, mu: float, omega: float, size: int) -> np.ndarray:
    """alpha-mu envelope omega * (G / mu)^(1/alpha), G ~ Gamma(mu)."""
    return omega * (rng.gamma(mu, 1.0, size) / mu) ** (1.0 / alpha)


def sample_fso_snr(rng, link: FsoLinkParams, size: int, boresight: bool = True) -> np.ndarray:
    irradiance = sample_gamma_gamma(rng, link.alpha, link.beta, size) * sample_pointing(rng, link.pointing, size, boresight)
    return link.delta * irradiance ** link.kappa


def sample_thz_snr(rng, link: ThzLinkParams, size: int, mode: str = "exact_sum", boresight: bool = True) -> np.ndarray:
    hp2 = sample_pointing(rng, link.pointing, size, boresight) ** 2
    if mode == "exact_sum":
        fading = np.zeros(size)
        for _ in range(link.n_rx):
            fading += sample_alpha_mu(rng, link.alpha, link.mu, link.omega, size) ** 2
        return link.gamma_bar * hp2 * fading
    envelope = sample_alpha_mu(rng, link.alpha, link.n_rx * link.mu, link.omega, size)
    return link.gamma_hat * hp2 * envelope ** 2


def sample_access_snr(rng, link: AccessLinkParams, size: int) -> np.ndarray:
    power = np.zeros(size)
    for _ in range(link.n_tx):
        power += rng.gamma(link.m, 1.0, size)
    return link.gamma_bar / link.m * power


# --------------------------------------------------------------------------
# decision logic
# --------------------------------------------------------------------------


def _fso(rng, link, size, spec) -> np.ndarray:
    return np.zeros(size) if link is None else sample_fso_snr(rng, link, size, spec.boresight)


def _thz(rng, link, size, spec) -> np.ndarray:
    return np.zeros(size) if link is None else sample_thz_snr(rng, link, size, spec.thz_sum_mode, spec.boresight)


def _hop_fails(rng, hop: HopConfig, size: int, spec: SampleSpec) -> np.ndarray:
    g_f = _fso(rng, hop.fso, size, spec)
    g_t = _thz(rng, hop.thz, size, spec)
    if hop.mode == "switching":
        return (g_t < hop.threshold) & (g_f < hop.threshold)
    return g_t + g_f < hop.threshold


def _s1_prefix_fails(rng, hops: Sequence[HopConfig], size: int, spec: SampleSpec) -> list[np.ndarray]:
    """Failure indicator of the chain up to and including each hop."""
    out = []
    acc = np.zeros(size, dtype=bool)
    for hop in hops:
        acc = acc | _hop_fails(rng, hop, size, spec)
        out.append(acc)
    return out


def _s2_fails(rng, topology: Topology, size: int, spec: SampleSpec) -> np.ndarray:
    hops = topology.resolved_hops()
    th_last = hops[-1].threshold
    g_f = _fso(rng, topology.fso_e2e, size, spec)
    g_t = [_thz(rng, h.thz, size, spec) for h in hops]
    if topology.mode == "switching":
        any_thz = np.zeros(size, dtype=bool)
        for g, h in zip(g_t, hops):
            any_thz |= g < h.threshold
        return any_thz & (g_f < th_last)
    early = np.zeros(size, dtype=bool)
    for g, h in zip(g_t[:-1], hops[:-1]):
        early |= g < h.threshold
    return np.where(early, g_f < th_last, g_f + g_t[-1] < th_last)


def _topology_counts(rng, topology: Topology, size: int, spec: SampleSpec) -> tuple[int, int]:
    """(failure events, trials) for one chunk; IAB counts one trial per node per sample."""
    if topology.system == "S2":
        fails = _s2_fails(rng, topology, size, spec)
        if topology.access is not None:
            fails = fails | (sample_access_snr(rng, topology.access, size) < access_threshold(topology, None))
        return int(fails.sum()), size
    prefixes = _s1_prefix_fails(rng, topology.resolved_hops(), size, spec)
    if topology.access is None:
        return int(prefixes[-1].sum()), size
    if not topology.iab:
        g_acc = sample_access_snr(rng, topology.access, size)
        fails = prefixes[-1] | (g_acc < access_threshold(topology, None))
        return int(fails.sum()), size
    events, nodes = 0, 0
    if topology.donor_ues:
        g_acc = sample_access_snr(rng, topology.access, size)
        events += int((g_acc < access_threshold(topology, topology.donor_ues)).sum())
        nodes += 1
    for count, bh in zip(topology.ues_per_node, prefixes):
        if count == 0:
            continue
        g_acc = sample_access_snr(rng, topology.access, size)
        events += int((bh | (g_acc < access_threshold(topology, count))).sum())
        nodes += 1
    return events, nodes * size


def _chunk_counts(target, rng, size: int, spec: SampleSpec) -> tuple[int, int]:
    if isinstance(target, AccessOnly):
        return int((sample_access_snr(rng, target.link, size) < target.threshold).sum()), size
    if isinstance(target, HopConfig):
        return int(_hop_fails(rng, target, size, spec).sum()), size
    if isinstance(target, Topology):
        return _topology_counts(rng, target, size, spec)
    # mesh: a list of independent routes, all must fail
    if len(target) == 0:
        raise ValueError("mesh needs at least one route")
    fails = np.ones(size, dtype=bool)
    for route in target:
        if route.iab:
            raise ValueError("mesh routes cannot use IAB averaging")
        if route.system == "S2":
            route_fail = _s2_fails(rng, route, size, spec)
        else:
            route_fail = _s1_prefix_fails(rng, route.resolved_hops(), size, spec)[-1]
        if route.access is not None:
            route_fail = route_fail | (sample_access_snr(rng, route.access, size) < access_threshold(route, None))
        fails &= route_fail
    return int(fails.sum()), size


# --------------------------------------------------------------------------
# estimator
# --------------------------------------------------------------------------


def wilson_interval(failures: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    z = stats.norm.ppf(0.5 + confidence / 2.0)
    p = failures / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    # the endpoints are exact at the boundaries; the formula only cancels there
    lo = 0.0 if failures == 0 else max(0.0, centre - half)
    hi = 1.0 if failures == trials else min(1.0, centre + half)
    return lo, hi


def worker_count() -> int:
    cap = os.environ.get(THREADS_ENV)
    n = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {cap!r}") from None
    return n


def chunk_sizes(spec: SampleSpec) -> list[int]:
    full, rest = divmod(spec.n_samples, spec.chunk_size)
    return [spec.chunk_size] * full + ([rest] if rest else [])


def estimate_outage(target: HopConfig | Topology | AccessOnly | Sequence[Topology], spec: SampleSpec | None = None, stream: RngStream | None = None, workers: int | None = None) -> OutageEstimate:
    """Sampled outage of a hop, a topology (E2E / IAB) or a mesh of routes.

    Returns the raw failure fraction with the larger side of the Wilson
    interval as ``ci_halfwidth``.  ``wide_ci`` is set when fewer than 10
    failures were seen or the interval exceeds half the estimate.
    """
    spec = spec or SampleSpec()
    stream = stream or RngStream(0)
    sizes = chunk_sizes(spec)
    workers = workers or worker_count()

    def run(chunk: int) -> tuple[int, int]:
        return _chunk_counts(target, stream.generator(chunk), sizes[chunk], spec)

    if workers <= 1 or len(sizes) == 1:
        counts = [run(c) for c in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=min(workers, len(sizes))) as pool:
            counts = list(pool.map(run, range(len(sizes))))
    failures = sum(c[0] for c in counts)
    trials = sum(c[1] for c in counts)
    p = failures / trials
    lo, hi = wilson_interval(failures, trials, spec.confidence)
    half = float(max(p - lo, hi - p))
    wide = failures < 10 or half > 0.5 * p
    return OutageEstimate(p, "montecarlo", half, backend=spec.thz_sum_mode, wide_ci=wide, samples=trials, failures=failures)


def binomial_stderr(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


__all__ = [
    "AccessOnly",
    "RngStream",
    "SampleSpec",
    "binomial_stderr",
    "chunk_sizes",
    "estimate_outage",
    "sample_access_snr",
    "sample_alpha_mu",
    "sample_fso_snr",
    "sample_gamma_gamma",
    "sample_pointing",
    "sample_thz_snr",
    "wilson_interval",
    "worker_count",
]
