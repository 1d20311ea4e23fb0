"""Real-valued special functions used by the closed-form outage expressions.

The elementary functions (log-gamma, incomplete gamma, Bessel K, erf, beta)
are thin, domain-checked wrappers around :mod:`scipy.special`.  The Meijer-G
evaluator is implemented here: a Slater residue series for the common case
and a Mellin-Barnes contour quadrature used both as a fallback and as an
independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate, optimize, special

__all__ = [
    "DivergenceError",
    "MeijerGSpec",
    "UnsupportedInstanceError",
    "bessel_k",
    "beta",
    "erf",
    "incomplete_gamma",
    "ln_gamma",
    "log_upper_gamma",
    "lower_gamma_series",
    "meijer_g",
    "meijer_g_leading",
    "separate_poles",
]

# Shapes (m, n, p, q) the evaluator accepts: the identity cases plus the
# families that appear in the link and hop distributions.
SUPPORTED_SHAPES = frozenset(
    {
        (1, 0, 0, 1),
        (2, 0, 0, 2),
        (3, 0, 1, 3),
        (3, 1, 2, 4),
        (6, 1, 3, 7),
        (2, 1, 2, 3),
    }
)

COLLISION_STEP = 1e-9
# max|term| / |sum| above this means the residue series has lost too many
# digits to cancellation and the contour integral is used instead.
CANCELLATION_LIMIT = 1e4
AUTO_SERIES_TERMS = 1536


class UnsupportedInstanceError(ValueError):
    """Raised for a Meijer-G shape outside :data:`SUPPORTED_SHAPES`."""


class DivergenceError(ArithmeticError):
    """Raised when no convergent representation exists for the parameters."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


def ln_gamma(x: float) -> float:
    """Natural log of Gamma(x) for x > 0."""
    _require(x > 0, f"ln_gamma requires x > 0, got {x!r}")
    return float(special.gammaln(x))


def _upper_gamma_cf(a: float, x: float) -> float:
    return math.exp(_log_upper_gamma_cf(a, x))


def _log_upper_gamma_cf(a: float, x: float) -> float:
    # Modified Lentz evaluation of the Legendre continued fraction; valid for
    # any real a when x > 0 and converges quickly once x is not small.
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return -x + a * math.log(x) + math.log(h)


def _upper_gamma_nonpositive(a: float, x: float) -> float:
    if x >= 1.5:
        return _upper_gamma_cf(a, x)
    # Step up to a positive (or zero) order and recurse back down with
    # Gamma(a, x) = (Gamma(a + 1, x) - x**a e**-x) / a.
    k = int(math.floor(-a)) + 1
    top = a + k
    if abs(top - 1.0) < 1e-15 and abs(a - round(a)) < 1e-15:
        val = float(special.exp1(x))
        top = 0.0
        k -= 1
    else:
        val = float(special.gammaincc(top, x) * special.gamma(top))
    order = top
    for _ in range(k):
        order -= 1.0
        val = (val - math.exp(order * math.log(x) - x)) / order
    return val


def incomplete_gamma(kind: str, a: float, x: float) -> float:
    """Un-regularized incomplete gamma function.

    ``kind="upper"`` gives Gamma(a, x) and ``kind="lower"`` gives
    gamma(a, x).  The upper function is also defined for a <= 0 when x > 0,
    which the THz distribution needs whenever the pointing parameter is
    large compared with the fading order.
    """
    _require(x >= 0, f"incomplete_gamma requires x >= 0, got {x!r}")
    if kind == "lower":
        _require(a > 0, f"lower incomplete gamma requires a > 0, got {a!r}")
        if x == 0:
            return 0.0
        p = special.gammainc(a, x)
        if p == 0.0:
            # deep left tail: leading series term in log space
            return math.exp(a * math.log(x) - x - math.log(a)) * float(special.hyp1f1(1.0, a + 1.0, x))
        return float(math.exp(special.gammaln(a)) * p) if a < 170 else float(
            math.exp(special.gammaln(a) + math.log(p))
        )
    if kind == "upper":
        if a <= 0:
            _require(x > 0, f"upper incomplete gamma with a={a!r} requires x > 0")
            return _upper_gamma_nonpositive(a, x)
        if x == 0:
            return float(special.gamma(a))
        q = special.gammaincc(a, x)
        if q == 0.0 or q < 1e-280:
            return _upper_gamma_cf(a, x)
        return float(math.exp(special.gammaln(a) + math.log(q)))
    raise ValueError(f"kind must be 'upper' or 'lower', got {kind!r}")


def log_upper_gamma(a: float, x: float) -> float:
    """log Gamma(a, x) for x > 0 and any real a, without overflow.

    Very negative orders make Gamma(a, x) overflow at small x even when the
    quantity it multiplies is tiny; callers combine in log space instead.
    """
    _require(x > 0, f"log_upper_gamma requires x > 0, got {x!r}")
    if x - a >= 2.0:
        return _log_upper_gamma_cf(a, x)
    return math.log(incomplete_gamma("upper", a, x))


def lower_gamma_series(a: float, x: float, terms: int = 50) -> float:
    """Truncated power series sum_k (-1)^k x^(a+k) / (k! (a+k)).

    Equals the lower incomplete gamma function as ``terms`` grows; valid for
    a not a non-positive integer.
    """
    _require(not (a <= 0 and float(a).is_integer()), "series undefined at non-positive integer a")
    if x == 0:
        return 0.0
    parts = []
    log_x = math.log(x)
    for k in range(terms):
        mag = (a + k) * log_x - math.lgamma(k + 1)
        parts.append((-1.0) ** k * math.exp(mag) / (a + k))
    return math.fsum(parts)


def bessel_k(order: float, x: float) -> float:
    """Modified Bessel function of the second kind K_order(x), x > 0."""
    _require(x > 0, f"bessel_k requires x > 0, got {x!r}")
    order = abs(order)
    if order < 1e-300:
        # scipy returns nan for subnormal orders; K is flat in the order near 0
        order = 0.0
    return float(special.kv(order, x))


def erf(x: float) -> float:
    return float(special.erf(x))


def beta(a: float, b: float) -> float:
    _require(a > 0 and b > 0, f"beta requires a, b > 0, got {a!r}, {b!r}")
    return float(math.exp(special.betaln(a, b)))


@dataclass(frozen=True)
class MeijerGSpec:
    """Parameters of G^{m,n}_{p,q}[z | a; b]."""

    m: int
    n: int
    a: tuple[float, ...]
    b: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        if not (0 <= self.m <= self.q and 0 <= self.n <= self.p):
            raise ValueError(f"invalid Meijer-G orders m={self.m}, n={self.n}, p={self.p}, q={self.q}")

    @property
    def p(self) -> int:
        return len(self.a)

    @property
    def q(self) -> int:
        return len(self.b)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.m, self.n, self.p, self.q)

    @classmethod
    def of(cls, an: Sequence[float], ap: Sequence[float], bm: Sequence[float], bq: Sequence[float]) -> "MeijerGSpec":
        """Build from the four parameter groups, mpmath-style."""
        return cls(len(bm), len(an), tuple(an) + tuple(ap), tuple(bm) + tuple(bq))


def _check_shape(spec: MeijerGSpec) -> None:
    if spec.shape not in SUPPORTED_SHAPES:
        raise UnsupportedInstanceError(f"Meijer-G shape {spec.shape} is not supported")


def separate_poles(values) -> tuple[float, ...]:
    """Nudge parameters apart when two of them differ by an integer."""
    b = [float(v) for v in values]
    collisions = 0
    for j in range(len(b)):
        for h in range(j):
            d = b[j] - b[h]
            if abs(d - round(d)) < 1e-7:
                collisions += 1
                b[j] += collisions * COLLISION_STEP
                break
    return tuple(b)


def _separate_poles(spec: MeijerGSpec) -> MeijerGSpec:
    head = separate_poles(spec.b[: spec.m])
    if head == tuple(spec.b[: spec.m]):
        return spec
    return MeijerGSpec(spec.m, spec.n, spec.a, head + tuple(spec.b[spec.m :]))


def _log_abs_gamma_signed(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return special.gammaln(x), special.gammasgn(x)


def _slater_terms(spec: MeijerGSpec, log_z: float, k: np.ndarray, j: int, log_scale: float) -> np.ndarray:
    """Residue terms at s = -b_j - k."""
    a, b, m, n = spec.a, spec.b, spec.m, spec.n
    bj = b[j]
    log_mag = (bj + k) * log_z + log_scale - special.gammaln(k + 1.0)
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    zero = np.zeros(k.shape, dtype=bool)

    def num(arg):
        nonlocal log_mag, sign
        lg, sg = _log_abs_gamma_signed(arg)
        log_mag = log_mag + lg
        sign = sign * sg

    def den(arg):
        nonlocal log_mag, sign, zero
        pole = (arg <= 0) & (arg == np.round(arg))
        zero = zero | pole
        lg, sg = _log_abs_gamma_signed(np.where(pole, 0.5, arg))
        log_mag = log_mag - lg
        sign = sign * sg

    for h in range(m):
        if h != j:
            num(b[h] - bj - k)
    for h in range(n):
        num(1.0 - a[h] + bj + k)
    for h in range(m, len(b)):
        den(1.0 - b[h] + bj + k)
    for h in range(n, len(a)):
        den(a[h] - bj - k)
    with np.errstate(over="ignore", under="ignore"):
        out = sign * np.exp(log_mag)
    out[zero] = 0.0
    return out


def _slater(spec: MeijerGSpec, z: float, log_scale: float = 0.0, max_terms: int = 20000) -> tuple[float, float]:
    """Residue series value and its cancellation ratio max|term|/|sum|."""
    if spec.p >= spec.q:
        raise DivergenceError("residue series requires p < q")
    log_z = math.log(z)
    parts: list[float] = []
    peak = 0.0
    chunk = 64
    for j in range(spec.m):
        start = 0
        fam_peak = 0.0
        while True:
            k = np.arange(start, start + chunk, dtype=float)
            terms = _slater_terms(spec, log_z, k, j, log_scale)
            if not np.all(np.isfinite(terms)):
                raise DivergenceError("non-finite residue term")
            parts.extend(terms.tolist())
            abs_t = np.abs(terms)
            fam_peak = max(fam_peak, float(abs_t.max()))
            tail = float(abs_t[-8:].max())
            decreasing = abs_t[-1] <= abs_t[-9]
            if decreasing and (tail <= 1e-17 * fam_peak or fam_peak == 0.0):
                break
            start += chunk
            if start >= max_terms:
                raise DivergenceError("residue series did not converge")
        peak = max(peak, fam_peak)
    try:
        total = math.fsum(parts)
    except OverflowError:
        raise DivergenceError("residue terms overflow") from None
    if total == 0.0:
        return 0.0, math.inf if peak > 0 else 1.0
    return total, peak / abs(total)


def _log_phi(spec: MeijerGSpec, s):
    a, b, m, n = spec.a, spec.b, spec.m, spec.n
    out = 0.0
    for j in range(m):
        out = out + special.loggamma(b[j] + s)
    for j in range(n):
        out = out + special.loggamma(1.0 - a[j] - s)
    for j in range(m, len(b)):
        out = out - special.loggamma(1.0 - b[j] - s)
    for j in range(n, len(a)):
        out = out - special.loggamma(a[j] + s)
    return out


def _contour(spec: MeijerGSpec, z: float, log_scale: float = 0.0) -> float:
    """Mellin-Barnes integral along Re(s) = c."""
    a, b, m, n = spec.a, spec.b, spec.m, spec.n
    if m + n <= (spec.p + spec.q) / 2:
        raise DivergenceError("contour integral diverges for this shape")
    lo = -min(b[:m]) if m else -math.inf
    hi = 1.0 - max(a[:n]) if n else math.inf
    if not lo < hi:
        raise DivergenceError("no vertical contour separates the two pole families")
    log_z = math.log(z)

    def ref(c):
        return float(np.real(_log_phi(spec, c))) - c * log_z

    if math.isinf(hi):
        span = 10.0 + 4.0 * z ** (1.0 / max(spec.q - spec.p, 1))
        left, right = lo + 1e-3, lo + span
    else:
        width = hi - lo
        left, right = lo + 0.02 * width, hi - 0.02 * width
    c = optimize.minimize_scalar(ref, bounds=(left, right), method="bounded", options={"xatol": 1e-6}).x
    l0 = ref(c)

    def log_abs(t):
        return float(np.real(_log_phi(spec, complex(c, t)))) - c * log_z - l0

    cutoff = math.log(1e-18)
    t_hi = 1.0
    while log_abs(t_hi) > cutoff:
        t_hi *= 1.5
        if t_hi > 1e5:
            raise DivergenceError("contour integrand does not decay")

    if l0 + log_scale + math.log(t_hi) < -750.0:
        # integrand is normalised to at most about 1 on the line: the value underflows
        return 0.0

    def integrand(t):
        s = complex(c, t)
        return float(np.real(np.exp(_log_phi(spec, s) - s * log_z - l0)))

    period = 2.0 * math.pi / max(abs(log_z), 1e-3)
    pieces = int(min(max(t_hi / period, 4), 400))
    edges = np.linspace(0.0, t_hi, pieces + 1)
    mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)

    def gauss(order):
        x, w = _LEGENDRE[order]
        s = c + 1j * (mid[:, None] + half[:, None] * x)
        with np.errstate(under="ignore"):
            f = np.real(np.exp(_log_phi(spec, s) - s * log_z - l0))
        return math.fsum((f @ w) * half)

    # each piece spans under one oscillation, so two Gauss orders agreeing is a reliable check
    coarse, fine = gauss(24), gauss(40)
    if abs(fine - coarse) <= 1e-12 * abs(fine):
        total = fine
    else:
        total = math.fsum(
            integrate.quad(integrand, lo_, hi_, epsabs=1e-20, epsrel=1e-11, limit=200)[0]
            for lo_, hi_ in zip(edges[:-1], edges[1:])
        )
    return total / math.pi * math.exp(l0 + log_scale)


_LEGENDRE = {n: np.polynomial.legendre.leggauss(n) for n in (24, 40)}


def meijer_g(spec: MeijerGSpec, z: float, method: str = "auto", log_scale: float = 0.0) -> float:
    """Evaluate exp(log_scale) * G^{m,n}_{p,q}[z | a; b] for real z > 0.

    ``method`` is ``"slater"`` (residue series), ``"contour"`` (Mellin-Barnes
    quadrature) or ``"auto"``, which uses the series unless it loses more
    than about four digits to cancellation.  ``log_scale`` folds a large or
    tiny prefactor into the evaluation without overflow.
    """
    _check_shape(spec)
    _require(z > 0, f"meijer_g requires z > 0, got {z!r}")
    if method == "contour":
        return _contour(spec, z, log_scale)
    series_spec = _separate_poles(spec)
    if method == "slater":
        return _slater(series_spec, z, log_scale)[0]
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    try:
        # a series needing thousands of residues cancels catastrophically anyway
        value, ratio = _slater(series_spec, z, log_scale, max_terms=AUTO_SERIES_TERMS)
    except DivergenceError:
        return _contour(spec, z, log_scale)
    if ratio > CANCELLATION_LIMIT:
        return _contour(spec, z, log_scale)
    return value


def meijer_g_leading(spec: MeijerGSpec, z: float) -> float:
    """Sum of the k = 0 residues: the small-argument expansion of G."""
    _check_shape(spec)
    spec = _separate_poles(spec)
    log_z = math.log(z)
    k = np.zeros(1)
    return math.fsum(float(_slater_terms(spec, log_z, k, j, 0.0)[0]) for j in range(spec.m))
