"""Desk-scale PLWE samples, transfer of their errors through R_m, and the
evaluation-at-a-root distinguisher.

Ring elements are coefficient tuples of length m = deg f with entries in
[0, q).  Errors are drawn coefficient-wise from the discrete Gaussian on Z
with density proportional to exp(-k^2 / (2 sigma^2)), truncated at
|k| <= 12 sigma.  The sampler is rejection from a two-sided geometric
proposal (the discrete-Laplace method of Canonne, Kamath and Steinke).

Randomness comes from numpy's Philox4x64-10 counter-based generator keyed
by the seed, so a seed reproduces a sample set bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import gmpy2
import numpy as np

from .attack_audit import as_fraction, require_odd_prime
from .equivalence import EquivalenceMap, forward_map
from .polynomials import IntPoly, eval_mod, fq_mod, fq_mul

TAIL_CUT = 12
# guesses are scored in blocks of this many to bound memory
_GUESS_BLOCK = 2048


def make_rng(seed: int) -> np.random.Generator:
    if not 0 <= seed < 1 << 64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return np.random.Generator(np.random.Philox(key=seed))


@dataclass(frozen=True)
class PlweParams:
    f: IntPoly
    q: int
    sigma: Fraction
    seed: int = 0

    def __post_init__(self):
        if self.f.degree < 1:
            raise ValueError("f must have degree at least 1")
        require_odd_prime(self.q)
        object.__setattr__(self, "sigma", as_fraction(self.sigma))
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.f.lead % self.q == 0:
            raise ValueError("leading coefficient of f vanishes mod q")

    @property
    def m(self) -> int:
        return self.f.degree


@dataclass(frozen=True)
class SampleSet:
    params: PlweParams
    secret: tuple[int, ...] | None
    samples: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    error_log: tuple[tuple[int, ...] | None, ...]  # None for uniform samples
    kind: str  # "plwe", "uniform" or "mixed"

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def is_plwe(self) -> tuple[bool, ...]:
        return tuple(e is not None for e in self.error_log)


# --- discrete Gaussian -----------------------------------------------------


def gaussian_support(sigma) -> int:
    """Largest |k| kept by the tail cut."""
    return math.floor(TAIL_CUT * float(as_fraction(sigma)))


def discrete_gaussian_moments(sigma) -> tuple[float, float]:
    """(mean, variance) of the truncated discrete Gaussian by direct summation."""
    s = float(as_fraction(sigma))
    B = gaussian_support(sigma)
    ks = range(-B, B + 1)
    w = [math.exp(-k * k / (2 * s * s)) for k in ks]
    z = math.fsum(w)
    mean = math.fsum(k * x for k, x in zip(ks, w)) / z
    var = math.fsum(k * k * x for k, x in zip(ks, w)) / z - mean * mean
    return mean, var


def sample_discrete_gaussian(rng: np.random.Generator, sigma, size: int) -> np.ndarray:
    """``size`` draws from the truncated discrete Gaussian (int64)."""
    s = float(as_fraction(sigma))
    bound = gaussian_support(sigma)
    if bound == 0:
        return np.zeros(size, dtype=np.int64)
    t = math.floor(s) + 1
    p_geo = -math.expm1(-1.0 / t)
    out = np.empty(size, dtype=np.int64)
    filled = 0
    while filled < size:
        batch = max(2 * (size - filled), 64)
        g = rng.geometric(p_geo, batch) - 1
        neg = rng.integers(0, 2, batch).astype(bool)
        keep = ~(neg & (g == 0))
        y = np.where(neg, -g, g)
        accept = np.exp(-((np.abs(y) - s * s / t) ** 2) / (2 * s * s))
        keep &= rng.random(batch) < accept
        keep &= np.abs(y) <= bound
        y = y[keep]
        take = min(y.size, size - filled)
        out[filled : filled + take] = y[:take]
        filled += take
    return out


def uniform_mod(rng: np.random.Generator, q: int, size: int) -> list[int]:
    """``size`` uniform residues in [0, q) for any q >= 2."""
    if q <= 1 << 62:
        return [int(v) for v in rng.integers(0, q, size, dtype=np.int64)]
    words = (q.bit_length() + 63) // 64
    out: list[int] = []
    while len(out) < size:
        raw = rng.integers(0, 1 << 63, words * 2, dtype=np.int64, endpoint=False)
        v = 0
        for w in raw:
            v = (v << 63) | int(w)
        v &= (1 << q.bit_length()) - 1
        if v < q:
            out.append(v)
    return out


# --- ring arithmetic -------------------------------------------------------


def ring_mul(a: Sequence[int], b: Sequence[int], f: IntPoly, q: int) -> tuple[int, ...]:
    prod = fq_mod(fq_mul(list(a), list(b), q), list(f.coeffs), q)
    return _pad(prod, f.degree)


def ring_add(a: Sequence[int], b: Sequence[int], q: int) -> tuple[int, ...]:
    return tuple((x + y) % q for x, y in zip(a, b))


def _pad(c: Sequence[int], m: int) -> tuple[int, ...]:
    return tuple(c) + (0,) * (m - len(c))


def centered(x: int, q: int) -> int:
    """Representative of x mod q in (-q/2, q/2]."""
    x %= q
    return x - q if 2 * x > q else x


# --- sample generation -----------------------------------------------------


def _plwe_pair(rng, params: PlweParams, secret):
    m, q = params.m, params.q
    a = tuple(uniform_mod(rng, q, m))
    e = tuple(int(v) for v in sample_discrete_gaussian(rng, params.sigma, m))
    b = ring_add(ring_mul(a, secret, params.f, q), tuple(v % q for v in e), q)
    return (a, b), e


def _uniform_pair(rng, params: PlweParams):
    m, q = params.m, params.q
    return (tuple(uniform_mod(rng, q, m)), tuple(uniform_mod(rng, q, m)))


def sample_plwe(params: PlweParams, count: int) -> SampleSet:
    if count < 1:
        raise ValueError("count must be positive")
    rng = make_rng(params.seed)
    secret = tuple(uniform_mod(rng, params.q, params.m))
    pairs, errs = [], []
    for _ in range(count):
        pair, e = _plwe_pair(rng, params, secret)
        pairs.append(pair)
        errs.append(e)
    return SampleSet(params, secret, tuple(pairs), tuple(errs), "plwe")


def sample_uniform(params: PlweParams, count: int) -> SampleSet:
    if count < 1:
        raise ValueError("count must be positive")
    rng = make_rng(params.seed)
    pairs = tuple(_uniform_pair(rng, params) for _ in range(count))
    return SampleSet(params, None, pairs, (None,) * count, "uniform")


def sample_mixed(params: PlweParams, count: int) -> SampleSet:
    """Each sample is PLWE or uniform with probability 1/2 (shared secret)."""
    if count < 1:
        raise ValueError("count must be positive")
    rng = make_rng(params.seed)
    secret = tuple(uniform_mod(rng, params.q, params.m))
    pairs, errs = [], []
    for coin in rng.integers(0, 2, count):
        if coin:
            pair, e = _plwe_pair(rng, params, secret)
        else:
            pair, e = _uniform_pair(rng, params), None
        pairs.append(pair)
        errs.append(e)
    return SampleSet(params, secret, tuple(pairs), tuple(errs), "mixed")


def verify_samples(ss: SampleSet) -> bool:
    """b == a s + e in Z_q[x]/(f) for every PLWE sample."""
    p = ss.params
    for (a, b), e in zip(ss.samples, ss.error_log):
        if e is None:
            continue
        if ring_add(ring_mul(a, ss.secret, p.f, p.q), tuple(v % p.q for v in e), p.q) != b:
            return False
    return True


# --- transfer through the equivalence map ----------------------------------


@dataclass(frozen=True)
class TransferResult:
    canonical_errors: tuple
    amplifications: tuple[float, ...]
    rm_norm: gmpy2.mpfr
    rm_inv_norm: gmpy2.mpfr
    skipped: int

    @property
    def lower_bound(self) -> float:
        return 1.0 / float(self.rm_inv_norm)

    @property
    def within_bounds(self) -> bool:
        hi, lo = float(self.rm_norm), self.lower_bound
        eps = 1e-12
        return all(lo * (1 - eps) <= a <= hi * (1 + eps) for a in self.amplifications)

    def summary(self) -> dict[str, float | int]:
        amps = self.amplifications
        if not amps:
            return {"count": 0, "skipped": self.skipped}
        return {
            "count": len(amps),
            "skipped": self.skipped,
            "min": min(amps),
            "median": float(np.median(amps)),
            "max": max(amps),
        }


def transfer_samples(emap: EquivalenceMap, ss: SampleSet, prec: int | None = None) -> TransferResult:
    """Push every recorded error through u -> R_m u and measure ||R_m e|| / ||e||."""
    if ss.params.m != emap.m:
        raise ValueError(f"ring degree {ss.params.m} does not match the map's m={emap.m}")
    prec = prec or emap.prec
    outs, amps = [], []
    skipped = 0
    for e in ss.error_log:
        if e is None:
            continue
        e = [centered(v, ss.params.q) for v in e]
        if not any(e):
            skipped += 1
            continue
        v = forward_map(emap, e)
        with gmpy2.context(precision=prec):
            num = gmpy2.sqrt(gmpy2.fsum([x * x for x in v]))
            amps.append(float(num / gmpy2.sqrt(gmpy2.mpfr(sum(c * c for c in e)))))
        outs.append(tuple(v))
    return TransferResult(tuple(outs), tuple(amps), emap.Rm.frobenius(), emap.Rm_inv.frobenius(), skipped)


# --- distinguisher ---------------------------------------------------------


@dataclass(frozen=True)
class DistinguisherResult:
    alpha: int
    q: int
    count: int
    guesses: tuple[int, ...]
    hits: tuple[int, ...]
    true_guess: int | None

    def rate(self, g: int) -> float:
        return self.hits[self.guesses.index(g % self.q)] / self.count

    @property
    def rates(self) -> np.ndarray:
        return np.asarray(self.hits, dtype=float) / self.count

    @property
    def best_guess(self) -> int:
        return self.guesses[int(np.argmax(self.hits))]

    @property
    def best_rate(self) -> float:
        return max(self.hits) / self.count

    @property
    def true_rate(self) -> float | None:
        if self.true_guess is None or self.true_guess not in self.guesses:
            return None
        return self.rate(self.true_guess)

    @property
    def best_wrong_rate(self) -> float | None:
        others = [h for g, h in zip(self.guesses, self.hits) if g != self.true_guess]
        return max(others) / self.count if others else None


def in_quarter_window(c: int, q: int) -> bool:
    """c, centered in (-q/2, q/2], lies in [-q/4, q/4)."""
    return -q <= 4 * c < q


def distinguisher(
    ss: SampleSet, alpha: int, q: int | None = None, guesses: Sequence[int] | None = None
) -> DistinguisherResult:
    """Count, per guess g, samples with b(alpha) - g a(alpha) in [-q/4, q/4) mod q."""
    p = ss.params
    q = p.q if q is None else q
    if q != p.q:
        raise ValueError("q differs from the sample set's modulus")
    alpha %= q
    if eval_mod(p.f, alpha, q) != 0:
        raise ValueError(f"alpha={alpha} is not a root of f mod {q}")
    if guesses is None:
        if q > 1 << 20:
            raise ValueError("provide candidate guesses when q exceeds 2^20")
        guesses = range(q)
    guesses = tuple(int(g) % q for g in guesses)
    A = [_eval_vec(a, alpha, q) for a, _ in ss.samples]
    B = [_eval_vec(b, alpha, q) for _, b in ss.samples]
    hits = _score(A, B, guesses, q)
    true_g = None if ss.secret is None else _eval_vec(ss.secret, alpha, q)
    return DistinguisherResult(alpha, q, len(ss), guesses, tuple(hits), true_g)


def _eval_vec(c: Sequence[int], alpha: int, q: int) -> int:
    acc = 0
    for v in reversed(c):
        acc = (acc * alpha + v) % q
    return acc


def _score(A: list[int], B: list[int], guesses: tuple[int, ...], q: int) -> list[int]:
    if q < 1 << 31:
        a = np.asarray(A, dtype=np.int64)
        b = np.asarray(B, dtype=np.int64)
        out: list[int] = []
        for start in range(0, len(guesses), _GUESS_BLOCK):
            g = np.asarray(guesses[start : start + _GUESS_BLOCK], dtype=np.int64)[:, None]
            r = (b[None, :] - (g * a[None, :]) % q) % q
            c = np.where(2 * r > q, r - q, r)
            out.extend(int(v) for v in np.count_nonzero((4 * c >= -q) & (4 * c < q), axis=1))
        return out
    return [sum(in_quarter_window(centered(bb - g * aa, q), q) for aa, bb in zip(A, B)) for g in guesses]


# --- planted roots ---------------------------------------------------------


def planted_root_poly(base: IntPoly, alpha: int, q: int) -> IntPoly:
    """``base`` with its constant term shifted (by a centered residue) so that alpha is a root mod q."""
    shift = centered(eval_mod(base, alpha, q), q)
    coeffs = list(base.coeffs)
    coeffs[0] -= shift
    out = IntPoly(coeffs)
    assert eval_mod(out, alpha, q) == 0
    return out
