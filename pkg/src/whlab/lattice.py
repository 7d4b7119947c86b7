"""Finite signed-support measures on the integer lattice and their arithmetic.

The central type is :class:`LatticeDist`, a nonnegative measure carried by a
finite integer window. Distributions may be defective on purpose: killed
walks, restricted convolution powers and truncated tails all produce total
mass below one, and nothing here ever renormalizes silently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np
from scipy.signal import fftconvolve

from .errors import DomainError, SizeLimitError

MASS_TOL = 1e-9
# only exact zeros are trimmed: deep-tail atoms such as 2**-200 are real
# data for exponential-tilt probes and must survive canonicalization
TRIM_TOL = 0.0
# direct convolution is exact for nonnegative inputs; FFT introduces a
# ~1e-17 noise floor, so it is reserved for windows where direct cost bites
FFT_THRESHOLD = 1 << 14
MAX_WINDOW = 1 << 20

__all__ = [
    "MASS_TOL",
    "TRIM_TOL",
    "FFT_THRESHOLD",
    "MAX_WINDOW",
    "LatticeDist",
    "TransformKind",
    "TransformPoint",
    "lattice",
    "delta",
    "zero_measure",
    "convolve",
    "convolve_exact",
    "convolution_power",
    "split_nonneg",
    "restrict_nonneg",
    "eval_transform",
    "cross_correlation_lhs",
    "cross_correlation_direct",
    "tv_distance",
    "sup_distance",
]


@dataclass(frozen=True, eq=False)
class LatticeDist:
    """Nonnegative masses on a finite integer window.

    ``weights[i]`` is the mass at lattice point ``offset + i``. Windows are
    canonical: the first and last weight are nonzero unless the measure is
    identically zero (empty ``weights``, ``offset`` 0). ``truncated_mass``
    records mass a generator knowingly cut off; operations treat the stored
    window as exact and do not propagate it.
    """

    offset: int
    weights: np.ndarray
    truncated_mass: float = 0.0
    total: float = field(init=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise DomainError("weights must be a 1-d array")
        if w.size and (w[0] == 0.0 or w[-1] == 0.0):
            raise DomainError("window not canonical: zero edge weight")
        if w.size and float(w.min()) < 0.0:
            raise DomainError("negative weight %r" % float(w.min()))
        if self.truncated_mass < 0.0:
            raise DomainError("truncated_mass must be nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "total", float(w.sum()))

    # -- basic accessors -------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.weights.size == 0

    @property
    def min_index(self) -> int:
        return self.offset

    @property
    def max_index(self) -> int:
        return self.offset + len(self.weights) - 1

    def support(self) -> tuple[int, int] | None:
        """Return (lowest, highest) carried index, or None for the zero measure."""
        if self.is_zero:
            return None
        return (self.min_index, self.max_index)

    def indices(self) -> np.ndarray:
        return self.offset + np.arange(len(self.weights))

    def mass(self, k: int) -> float:
        if self.is_zero or k < self.min_index or k > self.max_index:
            return 0.0
        return float(self.weights[k - self.offset])

    def mean(self) -> float:
        if self.is_zero:
            return 0.0
        return float(np.dot(self.indices(), self.weights))

    def is_proper(self, tol: float = MASS_TOL) -> bool:
        return abs(self.total - 1.0) <= tol

    def tail_mass(self, k: int) -> float:
        """Mass strictly above k."""
        if self.is_zero or k >= self.max_index:
            return 0.0
        lo = max(0, k + 1 - self.offset)
        return float(self.weights[lo:].sum())

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "offset": int(self.offset),
            "weights": [float(w) for w in self.weights],
            "truncated_mass": float(self.truncated_mass),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LatticeDist":
        try:
            offset = int(doc["offset"])
            weights = doc["weights"]
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError("distribution document needs offset and weights") from exc
        return lattice(
            offset,
            weights,
            truncated_mass=float(doc.get("truncated_mass", 0.0)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "LatticeDist":
        return cls.from_dict(json.loads(text))

    def __repr__(self) -> str:
        if self.is_zero:
            return "LatticeDist(zero)"
        return "LatticeDist([%d, %d], total=%.6g)" % (
            self.min_index,
            self.max_index,
            self.total,
        )


def lattice(
    offset: int,
    weights,
    truncated_mass: float = 0.0,
    trim: float = TRIM_TOL,
) -> LatticeDist:
    """Build a canonical LatticeDist, trimming edge weights at or below ``trim``.

    The default trims exact zeros only, so any positive mass however small
    stays in the window. Interior zeros are always preserved. Tiny negative
    weights from floating-point convolution are clamped to zero, anything
    more negative raises.
    """
    w = np.array(weights, dtype=float)
    if w.ndim != 1:
        raise DomainError("weights must be a 1-d sequence")
    if w.size:
        neg = w < 0.0
        if neg.any():
            worst = float(w[neg].min())
            if worst < -1e-10:
                raise DomainError("negative weight %r" % worst)
            w[neg] = 0.0
    keep = np.nonzero(w > trim)[0]
    if keep.size == 0:
        return LatticeDist(0, np.empty(0), truncated_mass)
    lo, hi = int(keep[0]), int(keep[-1])
    return LatticeDist(int(offset) + lo, w[lo : hi + 1].copy(), truncated_mass)


def delta(k: int = 0) -> LatticeDist:
    """Point mass at k."""
    return LatticeDist(int(k), np.ones(1))


def zero_measure() -> LatticeDist:
    return LatticeDist(0, np.empty(0))


# -- convolution ---------------------------------------------------------


def convolve(a: LatticeDist, b: LatticeDist, max_window: int = MAX_WINDOW) -> LatticeDist:
    """Convolution of two lattice measures.

    Direct summation below FFT_THRESHOLD output length keeps tiny tail
    masses exact; the FFT path above it carries a ~1e-17 noise floor.
    """
    if a.is_zero or b.is_zero:
        return zero_measure()
    out_len = len(a.weights) + len(b.weights) - 1
    if out_len > max_window:
        raise SizeLimitError(
            "convolution window %d exceeds maximum %d" % (out_len, max_window)
        )
    # singleton factors multiply exactly; keeps point-mass convolution free
    # of FFT noise inside support gaps
    if len(a.weights) == 1:
        w = a.weights[0] * b.weights
    elif len(b.weights) == 1:
        w = b.weights[0] * a.weights
    elif out_len < FFT_THRESHOLD:
        w = np.convolve(a.weights, b.weights)
    else:
        w = fftconvolve(a.weights, b.weights)
    return lattice(a.offset + b.offset, w)


def convolve_exact(a: LatticeDist, b: LatticeDist) -> tuple[int, list[Fraction]]:
    """Exact-rational direct convolution, for oracle use in tests.

    Float weights are taken at their exact binary values. Returns the
    untrimmed (offset, coefficient) pair.
    """
    if a.is_zero or b.is_zero:
        return (0, [])
    fa = [Fraction(float(x)) for x in a.weights]
    fb = [Fraction(float(x)) for x in b.weights]
    out = [Fraction(0)] * (len(fa) + len(fb) - 1)
    for i, x in enumerate(fa):
        if x == 0:
            continue
        for j, y in enumerate(fb):
            out[i + j] += x * y
    return (a.offset + b.offset, out)


def convolution_power(mu: LatticeDist, n: int, max_window: int = MAX_WINDOW) -> LatticeDist:
    """n-fold convolution power by binary exponentiation; n = 0 gives delta_0."""
    if n < 0:
        raise DomainError("convolution power needs n >= 0")
    result = delta(0)
    base = mu
    k = n
    while k:
        if k & 1:
            result = convolve(result, base, max_window)
        k >>= 1
        if k:
            base = convolve(base, base, max_window)
    return result


# -- restriction ---------------------------------------------------------


def split_nonneg(mu: LatticeDist) -> tuple[LatticeDist, LatticeDist]:
    """Split into (part on k < 0, part on k >= 0)."""
    if mu.is_zero:
        return zero_measure(), zero_measure()
    cut = -mu.offset  # first index at lattice point 0
    if cut <= 0:
        return zero_measure(), mu
    if cut >= len(mu.weights):
        return mu, zero_measure()
    neg = lattice(mu.offset, mu.weights[:cut], trim=0.0)
    pos = lattice(0, mu.weights[cut:], trim=0.0)
    return neg, pos


def restrict_nonneg(mu: LatticeDist) -> LatticeDist:
    """Zero out all mass strictly below the origin."""
    return split_nonneg(mu)[1]


# -- transforms ----------------------------------------------------------


class TransformKind(Enum):
    CHARACTERISTIC = "characteristic"
    MGF = "mgf"
    GENERATING = "generating"


@dataclass(frozen=True)
class TransformPoint:
    """One transform evaluation: sum_k mu(k) w^k at the kind's base w."""

    kind: TransformKind
    argument: float
    value: complex


def _transform_base(kind: TransformKind, argument: float) -> complex:
    if kind is TransformKind.CHARACTERISTIC:
        return complex(np.exp(1j * argument))
    if kind is TransformKind.MGF:
        return complex(np.exp(argument))
    if kind is TransformKind.GENERATING:
        return complex(argument)
    raise DomainError("unknown transform kind %r" % (kind,))


def eval_transform(mu: LatticeDist, kind: TransformKind, argument: float) -> TransformPoint:
    """Evaluate sum_k mu(k) w^k with w = e^{it}, e^{lambda}, or s."""
    if isinstance(kind, str):
        kind = TransformKind(kind)
    base = _transform_base(kind, argument)
    if mu.is_zero:
        return TransformPoint(kind, argument, 0j)
    if base == 0:
        if mu.min_index < 0:
            raise DomainError("generating argument 0 with negative support")
        value = complex(mu.mass(0))
        return TransformPoint(kind, argument, value)
    powers = np.power(base, mu.indices().astype(float))
    value = complex(np.dot(mu.weights, powers))
    return TransformPoint(kind, argument, value)


# -- half-line cross-correlation ------------------------------------------


def _pair_sum(mu: LatticeDist, n: int, k_lo: int, k_hi: int) -> float:
    """sum of mu(n-k) mu(k) over k in [k_lo, k_hi], intersected with support."""
    if mu.is_zero:
        return 0.0
    lo = max(k_lo, mu.min_index, n - mu.max_index)
    hi = min(k_hi, mu.max_index, n - mu.min_index)
    if lo > hi:
        return 0.0
    k = np.arange(lo, hi + 1)
    return float(np.dot(mu.weights[k - mu.offset], mu.weights[(n - k) - mu.offset]))


def cross_correlation_direct(mu: LatticeDist, n: int) -> float:
    """sum_{k <= 0} mu(n - k) mu(k), computed by direct summation."""
    if n < 1:
        raise DomainError("cross-correlation is defined for n >= 1")
    return _pair_sum(mu, n, -(1 << 62), 0)


def cross_correlation_lhs(mu: LatticeDist, n: int) -> float:
    """sum_{k <= 0} mu(n - k) mu(k) via the half-line identity.

    Uses (mu*mu)(n) and the interior pair sum over 1 <= k <= n-1; the two
    one-sided tails of the full convolution are equal by symmetry, which is
    what makes the half factor exact. The direct-summation variant above is
    kept as an independent cross-check.
    """
    if n < 1:
        raise DomainError("cross-correlation is defined for n >= 1")
    square = convolve(mu, mu)
    interior = _pair_sum(mu, n, 1, n - 1)
    return 0.5 * (square.mass(n) - interior)


# -- distances -----------------------------------------------------------


def _aligned(a: LatticeDist, b: LatticeDist) -> tuple[np.ndarray, np.ndarray]:
    if a.is_zero and b.is_zero:
        return np.zeros(1), np.zeros(1)
    los = [d.min_index for d in (a, b) if not d.is_zero]
    his = [d.max_index for d in (a, b) if not d.is_zero]
    lo, hi = min(los), max(his)
    va = np.zeros(hi - lo + 1)
    vb = np.zeros(hi - lo + 1)
    if not a.is_zero:
        va[a.min_index - lo : a.max_index - lo + 1] = a.weights
    if not b.is_zero:
        vb[b.min_index - lo : b.max_index - lo + 1] = b.weights
    return va, vb


def tv_distance(a: LatticeDist, b: LatticeDist) -> float:
    """Total-variation distance (half the L1 difference)."""
    va, vb = _aligned(a, b)
    return 0.5 * float(np.abs(va - vb).sum())


def sup_distance(a: LatticeDist, b: LatticeDist) -> float:
    va, vb = _aligned(a, b)
    return float(np.abs(va - vb).max())
