"""Quantized-output penalties for binary input AWGN after synchronization errors.

The binary input is sent as BPSK (+1 for bit 0), Gaussian noise of standard
deviation ``sigma`` is added, and the received value is quantized into 2M
symmetric levels.  Level ``m`` (m = -M..-1, 1..M) collects the received
value ``b * y`` in ``(t_{m-1}, t_m)`` for ``m > 0`` and in
``(-t_{|m|}, -t_{|m|-1})`` for ``m < 0``, with ``t_0 = 0`` and ``t_M = inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc, erfcx, ndtr, ndtri

from .errors import DomainError
from .penalties import BoundResult, composite_bound, penalty_qary_even

LOG2E = 1.0 / math.log(2.0)


def qfunc(x):
    """Right tail of the standard normal distribution."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


def snr_db_to_sigma(snr_db: float) -> float:
    """Unit-energy BPSK: SNR(dB) = 10 log10(1 / sigma^2)."""
    return 10.0 ** (-float(snr_db) / 20.0)


def sigma_to_snr_db(sigma: float) -> float:
    return math.inf if sigma == 0 else -20.0 * math.log10(sigma)


def gauss_mass(lo, hi, mean: float, sigma: float) -> np.ndarray:
    """Mass of N(mean, sigma^2) on (lo, hi), computed on the shorter tail side."""
    a = (np.asarray(lo, dtype=float) - mean) / sigma
    b = (np.asarray(hi, dtype=float) - mean) / sigma
    upper = ndtr(-a) - ndtr(-b)
    lower = ndtr(b) - ndtr(a)
    return np.where(a >= 0, upper, np.where(b <= 0, lower, 1.0 - ndtr(a) - ndtr(-b)))


@dataclass(frozen=True, eq=False)
class QuantizerSpec:
    sigma: float
    levels: int
    kind: str
    thresholds: np.ndarray
    delta: float | None = None

    @property
    def M(self) -> int:
        return self.levels // 2


@dataclass(frozen=True, eq=False)
class LevelProbs:
    """Probabilities ``p_{-M}, ..., p_{-1}, p_1, ..., p_M`` in that order."""

    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 2 or p.size % 2:
            raise DomainError("level probabilities need an even, positive number of entries")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
            raise DomainError(f"level probabilities must be non-negative and sum to 1, got {p.sum()!r}")
        object.__setattr__(self, "probs", p)

    @property
    def M(self) -> int:
        return self.probs.size // 2

    @property
    def positive(self) -> np.ndarray:
        return self.probs[self.M :]

    @property
    def negative(self) -> np.ndarray:
        """``p_{-1}, ..., p_{-M}``."""
        return self.probs[: self.M][::-1]


def _check_sigma(sigma, allow_zero=False):
    sigma = float(sigma)
    if math.isnan(sigma) or sigma < 0 or (sigma == 0 and not allow_zero):
        raise DomainError(f"sigma={sigma!r} must be {'non-negative' if allow_zero else 'positive'}")
    return sigma


def _levels_from_thresholds(t: np.ndarray, sigma: float) -> LevelProbs:
    pos = gauss_mass(t[:-1], t[1:], 1.0, sigma)
    neg = gauss_mass(-t[1:], -t[:-1], 1.0, sigma)
    return LevelProbs(np.concatenate([neg[::-1], pos]))


def uniform_quantizer(sigma: float, M: int, delta: float) -> tuple[QuantizerSpec, LevelProbs]:
    sigma = _check_sigma(sigma)
    if M < 1 or delta <= 0:
        raise DomainError(f"need M >= 1 and delta > 0, got M={M}, delta={delta}")
    # Outermost cells are unbounded so the tail mass beyond (M-1)*delta stays in the distribution.
    t = np.arange(M + 1, dtype=float) * delta
    t[-1] = np.inf
    spec = QuantizerSpec(sigma=sigma, levels=2 * M, kind="uniform", thresholds=t, delta=float(delta))
    return spec, _levels_from_thresholds(t, sigma)


def uniform_level_probs(sigma: float, M: int, delta: float) -> LevelProbs:
    return uniform_quantizer(sigma, M, delta)[1]


def nonuniform_quantizer(sigma: float, M: int) -> tuple[QuantizerSpec, LevelProbs]:
    """Equal-mass quantizer: every positive level carries (1 - Q(1/sigma)) / M."""
    sigma = _check_sigma(sigma)
    if M < 1:
        raise DomainError(f"M={M} must be at least 1")
    tail = qfunc(1.0 / sigma)
    m = np.arange(1, M)
    # P(Y > t_m) = (1 - P) (M - m) / M under N(1, sigma^2).
    t = np.empty(M + 1)
    t[0], t[-1] = 0.0, np.inf
    t[1:M] = 1.0 - sigma * ndtri((1.0 - tail) * (M - m) / M)
    spec = QuantizerSpec(sigma=sigma, levels=2 * M, kind="nonuniform", thresholds=t)
    pos = np.full(M, (1.0 - tail) / M)
    neg = gauss_mass(-t[1:], -t[:-1], 1.0, sigma)
    return spec, LevelProbs(np.concatenate([neg[::-1], pos]))


def finite_penalty(lp: LevelProbs) -> float:
    return penalty_qary_even(lp.probs)


def awgn_penalty_uniform_limit(sigma: float) -> float:
    sigma = _check_sigma(sigma, allow_zero=True)
    tail = 0.0 if sigma == 0 else math.exp(-1.0 / sigma**2)
    return math.log2(math.sqrt(math.e / 2.0) * (1.0 + tail))


def awgn_penalty_nonuniform_limit(sigma: float) -> float:
    sigma = _check_sigma(sigma, allow_zero=True)
    if sigma == 0:
        return 0.0
    tail = qfunc(1.0 / sigma)
    gauss = math.exp(-0.5 / sigma**2)
    first = LOG2E * (2.0 / (math.sqrt(2.0 * math.pi) * sigma) * gauss - 2.0 / sigma**2 * tail)
    # exp(4/sigma^2) Q(3/sigma) overflows for small sigma; use the scaled erfc.
    scaled = 0.5 * erfcx(3.0 / (sigma * math.sqrt(2.0))) * gauss
    return first + math.log2(1.0 + tail + scaled)


AWGN_MODES = ("uniform", "nonuniform", "finite")


def awgn_penalty(sigma: float, mode: str = "nonuniform", M: int | None = None, delta: float | None = None) -> float:
    if mode == "uniform":
        return awgn_penalty_uniform_limit(sigma)
    if mode == "nonuniform":
        return awgn_penalty_nonuniform_limit(sigma)
    if mode == "finite":
        if M is None:
            raise DomainError("finite mode needs the number of positive levels M")
        if _check_sigma(sigma, allow_zero=True) == 0:
            return 0.0
        if delta is None:
            return finite_penalty(nonuniform_quantizer(sigma, M)[1])
        return finite_penalty(uniform_level_probs(sigma, M, delta))
    raise DomainError(f"unknown quantizer mode {mode!r}; expected one of {AWGN_MODES}")


def awgn_bound(
    c_s: float,
    r: float,
    sigma: float,
    mode: str = "nonuniform",
    M: int | None = None,
    delta: float | None = None,
    source: str = "user",
) -> BoundResult:
    penalty = awgn_penalty(sigma, mode, M, delta)
    formula = "awgn_uniform" if mode == "uniform" or (mode == "finite" and delta is not None) else "awgn_nonuniform"
    note = f"sigma={sigma}" + (f" M={M}" if mode == "finite" else "")
    return composite_bound(c_s, r, penalty, formula, source, note)
