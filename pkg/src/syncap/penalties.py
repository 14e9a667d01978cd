"""Closed-form penalty terms and composite capacity lower bounds.

Every composite bound has the shape ``C >= C_s - r * penalty`` where ``C_s``
is a lower bound on the capacity of the synchronization-error-only channel,
``r`` is the asymptotic number of output symbols per input symbol and the
penalty depends only on the memoryless channel that follows.  All logs are
base 2 and ``0 log 0 = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import xlogy

from .channels import DmcMatrix
from .errors import DomainError

FORMULAS = (
    "gallager",
    "ses",
    "seid",
    "ids",
    "quaternary",
    "qary_odd",
    "qary_even",
    "awgn_uniform",
    "awgn_nonuniform",
)

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class BoundResult:
    value: float
    formula: str
    c_s: float | None = None
    c_s_source: str = ""
    r: float | None = None
    penalty: float | None = None
    note: str = ""

    def clamped(self) -> float:
        return max(self.value, 0.0)


def _prob(name, p):
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"{name}={p!r} is not a probability in [0, 1]")
    return p


def _dist(probs, tol=1e-9) -> np.ndarray:
    p = np.asarray(probs, dtype=float).ravel()
    if p.size == 0:
        raise DomainError("empty probability vector")
    if np.any(p < 0) or np.any(~np.isfinite(p)):
        raise DomainError("probabilities must be finite and non-negative")
    if abs(p.sum() - 1.0) > tol:
        raise DomainError(f"probabilities sum to {p.sum()!r}, expected 1")
    return p


def entropy_base2(p: Sequence[float]) -> float:
    p = _dist(p)
    return float(-xlogy(p, p).sum() / _LN2)


def binary_entropy(p: float) -> float:
    p = _prob("p", p)
    return entropy_base2([p, 1.0 - p])


def gallager_bound(p_d: float, p_i: float, p_s: float) -> BoundResult:
    p_d, p_i, p_s = _prob("p_d", p_d), _prob("p_i", p_i), _prob("p_s", p_s)
    if p_d + p_i > 1.0:
        raise DomainError(f"p_d + p_i = {p_d + p_i!r} exceeds 1")
    p_t = 1.0 - p_d - p_i
    p_c, p_f = p_t * (1.0 - p_s), p_t * p_s
    value = 1.0 + float(sum(xlogy(x, x) for x in (p_d, p_i, p_c, p_f))) / _LN2
    return BoundResult(value=value, formula="gallager", note=f"p_d={p_d} p_i={p_i} p_s={p_s}")


def penalty_sub_ers(p_s: float, p_e: float) -> float:
    # (1 - p_e)^2 + 2 p_e^2 is forced by the binomial identity behind the
    # output-entropy bound; printed variants with (1 + p_e)^2 are typos.
    p_s, p_e = _prob("p_s", p_s), _prob("p_e", p_e)
    if p_s + p_e > 1.0 + 1e-12:
        raise DomainError(f"p_s + p_e = {p_s + p_e!r} exceeds 1")
    h = entropy_base2([p_s, p_e, max(0.0, 1.0 - p_s - p_e)])
    return h + math.log2((1.0 - p_e) ** 2 + 2.0 * p_e**2)


def penalty_quaternary(p1: float, p2: float, p3: float, p4: float) -> float:
    p = _dist([p1, p2, p3, p4])
    return entropy_base2(p) + math.log2((p[0] + p[2]) ** 2 + (p[1] + p[3]) ** 2)


def penalty_qary_odd(probs: Sequence[float]) -> float:
    """Penalty for odd q; ``probs`` is ``p_{-(q-1)/2}, ..., p_0, ..., p_{(q-1)/2}``."""
    p = _dist(probs)
    if p.size % 2 == 0:
        raise DomainError(f"odd-q penalty needs an odd number of probabilities, got {p.size}")
    h = p.size // 2
    pairs = p[h + 1 :] + p[:h][::-1]
    return entropy_base2(p) + math.log2(2.0 * p[h] ** 2 + float(np.sum(pairs**2)))


def penalty_qary_even(probs: Sequence[float]) -> float:
    """Penalty for even q; ``probs`` is ``p_{-q/2}, ..., p_{-1}, p_1, ..., p_{q/2}``."""
    p = _dist(probs)
    if p.size % 2:
        raise DomainError(f"even-q penalty needs an even number of probabilities, got {p.size}")
    h = p.size // 2
    pairs = p[h:] + p[:h][::-1]
    return entropy_base2(p) + math.log2(float(np.sum(pairs**2)))


def collision_base(dmc: DmcMatrix) -> float:
    """sum_c W(c|0) * (W(c|0) + W(c|1)): the per-symbol base of the output-entropy bound."""
    w = np.asarray(dmc.rows)
    return float(np.sum(w[0] * (w[0] + w[1])))


def dmc_penalty(dmc: DmcMatrix) -> float:
    """Penalty read off a symmetric matrix directly, column by column."""
    if not dmc.symmetric:
        raise DomainError("penalty formulas require a symmetric matrix")
    return entropy_base2(dmc.rows[0]) + math.log2(collision_base(dmc))


def composite_bound(
    c_s: float,
    r: float,
    penalty: float,
    formula: str,
    source: str = "user",
    note: str = "",
) -> BoundResult:
    if formula not in FORMULAS:
        raise DomainError(f"unknown formula id {formula!r}")
    if r < 0:
        raise DomainError(f"r={r!r} must be non-negative")
    return BoundResult(
        value=float(c_s) - float(r) * float(penalty),
        formula=formula,
        c_s=float(c_s),
        c_s_source=source,
        r=float(r),
        penalty=float(penalty),
        note=note,
    )


def _check_cs(c_s):
    c_s = float(c_s)
    if not 0.0 <= c_s <= 1.0:
        raise DomainError(f"c_s={c_s!r} must lie in [0, 1]")
    return c_s


def _insdel_rate(p_d, p_i):
    p_d, p_i = _prob("p_d", p_d), _prob("p_i", p_i)
    if p_d + p_i > 1.0:
        raise DomainError(f"p_d + p_i = {p_d + p_i!r} exceeds 1")
    return 1.0 - p_d + p_i


def ses_bound(c_s: float, r: float, p_s: float, p_e: float, source: str = "user") -> BoundResult:
    return composite_bound(_check_cs(c_s), r, penalty_sub_ers(p_s, p_e), "ses", source)


def seid_bound(c_id: float, p_d: float, p_i: float, p_s: float, p_e: float, source: str = "user") -> BoundResult:
    r = _insdel_rate(p_d, p_i)
    return composite_bound(_check_cs(c_id), r, penalty_sub_ers(p_s, p_e), "seid", source)


def ids_bound(c_id: float, p_d: float, p_i: float, p_s: float, source: str = "user") -> BoundResult:
    r = _insdel_rate(p_d, p_i)
    return composite_bound(_check_cs(c_id), r, binary_entropy(p_s), "ids", source)


def quaternary_bound(c_s: float, r: float, p1, p2, p3, p4, source: str = "user") -> BoundResult:
    return composite_bound(_check_cs(c_s), r, penalty_quaternary(p1, p2, p3, p4), "quaternary", source)


def qary_bound(c_s: float, r: float, probs: Sequence[float], source: str = "user") -> BoundResult:
    """Odd- or even-q bound, chosen by the number of probabilities."""
    n = len(probs)
    if n % 2:
        return composite_bound(_check_cs(c_s), r, penalty_qary_odd(probs), "qary_odd", source)
    return composite_bound(_check_cs(c_s), r, penalty_qary_even(probs), "qary_even", source)
