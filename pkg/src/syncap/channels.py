"""Memoryless synchronization-error kernels and binary-input symmetric DMCs.

A :class:`SyncKernel` maps each input bit to a finite distribution over
binary output strings (the empty string is a deletion).  A
:class:`DmcMatrix` is a 2 x q memoryless transition matrix whose columns
carry integer labels; row 0 is input bit 0, which is sent as the BPSK
amplitude +1, row 1 is input bit 1 (amplitude -1).  Columns are always
stored in ascending label order, so for a mirror-symmetric channel
``P(label k | bit 0) = p_k`` and ``P(label k | bit 1) = p_{-k}``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, ValidationError

BUILD_TOL = 1e-12
USER_TOL = 1e-9


def _check_prob(name: str, p: float) -> float:
    p = float(p)
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise DomainError(f"{name}={p!r} is not a probability in [0, 1]")
    return p


def _check_binary(s: str) -> str:
    if any(c not in "01" for c in s):
        raise ValidationError(f"output string {s!r} is not over the binary alphabet")
    return s


@dataclass(frozen=True)
class SyncKernel:
    """Per-symbol law of a memoryless synchronization-error channel.

    ``entries[b]`` is a tuple of ``(output_string, probability)`` pairs for
    input bit ``b``.  Use :meth:`from_table` rather than the raw constructor
    when the entries come from outside the package.
    """

    entries: Mapping[int, tuple[tuple[str, float], ...]]
    l_max: int

    @classmethod
    def from_table(cls, rows: Iterable[tuple[int, str, float]], tol: float = BUILD_TOL) -> "SyncKernel":
        acc: dict[int, dict[str, float]] = {0: {}, 1: {}}
        for bit, out, p in rows:
            bit = int(bit)
            if bit not in (0, 1):
                raise ValidationError(f"input symbol {bit!r} is not a bit")
            p = float(p)
            if p < 0 or p > 1 or math.isnan(p):
                raise ValidationError(f"probability {p!r} for input {bit}, output {out!r} is out of range")
            out = _check_binary(str(out))
            acc[bit][out] = acc[bit].get(out, 0.0) + p
        entries = {}
        l_max = 0
        for bit in (0, 1):
            total = sum(acc[bit].values())
            if abs(total - 1.0) > tol:
                raise ValidationError(
                    f"probabilities for input bit {bit} sum to {total!r}, expected 1 (tol {tol:g})"
                )
            kept = tuple(sorted(((s, p) for s, p in acc[bit].items() if p > 0), key=lambda e: (len(e[0]), e[0])))
            entries[bit] = kept
            if kept:
                l_max = max(l_max, max(len(s) for s, _ in kept))
        return cls(entries=entries, l_max=l_max)

    def prob(self, bit: int, out: str) -> float:
        for s, p in self.entries[bit]:
            if s == out:
                return p
        return 0.0

    def as_dict(self) -> dict[int, dict[str, float]]:
        return {b: dict(self.entries[b]) for b in (0, 1)}

    def to_json(self) -> dict:
        return {"inputs": {str(b): [[s, p] for s, p in self.entries[b]] for b in (0, 1)}}

    @classmethod
    def from_json(cls, obj: Mapping) -> "SyncKernel":
        try:
            inputs = obj["inputs"]
            rows = [(int(b), s, p) for b, lst in inputs.items() for s, p in lst]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed kernel JSON: {exc}") from exc
        return cls.from_table(rows, tol=USER_TOL)


@dataclass(frozen=True, eq=False)
class DmcMatrix:
    """Binary-input q-ary-output memoryless channel."""

    q: int
    rows: np.ndarray
    labels: tuple[int, ...]
    symmetric: bool

    def __post_init__(self):
        self.rows.setflags(write=False)

    @classmethod
    def build(cls, rows, labels: Sequence[int] | None = None, tol: float = BUILD_TOL) -> "DmcMatrix":
        w = np.array(rows, dtype=float)
        if w.ndim != 2 or w.shape[0] != 2 or w.shape[1] < 2:
            raise ValidationError(f"transition matrix must be 2 x q with q >= 2, got shape {w.shape}")
        q = w.shape[1]
        if np.any(w < 0) or np.any(w > 1) or np.any(np.isnan(w)):
            raise ValidationError("transition probabilities must lie in [0, 1]")
        sums = w.sum(axis=1)
        for b in (0, 1):
            if abs(sums[b] - 1.0) > tol:
                raise ValidationError(f"row for input bit {b} sums to {sums[b]!r}, expected 1")
        labels = tuple(int(k) for k in (labels if labels is not None else default_labels(q)))
        if len(labels) != q or len(set(labels)) != q:
            raise ValidationError(f"need {q} distinct labels, got {labels}")
        order = np.argsort(labels, kind="stable")
        w = w[:, order]
        labels = tuple(labels[i] for i in order)
        return cls(q=q, rows=w, labels=labels, symmetric=_gallager_symmetric(w))

    def column(self, label: int) -> int:
        return self.labels.index(label)

    def mirror_probs(self) -> dict[int, float]:
        """Return ``{k: p_k}`` read from the bit-0 row (amplitude +1)."""
        return {k: float(self.rows[0, i]) for i, k in enumerate(self.labels)}

    def to_json(self) -> dict:
        return {"q": self.q, "rows": self.rows.tolist(), "labels": list(self.labels)}

    @classmethod
    def from_json(cls, obj: Mapping) -> "DmcMatrix":
        try:
            q = int(obj["q"])
            rows = obj["rows"]
            labels = obj.get("labels")
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed matrix JSON: {exc}") from exc
        m = cls.build(rows, labels, tol=USER_TOL)
        if m.q != q:
            raise ValidationError(f"declared q={q} but rows have {m.q} columns")
        return m


def default_labels(q: int) -> tuple[int, ...]:
    """Output labels for a q-ary channel: -(q-1)/2..(q-1)/2 for odd q, skipping 0 for even q."""
    if q < 2:
        raise DomainError(f"q={q} must be at least 2")
    if q % 2:
        h = (q - 1) // 2
        return tuple(range(-h, h + 1))
    h = q // 2
    return tuple(k for k in range(-h, h + 1) if k != 0)


def _gallager_symmetric(w: np.ndarray, tol: float = BUILD_TOL) -> bool:
    # Binary input: a column (a, a) forms its own block; a column (a, b) with
    # a != b needs a partner column (b, a).
    cols = [tuple(c) for c in w.T]
    used = [False] * len(cols)
    for i, (a, b) in enumerate(cols):
        if used[i]:
            continue
        used[i] = True
        if abs(a - b) <= tol:
            continue
        for j in range(i + 1, len(cols)):
            c, d = cols[j]
            if not used[j] and abs(c - b) <= tol and abs(d - a) <= tol:
                used[j] = True
                break
        else:
            return False
    return True


def check_symmetry(m: DmcMatrix) -> bool:
    """True iff the matrix is symmetric in Gallager's sense."""
    return _gallager_symmetric(np.asarray(m.rows))


def deletion_kernel(p_d: float) -> SyncKernel:
    p_d = _check_prob("p_d", p_d)
    return SyncKernel.from_table([(b, "", p_d) for b in (0, 1)] + [(b, str(b), 1.0 - p_d) for b in (0, 1)])


def gallager_kernel(p_d: float, p_i: float) -> SyncKernel:
    """Deletion w.p. p_d, replacement by two uniform random bits w.p. p_i."""
    p_d = _check_prob("p_d", p_d)
    p_i = _check_prob("p_i", p_i)
    if p_d + p_i > 1.0 + BUILD_TOL:
        raise DomainError(f"p_d + p_i = {p_d + p_i!r} exceeds 1")
    rows = []
    for b in (0, 1):
        rows.append((b, "", p_d))
        rows.append((b, str(b), max(0.0, 1.0 - p_d - p_i)))
        rows.extend((b, s, p_i / 4) for s in ("00", "01", "10", "11"))
    return SyncKernel.from_table(rows)


def custom_kernel(table: Iterable[tuple[int, str, float]]) -> SyncKernel:
    return SyncKernel.from_table(table, tol=USER_TOL)


def expected_output_rate(k: SyncKernel) -> float:
    """Mean output length per input symbol under equiprobable input bits."""
    return 0.5 * sum(len(s) * p for b in (0, 1) for s, p in k.entries[b])


def length_is_input_independent(k: SyncKernel, tol: float = BUILD_TOL) -> bool:
    def law(b):
        out: dict[int, float] = {}
        for s, p in k.entries[b]:
            out[len(s)] = out.get(len(s), 0.0) + p
        return out

    a, b = law(0), law(1)
    return all(abs(a.get(L, 0.0) - b.get(L, 0.0)) <= tol for L in set(a) | set(b))


def sub_ers_dmc(p_s: float, p_e: float) -> DmcMatrix:
    """Substitution/erasure channel: label -1 flip, 0 erasure, +1 correct."""
    p_s = _check_prob("p_s", p_s)
    p_e = _check_prob("p_e", p_e)
    if p_s + p_e > 1.0 + BUILD_TOL:
        raise DomainError(f"p_s + p_e = {p_s + p_e!r} exceeds 1")
    return qary_dmc([p_s, p_e, max(0.0, 1.0 - p_s - p_e)], parity="odd")


def bsc_dmc(p: float) -> DmcMatrix:
    p = _check_prob("p", p)
    return qary_dmc([p, 1.0 - p], parity="even")


def qary_dmc(probs: Sequence[float] | Mapping[int, float], parity: str | None = None) -> DmcMatrix:
    """Mirror-symmetric channel from ``p_k`` listed in ascending label order.

    ``probs`` may also be a mapping ``{label: p_k}``.  Row 0 (amplitude +1)
    is ``p_k`` and row 1 is ``p_{-k}``.
    """
    if isinstance(probs, Mapping):
        q = len(probs)
        labels = default_labels(q)
        if set(probs) != set(labels):
            raise ValidationError(f"labels {sorted(probs)} do not match the {q}-ary convention {labels}")
        p = np.array([float(probs[k]) for k in labels])
    else:
        p = np.array([float(x) for x in probs])
        q = p.size
    if parity is None:
        parity = "odd" if q % 2 else "even"
    if parity not in ("odd", "even"):
        raise ValidationError(f"parity must be 'odd' or 'even', got {parity!r}")
    if (q % 2 == 1) != (parity == "odd") or q < 2:
        raise ValidationError(f"{q} probabilities do not fit the {parity}-q convention")
    if np.any(p < 0) or abs(p.sum() - 1.0) > USER_TOL:
        raise ValidationError(f"probabilities must be non-negative and sum to 1, got sum {p.sum()!r}")
    return DmcMatrix.build(np.vstack([p, p[::-1]]), default_labels(q), tol=USER_TOL)


def quaternary_dmc(p1: float, p2: float, p3: float, p4: float) -> DmcMatrix:
    """Quaternary channel with outputs 0-, 0+, 1-, 1+ (probabilities given input 0).

    Labels: +1 is 0-, +2 is 0+, -1 is 1-, -2 is 1+, so the column pairs
    are (p1, p3) and (p2, p4).
    """
    return qary_dmc({-2: p4, -1: p3, 1: p1, 2: p2})


def identity_dmc() -> DmcMatrix:
    return bsc_dmc(0.0)


def label_to_bit(label: int) -> str:
    """Binary symbol for a binary-output label (+1 is bit 0)."""
    return "0" if label > 0 else "1"


def compose_kernel(k: SyncKernel, dmc: DmcMatrix) -> SyncKernel:
    """Apply a binary-output DMC to every output symbol of ``k``."""
    if dmc.q != 2:
        raise DomainError("only binary-output matrices compose into a SyncKernel")
    bits = [label_to_bit(lab) for lab in dmc.labels]
    rows = []
    for b in (0, 1):
        for s, p in k.entries[b]:
            partial = {"": p}
            for sym in s:
                r = dmc.rows[int(sym)]
                nxt: dict[str, float] = {}
                for prefix, pp in partial.items():
                    for c, bit in enumerate(bits):
                        if r[c] > 0:
                            nxt[prefix + bit] = nxt.get(prefix + bit, 0.0) + pp * r[c]
                partial = nxt
            rows.extend((b, out, pp) for out, pp in partial.items())
    return SyncKernel.from_table(rows)


@dataclass(frozen=True)
class DecompositionPair:
    alpha: float
    beta: float
    rho: float
    first: SyncKernel
    second: DmcMatrix
    composed: SyncKernel
    max_error: float


def _check_alpha_beta(alpha: float, beta: float) -> tuple[float, float]:
    alpha = _check_prob("alpha", alpha)
    beta = _check_prob("beta", beta)
    if beta > alpha or alpha + beta > 0.5 or alpha + beta <= 0:
        raise DomainError(f"need 0 <= beta <= alpha and 0 < alpha + beta <= 1/2, got alpha={alpha}, beta={beta}")
    return alpha, beta


def hypothetical_kernel(alpha: float, beta: float) -> SyncKernel:
    """The closed-form two-parameter channel that the decomposition reproduces."""
    alpha, beta = _check_alpha_beta(alpha, beta)
    s = math.sqrt((alpha - beta) / (alpha + beta))
    single = 0.5 - (alpha + beta)
    rows = []
    for b in (0, 1):
        same, other = str(b), str(1 - b)
        rows += [
            (b, same, single * (1 + s)),
            (b, other, single * (1 - s)),
            (b, "00", alpha),
            (b, "01", beta),
            (b, "10", beta),
            (b, "11", alpha),
        ]
    return SyncKernel.from_table(rows)


def kernel_distance(a: SyncKernel, b: SyncKernel) -> float:
    """Largest entrywise absolute difference between two kernels."""
    worst = 0.0
    for bit in (0, 1):
        da, db = dict(a.entries[bit]), dict(b.entries[bit])
        for s in set(da) | set(db):
            worst = max(worst, abs(da.get(s, 0.0) - db.get(s, 0.0)))
    return worst


def decompose_example(alpha: float, beta: float) -> DecompositionPair:
    """Split the hypothetical channel into a repetition-style kernel and a BSC."""
    alpha, beta = _check_alpha_beta(alpha, beta)
    rho = 0.5 - 0.5 * math.sqrt((alpha - beta) / (alpha + beta))
    t = alpha + beta
    first = SyncKernel.from_table(
        [(b, str(b), 1 - 2 * t) for b in (0, 1)]
        + [(b, s, t) for b in (0, 1) for s in ("00", "11")]
    )
    second = bsc_dmc(rho)
    composed = compose_kernel(first, second)
    err = kernel_distance(composed, hypothetical_kernel(alpha, beta))
    if err > BUILD_TOL:
        raise ValidationError(f"composition deviates from the closed form by {err:.3e}")
    return DecompositionPair(alpha, beta, rho, first, second, composed, err)


def load_channel_file(path: str | Path) -> SyncKernel | DmcMatrix:
    """Read a kernel (``{"inputs": ...}``) or matrix (``{"q": ...}``) JSON file."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    if isinstance(obj, dict) and "inputs" in obj:
        return SyncKernel.from_json(obj)
    if isinstance(obj, dict) and "q" in obj:
        return DmcMatrix.from_json(obj)
    raise ValidationError(f"{path}: expected a kernel with 'inputs' or a matrix with 'q'")


def save_channel_file(obj: SyncKernel | DmcMatrix, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj.to_json(), indent=2) + "\n", encoding="utf-8")
