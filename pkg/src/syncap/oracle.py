"""Exact small-blocklength verification of the entropy inequalities.

A :class:`ChannelLaw` stores, for every output length ``m``, a dense matrix
``blocks[m]`` of shape ``(2**n, A**m)``: row ``x`` is the input word read
as a big-endian integer, column ``y`` the output string read as a
big-endian base-``A`` integer.  Passing a synchronization law through a
memoryless DMC never changes lengths, so the cascade is applied block by
block, one symbol axis at a time.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.special import xlogy

from . import channels as ch
from .channels import DmcMatrix, SyncKernel
from .errors import BudgetError, ConvergenceError, DomainError
from .penalties import collision_base, dmc_penalty, entropy_base2

SUPPORT_EPS = 1e-15
SLACK_TOL = 1e-10
DEFAULT_MAX_CELLS = 5_000_000
_LN2 = math.log(2.0)


def max_cells() -> int:
    """Enumeration budget in matrix cells; ``SYNCAP_BUDGET`` overrides the default."""
    env = os.environ.get("SYNCAP_BUDGET")
    if env:
        try:
            return int(float(env))
        except ValueError as exc:
            raise DomainError(f"SYNCAP_BUDGET={env!r} is not a number") from exc
    return DEFAULT_MAX_CELLS


def _h(p: np.ndarray, axis=None):
    return -xlogy(p, p).sum(axis=axis) / _LN2


@dataclass(eq=False)
class ChannelLaw:
    n: int
    alphabet: int
    blocks: dict[int, np.ndarray]

    @property
    def n_inputs(self) -> int:
        return 1 << self.n

    def cells(self) -> int:
        return sum(b.size for b in self.blocks.values())

    def row_sums(self) -> np.ndarray:
        return sum(b.sum(axis=1) for b in self.blocks.values())

    def table(self, x: str | int, symbols: Sequence[str] | None = None) -> dict[str, float]:
        """Output distribution of one input word as ``{string: probability}``."""
        if isinstance(x, str):
            if len(x) != self.n:
                raise DomainError(f"input word {x!r} does not have length {self.n}")
            x = int(x, 2) if x else 0
        symbols = symbols or [str(i) for i in range(self.alphabet)]
        out = {}
        for m, blk in sorted(self.blocks.items()):
            for y in np.flatnonzero(blk[x]):
                out[_decode(int(y), m, self.alphabet, symbols)] = float(blk[x, y])
        return out


def _decode(code: int, m: int, A: int, symbols: Sequence[str]) -> str:
    digits = []
    for _ in range(m):
        code, d = divmod(code, A)
        digits.append(symbols[d])
    return "".join(reversed(digits))


def _law_cells(n: int, A: int, lmax: int) -> int:
    return (1 << n) * sum(A**m for m in range(n * lmax + 1))


def enumerate_law(k: SyncKernel, n: int, budget: int | None = None) -> ChannelLaw:
    """Exact law of ``n`` uses of the kernel, built position by position."""
    if n < 1:
        raise DomainError(f"blocklength n={n} must be positive")
    budget = max_cells() if budget is None else budget
    need = _law_cells(n, 2, k.l_max)
    if need > budget:
        raise BudgetError(f"n={n} needs {need} cells, over the enumeration budget of {budget} (SYNCAP_BUDGET)")
    ext = [[(len(s), int(s, 2) if s else 0, p) for s, p in k.entries[b]] for b in (0, 1)]
    blocks = {0: np.ones((1, 1))}
    for _ in range(n):
        rows = next(iter(blocks.values())).shape[0]
        new: dict[int, np.ndarray] = {}
        for m, blk in blocks.items():
            for b in (0, 1):
                for L, code, p in ext[b]:
                    tgt = new.get(m + L)
                    if tgt is None:
                        tgt = new[m + L] = np.zeros((2 * rows, 2 ** (m + L)))
                    view = tgt.reshape(rows, 2, 2**m, 2**L)
                    view[:, b, :, code] += p * blk
        blocks = new
    return ChannelLaw(n=n, alphabet=2, blocks=dict(sorted(blocks.items())))


def apply_dmc(block: np.ndarray, w: np.ndarray, m: int) -> np.ndarray:
    """Push the rows of a length-``m`` block through ``m`` independent uses of ``w``."""
    R = block.shape[0]
    if m == 0:
        return block.copy()
    x = block.reshape((R,) + (w.shape[0],) * m)
    for _ in range(m):
        x = np.tensordot(x, w, axes=([1], [0]))
    return x.reshape(R, w.shape[1] ** m)


def cascade_law(cl: ChannelLaw, dmc: DmcMatrix, budget: int | None = None) -> ChannelLaw:
    if cl.alphabet != 2:
        raise DomainError("the DMC needs binary inputs but the law's outputs are not binary")
    budget = max_cells() if budget is None else budget
    need = cl.n_inputs * sum(dmc.q**m for m in cl.blocks)
    if need > budget:
        raise BudgetError(f"cascaded law needs {need} cells, over the budget of {budget} (SYNCAP_BUDGET)")
    w = np.asarray(dmc.rows)
    return ChannelLaw(cl.n, dmc.q, {m: apply_dmc(b, w, m) for m, b in cl.blocks.items()})


def uniform_input(n: int) -> np.ndarray:
    return np.full(1 << n, 1.0 / (1 << n))


def product_input(n: int, p_one: float) -> np.ndarray:
    """i.i.d. Bernoulli(p_one) input bits."""
    ones = np.array([bin(x).count("1") for x in range(1 << n)])
    return p_one**ones * (1 - p_one) ** (n - ones)


def _input(cl_n: int, px) -> np.ndarray:
    px = uniform_input(cl_n) if px is None else np.asarray(px, dtype=float)
    if px.shape != (1 << cl_n,):
        raise DomainError(f"input distribution has shape {px.shape}, expected ({1 << cl_n},)")
    if np.any(px < 0) or abs(px.sum() - 1.0) > 1e-9:
        raise DomainError("input distribution must be non-negative and sum to 1")
    return px


@dataclass
class JointStats:
    h_y: float
    h_y_given_x: float
    mutual_info: float
    e_m: float
    p_m: dict[int, float] = field(default_factory=dict)


def joint_stats(cl: ChannelLaw, input_dist=None) -> JointStats:
    px = _input(cl.n, input_dist)
    h_y = h_yx = e_m = 0.0
    p_m = {}
    for m, blk in cl.blocks.items():
        py = px @ blk
        p_m[m] = float(py.sum())
        h_y += float(_h(py))
        h_yx += float(px @ _h(blk, axis=1))
        e_m += m * p_m[m]
    return JointStats(h_y, h_yx, h_y - h_yx, e_m, p_m)


def _cascade_stats(cl: ChannelLaw, dmc: DmcMatrix, px: np.ndarray, chunk_cells: int = 1 << 22) -> JointStats:
    """Joint statistics of the cascaded law without materializing it."""
    w = np.asarray(dmc.rows)
    h_y = h_yx = e_m = 0.0
    p_m = {}
    for m, blk in cl.blocks.items():
        py = apply_dmc((px @ blk)[None, :], w, m)[0]
        p_m[m] = float(py.sum())
        h_y += float(_h(py))
        e_m += m * p_m[m]
        step = max(1, chunk_cells // dmc.q**m)
        for lo in range(0, blk.shape[0], step):
            rows = apply_dmc(blk[lo : lo + step], w, m)
            h_yx += float(px[lo : lo + step] @ _h(rows, axis=1))
    return JointStats(h_y, h_yx, h_y - h_yx, e_m, p_m)


def cascade_stats(cl: ChannelLaw, dmc: DmcMatrix, input_dist=None) -> JointStats:
    return _cascade_stats(cl, dmc, _input(cl.n, input_dist))


def lemma1_terms(cl_pre: ChannelLaw, dmc: DmcMatrix, input_dist=None) -> dict[int, float]:
    """Per-length value of sum_{y^q} sum_{y: p(y)>0} p(y^q | y, m) p(y^q | m)."""
    px = _input(cl_pre.n, input_dist)
    w = np.asarray(dmc.rows)
    out = {}
    for m, blk in cl_pre.blocks.items():
        py = px @ blk
        pm = py.sum()
        if pm <= 0:
            continue
        support = (py > SUPPORT_EPS).astype(float)
        pyq = apply_dmc((py / pm)[None, :], w, m)[0]
        reach = apply_dmc(support[None, :], w, m)[0]
        out[m] = float(pyq @ reach)
    return out


def lemma1_rhs(cl_pre: ChannelLaw, dmc: DmcMatrix, input_dist=None) -> float:
    """E_M log2 of the double sum; H(Y^q) >= H(Y) minus this value."""
    px = _input(cl_pre.n, input_dist)
    terms = lemma1_terms(cl_pre, dmc, px)
    pm = {m: float((px @ b).sum()) for m, b in cl_pre.blocks.items()}
    return float(sum(pm[m] * math.log2(s) for m, s in terms.items()))


def _cond_entropy_given_y(cl: ChannelLaw, dmc: DmcMatrix, px: np.ndarray) -> float:
    # H(Y^q | Y) = sum_y p(y) * sum_t H(W(.|y_t)), exact for any matrix.
    h_row = _h(np.asarray(dmc.rows), axis=1)
    total = 0.0
    for m, blk in cl.blocks.items():
        if m == 0:
            continue
        py = px @ blk
        ones = np.array([bin(y).count("1") for y in range(2**m)])
        total += float(py @ ((m - ones) * h_row[0] + ones * h_row[1]))
    return total


@dataclass
class Report:
    check: str
    config: dict
    lhs: float
    rhs: float
    slack: float
    passed: bool
    tol: float = SLACK_TOL

    def as_dict(self) -> dict:
        return {
            "check": self.check,
            "config": self.config,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "pass": self.passed,
        }


def _ineq(check, config, lhs, rhs, tol=SLACK_TOL) -> Report:
    slack = lhs - rhs
    return Report(check, config, lhs, rhs, slack, bool(slack >= -tol), tol)


def _eq(check, config, lhs, rhs, tol) -> Report:
    slack = abs(lhs - rhs)
    return Report(check, config, lhs, rhs, slack, bool(slack <= tol), tol)


def verify_lemma1(cl_pre: ChannelLaw, dmc: DmcMatrix, input_dist=None, config=None) -> Report:
    """H(Y^q) >= H(Y) - lemma1_rhs."""
    px = _input(cl_pre.n, input_dist)
    pre = joint_stats(cl_pre, px)
    post = _cascade_stats(cl_pre, dmc, px)
    return _ineq("lemma1", config or {}, post.h_y, pre.h_y - lemma1_rhs(cl_pre, dmc, px))


def verify_lemma2(cl_pre: ChannelLaw, dmc: DmcMatrix, input_dist=None, config=None) -> Report:
    """H(Y^q | X) <= H(Y | X) + H(Y^q | Y); for symmetric W the last term is E{M} H(row)."""
    px = _input(cl_pre.n, input_dist)
    pre = joint_stats(cl_pre, px)
    post = _cascade_stats(cl_pre, dmc, px)
    rhs = pre.h_y_given_x + _cond_entropy_given_y(cl_pre, dmc, px)
    # lhs <= rhs, reported as rhs - lhs >= 0
    return _ineq("lemma2", config or {}, rhs, post.h_y_given_x)


def verify_combined(cl_pre: ChannelLaw, dmc: DmcMatrix, input_dist=None, config=None) -> Report:
    px = _input(cl_pre.n, input_dist)
    pre = joint_stats(cl_pre, px)
    post = _cascade_stats(cl_pre, dmc, px)
    rhs = pre.mutual_info - lemma1_rhs(cl_pre, dmc, px) - _cond_entropy_given_y(cl_pre, dmc, px)
    return _ineq("combined", config or {}, post.mutual_info, rhs)


def verify_lemma1_equality(cl_pre: ChannelLaw, dmc: DmcMatrix, input_dist=None, config=None, tol=1e-9) -> Report:
    """When every m-tuple is reachable the output-entropy term is exactly E{M} log2(base)."""
    px = _input(cl_pre.n, input_dist)
    full = all(np.all(px @ b > SUPPORT_EPS) for b in cl_pre.blocks.values())
    if not full:
        raise DomainError("equality only holds when every output m-tuple has positive probability")
    e_m = joint_stats(cl_pre, px).e_m
    return _eq("lemma1-equality", config or {}, lemma1_rhs(cl_pre, dmc, px), e_m * math.log2(collision_base(dmc)), tol)


def verify_proposition1(c_pairs: Iterable[tuple[float, float, float]], config=None) -> list[Report]:
    """Check I_composite >= I_base + A for each supplied triple."""
    out = []
    for i, (i_comp, i_base, a) in enumerate(c_pairs):
        cfg = dict(config or {}, index=i, A=a)
        out.append(_ineq("proposition1", cfg, i_comp, i_base + a))
    return out


def proposition1_triple(k: SyncKernel, dmc: DmcMatrix, n: int, input_dist=None) -> tuple[float, float, float]:
    """(I(X;Y^q), I(X;Y), -n r penalty) for one kernel, matrix and blocklength."""
    cl = enumerate_law(k, n)
    px = _input(n, input_dist)
    pre = joint_stats(cl, px)
    post = _cascade_stats(cl, dmc, px)
    a = -n * ch.expected_output_rate(k) * dmc_penalty(dmc)
    return post.mutual_info, pre.mutual_info, a


def closed_form_base(dmc: DmcMatrix) -> float:
    """2 p_0^2 + sum_k (p_k + p_-k)^2 from the labelled mirror probabilities."""
    if not dmc.symmetric:
        raise DomainError("closed form needs a symmetric matrix")
    p = dmc.mirror_probs()
    total = 2.0 * p.get(0, 0.0) ** 2
    for k in p:
        if k > 0:
            if -k not in p:
                raise DomainError(f"label {k} has no mirror label {-k}")
            total += (p[k] + p[-k]) ** 2
    return total


def verify_appendix_sums(dmc: DmcMatrix, m: int, y_dist=None, seed: int = 0, tol: float = 1e-9) -> Report:
    """Brute-force sum over all m-tuples against the closed-form base to the m-th power."""
    if m < 1 or m > 8 or dmc.q > 6:
        raise BudgetError(f"brute-force collision sums are limited to m <= 8 and q <= 6 (got m={m}, q={dmc.q})")
    if 2**m * dmc.q**m > 1 << 22:
        raise BudgetError(f"explicit {2**m} x {dmc.q**m} transition matrix is over the brute-force budget")
    if y_dist is None:
        y_dist = np.random.default_rng(seed).dirichlet(np.ones(2**m))
    y_dist = np.asarray(y_dist, dtype=float)
    if y_dist.shape != (2**m,) or np.any(y_dist <= 0):
        raise DomainError("the y-distribution must have full support over all m-tuples")
    w = np.asarray(dmc.rows)
    wm = np.ones((1, 1))
    for _ in range(m):
        wm = np.kron(wm, w)
    p_yq = y_dist @ wm
    reach = wm.sum(axis=0)
    brute = float(p_yq @ reach)
    closed = closed_form_base(dmc) ** m
    return _eq("appendix-sums", {"q": dmc.q, "m": m, "labels": list(dmc.labels)}, brute, closed, tol)


def _mutual_information(px: np.ndarray, w: np.ndarray) -> float:
    py = px @ w
    return float(_h(py) - px @ _h(w, axis=1))


def baa_capacity(dmc: DmcMatrix | np.ndarray, tol: float = 1e-9, max_iter: int = 100_000) -> float:
    """Blahut-Arimoto capacity in bits, stopped on the upper/lower bracket."""
    w = np.asarray(dmc.rows if isinstance(dmc, DmcMatrix) else dmc, dtype=float)
    if tol <= 0:
        raise DomainError(f"tol={tol!r} must be positive")
    px = np.full(w.shape[0], 1.0 / w.shape[0])
    logw = np.log(np.where(w > 0, w, 1.0))
    for _ in range(max_iter):
        py = px @ w
        logpy = np.log(np.where(py > 0, py, 1.0))
        d = np.sum(w * (logw - logpy), axis=1)  # D(W(.|x) || p_y), nats
        lower = float(px @ d)  # I(p_x)
        upper = float(d.max())  # Csiszar: capacity <= max_x D
        if (upper - lower) / _LN2 < tol:
            return lower / _LN2
        px = px * np.exp(d - upper)
        px /= px.sum()
    raise ConvergenceError(f"Blahut-Arimoto did not reach tol={tol:g} in {max_iter} iterations")


def mc_estimate_rate(
    k: SyncKernel,
    n: int,
    trials: int,
    seed: int,
    workers: int = 1,
) -> tuple[float, float]:
    """Monte-Carlo mean and standard error of M/n under i.u.d. inputs.

    Deterministic for a fixed ``seed`` and ``workers``; each worker draws from
    its own generator spawned from the master seed.
    """
    if trials < 1 or n < 1 or workers < 1:
        raise DomainError("trials, n and workers must all be positive")
    lengths = [np.array([len(s) for s, _ in k.entries[b]], dtype=np.int64) for b in (0, 1)]
    probs = [np.array([p for _, p in k.entries[b]]) for b in (0, 1)]
    cdfs = [np.cumsum(p) / p.sum() for p in probs]
    children = np.random.SeedSequence(seed).spawn(workers)
    shares = [trials // workers + (i < trials % workers) for i in range(workers)]

    def run(i: int) -> np.ndarray:
        rng = np.random.default_rng(children[i])
        out = np.empty(shares[i])
        per = max(1, (1 << 22) // n)
        for lo in range(0, shares[i], per):
            t = min(per, shares[i] - lo)
            bits = rng.integers(0, 2, size=(t, n))
            u = rng.random((t, n))
            m = np.zeros(t, dtype=np.int64)
            for b in (0, 1):
                idx = np.minimum(np.searchsorted(cdfs[b], u, side="right"), lengths[b].size - 1)
                m += np.where(bits == b, lengths[b][idx], 0).sum(axis=1)
            out[lo : lo + t] = m / n
        return out

    if workers == 1:
        samples = run(0)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = np.concatenate(list(pool.map(run, range(workers))))
    mean = float(samples.mean())
    stderr = float(samples.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
    return mean, stderr


# --- default verification grid -------------------------------------------------


def default_kernels() -> list[tuple[str, SyncKernel]]:
    return [
        ("deletion(0.05)", ch.deletion_kernel(0.05)),
        ("deletion(0.1)", ch.deletion_kernel(0.1)),
        ("deletion(0.2)", ch.deletion_kernel(0.2)),
        ("gallager(0.05,0.05)", ch.gallager_kernel(0.05, 0.05)),
    ]


def default_dmcs() -> list[tuple[str, DmcMatrix]]:
    return [
        ("sub_ers(0.01,0)", ch.sub_ers_dmc(0.01, 0.0)),
        ("sub_ers(0.05,0.05)", ch.sub_ers_dmc(0.05, 0.05)),
        ("sub_ers(0.05,0.1)", ch.sub_ers_dmc(0.05, 0.1)),
        ("sub_ers(0,0.2)", ch.sub_ers_dmc(0.0, 0.2)),
        ("quaternary(0.6,0.2,0.15,0.05)", ch.quaternary_dmc(0.6, 0.2, 0.15, 0.05)),
        ("quaternary(0.25x4)", ch.quaternary_dmc(0.25, 0.25, 0.25, 0.25)),
        ("5-ary(0.02,0.08,0.1,0.3,0.5)", ch.qary_dmc([0.02, 0.08, 0.1, 0.3, 0.5])),
        ("6-ary(0.01,0.04,0.1,0.25,0.25,0.35)", ch.qary_dmc([0.01, 0.04, 0.1, 0.25, 0.25, 0.35])),
    ]


def run_inequality_grid(
    ns: Sequence[int] = (2, 3, 4),
    kernels=None,
    dmcs=None,
    input_dist=None,
) -> list[Report]:
    """Output-entropy, conditional-entropy, combined and rate-transfer checks on a grid."""
    reports = []
    for kname, k in kernels or default_kernels():
        for n in ns:
            cl = enumerate_law(k, n)
            px = _input(n, input_dist)
            pre = joint_stats(cl, px)
            r = ch.expected_output_rate(k)
            for dname, dmc in dmcs or default_dmcs():
                cfg = {"kernel": kname, "dmc": dname, "n": n}
                post = _cascade_stats(cl, dmc, px)
                l1 = lemma1_rhs(cl, dmc, px)
                hqy = _cond_entropy_given_y(cl, dmc, px)
                reports.append(_ineq("lemma1", cfg, post.h_y, pre.h_y - l1))
                reports.append(_ineq("lemma2", cfg, pre.h_y_given_x + hqy, post.h_y_given_x))
                reports.append(_ineq("combined", cfg, post.mutual_info, pre.mutual_info - l1 - hqy))
                if dmc.symmetric:
                    a = -n * r * dmc_penalty(dmc)
                    reports.extend(verify_proposition1([(post.mutual_info, pre.mutual_info, a)], cfg))
    return reports


def run_appendix_grid(qs: Sequence[int] = (2, 3, 4, 5, 6), ms: Sequence[int] = (1, 2, 3, 4), seed: int = 0) -> list[Report]:
    rng = np.random.default_rng(seed)
    reports = []
    for q in qs:
        probs = rng.dirichlet(np.ones(q))
        dmc = ch.qary_dmc(probs / probs.sum())
        for m in ms:
            reports.append(verify_appendix_sums(dmc, m, seed=int(rng.integers(1 << 31))))
    return reports


def run_decomposition_grid(step: float = 0.01, tol: float = 1e-12) -> list[Report]:
    reports = []
    grid = np.round(np.arange(0.01, 0.46, step), 10)
    for a in grid:
        for b in grid:
            if b > a or a + b > 0.5 + 1e-12:
                continue
            pair = ch.decompose_example(float(a), float(b))
            reports.append(_eq("decomposition", {"alpha": float(a), "beta": float(b)}, pair.max_error, 0.0, tol))
    return reports


def symmetric_mutual_information(dmc: DmcMatrix) -> float:
    return _mutual_information(np.array([0.5, 0.5]), np.asarray(dmc.rows))


def run_baa_checks(tol: float = 1e-6) -> list[Report]:
    reports = [
        _eq("baa", {"dmc": "bsc(0.11)"}, baa_capacity(ch.bsc_dmc(0.11), tol=1e-10), 1.0 - entropy_base2([0.11, 0.89]), tol)
    ]
    for p_s, p_e in [(0.0, 0.0), (0.01, 0.0), (0.05, 0.05), (0.1, 0.2), (0.0, 0.3), (0.2, 0.1)]:
        dmc = ch.sub_ers_dmc(p_s, p_e)
        reports.append(
            _eq("baa", {"dmc": f"sub_ers({p_s},{p_e})"}, baa_capacity(dmc, tol=1e-10), symmetric_mutual_information(dmc), tol)
        )
    return reports


def run_mc_check(p_d: float = 0.1, n: int = 1000, trials: int = 10_000, seed: int = 2012, workers: int = 1) -> list[Report]:
    k = ch.deletion_kernel(p_d)
    est, se = mc_estimate_rate(k, n, trials, seed, workers)
    again = mc_estimate_rate(k, n, trials, seed, workers)
    cfg = {"kernel": f"deletion({p_d})", "n": n, "trials": trials, "seed": seed, "workers": workers}
    return [
        _eq("mc-rate", dict(cfg, stderr=se), est, 1.0 - p_d, 3 * se),
        _eq("mc-determinism", cfg, est, again[0], 0.0),
    ]
