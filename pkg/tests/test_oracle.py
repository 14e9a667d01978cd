import itertools
import math

import numpy as np
import pytest

from syncap import channels as ch
from syncap import oracle
from syncap.errors import BudgetError, DomainError
from syncap.penalties import binary_entropy, entropy_base2


def brute_law(k, n):
    """{x: {y: p}} by looping over every per-symbol output choice."""
    law = {}
    for x in itertools.product("01", repeat=n):
        out = {}
        for choice in itertools.product(*(k.entries[int(b)] for b in x)):
            y = "".join(s for s, _ in choice)
            out[y] = out.get(y, 0.0) + math.prod(p for _, p in choice)
        law["".join(x)] = out
    return law


def brute_cascade(law, dmc):
    w = dmc.rows
    res = {}
    for x, ys in law.items():
        out = {}
        for y, p in ys.items():
            for cols in itertools.product(range(dmc.q), repeat=len(y)):
                pp = p * math.prod(w[int(b), c] for b, c in zip(y, cols))
                if pp > 0:
                    key = (len(y), cols)
                    out[key] = out.get(key, 0.0) + pp
        res[x] = out
    return res


def brute_mi(law):
    px = 1.0 / len(law)
    py = {}
    hyx = 0.0
    for ys in law.values():
        for y, p in ys.items():
            py[y] = py.get(y, 0.0) + px * p
            if p > 0:
                hyx -= px * p * math.log2(p)
    hy = -sum(p * math.log2(p) for p in py.values() if p > 0)
    return hy - hyx


class TestEnumeration:
    def test_single_use(self):
        cl = oracle.enumerate_law(ch.deletion_kernel(0.5), 1)
        assert cl.table("0") == {"": 0.5, "0": 0.5}

    def test_two_uses(self):
        cl = oracle.enumerate_law(ch.deletion_kernel(0.1), 2)
        assert cl.table("00") == pytest.approx({"": 0.01, "0": 0.18, "00": 0.81})
        assert cl.table("01") == pytest.approx({"": 0.01, "0": 0.09, "1": 0.09, "01": 0.81})

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_matches_brute_force(self, n):
        k = ch.gallager_kernel(0.1, 0.15)
        cl = oracle.enumerate_law(k, n)
        ref = brute_law(k, n)
        np.testing.assert_allclose(cl.row_sums(), 1.0, atol=1e-10)
        for x, table in ref.items():
            got = cl.table(x)
            assert set(got) == {y for y, p in table.items() if p > 0}
            for y, p in table.items():
                assert got[y] == pytest.approx(p, abs=1e-15)

    def test_random_custom_kernel(self):
        rng = np.random.default_rng(11)
        outs = ["", "0", "1", "01", "110"]
        rows = []
        for b in (0, 1):
            p = rng.dirichlet(np.ones(len(outs)))
            rows += [(b, s, float(v)) for s, v in zip(outs, p)]
        rows[-1] = (1, "110", 1.0 - sum(r[2] for r in rows if r[0] == 1 and r[1] != "110"))
        k = ch.custom_kernel(rows)
        cl = oracle.enumerate_law(k, 3)
        for x, table in brute_law(k, 3).items():
            got = cl.table(x)
            for y, p in table.items():
                assert got[y] == pytest.approx(p, abs=1e-14)

    def test_budget(self, monkeypatch):
        with pytest.raises(BudgetError, match="budget"):
            oracle.enumerate_law(ch.gallager_kernel(0.1, 0.1), 4, budget=1000)
        monkeypatch.setenv("SYNCAP_BUDGET", "100")
        assert oracle.max_cells() == 100
        with pytest.raises(BudgetError):
            oracle.enumerate_law(ch.deletion_kernel(0.1), 4)
        monkeypatch.setenv("SYNCAP_BUDGET", "lots")
        with pytest.raises(DomainError):
            oracle.max_cells()

    def test_bad_blocklength(self):
        with pytest.raises(DomainError):
            oracle.enumerate_law(ch.deletion_kernel(0.1), 0)


class TestCascade:
    def test_identity_unchanged(self):
        cl = oracle.enumerate_law(ch.gallager_kernel(0.1, 0.1), 3)
        dmc = ch.identity_dmc()
        casc = oracle.cascade_law(cl, dmc)
        # cascaded symbols are indexed by ascending label; label +1 is bit 0
        symbols = [ch.label_to_bit(lab) for lab in dmc.labels]
        for x in ("000", "011", "101", "111"):
            assert casc.table(x, symbols) == cl.table(x)

    def test_always_erase(self):
        dmc = ch.sub_ers_dmc(0, 1)
        cl = oracle.enumerate_law(ch.deletion_kernel(0.3), 3)
        casc = oracle.cascade_law(cl, dmc)
        erase = dmc.column(0)
        for m, blk in casc.blocks.items():
            code = sum(erase * dmc.q**i for i in range(m))
            np.testing.assert_allclose(blk[:, code], cl.blocks[m].sum(axis=1), atol=1e-15)
            assert blk.sum() == pytest.approx(blk[:, code].sum(), abs=1e-12)

    def test_against_brute_force(self):
        k, dmc = ch.deletion_kernel(0.2), ch.qary_dmc([0.1, 0.2, 0.3, 0.4])
        casc = oracle.cascade_law(oracle.enumerate_law(k, 3), dmc)
        for x, table in brute_cascade(brute_law(k, 3), dmc).items():
            row = int(x, 2)
            for (m, cols), p in table.items():
                code = 0
                for c in cols:
                    code = code * dmc.q + c
                assert casc.blocks[m][row, code] == pytest.approx(p, abs=1e-15)
        np.testing.assert_allclose(casc.row_sums(), 1.0, atol=1e-12)
        assert sorted(casc.blocks) == [0, 1, 2, 3]

    def test_streamed_stats_match_materialised(self):
        cl = oracle.enumerate_law(ch.gallager_kernel(0.05, 0.05), 3)
        dmc = ch.sub_ers_dmc(0.05, 0.1)
        a = oracle.cascade_stats(cl, dmc)
        b = oracle.joint_stats(oracle.cascade_law(cl, dmc))
        assert a.mutual_info == pytest.approx(b.mutual_info, abs=1e-12)
        assert a.h_y == pytest.approx(b.h_y, abs=1e-12)


class TestJointStats:
    def test_noiseless(self):
        s = oracle.joint_stats(oracle.enumerate_law(ch.deletion_kernel(0), 3))
        assert s.mutual_info == pytest.approx(3.0, abs=1e-12)
        assert s.e_m == 3.0

    def test_total_deletion(self):
        s = oracle.joint_stats(oracle.enumerate_law(ch.deletion_kernel(1), 3))
        assert s.mutual_info == 0.0

    def test_deletion_n4_against_brute_force(self):
        k = ch.deletion_kernel(0.1)
        s = oracle.joint_stats(oracle.enumerate_law(k, 4))
        assert s.mutual_info == pytest.approx(brute_mi(brute_law(k, 4)), abs=1e-12)
        assert 0 < s.mutual_info < 4 * 0.9

    def test_expected_length(self):
        for k in (ch.deletion_kernel(0.2), ch.gallager_kernel(0.1, 0.05)):
            for n in (2, 3):
                s = oracle.joint_stats(oracle.enumerate_law(k, n))
                assert s.e_m == pytest.approx(n * ch.expected_output_rate(k), abs=1e-12)
                assert sum(s.p_m.values()) == pytest.approx(1.0, abs=1e-12)

    def test_input_distributions(self):
        cl = oracle.enumerate_law(ch.deletion_kernel(0), 2)
        s = oracle.joint_stats(cl, oracle.product_input(2, 0.11))
        assert s.mutual_info == pytest.approx(2 * binary_entropy(0.11), abs=1e-12)
        with pytest.raises(DomainError):
            oracle.joint_stats(cl, [0.5, 0.5])
        with pytest.raises(DomainError):
            oracle.joint_stats(cl, [0.5, 0.5, 0.5, -0.5])


class TestEntropyInequalities:
    def test_output_entropy_identity_is_zero(self):
        cl = oracle.enumerate_law(ch.deletion_kernel(0.1), 3)
        assert oracle.lemma1_rhs(cl, ch.identity_dmc()) == pytest.approx(0.0, abs=1e-15)
        assert oracle.verify_lemma1(cl, ch.identity_dmc()).passed

    def test_output_entropy_sub_ers(self):
        cl = oracle.enumerate_law(ch.deletion_kernel(0.1), 3)
        dmc = ch.sub_ers_dmc(0.05, 0.1)
        rep = oracle.verify_lemma1(cl, dmc)
        post = oracle.cascade_stats(cl, dmc)
        pre = oracle.joint_stats(cl)
        assert rep.passed
        assert post.h_y >= pre.h_y - oracle.lemma1_rhs(cl, dmc) - 1e-10

    @pytest.mark.parametrize("p_s,p_e", [(0.0, 0.1), (0.05, 0.05), (0.1, 0.3)])
    def test_output_entropy_equality_full_support(self, p_s, p_e):
        cl = oracle.enumerate_law(ch.deletion_kernel(0.1), 3)
        dmc = ch.sub_ers_dmc(p_s, p_e)
        rep = oracle.verify_lemma1_equality(cl, dmc)
        assert rep.passed
        e_m = oracle.joint_stats(cl).e_m
        assert rep.lhs == pytest.approx(e_m * math.log2((1 - p_e) ** 2 + 2 * p_e**2), abs=1e-9)

    def test_output_entropy_equality_needs_full_support(self):
        # gallager insertions reach every string, but a deterministic repetition kernel does not
        k = ch.custom_kernel([(0, "00", 1.0), (1, "11", 1.0)])
        with pytest.raises(DomainError):
            oracle.verify_lemma1_equality(oracle.enumerate_law(k, 2), ch.bsc_dmc(0.1))

    def test_conditional_entropy_identity(self):
        cl = oracle.enumerate_law(ch.gallager_kernel(0.1, 0.1), 3)
        rep = oracle.verify_lemma2(cl, ch.identity_dmc())
        assert rep.slack == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize(
        "k,dmc",
        [
            (ch.deletion_kernel(0.2), ch.sub_ers_dmc(0.05, 0.05)),
            (ch.deletion_kernel(0.1), ch.quaternary_dmc(0.6, 0.2, 0.15, 0.05)),
        ],
    )
    def test_conditional_entropy_and_combined(self, k, dmc):
        cl = oracle.enumerate_law(k, 3)
        assert oracle.verify_lemma2(cl, dmc).slack >= -1e-10
        assert oracle.verify_combined(cl, dmc).slack >= -1e-10

    def test_combined_bsc(self):
        k, dmc = ch.deletion_kernel(0.1), ch.bsc_dmc(0.1)
        cl = oracle.enumerate_law(k, 2)
        i_q = oracle.cascade_stats(cl, dmc).mutual_info
        i = oracle.joint_stats(cl).mutual_info
        assert i_q >= i - 2 * 0.9 * binary_entropy(0.1) - 1e-10
        assert oracle.verify_combined(cl, dmc).passed

    def test_non_uniform_input(self):
        cl = oracle.enumerate_law(ch.gallager_kernel(0.1, 0.1), 3)
        px = oracle.product_input(3, 0.3)
        dmc = ch.sub_ers_dmc(0.1, 0.1)
        for f in (oracle.verify_lemma1, oracle.verify_lemma2, oracle.verify_combined):
            assert f(cl, dmc, px).passed


class TestRateTransferPremise:
    @pytest.mark.parametrize(
        "k,dmc,n",
        [
            (ch.deletion_kernel(0.1), ch.bsc_dmc(0.01), 4),
            (ch.deletion_kernel(0.2), ch.sub_ers_dmc(0.05, 0.1), 3),
        ],
    )
    def test_premise(self, k, dmc, n):
        (rep,) = oracle.verify_proposition1([oracle.proposition1_triple(k, dmc, n)])
        assert rep.passed

    def test_identity_equality(self):
        i_q, i, a = oracle.proposition1_triple(ch.deletion_kernel(0.1), ch.identity_dmc(), 3)
        assert a == 0.0
        assert i_q == pytest.approx(i, abs=1e-12)

    def test_violation_is_reported(self):
        (rep,) = oracle.verify_proposition1([(0.1, 0.5, 0.0)])
        assert not rep.passed
        assert rep.as_dict()["pass"] is False


class TestCollisionSums:
    def test_ternary(self):
        rep = oracle.verify_appendix_sums(ch.sub_ers_dmc(0.05, 0.1), 4)
        assert rep.passed
        assert rep.rhs == pytest.approx((0.9**2 + 0.02) ** 4, abs=1e-12)

    def test_quaternary_uniform(self):
        rep = oracle.verify_appendix_sums(ch.quaternary_dmc(0.25, 0.25, 0.25, 0.25), 3)
        assert rep.rhs == pytest.approx(0.125, abs=1e-15)
        assert rep.passed

    def test_random_q5(self):
        rng = np.random.default_rng(5)
        dmc = ch.qary_dmc(rng.dirichlet(np.ones(5)))
        assert oracle.verify_appendix_sums(dmc, 3, seed=1).passed

    def test_limits(self):
        with pytest.raises(BudgetError):
            oracle.verify_appendix_sums(ch.bsc_dmc(0.1), 9)
        with pytest.raises(DomainError):
            oracle.verify_appendix_sums(ch.bsc_dmc(0.1), 2, y_dist=[0.5, 0.5, 0.0, 0.0])


class TestBlahutArimoto:
    def test_bsc(self):
        c = oracle.baa_capacity(ch.bsc_dmc(0.11))
        assert c == pytest.approx(1 - binary_entropy(0.11), abs=1e-6)
        assert c == pytest.approx(0.500084, abs=1e-6)

    @pytest.mark.parametrize("p_s,p_e", [(0.01, 0.0), (0.1, 0.2), (0.0, 0.3)])
    def test_sub_ers_closed_form(self, p_s, p_e):
        closed = binary_entropy(p_e) + (1 - p_e) - entropy_base2([p_s, p_e, 1 - p_s - p_e])
        assert oracle.baa_capacity(ch.sub_ers_dmc(p_s, p_e)) == pytest.approx(closed, abs=1e-6)

    def test_perfect(self):
        assert oracle.baa_capacity(ch.identity_dmc()) == pytest.approx(1.0, abs=1e-9)

    def test_z_channel(self):
        # asymmetric case with a known closed form and a non-uniform optimum
        p = 0.3
        w = np.array([[1.0, 0.0], [p, 1 - p]])
        closed = math.log2(1 + (1 - p) * p ** (p / (1 - p)))
        assert oracle.baa_capacity(w, tol=1e-10) == pytest.approx(closed, abs=1e-9)

    def test_symmetric_equals_uniform_input(self):
        rng = np.random.default_rng(9)
        for q in (3, 4, 5):
            dmc = ch.qary_dmc(rng.dirichlet(np.ones(q)))
            assert oracle.baa_capacity(dmc) == pytest.approx(oracle.symmetric_mutual_information(dmc), abs=1e-6)


class TestMonteCarlo:
    def test_deletion(self):
        est, se = oracle.mc_estimate_rate(ch.deletion_kernel(0.1), 1000, 10_000, seed=2012)
        assert abs(est - 0.9) <= 3 * se
        assert oracle.mc_estimate_rate(ch.deletion_kernel(0.1), 1000, 10_000, seed=2012) == (est, se)

    def test_gallager(self):
        est, se = oracle.mc_estimate_rate(ch.gallager_kernel(0.1, 0.1), 500, 4000, seed=4)
        assert abs(est - 1.0) <= 3 * se

    def test_noiseless(self):
        assert oracle.mc_estimate_rate(ch.deletion_kernel(0), 100, 50, seed=0) == (1.0, 0.0)

    def test_workers(self):
        k = ch.deletion_kernel(0.1)
        a = oracle.mc_estimate_rate(k, 200, 3000, seed=7, workers=3)
        assert a == oracle.mc_estimate_rate(k, 200, 3000, seed=7, workers=3)
        assert abs(a[0] - 0.9) <= 3 * a[1]

    def test_single_trial(self):
        est, se = oracle.mc_estimate_rate(ch.deletion_kernel(0.1), 50, 1, seed=0)
        assert 0 <= est <= 1
        assert math.isnan(se)

    def test_domain(self):
        with pytest.raises(DomainError):
            oracle.mc_estimate_rate(ch.deletion_kernel(0.1), 10, 0, seed=0)


class TestDefaultGrid:
    def test_inequality_grid_small(self):
        reports = oracle.run_inequality_grid(ns=(2,))
        assert reports and all(r.passed for r in reports)
        assert {r.check for r in reports} >= {"lemma1", "lemma2", "combined", "proposition1"}

    def test_report_dict(self):
        d = oracle.run_baa_checks()[0].as_dict()
        assert set(d) == {"check", "config", "lhs", "rhs", "slack", "pass"}
