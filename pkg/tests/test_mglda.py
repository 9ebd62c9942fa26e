import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multigrain.mglda import (
    GL,
    LOC,
    Hyperparams,
    MgldaState,
    conditional,
    estimate_phi,
    estimate_theta_sentence,
    gibbs_sweep,
    init_state,
    log_joint,
)
from multigrain.synth import SynthConfig, generate_mglda
from oracles import (
    assignment_dict,
    make_corpus,
    mg_brute_log_joint,
    mg_joint_ratio,
    random_docs,
    relative_error,
    token_keys,
)


def tiny_hyper(**kw):
    base = dict(k_global=2, k_local=2, window=2, alpha_gl=0.3, alpha_loc=0.7, alpha_mix_gl=0.6,
                alpha_mix_loc=1.4, beta_gl=0.2, beta_loc=0.5, gamma=0.9)
    base.update(kw)
    return Hyperparams(**base)


class TestHyperparams:
    @pytest.mark.parametrize("field", ["k_global", "k_local", "window"])
    def test_zero_count_rejected(self, field):
        with pytest.raises(ValueError, match=field):
            Hyperparams(**{field: 0})

    @pytest.mark.parametrize("field", ["alpha_gl", "beta_loc", "gamma", "alpha_mix_loc"])
    def test_nonpositive_prior_rejected(self, field):
        with pytest.raises(ValueError, match=field):
            Hyperparams(**{field: 0.0})


class TestInit:
    def test_window_count(self):
        c = make_corpus([[[0, 1, 2, 3]]])
        s = init_state(c, Hyperparams(k_global=2, k_local=2, window=3), seed=1)
        assert s.n_windows == 3
        assert s.tables["n_dv"].shape == (3,)

    def test_window_count_per_document(self):
        c = make_corpus([[[0], [1], []], [[2, 2]]])
        s = init_state(c, Hyperparams(k_global=1, k_local=1, window=2), seed=0)
        assert list(s.doc_window_start) == [0, 4, 6]

    def test_seed_determinism(self):
        c = make_corpus(random_docs(np.random.default_rng(0), 5, 6))
        h = tiny_hyper()
        a, b = init_state(c, h, seed=7), init_state(c, h, seed=7)
        assert np.array_equal(a.o, b.o) and np.array_equal(a.r, b.r) and np.array_equal(a.z, b.z)

    def test_consistent_after_init(self):
        c = make_corpus(random_docs(np.random.default_rng(1), 6, 8))
        s = init_state(c, tiny_hyper(window=3), seed=3)
        assert s.check_consistency()
        limit = np.where(s.r == GL, 2, 2)
        assert (s.z < limit).all() and (s.o < 3).all()

    def test_bad_assignment_rejected(self):
        c = make_corpus([[[0, 1]]])
        with pytest.raises(ValueError, match="topic"):
            MgldaState(c, tiny_hyper(), [0, 0], [GL, LOC], [0, 2])


class TestConditional:
    def test_empty_counts_symmetry(self):
        c = make_corpus([[[1]]], n_words=3)
        h = tiny_hyper(window=3, k_global=3, k_local=2)
        s = init_state(c, h, seed=0)
        gl, loc = conditional(s, 0, 0)
        assert np.allclose(gl, gl.flat[0], rtol=1e-14)
        assert np.allclose(loc, loc.flat[0], rtol=1e-14)
        assert gl.sum() / loc.sum() == pytest.approx(h.alpha_mix_gl / h.alpha_mix_loc, rel=1e-12)
        assert gl.sum() + loc.sum() == pytest.approx(1.0, abs=1e-14)

    def test_tiny_corpus_matches_joint_ratio(self):
        rng = np.random.default_rng(11)
        docs = [[[int(w) for w in rng.integers(0, 4, 3)] for _ in range(2)] for _ in range(2)]
        c = make_corpus(docs, n_words=4)
        h = tiny_hyper()
        s = init_state(c, h, seed=5)
        assign = assignment_dict(s)
        for d, i, key in token_keys(docs):
            gl, loc = conditional(s, d, i)
            og, ol = mg_joint_ratio(docs, 4, h, assign, key)
            assert relative_error(gl, og) <= 1e-9
            assert relative_error(loc, ol) <= 1e-9

    def test_state_unchanged(self):
        c = make_corpus(random_docs(np.random.default_rng(2), 3, 5))
        s = init_state(c, tiny_hyper(), seed=0)
        before = {k: v.copy() for k, v in s.tables.items()}
        conditional(s, 1, 0)
        assert all(np.array_equal(before[k], v) for k, v in s.tables.items())

    def test_vanishing_local_preference(self):
        c = make_corpus(random_docs(np.random.default_rng(3), 3, 5))
        h = tiny_hyper(alpha_mix_loc=1e-12)
        o = np.zeros(c.n_tokens, int)
        s = MgldaState(c, h, o, np.full(c.n_tokens, GL), np.zeros(c.n_tokens, int))
        gl, loc = conditional(s, 0, 0)
        assert loc.sum() < 1e-10

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_positive(self, seed):
        rng = np.random.default_rng(seed)
        c = make_corpus(random_docs(rng, 3, 5))
        s = init_state(c, tiny_hyper(window=int(rng.integers(1, 4))), seed=seed)
        gl, loc = conditional(s, 0, 0)
        assert (gl > 0).all() and (loc > 0).all()


class TestLogJoint:
    def test_single_token_closed_form(self):
        c = make_corpus([[[0]]], n_words=3)
        h = Hyperparams(k_global=1, k_local=1, window=1, alpha_mix_gl=0.4, alpha_mix_loc=1.6)
        for r, a in ((GL, 0.4), (LOC, 1.6)):
            s = MgldaState(c, h, [0], [r], [0])
            assert log_joint(s) == pytest.approx(math.log(1 / 3) + math.log(a / 2.0), abs=1e-12)

    def test_no_tokens_is_zero(self):
        # only prior normalizers remain and each cancels against its zero-count term
        c = make_corpus([[[], []]], n_words=2)
        s = init_state(c, tiny_hyper(window=3), seed=0)
        assert log_joint(s) == pytest.approx(0.0, abs=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        docs = random_docs(rng, 3, 5, sentences=(1, 4), words=(0, 4))
        docs = [d for d in docs if any(d)] or [[[0]]]
        c = make_corpus(docs, n_words=5)
        h = tiny_hyper(window=int(rng.integers(1, 4)), k_global=int(rng.integers(1, 4)))
        s = init_state(c, h, seed=seed)
        ref = mg_brute_log_joint(docs, 5, h, assignment_dict(s))
        assert log_joint(s) == pytest.approx(ref, rel=1e-12, abs=1e-9)


class TestSweep:
    def test_iteration_counter(self):
        c = make_corpus(random_docs(np.random.default_rng(4), 4, 6))
        s = init_state(c, tiny_hyper(), seed=0)
        gibbs_sweep(gibbs_sweep(s))
        assert s.iteration == 2

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 3), st.integers(1, 4))
    def test_counts_consistent_after_sweeps(self, seed, kg, kl, T):
        rng = np.random.default_rng(seed)
        c = make_corpus(random_docs(rng, 4, 7))
        s = init_state(c, Hyperparams(k_global=kg, k_local=kl, window=T), seed=seed)
        for _ in range(5):
            gibbs_sweep(s)
        assert s.check_consistency()
        t = s.tables
        assert np.array_equal(t["n_dv_gl"] + t["n_dv_loc"], t["n_dv"])
        assert np.array_equal(t["n_d_gl_z"].sum(1), t["n_d_gl"])
        assert np.array_equal(t["n_sv"].sum(1), t["n_s"])
        assert all((v >= 0).all() for v in t.values())

    def test_fixed_seed_trajectory(self):
        c = make_corpus(random_docs(np.random.default_rng(5), 6, 9))
        h = tiny_hyper(window=3)
        a, b = init_state(c, h, seed=42), init_state(c, h, seed=42)
        for _ in range(10):
            gibbs_sweep(a)
            gibbs_sweep(b)
            assert np.array_equal(a.z, b.z) and np.array_equal(a.o, b.o) and np.array_equal(a.r, b.r)

    def test_copy_is_independent(self):
        c = make_corpus(random_docs(np.random.default_rng(6), 4, 6))
        s = init_state(c, tiny_hyper(), seed=1)
        t = s.copy()
        gibbs_sweep(t)
        assert s.iteration == 0 and s.check_consistency()
        gibbs_sweep(s)
        assert np.array_equal(s.z, t.z)

    def test_burn_in_tendency(self):
        cfg = SynthConfig(n_docs=60)
        late = 0
        for seed in range(5):
            sc = generate_mglda(cfg, seed)
            c = make_corpus(sc.documents, cfg.vocab_size)
            h = Hyperparams(k_global=4, k_local=3, window=3, gamma=1.0, alpha_mix_gl=2.0, alpha_mix_loc=2.0)
            s = init_state(c, h, seed=seed)
            trace = []
            for _ in range(800):
                gibbs_sweep(s)
                trace.append(log_joint(s))
            late += int(np.argmax(trace) >= 80)
        assert late == 5


class TestEstimators:
    def test_phi_arithmetic(self):
        c = make_corpus([[[0, 0]]], n_words=2)
        h = Hyperparams(k_global=1, k_local=1, window=1, beta_gl=1.0, beta_loc=1.0)
        s = MgldaState(c, h, [0, 0], [GL, GL], [0, 0])
        tm = estimate_phi(s)
        assert tm.phi_gl[0] == pytest.approx([0.75, 0.25])
        assert tm.phi_loc[0] == pytest.approx([0.5, 0.5])

    def test_phi_rows_stochastic(self):
        c = make_corpus(random_docs(np.random.default_rng(7), 5, 10), n_words=10)
        s = init_state(c, tiny_hyper(), seed=2)
        gibbs_sweep(s)
        tm = estimate_phi(s)
        for phi in (tm.phi_gl, tm.phi_loc):
            assert np.allclose(phi.sum(1), 1.0, atol=1e-9)
            assert (phi > 0).all()

    def test_theta_single_window_factors(self):
        c = make_corpus(random_docs(np.random.default_rng(8), 2, 5, sentences=(2, 4)), n_words=5)
        h = tiny_hyper(window=1)
        s = init_state(c, h, seed=3)
        t = s.tables
        for d in range(c.n_docs):
            for sent in range(len(c.documents[d].sentences)):
                v = s.doc_window_start[d] + sent
                res = estimate_theta_sentence(s, d, sent)
                mix_den = t["n_dv"][v] + h.alpha_mix_gl + h.alpha_mix_loc
                gran_gl = (t["n_dv_gl"][v] + h.alpha_mix_gl) / mix_den
                gran_loc = (t["n_dv_loc"][v] + h.alpha_mix_loc) / mix_den
                topic_loc = (t["n_dv_loc_z"][v] + h.alpha_loc) / (t["n_dv_loc"][v] + h.k_local * h.alpha_loc)
                topic_gl = (t["n_d_gl_z"][d] + h.alpha_gl) / (t["n_d_gl"][d] + h.k_global * h.alpha_gl)
                assert res.mix == pytest.approx([gran_gl, gran_loc], rel=1e-12)
                assert res.loc == pytest.approx(topic_loc, rel=1e-12)
                assert res.glob == pytest.approx(topic_gl, rel=1e-12)

    def test_theta_concentrates(self):
        docs = [[[0] * 30, [1, 2]]]
        c = make_corpus(docs, n_words=3)
        h = Hyperparams(k_global=2, k_local=3, window=2)
        n = c.n_tokens
        r = np.array([LOC] * 30 + [GL, GL])
        s = MgldaState(c, h, np.zeros(n, int), r, np.zeros(n, int))
        res = estimate_theta_sentence(s, 0, 0)
        assert res.loc[0] > 0.95
        assert res.mix[1] > res.mix[0]

    def test_theta_empty_sentence_uniform(self):
        docs = [[[0, 1], [], [2]]]
        c = make_corpus(docs, n_words=3)
        h = Hyperparams(k_global=3, k_local=4, window=1)
        n = c.n_tokens
        s = MgldaState(c, h, np.zeros(n, int), np.full(n, LOC), np.array([1, 2, 3]))
        res = estimate_theta_sentence(s, 0, 1)
        assert res.loc == pytest.approx(np.full(4, 0.25))
        assert res.glob == pytest.approx(np.full(3, 1 / 3))

    def test_theta_out_of_range(self):
        c = make_corpus([[[0], [1]]])
        s = init_state(c, tiny_hyper(), seed=0)
        with pytest.raises(IndexError):
            estimate_theta_sentence(s, 0, 2)
