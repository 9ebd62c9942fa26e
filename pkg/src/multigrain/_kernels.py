"""Compiled inner loops for the collapsed Gibbs samplers.

Randomness is supplied by the caller as an array of uniforms, one per
token visit, so the kernels themselves are deterministic.

MG-LDA counts travel as one tuple, in this order::

    (ngw, ng, nlw, nl, nsv, ns, ndv, ndv_gl, ndv_loc, ndgz, ndg, ndvlz)

word-topic tables and totals for global and local topics, per-sentence
window counts and sentence lengths, per-window totals split by
granularity, per-document global-topic counts and totals, and per-window
local-topic counts.  Windows and sentences use corpus-wide indices.

Hyperparameters travel as a float array
``[alpha_gl, alpha_loc, alpha_mix_gl, alpha_mix_loc, beta_gl, beta_loc, gamma]``.
"""

from numba import njit

GL = 0
LOC = 1


@njit(cache=True, nogil=True)
def mg_update(i, delta, words, tok_doc, tok_sent, tok_win0, oa, ra, za, counts):
    ngw, ng, nlw, nl, nsv, ns, ndv, ndv_gl, ndv_loc, ndgz, ndg, ndvlz = counts
    w = words[i]
    d = tok_doc[i]
    sg = tok_sent[i]
    o = oa[i]
    z = za[i]
    v = tok_win0[i] + o
    nsv[sg, o] += delta
    ns[sg] += delta
    ndv[v] += delta
    if ra[i] == GL:
        ngw[z, w] += delta
        ng[z] += delta
        ndv_gl[v] += delta
        ndgz[d, z] += delta
        ndg[d] += delta
    else:
        nlw[z, w] += delta
        nl[z] += delta
        ndv_loc[v] += delta
        ndvlz[v, z] += delta


@njit(cache=True, nogil=True)
def mg_add_all(words, tok_doc, tok_sent, tok_win0, oa, ra, za, counts):
    for i in range(words.shape[0]):
        mg_update(i, 1, words, tok_doc, tok_sent, tok_win0, oa, ra, za, counts)


@njit(cache=True, nogil=True)
def mg_weights(out, w, d, sg, v0, counts, hyper, n_words):
    """Fill ``out[o, c]`` with unnormalized conditional weights; return the sum.

    Columns ``0..K_gl-1`` are global topics, the rest local topics.
    """
    ngw, ng, nlw, nl, nsv, ns, ndv, ndv_gl, ndv_loc, ndgz, ndg, ndvlz = counts
    a_gl = hyper[0]
    a_loc = hyper[1]
    m_gl = hyper[2]
    m_loc = hyper[3]
    b_gl = hyper[4]
    b_loc = hyper[5]
    gamma = hyper[6]
    n_win = out.shape[0]
    k_gl = ngw.shape[0]
    k_loc = nlw.shape[0]

    win_den = ns[sg] + n_win * gamma
    gl_den = ndg[d] + k_gl * a_gl
    total = 0.0
    for o in range(n_win):
        v = v0 + o
        f_win = (nsv[sg, o] + gamma) / win_den
        mix_den = ndv[v] + m_gl + m_loc
        f_gl = f_win * (ndv_gl[v] + m_gl) / mix_den
        f_loc = f_win * (ndv_loc[v] + m_loc) / mix_den
        loc_den = ndv_loc[v] + k_loc * a_loc
        for z in range(k_gl):
            p = (ngw[z, w] + b_gl) / (ng[z] + n_words * b_gl) * f_gl * ((ndgz[d, z] + a_gl) / gl_den)
            out[o, z] = p
            total += p
        for z in range(k_loc):
            p = (nlw[z, w] + b_loc) / (nl[z] + n_words * b_loc) * f_loc * ((ndvlz[v, z] + a_loc) / loc_den)
            out[o, k_gl + z] = p
            total += p
    return total


@njit(cache=True, nogil=True)
def _pick(buf, target):
    n_win, n_col = buf.shape
    acc = 0.0
    last = 0
    for o in range(n_win):
        for c in range(n_col):
            p = buf[o, c]
            if p > 0.0:
                last = o * n_col + c
            acc += p
            if acc > target:
                return o * n_col + c
    # rounding left target at the very top of the mass
    return last


@njit(cache=True, nogil=True)
def mg_sweep(lo, hi, u, words, tok_doc, tok_sent, tok_win0, oa, ra, za, counts, hyper, n_words, buf):
    k_gl = counts[0].shape[0]
    n_col = buf.shape[1]
    for i in range(lo, hi):
        mg_update(i, -1, words, tok_doc, tok_sent, tok_win0, oa, ra, za, counts)
        total = mg_weights(buf, words[i], tok_doc[i], tok_sent[i], tok_win0[i], counts, hyper, n_words)
        cell = _pick(buf, u[i - lo] * total)
        o = cell // n_col
        c = cell % n_col
        oa[i] = o
        if c < k_gl:
            ra[i] = GL
            za[i] = c
        else:
            ra[i] = LOC
            za[i] = c - k_gl
        mg_update(i, 1, words, tok_doc, tok_sent, tok_win0, oa, ra, za, counts)


@njit(cache=True, nogil=True)
def mg_resample(lo, hi, u, sent0, words, tok_doc, tok_sent, tok_win0, oa, ra, za, counts, hyper, n_words, buf, acc):
    """Run ``u.shape[0]`` sweeps over tokens ``lo..hi``.

    After every sweep the local-topic assignment counts of each sentence are
    added to ``acc[sentence - sent0, z]``.
    """
    for t in range(u.shape[0]):
        mg_sweep(lo, hi, u[t], words, tok_doc, tok_sent, tok_win0, oa, ra, za, counts, hyper, n_words, buf)
        for i in range(lo, hi):
            if ra[i] == LOC:
                acc[tok_sent[i] - sent0, za[i]] += 1.0


@njit(cache=True, nogil=True)
def mg_reassign(lo, hi, new_o, new_r, new_z, words, tok_doc, tok_sent, tok_win0, oa, ra, za, counts):
    for i in range(lo, hi):
        mg_update(i, -1, words, tok_doc, tok_sent, tok_win0, oa, ra, za, counts)
        oa[i] = new_o[i - lo]
        ra[i] = new_r[i - lo]
        za[i] = new_z[i - lo]
        mg_update(i, 1, words, tok_doc, tok_sent, tok_win0, oa, ra, za, counts)


# -- standard LDA -----------------------------------------------------------


@njit(cache=True, nogil=True)
def lda_weights(out, w, d, nzw, nz, ndz, nd, alpha, beta):
    k = nzw.shape[0]
    n_words = nzw.shape[1]
    doc_den = nd[d] + k * alpha
    total = 0.0
    for z in range(k):
        p = (nzw[z, w] + beta) / (nz[z] + n_words * beta) * ((ndz[d, z] + alpha) / doc_den)
        out[z] = p
        total += p
    return total


@njit(cache=True, nogil=True)
def lda_sweep(lo, hi, u, words, tok_doc, za, nzw, nz, ndz, nd, alpha, beta, buf):
    k = nzw.shape[0]
    for i in range(lo, hi):
        w = words[i]
        d = tok_doc[i]
        z = za[i]
        nzw[z, w] -= 1
        nz[z] -= 1
        ndz[d, z] -= 1
        nd[d] -= 1
        total = lda_weights(buf, w, d, nzw, nz, ndz, nd, alpha, beta)
        target = u[i - lo] * total
        acc = 0.0
        z = -1
        for c in range(k):
            acc += buf[c]
            if acc > target:
                z = c
                break
        if z < 0:
            z = k - 1
            while buf[z] <= 0.0 and z > 0:
                z -= 1
        za[i] = z
        nzw[z, w] += 1
        nz[z] += 1
        ndz[d, z] += 1
        nd[d] += 1


@njit(cache=True, nogil=True)
def lda_resample(lo, hi, u, sent0, words, tok_doc, tok_sent, za, nzw, nz, ndz, nd, alpha, beta, buf, acc):
    for t in range(u.shape[0]):
        lda_sweep(lo, hi, u[t], words, tok_doc, za, nzw, nz, ndz, nd, alpha, beta, buf)
        for i in range(lo, hi):
            acc[tok_sent[i] - sent0, za[i]] += 1.0


@njit(cache=True, nogil=True)
def lda_reassign(lo, hi, new_z, words, tok_doc, za, nzw, nz, ndz, nd):
    for i in range(lo, hi):
        w = words[i]
        d = tok_doc[i]
        z = za[i]
        nzw[z, w] -= 1
        nz[z] -= 1
        ndz[d, z] -= 1
        nd[d] -= 1
        z = new_z[i - lo]
        za[i] = z
        nzw[z, w] += 1
        nz[z] += 1
        ndz[d, z] += 1
        nd[d] += 1
