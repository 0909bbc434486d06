"""Compiled inner loop for boundary Monte Carlo.

Each sample owns a counter-based SplitMix64 stream keyed by (seed, sample
index), so estimates are bit-identical for any worker/thread count.  Words
are uint8 buffers (0 = 'a', 1 = 'b'); dimension ratios come from a
precomputed log q-integer table and are evaluated only on the suffix runs a
step can touch, keeping the cost per step independent of the word length.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

U64 = np.uint64
_GOLDEN = U64(0x9E3779B97F4A7C15)


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> U64(30))) * U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> U64(27))) * U64(0x94D049BB133111EB)
    return z ^ (z >> U64(31))


@njit(cache=True, inline="always")
def _stream_init(seed, stream):
    return _mix64(_mix64(seed) ^ _mix64(stream + U64(1)))


@njit(cache=True, inline="always")
def _next_uniform(state):
    state = state + _GOLDEN
    z = _mix64(state)
    return state, (z >> U64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def _logdim_seg(buf, a, b, logqint):
    """log q-dimension of the word stored in buf[a:b]."""
    if b <= a:
        return 0.0
    total = 0.0
    runlen = 1
    for k in range(a + 1, b):
        if buf[k] == buf[k - 1]:
            total += logqint[runlen + 1]
            runlen = 1
        else:
            runlen += 1
    return total + logqint[runlen + 1]


@njit(cache=True)
def _walk_to_prefix(
    w,
    L0,
    mu_flat,
    mu_off,
    mu_logdim,
    mu_w,
    logqint,
    plen,
    stable_needed,
    max_steps,
    state,
    pbuf,
    tmp,
):
    """Run one trajectory until its length-plen prefix is stable.

    Returns (resolved, steps_used, final prefix already in pbuf).
    """
    S = mu_off.shape[0] - 1
    zmax = 0
    for j in range(S):
        lz = mu_off[j + 1] - mu_off[j]
        if lz > zmax:
            zmax = lz
    L = L0
    stable = 0
    have_prefix = False
    cand_w = np.empty(S * (zmax + 1), dtype=np.float64)
    cand_j = np.empty(S * (zmax + 1), dtype=np.int64)
    cand_m = np.empty(S * (zmax + 1), dtype=np.int64)
    for step in range(max_steps):
        # run start of the deepest run a step can modify
        pos = L - 1 - zmax
        if pos < 0:
            cut = 0
        else:
            k = pos
            while k > 0 and w[k - 1] != w[k]:
                k -= 1
            cut = k
        ld_x = _logdim_seg(w, cut, L, logqint)
        ncand = 0
        total = 0.0
        for j in range(S):
            z0 = mu_off[j]
            lz = mu_off[j + 1] - z0
            mmax = lz if lz < L else L
            for m in range(mmax + 1):
                if m > 0:
                    # chain: conj of the m-th-from-last letter of x must be
                    # letter m of z; stop at the first mismatch
                    if (1 - w[L - m]) != mu_flat[z0 + m - 1]:
                        break
                # candidate suffix: w[cut : L-m] followed by z[m:]
                tl = 0
                for k in range(cut, L - m):
                    tmp[tl] = w[k]
                    tl += 1
                for k in range(m, lz):
                    tmp[tl] = mu_flat[z0 + k]
                    tl += 1
                ld_y = _logdim_seg(tmp, 0, tl, logqint)
                p = mu_w[j] * math.exp(ld_y - ld_x - mu_logdim[j])
                cand_w[ncand] = p
                cand_j[ncand] = j
                cand_m[ncand] = m
                ncand += 1
                total += p
        state, u = _next_uniform(state)
        u *= total
        acc = 0.0
        pick = ncand - 1
        for c in range(ncand):
            acc += cand_w[c]
            if u < acc:
                pick = c
                break
        j = cand_j[pick]
        m = cand_m[pick]
        z0 = mu_off[j]
        lz = mu_off[j + 1] - z0
        L = L - m
        for k in range(m, lz):
            w[L] = mu_flat[z0 + k]
            L += 1
        # stopping policy: the length-plen prefix unchanged for K steps
        if L >= plen:
            same = have_prefix
            if same:
                for k in range(plen):
                    if w[k] != pbuf[k]:
                        same = False
                        break
            if same:
                stable += 1
            else:
                for k in range(plen):
                    pbuf[k] = w[k]
                have_prefix = True
                stable = 1
            if stable >= stable_needed:
                return True, step + 1
        else:
            have_prefix = False
            stable = 0
    return False, max_steps


@njit(cache=True, parallel=True)
def simulate_prefixes(
    start,
    mu_flat,
    mu_off,
    mu_logdim,
    mu_w,
    logqint,
    resolve_len,
    margin,
    stable_needed,
    max_steps,
    seed,
    index0,
    n,
    out_prefix,
    out_resolved,
    out_steps,
):
    """Sample n boundary prefixes; sample i uses stream (seed, index0 + i)."""
    S = mu_off.shape[0] - 1
    zmax = 0
    for j in range(S):
        lz = mu_off[j + 1] - mu_off[j]
        if lz > zmax:
            zmax = lz
    plen = resolve_len + margin
    L0 = start.shape[0]
    bufsize = L0 + zmax * (max_steps + 1) + 4
    for i in prange(n):
        w = np.empty(bufsize, dtype=np.uint8)
        for k in range(L0):
            w[k] = start[k]
        pbuf = np.empty(plen, dtype=np.uint8)
        tmp = np.empty(64 + bufsize, dtype=np.uint8)
        state = _stream_init(seed, U64(index0 + i))
        resolved, steps = _walk_to_prefix(
            w,
            L0,
            mu_flat,
            mu_off,
            mu_logdim,
            mu_w,
            logqint,
            plen,
            stable_needed,
            max_steps,
            state,
            pbuf,
            tmp,
        )
        out_resolved[i] = resolved
        out_steps[i] = steps
        for k in range(resolve_len):
            out_prefix[i, k] = pbuf[k] if resolved else 255
