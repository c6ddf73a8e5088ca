"""Numba kernels for the event-driven KMC core.

Everything in this module operates on plain arrays so the hot loop can
be jitted; the friendly wrappers live in kmc.py.

Event selection is the category method: one category per event type
(hop-A, hop-B, A+A, B+B, A+B), each backed by a Fenwick tree over
per-site integer weights so a site is drawn in O(log V) and weight
updates are O(log V).  Blocked hops (occupancy cap, single-occupancy
exclusion) are executed as null events: time advances, the state does
not change, which leaves the continuous-time law untouched (a thinned
Poisson process is Poisson).

The RNG is xoshiro256++ with state held in a caller-owned uint64[4]
array; identical state arrays give identical event sequences on any
platform.
"""

import numpy as np
from numba import njit

U64 = np.uint64

KIND_AA = 0
KIND_AB = 1
KIND_ABBA = 2

# indices into the running-totals array
T_NA = 0
T_NB = 1
T_WAA = 2
T_WBB = 3
T_WAB = 4

# consecutive null events before an exact frozen-state scan
_NULL_SCAN_BOUND = 100_000


# ---------------------------------------------------------------- RNG

@njit(inline="always", cache=True)
def _rotl(x, k):
    return U64((x << k) | (x >> (U64(64) - k)))


@njit(inline="always", cache=True)
def rng_next(s):
    result = _rotl(s[0] + s[3], U64(23)) + s[0]
    t = s[1] << U64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], U64(45))
    return result


@njit(inline="always", cache=True)
def rng_double(s):
    # 53-bit mantissa, uniform on [0, 1)
    return (rng_next(s) >> U64(11)) * (1.0 / 9007199254740992.0)


# ------------------------------------------------------- Fenwick tree

@njit(cache=True)
def fw_build(vals):
    n = vals.shape[0]
    tree = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        tree[i] += vals[i - 1]
        j = i + (i & (-i))
        if j <= n:
            tree[j] += tree[i]
    return tree


@njit(inline="always", cache=True)
def fw_add(tree, i, delta):
    i += 1
    n = tree.shape[0] - 1
    while i <= n:
        tree[i] += delta
        i += i & (-i)


@njit(inline="always", cache=True)
def fw_sample(tree, top_bit, target):
    """Smallest 0-based index whose prefix sum exceeds target."""
    idx = 0
    bit = top_bit
    n = tree.shape[0] - 1
    while bit > 0:
        nxt = idx + bit
        if nxt <= n and tree[nxt] <= target:
            idx = nxt
            target -= tree[nxt]
        bit >>= 1
    return idx


# ---------------------------------------------------- weight refresh

@njit(inline="always", cache=True)
def _refresh_multi(s, n_a, n_b, use_aa, use_bb, use_ab,
                   waa_val, wbb_val, wab_val, faa, fbb, fab, tot):
    if use_aa:
        new = n_a[s] * (n_a[s] - 1) // 2
        d = new - waa_val[s]
        if d != 0:
            fw_add(faa, s, d)
            tot[T_WAA] += d
            waa_val[s] = new
    if use_bb:
        new = n_b[s] * (n_b[s] - 1) // 2
        d = new - wbb_val[s]
        if d != 0:
            fw_add(fbb, s, d)
            tot[T_WBB] += d
            wbb_val[s] = new
    if use_ab:
        new = n_a[s] * n_b[s]
        d = new - wab_val[s]
        if d != 0:
            fw_add(fab, s, d)
            tot[T_WAB] += d
            wab_val[s] = new


@njit(inline="always", cache=True)
def _refresh_single(s, n_a, n_b, nbr, use_aa, use_bb, use_ab,
                    waa_val, wbb_val, wab_val, faa, fbb, fab, tot):
    # directed bond weights: every adjacent pair is counted once from
    # each end, so category totals carry a factor 1/2
    a_nb = 0
    b_nb = 0
    for c in range(nbr.shape[1]):
        p = nbr[s, c]
        a_nb += n_a[p]
        b_nb += n_b[p]
    if use_aa:
        new = n_a[s] * a_nb
        d = new - waa_val[s]
        if d != 0:
            fw_add(faa, s, d)
            tot[T_WAA] += d
            waa_val[s] = new
    if use_bb:
        new = n_b[s] * b_nb
        d = new - wbb_val[s]
        if d != 0:
            fw_add(fbb, s, d)
            tot[T_WBB] += d
            wbb_val[s] = new
    if use_ab:
        new = n_a[s] * b_nb + n_b[s] * a_nb
        d = new - wab_val[s]
        if d != 0:
            fw_add(fab, s, d)
            tot[T_WAB] += d
            wab_val[s] = new


@njit(inline="always", cache=True)
def _refresh_with_ring(s, single, n_a, n_b, nbr, use_aa, use_bb, use_ab,
                       waa_val, wbb_val, wab_val, faa, fbb, fab, tot):
    """Refresh weights of s; in single mode also of every neighbor of s."""
    if single:
        _refresh_single(s, n_a, n_b, nbr, use_aa, use_bb, use_ab,
                        waa_val, wbb_val, wab_val, faa, fbb, fab, tot)
        for c in range(nbr.shape[1]):
            _refresh_single(nbr[s, c], n_a, n_b, nbr, use_aa, use_bb, use_ab,
                            waa_val, wbb_val, wab_val, faa, fbb, fab, tot)
    else:
        _refresh_multi(s, n_a, n_b, use_aa, use_bb, use_ab,
                       waa_val, wbb_val, wab_val, faa, fbb, fab, tot)


@njit(cache=True)
def _frozen_scan(n_a, n_b, nbr, d_a, d_b, single, cap):
    """Exact check: does any unblocked hop channel exist?"""
    v = n_a.shape[0]
    n_ch = nbr.shape[1]
    for s in range(v):
        for c in range(n_ch):
            p = nbr[s, c]
            if single:
                if (n_a[s] + n_b[s]) > 0 and (n_a[p] + n_b[p]) == 0:
                    if (n_a[s] > 0 and d_a > 0.0) or (n_b[s] > 0 and d_b > 0.0):
                        return False
            else:
                if d_a > 0.0 and n_a[s] > 0 and n_a[p] < cap:
                    return False
                if d_b > 0.0 and n_b[s] > 0 and n_b[p] < cap:
                    return False
    return True


# ------------------------------------------------------- main kernel

@njit(cache=True, nogil=True)
def run_kernel(n_a, n_b, nbr, kind, single, cap,
               d_a, d_b, lam, delta,
               rng, t0, ck_times, ck_flags,
               out_na, out_nb, snap_a, snap_b,
               max_events):
    """Advance the state until all checkpoints are flushed (or, when
    max_events >= 0, until that many real events have executed).

    Returns (t_last, absorbed, n_events, n_null).
    """
    v = n_a.shape[0]
    n_ch = nbr.shape[1]

    use_aa = lam > 0.0 and (kind == KIND_AA or kind == KIND_ABBA)
    use_bb = lam > 0.0 and kind == KIND_ABBA
    use_ab = delta > 0.0 and (kind == KIND_AB or kind == KIND_ABBA)

    tot = np.zeros(5, dtype=np.int64)
    waa_val = np.zeros(v, dtype=np.int64)
    wbb_val = np.zeros(v, dtype=np.int64)
    wab_val = np.zeros(v, dtype=np.int64)
    for s in range(v):
        tot[T_NA] += n_a[s]
        tot[T_NB] += n_b[s]
        if single:
            a_nb = 0
            b_nb = 0
            for c in range(n_ch):
                p = nbr[s, c]
                a_nb += n_a[p]
                b_nb += n_b[p]
            if use_aa:
                waa_val[s] = n_a[s] * a_nb
            if use_bb:
                wbb_val[s] = n_b[s] * b_nb
            if use_ab:
                wab_val[s] = n_a[s] * b_nb + n_b[s] * a_nb
        else:
            if use_aa:
                waa_val[s] = n_a[s] * (n_a[s] - 1) // 2
            if use_bb:
                wbb_val[s] = n_b[s] * (n_b[s] - 1) // 2
            if use_ab:
                wab_val[s] = n_a[s] * n_b[s]
    tot[T_WAA] = waa_val.sum()
    tot[T_WBB] = wbb_val.sum()
    tot[T_WAB] = wab_val.sum()

    fa = fw_build(n_a)
    fb = fw_build(n_b)
    faa = fw_build(waa_val)
    fbb = fw_build(wbb_val)
    fab = fw_build(wab_val)

    top_bit = 1
    while top_bit * 2 <= v:
        top_bit *= 2

    pair_factor = 0.5 if single else 1.0

    t = t0
    nc = ck_times.shape[0]
    ick = 0
    isamp = 0
    isnap = 0
    n_events = 0
    n_null = 0
    null_streak = 0
    absorbed = 0

    while True:
        if max_events >= 0 and n_events >= max_events:
            break

        r_hop_a = n_ch * d_a * tot[T_NA]
        r_hop_b = n_ch * d_b * tot[T_NB]
        r_aa = lam * tot[T_WAA] * pair_factor
        r_bb = lam * tot[T_WBB] * pair_factor
        r_ab = delta * tot[T_WAB] * pair_factor
        rate = r_hop_a + r_hop_b + r_aa + r_bb + r_ab

        if rate <= 0.0:
            absorbed = 1
        elif null_streak >= _NULL_SCAN_BOUND:
            null_streak = 0
            if r_aa == 0.0 and r_bb == 0.0 and r_ab == 0.0:
                if _frozen_scan(n_a, n_b, nbr, d_a, d_b, single, cap):
                    absorbed = 1

        if absorbed == 1:
            while ick < nc:
                flag = ck_flags[ick]
                if flag & 1:
                    out_na[isamp] = tot[T_NA]
                    out_nb[isamp] = tot[T_NB]
                    isamp += 1
                if flag & 2:
                    snap_a[isnap, :] = n_a
                    snap_b[isnap, :] = n_b
                    isnap += 1
                ick += 1
            break

        dt = -np.log(1.0 - rng_double(rng)) / rate
        t_next = t + dt

        while ick < nc and ck_times[ick] < t_next:
            flag = ck_flags[ick]
            if flag & 1:
                out_na[isamp] = tot[T_NA]
                out_nb[isamp] = tot[T_NB]
                isamp += 1
            if flag & 2:
                snap_a[isnap, :] = n_a
                snap_b[isnap, :] = n_b
                isnap += 1
            ick += 1
        if ick >= nc and max_events < 0:
            break
        t = t_next

        pick = rng_double(rng) * rate
        if pick < r_hop_a + r_hop_b:
            is_a = pick < r_hop_a
            if is_a:
                src = fw_sample(fa, top_bit, rng_double(rng) * tot[T_NA])
            else:
                src = fw_sample(fb, top_bit, rng_double(rng) * tot[T_NB])
            ch = int(rng_double(rng) * n_ch)
            dst = nbr[src, ch]
            blocked = False
            if single:
                blocked = (n_a[dst] + n_b[dst]) > 0
            elif cap > 0:
                blocked = (n_a[dst] >= cap) if is_a else (n_b[dst] >= cap)
            if blocked:
                n_null += 1
                null_streak += 1
                continue
            if is_a:
                n_a[src] -= 1
                n_a[dst] += 1
                fw_add(fa, src, -1)
                fw_add(fa, dst, 1)
            else:
                n_b[src] -= 1
                n_b[dst] += 1
                fw_add(fb, src, -1)
                fw_add(fb, dst, 1)
            _refresh_with_ring(src, single, n_a, n_b, nbr, use_aa, use_bb, use_ab,
                               waa_val, wbb_val, wab_val, faa, fbb, fab, tot)
            _refresh_with_ring(dst, single, n_a, n_b, nbr, use_aa, use_bb, use_ab,
                               waa_val, wbb_val, wab_val, faa, fbb, fab, tot)
        elif pick < r_hop_a + r_hop_b + r_aa:
            s = fw_sample(faa, top_bit, rng_double(rng) * tot[T_WAA])
            if single:
                cnt = 0
                for c in range(n_ch):
                    if n_a[nbr[s, c]] > 0:
                        cnt += 1
                k = int(rng_double(rng) * cnt)
                p = -1
                for c in range(n_ch):
                    if n_a[nbr[s, c]] > 0:
                        if k == 0:
                            p = nbr[s, c]
                            break
                        k -= 1
                n_a[s] -= 1
                n_a[p] -= 1
                fw_add(fa, s, -1)
                fw_add(fa, p, -1)
                tot[T_NA] -= 2
                _refresh_with_ring(s, single, n_a, n_b, nbr, use_aa, use_bb, use_ab,
                                   waa_val, wbb_val, wab_val, faa, fbb, fab, tot)
                _refresh_with_ring(p, single, n_a, n_b, nbr, use_aa, use_bb, use_ab,
                                   waa_val, wbb_val, wab_val, faa, fbb, fab, tot)
            else:
                n_a[s] -= 2
                fw_add(fa, s, -2)
                tot[T_NA] -= 2
                _refresh_multi(s, n_a, n_b, use_aa, use_bb, use_ab,
                               waa_val, wbb_val, wab_val, faa, fbb, fab, tot)
        elif pick < r_hop_a + r_hop_b + r_aa + r_bb:
            s = fw_sample(fbb, top_bit, rng_double(rng) * tot[T_WBB])
            if single:
                cnt = 0
                for c in range(n_ch):
                    if n_b[nbr[s, c]] > 0:
                        cnt += 1
                k = int(rng_double(rng) * cnt)
                p = -1
                for c in range(n_ch):
                    if n_b[nbr[s, c]] > 0:
                        if k == 0:
                            p = nbr[s, c]
                            break
                        k -= 1
                n_b[s] -= 1
                n_b[p] -= 1
                fw_add(fb, s, -1)
                fw_add(fb, p, -1)
                tot[T_NB] -= 2
                _refresh_with_ring(s, single, n_a, n_b, nbr, use_aa, use_bb, use_ab,
                                   waa_val, wbb_val, wab_val, faa, fbb, fab, tot)
                _refresh_with_ring(p, single, n_a, n_b, nbr, use_aa, use_bb, use_ab,
                                   waa_val, wbb_val, wab_val, faa, fbb, fab, tot)
            else:
                n_b[s] -= 2
                fw_add(fb, s, -2)
                tot[T_NB] -= 2
                _refresh_multi(s, n_a, n_b, use_aa, use_bb, use_ab,
                               waa_val, wbb_val, wab_val, faa, fbb, fab, tot)
        else:
            s = fw_sample(fab, top_bit, rng_double(rng) * tot[T_WAB])
            if single:
                # s holds exactly one particle; partner holds the other species
                want_b = n_a[s] > 0
                cnt = 0
                for c in range(n_ch):
                    p = nbr[s, c]
                    if (n_b[p] if want_b else n_a[p]) > 0:
                        cnt += 1
                k = int(rng_double(rng) * cnt)
                part = -1
                for c in range(n_ch):
                    p = nbr[s, c]
                    if (n_b[p] if want_b else n_a[p]) > 0:
                        if k == 0:
                            part = p
                            break
                        k -= 1
                a_site = s if want_b else part
                b_site = part if want_b else s
                n_a[a_site] -= 1
                n_b[b_site] -= 1
                fw_add(fa, a_site, -1)
                fw_add(fb, b_site, -1)
                tot[T_NA] -= 1
                tot[T_NB] -= 1
                _refresh_with_ring(a_site, single, n_a, n_b, nbr, use_aa, use_bb, use_ab,
                                   waa_val, wbb_val, wab_val, faa, fbb, fab, tot)
                _refresh_with_ring(b_site, single, n_a, n_b, nbr, use_aa, use_bb, use_ab,
                                   waa_val, wbb_val, wab_val, faa, fbb, fab, tot)
            else:
                n_a[s] -= 1
                n_b[s] -= 1
                fw_add(fa, s, -1)
                fw_add(fb, s, -1)
                tot[T_NA] -= 1
                tot[T_NB] -= 1
                _refresh_multi(s, n_a, n_b, use_aa, use_bb, use_ab,
                               waa_val, wbb_val, wab_val, faa, fbb, fab, tot)
        n_events += 1
        null_streak = 0

    return t, absorbed, n_events, n_null
