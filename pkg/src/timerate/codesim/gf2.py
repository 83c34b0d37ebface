"""Binary linear systems on bit-packed rows."""

from __future__ import annotations

import numpy as np
from numba import njit


def pack_rows(bits: np.ndarray) -> np.ndarray:
    """Pack a 0/1 matrix into little-endian uint64 words, column c at bit c % 64 of word c // 64."""
    bits = np.asarray(bits, dtype=np.uint8)
    m, k = bits.shape
    words = max((k + 63) // 64, 1)
    padded = np.zeros((m, words * 64), dtype=np.uint8)
    padded[:, :k] = bits
    return np.packbits(padded, axis=1, bitorder="little").view("<u8").astype(np.uint64)


@njit(cache=True, nogil=True)
def _bit(row, c):
    return (row[c >> 6] >> np.uint64(c & 63)) & np.uint64(1)


_DEBRUIJN = np.uint64(0x03F79D71B4CB0A89)
_DEBRUIJN_TABLE = np.zeros(64, dtype=np.int64)
for _i in range(64):
    _DEBRUIJN_TABLE[(((1 << _i) * 0x03F79D71B4CB0A89) & ((1 << 64) - 1)) >> 58] = _i


@njit(cache=True, nogil=True)
def _lowest_bit(x):
    return _DEBRUIJN_TABLE[((x & (~x + np.uint64(1))) * _DEBRUIJN) >> np.uint64(58)]


@njit(cache=True, nogil=True)
def parity_dot(row, bits_packed):
    acc = np.uint64(0)
    for w in range(row.shape[0]):
        acc ^= row[w] & bits_packed[w]
    # popcount parity by folding
    acc ^= acc >> np.uint64(32)
    acc ^= acc >> np.uint64(16)
    acc ^= acc >> np.uint64(8)
    acc ^= acc >> np.uint64(4)
    acc ^= acc >> np.uint64(2)
    acc ^= acc >> np.uint64(1)
    return np.uint8(acc & np.uint64(1))


@njit(cache=True, nogil=True)
def solve_tail(rows, rhs, ncols, first_target):
    """Solve for columns ``first_target..ncols-1`` of a GF(2) system, in place.

    Non-target columns come first, so after forward elimination the targets
    are determined exactly when every target column is a pivot; their values
    then follow by back-substitution. Returns ``(ok, values)``.
    """
    m = rows.shape[0]
    nw = rows.shape[1]
    pivot_row = np.full(ncols, -1, dtype=np.int64)
    nt = ncols - first_target
    values = np.zeros(nt, dtype=np.uint8)
    rank = 0
    for c in range(ncols):
        if rank == m:
            break
        w = c >> 6
        b = np.uint64(1) << np.uint64(c & 63)
        p = -1
        for r in range(rank, m):
            if rows[r, w] & b:
                p = r
                break
        if p < 0:
            if c >= first_target:
                return False, values
            continue
        if p != rank:
            for x in range(w, nw):
                t = rows[p, x]
                rows[p, x] = rows[rank, x]
                rows[rank, x] = t
            t8 = rhs[p]
            rhs[p] = rhs[rank]
            rhs[rank] = t8
        for r in range(p + 1, m):
            if rows[r, w] & b:
                for x in range(w, nw):
                    rows[r, x] ^= rows[rank, x]
                rhs[r] ^= rhs[rank]
        pivot_row[c] = rank
        rank += 1
    for c in range(first_target, ncols):
        if pivot_row[c] < 0:
            return False, values
    for c in range(ncols - 1, first_target - 1, -1):
        r = pivot_row[c]
        v = rhs[r]
        for c2 in range(c + 1, ncols):
            if (rows[r, c2 >> 6] >> np.uint64(c2 & 63)) & np.uint64(1):
                v ^= values[c2 - first_target]
        values[c - first_target] = v
    return True, values


@njit(cache=True, nogil=True)
def decode_demand(sys_col, parity_rows, parity_index, msg, msg_packed, erased, deadline, target):
    """Decode the target bits from the unerased symbols with index below ``deadline``.

    ``sys_col[i]`` is the message column carried by systematic symbol ``i`` or
    -1 for a parity symbol whose generator row is ``parity_rows[parity_index[i]]``.
    Unerased systematic symbols are substituted; parity equations are then
    inserted one at a time into an echelon basis (non-target columns first),
    stopping once every target column has a pivot. Returns True iff every
    target bit is uniquely determined and equals ``msg``.
    """
    k = msg.shape[0]
    known = np.zeros(k, dtype=np.uint8)
    n_par = 0
    for i in range(deadline):
        if erased[i]:
            continue
        if sys_col[i] >= 0:
            known[sys_col[i]] = 1
        else:
            n_par += 1
    col_of = np.full(k, -1, dtype=np.int64)
    order = np.empty(k, dtype=np.int64)
    nu = 0
    for c in range(k):
        if not known[c] and not target[c]:
            col_of[c] = nu
            order[nu] = c
            nu += 1
    first_target = nu
    for c in range(k):
        if not known[c] and target[c]:
            col_of[c] = nu
            order[nu] = c
            nu += 1
    n_targets = nu - first_target
    if n_targets == 0:
        return True
    if n_par < n_targets:
        return False
    unknown = np.zeros(msg_packed.shape[0], dtype=np.uint64)
    for c in range(k):
        if not known[c]:
            unknown[c >> 6] |= np.uint64(1) << np.uint64(c & 63)
    masked = np.empty(msg_packed.shape[0], dtype=np.uint64)
    for w in range(msg_packed.shape[0]):
        masked[w] = msg_packed[w] & unknown[w]

    words = (nu + 63) >> 6
    basis = np.zeros((nu, words), dtype=np.uint64)
    brhs = np.zeros(nu, dtype=np.uint8)
    has = np.zeros(nu, dtype=np.uint8)
    row = np.zeros(words, dtype=np.uint64)
    found = 0
    for i in range(deadline):
        if erased[i] or sys_col[i] >= 0:
            continue
        g = parity_rows[parity_index[i]]
        for x in range(words):
            row[x] = 0
        # known bits move to the right-hand side: rhs = g . (msg on unknown columns)
        rhs = parity_dot(g, masked)
        for w in range(unknown.shape[0]):
            x = g[w] & unknown[w]
            while x:
                j = col_of[(w << 6) + _lowest_bit(x)]
                row[j >> 6] |= np.uint64(1) << np.uint64(j & 63)
                x &= x - np.uint64(1)
        w0 = 0
        while True:
            lead = -1
            for w in range(w0, words):
                if row[w]:
                    lead = (w << 6) + _lowest_bit(row[w])
                    break
            if lead < 0:
                break
            if has[lead]:
                for x in range(lead >> 6, words):
                    row[x] ^= basis[lead, x]
                rhs ^= brhs[lead]
                w0 = lead >> 6
            else:
                for x in range(words):
                    basis[lead, x] = row[x]
                brhs[lead] = rhs
                has[lead] = 1
                if lead >= first_target:
                    found += 1
                break
        if found == n_targets:
            break
    if found < n_targets:
        return False
    values = np.zeros(nu, dtype=np.uint8)
    for c in range(nu - 1, first_target - 1, -1):
        v = brhs[c]
        # bits above the leading one are all target columns, already solved
        for w in range(c >> 6, words):
            x = basis[c, w]
            if w == c >> 6:
                x &= ~((np.uint64(2) << np.uint64(c & 63)) - np.uint64(1))
            while x:
                v ^= values[(w << 6) + _lowest_bit(x)]
                x &= x - np.uint64(1)
        values[c] = v
        if v != msg[order[c]]:
            return False
    return True
