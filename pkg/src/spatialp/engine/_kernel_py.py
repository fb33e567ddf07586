"""Pure-Python selection kernel.

Given the enabled templates of one step, choose multiplicities that are
jointly applicable, ME-valid and maximal:

1. shuffle the enabled templates (Fisher-Yates over a splitmix64 stream);
2. visit them once in that order, adding a random number of copies
   (uniform in ``1..capacity``) to each template that still fits;
3. sweep the same order again and again, adding every remaining copy that
   fits, until a whole sweep adds nothing.

Step 3 is repeated because consuming an ME object can free a cell for a
template that was rejected earlier. ``residual`` (flat cell-major counts)
and ``me_final`` (projected ME occupancy per cell) are updated in place.

The compiled kernel implements the identical draw sequence; any change
here must be mirrored there.
"""
from __future__ import annotations

import numpy as np

NAME = "python"

_MASK = (1 << 64) - 1


def select_obj(enabled, system, residual, me_final, seed, sweep=True):
    """Kernel over Python lists; counts may be arbitrarily large ints."""
    d_ptr, d_flat, d_count, e_ptr, e_cell, e_delta = system.tables_list
    n = len(enabled)
    state = seed & _MASK
    order = list(range(n))
    for i in range(n - 1, 0, -1):
        state = (state + 0x9E3779B97F4A7C15) & _MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        z ^= z >> 31
        j = ((z >> 11) * (i + 1)) >> 53
        order[i], order[j] = order[j], order[i]

    def capacity(t):
        k = -1
        for a in range(d_ptr[t], d_ptr[t + 1]):
            c = residual[d_flat[a]] // d_count[a]
            if k < 0 or c < k:
                k = c
            if k == 0:
                return 0
        for a in range(e_ptr[t], e_ptr[t + 1]):
            delta = e_delta[a]
            if delta > 0:
                room = 1 - me_final[e_cell[a]]
                c = room // delta if room > 0 else 0
                if c < k:
                    k = c
                if k == 0:
                    return 0
        return k

    def take(t, m):
        for a in range(d_ptr[t], d_ptr[t + 1]):
            residual[d_flat[a]] -= m * d_count[a]
        for a in range(e_ptr[t], e_ptr[t + 1]):
            me_final[e_cell[a]] += m * e_delta[a]

    mult = [0] * n
    for j in order:
        t = enabled[j]
        k = capacity(t)
        if k > 0:
            state = (state + 0x9E3779B97F4A7C15) & _MASK
            z = state
            z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
            z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
            z ^= z >> 31
            m = 1 + (((z >> 11) * k) >> 53)
            take(t, m)
            mult[j] += m
    if sweep:
        changed = True
        while changed:
            changed = False
            for j in order:
                t = enabled[j]
                k = capacity(t)
                if k > 0:
                    take(t, k)
                    mult[j] += k
                    changed = True
    return mult


def select_i64(enabled, system, residual, me_final, seed, sweep=True):
    """int64 array front end; arrays are updated in place like the compiled one."""
    res = residual.tolist()
    mef = me_final.tolist()
    mult = select_obj(enabled.tolist(), system, res, mef, seed, sweep)
    residual[:] = res
    me_final[:] = mef
    return np.array(mult, dtype=np.int64)
