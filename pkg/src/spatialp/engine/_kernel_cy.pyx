# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled selection kernel; mirrors ``_kernel_py`` draw for draw."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t

cdef extern from *:
    ctypedef unsigned long long u128 "unsigned __int128"

NAME = "cython"

cnp.import_array()


cdef inline uint64_t _next(uint64_t* state) noexcept nogil:
    cdef uint64_t z
    state[0] = state[0] + <uint64_t>0x9E3779B97F4A7C15ULL
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline int64_t _capacity(int64_t t, const int64_t[::1] d_ptr, const int64_t[::1] d_flat,
                              const int64_t[::1] d_count, const int64_t[::1] e_ptr,
                              const int64_t[::1] e_cell, const int64_t[::1] e_delta,
                              int64_t[::1] residual, int64_t[::1] me_final) noexcept nogil:
    cdef int64_t k = -1, c, room, delta
    cdef Py_ssize_t a
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


cdef inline void _take(int64_t t, int64_t m, const int64_t[::1] d_ptr, const int64_t[::1] d_flat,
                       const int64_t[::1] d_count, const int64_t[::1] e_ptr,
                       const int64_t[::1] e_cell, const int64_t[::1] e_delta,
                       int64_t[::1] residual, int64_t[::1] me_final) noexcept nogil:
    cdef Py_ssize_t a
    for a in range(d_ptr[t], d_ptr[t + 1]):
        residual[d_flat[a]] -= m * d_count[a]
    for a in range(e_ptr[t], e_ptr[t + 1]):
        me_final[e_cell[a]] += m * e_delta[a]


def select_i64(const int64_t[::1] enabled, system, int64_t[::1] residual, int64_t[::1] me_final,
               seed, bint sweep=True):
    cdef const int64_t[::1] d_ptr = system.d_ptr
    cdef const int64_t[::1] d_flat = system.d_flat
    cdef const int64_t[::1] d_count = system.d_count
    cdef const int64_t[::1] e_ptr = system.e_ptr
    cdef const int64_t[::1] e_cell = system.e_cell
    cdef const int64_t[::1] e_delta = system.e_delta
    cdef Py_ssize_t n = enabled.shape[0]
    cdef uint64_t state = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t z
    cdef Py_ssize_t i, j, jj, tmp
    cdef int64_t t, k, m
    cdef bint changed
    order_arr = np.arange(n, dtype=np.int64)
    mult_arr = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] order = order_arr
    cdef int64_t[::1] mult = mult_arr
    with nogil:
        i = n - 1
        while i > 0:
            z = _next(&state)
            j = <Py_ssize_t>(((<u128>(z >> 11)) * (<u128>(i + 1))) >> 53)
            tmp = order[i]
            order[i] = order[j]
            order[j] = tmp
            i -= 1
        for jj in range(n):
            j = order[jj]
            t = enabled[j]
            k = _capacity(t, d_ptr, d_flat, d_count, e_ptr, e_cell, e_delta, residual, me_final)
            if k > 0:
                z = _next(&state)
                m = 1 + <int64_t>(((<u128>(z >> 11)) * (<u128>k)) >> 53)
                _take(t, m, d_ptr, d_flat, d_count, e_ptr, e_cell, e_delta, residual, me_final)
                mult[j] += m
        if sweep:
            changed = True
            while changed:
                changed = False
                for jj in range(n):
                    j = order[jj]
                    t = enabled[j]
                    k = _capacity(t, d_ptr, d_flat, d_count, e_ptr, e_cell, e_delta, residual, me_final)
                    if k > 0:
                        _take(t, k, d_ptr, d_flat, d_count, e_ptr, e_cell, e_delta, residual, me_final)
                        mult[j] += k
                        changed = True
    return mult_arr


def select_obj(list enabled, system, list residual, list me_final, seed, bint sweep=True):
    """Big-integer path: same algorithm over Python ints, compiled loops."""
    cdef list d_ptr, d_flat, d_count, e_ptr, e_cell, e_delta
    d_ptr, d_flat, d_count, e_ptr, e_cell, e_delta = system.tables_list
    cdef Py_ssize_t n = len(enabled)
    cdef uint64_t state = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t z
    cdef Py_ssize_t i, j, jj, a, t
    cdef bint changed
    cdef list order = list(range(n))
    cdef list mult = [0] * n
    i = n - 1
    while i > 0:
        z = _next(&state)
        j = <Py_ssize_t>(((<u128>(z >> 11)) * (<u128>(i + 1))) >> 53)
        order[i], order[j] = order[j], order[i]
        i -= 1
    for jj in range(n):
        j = order[jj]
        t = enabled[j]
        k = _capacity_obj(t, d_ptr, d_flat, d_count, e_ptr, e_cell, e_delta, residual, me_final)
        if k > 0:
            z = _next(&state)
            m = 1 + (((z >> 11) * k) >> 53)
            _take_obj(t, m, d_ptr, d_flat, d_count, e_ptr, e_cell, e_delta, residual, me_final)
            mult[j] += m
    if sweep:
        changed = True
        while changed:
            changed = False
            for jj in range(n):
                j = order[jj]
                t = enabled[j]
                k = _capacity_obj(t, d_ptr, d_flat, d_count, e_ptr, e_cell, e_delta, residual, me_final)
                if k > 0:
                    _take_obj(t, k, d_ptr, d_flat, d_count, e_ptr, e_cell, e_delta, residual, me_final)
                    mult[j] += k
                    changed = True
    return mult


cdef object _capacity_obj(Py_ssize_t t, list d_ptr, list d_flat, list d_count, list e_ptr,
                          list e_cell, list e_delta, list residual, list me_final):
    cdef Py_ssize_t a
    k = -1
    for a in range(<Py_ssize_t>d_ptr[t], <Py_ssize_t>d_ptr[t + 1]):
        c = residual[d_flat[a]] // d_count[a]
        if k < 0 or c < k:
            k = c
        if k == 0:
            return 0
    for a in range(<Py_ssize_t>e_ptr[t], <Py_ssize_t>e_ptr[t + 1]):
        delta = e_delta[a]
        if delta > 0:
            room = 1 - me_final[e_cell[a]]
            c = room // delta if room > 0 else 0
            if c < k:
                k = c
            if k == 0:
                return 0
    return k


cdef void _take_obj(Py_ssize_t t, object m, list d_ptr, list d_flat, list d_count, list e_ptr,
                    list e_cell, list e_delta, list residual, list me_final):
    cdef Py_ssize_t a, f
    for a in range(<Py_ssize_t>d_ptr[t], <Py_ssize_t>d_ptr[t + 1]):
        f = d_flat[a]
        residual[f] = residual[f] - m * d_count[a]
    for a in range(<Py_ssize_t>e_ptr[t], <Py_ssize_t>e_ptr[t + 1]):
        f = e_cell[a]
        me_final[f] = me_final[f] + m * e_delta[a]
