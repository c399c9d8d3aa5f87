# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled BFS closure kernel.

Observationally identical to ssgtree._kernels_py.bfs_closure; see there for
the contract. The hot loop composes permutation tables and deduplicates them
in an open-addressed hash table (FNV-1a fingerprints, linear probing, full
row compare on fingerprint hit).
"""
import numpy as np

cimport numpy as cnp

BACKEND = "c"

ctypedef fused leaf_t:
    cnp.uint8_t
    cnp.uint16_t
    cnp.uint32_t

cdef inline cnp.uint64_t _fnv(leaf_t[::1] row) nogil:
    cdef cnp.uint64_t h = 14695981039346656037ULL
    cdef Py_ssize_t r
    for r in range(row.shape[0]):
        h = (h ^ <cnp.uint64_t> row[r]) * 1099511628211ULL
    return h


def bfs_closure(gens, budget):
    if budget < 1:
        raise ValueError("budget must be >= 1")
    gens = np.ascontiguousarray(gens)
    if gens.dtype == np.uint8:
        return _bfs[cnp.uint8_t](gens, budget, gens.dtype)
    if gens.dtype == np.uint16:
        return _bfs[cnp.uint16_t](gens, budget, gens.dtype)
    if gens.dtype == np.uint32:
        return _bfs[cnp.uint32_t](gens, budget, gens.dtype)
    raise TypeError(f"unsupported table dtype {gens.dtype}")


cdef _bfs(leaf_t[:, ::1] gens, long long budget, object dtype):
    cdef Py_ssize_t G = gens.shape[0]
    cdef Py_ssize_t L = gens.shape[1]
    cdef Py_ssize_t cap = 1024

    elems_arr = np.empty((cap, L), dtype=dtype)
    parent_arr = np.empty(cap, dtype=np.int64)
    genidx_arr = np.empty(cap, dtype=np.int16)
    ehash_arr = np.empty(cap, dtype=np.uint64)
    cdef leaf_t[:, ::1] elems = elems_arr
    cdef cnp.int64_t[::1] parent = parent_arr
    cdef cnp.int16_t[::1] genidx = genidx_arr
    cdef cnp.uint64_t[::1] ehash = ehash_arr

    cdef Py_ssize_t tcap = 4096
    table_arr = np.full(tcap, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] table = table_arr

    scratch_arr = np.empty(L, dtype=dtype)
    cdef leaf_t[::1] row = scratch_arr

    cdef Py_ssize_t i = 0, count = 1, g, r, slot, cand, j
    cdef cnp.uint64_t h
    cdef bint complete = True, found, stop = False

    for r in range(L):
        elems[0, r] = <leaf_t> r
    parent[0] = -1
    genidx[0] = -1
    h = _fnv(elems[0])
    ehash[0] = h
    table[h & (tcap - 1)] = 0

    while i < count and not stop:
        for g in range(G):
            for r in range(L):
                row[r] = elems[i, gens[g, r]]
            h = _fnv(row)
            slot = h & (tcap - 1)
            found = False
            while table[slot] != -1:
                cand = table[slot]
                if ehash[cand] == h:
                    found = True
                    for r in range(L):
                        if elems[cand, r] != row[r]:
                            found = False
                            break
                    if found:
                        break
                slot = (slot + 1) & (tcap - 1)
            if found:
                continue
            if count >= budget:
                complete = False
                stop = True
                break
            if count == cap:
                cap *= 2
                elems_arr = _grow2(elems_arr, cap, count)
                parent_arr = _grow1(parent_arr, cap, count)
                genidx_arr = _grow1(genidx_arr, cap, count)
                ehash_arr = _grow1(ehash_arr, cap, count)
                elems = elems_arr
                parent = parent_arr
                genidx = genidx_arr
                ehash = ehash_arr
            if 2 * (count + 1) > tcap:
                tcap *= 2
                table_arr = np.full(tcap, -1, dtype=np.int64)
                table = table_arr
                for j in range(count):
                    slot = ehash[j] & (tcap - 1)
                    while table[slot] != -1:
                        slot = (slot + 1) & (tcap - 1)
                    table[slot] = j
                # re-find the insertion slot in the rebuilt table
                slot = h & (tcap - 1)
                while table[slot] != -1:
                    slot = (slot + 1) & (tcap - 1)
            for r in range(L):
                elems[count, r] = row[r]
            parent[count] = i
            genidx[count] = g
            ehash[count] = h
            table[slot] = count
            count += 1
        i += 1

    if count < cap:
        return (elems_arr[:count].copy(), parent_arr[:count].copy(),
                genidx_arr[:count].copy(), complete)
    return elems_arr, parent_arr, genidx_arr, complete


cdef _grow2(arr, Py_ssize_t cap, Py_ssize_t count):
    grown = np.empty((cap, arr.shape[1]), dtype=arr.dtype)
    grown[:count] = arr[:count]
    return grown


cdef _grow1(arr, Py_ssize_t cap, Py_ssize_t count):
    grown = np.empty(cap, dtype=arr.dtype)
    grown[:count] = arr[:count]
    return grown
