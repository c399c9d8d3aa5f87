"""Pure-Python BFS closure kernel (fallback when the compiled one is absent).

Must stay observationally identical to the compiled kernel in ssgtree._kernels:
same discovery order, same partial result when the budget trips.
"""
import numpy as np

BACKEND = "py"


def bfs_closure(gens, budget):
    """Close {identity} under right-multiplication by the given image tables.

    gens: (G, L) array of permutation tables (rows index leaves 0..L-1).
    Returns (elems, parent, gen_idx, complete): elems is (N, L) in BFS
    discovery order starting at the identity; elems[j] for j > 0 equals
    elems[parent[j]] composed with gens[gen_idx[j]]; complete is False when
    the closure would have exceeded `budget` elements (result is the prefix
    discovered so far, of size exactly `budget`).
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    gens = np.ascontiguousarray(gens)
    G, L = gens.shape
    cap = 1024
    elems = np.empty((cap, L), dtype=gens.dtype)
    ident = np.arange(L, dtype=gens.dtype)
    elems[0] = ident
    parent = [-1]
    gen_idx = [-1]
    index = {ident.tobytes(): 0}
    count = 1
    i = 0
    complete = True
    while i < count and complete:
        cur = elems[i]
        for g in range(G):
            new = cur[gens[g]]
            key = new.tobytes()
            if key in index:
                continue
            if count >= budget:
                complete = False
                break
            if count == cap:
                cap *= 2
                grown = np.empty((cap, L), dtype=gens.dtype)
                grown[:count] = elems[:count]
                elems = grown
            index[key] = count
            elems[count] = new
            parent.append(i)
            gen_idx.append(g)
            count += 1
        i += 1
    out = elems[:count]
    if count < cap:
        out = out.copy()
    return (out,
            np.array(parent, dtype=np.int64),
            np.array(gen_idx, dtype=np.int16),
            complete)
