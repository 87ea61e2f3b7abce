"""Numba kernels for the flooding immersion and tree bookkeeping."""
import numpy as np
from numba import njit


@njit(cache=True)
def _find(uf, p):
    r = p
    while uf[r] != r:
        r = uf[r]
    while uf[p] != r:
        nxt = uf[p]
        uf[p] = r
        p = nxt
    return r


@njit(cache=True)
def _emit(t, force, min_area, st_grow, st_area, st_own_head, st_own_tail,
          st_pend_head, st_pend_tail, st_pend_count, node_parent, node_level,
          node_area, node_sib, pix_next, p2n, n_nodes):
    """Record stack component ``t`` as a tree node; returns the new node count."""
    area = st_area[t]
    if st_pend_count[t] == 1 and node_area[st_pend_head[t]] == area:
        # same pixel set as its only child: the child keeps the lower level
        return n_nodes
    if area < min_area and not force:
        return n_nodes
    x = n_nodes
    node_level[x] = st_grow[t]
    node_area[x] = area
    node_parent[x] = -1
    c = st_pend_head[t]
    while c != -1:
        node_parent[c] = x
        c = node_sib[c]
    p = st_own_head[t]
    while p != -1:
        p2n[p] = x
        p = pix_next[p]
    st_own_head[t] = -1
    st_own_tail[t] = -1
    node_sib[x] = -1
    st_pend_head[t] = x
    st_pend_tail[t] = x
    st_pend_count[t] = 1
    return n_nodes + 1


@njit(cache=True)
def _merge_down(t, uf, st_level, st_grow, st_root, st_area, st_own_head, st_own_tail,
                st_pend_head, st_pend_tail, st_pend_count, node_sib, pix_next):
    """Merge stack component ``t`` into ``t - 1``."""
    s = t - 1
    if st_area[t] > 0:
        st_grow[s] = st_level[s] if st_area[s] > 0 else st_grow[t]
    ra = st_root[t]
    rb = st_root[s]
    if ra != -1:
        if rb == -1:
            st_root[s] = ra
        elif st_area[t] > st_area[s]:
            uf[rb] = ra
            st_root[s] = ra
        else:
            uf[ra] = rb
    st_area[s] += st_area[t]
    if st_own_head[t] != -1:
        if st_own_head[s] == -1:
            st_own_head[s] = st_own_head[t]
        else:
            pix_next[st_own_tail[s]] = st_own_head[t]
        st_own_tail[s] = st_own_tail[t]
    if st_pend_head[t] != -1:
        if st_pend_head[s] == -1:
            st_pend_head[s] = st_pend_head[t]
        else:
            node_sib[st_pend_tail[s]] = st_pend_head[t]
        st_pend_tail[s] = st_pend_tail[t]
    st_pend_count[s] += st_pend_count[t]


@njit(cache=True)
def flood(levels, nbrs, pix, n_pixels, bins, min_area, start, verify):
    """Single-pass flooding immersion over a leveled node graph.

    Returns ``(parent, level, area, pixel_to_node, merges, status)`` where node
    arrays are in emission order (children before parents), ``merges[v]``
    counts how often node ``v`` was merged into a component and ``status`` is
    0 on success, 1 if a pixel was found in a foreign component (only looked
    for when ``verify`` is set).
    """
    n = levels.size
    k = nbrs.shape[1]
    visited = np.zeros(n, np.bool_)
    for i in range(n):
        if levels[i] >= bins:
            visited[i] = True
    edge_pos = np.zeros(n, np.int32)
    heap_head = np.full(bins, -1, np.int32)
    heap_next = np.full(n, -1, np.int32)
    merges = np.zeros(n, np.int32)

    uf = np.full(n_pixels, -1, np.int32)
    pix_next = np.full(n_pixels, -1, np.int32)
    p2n = np.full(n_pixels, -1, np.int32)

    cap = 2 * n_pixels + 2
    node_parent = np.full(cap, -1, np.int32)
    node_level = np.zeros(cap, np.int32)
    node_area = np.zeros(cap, np.int32)
    node_sib = np.full(cap, -1, np.int32)
    n_nodes = 0

    depth = bins + 3
    st_level = np.zeros(depth, np.int32)
    st_grow = np.zeros(depth, np.int32)
    st_root = np.full(depth, -1, np.int32)
    st_area = np.zeros(depth, np.int32)
    st_own_head = np.full(depth, -1, np.int32)
    st_own_tail = np.full(depth, -1, np.int32)
    st_pend_head = np.full(depth, -1, np.int32)
    st_pend_tail = np.full(depth, -1, np.int32)
    st_pend_count = np.zeros(depth, np.int32)

    st_level[0] = bins + 1
    sp = 1
    cur = start
    visited[cur] = True
    st_level[sp] = levels[cur]
    status = 0

    while True:
        lvl = levels[cur]
        flooded = False
        e = edge_pos[cur]
        while e < k:
            nb = nbrs[cur, e]
            e += 1
            if nb < 0 or visited[nb]:
                continue
            visited[nb] = True
            lnb = levels[nb]
            if lnb >= lvl:
                heap_next[nb] = heap_head[lnb]
                heap_head[lnb] = nb
            else:
                edge_pos[cur] = e
                heap_next[cur] = heap_head[lvl]
                heap_head[lvl] = cur
                cur = nb
                sp += 1
                st_level[sp] = levels[nb]
                st_root[sp] = -1
                st_area[sp] = 0
                st_own_head[sp] = -1
                st_own_tail[sp] = -1
                st_pend_head[sp] = -1
                st_pend_tail[sp] = -1
                st_pend_count[sp] = 0
                flooded = True
                break
        if flooded:
            continue

        # local minimum reached: merge the node's pixels into the top component
        merges[cur] += 1
        for j in range(pix.shape[1]):
            p = pix[cur, j]
            if p < 0:
                continue
            if uf[p] == -1:
                if st_root[sp] == -1:
                    uf[p] = p
                    st_root[sp] = p
                else:
                    uf[p] = st_root[sp]
                st_area[sp] += 1
                st_grow[sp] = st_level[sp]
                if st_own_head[sp] == -1:
                    st_own_head[sp] = p
                else:
                    pix_next[st_own_tail[sp]] = p
                st_own_tail[sp] = p
            elif verify and (st_root[sp] == -1 or _find(uf, p) != st_root[sp]):
                status = 1

        nxt = -1
        new_level = lvl
        while new_level < bins:
            if heap_head[new_level] != -1:
                nxt = heap_head[new_level]
                heap_head[new_level] = heap_next[nxt]
                break
            new_level += 1
        if nxt == -1:
            break
        if new_level != lvl:
            while new_level > st_level[sp]:
                n_nodes = _emit(sp, False, min_area, st_grow, st_area, st_own_head, st_own_tail,
                                st_pend_head, st_pend_tail, st_pend_count, node_parent,
                                node_level, node_area, node_sib, pix_next, p2n, n_nodes)
                if new_level < st_level[sp - 1]:
                    st_level[sp] = new_level
                    break
                _merge_down(sp, uf, st_level, st_grow, st_root, st_area, st_own_head, st_own_tail,
                            st_pend_head, st_pend_tail, st_pend_count, node_sib, pix_next)
                sp -= 1
        cur = nxt

    while sp > 1:
        n_nodes = _emit(sp, False, min_area, st_grow, st_area, st_own_head, st_own_tail,
                        st_pend_head, st_pend_tail, st_pend_count, node_parent,
                        node_level, node_area, node_sib, pix_next, p2n, n_nodes)
        _merge_down(sp, uf, st_level, st_grow, st_root, st_area, st_own_head, st_own_tail,
                    st_pend_head, st_pend_tail, st_pend_count, node_sib, pix_next)
        sp -= 1
    n_nodes = _emit(1, True, min_area, st_grow, st_area, st_own_head, st_own_tail,
                    st_pend_head, st_pend_tail, st_pend_count, node_parent,
                    node_level, node_area, node_sib, pix_next, p2n, n_nodes)
    return (node_parent[:n_nodes].copy(), node_level[:n_nodes].copy(),
            node_area[:n_nodes].copy(), p2n, merges, status)


@njit(cache=True)
def canonical_form(parent, level, area, p2n):
    """Drop nodes equal to their only child, then compute each node's minimum pixel.

    Returns ``(keep, new_parent, rep, min_pixel)`` in the input id space;
    ``rep[x]`` is the kept node carrying node ``x``'s pixel set.
    """
    m = parent.size
    nchild = np.zeros(m, np.int32)
    onechild = np.full(m, -1, np.int32)
    for x in range(m):
        q = parent[x]
        if q >= 0:
            nchild[q] += 1
            onechild[q] = x
    redundant = np.zeros(m, np.bool_)
    for x in range(m):
        if nchild[x] == 1 and area[onechild[x]] == area[x]:
            redundant[x] = True
    rep = np.arange(m)
    for x in range(m):
        y = x
        while redundant[y]:
            y = onechild[y]
        rep[x] = y
    new_parent = np.full(m, -1, np.int32)
    for x in range(m):
        if redundant[x]:
            continue
        q = parent[x]
        while q >= 0 and redundant[q]:
            q = parent[q]
        new_parent[x] = q

    # depth-ordered bottom-up minimum pixel
    big = np.iinfo(np.int32).max
    min_pixel = np.full(m, big, np.int32)
    for p in range(p2n.size):
        x = rep[p2n[p]]
        if p < min_pixel[x]:
            min_pixel[x] = p
    depth = np.full(m, -1, np.int32)
    for x in range(m):
        if redundant[x]:
            continue
        d = 0
        y = x
        while y >= 0 and depth[y] < 0:
            y = new_parent[y]
            d += 1
        val = (depth[y] + 1 if y >= 0 else 0) + d - 1
        y = x
        while y >= 0 and depth[y] < 0:
            depth[y] = val
            val -= 1
            y = new_parent[y]
    order = np.argsort(-depth, kind="mergesort")
    for x in order:
        if redundant[x]:
            continue
        q = new_parent[x]
        if q >= 0 and min_pixel[x] < min_pixel[q]:
            min_pixel[q] = min_pixel[x]
    return ~redundant, new_parent, rep, min_pixel


@njit(cache=True)
def region_layout(parent, area, p2n):
    """Order pixels so every node's region is one contiguous slice.

    Requires parents to have smaller ids than their children. Returns
    ``(start, order)``: the region of node ``x`` is
    ``order[start[x] : start[x] + area[x]]``.
    """
    m = parent.size
    own = np.zeros(m, np.int32)
    for p in range(p2n.size):
        own[p2n[p]] += 1
    # children in CSR form
    count = np.zeros(m + 1, np.int32)
    for x in range(m):
        if parent[x] >= 0:
            count[parent[x] + 1] += 1
    for x in range(m):
        count[x + 1] += count[x]
    fill = count[:m].copy()
    kids = np.empty(max(m - 1, 0), np.int32)
    for x in range(m):
        q = parent[x]
        if q >= 0:
            kids[fill[q]] = x
            fill[q] += 1
    start = np.zeros(m, np.int32)
    for x in range(m):
        cursor = start[x] + own[x]
        for j in range(count[x], count[x + 1]):
            c = kids[j]
            start[c] = cursor
            cursor += area[c]
    slot = start.copy()
    order = np.empty(p2n.size, np.int32)
    for p in range(p2n.size):
        x = p2n[p]
        order[slot[x]] = p
        slot[x] += 1
    return start, order


@njit(cache=True)
def min_pixels(parent, p2n):
    """Smallest pixel index per node; nodes must be in children-first order."""
    m = parent.size
    big = np.iinfo(np.int32).max
    out = np.full(m, big, np.int32)
    for p in range(p2n.size):
        x = p2n[p]
        if p < out[x]:
            out[x] = p
    for x in range(m):
        q = parent[x]
        if q >= 0 and out[x] < out[q]:
            out[q] = out[x]
    return out
