# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled event loop: the performance twin of ``dynsched._pysim``.

Mirrors the pure backend draw for draw: the same splitmix64 recurrence, the
same heap algorithm as CPython's heapq (so ties resolve identically), the
same mutation order for the task ledger and index sets, and the same
floating-point operation order.  Results are bit-identical across backends;
tests/test_backend_parity.py holds the engine to that.
"""

from libc.stdint cimport int64_t, uint64_t
from libc.stdlib cimport calloc, free, malloc
from libc.string cimport memcpy, memmove

from .kernel import SimulationFault

cdef uint64_t _GAMMA = 0x9E3779B97F4A7C15ULL
cdef double _TO_DOUBLE = 1.0 / 9007199254740992.0


# --- splitmix64, twin of rng.RandomStream ------------------------------------

cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _next(uint64_t* state) noexcept nogil:
    state[0] = state[0] + _GAMMA
    return _mix(state[0])


cdef inline int64_t _below(uint64_t* state, int64_t bound) noexcept nogil:
    return <int64_t>(_next(state) % <uint64_t>bound)


cdef inline double _uniform01(uint64_t* state) noexcept nogil:
    return <double>(_next(state) >> 11) * _TO_DOUBLE


# --- index set, twin of engine.IndexSet ---------------------------------------

cdef struct ISet:
    char* mask
    int* ordered
    int* comp
    int* comp_pos
    int size
    int comp_len


cdef int iset_init(ISet* s, int n) except -1:
    cdef int v
    s.mask = <char*>calloc(n, 1)
    s.ordered = <int*>malloc(n * sizeof(int))
    s.comp = <int*>malloc(n * sizeof(int))
    s.comp_pos = <int*>malloc(n * sizeof(int))
    if s.mask == NULL or s.ordered == NULL or s.comp == NULL or s.comp_pos == NULL:
        raise MemoryError()
    s.size = 0
    s.comp_len = n
    for v in range(n):
        s.comp[v] = v
        s.comp_pos[v] = v
    return 0


cdef void iset_free(ISet* s) noexcept:
    free(s.mask)
    free(s.ordered)
    free(s.comp)
    free(s.comp_pos)


cdef inline void iset_add(ISet* s, int v) noexcept nogil:
    cdef int lo = 0, hi = s.size, mid, pos, last
    s.mask[v] = 1
    while lo < hi:
        mid = (lo + hi) >> 1
        if s.ordered[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    memmove(s.ordered + lo + 1, s.ordered + lo, (s.size - lo) * sizeof(int))
    s.ordered[lo] = v
    s.size += 1
    pos = s.comp_pos[v]
    last = s.comp[s.comp_len - 1]
    s.comp[pos] = last
    s.comp_pos[last] = pos
    s.comp_len -= 1
    s.comp_pos[v] = -1


cdef inline int iset_draw(ISet* s, uint64_t* state) noexcept nogil:
    if s.comp_len == 0:
        return -1
    return s.comp[_below(state, s.comp_len)]


cdef inline int build_merged(ISet* s, int extra, int* out) noexcept nogil:
    # sorted members with ``extra`` inserted; extra < 0 means plain copy
    cdef int m = 0, a = 0
    if extra < 0:
        memcpy(out, s.ordered, s.size * sizeof(int))
        return s.size
    while a < s.size and s.ordered[a] < extra:
        out[m] = s.ordered[a]
        m += 1
        a += 1
    out[m] = extra
    m += 1
    while a < s.size:
        out[m] = s.ordered[a]
        m += 1
        a += 1
    return m


# --- task ledger, twin of kernel.TaskLedger -----------------------------------

cdef struct CLedger:
    int64_t* unproc
    int64_t* pos
    int64_t remaining
    int64_t total
    int64_t scan


cdef inline void ledger_mark(CLedger* L, int64_t code) noexcept nogil:
    cdef int64_t p = L.pos[code]
    cdef int64_t last = L.unproc[L.remaining - 1]
    L.unproc[p] = last
    L.pos[last] = p
    L.remaining -= 1
    L.pos[code] = -1


cdef inline int64_t ledger_first(CLedger* L) noexcept nogil:
    while L.pos[L.scan] < 0:
        L.scan += 1
    return L.scan


# --- binary heap of (time, worker), twin of CPython heapq ---------------------

cdef struct Heap:
    double* t
    int* k
    int length


cdef inline bint _hlt(double t1, int k1, double t2, int k2) noexcept nogil:
    return t1 < t2 or (t1 == t2 and k1 < k2)


cdef inline void heap_push(Heap* h, double t, int k) noexcept nogil:
    # heapq._siftdown: move parents down until the new item fits
    cdef int pos = h.length
    cdef int parent
    h.length += 1
    while pos > 0:
        parent = (pos - 1) >> 1
        if _hlt(t, k, h.t[parent], h.k[parent]):
            h.t[pos] = h.t[parent]
            h.k[pos] = h.k[parent]
            pos = parent
        else:
            break
    h.t[pos] = t
    h.k[pos] = k


cdef inline void heap_pop(Heap* h, double* t_out, int* k_out) noexcept nogil:
    # heapq.heappop + _siftup: bubble the hole to a leaf, then sift the tail
    # item back up; replicating the exact algorithm keeps tie layouts aligned
    # with the pure backend
    cdef double tl
    cdef int kl, pos, child, right, parent
    t_out[0] = h.t[0]
    k_out[0] = h.k[0]
    h.length -= 1
    if h.length == 0:
        return
    tl = h.t[h.length]
    kl = h.k[h.length]
    pos = 0
    child = 1
    while child < h.length:
        right = child + 1
        if right < h.length and not _hlt(h.t[child], h.k[child], h.t[right], h.k[right]):
            child = right
        h.t[pos] = h.t[child]
        h.k[pos] = h.k[child]
        pos = child
        child = 2 * pos + 1
    while pos > 0:
        parent = (pos - 1) >> 1
        if _hlt(tl, kl, h.t[parent], h.k[parent]):
            h.t[pos] = h.t[parent]
            h.k[pos] = h.k[parent]
            pos = parent
        else:
            break
    h.t[pos] = tl
    h.k[pos] = kl


# --- the event loop ------------------------------------------------------------


def simulate(
    int kind,
    int n,
    speeds,
    double magnitude,
    int sorted_mode,
    int64_t threshold,
    uint64_t seed_state,
    int want_trace,
):
    """Run one simulation; same contract and results as ``_pysim.simulate``.

    kind: 0 outer, 1 matmul.  Returns (blocks, tasks, finish, total_comm,
    makespan, trace_or_None).
    """
    cdef int p = len(speeds)
    cdef int64_t total = (<int64_t>n) * n * (n if kind == 1 else 1)
    cdef int empty_limit
    cdef uint64_t state = seed_state

    from .engine import EMPTY_BATCH_LIMIT
    empty_limit = EMPTY_BATCH_LIMIT

    cdef double* speed = NULL
    cdef double* busy = NULL
    cdef int64_t* blocks_arr = NULL
    cdef int64_t* tasks_arr = NULL
    cdef int* streak = NULL
    cdef ISet* SI = NULL
    cdef ISet* SJ = NULL
    cdef ISet* SK = NULL
    cdef char** ha = NULL
    cdef char** hb = NULL
    cdef char** hc = NULL
    cdef int* mj = NULL
    cdef int* mk = NULL
    cdef CLedger L
    cdef Heap H
    L.unproc = NULL
    L.pos = NULL
    H.t = NULL
    H.k = NULL

    cdef int w, v, a, b, ei, ej, ek, mj_len, mk_len, ii, jj, kk, cross
    cdef int64_t code, base, n_blocks, n_tasks, square, total_comm
    cdef double t, s, inv, makespan
    cdef int sets_ready = 0
    trace = [] if want_trace else None

    try:
        speed = <double*>malloc(p * sizeof(double))
        busy = <double*>calloc(p, sizeof(double))
        blocks_arr = <int64_t*>calloc(p, sizeof(int64_t))
        tasks_arr = <int64_t*>calloc(p, sizeof(int64_t))
        streak = <int*>calloc(p, sizeof(int))
        SI = <ISet*>calloc(p, sizeof(ISet))
        SJ = <ISet*>calloc(p, sizeof(ISet))
        SK = <ISet*>calloc(p, sizeof(ISet))
        mj = <int*>malloc((n + 1) * sizeof(int))
        mk = <int*>malloc((n + 1) * sizeof(int))
        L.unproc = <int64_t*>malloc(total * sizeof(int64_t))
        L.pos = <int64_t*>malloc(total * sizeof(int64_t))
        H.t = <double*>malloc(p * sizeof(double))
        H.k = <int*>malloc(p * sizeof(int))
        if (
            speed == NULL or busy == NULL or blocks_arr == NULL or tasks_arr == NULL
            or streak == NULL or SI == NULL or SJ == NULL or SK == NULL
            or mj == NULL or mk == NULL or L.unproc == NULL or L.pos == NULL
            or H.t == NULL or H.k == NULL
        ):
            raise MemoryError()

        for w in range(p):
            speed[w] = <double>speeds[w]
            iset_init(&SI[w], n)
            iset_init(&SJ[w], n)
            iset_init(&SK[w], n)
        sets_ready = 1
        if kind == 1:
            ha = <char**>calloc(p, sizeof(char*))
            hb = <char**>calloc(p, sizeof(char*))
            hc = <char**>calloc(p, sizeof(char*))
            if ha == NULL or hb == NULL or hc == NULL:
                raise MemoryError()
            for w in range(p):
                ha[w] = <char*>calloc(n * n, 1)
                hb[w] = <char*>calloc(n * n, 1)
                hc[w] = <char*>calloc(n * n, 1)
                if ha[w] == NULL or hb[w] == NULL or hc[w] == NULL:
                    raise MemoryError()

        for code in range(total):
            L.unproc[code] = code
            L.pos[code] = code
        L.remaining = total
        L.total = total
        L.scan = 0

        for w in range(p):
            H.t[w] = 0.0
            H.k[w] = w
        H.length = p

        while L.remaining > 0:
            heap_pop(&H, &t, &w)
            n_blocks = 0
            n_tasks = 0
            cross = 0

            if L.remaining > threshold:
                # dynamic rule: extend the worker's known sets by fresh indices
                if kind == 0:
                    ei = iset_draw(&SI[w], &state)
                    ej = iset_draw(&SJ[w], &state)
                    if ei >= 0 or ej >= 0:
                        cross = 1
                        if want_trace:
                            square = <int64_t>SI[w].size * SJ[w].size
                            trace.append((
                                t,
                                w,
                                (<double>SI[w].size) / <double>n,
                                (<double>L.remaining) / <double>(total - square),
                            ))
                        if ei >= 0:
                            n_blocks += 1
                        if ej >= 0:
                            n_blocks += 1
                        if ei >= 0:
                            mj_len = build_merged(&SJ[w], ej, mj)
                            base = <int64_t>ei * n
                            for a in range(mj_len):
                                code = base + mj[a]
                                if L.pos[code] >= 0:
                                    ledger_mark(&L, code)
                                    n_tasks += 1
                        if ej >= 0:
                            for a in range(SI[w].size):
                                code = <int64_t>SI[w].ordered[a] * n + ej
                                if L.pos[code] >= 0:
                                    ledger_mark(&L, code)
                                    n_tasks += 1
                        if ei >= 0:
                            iset_add(&SI[w], ei)
                        if ej >= 0:
                            iset_add(&SJ[w], ej)
                else:
                    ei = iset_draw(&SI[w], &state)
                    ej = iset_draw(&SJ[w], &state)
                    ek = iset_draw(&SK[w], &state)
                    if ei >= 0 or ej >= 0 or ek >= 0:
                        cross = 1
                        if want_trace:
                            square = <int64_t>SI[w].size * SJ[w].size * SK[w].size
                            trace.append((
                                t,
                                w,
                                (<double>SI[w].size) / <double>n,
                                (<double>L.remaining) / <double>(total - square),
                            ))
                        mj_len = build_merged(&SJ[w], ej, mj)
                        mk_len = build_merged(&SK[w], ek, mk)
                        # A blocks: new row i over K+{k}, then old rows at k
                        if ei >= 0:
                            for a in range(mk_len):
                                code = <int64_t>ei * n + mk[a]
                                if not ha[w][code]:
                                    ha[w][code] = 1
                                    n_blocks += 1
                        if ek >= 0:
                            for a in range(SI[w].size):
                                code = <int64_t>SI[w].ordered[a] * n + ek
                                if not ha[w][code]:
                                    ha[w][code] = 1
                                    n_blocks += 1
                        # B blocks
                        if ej >= 0:
                            for a in range(mk_len):
                                code = <int64_t>mk[a] * n + ej
                                if not hb[w][code]:
                                    hb[w][code] = 1
                                    n_blocks += 1
                        if ek >= 0:
                            for a in range(SJ[w].size):
                                code = <int64_t>ek * n + SJ[w].ordered[a]
                                if not hb[w][code]:
                                    hb[w][code] = 1
                                    n_blocks += 1
                        # C blocks
                        if ei >= 0:
                            for a in range(mj_len):
                                code = <int64_t>ei * n + mj[a]
                                if not hc[w][code]:
                                    hc[w][code] = 1
                                    n_blocks += 1
                        if ej >= 0:
                            for a in range(SI[w].size):
                                code = <int64_t>SI[w].ordered[a] * n + ej
                                if not hc[w][code]:
                                    hc[w][code] = 1
                                    n_blocks += 1
                        # batch: i plane, then j plane, then k plane
                        if ei >= 0:
                            for a in range(mj_len):
                                base = (<int64_t>ei * n + mj[a]) * n
                                for b in range(mk_len):
                                    code = base + mk[b]
                                    if L.pos[code] >= 0:
                                        ledger_mark(&L, code)
                                        n_tasks += 1
                        if ej >= 0:
                            for a in range(SI[w].size):
                                base = (<int64_t>SI[w].ordered[a] * n + ej) * n
                                for b in range(mk_len):
                                    code = base + mk[b]
                                    if L.pos[code] >= 0:
                                        ledger_mark(&L, code)
                                        n_tasks += 1
                        if ek >= 0:
                            for a in range(SI[w].size):
                                base = <int64_t>SI[w].ordered[a] * n
                                for b in range(SJ[w].size):
                                    code = (base + SJ[w].ordered[b]) * n + ek
                                    if L.pos[code] >= 0:
                                        ledger_mark(&L, code)
                                        n_tasks += 1
                        if ei >= 0:
                            iset_add(&SI[w], ei)
                        if ej >= 0:
                            iset_add(&SJ[w], ej)
                        if ek >= 0:
                            iset_add(&SK[w], ek)

            if not cross:
                # static allocation: lexicographic or uniform single task
                if sorted_mode:
                    code = ledger_first(&L)
                else:
                    code = L.unproc[_below(&state, L.remaining)]
                if kind == 0:
                    ii = <int>(code / n)
                    jj = <int>(code % n)
                    if not SI[w].mask[ii]:
                        iset_add(&SI[w], ii)
                        n_blocks += 1
                    if not SJ[w].mask[jj]:
                        iset_add(&SJ[w], jj)
                        n_blocks += 1
                else:
                    ii = <int>(code / (<int64_t>n * n))
                    jj = <int>((code / n) % n)
                    kk = <int>(code % n)
                    if not ha[w][<int64_t>ii * n + kk]:
                        ha[w][<int64_t>ii * n + kk] = 1
                        n_blocks += 1
                    if not hb[w][<int64_t>kk * n + jj]:
                        hb[w][<int64_t>kk * n + jj] = 1
                        n_blocks += 1
                    if not hc[w][<int64_t>ii * n + jj]:
                        hc[w][<int64_t>ii * n + jj] = 1
                        n_blocks += 1
                ledger_mark(&L, code)
                n_tasks = 1

            blocks_arr[w] += n_blocks
            if n_tasks > 0:
                tasks_arr[w] += n_tasks
                s = speed[w]
                if magnitude > 0.0:
                    for code in range(n_tasks):
                        t += 1.0 / s
                        s = s * (1.0 - magnitude + 2.0 * magnitude * _uniform01(&state))
                    speed[w] = s
                else:
                    inv = 1.0 / s
                    for code in range(n_tasks):
                        t += inv
                busy[w] = t
                streak[w] = 0
            else:
                streak[w] += 1
                if streak[w] >= empty_limit:
                    raise SimulationFault(
                        f"worker {w} got {streak[w]} consecutive empty batches"
                    )
            heap_push(&H, busy[w], w)

        total_comm = 0
        makespan = 0.0
        for w in range(p):
            total_comm += blocks_arr[w]
            if busy[w] > makespan:
                makespan = busy[w]
        py_blocks = [blocks_arr[w] for w in range(p)]
        py_tasks = [tasks_arr[w] for w in range(p)]
        py_finish = [busy[w] for w in range(p)]
        return py_blocks, py_tasks, py_finish, total_comm, makespan, trace
    finally:
        if sets_ready:
            for w in range(p):
                iset_free(&SI[w])
                iset_free(&SJ[w])
                iset_free(&SK[w])
        if ha != NULL:
            for w in range(p):
                free(ha[w])
            free(ha)
        if hb != NULL:
            for w in range(p):
                free(hb[w])
            free(hb)
        if hc != NULL:
            for w in range(p):
                free(hc[w])
            free(hc)
        free(speed)
        free(busy)
        free(blocks_arr)
        free(tasks_arr)
        free(streak)
        free(SI)
        free(SJ)
        free(SK)
        free(mj)
        free(mk)
        free(L.unproc)
        free(L.pos)
        free(H.t)
        free(H.k)
