# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops for the tracer and field modules.

Every function here has a numpy twin with the same signature in
``_pykernels``; ``uwbrt.kernels`` picks one at import time.

Scene geometry is passed as flat arrays:

* ``boxes``: (nb, 6) float64 rows ``xmin, ymin, zmin, xmax, ymax, zmax``
* ``has_floor``: 1 if the half-space z < 0 is solid
* surface id of face ``f`` of box ``i`` is ``6*i + f`` with
  ``f = 2*axis + side`` (side 0 = min face, outward normal along -axis);
  the floor is surface ``6*nb``
* ``edges``: (ne, 13) rows ``start(3), direction(3), length, normal_a(3),
  normal_b(3)``
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, floor, ceil, exp, fmin, fmax, M_PI, INFINITY
from libc.stdlib cimport malloc, realloc, free

cnp.import_array()

cdef double EPS = 1e-9
cdef double PARALLEL = 1e-12
cdef double C0 = 299792458.0
cdef double EPS0 = 8.8541878128e-12


cdef struct PairBuf:
    long long* a
    long long* b
    Py_ssize_t n
    Py_ssize_t cap


cdef int buf_init(PairBuf* buf, Py_ssize_t cap) nogil:
    buf.a = <long long*> malloc(cap * sizeof(long long))
    buf.b = <long long*> malloc(cap * sizeof(long long))
    buf.n = 0
    buf.cap = cap
    if buf.a == NULL or buf.b == NULL:
        return -1
    return 0


cdef int buf_push(PairBuf* buf, long long a, long long b) nogil:
    cdef long long* na
    cdef long long* nb
    if buf.n == buf.cap:
        na = <long long*> realloc(buf.a, 2 * buf.cap * sizeof(long long))
        if na == NULL:
            return -1
        buf.a = na
        nb = <long long*> realloc(buf.b, 2 * buf.cap * sizeof(long long))
        if nb == NULL:
            return -1
        buf.b = nb
        buf.cap *= 2
    buf.a[buf.n] = a
    buf.b[buf.n] = b
    buf.n += 1
    return 0


cdef void buf_free(PairBuf* buf) nogil:
    free(buf.a)
    free(buf.b)


cdef inline int slab(const double* o, const double* d, const double* b,
                     double* tn, double* tf, int* ax) noexcept nogil:
    # Touching a face, edge or corner without entering the open box is a miss.
    cdef double tnear = -INFINITY, tfar = INFINITY, t0, t1, tmp, inv
    cdef int a, axis = -1
    for a in range(3):
        if fabs(d[a]) < PARALLEL:
            if o[a] <= b[a] + EPS or o[a] >= b[a + 3] - EPS:
                return 0
        else:
            inv = 1.0 / d[a]
            t0 = (b[a] - o[a]) * inv
            t1 = (b[a + 3] - o[a]) * inv
            if t0 > t1:
                tmp = t0
                t0 = t1
                t1 = tmp
            if t0 > tnear:
                tnear = t0
                axis = a
            if t1 < tfar:
                tfar = t1
    if tnear >= tfar:
        return 0
    tn[0] = tnear
    tf[0] = tfar
    ax[0] = axis
    return 1


cdef inline int nearest_hit(const double* o, const double* d, const double* boxes,
                            Py_ssize_t nb, int has_floor, double* t_out,
                            long long* sid_out) noexcept nogil:
    """Return 1 on hit, 0 on escape, -1 if the origin is inside a box."""
    cdef double best = INFINITY, tn, tf, t
    cdef long long sid = -1
    cdef int ax
    cdef Py_ssize_t i
    for i in range(nb):
        if slab(o, d, &boxes[6 * i], &tn, &tf, &ax):
            if tn > EPS:
                if tn < best:
                    best = tn
                    sid = 6 * i + 2 * ax + (0 if d[ax] > 0 else 1)
            elif tf > EPS:
                return -1
    if has_floor and d[2] < 0.0:
        t = -o[2] / d[2]
        if t > EPS and t < best:
            best = t
            sid = 6 * nb
    if sid < 0:
        return 0
    t_out[0] = best
    sid_out[0] = sid
    return 1


cdef inline int clear_between(const double* a, const double* b, const double* boxes,
                              Py_ssize_t nb, int has_floor) noexcept nogil:
    cdef double d[3]
    cdef double length, tn, tf
    cdef int k, ax
    cdef Py_ssize_t i
    if has_floor and (a[2] < -EPS or b[2] < -EPS):
        return 0
    for k in range(3):
        d[k] = b[k] - a[k]
    length = sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
    if length <= EPS:
        return 1
    for k in range(3):
        d[k] /= length
    for i in range(nb):
        if slab(a, d, &boxes[6 * i], &tn, &tf, &ax):
            # blocked only if the segment runs more than EPS through the box
            if fmin(tf, length) - fmax(tn, 0.0) > EPS:
                return 0
    return 1


cdef inline void plane_of(long long sid, const double* boxes, Py_ssize_t nb,
                          int* axis, double* coord, double* sign) noexcept nogil:
    cdef long long i, f
    if sid == 6 * nb:
        axis[0] = 2
        coord[0] = 0.0
        sign[0] = 1.0
        return
    i = sid // 6
    f = sid % 6
    axis[0] = <int>(f // 2)
    if f % 2:
        coord[0] = boxes[6 * i + 3 + axis[0]]
        sign[0] = 1.0
    else:
        coord[0] = boxes[6 * i + axis[0]]
        sign[0] = -1.0


cdef inline void _face_normal(long long sid, int* axis, double* sign) noexcept nogil:
    cdef long long f = sid % 6
    axis[0] = <int>(f // 2)
    sign[0] = 1.0 if f % 2 else -1.0


cdef inline int capture(const double* o, const double* d, double seg, double L,
                        long long code, const double* g, Py_ssize_t nx, Py_ssize_t ny,
                        double cap_coef, PairBuf* out) noexcept nogil:
    cdef double x0 = g[0], y0 = g[1], zr = g[4]
    cdef double sp[2]
    cdef double rmax = cap_coef * (L + seg)
    cdef double ta, tb, tmp, umin, umax, vmin, vmax, c, t0, t1, va, vb
    cdef double w0, w1, w2, t, dist2, r
    cdef Py_ssize_t nn[2]
    cdef double org[2]
    cdef int u, v
    cdef Py_ssize_t i, j, i0, i1, j0, j1, ix, iy
    sp[0] = g[2]
    sp[1] = g[3]
    nn[0] = nx
    nn[1] = ny
    org[0] = x0
    org[1] = y0
    if seg <= 0:
        return 0
    if fabs(d[2]) < 1e-300:
        if fabs(o[2] - zr) > rmax:
            return 0
        ta = 0.0
        tb = seg
    else:
        ta = (zr - rmax - o[2]) / d[2]
        tb = (zr + rmax - o[2]) / d[2]
        if ta > tb:
            tmp = ta
            ta = tb
            tb = tmp
        if ta < 0.0:
            ta = 0.0
        if tb > seg:
            tb = seg
        if ta > tb:
            return 0
    u = 0 if fabs(d[0]) >= fabs(d[1]) else 1
    v = 1 - u
    if fabs(d[u]) < 1e-12:
        # near-vertical: xy footprint is a small disc
        i0 = <Py_ssize_t>ceil((o[0] + ta * d[0] - rmax - x0) / sp[0] - 0.5)
        i1 = <Py_ssize_t>floor((o[0] + tb * d[0] + rmax - x0) / sp[0] - 0.5)
        j0 = <Py_ssize_t>ceil((o[1] + ta * d[1] - rmax - y0) / sp[1] - 0.5)
        j1 = <Py_ssize_t>floor((o[1] + tb * d[1] + rmax - y0) / sp[1] - 0.5)
        if i0 < 0: i0 = 0
        if j0 < 0: j0 = 0
        if i1 > nx - 1: i1 = nx - 1
        if j1 > ny - 1: j1 = ny - 1
        for iy in range(j0, j1 + 1):
            for ix in range(i0, i1 + 1):
                w0 = x0 + (ix + 0.5) * sp[0] - o[0]
                w1 = y0 + (iy + 0.5) * sp[1] - o[1]
                w2 = zr - o[2]
                t = w0 * d[0] + w1 * d[1] + w2 * d[2]
                if t < 0.0 or t > seg:
                    continue
                dist2 = w0 * w0 + w1 * w1 + w2 * w2 - t * t
                r = cap_coef * (L + t)
                if dist2 <= r * r:
                    if buf_push(out, iy * nx + ix, code):
                        return -1
        return 0
    umin = o[u] + ta * d[u]
    umax = o[u] + tb * d[u]
    if umin > umax:
        tmp = umin; umin = umax; umax = tmp
    i0 = <Py_ssize_t>ceil((umin - rmax - org[u]) / sp[u] - 0.5)
    i1 = <Py_ssize_t>floor((umax + rmax - org[u]) / sp[u] - 0.5)
    if i0 < 0: i0 = 0
    if i1 > nn[u] - 1: i1 = nn[u] - 1
    for i in range(i0, i1 + 1):
        c = org[u] + (i + 0.5) * sp[u]
        t0 = (c - rmax - o[u]) / d[u]
        t1 = (c + rmax - o[u]) / d[u]
        if t0 > t1:
            tmp = t0; t0 = t1; t1 = tmp
        if t0 < ta: t0 = ta
        if t1 > tb: t1 = tb
        if t0 > t1:
            continue
        va = o[v] + t0 * d[v]
        vb = o[v] + t1 * d[v]
        if va > vb:
            tmp = va; va = vb; vb = tmp
        j0 = <Py_ssize_t>ceil((va - rmax - org[v]) / sp[v] - 0.5)
        j1 = <Py_ssize_t>floor((vb + rmax - org[v]) / sp[v] - 0.5)
        if j0 < 0: j0 = 0
        if j1 > nn[v] - 1: j1 = nn[v] - 1
        for j in range(j0, j1 + 1):
            if u == 0:
                ix = i
                iy = j
            else:
                ix = j
                iy = i
            w0 = x0 + (ix + 0.5) * sp[0] - o[0]
            w1 = y0 + (iy + 0.5) * sp[1] - o[1]
            w2 = zr - o[2]
            t = w0 * d[0] + w1 * d[1] + w2 * d[2]
            if t < 0.0 or t > seg:
                continue
            dist2 = w0 * w0 + w1 * w1 + w2 * w2 - t * t
            r = cap_coef * (L + t)
            if dist2 <= r * r:
                if buf_push(out, iy * nx + ix, code):
                    return -1
    return 0


def trace_capture(double[::1] tx, double[:, ::1] dirs, double[:, ::1] boxes,
                  int has_floor, int max_refl, double[::1] grid, Py_ssize_t nx,
                  Py_ssize_t ny, double cap_coef, double max_len, long long base):
    """Shoot rays from ``tx`` and record (cell, signature code) captures.

    ``grid`` is ``x0, y0, dx, dy, z``: receiver ``(ix, iy)`` sits at
    ``(x0 + (ix + .5) dx, y0 + (iy + .5) dy, z)`` and has cell index
    ``iy * nx + ix``.  Only segments after at least one reflection are
    tested; the code of a reflection sequence ``s0, s1, ...`` is
    ``sum((s_k + 1) * base**k)``.
    """
    cdef Py_ssize_t nr = dirs.shape[0], nb = boxes.shape[0], r
    cdef const double* bx = &boxes[0, 0] if nb > 0 else NULL
    cdef double o[3]
    cdef double d[3]
    cdef double t, seg, L
    cdef long long sid, code, mult
    cdef int b, status, axis, k, err = 0
    cdef double coord, sign
    cdef PairBuf out
    if buf_init(&out, 1 << 16):
        raise MemoryError()
    with nogil:
        for r in range(nr):
            for k in range(3):
                o[k] = tx[k]
                d[k] = dirs[r, k]
            L = 0.0
            code = 0
            mult = 1
            for b in range(max_refl + 1):
                status = nearest_hit(o, d, bx, nb, has_floor, &t, &sid)
                if status < 0:
                    break
                seg = t if status == 1 else INFINITY
                if L + seg > max_len:
                    seg = max_len - L
                if b >= 1:
                    if capture(o, d, seg, L, code, &grid[0], nx, ny, cap_coef, &out):
                        err = 1
                        break
                if status == 0 or b == max_refl or L + t >= max_len:
                    break
                plane_of(sid, bx, nb, &axis, &coord, &sign)
                for k in range(3):
                    o[k] = o[k] + t * d[k]
                o[axis] = coord
                d[axis] = -d[axis]
                code += (sid + 1) * mult
                mult *= base
                L += t
            if err:
                break
    if err:
        buf_free(&out)
        raise MemoryError()
    cells = np.empty(out.n, dtype=np.int64)
    codes = np.empty(out.n, dtype=np.int64)
    cdef long long[::1] cv = cells
    cdef long long[::1] kv = codes
    for r in range(out.n):
        cv[r] = out.a[r]
        kv[r] = out.b[r]
    buf_free(&out)
    return cells, codes


def refine(double[::1] tx, double[:, ::1] rx, long long[:, ::1] sids,
           double[:, ::1] boxes, int has_floor):
    """Image-method solve for each row's reflection sequence.

    Returns ``ok`` (uint8, n) and reflection points (n, K, 3); rows of
    ``sids`` are padded with -1.
    """
    cdef Py_ssize_t n = sids.shape[0], K = sids.shape[1], nb = boxes.shape[0]
    cdef const double* bx = &boxes[0, 0] if nb > 0 else NULL
    ok_arr = np.zeros(n, dtype=np.uint8)
    pts_arr = np.zeros((n, K, 3), dtype=np.float64)
    cdef unsigned char[::1] ok = ok_arr
    cdef double[:, :, ::1] pts = pts_arr
    cdef double img[8][3]
    cdef double cur[3]
    cdef double prev[3]
    cdef double nxt[3]
    cdef int axes[8]
    cdef double coords[8]
    cdef double signs[8]
    cdef Py_ssize_t row, k, m, kk
    cdef int good, a, q, ax2
    cdef double denom, s, dd
    cdef Py_ssize_t bi
    cdef long long sid
    if K > 7:
        raise ValueError("at most 7 reflections supported")
    with nogil:
        for row in range(n):
            m = 0
            while m < K and sids[row, m] >= 0:
                m += 1
            for q in range(3):
                img[0][q] = tx[q]
            for k in range(m):
                plane_of(sids[row, k], bx, nb, &axes[k], &coords[k], &signs[k])
                for q in range(3):
                    img[k + 1][q] = img[k][q]
                a = axes[k]
                img[k + 1][a] = 2.0 * coords[k] - img[k][a]
            good = 1
            for q in range(3):
                cur[q] = rx[row, q]
            k = m - 1
            while k >= 0:
                a = axes[k]
                denom = img[k + 1][a] - cur[a]
                if fabs(denom) < 1e-15:
                    good = 0
                    break
                s = (coords[k] - cur[a]) / denom
                if not (s > 0.0 and s < 1.0):
                    good = 0
                    break
                for q in range(3):
                    cur[q] = cur[q] + s * (img[k + 1][q] - cur[q])
                cur[a] = coords[k]
                sid = sids[row, k]
                if sid != 6 * nb:
                    bi = sid // 6
                    for q in range(3):
                        if q != a:
                            if cur[q] < boxes[bi, q] - EPS or cur[q] > boxes[bi, q + 3] + EPS:
                                good = 0
                    if not good:
                        break
                for q in range(3):
                    pts[row, k, q] = cur[q]
                k -= 1
            if good:
                # each reflection point needs both neighbours strictly on the outward side
                for k in range(m):
                    a = axes[k]
                    for q in range(3):
                        prev[q] = tx[q] if k == 0 else pts[row, k - 1, q]
                        nxt[q] = rx[row, q] if k == m - 1 else pts[row, k + 1, q]
                    if signs[k] * (prev[a] - coords[k]) <= EPS or signs[k] * (nxt[a] - coords[k]) <= EPS:
                        good = 0
                        break
            if good:
                for k in range(m + 1):
                    for q in range(3):
                        prev[q] = tx[q] if k == 0 else pts[row, k - 1, q]
                        nxt[q] = rx[row, q] if k == m else pts[row, k, q]
                    dd = 0.0
                    for q in range(3):
                        dd += (nxt[q] - prev[q]) * (nxt[q] - prev[q])
                    if dd <= EPS * EPS or not clear_between(prev, nxt, bx, nb, has_floor):
                        good = 0
                        break
            ok[row] = good
    return ok_arr, pts_arr


def diffract(double[::1] tx, double[:, ::1] rx, double[:, ::1] edges,
             double[:, ::1] boxes, int has_floor):
    """First-order edge diffraction points for each receiver row.

    Returns ``(rx_index, edge_index, points)`` for every edge whose
    stationary (Keller-cone) point lies strictly inside the edge, is a
    silhouette edge for the transmitter or the receiver, and has two
    unobstructed legs.
    """
    cdef Py_ssize_t n = rx.shape[0], ne = edges.shape[0], nb = boxes.shape[0]
    cdef const double* bx = &boxes[0, 0] if nb > 0 else NULL
    cdef Py_ssize_t row, e
    cdef int q, sil1, sil2
    cdef double v1[3]
    cdef double v2[3]
    cdef double Q[3]
    cdef double r[3]
    cdef double t1, t2, d1, d2, tq, a1, b1, a2, b2, p
    cdef PairBuf out
    cdef double* qbuf
    cdef Py_ssize_t qcap = 1024
    qbuf = <double*> malloc(3 * qcap * sizeof(double))
    if buf_init(&out, qcap) or qbuf == NULL:
        raise MemoryError()
    with nogil:
        for row in range(n):
            for q in range(3):
                r[q] = rx[row, q]
            for e in range(ne):
                t1 = 0.0
                t2 = 0.0
                for q in range(3):
                    v1[q] = tx[q] - edges[e, q]
                    v2[q] = r[q] - edges[e, q]
                    t1 += v1[q] * edges[e, 3 + q]
                    t2 += v2[q] * edges[e, 3 + q]
                d1 = 0.0
                d2 = 0.0
                for q in range(3):
                    p = v1[q] - t1 * edges[e, 3 + q]
                    d1 += p * p
                    p = v2[q] - t2 * edges[e, 3 + q]
                    d2 += p * p
                d1 = sqrt(d1)
                d2 = sqrt(d2)
                if d1 < EPS or d2 < EPS:
                    continue
                tq = t1 + (t2 - t1) * d1 / (d1 + d2)
                if tq <= EPS or tq >= edges[e, 6] - EPS:
                    continue
                for q in range(3):
                    Q[q] = edges[e, q] + tq * edges[e, 3 + q]
                a1 = 0.0
                b1 = 0.0
                a2 = 0.0
                b2 = 0.0
                for q in range(3):
                    a1 += (tx[q] - Q[q]) * edges[e, 7 + q]
                    b1 += (tx[q] - Q[q]) * edges[e, 10 + q]
                    a2 += (r[q] - Q[q]) * edges[e, 7 + q]
                    b2 += (r[q] - Q[q]) * edges[e, 10 + q]
                if (a1 <= EPS and b1 <= EPS) or (a2 <= EPS and b2 <= EPS):
                    continue
                sil1 = (a1 > EPS) != (b1 > EPS)
                sil2 = (a2 > EPS) != (b2 > EPS)
                if not (sil1 or sil2):
                    continue
                if not clear_between(Q, &tx[0], bx, nb, has_floor):
                    continue
                if not clear_between(Q, r, bx, nb, has_floor):
                    continue
                if out.n == qcap:
                    qcap *= 2
                    qbuf = <double*> realloc(qbuf, 3 * qcap * sizeof(double))
                    if qbuf == NULL:
                        break
                for q in range(3):
                    qbuf[3 * out.n + q] = Q[q]
                if buf_push(&out, row, e):
                    break
    if qbuf == NULL:
        buf_free(&out)
        raise MemoryError()
    rows = np.empty(out.n, dtype=np.int64)
    eids = np.empty(out.n, dtype=np.int64)
    qpts = np.empty((out.n, 3), dtype=np.float64)
    cdef long long[::1] rv = rows
    cdef long long[::1] ev = eids
    cdef double[:, ::1] qv = qpts
    for row in range(out.n):
        rv[row] = out.a[row]
        ev[row] = out.b[row]
        for q in range(3):
            qv[row, q] = qbuf[3 * row + q]
    buf_free(&out)
    free(qbuf)
    return rows, eids, qpts


def segments_clear(double[:, ::1] a, double[:, ::1] b, double[:, ::1] boxes, int has_floor):
    """uint8 mask: 1 where the open segment a[i] -> b[i] meets no solid."""
    cdef Py_ssize_t n = a.shape[0], nb = boxes.shape[0], i
    cdef const double* bx = &boxes[0, 0] if nb > 0 else NULL
    res = np.empty(n, dtype=np.uint8)
    cdef unsigned char[::1] rv = res
    with nogil:
        for i in range(n):
            rv[i] = clear_between(&a[i, 0], &b[i, 0], bx, nb, has_floor)
    return res


cdef inline double complex csqrt_(double complex z) noexcept nogil:
    cdef double a = z.real, b = z.imag
    cdef double m = sqrt(a * a + b * b)
    cdef double re = sqrt(0.5 * (m + a))
    cdef double im = sqrt(0.5 * (m - a))
    if b < 0:
        im = -im
    return re + 1j * im


def reflection_dyadics(double[:, :, ::1] pts, long long[::1] nref, long long[:, ::1] sids,
                       Py_ssize_t nb, signed char[::1] kind, double[::1] eps_r,
                       double[::1] sigma, double[::1] dh, double[::1] freqs):
    """Polarisation transfer matrix of each reflection chain.

    ``pts[i, :nref[i] + 2]`` holds tx, reflection points, rx.  Returns
    complex (n, nf, 3, 3) products of per-bounce dyadics
    ``r_perp e e^T + r_par p_out p_in^T`` including the roughness factor.
    """
    cdef Py_ssize_t n = pts.shape[0], nf = freqs.shape[0]
    out_arr = np.zeros((n, nf, 3, 3), dtype=np.complex128)
    cdef double complex[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t i, f, k, a, b, c, m
    cdef double sin_[3]
    cdef double sout[3]
    cdef double nrm[3]
    cdef double ep[3]
    cdef double pin[3]
    cdef double pout[3]
    cdef double norm, cos_t, sin2, rough, lam
    cdef double complex ec, root, rp, rl
    cdef double complex R[3][3]
    cdef double complex M[3][3]
    cdef double complex T[3][3]
    cdef long long sid, mat
    cdef int axis
    cdef double coord, sign
    with nogil:
        for i in range(n):
            m = nref[i]
            for f in range(nf):
                for a in range(3):
                    for b in range(3):
                        M[a][b] = 1.0 if a == b else 0.0
                lam = C0 / freqs[f]
                for k in range(m):
                    norm = 0.0
                    for a in range(3):
                        sin_[a] = pts[i, k + 1, a] - pts[i, k, a]
                        norm += sin_[a] * sin_[a]
                    norm = sqrt(norm)
                    for a in range(3):
                        sin_[a] /= norm
                    norm = 0.0
                    for a in range(3):
                        sout[a] = pts[i, k + 2, a] - pts[i, k + 1, a]
                        norm += sout[a] * sout[a]
                    norm = sqrt(norm)
                    for a in range(3):
                        sout[a] /= norm
                    sid = sids[i, k]
                    if sid == 6 * nb:
                        axis = 2
                        sign = 1.0
                    else:
                        _face_normal(sid, &axis, &sign)
                    nrm[0] = 0.0
                    nrm[1] = 0.0
                    nrm[2] = 0.0
                    nrm[axis] = sign
                    cos_t = -(sin_[0] * nrm[0] + sin_[1] * nrm[1] + sin_[2] * nrm[2])
                    if cos_t > 1.0:
                        cos_t = 1.0
                    # e_perp = s_in x n
                    ep[0] = sin_[1] * nrm[2] - sin_[2] * nrm[1]
                    ep[1] = sin_[2] * nrm[0] - sin_[0] * nrm[2]
                    ep[2] = sin_[0] * nrm[1] - sin_[1] * nrm[0]
                    norm = sqrt(ep[0] * ep[0] + ep[1] * ep[1] + ep[2] * ep[2])
                    if norm < 1e-12:
                        ep[0] = 0.0
                        ep[1] = 0.0
                        ep[2] = 0.0
                        ep[(axis + 1) % 3] = 1.0
                    else:
                        for a in range(3):
                            ep[a] /= norm
                    pin[0] = ep[1] * sin_[2] - ep[2] * sin_[1]
                    pin[1] = ep[2] * sin_[0] - ep[0] * sin_[2]
                    pin[2] = ep[0] * sin_[1] - ep[1] * sin_[0]
                    pout[0] = ep[1] * sout[2] - ep[2] * sout[1]
                    pout[1] = ep[2] * sout[0] - ep[0] * sout[2]
                    pout[2] = ep[0] * sout[1] - ep[1] * sout[0]
                    mat = sid
                    if kind[mat] == 0:
                        rp = -1.0
                        rl = 1.0
                    else:
                        ec = eps_r[mat] - 1j * sigma[mat] / (2.0 * M_PI * freqs[f] * EPS0)
                        sin2 = 1.0 - cos_t * cos_t
                        root = csqrt_(ec - sin2)
                        rp = (cos_t - root) / (cos_t + root)
                        rl = (ec * cos_t - root) / (ec * cos_t + root)
                    if dh[mat] > 0.0:
                        rough = M_PI * dh[mat] * cos_t / lam
                        rough = exp(-8.0 * rough * rough)
                        rp = rp * rough
                        rl = rl * rough
                    for a in range(3):
                        for b in range(3):
                            R[a][b] = rp * ep[a] * ep[b] + rl * pout[a] * pin[b]
                    for a in range(3):
                        for b in range(3):
                            T[a][b] = 0.0
                            for c in range(3):
                                T[a][b] = T[a][b] + R[a][c] * M[c][b]
                    for a in range(3):
                        for b in range(3):
                            M[a][b] = T[a][b]
                for a in range(3):
                    for b in range(3):
                        out[i, f, a, b] = M[a][b]
    return out_arr
