"""Numpy implementations of the compiled kernels.

Same signatures and results as ``_ckernels``; vectorised over rays,
paths or edges so small scenes stay usable without a compiler.
"""

import numpy as np

EPS = 1e-9
# direction components below this are treated as parallel (drift < EPS over any path)
PARALLEL = 1e-12
C0 = 299792458.0
EPS0 = 8.8541878128e-12


def _slab(o, d, boxes):
    """Broadcast slab test. o, d: (n, 3); boxes (nb, 6) -> (hit, tnear, tfar, axis) of shape (n, nb)."""
    o = o[:, None, :]
    d = d[:, None, :]
    lo = boxes[None, :, :3]
    hi = boxes[None, :, 3:]
    zero = np.abs(d) < PARALLEL
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        t0 = (lo - o) * inv
        t1 = (hi - o) * inv
    tlo = np.minimum(t0, t1)
    thi = np.maximum(t0, t1)
    outside = zero & ((o <= lo + EPS) | (o >= hi - EPS))
    tlo = np.where(zero, -np.inf, tlo)
    thi = np.where(zero, np.inf, thi)
    # first axis attaining the max, matching the strict '>' update in C
    axis = np.argmax(tlo, axis=2)
    tnear = np.take_along_axis(tlo, axis[..., None], axis=2)[..., 0]
    tfar = thi.min(axis=2)
    hit = ~outside.any(axis=2) & (tnear < tfar)
    return hit, tnear, tfar, axis


def _clear(a, b, boxes, has_floor):
    a = np.asarray(a, dtype=float).reshape(-1, 3)
    b = np.asarray(b, dtype=float).reshape(-1, 3)
    d = b - a
    length = np.linalg.norm(d, axis=1)
    short = length <= EPS
    safe = np.where(short, 1.0, length)
    d = d / safe[:, None]
    ok = np.ones(len(a), dtype=bool)
    if has_floor:
        ok &= ~((a[:, 2] < -EPS) | (b[:, 2] < -EPS))
    if len(boxes):
        hit, tn, tf, _ = _slab(a, d, boxes)
        chord = np.minimum(tf, length[:, None]) - np.maximum(tn, 0.0)
        blocked = hit & (chord > EPS)
        ok &= ~(blocked.any(axis=1) & ~short)
    return ok


def segments_clear(a, b, boxes, has_floor):
    return _clear(a, b, np.asarray(boxes, dtype=float).reshape(-1, 6), has_floor).astype(np.uint8)


def _plane(sid, nb, boxes):
    if sid == 6 * nb:
        return 2, 0.0, 1.0
    i, f = divmod(int(sid), 6)
    axis, side = divmod(f, 2)
    coord = boxes[i, axis + 3 * side]
    return axis, coord, (1.0 if side else -1.0)


def _nearest_hit(o, d, boxes, has_floor):
    """Vectorised nearest surface. Returns (status, t, sid) arrays."""
    n = len(o)
    nb = len(boxes)
    best = np.full(n, np.inf)
    sid = np.full(n, -1, dtype=np.int64)
    inside = np.zeros(n, dtype=bool)
    if nb:
        hit, tn, tf, axis = _slab(o, d, boxes)
        front = hit & (tn > EPS)
        inside = (hit & (tn <= EPS) & (tf > EPS)).any(axis=1)
        tcand = np.where(front, tn, np.inf)
        bi = np.argmin(tcand, axis=1)
        rows = np.arange(n)
        tb = tcand[rows, bi]
        ax = axis[rows, bi]
        side = np.where(d[rows, ax] > 0, 0, 1)
        has = np.isfinite(tb)
        best = np.where(has, tb, best)
        sid = np.where(has, 6 * bi + 2 * ax + side, sid)
    if has_floor:
        with np.errstate(divide="ignore", invalid="ignore"):
            tfl = np.where(d[:, 2] < 0.0, -o[:, 2] / d[:, 2], np.inf)
        take = (tfl > EPS) & (tfl < best)
        best = np.where(take, tfl, best)
        sid = np.where(take, 6 * nb, sid)
    status = np.where(sid >= 0, 1, 0)
    status = np.where(inside, -1, status)
    return status, best, sid


def _capture_one(o, d, seg, L, code, grid, nx, ny, cap_coef, cells, codes):
    x0, y0, dx, dy, zr = grid
    if seg <= 0:
        return
    rmax = cap_coef * (L + seg)
    if d[2] == 0.0:
        if abs(o[2] - zr) > rmax:
            return
        ta, tb = 0.0, seg
    else:
        ta, tb = sorted(((zr - rmax - o[2]) / d[2], (zr + rmax - o[2]) / d[2]))
        ta, tb = max(ta, 0.0), min(tb, seg)
        if ta > tb:
            return
    xs = (o[0] + ta * d[0], o[0] + tb * d[0])
    ys = (o[1] + ta * d[1], o[1] + tb * d[1])
    i0 = max(int(np.ceil((min(xs) - rmax - x0) / dx - 0.5)), 0)
    i1 = min(int(np.floor((max(xs) + rmax - x0) / dx - 0.5)), nx - 1)
    j0 = max(int(np.ceil((min(ys) - rmax - y0) / dy - 0.5)), 0)
    j1 = min(int(np.floor((max(ys) + rmax - y0) / dy - 0.5)), ny - 1)
    if i0 > i1 or j0 > j1:
        return
    ix, iy = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1))
    w = np.stack([x0 + (ix + 0.5) * dx - o[0], y0 + (iy + 0.5) * dy - o[1],
                  np.full(ix.shape, zr - o[2])], axis=-1)
    t = w @ d
    dist2 = (w * w).sum(axis=-1) - t * t
    r = cap_coef * (L + t)
    keep = (t >= 0.0) & (t <= seg) & (dist2 <= r * r)
    cells.append((iy * nx + ix)[keep])
    codes.append(np.full(int(keep.sum()), code, dtype=np.int64))


def trace_capture(tx, dirs, boxes, has_floor, max_refl, grid, nx, ny, cap_coef, max_len, base):
    boxes = np.asarray(boxes, dtype=float).reshape(-1, 6)
    dirs = np.asarray(dirs, dtype=float)
    nb = len(boxes)
    n = len(dirs)
    o = np.repeat(np.asarray(tx, dtype=float)[None, :], n, axis=0)
    d = dirs.copy()
    L = np.zeros(n)
    code = np.zeros(n, dtype=np.int64)
    mult = 1
    alive = np.ones(n, dtype=bool)
    cells, codes = [], []
    for b in range(max_refl + 1):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        status, t, sid = _nearest_hit(o[idx], d[idx], boxes, has_floor)
        alive[idx[status < 0]] = False
        seg = np.where(status == 1, t, np.inf)
        seg = np.where(L[idx] + seg > max_len, max_len - L[idx], seg)
        if b >= 1:
            for k in np.flatnonzero(status >= 0):
                i = idx[k]
                _capture_one(o[i], d[i], seg[k], L[i], int(code[i]), grid, nx, ny,
                             cap_coef, cells, codes)
        cont = (status == 1) & (b < max_refl) & (L[idx] + t < max_len)
        alive[idx[~cont]] = False
        for k in np.flatnonzero(cont):
            i = idx[k]
            axis, coord, _ = _plane(sid[k], nb, boxes)
            o[i] = o[i] + t[k] * d[i]
            o[i, axis] = coord
            d[i, axis] = -d[i, axis]
            code[i] += (int(sid[k]) + 1) * mult
            L[i] += t[k]
        mult *= base
    if cells:
        return np.concatenate(cells).astype(np.int64), np.concatenate(codes)
    return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)


def refine(tx, rx, sids, boxes, has_floor):
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float).reshape(-1, 3)
    sids = np.asarray(sids, dtype=np.int64)
    boxes = np.asarray(boxes, dtype=float).reshape(-1, 6)
    n, K = sids.shape
    if K > 7:
        raise ValueError("at most 7 reflections supported")
    nb = len(boxes)
    ok = np.zeros(n, dtype=np.uint8)
    pts = np.zeros((n, K, 3))
    for row in range(n):
        seq = [int(s) for s in sids[row] if s >= 0]
        m = len(seq)
        planes = [_plane(s, nb, boxes) for s in seq]
        img = [tx.copy()]
        for axis, coord, _ in planes:
            nxt = img[-1].copy()
            nxt[axis] = 2.0 * coord - nxt[axis]
            img.append(nxt)
        cur = rx[row].copy()
        good = True
        for k in range(m - 1, -1, -1):
            axis, coord, _ = planes[k]
            denom = img[k + 1][axis] - cur[axis]
            if abs(denom) < 1e-15:
                good = False
                break
            s = (coord - cur[axis]) / denom
            if not (0.0 < s < 1.0):
                good = False
                break
            cur = cur + s * (img[k + 1] - cur)
            cur[axis] = coord
            if seq[k] != 6 * nb:
                bi = seq[k] // 6
                for q in range(3):
                    if q != axis and (cur[q] < boxes[bi, q] - EPS or cur[q] > boxes[bi, q + 3] + EPS):
                        good = False
                if not good:
                    break
            pts[row, k] = cur
        if good:
            chain = [tx] + [pts[row, k] for k in range(m)] + [rx[row]]
            for k in range(m):
                axis, coord, sign = planes[k]
                if sign * (chain[k][axis] - coord) <= EPS or sign * (chain[k + 2][axis] - coord) <= EPS:
                    good = False
                    break
        if good:
            a = np.array(chain[:-1])
            b = np.array(chain[1:])
            if (((b - a) ** 2).sum(axis=1) <= EPS * EPS).any():
                good = False
            elif not _clear(a, b, boxes, has_floor).all():
                good = False
        ok[row] = good
    return ok, pts


def diffract(tx, rx, edges, boxes, has_floor):
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float).reshape(-1, 3)
    edges = np.asarray(edges, dtype=float).reshape(-1, 13)
    boxes = np.asarray(boxes, dtype=float).reshape(-1, 6)
    start, e, length = edges[:, :3], edges[:, 3:6], edges[:, 6]
    na, nbn = edges[:, 7:10], edges[:, 10:13]
    rows, eids, qpts = [], [], []
    v1 = tx[None, :] - start
    t1 = (v1 * e).sum(axis=1)
    d1 = np.linalg.norm(v1 - t1[:, None] * e, axis=1)
    for row, r in enumerate(rx):
        v2 = r[None, :] - start
        t2 = (v2 * e).sum(axis=1)
        d2 = np.linalg.norm(v2 - t2[:, None] * e, axis=1)
        valid = (d1 >= EPS) & (d2 >= EPS)
        with np.errstate(divide="ignore", invalid="ignore"):
            tq = t1 + (t2 - t1) * d1 / (d1 + d2)
        valid &= (tq > EPS) & (tq < length - EPS)
        Q = start + tq[:, None] * e
        u1 = tx[None, :] - Q
        u2 = r[None, :] - Q
        a1, b1 = (u1 * na).sum(1), (u1 * nbn).sum(1)
        a2, b2 = (u2 * na).sum(1), (u2 * nbn).sum(1)
        valid &= ~((a1 <= EPS) & (b1 <= EPS)) & ~((a2 <= EPS) & (b2 <= EPS))
        valid &= ((a1 > EPS) != (b1 > EPS)) | ((a2 > EPS) != (b2 > EPS))
        idx = np.flatnonzero(valid)
        if idx.size:
            Qv = Q[idx]
            vis = _clear(Qv, np.repeat(tx[None, :], len(idx), 0), boxes, has_floor)
            vis &= _clear(Qv, np.repeat(r[None, :], len(idx), 0), boxes, has_floor)
            idx = idx[vis]
        rows.append(np.full(idx.size, row, dtype=np.int64))
        eids.append(idx.astype(np.int64))
        qpts.append(Q[idx])
    if not rows:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros((0, 3))
    return np.concatenate(rows), np.concatenate(eids), np.concatenate(qpts).reshape(-1, 3)


def reflection_dyadics(pts, nref, sids, nb, kind, eps_r, sigma, dh, freqs):
    pts = np.asarray(pts, dtype=float)
    freqs = np.asarray(freqs, dtype=float)
    n = len(pts)
    nf = len(freqs)
    out = np.zeros((n, nf, 3, 3), dtype=complex)
    out[:] = np.eye(3)
    lam = C0 / freqs
    for i in range(n):
        M = np.broadcast_to(np.eye(3, dtype=complex), (nf, 3, 3)).copy()
        for k in range(int(nref[i])):
            s_in = pts[i, k + 1] - pts[i, k]
            s_in = s_in / np.linalg.norm(s_in)
            s_out = pts[i, k + 2] - pts[i, k + 1]
            s_out = s_out / np.linalg.norm(s_out)
            sid = int(sids[i, k])
            if sid == 6 * nb:
                axis, sign = 2, 1.0
            else:
                f = sid % 6
                axis, sign = f // 2, (1.0 if f % 2 else -1.0)
            nrm = np.zeros(3)
            nrm[axis] = sign
            cos_t = min(-float(s_in @ nrm), 1.0)
            ep = np.cross(s_in, nrm)
            norm = np.linalg.norm(ep)
            if norm < 1e-12:
                ep = np.zeros(3)
                ep[(axis + 1) % 3] = 1.0
            else:
                ep = ep / norm
            p_in = np.cross(ep, s_in)
            p_out = np.cross(ep, s_out)
            if kind[sid] == 0:
                rp = np.full(nf, -1.0 + 0j)
                rl = np.full(nf, 1.0 + 0j)
            else:
                ec = eps_r[sid] - 1j * sigma[sid] / (2.0 * np.pi * freqs * EPS0)
                root = np.sqrt(ec - (1.0 - cos_t * cos_t))
                rp = (cos_t - root) / (cos_t + root)
                rl = (ec * cos_t - root) / (ec * cos_t + root)
            if dh[sid] > 0.0:
                rough = np.exp(-8.0 * (np.pi * dh[sid] * cos_t / lam) ** 2)
                rp = rp * rough
                rl = rl * rough
            R = (rp[:, None, None] * np.outer(ep, ep)[None]
                 + rl[:, None, None] * np.outer(p_out, p_in)[None])
            M = R @ M
        out[i] = M
    return out
