# cython: language_level=3
# cython: boundscheck=False
# cython: wraparound=False
# cython: cdivision=True
"""Compiled twin of ``_purecore``: same kernels, same semantics.

Coordinates are canonical residues (0 <= value < p). For moduli that
fit a machine word (p < 2^30, i.e. the exhaustive-test toy curves) the
point kernels run entirely in C integers; larger moduli use Python
object arithmetic, where CPython's big-integer core dominates anyway.
Both paths compute the identical canonical values, and the backend
equivalence tests compare this module against ``_purecore`` output for
output.
"""

BACKEND = "cython"

DEF WORD_LIMIT = 0x3FFFFFFF  # products of two residues stay below 2^60


cdef inline unsigned long long _csub(unsigned long long x, unsigned long long y,
                                     unsigned long long p) nogil:
    # (x - y) mod p for x, y in [0, p)
    return x + p - y if x < y else x - y


cdef (unsigned long long, unsigned long long, unsigned long long) _cdouble(
        unsigned long long x1, unsigned long long y1, unsigned long long z1,
        unsigned long long p, unsigned long long a) nogil:
    cdef unsigned long long yy, s, zz, m, x3, y3, z3, t
    yy = y1 * y1 % p
    s = 4 * x1 % p * yy % p
    zz = z1 * z1 % p
    m = (3 * x1 % p * x1 + a * zz % p * zz) % p
    x3 = _csub(m * m % p, 2 * s % p, p)
    t = m * _csub(s, x3, p) % p
    y3 = _csub(t, 8 * (yy * yy % p) % p, p)
    z3 = 2 * y1 * z1 % p
    return x3, y3, z3


def jac_double(X1, Y1, Z1, p, a):
    cdef unsigned long long cp, cx, cy, cz, ca
    if p <= WORD_LIMIT:
        cp = p
        cx, cy, cz = _cdouble(X1, Y1, Z1, cp, a)
        return int(cx), int(cy), int(cz)
    YY = Y1 * Y1 % p
    S = 4 * X1 * YY % p
    ZZ = Z1 * Z1 % p
    M = (3 * X1 * X1 + a * ZZ * ZZ) % p
    X3 = (M * M - 2 * S) % p
    Y3 = (M * (S - X3) - 8 * YY * YY) % p
    Z3 = 2 * Y1 * Z1 % p
    return X3, Y3, Z3


def jac_add(X1, Y1, Z1, X2, Y2, Z2, p, a):
    cdef unsigned long long cp, ca, x1, y1, z1, x2, y2, z2
    cdef unsigned long long z1z1, z2z2, u1, u2, s1, s2, h, r, hh, hhh, v, x3, y3, z3, t
    if Z1 == 0:
        return X2, Y2, Z2
    if Z2 == 0:
        return X1, Y1, Z1
    if p <= WORD_LIMIT:
        cp = p
        ca = a
        x1, y1, z1 = X1, Y1, Z1
        x2, y2, z2 = X2, Y2, Z2
        z1z1 = z1 * z1 % cp
        z2z2 = z2 * z2 % cp
        u1 = x1 * z2z2 % cp
        u2 = x2 * z1z1 % cp
        s1 = y1 * z2 % cp * z2z2 % cp
        s2 = y2 * z1 % cp * z1z1 % cp
        if u1 == u2:
            if s1 != s2:
                return 0, 0, 0
            x3, y3, z3 = _cdouble(x1, y1, z1, cp, ca)
            return int(x3), int(y3), int(z3)
        h = _csub(u2, u1, cp)
        r = _csub(s2, s1, cp)
        hh = h * h % cp
        hhh = h * hh % cp
        v = u1 * hh % cp
        x3 = _csub(_csub(r * r % cp, hhh, cp), 2 * v % cp, cp)
        t = r * _csub(v, x3, cp) % cp
        y3 = _csub(t, s1 * hhh % cp, cp)
        z3 = z1 * z2 % cp * h % cp
        return int(x3), int(y3), int(z3)
    Z1Z1 = Z1 * Z1 % p
    Z2Z2 = Z2 * Z2 % p
    U1 = X1 * Z2Z2 % p
    U2 = X2 * Z1Z1 % p
    S1 = Y1 * Z2 * Z2Z2 % p
    S2 = Y2 * Z1 * Z1Z1 % p
    if U1 == U2:
        if S1 != S2:
            return 0, 0, 0
        return jac_double(X1, Y1, Z1, p, a)
    H = (U2 - U1) % p
    R = (S2 - S1) % p
    HH = H * H % p
    HHH = H * HH % p
    V = U1 * HH % p
    X3 = (R * R - HHH - 2 * V) % p
    Y3 = (R * (V - X3) - S1 * HHH) % p
    Z3 = Z1 * Z2 * H % p
    return X3, Y3, Z3


def jac_add_mixed(X1, Y1, Z1, x2, y2, p, a):
    cdef unsigned long long cp, ca, x1, y1, z1, ax, ay
    cdef unsigned long long z1z1, u2, s2, h, r, hh, hhh, v, x3, y3, z3, t
    if Z1 == 0:
        return x2, y2, 1
    if p <= WORD_LIMIT:
        cp = p
        ca = a
        x1, y1, z1 = X1, Y1, Z1
        ax, ay = x2, y2
        z1z1 = z1 * z1 % cp
        u2 = ax * z1z1 % cp
        s2 = ay * z1 % cp * z1z1 % cp
        if u2 == x1:
            if s2 != y1:
                return 0, 0, 0
            x3, y3, z3 = _cdouble(x1, y1, z1, cp, ca)
            return int(x3), int(y3), int(z3)
        h = _csub(u2, x1, cp)
        r = _csub(s2, y1, cp)
        hh = h * h % cp
        hhh = h * hh % cp
        v = x1 * hh % cp
        x3 = _csub(_csub(r * r % cp, hhh, cp), 2 * v % cp, cp)
        t = r * _csub(v, x3, cp) % cp
        y3 = _csub(t, y1 * hhh % cp, cp)
        z3 = z1 * h % cp
        return int(x3), int(y3), int(z3)
    Z1Z1 = Z1 * Z1 % p
    U2 = x2 * Z1Z1 % p
    S2 = y2 * Z1 * Z1Z1 % p
    if U2 == X1:
        if S2 != Y1:
            return 0, 0, 0
        return jac_double(X1, Y1, Z1, p, a)
    H = (U2 - X1) % p
    R = (S2 - Y1) % p
    HH = H * H % p
    HHH = H * HH % p
    V = X1 * HH % p
    X3 = (R * R - HHH - 2 * V) % p
    Y3 = (R * (V - X3) - Y1 * HHH) % p
    Z3 = Z1 * H % p
    return X3, Y3, Z3


def lll_reduce_rows(rows, delta_num, delta_den):
    cdef Py_ssize_t m = len(rows)
    b = [list(row) for row in rows]
    if m <= 1:
        return b
    cdef Py_ssize_t ncols = len(b[0])
    cdef Py_ssize_t i, j, l, k, kmax

    d = [0] * (m + 1)
    d[0] = 1
    lam = [[0] * m for _ in range(m)]

    def orthogonalize(Py_ssize_t k):
        cdef Py_ssize_t jj, ii
        bk = b[k]
        for jj in range(k + 1):
            bj = b[jj]
            u = 0
            for ii in range(ncols):
                u += bk[ii] * bj[ii]
            lamj = lam[jj]
            lamk = lam[k]
            for ii in range(jj):
                u = (d[ii + 1] * u - lamk[ii] * lamj[ii]) // d[ii]
            if jj < k:
                lam[k][jj] = u
            else:
                if u == 0:
                    raise ValueError("rows are linearly dependent")
                d[k + 1] = u

    def size_reduce(Py_ssize_t k, Py_ssize_t l):
        cdef Py_ssize_t ii
        dl = d[l + 1]
        lamkl = lam[k][l]
        if 2 * abs(lamkl) <= dl:
            return
        q = (2 * lamkl + dl) // (2 * dl)
        bk = b[k]
        bl = b[l]
        for ii in range(ncols):
            bk[ii] -= q * bl[ii]
        lam[k][l] = lamkl - q * dl
        lamk = lam[k]
        laml = lam[l]
        for ii in range(l):
            lamk[ii] -= q * laml[ii]

    orthogonalize(0)
    kmax = 0
    k = 1
    while k < m:
        if k > kmax:
            kmax = k
            orthogonalize(k)
        size_reduce(k, k - 1)
        lam_k = lam[k][k - 1]
        if delta_den * d[k + 1] * d[k - 1] < delta_num * d[k] * d[k] - delta_den * lam_k * lam_k:
            b[k], b[k - 1] = b[k - 1], b[k]
            for j in range(k - 1):
                lam[k][j], lam[k - 1][j] = lam[k - 1][j], lam[k][j]
            dnew = (d[k - 1] * d[k + 1] + lam_k * lam_k) // d[k]
            for i in range(k + 1, kmax + 1):
                lami = lam[i]
                t = lami[k]
                lami[k] = (d[k + 1] * lami[k - 1] - lam_k * t) // d[k]
                lami[k - 1] = (dnew * t + lam_k * lami[k]) // d[k + 1]
            d[k] = dnew
            if k > 1:
                k -= 1
        else:
            for l in range(k - 2, -1, -1):
                size_reduce(k, l)
            k += 1
    return b
