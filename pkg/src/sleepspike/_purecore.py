"""Pure-Python compute kernels.

These are the hot inner loops of the whole toolkit: Jacobian-coordinate
point arithmetic (consumed by every scalar-multiplication engine) and
integer LLL reduction (consumed by the key-recovery attack). A compiled
twin lives in ``_fastcore.pyx`` with the same call signatures; the
active implementation is chosen in ``_backend``.

Points are bare ``(X, Y, Z)`` integer triples, 0 <= coordinate < p.
The triple ``(0, 0, 0)`` encodes the identity, and the group operations
preserve it bit-exactly: doubling the all-zero triple yields the
all-zero triple, adding it returns the other operand unchanged. Any
triple with Z == 0 also represents the identity.
"""

BACKEND = "python"


def jac_double(X1, Y1, Z1, p, a):
    """Return 2*(X1, Y1, Z1) on y^2 = x^3 + ax + b over GF(p).

    Branch-free in the value domain: the all-zero triple maps to the
    all-zero triple through the formula itself.
    """
    YY = Y1 * Y1 % p
    S = 4 * X1 * YY % p
    ZZ = Z1 * Z1 % p
    M = (3 * X1 * X1 + a * ZZ * ZZ) % p
    X3 = (M * M - 2 * S) % p
    Y3 = (M * (S - X3) - 8 * YY * YY) % p
    Z3 = 2 * Y1 * Z1 % p
    return X3, Y3, Z3


def jac_add(X1, Y1, Z1, X2, Y2, Z2, p, a):
    """Full Jacobian addition; identity operands pass through unchanged."""
    if Z1 == 0:
        return X2, Y2, Z2
    if Z2 == 0:
        return X1, Y1, Z1
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
    """Add the affine point (x2, y2) to (X1, Y1, Z1).

    The affine operand must not be the identity; an identity accumulator
    yields the lifted affine point.
    """
    if Z1 == 0:
        return x2, y2, 1
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
    """LLL-reduce an integer row basis; delta = delta_num / delta_den.

    All-integer variant: instead of rational Gram-Schmidt coefficients
    mu[k][j] it tracks lam[k][j] = mu[k][j] * d[j+1], where d[i] is the
    Gram determinant of the first i rows (d[0] = 1). Every quantity is
    an exact integer and every division below is exact, so the output
    satisfies the size-reduction and Lovasz conditions exactly.

    Returns a new list of rows spanning the same lattice; the input is
    not mutated. Raises ValueError on linearly dependent rows.
    """
    b = [list(row) for row in rows]
    m = len(b)
    if m <= 1:
        return b
    ncols = len(b[0])

    d = [0] * (m + 1)
    d[0] = 1
    lam = [[0] * m for _ in range(m)]

    def dot(u, v):
        s = 0
        for i in range(ncols):
            s += u[i] * v[i]
        return s

    def orthogonalize(k):
        # incremental integer Gram-Schmidt for row k
        bk = b[k]
        for j in range(k + 1):
            u = dot(bk, b[j])
            lamj = lam[j]
            for i in range(j):
                u = (d[i + 1] * u - lam[k][i] * lamj[i]) // d[i]
            if j < k:
                lam[k][j] = u
            else:
                if u == 0:
                    raise ValueError("rows are linearly dependent")
                d[k + 1] = u

    def size_reduce(k, l):
        dl = d[l + 1]
        if 2 * abs(lam[k][l]) <= dl:
            return
        q = (2 * lam[k][l] + dl) // (2 * dl)
        bk, bl = b[k], b[l]
        for i in range(ncols):
            bk[i] -= q * bl[i]
        lam[k][l] -= q * dl
        lamk, laml = lam[k], lam[l]
        for i in range(l):
            lamk[i] -= q * laml[i]

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
            # Lovasz condition fails: swap rows k-1 and k
            b[k], b[k - 1] = b[k - 1], b[k]
            for j in range(k - 1):
                lam[k][j], lam[k - 1][j] = lam[k - 1][j], lam[k][j]
            dnew = (d[k - 1] * d[k + 1] + lam_k * lam_k) // d[k]
            for i in range(k + 1, kmax + 1):
                t = lam[i][k]
                lam[i][k] = (d[k + 1] * lam[i][k - 1] - lam_k * t) // d[k]
                lam[i][k - 1] = (dnew * t + lam_k * lam[i][k]) // d[k + 1]
            d[k] = dnew
            k = max(k - 1, 1)
        else:
            for l in range(k - 2, -1, -1):
                size_reduce(k, l)
            k += 1
    return b
