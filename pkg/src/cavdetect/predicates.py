"""Filtered geometric predicates in three dimensions.

Both predicates evaluate the determinant in double precision first and fall
back to exact rational arithmetic when the result is within a forward error
bound of zero.  Inputs are 3-tuples of floats; every float is a dyadic
rational, so the exact path is truly exact.
"""

from fractions import Fraction

_EPS = 2.0 ** -53
# Forward error bound factors (Shewchuk-style, rounded up for safety margin).
_O3D_BOUND = (8.0 + 64.0 * _EPS) * _EPS
_INS_BOUND = (24.0 + 256.0 * _EPS) * _EPS


def orient3d(a, b, c, d):
    """Sign of det[b - a, c - a, d - a].

    Positive when (a, b, c, d) is a right-handed tetrahedron, e.g.
    ``orient3d((0,0,0), (1,0,0), (0,1,0), (0,0,1)) == 1``.
    """
    ax, ay, az = a
    bx = b[0] - ax
    by = b[1] - ay
    bz = b[2] - az
    cx = c[0] - ax
    cy = c[1] - ay
    cz = c[2] - az
    dx = d[0] - ax
    dy = d[1] - ay
    dz = d[2] - az
    m1 = cy * dz
    m2 = cz * dy
    m3 = cx * dz
    m4 = cz * dx
    m5 = cx * dy
    m6 = cy * dx
    det = bx * (m1 - m2) - by * (m3 - m4) + bz * (m5 - m6)
    perm = (abs(bx) * (abs(m1) + abs(m2)) + abs(by) * (abs(m3) + abs(m4))
            + abs(bz) * (abs(m5) + abs(m6)))
    bound = _O3D_BOUND * perm
    if det > bound:
        return 1
    if det < -bound:
        return -1
    return _orient3d_exact(a, b, c, d)


def _orient3d_exact(a, b, c, d):
    ax, ay, az = (Fraction(v) for v in a)
    bx, by, bz = Fraction(b[0]) - ax, Fraction(b[1]) - ay, Fraction(b[2]) - az
    cx, cy, cz = Fraction(c[0]) - ax, Fraction(c[1]) - ay, Fraction(c[2]) - az
    dx, dy, dz = Fraction(d[0]) - ax, Fraction(d[1]) - ay, Fraction(d[2]) - az
    det = bx * (cy * dz - cz * dy) - by * (cx * dz - cz * dx) + bz * (cx * dy - cy * dx)
    return (det > 0) - (det < 0)


def insphere(a, b, c, d, e):
    """Position of ``e`` relative to the sphere through a, b, c, d.

    Returns +1 when ``e`` lies strictly inside, -1 strictly outside and 0 on
    the sphere, assuming ``orient3d(a, b, c, d) > 0``.  The sign flips for a
    negatively oriented tetrahedron.
    """
    ex, ey, ez = e
    aex = a[0] - ex
    aey = a[1] - ey
    aez = a[2] - ez
    bex = b[0] - ex
    bey = b[1] - ey
    bez = b[2] - ez
    cex = c[0] - ex
    cey = c[1] - ey
    cez = c[2] - ez
    dex = d[0] - ex
    dey = d[1] - ey
    dez = d[2] - ez

    ab = aex * bey - bex * aey
    bc = bex * cey - cex * bey
    cd = cex * dey - dex * cey
    da = dex * aey - aex * dey
    ac = aex * cey - cex * aey
    bd = bex * dey - dex * bey

    abc = aez * bc - bez * ac + cez * ab
    bcd = bez * cd - cez * bd + dez * bc
    cda = cez * da + dez * ac + aez * cd
    dab = dez * ab + aez * bd + bez * da

    alift = aex * aex + aey * aey + aez * aez
    blift = bex * bex + bey * bey + bez * bez
    clift = cex * cex + cey * cey + cez * cez
    dlift = dex * dex + dey * dey + dez * dez

    det = (dlift * abc - clift * dab) + (blift * cda - alift * bcd)

    pab = abs(aex * bey) + abs(bex * aey)
    pbc = abs(bex * cey) + abs(cex * bey)
    pcd = abs(cex * dey) + abs(dex * cey)
    pda = abs(dex * aey) + abs(aex * dey)
    pac = abs(aex * cey) + abs(cex * aey)
    pbd = abs(bex * dey) + abs(dex * bey)
    aez, bez, cez, dez = abs(aez), abs(bez), abs(cez), abs(dez)
    perm = (dlift * (aez * pbc + bez * pac + cez * pab)
            + clift * (dez * pab + aez * pbd + bez * pda)
            + blift * (cez * pda + dez * pac + aez * pcd)
            + alift * (bez * pcd + cez * pbd + dez * pbc))
    bound = _INS_BOUND * perm
    # Sign convention: the raw determinant is negative for "inside" with a
    # right-handed (a, b, c, d).
    if det > bound:
        return -1
    if det < -bound:
        return 1
    return _insphere_exact(a, b, c, d, e)


def _insphere_exact(a, b, c, d, e):
    ex, ey, ez = (Fraction(v) for v in e)
    rows = []
    for p in (a, b, c, d):
        x, y, z = Fraction(p[0]) - ex, Fraction(p[1]) - ey, Fraction(p[2]) - ez
        rows.append((x, y, z, x * x + y * y + z * z))
    (aex, aey, aez, alift), (bex, bey, bez, blift), (cex, cey, cez, clift), \
        (dex, dey, dez, dlift) = rows
    ab = aex * bey - bex * aey
    bc = bex * cey - cex * bey
    cd = cex * dey - dex * cey
    da = dex * aey - aex * dey
    ac = aex * cey - cex * aey
    bd = bex * dey - dex * bey
    abc = aez * bc - bez * ac + cez * ab
    bcd = bez * cd - cez * bd + dez * bc
    cda = cez * da + dez * ac + aez * cd
    dab = dez * ab + aez * bd + bez * da
    det = (dlift * abc - clift * dab) + (blift * cda - alift * bcd)
    return (det < 0) - (det > 0)
