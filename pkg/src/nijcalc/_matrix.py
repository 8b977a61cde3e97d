"""Generic square-matrix algebra over duck-typed ring elements.

Entries only need +, -, * among themselves and division by Python ints.
Used with Poly, RatFn, Fraction, Jet and plain floats/complex alike.
"""

from __future__ import annotations


def mat_mul(A, B):
    n = len(A)
    return [
        [_dot(A[i], [B[k][j] for k in range(n)]) for j in range(n)]
        for i in range(n)
    ]


def _dot(row, col):
    acc = row[0] * col[0]
    for a, b in zip(row[1:], col[1:]):
        acc = acc + a * b
    return acc


def mat_add(A, B):
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_sub(A, B):
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_scale(A, c):
    return [[a * c for a in row] for row in A]


def mat_transpose(A):
    n = len(A)
    return [[A[j][i] for j in range(n)] for i in range(n)]


def mat_trace(A):
    acc = A[0][0]
    for i in range(1, len(A)):
        acc = acc + A[i][i]
    return acc


def mat_add_scalar_diag(A, c):
    """A + c * Id for a ring element c."""
    out = [list(row) for row in A]
    for i in range(len(A)):
        out[i][i] = out[i][i] + c
    return out


def char_sigma(A):
    """Coefficients sigma_1..sigma_n of det(t*Id - A) = t^n + sigma_1 t^{n-1}
    + ... + sigma_n, by Faddeev-LeVerrier.  Exact over exact entries: the only
    divisions are by the integers 1..n."""
    n = len(A)
    sigmas = []
    M = A
    for k in range(1, n + 1):
        c = -(mat_trace(M) / k) if k > 1 else -mat_trace(M)
        sigmas.append(c)
        if k < n:
            M = mat_mul(A, mat_add_scalar_diag(M, c))
    return sigmas


def mat_det(A):
    """Cofactor-expansion determinant; fine for the small sizes used here."""
    n = len(A)
    if n == 1:
        return A[0][0]
    cols = list(range(n))

    def rec(r, cols):
        if len(cols) == 1:
            return A[r][cols[0]]
        acc = None
        for idx, c in enumerate(cols):
            rest = cols[:idx] + cols[idx + 1 :]
            term = A[r][c] * rec(r + 1, rest)
            if idx % 2:
                term = -term
            acc = term if acc is None else acc + term
        return acc

    return rec(0, cols)


def mat_minor(A, i, j):
    return [
        [A[r][c] for c in range(len(A)) if c != j]
        for r in range(len(A))
        if r != i
    ]


def mat_adjugate(A):
    n = len(A)
    if n == 1:
        raise ValueError("adjugate of a 1x1 matrix is the scalar 1; handle upstream")
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            m = mat_det(mat_minor(A, i, j))
            adj[j][i] = m if (i + j) % 2 == 0 else -m
    return adj
