"""Majorana contractions and Pfaffians for the Gaussian final state.

With ``a_n = c_n^+ + c_n`` and ``b_n = c_n^+ - c_n`` the bond operator is
``sz_n sz_{n+1} = b_n a_{n+1}`` and ``sx_n = a_n b_n``.  Expectation values
of products of distinct Majoranas follow from Wick's theorem as Pfaffians of
the pairwise contraction matrix.
"""

import numpy as np


def _alpha(alpha, d):
    return alpha[abs(d)]


def _beta(beta, d):
    return beta[d] if d >= 0 else -beta[-d]


def contraction(op1, m, op2, n, alpha, beta):
    """``<op1_m op2_n>`` for ``op in {'a', 'b'}``.

    ``alpha`` and ``beta`` are indexed by non-negative separation; negative
    separations use ``alpha_-R = alpha_R`` and ``beta_-R = -beta_R``.
    """
    d = n - m
    delta = 1.0 if d == 0 else 0.0
    if op1 == "b" and op2 == "a":
        return delta - 2.0 * _alpha(alpha, d) + 2.0 * np.real(_beta(beta, d))
    if op1 == "a" and op2 == "b":
        # {a_m, b_n} = 0
        return -(delta - 2.0 * _alpha(alpha, -d) + 2.0 * np.real(_beta(beta, -d)))
    if op1 == "a" and op2 == "a":
        return delta - 2j * np.imag(_beta(beta, d))
    if op1 == "b" and op2 == "b":
        return -delta - 2j * np.imag(_beta(beta, d))
    raise ValueError(f"unknown Majorana pair {op1!r}, {op2!r}")


def pfaffian(A):
    """Pfaffian of a skew-symmetric matrix (Parlett-Reid with pivoting)."""
    A = np.array(A, dtype=complex)
    n = A.shape[0]
    if n % 2:
        return 0.0
    pf = 1.0 + 0j
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(A[k + 1:, k])))
        if kp != k + 1:
            A[[k + 1, kp], :] = A[[kp, k + 1], :]
            A[:, [k + 1, kp]] = A[:, [kp, k + 1]]
            pf = -pf
        piv = A[k + 1, k]
        if piv == 0:
            return 0.0
        pf *= A[k, k + 1]
        if k + 2 < n:
            tau = A[k, k + 2:] / A[k, k + 1]
            # eliminate rows/cols k+2.. using the (k, k+1) pivot block
            A[k + 2:, k + 2:] += np.outer(tau, A[k + 2:, k + 1]) - np.outer(A[k + 2:, k + 1], tau)
    return pf


def expectation(ops, alpha, beta):
    """``<op_1 op_2 ... op_2m>`` for distinct Majoranas ``ops = [(kind, site)]``."""
    n = len(ops)
    G = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(i + 1, n):
            G[i, j] = contraction(ops[i][0], ops[i][1], ops[j][0], ops[j][1], alpha, beta)
            G[j, i] = -G[i, j]
    return pfaffian(G)


def string_operators(R, start=0):
    """Majorana word ``b_0 a_1 b_1 a_2 ... b_{R-1} a_R`` for ``sz_0 sz_R``."""
    ops = []
    for j in range(start, start + R):
        ops.append(("b", j))
        ops.append(("a", j + 1))
    return ops
