import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kzising import majorana

from wick_oracle import wick


@settings(max_examples=50)
@given(st.integers(1, 8), st.integers(0, 2 ** 31))
def test_pfaffian_squares_to_det(m, seed):
    rng = np.random.default_rng(seed)
    n = 2 * m
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    A = A - A.T
    pf = majorana.pfaffian(A)
    assert pf ** 2 == pytest.approx(np.linalg.det(A), rel=1e-9)


def test_pfaffian_small():
    assert majorana.pfaffian([[0, 2.5], [-2.5, 0]]) == 2.5
    A = np.zeros((4, 4))
    A[0, 1], A[0, 2], A[0, 3], A[1, 2], A[1, 3], A[2, 3] = 1, 2, 3, 4, 5, 6
    A = A - A.T
    assert majorana.pfaffian(A) == pytest.approx(1 * 6 - 2 * 5 + 3 * 4)
    assert majorana.pfaffian(np.zeros((3, 3))) == 0.0


def test_expectation_matches_matching_enumeration():
    rng = np.random.default_rng(3)
    alpha = rng.normal(size=12) * 0.1
    beta = (rng.normal(size=12) + 1j * rng.normal(size=12)) * 0.1
    beta[0] = 0
    ops = majorana.string_operators(3) + [("a", 7), ("b", 9)]
    c = lambda o1, o2: majorana.contraction(o1[0], o1[1], o2[0], o2[1], alpha, beta)
    assert majorana.expectation(ops, alpha, beta) == pytest.approx(wick(ops, c), rel=1e-12)


def test_anticommutation():
    alpha = np.array([0.5, -0.2, 0.1])
    beta = np.array([0, 0.2 + 0.1j, -0.05j])
    for m in range(3):
        for n in range(3):
            ab = majorana.contraction("a", m, "b", n, alpha, beta)
            ba = majorana.contraction("b", n, "a", m, alpha, beta)
            assert ab == pytest.approx(-ba)


def test_string_operators():
    assert majorana.string_operators(2) == [("b", 0), ("a", 1), ("b", 1), ("a", 2)]
