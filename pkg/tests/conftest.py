import numpy as np
import pytest

# The 5x5 l1 example, typed in independently of the package copy.
EX_C = np.array(
    [[1, 3, 7, 0, 8], [2, 4, 5, 8, 7], [7, 9, 6, 0, 1], [2, 0, 1, 4, 7], [2, 5, 8, 3, 8]],
    dtype=float,
)
EX_Y = np.array([2.0, 4.0, -5.0, 3.0, 9.0])
EX_STABLE = np.array([1.86, 3.79, -5.27, 2.85, 8.69])


def exact_gamma_norm(C, gamma):
    """``||I - gamma C C^T||`` from a dense symmetric eigendecomposition."""
    ev = np.linalg.eigvalsh(C @ C.T)
    return float(np.max(np.abs(1.0 - gamma * ev)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_lure_data(rng, i):
    """Seeded 4-dim Lur'e data with P(A) strongly monotone and P B = C^T.

    Even ``i`` gives symmetric ``P A``; ``i % 3 == 2`` gives a non-identity P.
    Returns ``(A, b, B, C, P, m, step)``.
    """
    n = 4
    m = int(rng.integers(2, 5))
    Q = np.linalg.qr(rng.standard_normal((n, n)))[0]
    S = Q @ np.diag(rng.uniform(1, 3, n)) @ Q.T
    G = rng.standard_normal((n, n))
    K = np.zeros((n, n)) if i % 2 == 0 else (G - G.T) / 2
    U = np.linalg.qr(rng.standard_normal((m, m)))[0]
    V = np.linalg.qr(rng.standard_normal((n, m)))[0]
    C = U @ np.diag(rng.uniform(1, 3, m)) @ V.T
    if i % 3 == 2:
        R = rng.standard_normal((n, n))
        P = R @ R.T + np.eye(n)
    else:
        P = np.eye(n)
    Pinv = np.linalg.inv(P)
    A = Pinv @ (S + K)
    B = Pinv @ C.T
    b = 3 * rng.standard_normal(n)
    step = np.linalg.eigvalsh(S)[0] / np.linalg.norm(S + K, 2) ** 2
    return A, b, B, C, P, m, step
