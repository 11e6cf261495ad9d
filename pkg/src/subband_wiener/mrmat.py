"""
Matrix forms of multirate operations.

Every builder returns a dense ``numpy`` array. Sizes follow the observation
vector conventions used throughout the package: a length-``P`` observation
of a signal ``x`` at time ``n`` is ``[x(n-P+1), ..., x(n)]`` and its reversal
is ``[x(n), ..., x(n-P+1)]``.
"""

import numpy as np

__all__ = [
    "decimation_matrix",
    "expansion_matrix",
    "convolution_matrix",
    "reverse",
    "pinv",
    "OBSERVATION",
    "FULL_OUTPUT",
]

OBSERVATION = "observation"
FULL_OUTPUT = "full"


def decimation_matrix(M, l, out_len, in_len):
    """
    Decimation matrix D with ``D[i, j] = 1`` iff ``j == M*i + l``.

    Maps ``[x(0), ..., x(in_len-1)]`` to ``[x(l), x(M+l), ..., x(M(out_len-1)+l)]``.
    """
    if M < 1 or l < 0 or out_len < 1:
        raise ValueError(f"invalid decimation parameters M={M}, l={l}, out_len={out_len}")
    last = M * (out_len - 1) + l
    if last > in_len - 1:
        raise ValueError(
            f"decimation needs input index {last} but in_len={in_len}"
        )
    D = np.zeros((out_len, in_len))
    D[np.arange(out_len), M * np.arange(out_len) + l] = 1.0
    return D


def expansion_matrix(M, in_len):
    """Expander ``U`` of size ``(M(in_len-1)+1, in_len)``, the transpose of ``D^0``."""
    if M < 1 or in_len < 1:
        raise ValueError(f"invalid expansion parameters M={M}, in_len={in_len}")
    return decimation_matrix(M, 0, in_len, M * (in_len - 1) + 1).T


def convolution_matrix(taps, obs_len, form=OBSERVATION):
    """
    Convolution matrix of a causal FIR filter.

    ``form="observation"``
        ``obs_len x (obs_len + Q - 1)`` matrix ``H`` with ``y(n) = H x(n)`` for
        observation vectors ``y(n) = [y(n-P+1) .. y(n)]`` and
        ``x(n) = [x(n-P-Q+2) .. x(n)]``. Row ``i`` holds the reversed taps
        starting at column ``i``.
    ``form="full"``
        ``(obs_len + Q - 1) x obs_len`` Toeplitz matrix giving the complete
        convolution output of ``[x(0) .. x(P-1)]`` (zero outside).
    """
    h = np.asarray(taps, dtype=float).ravel()
    if h.size == 0:
        raise ValueError("convolution matrix needs at least one tap")
    if obs_len < 1:
        raise ValueError(f"obs_len must be positive, got {obs_len}")
    Q = h.size
    if form == OBSERVATION:
        H = np.zeros((obs_len, obs_len + Q - 1))
        hr = h[::-1]
        for i in range(obs_len):
            H[i, i:i + Q] = hr
        return H
    if form == FULL_OUTPUT:
        H = np.zeros((obs_len + Q - 1, obs_len))
        for j in range(obs_len):
            H[j:j + Q, j] = h
        return H
    raise ValueError(f"unknown convolution form {form!r}")


def reverse(B):
    """Reverse rows and columns, ``J B J``. Vectors are simply flipped."""
    B = np.asarray(B)
    if B.ndim == 1:
        return B[::-1].copy()
    return B[::-1, ::-1].copy()


def pinv(A, rcond=None):
    """
    Moore-Penrose pseudoinverse via the SVD.

    Singular values at or below ``max(A.shape) * eps * s_max`` are dropped
    unless ``rcond`` (relative to ``s_max``) is given.
    """
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        raise ValueError("pseudoinverse of an empty matrix")
    if rcond is None:
        rcond = max(A.shape) * np.finfo(float).eps
    return np.linalg.pinv(A, rcond=rcond)


def rank(A, rcond=None):
    """Numerical rank under the same threshold as :func:`pinv`."""
    A = np.asarray(A, dtype=float)
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0:
        return 0
    if rcond is None:
        rcond = max(A.shape) * np.finfo(float).eps
    return int(np.sum(s > rcond * s[0]))
