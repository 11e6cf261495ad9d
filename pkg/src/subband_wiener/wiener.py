"""
MSE-optimal FIR matrix synthesis filters.

Row ``i`` of the synthesis filter estimates ``d_i(n) = u(Mn - i - d)`` from
the stacked subband vector ``v_s(n) = K [u(Mn), ..., u(Mn-q+1)]``. The
normal equations ``A a_i = b_i`` are always consistent, so every solution is

    a_i = pinv(A) b_i + (I - pinv(A) A) w

and all of them share the same MSE.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bank import build_K, nufb_to_ufb
from .mrmat import pinv, rank
from .stochastic import acf, correlation_bundle

__all__ = [
    "WienerProblem",
    "SynthesisSolution",
    "DelayScan",
    "make_problem",
    "assemble_normal_equations",
    "solve",
    "min_mse_channel",
    "solution_mse",
    "mse_vs_delay",
    "to_db",
]


def to_db(x):
    return 10 * np.log10(np.maximum(x, np.finfo(float).tiny))


@dataclass(frozen=True)
class WienerProblem:
    K: object  # KMatrix
    corr: object  # CorrelationBundle
    delay: int

    def __post_init__(self):
        if self.delay < 0:
            raise ValueError("delay must be non-negative")
        if self.corr.size != self.K.q:
            raise ValueError(
                f"correlation size {self.corr.size} does not match K with q={self.K.q}"
            )

    @property
    def M(self):
        return self.K.M

    @property
    def P(self):
        return self.K.P

    @property
    def L(self):
        return self.K.L

    def at_delay(self, delay):
        return WienerProblem(self.K, self.corr, delay)


def make_problem(bank, model, P, delay, delays=()):
    """
    Assemble a problem for ``bank`` (blocked first if non-uniform).

    ``delays`` lists extra desired-signal delays whose correlation rows
    should be precomputed for later :meth:`WienerProblem.at_delay` calls.
    """
    if P < 1:
        raise ValueError(f"synthesis length must be positive, got {P}")
    if not bank.is_uniform:
        bank = nufb_to_ufb(bank)
    K = build_K(bank, P)
    needed = {i + d for d in (delay, *delays) for i in range(K.M)}
    corr = correlation_bundle(model, K.M, P, K.Q, needed)
    return WienerProblem(K, corr, delay)


def assemble_normal_equations(prob):
    """``A = (K Ruu K^T)^T`` and ``b_i = (r^{i+d} K^T)^T`` for ``i < M``."""
    K = prob.K.entries
    A = (K @ prob.corr.Ruu @ K.T).T
    A = 0.5 * (A + A.T)
    b = [K @ prob.corr.row(i + prob.delay) for i in range(prob.M)]
    return A, b


@dataclass
class SynthesisSolution:
    """
    A member of the synthesis family. ``rows[i, r*P + l]`` multiplies
    ``v_r(n - l)`` in output ``y_i(n)``.
    """

    A: np.ndarray
    A_pinv: np.ndarray
    particular_rows: np.ndarray
    nullspace_projector: np.ndarray
    w: np.ndarray
    rows: np.ndarray
    delay: int
    L: int
    P: int
    channel_mse: Optional[np.ndarray] = None
    residuals: np.ndarray = field(default=None, repr=False)
    scale: float = 1.0

    @property
    def M(self):
        return self.rows.shape[0]

    @property
    def total_mse(self):
        return None if self.channel_mse is None else float(np.sum(self.channel_mse))

    @property
    def channel_mse_db(self):
        return to_db(self.channel_mse)

    @property
    def total_mse_db(self):
        return float(to_db(self.total_mse))

    @property
    def rank(self):
        return rank(self.A)

    @property
    def nullity(self):
        """Dimension of the free-parameter space for each row."""
        return self.A.shape[1] - self.rank

    def filters(self):
        """Synthesis taps as an ``(M, L, P)`` array, ``[i, r, l] = a_{i,r}(l)``."""
        return self.rows.reshape(self.M, self.L, self.P)


def min_mse_channel(prob, A_pinv, b_i):
    """``r(0) - b_i^T pinv(A) b_i``, clipped at zero."""
    return max(prob.corr.r0 - float(b_i @ A_pinv @ b_i), 0.0)


def solution_mse(prob, rows):
    """Per-channel MSE of arbitrary synthesis rows under the problem's statistics."""
    A, b = assemble_normal_equations(prob)
    rows = np.atleast_2d(rows)
    J = [prob.corr.r0 - 2 * a @ b_i + a @ A @ a for a, b_i in zip(rows, b)]
    return np.maximum(np.array(J), 0.0)


def solve(prob, w=None):
    """
    Wiener synthesis rows for ``prob``; ``w`` (length ``LP``) picks a member of
    the family and defaults to zero, the minimum-norm solution.
    """
    A, b = assemble_normal_equations(prob)
    n = A.shape[0]
    w = np.zeros(n) if w is None else np.asarray(w, dtype=float).ravel()
    if w.size != n:
        raise ValueError(f"w must have length LP={n}, got {w.size}")
    A_pinv = pinv(A)
    proj = np.eye(n) - A_pinv @ A
    particular = np.array([A_pinv @ b_i for b_i in b])
    rows = particular + proj @ w
    residuals = np.array([np.linalg.norm(A @ a - b_i) / (1 + np.linalg.norm(b_i))
                          for a, b_i in zip(rows, b)])
    mse = np.array([min_mse_channel(prob, A_pinv, b_i) for b_i in b])
    return SynthesisSolution(A, A_pinv, particular, proj, w, rows, prob.delay,
                             prob.L, prob.P, mse, residuals)


@dataclass(frozen=True)
class DelayScan:
    delays: np.ndarray
    channel_mse: np.ndarray  # (len(delays), M)

    @property
    def total_mse(self):
        return self.channel_mse.sum(axis=1)

    @property
    def best_delay(self):
        return int(self.delays[np.argmin(self.total_mse)])

    def rows(self):
        for d, J in zip(self.delays, self.channel_mse):
            yield int(d), J, float(J.sum())


def mse_vs_delay(prob, delays=None, workers=None):
    """
    Minimum MSE for each delay via the quadratic form
    ``r(0) - r^{i+d} B (r^{i+d})^T`` with ``B = K^T pinv(K Ruu K^T) K``.

    ``delays`` defaults to ``0..q-1``; evaluation order does not affect output.
    """
    K = prob.K.entries
    if delays is None:
        delays = range(prob.K.q)
    delays = np.array(sorted(set(int(d) for d in delays)))
    if delays.size == 0:
        raise ValueError("empty delay range")
    if delays[0] < 0:
        raise ValueError("delays must be non-negative")
    B = K.T @ pinv(K @ prob.corr.Ruu @ K.T) @ K
    B = 0.5 * (B + B.T)
    r, q, M = prob.corr.r, prob.K.q, prob.M
    need = int(delays[-1]) + M - 1 + q - 1
    if need >= r.size:
        if prob.corr.model is None:
            raise ValueError(f"delay scan needs the acf up to lag {need}")
        r = acf(prob.corr.model, need)
    m = np.arange(q)

    def one(d):
        J = np.empty(M)
        for i in range(M):
            rho = r[np.abs(m - i - d)]
            J[i] = max(prob.corr.r0 - rho @ B @ rho, 0.0)
        return J

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            J = list(ex.map(one, delays))
    else:
        J = [one(d) for d in delays]
    return DelayScan(delays, np.array(J))
