"""
Perfect-reconstruction analysis in the time domain.

With ``s_i = K^T a_i`` the polyphase product of synthesis and analysis banks
is read off directly from the ``s_i``. The bank reconstructs perfectly iff
``s_i = c e_{i+d}`` for all ``i``, which is possible iff ``pinv(K) K - I``
has a band of at least ``M`` all-zero rows/columns; the band position fixes
the admissible delays.
"""

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .mrmat import decimation_matrix, pinv
from .wiener import SynthesisSolution

__all__ = [
    "PolyphaseProduct",
    "PseudocirculantCheck",
    "PRCertificate",
    "PRInfeasibleError",
    "DelayOutOfRangeError",
    "polyphase_product",
    "check_pseudocirculant",
    "pr_feasibility",
    "pr_solution",
    "nullspace_structure_check",
    "reconstruction_delay",
]

DEFAULT_TOL = 1e-8


class PRInfeasibleError(ValueError):
    pass


class DelayOutOfRangeError(ValueError):
    pass


@dataclass(frozen=True)
class PolyphaseProduct:
    """``p[i, j]`` is the length ``P+T-1`` filter in row ``i``, column ``j``."""

    p: np.ndarray
    s: np.ndarray
    T: int


def _rows(solution):
    return np.atleast_2d(solution.rows if isinstance(solution, SynthesisSolution) else solution)


def polyphase_product(K, solution):
    """``p_{i,j} = D^j K^T a_i``, with ``K^T a_i`` zero-extended where ``D^j`` runs past it."""
    rows = _rows(solution)
    M, P, Q, q = K.M, K.P, K.Q, K.q
    if rows.shape[1] != K.shape[0]:
        raise ValueError(f"synthesis rows have length {rows.shape[1]}, K has {K.shape[0]} rows")
    T = -(-Q // M)
    n = P + T - 1
    s = rows @ K.entries
    s_ext = np.zeros((rows.shape[0], M * n))
    s_ext[:, :q] = s
    D = [decimation_matrix(M, j, n, M * n) for j in range(M)]
    p = np.array([[D[j] @ s_ext[i] for j in range(M)] for i in range(rows.shape[0])])
    return PolyphaseProduct(p, s, T)


@dataclass(frozen=True)
class PseudocirculantCheck:
    passed: bool
    c: float
    d0: int
    properties_pass: Optional[bool] = None

    @property
    def agree(self):
        return self.properties_pass is None or self.properties_pass == self.passed


def _peak(s0):
    d0 = int(np.argmax(np.abs(s0)))
    return float(s0[d0]), d0


def _selector_match(s, tol):
    M, q = s.shape
    c, d0 = _peak(s[0])
    if c == 0.0 or d0 + M - 1 >= q:
        return False, c, d0
    target = np.zeros_like(s)
    target[np.arange(M), d0 + np.arange(M)] = c
    return bool(np.max(np.abs(s - target)) <= tol * abs(c)), c, d0


def _pseudocirculant_properties(s, tol):
    """Same decision reached through the polyphase-domain properties."""
    M, q = s.shape
    c, d0 = _peak(s[0])
    if c == 0.0:
        return False
    thr = tol * abs(c)
    # entries at or below the threshold count as exact zeros
    s = np.where(np.abs(s) > thr, s, 0.0)
    n = -(-q // M)
    s_ext = np.zeros((M, M * n))
    s_ext[:, :q] = s
    # p[i, j, l] = s_i(j + M l)
    p = s_ext.reshape(M, n, M).transpose(0, 2, 1)
    live = np.abs(p) > thr
    blocks = live.any(axis=2)
    # 1: one nonzero block per row; 2: one per column; 3: one nonzero entry in it
    if not (blocks.sum(axis=1) == 1).all() or not (blocks.sum(axis=0) == 1).all():
        return False
    if not (live.sum(axis=2)[blocks] == 1).all():
        return False
    # 4 and 5 together: row i+1 is row i delayed by one sample, i.e. s_i(l) = s_0(l - i).
    for i in range(1, M):
        ref = np.zeros(q + M)
        ref[i:i + q] = s[0]
        if np.any(ref[q:] != 0.0):
            return False
        if np.max(np.abs(s[i] - ref[:q])) > thr:
            return False
    return True


def check_pseudocirculant(s, tol=DEFAULT_TOL):
    """
    Test ``s_i = c e_{i+d0}`` for the vectors ``s_i = K^T a_i``.

    ``c`` and ``d0`` are taken from the largest entry of ``s_0``. Both the
    direct selector test and the polyphase-property test are run.
    """
    s = np.atleast_2d(np.asarray(s, dtype=float))
    passed, c, d0 = _selector_match(s, tol)
    props = _pseudocirculant_properties(s, tol)
    return PseudocirculantCheck(passed, c, d0, props)


@dataclass
class PRCertificate:
    feasible: bool
    p: int
    r: int
    q: int
    M: int
    delay_range: list
    zero_runs: list
    zero_block_residual: float
    tol: float
    selectors: Optional[np.ndarray] = field(default=None, repr=False)
    c: Optional[float] = None
    checked_delay: Optional[int] = None
    pseudocirculant_pass: Optional[bool] = None

    @property
    def multiple_intervals(self):
        return sum(1 for _, length in self.zero_runs if length >= self.M) > 1

    def to_dict(self):
        d = asdict(self)
        d.pop("selectors")
        d["zero_runs"] = [list(run) for run in self.zero_runs]
        d["multiple_intervals"] = self.multiple_intervals
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self):
        lines = [
            f"feasible: {'yes' if self.feasible else 'no'}",
            f"q (input span): {self.q}",
            f"M: {self.M}",
            f"zero band: p={self.p} r={self.r}",
            f"delay range: {_fmt_range(self.delay_range)}",
            f"zero band residual: {self.zero_block_residual:.3e}",
            f"tolerance: {self.tol:g}",
        ]
        if self.multiple_intervals:
            lines.append("note: several disjoint zero bands; delay range is their union")
        if self.checked_delay is not None:
            lines.append(f"checked delay: {self.checked_delay} (c={self.c:g}) "
                         f"pseudocirculant: {'pass' if self.pseudocirculant_pass else 'fail'}")
        return "\n".join(lines)


def _fmt_range(delays):
    if not delays:
        return "empty"
    runs, start = [], delays[0]
    for a, b in zip(delays, delays[1:] + [None]):
        if b != a + 1:
            runs.append(f"{start}" if start == a else f"{start}..{a}")
            start = b
    return ", ".join(runs)


def _zero_band(K, tol):
    Kp = pinv(K.entries)
    G = Kp @ K.entries
    scale = max(1.0, np.max(np.sum(np.abs(G), axis=1)))
    G -= np.eye(G.shape[0])
    zero = np.max(np.abs(G), axis=0) <= tol * scale
    runs, start = [], None
    for j, z in enumerate(np.r_[zero, False]):
        if z and start is None:
            start = j
        elif not z and start is not None:
            runs.append((start, j - start))
            start = None
    return G, runs, Kp


def pr_feasibility(K, tol=DEFAULT_TOL, c=1.0):
    """
    Locate the widest band ``[p, p+r)`` where ``pinv(K) K - I`` vanishes in
    rows and columns. PR is possible iff ``r >= M``, for delays
    ``p <= d <= p + r - M`` (union over all qualifying bands).
    """
    G, runs, _ = _zero_band(K, tol)
    M = K.M
    p, r = max(runs, key=lambda run: (run[1], -run[0]), default=(0, 0))
    delays = sorted({d for start, length in runs if length >= M
                     for d in range(start, start + length - M + 1)})
    residual = 0.0
    if r:
        residual = float(max(np.max(np.abs(G[p:p + r])), np.max(np.abs(G[:, p:p + r]))))
    cert = PRCertificate(r >= M, p, r, K.q, M, delays, runs, residual, tol)
    if cert.feasible:
        sol = pr_solution(K, p, c, tol=tol)
        s = sol.rows @ K.entries
        chk = check_pseudocirculant(s, tol)
        cert.selectors, cert.c, cert.checked_delay = s, c, p
        cert.pseudocirculant_pass = chk.passed and chk.d0 == p
    return cert


def pr_solution(K, d, c=1.0, w=None, tol=DEFAULT_TOL):
    """
    PR synthesis rows ``a_i = c pinv(K)^T e_{i+d} + (I - K pinv(K))^T w``.

    Depends only on the analysis bank. Raises if the bank cannot reconstruct
    perfectly or ``d`` lies outside the admissible delays.
    """
    if c == 0:
        raise ValueError("scale c must be non-zero")
    G, runs, Kp = _zero_band(K, tol)
    M, q, n = K.M, K.q, K.shape[0]
    delays = {dd for start, length in runs if length >= M
              for dd in range(start, start + length - M + 1)}
    if not delays:
        raise PRInfeasibleError("analysis bank admits no perfect-reconstruction synthesis")
    if d not in delays:
        raise DelayOutOfRangeError(f"delay {d} outside admissible set {_fmt_range(sorted(delays))}")
    w = np.zeros(n) if w is None else np.asarray(w, dtype=float).ravel()
    if w.size != n:
        raise ValueError(f"w must have length LP={n}, got {w.size}")
    E = np.zeros((q, M))
    E[d + np.arange(M), np.arange(M)] = 1.0
    particular = c * (Kp.T @ E).T
    proj = (np.eye(n) - K.entries @ Kp).T
    rows = particular + proj @ w
    residuals = np.linalg.norm(rows @ K.entries - c * E.T, axis=1)
    return SynthesisSolution(K.entries.T, Kp.T, particular, proj, w, rows, d,
                             K.L, K.P, None, residuals, scale=c)


def nullspace_structure_check(K, cert, tol=1e-8):
    """Every null vector of ``K`` must vanish on each zero band of width >= M."""
    A = K.entries
    _, sv, Vt = np.linalg.svd(A, full_matrices=True)
    thr = max(A.shape) * np.finfo(float).eps * (sv[0] if sv.size else 0.0)
    rnk = int(np.sum(sv > thr))
    Z = Vt[rnk:]
    if Z.shape[0] == 0:
        return True
    for start, length in cert.zero_runs:
        if length >= cert.M and np.max(np.abs(Z[:, start:start + length])) > tol:
            return False
    return True


def reconstruction_delay(check, M):
    """End-to-end sample delay ``d0 + M - 1`` of a passing pseudocirculant check."""
    d0 = check if isinstance(check, (int, np.integer)) else check.d0
    return int(d0) + M - 1
