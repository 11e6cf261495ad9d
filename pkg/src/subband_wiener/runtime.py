"""
Time-domain simulation of analysis, low-rate MIMO synthesis and unblocking.

Output ``y_i(n)`` estimates ``c u(Mn - i - d)`` and the full-rate output is
``u_hat(Mn + i) = y_{M-1-i}(n)``, so ``u_hat(n)`` tracks ``c u(n - d - M + 1)``.
The input is taken as zero before ``n = 0``.
"""

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .bank import pad_to_common_length
from .stochastic import simulate

__all__ = [
    "PipelineRun",
    "block",
    "unblock",
    "run_pipeline",
    "empirical_mse",
    "ensemble_mse",
    "nonstationary_input",
]


def block(u, M):
    """Rows ``[u(Mn), ..., u(Mn+M-1)]``; the tail is zero-padded to a full block."""
    u = np.asarray(u)
    nb = -(-u.size // M)
    out = np.zeros(nb * M, dtype=u.dtype)
    out[:u.size] = u
    return out.reshape(nb, M)


def unblock(blocks, n=None):
    """Inverse of :func:`block`; ``n`` trims the padding."""
    u = np.asarray(blocks).reshape(-1)
    return u if n is None else u[:n]


def nonstationary_input(n, rng):
    """``randn(k) sin(0.1 k^2)``, k = 0..n-1."""
    k = np.arange(n, dtype=float)
    return rng.standard_normal(n) * np.sin(0.1 * k ** 2)


def _delayed(u, shift, length):
    out = np.zeros(length)
    if shift < length:
        src = u[:length - shift]
        out[shift:shift + src.size] = src
    return out


@dataclass
class PipelineRun:
    input: np.ndarray
    subbands: np.ndarray  # (L, nb)
    outputs: np.ndarray  # (M, nb)
    u_hat: np.ndarray
    error: np.ndarray
    delay: int
    M: int
    P: int
    Q: int
    scale: float = 1.0
    transient_blocks: int = 0
    include_transient: bool = False
    multiplies_per_sample: float = None
    seed: int = None
    rows: np.ndarray = field(default=None, repr=False)

    @property
    def overall_delay(self):
        return self.delay + self.M - 1

    @property
    def start(self):
        """First sample index used in error statistics."""
        return 0 if self.include_transient else self.transient_blocks * self.M

    def max_error(self):
        return float(np.max(self.error[self.start:], initial=0.0))

    def stacked_observation(self, n):
        """``v_s(n)``: reversed length-``P`` observations of every subband, stacked."""
        idx = n - np.arange(self.P)
        v = np.where(idx >= 0, self.subbands[:, np.maximum(idx, 0)], 0.0)
        return v.reshape(-1)

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["n", "u_hat", "error", "transient"])
            for n, (uh, e) in enumerate(zip(self.u_hat, self.error)):
                w.writerow([n, f"{uh:.12g}", f"{e:.12g}", int(n < self.transient_blocks * self.M)])


def _synthesize(rows, subbands, P):
    M, L = rows.shape[0], subbands.shape[0]
    a = rows.reshape(M, L, P)
    y = np.zeros((M, subbands.shape[1]))
    for i in range(M):
        for r in range(L):
            y[i] += lfilter(a[i, r], [1.0], subbands[r])
    return y


def _synthesize_reference(rows, run):
    # One explicit dot product per output sample; counts the multiplies.
    nb = run.subbands.shape[1]
    y = np.zeros((rows.shape[0], nb))
    mults = 0
    for n in range(nb):
        vs = run.stacked_observation(n)
        for i, a in enumerate(rows):
            y[i, n] = a @ vs
            mults += a.size
    return y, mults


def run_pipeline(bank, solution, u, delay=None, include_transient=False,
                 reference=False):
    """
    Filter ``u`` through a uniform ``bank`` and the synthesis ``solution``.

    ``reference=True`` evaluates the synthesis sample by sample from the
    stacked observation vectors and records the multiply count per output
    sample.
    """
    if not bank.is_uniform:
        raise ValueError("run_pipeline needs a uniform bank; call nufb_to_ufb first")
    bank = pad_to_common_length(bank)
    rows = np.atleast_2d(solution.rows)
    M, L, Q = bank.M, bank.L, bank.Q
    P = solution.P
    if rows.shape != (M, L * P):
        raise ValueError(f"synthesis rows have shape {rows.shape}, expected {(M, L * P)}")
    d = solution.delay if delay is None else delay
    c = getattr(solution, "scale", 1.0)
    u = np.asarray(u, dtype=float)
    nb = u.size // M
    if nb == 0:
        raise ValueError(f"need at least M={M} input samples")
    subbands = np.array([lfilter(h, [1.0], u)[::M][:nb] for h in bank.filters])
    run = PipelineRun(u, subbands, None, None, None, d, M, P, Q, c,
                      transient_blocks=-(-(P * M + Q) // M),
                      include_transient=include_transient, rows=rows)
    if reference:
        y, mults = _synthesize_reference(rows, run)
        run.multiplies_per_sample = mults / (nb * M)
    else:
        y = _synthesize(rows, subbands, P)
    run.outputs = y
    run.u_hat = unblock(y[::-1].T)
    run.error = np.abs(run.u_hat - c * _delayed(u, d + M - 1, nb * M))
    return run


def empirical_mse(run, per_channel=True):
    """
    Time-averaged ``(d_i(n) - y_i(n))^2`` with ``d_i(n) = c u(Mn - i - d)``,
    skipping the transient unless the run includes it.
    """
    M, d = run.M, run.delay
    nb = run.outputs.shape[1]
    n0 = 0 if run.include_transient else run.transient_blocks
    n0 = max(n0, -(-(d + M - 1) // M))
    if n0 >= nb:
        raise ValueError("no samples left after removing the transient")
    n = np.arange(n0, nb)
    J = np.array([np.mean((run.scale * run.input[M * n - i - d] - run.outputs[i, n]) ** 2)
                  for i in range(M)])
    return J if per_channel else float(J.sum())


def _one_realization(bank, solution, model, length, seed, include_transient):
    rng = np.random.default_rng(seed)
    u = simulate(model, length, rng)
    run = run_pipeline(bank, solution, u, include_transient=include_transient)
    M, d, nb = run.M, run.delay, run.outputs.shape[1]
    n = np.arange(nb)
    sq = np.zeros((M, nb))
    for i in range(M):
        k = M * n - i - d
        desired = np.where(k >= 0, run.input[np.maximum(k, 0)], 0.0)
        sq[i] = (desired - run.outputs[i]) ** 2
    return sq, empirical_mse(run)


def ensemble_mse(bank, solution, model, runs, length, seed, workers=None,
                 include_transient=False):
    """
    Ensemble statistics over independent AR realizations.

    Returns ``(curves, mse)``: ``curves[i, n]`` is the ensemble-averaged
    squared error of channel ``i`` at block ``n``; ``mse`` averages the
    per-run time-averaged channel MSEs. Realization ``k`` uses the ``k``-th
    child of ``SeedSequence(seed)``, so results do not depend on ``workers``.
    """
    seeds = np.random.SeedSequence(seed).spawn(runs)
    job = lambda s: _one_realization(bank, solution, model, length, s, include_transient)
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(job, seeds))
    else:
        results = [job(s) for s in seeds]
    curves = np.mean([r[0] for r in results], axis=0)
    mse = np.mean([r[1] for r in results], axis=0)
    return curves, mse
