"""
Second-order statistics of the wide-sense stationary input.

A :class:`SignalModel` supplies the autocorrelation ``r(k)``; from it
:func:`correlation_bundle` builds the Toeplitz matrix of the reversed blocked
input and the cross-correlation rows needed by the Wiener solver.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz
from scipy.signal import lfilter

__all__ = [
    "SignalModel",
    "CorrelationBundle",
    "acf",
    "correlation_bundle",
    "sample_acf",
    "simulate",
    "ar_roots",
]

AR = "ar"
EMPIRICAL = "empirical"
EXPLICIT = "explicit"


def ar_roots(coefficients):
    """Characteristic roots of ``u(n) = sum_k a_k u(n-k) + e(n)``."""
    a = np.asarray(coefficients, dtype=float)
    if a.size == 0:
        return np.zeros(0)
    return np.roots(np.r_[1.0, -a])


@dataclass(frozen=True)
class SignalModel:
    """
    WSS input model. Build with :meth:`ar`, :meth:`white`, :meth:`empirical`
    or :meth:`explicit` rather than directly.

    AR coefficients enter as ``u(n) = a_1 u(n-1) + ... + a_p u(n-p) + e(n)``.
    """

    kind: str
    coefficients: tuple = ()
    noise_variance: float = 1.0
    samples: np.ndarray = field(default=None, repr=False, compare=False)
    values: tuple = ()
    normalize_unit_variance: bool = True

    def __post_init__(self):
        if self.kind == AR:
            roots = ar_roots(self.coefficients)
            if roots.size and np.max(np.abs(roots)) >= 1.0:
                raise ValueError(
                    f"unstable AR model {self.coefficients}: "
                    f"max root modulus {np.max(np.abs(roots)):.6g}"
                )
            if self.noise_variance <= 0:
                raise ValueError("noise variance must be positive")
        elif self.kind == EMPIRICAL:
            if self.samples is None or len(self.samples) < 2:
                raise ValueError("empirical model needs at least two samples")
        elif self.kind == EXPLICIT:
            if len(self.values) == 0 or self.values[0] <= 0:
                raise ValueError("explicit acf needs r(0) > 0")
        else:
            raise ValueError(f"unknown model kind {self.kind!r}")

    @classmethod
    def ar(cls, coefficients, noise_variance=1.0, normalize_unit_variance=True):
        return cls(AR, tuple(float(c) for c in coefficients), float(noise_variance),
                   normalize_unit_variance=normalize_unit_variance)

    @classmethod
    def white(cls, variance=1.0):
        return cls.ar((), variance, normalize_unit_variance=False)

    @classmethod
    def empirical(cls, samples, normalize_unit_variance=False):
        x = np.asarray(samples, dtype=float).ravel()
        return cls(EMPIRICAL, samples=x, normalize_unit_variance=normalize_unit_variance)

    @classmethod
    def explicit(cls, values, normalize_unit_variance=False):
        return cls(EXPLICIT, values=tuple(float(v) for v in values),
                   normalize_unit_variance=normalize_unit_variance)

    @property
    def order(self):
        return len(self.coefficients)


def _ar_acf(a, sigma2, max_lag):
    # Yule-Walker equations with r(0..p) unknown, then the AR recursion.
    p = a.size
    n = max(max_lag, p)
    r = np.zeros(n + 1)
    S = np.eye(p + 1)
    for k in range(p + 1):
        for j in range(1, p + 1):
            S[k, abs(k - j)] -= a[j - 1]
    rhs = np.zeros(p + 1)
    rhs[0] = sigma2
    r[:p + 1] = np.linalg.solve(S, rhs)
    for k in range(p + 1, n + 1):
        r[k] = a @ r[k - p:k][::-1]
    return r[:max_lag + 1]


def sample_acf(x, max_lag):
    """Biased estimator ``(1/N) sum_n x(n) x(n-k)``, ``k = 0..max_lag``."""
    x = np.asarray(x, dtype=float)
    N = x.size
    if max_lag >= N:
        raise ValueError(f"max_lag {max_lag} needs more than {N} samples")
    return np.array([x[k:] @ x[:N - k] for k in range(max_lag + 1)]) / N


def acf(model, max_lag):
    """Autocorrelation ``r(0..max_lag)`` of ``model``."""
    if max_lag < 0:
        raise ValueError("max_lag must be non-negative")
    if model.kind == AR:
        r = _ar_acf(np.asarray(model.coefficients, dtype=float),
                    model.noise_variance, max_lag)
    elif model.kind == EMPIRICAL:
        x = model.samples
        r = np.zeros(max_lag + 1)
        n = min(max_lag, x.size - 1)
        r[:n + 1] = sample_acf(x, n)
    else:
        if max_lag >= len(model.values):
            raise ValueError(
                f"explicit acf has {len(model.values)} lags, {max_lag + 1} requested"
            )
        r = np.array(model.values[:max_lag + 1])
    if model.normalize_unit_variance:
        r = r / r[0]
    return r


def lagged(r, lags):
    """Evaluate an acf table at (possibly negative) integer lags."""
    lags = np.abs(np.asarray(lags))
    if lags.size and lags.max() >= r.size:
        raise ValueError(f"acf table too short for lag {lags.max()}")
    return r[lags]


@dataclass(frozen=True)
class CorrelationBundle:
    """
    ``Ruu`` is the correlation of ``[u(Mn), u(Mn-1), ..., u(Mn-q+1)]``;
    ``rows[k]`` holds ``E[u(Mn-k) u(Mn-m)] = r(m-k)`` for ``m = 0..q-1``.
    """

    Ruu: np.ndarray
    rows: dict
    r0: float
    r: np.ndarray = field(repr=False)
    model: SignalModel = field(default=None, repr=False, compare=False)

    @property
    def size(self):
        return self.Ruu.shape[0]

    def row(self, k):
        try:
            return self.rows[k]
        except KeyError:
            raise KeyError(f"no correlation row for delay index {k}") from None


def correlation_bundle(model, M, P, Q, delays):
    """Correlation matrix and rows ``r_uu^{k}`` for every ``k`` in ``delays``."""
    if M < 1 or P < 1 or Q < 1:
        raise ValueError("M, P and Q must be positive")
    delays = sorted(set(int(k) for k in delays))
    if delays and delays[0] < 0:
        raise ValueError("delays must be non-negative")
    q = M * (P - 1) + Q
    max_lag = q - 1 + (delays[-1] if delays else 0)
    r = acf(model, max_lag)
    m = np.arange(q)
    rows = {k: lagged(r, m - k) for k in delays}
    return CorrelationBundle(toeplitz(r[:q]), rows, float(r[0]), r, model)


def simulate(model, n, rng):
    """
    Draw ``n`` samples of an AR model after a burn-in.

    With ``normalize_unit_variance`` the output is scaled to unit variance so
    it matches :func:`acf`.
    """
    if model.kind != AR:
        raise ValueError("only AR models can be simulated")
    a = np.asarray(model.coefficients, dtype=float)
    roots = ar_roots(a)
    rho = np.max(np.abs(roots)) if roots.size else 0.0
    burn = int(np.ceil(10 * max(a.size, 1) / (1.0 - rho)))
    e = rng.standard_normal(n + burn) * np.sqrt(model.noise_variance)
    u = lfilter([1.0], np.r_[1.0, -a], e)[burn:]
    if model.normalize_unit_variance:
        u = u / np.sqrt(_ar_acf(a, model.noise_variance, 0)[0])
    return u
