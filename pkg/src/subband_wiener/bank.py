"""
Analysis filter banks and the stacked decimate-convolve matrix ``K``.

A :class:`Bank` is a list of FIR channels, each with its own decimation
factor. Non-uniform banks are turned into equivalent uniform ones with
:func:`nufb_to_ufb` before anything else is done with them.
"""

import csv
import json
import math
from dataclasses import dataclass
from functools import reduce
from pathlib import Path

import numpy as np

from .mrmat import OBSERVATION, convolution_matrix, decimation_matrix, reverse

__all__ = [
    "Channel",
    "Bank",
    "KMatrix",
    "pad_to_common_length",
    "nufb_to_ufb",
    "build_K",
    "design_lowpass",
    "design_highpass",
    "elt_window",
    "elt_bank",
    "load_bank",
    "bank_from_config",
    "read_taps_csv",
    "BankConfigError",
]


@dataclass(frozen=True)
class Channel:
    taps: tuple
    decimation: int

    def __post_init__(self):
        if len(self.taps) == 0:
            raise ValueError("channel has no taps")
        if int(self.decimation) != self.decimation or self.decimation < 1:
            raise ValueError(f"decimation must be an integer >= 1, got {self.decimation}")

    @property
    def h(self):
        return np.asarray(self.taps, dtype=float)


@dataclass(frozen=True)
class Bank:
    channels: tuple

    def __post_init__(self):
        if len(self.channels) == 0:
            raise ValueError("bank has no channels")

    @classmethod
    def from_filters(cls, filters, decimations):
        """``decimations`` is one integer for a uniform bank or one per filter."""
        filters = list(filters)
        if np.ndim(decimations) == 0:
            decimations = [int(decimations)] * len(filters)
        if len(decimations) != len(filters):
            raise ValueError("need one decimation factor per filter")
        return cls(tuple(Channel(tuple(float(t) for t in np.ravel(h)), int(m))
                         for h, m in zip(filters, decimations)))

    @property
    def L(self):
        return len(self.channels)

    @property
    def decimations(self):
        return [c.decimation for c in self.channels]

    @property
    def is_uniform(self):
        return len(set(self.decimations)) == 1

    @property
    def M(self):
        """Common decimation factor; the LCM for a non-uniform bank."""
        return reduce(math.lcm, self.decimations)

    @property
    def Q(self):
        return max(len(c.taps) for c in self.channels)

    @property
    def filters(self):
        return [c.h for c in self.channels]

    def subset(self, indices):
        return Bank(tuple(self.channels[i] for i in indices))


def pad_to_common_length(bank):
    """Append trailing zeros so every channel has ``bank.Q`` taps."""
    Q = bank.Q
    return Bank(tuple(
        c if len(c.taps) == Q else Channel(c.taps + (0.0,) * (Q - len(c.taps)), c.decimation)
        for c in bank.channels
    ))


def nufb_to_ufb(bank):
    """
    Equivalent uniform bank with decimation ``M = lcm(M_i)``.

    Channel ``i`` becomes ``M / M_i`` channels ``h_i(n - l M_i)``, ordered by
    original channel then by ``l``. The result is padded to a common length.
    """
    M = bank.M
    out = []
    for c in bank.channels:
        for l in range(M // c.decimation):
            out.append(Channel((0.0,) * (l * c.decimation) + tuple(c.taps), M))
    return pad_to_common_length(Bank(tuple(out)))


@dataclass(frozen=True)
class KMatrix:
    """``entries`` maps ``[u(Mn), ..., u(Mn-q+1)]`` to the stacked subband vector."""

    entries: np.ndarray
    M: int
    L: int
    P: int
    Q: int

    @property
    def q(self):
        return self.M * (self.P - 1) + self.Q

    @property
    def shape(self):
        return self.entries.shape

    def block(self, i):
        return self.entries[i * self.P:(i + 1) * self.P]


def build_K(bank, P):
    """Stack ``D^0 reverse(H_i)`` over the channels of a uniform bank."""
    if not bank.is_uniform:
        raise ValueError("build_K needs a uniform bank; call nufb_to_ufb first")
    if P < 1:
        raise ValueError(f"synthesis length must be positive, got {P}")
    bank = pad_to_common_length(bank)
    M, Q = bank.M, bank.Q
    obs = M * (P - 1) + 1
    D0 = decimation_matrix(M, 0, P, obs)
    blocks = [D0 @ reverse(convolution_matrix(h, obs, OBSERVATION)) for h in bank.filters]
    return KMatrix(np.vstack(blocks), M, bank.L, P, Q)


def _hamming(n):
    if n == 1:
        return np.ones(1)
    return 0.54 - 0.46 * np.cos(2 * np.pi * np.arange(n) / (n - 1))


def design_lowpass(cutoff, length):
    """
    Hamming-windowed linear-phase lowpass, unit gain at DC.

    ``cutoff`` is normalized to the Nyquist frequency.
    """
    if not 0 < cutoff < 1:
        raise ValueError(f"cutoff must lie in (0, 1), got {cutoff}")
    if length < 2:
        raise ValueError("filter length must be at least 2")
    m = np.arange(length) - (length - 1) / 2
    h = cutoff * np.sinc(cutoff * m) * _hamming(length)
    return h / h.sum()


def design_highpass(cutoff, length):
    """
    Hamming-windowed linear-phase highpass, unit gain at Nyquist.

    Even lengths are rejected: a symmetric even-length filter always has a
    zero at Nyquist.
    """
    if not 0 < cutoff < 1:
        raise ValueError(f"cutoff must lie in (0, 1), got {cutoff}")
    if length < 3 or length % 2 == 0:
        raise ValueError(f"highpass length must be odd and >= 3, got {length}")
    m = np.arange(length) - (length - 1) / 2
    h = (np.sinc(m) - cutoff * np.sinc(cutoff * m)) * _hamming(length)
    return h / abs(h @ (-1.0) ** np.arange(length))


def elt_window(M, angles=None):
    """
    Prototype window of a ``4M``-tap extended lapped transform (overlap 2).

    ``angles`` holds ``M/2`` pairs ``(a, b)``; pair ``k`` fixes the samples
    ``k, k+M, k+2M, k+3M`` to ``(cos a cos b, cos a sin b, -sin a sin b,
    sin a cos b)`` and the window is made symmetric. Any choice gives PR.
    Without angles the closed-form window ``1/(2 sqrt 2) - cos((n+1/2)pi/2M)/2``
    is returned.
    """
    n = np.arange(4 * M)
    if angles is None:
        return 1 / (2 * np.sqrt(2)) - 0.5 * np.cos((n + 0.5) * np.pi / (2 * M))
    angles = np.asarray(angles, dtype=float).reshape(-1, 2)
    if M % 2 or angles.shape[0] != M // 2:
        raise ValueError(f"need M/2 angle pairs for even M, got {angles.shape[0]} for M={M}")
    h = np.zeros(4 * M)
    for k, (a, b) in enumerate(angles):
        quad = [np.cos(a) * np.cos(b), np.cos(a) * np.sin(b),
                -np.sin(a) * np.sin(b), np.sin(a) * np.cos(b)]
        for m in range(4):
            h[k + m * M] = quad[m]
            h[M - 1 - k + m * M] = quad[3 - m]
    return h


# Butterfly angles for M = 4 giving a well-localized prototype.
ELT4_ANGLES = ((-1.2132831, 1.72316441), (-0.93776622, 1.60755227))


def elt_bank(M=4, window=None):
    """
    Maximally decimated ELT analysis bank.

    The analysis filters are the time-reversed cosine-modulated basis
    functions ``w(n) sqrt(2/M) cos((n + (M+1)/2)(k + 1/2) pi / M)``.
    """
    if window is None:
        window = elt_window(M, ELT4_ANGLES if M == 4 else None)
    w = np.asarray(window, dtype=float)
    n = np.arange(w.size)
    basis = [w * np.sqrt(2 / M) * np.cos((n + (M + 1) / 2) * (k + 0.5) * np.pi / M)
             for k in range(M)]
    return Bank.from_filters([b[::-1] for b in basis], M)


class BankConfigError(ValueError):
    pass


def read_taps_csv(path):
    """One filter per row; rows may differ in length. A non-numeric first row is a header."""
    rows = []
    with open(path, newline="") as f:
        for lineno, row in enumerate(csv.reader(f), 1):
            cells = [c.strip() for c in row if c.strip()]
            if not cells:
                continue
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                if lineno == 1:
                    continue
                raise BankConfigError(f"{path}:{lineno}: non-numeric tap") from None
    if not rows:
        raise BankConfigError(f"{path}: no taps found")
    return rows


def _channel_taps(spec, where):
    if "taps" in spec:
        taps = spec["taps"]
        if not isinstance(taps, list) or not taps:
            raise BankConfigError(f"{where}.taps: expected a non-empty list")
        return taps
    kind = spec.get("design")
    if kind not in ("lowpass", "highpass"):
        raise BankConfigError(f"{where}: need 'taps' or 'design': lowpass|highpass")
    for key in ("cutoff", "length"):
        if key not in spec:
            raise BankConfigError(f"{where}.{key}: missing")
    design = design_lowpass if kind == "lowpass" else design_highpass
    try:
        return list(design(float(spec["cutoff"]), int(spec["length"])))
    except ValueError as exc:
        raise BankConfigError(f"{where}: {exc}") from None


def bank_from_config(cfg, base=Path(".")):
    """
    Build a bank from a parsed config mapping. Accepted shapes::

        {"channels": [{"taps": [...], "decimation": 2},
                      {"design": "highpass", "cutoff": 0.4, "length": 11, "decimation": 2}]}
        {"csv": "taps.csv", "decimations": [2, 3]}        # or "decimation": 2
        {"elt": {"M": 4, "angles": [[a, b], ...]}}        # or "window": [...]
    """
    if not isinstance(cfg, dict):
        raise BankConfigError("bank config must be a JSON object")
    if "elt" in cfg:
        e = cfg["elt"]
        M = int(e.get("M", 4))
        if "window" in e:
            window = e["window"]
        elif "angles" in e:
            window = elt_window(M, e["angles"])
        else:
            window = None
        return elt_bank(M, window)
    if "csv" in cfg:
        filters = read_taps_csv(base / cfg["csv"])
        dec = cfg.get("decimations", cfg.get("decimation"))
        if dec is None:
            raise BankConfigError("decimations: missing")
        try:
            return Bank.from_filters(filters, dec)
        except ValueError as exc:
            raise BankConfigError(f"decimations: {exc}") from None
    channels = cfg.get("channels")
    if not isinstance(channels, list) or not channels:
        raise BankConfigError("channels: expected a non-empty list")
    out = []
    for i, spec in enumerate(channels):
        where = f"channels[{i}]"
        if not isinstance(spec, dict):
            raise BankConfigError(f"{where}: expected an object")
        taps = _channel_taps(spec, where)
        dec = spec.get("decimation")
        if not isinstance(dec, int) or dec < 1:
            raise BankConfigError(f"{where}.decimation: expected an integer >= 1")
        try:
            out.append(Channel(tuple(float(t) for t in taps), dec))
        except (TypeError, ValueError) as exc:
            raise BankConfigError(f"{where}: {exc}") from None
    return Bank(tuple(out))


def load_bank(path):
    """Read a JSON bank config (see :func:`bank_from_config`)."""
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise BankConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return bank_from_config(cfg, path.parent)
