"""Bit-error counting, confidence intervals, and constellation export."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import ParameterError

# hard-decision FEC limit; a measured BER at or below this counts as a pass
FEC_THRESHOLD = 4.5e-3

_Z95 = 1.959963984540054  # two-sided 95%


@dataclass(frozen=True)
class BerResult:
    bit_errors: int
    bits_counted: int
    ber: float
    ci95_halfwidth: float
    fec_pass: bool
    per_channel: dict[str, "BerResult"] = field(default_factory=dict)

    def ci95_bounds(self) -> tuple[float, float]:
        return wilson_interval(self.bit_errors, self.bits_counted)


def wilson_interval(n_errors: int, n_bits: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for an error proportion.

    Behaves sensibly at zero observed errors, unlike the normal
    approximation, which is why it backs the BER confidence columns.
    """
    if n_bits <= 0:
        raise ParameterError("n_bits must be positive")
    if not 0 <= n_errors <= n_bits:
        raise ParameterError("n_errors must be within [0, n_bits]")
    p = n_errors / n_bits
    denom = 1.0 + z * z / n_bits
    center = (p + z * z / (2 * n_bits)) / denom
    half = (z / denom) * np.sqrt(p * (1 - p) / n_bits + z * z / (4 * n_bits * n_bits))
    # the boundary cases have exact endpoints; rounding must not lose them
    low = 0.0 if n_errors == 0 else max(0.0, float(center - half))
    high = 1.0 if n_errors == n_bits else min(1.0, float(center + half))
    return (low, high)


def count_ber(
    tx_bits: np.ndarray,
    rx_bits: np.ndarray,
    skip: int = 0,
    channel_bits: dict[str, tuple[np.ndarray, np.ndarray]] | None = None,
) -> BerResult:
    """Exact Hamming count between bit streams, ignoring the first ``skip`` bits.

    ``skip`` is in bits (two per QPSK symbol); it excludes the training
    prefix from the counted region. ``channel_bits`` optionally maps a
    channel name to its (tx, rx) streams for a per-channel breakdown with
    the same skip.
    """
    a = np.asarray(tx_bits).reshape(-1)
    b = np.asarray(rx_bits).reshape(-1)
    if a.size != b.size:
        raise ParameterError(f"bit streams differ in length: {a.size} vs {b.size}")
    if skip < 0:
        raise ParameterError("skip must be non-negative")
    a = a[skip:]
    b = b[skip:]
    if a.size == 0:
        raise ParameterError("no bits left to compare after skip")
    n_err = int(np.count_nonzero(a != b))
    ber = n_err / a.size
    low, high = wilson_interval(n_err, int(a.size))
    per_channel = {}
    if channel_bits:
        per_channel = {
            name: count_ber(t, r, skip) for name, (t, r) in channel_bits.items()
        }
    return BerResult(
        bit_errors=n_err,
        bits_counted=int(a.size),
        ber=ber,
        ci95_halfwidth=(high - low) / 2.0,
        fec_pass=ber <= FEC_THRESHOLD,
        per_channel=per_channel,
    )


def q_factor_db(ber: float) -> float:
    """Gaussian-equivalent Q factor, 20*log10(Q), from a BER.

    Clamped to the Q of 1e-15 at vanishing BER; BER >= 0.5 has no
    positive Q and returns -inf. Reported for convenience only.
    """
    if not 0.0 <= ber <= 1.0:
        raise ParameterError("ber must be within [0, 1]")
    if ber >= 0.5:
        return float("-inf")
    q = np.sqrt(2.0) * special.erfcinv(2.0 * max(ber, 1e-15))
    return float(20.0 * np.log10(q))


def thin_symbols(symbols: np.ndarray, max_points: int) -> np.ndarray:
    """Deterministically stride a symbol stream down to at most max_points."""
    s = np.asarray(symbols).reshape(-1)
    if s.size == 0:
        raise ParameterError("no symbols to thin")
    if max_points < 1:
        raise ParameterError("max_points must be >= 1")
    if s.size <= max_points:
        return s
    idx = np.linspace(0, s.size - 1, max_points).round().astype(int)
    return s[idx]


def constellation_dump(symbols: np.ndarray, path: str, max_points: int | None = None) -> str:
    """Write (re, im) CSV rows for a symbol stream; returns the path.

    Thinning (when requested) uses even striding, never random sampling,
    so repeated runs write identical bytes.
    """
    s = np.asarray(symbols).reshape(-1)
    if s.size == 0:
        raise ParameterError("no symbols to dump")
    if max_points is not None:
        s = thin_symbols(s, max_points)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    lines = ["re,im"]
    lines.extend(f"{float(v.real)!r},{float(v.imag)!r}" for v in s)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path
