"""Transmit-side generation: QPSK mapping, pulse shaping, pilot tone.

Power convention: 0 dBm corresponds to unit mean-square amplitude, and all
dBm figures are relative to that anchor. Each signal channel is normalized
to its configured mean-square power exactly (transmit power control), so
power ratios such as the pilot-to-signal ratio hold to machine precision
for any frame length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import RrcFilter, WaveformFrame, convolve_same, rrc_design
from .errors import ConfigError, ParameterError
from .rng import Rng

PT_LABEL = "PT"

# stream keys under the TX seed
_STREAM_TRAINING = 1
_STREAM_DATA = 2

# Gray-mapped QPSK, indexed by (b0 << 1) | b1 for the bit pair (b0, b1):
# 00 -> (+1+1j)/sqrt2, 01 -> (-1+1j)/sqrt2, 11 -> (-1-1j)/sqrt2, 10 -> (+1-1j)/sqrt2
QPSK_CONSTELLATION = np.array(
    [1.0 + 1.0j, -1.0 + 1.0j, 1.0 - 1.0j, -1.0 - 1.0j]
) / np.sqrt(2.0)


def dbm_to_meansquare(dbm: float) -> float:
    """Mean-square amplitude for a power in relative dBm (-inf maps to 0)."""
    if dbm == float("-inf"):
        return 0.0
    return float(10.0 ** (dbm / 10.0))


def qpsk_map(bits: np.ndarray) -> np.ndarray:
    """Map a bit vector (even length) onto Gray-coded QPSK symbols."""
    bits = np.asarray(bits)
    if bits.ndim != 1 or bits.size % 2:
        raise ParameterError("qpsk_map needs a 1-D, even-length bit vector")
    if bits.size and not np.all((bits == 0) | (bits == 1)):
        raise ParameterError("bits must be 0 or 1")
    pairs = bits.reshape(-1, 2).astype(np.int64)
    idx = (pairs[:, 0] << 1) | pairs[:, 1]
    return QPSK_CONSTELLATION[idx]


def qpsk_demap(symbols: np.ndarray) -> np.ndarray:
    """Hard-decide symbols back to bits; ties resolve toward +1 on each rail."""
    symbols = np.asarray(symbols)
    if symbols.ndim != 1:
        raise ParameterError("qpsk_demap expects a 1-D symbol vector")
    bits = np.empty(2 * symbols.size, dtype=np.int64)
    bits[0::2] = (symbols.imag < 0).astype(np.int64)
    bits[1::2] = (symbols.real < 0).astype(np.int64)
    return bits


def qpsk_decide(symbols: np.ndarray) -> np.ndarray:
    """Nearest-constellation-point slicer (same tie rule as qpsk_demap)."""
    symbols = np.asarray(symbols)
    idx = ((symbols.imag < 0).astype(np.int64) << 1) | (symbols.real < 0).astype(np.int64)
    return QPSK_CONSTELLATION[idx]


@dataclass(frozen=True)
class TxConfig:
    """Transmit-side parameters for one frame."""

    n_signal_channels: int
    symbol_rate: float
    n_symbols: int
    training_length: int
    seed: int
    samples_per_symbol: int = 2
    roll_off: float = 0.1
    rrc_span_symbols: int = 16
    signal_power_dbm: float = 0.0
    pt_power_dbm: float = 10.0
    channel_labels: tuple[str, ...] | None = None

    def validate(self) -> None:
        if self.n_signal_channels < 1:
            raise ConfigError("need at least one signal channel")
        if self.symbol_rate <= 0:
            raise ConfigError("symbol_rate must be positive")
        if self.samples_per_symbol < 2:
            raise ConfigError("samples_per_symbol must be >= 2")
        if self.n_symbols <= self.training_length:
            raise ConfigError(
                f"n_symbols ({self.n_symbols}) must exceed training_length "
                f"({self.training_length})"
            )
        if self.training_length < 0:
            raise ConfigError("training_length must be >= 0")
        if self.channel_labels is not None:
            if len(self.channel_labels) != self.n_signal_channels:
                raise ConfigError("channel_labels length mismatch")
            if PT_LABEL in self.channel_labels:
                raise ConfigError(f"{PT_LABEL!r} is reserved for the pilot tone")

    def labels(self) -> tuple[str, ...]:
        if self.channel_labels is not None:
            return tuple(self.channel_labels)
        return tuple(f"CH{i}" for i in range(self.n_signal_channels))


@dataclass
class TxRecord:
    """Everything the receiver-side DSP may later want to know about a frame.

    ``symbols``/``bits`` include the training prefix; the first
    ``config.training_length`` symbols per channel are the training
    sequence (seeded QPSK, reproducible from config.seed alone).
    """

    frame: WaveformFrame
    symbols: np.ndarray  # (n_signal_channels, n_symbols)
    bits: np.ndarray  # (n_signal_channels, 2 * n_symbols)
    shaping: RrcFilter
    config: TxConfig


def generate_tx(cfg: TxConfig) -> TxRecord:
    """Generate the shaped signal channels plus the continuous-wave pilot tone.

    Symbol m of every channel lands on sample m * samples_per_symbol
    (convolve_same absorbs the shaping filter's group delay). The pilot
    tone is constant-modulus at pt_power_dbm; a signal_power_dbm of -inf
    produces all-zero signal channels with the pilot unaffected.
    """
    cfg.validate()
    root = Rng(cfg.seed)
    shaping = rrc_design(cfg.roll_off, cfg.rrc_span_symbols, cfg.samples_per_symbol)

    n_ch = cfg.n_signal_channels
    n_sym = cfg.n_symbols
    sps = cfg.samples_per_symbol
    n_samp = n_sym * sps

    bits = np.empty((n_ch, 2 * n_sym), dtype=np.int64)
    symbols = np.empty((n_ch, n_sym), dtype=np.complex128)
    waves = np.zeros((n_ch + 1, n_samp), dtype=np.complex128)

    target_ms = dbm_to_meansquare(cfg.signal_power_dbm)
    for ch in range(n_ch):
        train_bits = root.split(_STREAM_TRAINING, ch).generator().integers(
            0, 2, size=2 * cfg.training_length
        )
        data_bits = root.split(_STREAM_DATA, ch).generator().integers(
            0, 2, size=2 * (n_sym - cfg.training_length)
        )
        bits[ch, : 2 * cfg.training_length] = train_bits
        bits[ch, 2 * cfg.training_length :] = data_bits
        symbols[ch] = qpsk_map(bits[ch])

        pulses = np.zeros(n_samp, dtype=np.complex128)
        pulses[::sps] = symbols[ch]
        wave = convolve_same(pulses, shaping.taps)
        ms = float(np.mean(np.abs(wave) ** 2))
        if target_ms == 0.0 or ms == 0.0:
            waves[ch] = 0.0
        else:
            waves[ch] = wave * np.sqrt(target_ms / ms)

    pt_amp = np.sqrt(dbm_to_meansquare(cfg.pt_power_dbm))
    waves[n_ch] = pt_amp

    frame = WaveformFrame(
        channels=waves,
        sample_rate=cfg.symbol_rate * sps,
        samples_per_symbol=sps,
        labels=cfg.labels() + (PT_LABEL,),
    )
    return TxRecord(frame=frame, symbols=symbols, bits=bits, shaping=shaping, config=cfg)


def shape_symbols(symbols: np.ndarray, shaping: RrcFilter, n_samples: int) -> np.ndarray:
    """RRC-shape a symbol sequence onto the frame's sample grid.

    Used for training-waveform reconstruction and interference reference
    rebuilding; matches generate_tx's alignment (symbol m at sample m*sps)
    but applies no power normalization.
    """
    symbols = np.asarray(symbols)
    sps = shaping.samples_per_symbol
    pulses = np.zeros(n_samples, dtype=np.complex128)
    idx = np.arange(symbols.size) * sps
    idx = idx[idx < n_samples]
    pulses[idx] = symbols[: idx.size]
    return convolve_same(pulses, shaping.taps)
