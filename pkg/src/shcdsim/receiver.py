"""Self-homodyne coherent detection and beat-term bookkeeping.

Each signal port beats against the received pilot (LO) port of matching
polarization: y_i(t) = E_sig_port(t) * conj(E_lo_port(t)). Expanding both
fields into their pilot-origin and signal-origin parts splits the product
into four terms:

* desired:      signal at the signal port x conj(pilot at the LO port)
* dc:           pilot leaked to the signal port x conj(pilot at the LO port)
* first_order:  pilot leaked to the signal port x conj(signal leaked to the LO port)
* second_order: signal at the signal port x conj(signal leaked to the LO port)

Their sum equals the noise-free total exactly (the product is bilinear in
the two fields). Receiver noise, when configured, is added to the total
only; the DC block likewise only touches the total, so the decomposition
terms stay exact references for what the equalizer must cancel.

Polarization pairing: a signal port pairs with the LO port whose label
ends in the same character (SIGx with PTx, LP11ay with LP01y, ...); an
explicit pairing map overrides this rule.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .dsp import WaveformFrame
from .errors import ConfigError, DegenerateInputError, LoStarvedError
from .rng import Rng
from .txgen import dbm_to_meansquare

LO_STARVED_DBM = -30.0

_STREAM_RX_NOISE = 7


@dataclass(frozen=True)
class RxConfig:
    """Receiver-side knobs for self-homodyne detection."""

    lo_channel_labels: tuple[str, ...]
    receiver_noise_dbm: float = float("-inf")
    dc_block: bool = True
    # optional explicit signal-port -> LO-port pairing; default pairs by the
    # trailing polarization character of the labels
    pairing: dict[str, str] | None = None


@dataclass
class BeatDecomposition:
    """Per-channel beat terms; arrays have shape (n_signal_ports, n_samples)."""

    labels: tuple[str, ...]
    desired: np.ndarray
    dc: np.ndarray
    first_order: np.ndarray
    second_order: np.ndarray
    total: np.ndarray  # noise-free sum of the four terms


def _pair_lo(sig_label: str, cfg: RxConfig) -> str:
    if cfg.pairing is not None:
        try:
            return cfg.pairing[sig_label]
        except KeyError:
            raise ConfigError(f"no LO pairing for signal port {sig_label!r}") from None
    pol = sig_label[-1].lower()
    for lo in cfg.lo_channel_labels:
        if lo[-1].lower() == pol:
            return lo
    raise ConfigError(
        f"no LO port with polarization {pol!r} for signal port {sig_label!r}"
    )


def shcd_detect(
    rx_frame: WaveformFrame, cfg: RxConfig, rng: Rng | None = None
) -> tuple[WaveformFrame, BeatDecomposition]:
    """Beat every signal port against its polarization-matched LO port.

    Returns the detected waveform frame (signal ports only) and the exact
    beat decomposition. Needs the propagation origin split on ``rx_frame``.
    """
    if rx_frame.origins is None:
        raise ConfigError("rx_frame carries no origin split; propagate() provides it")
    for lo in cfg.lo_channel_labels:
        if lo not in rx_frame.labels:
            raise ConfigError(f"LO channel {lo!r} missing from received frame")
    if len(cfg.lo_channel_labels) == 0:
        raise ConfigError("no LO channels configured")

    e_sig = rx_frame.origins["signal"]
    e_pt = rx_frame.origins["pt"]
    e_total = e_sig + e_pt

    lo_idx = [rx_frame.index(lb) for lb in cfg.lo_channel_labels]
    lo_power = float(np.mean(np.abs(e_total[lo_idx]) ** 2))
    if lo_power <= 0.0 or 10.0 * np.log10(lo_power) < LO_STARVED_DBM:
        raise LoStarvedError(
            f"LO starved: mean received LO power is below {LO_STARVED_DBM} dBm"
        )

    sig_labels = tuple(lb for lb in rx_frame.labels if lb not in cfg.lo_channel_labels)
    n = len(sig_labels)
    n_samp = rx_frame.n_samples
    desired = np.empty((n, n_samp), dtype=np.complex128)
    dc = np.empty_like(desired)
    first = np.empty_like(desired)
    second = np.empty_like(desired)
    beat_nf = np.empty_like(desired)  # product of the full noise-free fields
    total = np.empty_like(desired)

    for row, lb in enumerate(sig_labels):
        i = rx_frame.index(lb)
        j = rx_frame.index(_pair_lo(lb, cfg))
        desired[row] = e_sig[i] * np.conj(e_pt[j])
        dc[row] = e_pt[i] * np.conj(e_pt[j])
        first[row] = e_pt[i] * np.conj(e_sig[j])
        second[row] = e_sig[i] * np.conj(e_sig[j])
        beat_nf[row] = e_total[i] * np.conj(e_total[j])
        total[row] = rx_frame.channels[i] * np.conj(rx_frame.channels[j])

    decomp = BeatDecomposition(
        labels=sig_labels,
        desired=desired,
        dc=dc,
        first_order=first,
        second_order=second,
        total=beat_nf,
    )

    noise_ms = dbm_to_meansquare(cfg.receiver_noise_dbm)
    if noise_ms > 0.0:
        if rng is None:
            raise ConfigError("receiver_noise_dbm set but no rng given")
        gen = rng.split(_STREAM_RX_NOISE).generator()
        total = total + (
            gen.standard_normal(total.shape) + 1j * gen.standard_normal(total.shape)
        ) * np.sqrt(noise_ms / 2.0)

    if cfg.dc_block:
        total = total - np.mean(total, axis=1, keepdims=True)

    detected = WaveformFrame(
        channels=total,
        sample_rate=rx_frame.sample_rate,
        samples_per_symbol=rx_frame.samples_per_symbol,
        labels=sig_labels,
    )
    return detected, decomp


def interference_powers(decomp: BeatDecomposition) -> dict[str, dict[str, float]]:
    """Mean power of each beat term in dB relative to the desired term.

    A term that is exactly zero reports -inf. A channel whose desired term
    is zero has no reference level and is flagged degenerate.
    """
    out: dict[str, dict[str, float]] = {}
    for row, lb in enumerate(decomp.labels):
        p_des = float(np.mean(np.abs(decomp.desired[row]) ** 2))
        if p_des == 0.0:
            raise DegenerateInputError(
                f"channel {lb!r}: desired beat term has zero power"
            )
        entry = {}
        for name, term in (
            ("dc_db", decomp.dc[row]),
            ("first_order_db", decomp.first_order[row]),
            ("second_order_db", decomp.second_order[row]),
        ):
            p = float(np.mean(np.abs(term) ** 2))
            entry[name] = float("-inf") if p == 0.0 else float(10.0 * np.log10(p / p_des))
        out[lb] = entry
    return out


def decomposition_to_csv(decomp: BeatDecomposition, path) -> str:
    """Write per-channel beat-term powers (dB rel. desired) as CSV."""
    powers = interference_powers(decomp)
    path = os.fspath(path)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    lines = ["channel,dc_db,first_order_db,second_order_db"]
    for lb in decomp.labels:
        e = powers[lb]
        lines.append(
            f"{lb},{e['dc_db']!r},{e['first_order_db']!r},{e['second_order_db']!r}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path
