"""Butterfly MIMO equalization with interference-cancelling reference branches.

The equalizer is an N-output, fractionally spaced (2 samples/symbol) FIR
butterfly adapted by LMS: training-directed over the training prefix, then
decision-directed. Iteration 1 runs on the received channels alone
(conventional linear MIMO). From iteration 2 on, the branch set is
augmented with references rebuilt from feedback symbols:

* one conj(r_k(t)) branch per channel for the 1st-order beat term, which
  is conjugate-linear in the transmitted fields,
* one r_a(t) * conj(r_b(t)) branch per configured pair (including a == b)
  for the bilinear 2nd-order term,
* one constant branch for any residual DC offset.

Feedback symbols are the true transmitted symbols in ``genie`` mode (the
cancellation upper bound) or the previous iteration's decisions in
``hard_decision`` mode. References enter the same LMS update as the
received branches, so cancellation weights and equalizer taps converge
jointly; nothing is pre-subtracted.

There is no explicit matched filter in front of the equalizer: the
fractionally spaced taps absorb it. That choice keeps the reference
reconstruction exact, because the interference terms in the detected
waveform are literally products of transmit-shaped waveforms, which is
what the rebuilt references are.

Skew handling: every interference term has exactly one conjugated factor,
and that factor is the one that reached the receiver through the LO arm.
A signal-versus-LO path skew therefore delays the conjugated factor of
every term by the same amount. One shared skew is estimated from the
aggregate 1st-order-reference-to-received cross-correlation and applied
inside each rebuilt product to the conjugated waveform only; sub-sample
residuals are absorbed by the per-branch taps. Without a credible
correlation peak (nothing to cancel) the skew falls back to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import optimize as _optimize
from scipy import signal as _signal

from .dsp import WaveformFrame, fractional_delay
from .errors import (
    ConfigError,
    EqualizerDivergenceError,
    ParameterError,
    SkewOutOfRangeError,
    SyncFailureError,
)
from .txgen import QPSK_CONSTELLATION, TxRecord, qpsk_decide, qpsk_demap, shape_symbols

FEEDBACK_MODES = ("genie", "hard_decision")
UPIC_ORDERS = ("off", "first", "first_and_second")

BRANCH_RECEIVED = "received"
BRANCH_FIRST = "ref_first_order"
BRANCH_SECOND = "ref_second_order"
BRANCH_DC = "dc_ref"

_MIN_TRAINING_SYMBOLS = 256
_SYNC_PSR_MIN = 3.0
_SKEW_PSR_MIN = 3.0
_SKEW_WINDOW_MAX = 65536

# Reference branches carry cancellation targets, never information about
# the desired symbol, so their LMS steps buy nothing once the targets are
# learned. At unit RMS the gradient noise on these branches, driven by
# whatever error the branch set cannot remove, accumulates tap junk that
# shows up as improper output error and costs BER. 0.35 scales the
# effective per-branch step by 0.12, enough to suppress that junk below
# the trial noise while the cancellation modes still converge inside a
# 10k-symbol training prefix.
_REF_BRANCH_RMS = 0.35


@dataclass(frozen=True)
class EqualizerConfig:
    n_outputs: int
    taps_per_branch: int = 31
    sps_in: int = 2
    mu_train: float = 1e-3
    mu_dd: float = 1e-4
    training_length: int = 10000
    iterations: int = 2
    feedback_mode: str = "genie"
    upic_order: str = "first_and_second"
    # ordered (a, b) index pairs for 2nd-order references; None means all
    # pairs including a == b
    pair_set: tuple[tuple[int, int], ...] | None = None

    def validate(self) -> None:
        if self.n_outputs < 1:
            raise ConfigError("n_outputs must be >= 1")
        if self.taps_per_branch < 3 or self.taps_per_branch % 2 == 0:
            raise ConfigError(
                f"taps_per_branch must be odd and >= 3, got {self.taps_per_branch}"
            )
        if self.sps_in != 2:
            raise ConfigError("equalizer is fractionally spaced: sps_in must be 2")
        if not (0.0 < self.mu_train < 1.0 and 0.0 < self.mu_dd < 1.0):
            raise ConfigError("step sizes must be in (0, 1)")
        if self.training_length < _MIN_TRAINING_SYMBOLS:
            raise ConfigError(
                f"training_length must be >= {_MIN_TRAINING_SYMBOLS}"
            )
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.feedback_mode not in FEEDBACK_MODES:
            raise ConfigError(f"feedback_mode must be one of {FEEDBACK_MODES}")
        if self.upic_order not in UPIC_ORDERS:
            raise ConfigError(f"upic_order must be one of {UPIC_ORDERS}")
        if self.iterations >= 2 and self.upic_order == "off":
            raise ConfigError(
                "iterations >= 2 needs reference branches; set upic_order"
            )
        if self.pair_set is not None:
            for a, b in self.pair_set:
                if not (0 <= a < self.n_outputs and 0 <= b < self.n_outputs):
                    raise ConfigError(f"pair ({a}, {b}) out of range")

    def second_order_pairs(self) -> tuple[tuple[int, int], ...]:
        if self.pair_set is not None:
            return tuple((int(a), int(b)) for a, b in self.pair_set)
        n = self.n_outputs
        return tuple((a, b) for a in range(n) for b in range(n))


@dataclass(frozen=True)
class BranchInfo:
    kind: str
    detail: str
    skew_applied: float = 0.0


@dataclass
class EqualizerState:
    taps: np.ndarray  # (n_outputs, n_branches, taps_per_branch)
    branch_catalog: list[BranchInfo]
    mse_history: list[np.ndarray]  # per adaptation pass, per-symbol mean |e|^2


@dataclass
class EqualizedOutput:
    labels: tuple[str, ...]
    symbols: np.ndarray  # (n_outputs, n_symbols) final-pass soft outputs
    decisions: np.ndarray  # sliced symbols
    bits: np.ndarray  # (n_outputs, 2 * n_symbols)
    per_iteration_ber: np.ndarray  # (iterations, n_outputs), data region only
    sync_offset: int
    state: EqualizerState

    def tap_report(self) -> list[tuple[str, str, str, float]]:
        """Rows of (output_ch, branch_kind, branch_detail, norm_db)."""
        rows = []
        for i, out_lb in enumerate(self.labels):
            for b, info in enumerate(self.state.branch_catalog):
                p = float(np.sum(np.abs(self.state.taps[i, b]) ** 2))
                norm_db = -150.0 if p <= 1e-15 else 10.0 * np.log10(p)
                rows.append((out_lb, info.kind, info.detail, norm_db))
        return rows


@njit(cache=True, nogil=True)
def _lms_pass(xb, w, train, const, mu_train, mu_dd, n_train, sps, y, mse):
    """Sequential LMS over one frame. Returns -1 or the divergence symbol."""
    n_out, n_branch, n_taps = w.shape
    n_sym = y.shape[1]
    baseline = 0.0
    smooth = 0.0
    over = 0
    for n in range(n_sym):
        base = n * sps
        err_sum = 0.0
        for i in range(n_out):
            acc = 0.0 + 0.0j
            for b in range(n_branch):
                for t in range(n_taps):
                    acc += np.conj(w[i, b, t]) * xb[b, base + t]
            y[i, n] = acc
            if n < n_train:
                d = train[i, n]
                mu = mu_train
            else:
                idx = 0
                if acc.real < 0.0:
                    idx += 1
                if acc.imag < 0.0:
                    idx += 2
                d = const[idx]
                mu = mu_dd
            e = d - acc
            scale = mu * np.conj(e)
            for b in range(n_branch):
                for t in range(n_taps):
                    w[i, b, t] += scale * xb[b, base + t]
            err_sum += e.real * e.real + e.imag * e.imag
        m = err_sum / n_out
        mse[n] = m
        # fast blowups overflow before the baseline below even forms
        if m != m or m > 1e300:
            return n
        # divergence watch: smoothed error power against the early baseline
        if n == 499:
            s = 0.0
            for j in range(500):
                s += mse[j]
            baseline = s / 500.0
            smooth = m
        elif n > 499:
            smooth = 0.99 * smooth + 0.01 * m
            if smooth > 10.0 * baseline:
                over += 1
                if over >= 1000:
                    return n
            else:
                over = 0
    return -1


def frame_sync(
    rx_channels: np.ndarray | WaveformFrame,
    training_waves: np.ndarray,
    samples_per_symbol: int | None = None,
    max_lag: int | None = None,
) -> int:
    """Find the global sample offset of the frame via training correlation.

    Correlation magnitudes are aggregated across channels and the shared
    peak is taken; per-channel timing spread is left to the butterfly taps. The
    peak must exceed the largest sidelobe (outside +-2 symbols) by a factor
    of 3, otherwise synchronization is declared failed.
    """
    if isinstance(rx_channels, WaveformFrame):
        if samples_per_symbol is None:
            samples_per_symbol = rx_channels.samples_per_symbol
        rx_channels = rx_channels.channels
    if samples_per_symbol is None:
        raise ParameterError("samples_per_symbol required for bare arrays")
    rx = np.atleast_2d(np.asarray(rx_channels))
    tr = np.atleast_2d(np.asarray(training_waves))
    if rx.shape[0] != tr.shape[0]:
        raise ParameterError("one training waveform per received channel")
    if tr.shape[1] < _MIN_TRAINING_SYMBOLS * samples_per_symbol:
        raise ParameterError(
            f"training must cover at least {_MIN_TRAINING_SYMBOLS} symbols"
        )
    if not np.any(rx):
        raise SyncFailureError("sync failure: received frame is all zero")
    if max_lag is None:
        max_lag = rx.shape[1] // 4

    lags = np.arange(-(tr.shape[1] - 1), rx.shape[1])
    agg = np.zeros(lags.size)
    for i in range(rx.shape[0]):
        agg += np.abs(_signal.correlate(rx[i], tr[i], mode="full", method="fft"))
    keep = (lags >= -max_lag) & (lags <= max_lag)
    agg = agg[keep]
    lags = lags[keep]

    i_pk = int(np.argmax(agg))
    peak = agg[i_pk]
    if peak <= 0.0:
        raise SyncFailureError("sync failure: no correlation peak")
    guard = 2 * samples_per_symbol
    outside = (np.arange(lags.size) < i_pk - guard) | (np.arange(lags.size) > i_pk + guard)
    sidelobe = float(np.max(agg[outside])) if np.any(outside) else 0.0
    if sidelobe > 0.0 and peak / sidelobe < _SYNC_PSR_MIN:
        raise SyncFailureError(
            f"sync failure: peak-to-sidelobe {peak / sidelobe:.2f} below "
            f"{_SYNC_PSR_MIN}"
        )
    offset = int(lags[i_pk])
    if offset < 0:
        raise SyncFailureError(f"sync failure: negative frame offset {offset}")
    return offset


def build_upic_references(
    decided_symbols: np.ndarray,
    cfg: EqualizerConfig,
    tx_shaping,
    n_samples: int,
    rx_channels: np.ndarray | None = None,
    labels: tuple[str, ...] | None = None,
) -> tuple[np.ndarray, list[BranchInfo]]:
    """Rebuild interference reference branches from feedback symbols.

    Returns (branch_waveforms, catalog). Branches are mean-centered, skew
    aligned against ``rx_channels`` (when given) and normalized to the
    common reference RMS; the DC branch is a constant at the same RMS.
    """
    cfg.validate()
    if cfg.upic_order == "off":
        raise ConfigError("upic_order=off builds no references")
    syms = np.atleast_2d(np.asarray(decided_symbols))
    if syms.shape[1] < cfg.training_length:
        raise ParameterError(
            "feedback symbol stream shorter than the training prefix"
        )
    n_ch = syms.shape[0]
    if labels is None:
        labels = tuple(f"CH{i}" for i in range(n_ch))

    shaped = np.stack(
        [shape_symbols(syms[k], tx_shaping, n_samples) for k in range(n_ch)]
    )

    # Shared signal-vs-LO skew. Premade product candidates would smear the
    # correlation peak between 0 and the true lag, so the estimator gets
    # the per-channel waveforms and applies candidate delays inside each
    # rebuilt term itself.
    skew = 0.0
    if rx_channels is not None:
        skew = _estimate_reference_skew(shaped, rx_channels, cfg)
        if abs(skew) > cfg.taps_per_branch / 2:
            raise SkewOutOfRangeError(
                f"reference skew {skew:.2f} samples exceeds half the tap span "
                f"({cfg.taps_per_branch / 2:.1f})"
            )

    # the conjugated factor of every term took the LO path, so it alone
    # carries the skew
    lo_side = shaped
    if skew != 0.0:
        lo_side = np.stack([fractional_delay(r, skew) for r in shaped])

    waves: list[np.ndarray] = []
    catalog: list[BranchInfo] = []
    for k in range(n_ch):
        waves.append(np.conj(lo_side[k]))
        catalog.append(BranchInfo(BRANCH_FIRST, labels[k], skew_applied=skew))
    if cfg.upic_order == "first_and_second":
        for a, b in cfg.second_order_pairs():
            waves.append(shaped[a] * np.conj(lo_side[b]))
            catalog.append(
                BranchInfo(
                    BRANCH_SECOND,
                    f"{labels[a]}*conj({labels[b]})",
                    skew_applied=skew,
                )
            )

    out = []
    for w in waves:
        w = w - np.mean(w)
        rms = float(np.sqrt(np.mean(np.abs(w) ** 2)))
        out.append(w * (_REF_BRANCH_RMS / rms) if rms > 1e-30 else w)
    out.append(np.full(n_samples, _REF_BRANCH_RMS, dtype=np.complex128))
    catalog.append(BranchInfo(BRANCH_DC, "", skew_applied=0.0))
    return np.stack(out), catalog


def _estimate_reference_skew(
    shaped: np.ndarray,
    rx_channels: np.ndarray,
    cfg: EqualizerConfig,
) -> float:
    """Shared delay of the conjugated (LO-path) factor of the rebuilt terms.

    The received frame contains conj(s_k(t-d)) at the 1st-order level and
    s_a(t)*conj(s_b(t-d)) at the 2nd-order level; whichever family carries
    energy peaks at the same d, so both are aggregated as |xcorr|^2 over
    every (candidate, received channel) pair. Squaring keeps pairs that
    actually contain a candidate from being drowned by pairs that do not,
    and the whole frame is correlated because the content can sit 25 dB
    and more below the desired signal. The integer peak is refined on the
    continuous objective (candidate delay applied inside each term by
    fractional_delay): parabolic interpolation of the lag-power surface is
    off by up to 0.2 samples at half-integer delays. Falls back to 0.0
    when no peak stands out (zero-crosstalk frames have nothing to align).
    """
    rx = np.atleast_2d(np.asarray(rx_channels))
    win = min(rx.shape[1], _SKEW_WINDOW_MAX)
    n_ch = shaped.shape[0]
    sw = shaped[:, :win]
    max_lag = cfg.taps_per_branch  # generous; range-checked by the caller
    lags = np.arange(-win + 1, win)
    keep = (lags >= -max_lag) & (lags <= max_lag)
    lags = lags[keep]
    agg = np.zeros(lags.size)
    live = [k for k in range(n_ch) if np.any(sw[k])]
    for i in range(rx.shape[0]):
        for k in live:
            # 1st-order family: rx against conj(s_k(t-l))
            c = _signal.correlate(rx[i, :win], np.conj(sw[k]), mode="full", method="fft")
            agg += np.abs(c[keep]) ** 2
        for a in live:
            m = rx[i, :win] * np.conj(sw[a])
            for b in live:
                # 2nd-order family: rx against s_a(t)*conj(s_b(t-l)),
                # folded into one correlation of rx*conj(s_a) with s_b
                c = _signal.correlate(m, np.conj(sw[b]), mode="full", method="fft")
                agg += np.abs(c[keep]) ** 2
    if not np.any(agg):
        return 0.0

    i_pk = int(np.argmax(agg))
    guard = 2 * cfg.sps_in
    outside = (np.arange(lags.size) < i_pk - guard) | (np.arange(lags.size) > i_pk + guard)
    sidelobe = float(np.max(agg[outside])) if np.any(outside) else 0.0
    if sidelobe <= 0.0 or agg[i_pk] / sidelobe < _SKEW_PSR_MIN:
        return 0.0

    lag = float(lags[i_pk])

    def neg_power(d: float) -> float:
        # plain (unconjugated) products: the candidates' own conjugation
        # already happened when the correlate() calls above took conj once
        total = 0.0
        delayed = [fractional_delay(sw[k], d) for k in live]
        for i in range(rx.shape[0]):
            for rd in delayed:
                total += abs(np.sum(rx[i, :win] * rd)) ** 2
            for a in live:
                m = rx[i, :win] * np.conj(sw[a])
                for rd in delayed:
                    total += abs(np.sum(m * rd)) ** 2
        return -total

    res = _optimize.minimize_scalar(
        neg_power,
        bounds=(lag - 1.0, lag + 1.0),
        method="bounded",
        options={"xatol": 1e-2},
    )
    return float(res.x)


def _adaptation_pass(branches, w, train_syms, cfg, n_sym):
    n_out = cfg.n_outputs
    taps = cfg.taps_per_branch
    sps = cfg.sps_in
    pad_front = taps // 2
    n_branch = branches.shape[0]
    xb = np.zeros((n_branch, branches.shape[1] + taps), dtype=np.complex128)
    xb[:, pad_front:pad_front + branches.shape[1]] = branches

    y = np.empty((n_out, n_sym), dtype=np.complex128)
    mse = np.empty(n_sym, dtype=np.float64)
    diverged = _lms_pass(
        xb,
        w,
        np.ascontiguousarray(train_syms, dtype=np.complex128),
        QPSK_CONSTELLATION.astype(np.complex128),
        float(cfg.mu_train),
        float(cfg.mu_dd),
        int(min(cfg.training_length, n_sym)),
        int(sps),
        y,
        mse,
    )
    if diverged >= 0:
        raise EqualizerDivergenceError(
            f"equalizer diverged near symbol {diverged}: error power left "
            "the stable regime (10x watchdog or overflow)"
        )
    return y, mse


def _init_taps(cfg: EqualizerConfig, n_branch: int) -> np.ndarray:
    w = np.zeros((cfg.n_outputs, n_branch, cfg.taps_per_branch), dtype=np.complex128)
    center = cfg.taps_per_branch // 2
    for i in range(cfg.n_outputs):
        w[i, i, center] = 1.0  # received branch i feeds output i
    return w


def _ber_per_channel(bits_hat: np.ndarray, tx_bits: np.ndarray, skip_bits: int) -> np.ndarray:
    n = min(bits_hat.shape[1], tx_bits.shape[1])
    err = bits_hat[:, skip_bits:n] != tx_bits[:, skip_bits:n]
    return err.mean(axis=1)


def _prepare(detected: WaveformFrame, tx: TxRecord, cfg: EqualizerConfig):
    cfg.validate()
    if cfg.n_outputs != detected.n_channels:
        raise ConfigError(
            f"cfg.n_outputs={cfg.n_outputs} but frame has {detected.n_channels}"
        )
    if cfg.sps_in != detected.samples_per_symbol:
        raise ConfigError("frame sample grid does not match sps_in")
    if cfg.training_length > tx.config.training_length:
        raise ConfigError(
            "equalizer training_length exceeds the transmitted training prefix"
        )
    sps = cfg.sps_in
    n_train = cfg.training_length
    train_waves = np.stack(
        [
            shape_symbols(tx.symbols[i, :n_train], tx.shaping, n_train * sps)
            for i in range(cfg.n_outputs)
        ]
    )
    offset = frame_sync(detected.channels, train_waves, sps)
    rx = detected.channels[:, offset:]
    n_sym = rx.shape[1] // sps
    if n_sym <= n_train:
        raise ConfigError("frame too short after sync offset")
    rx = rx[:, : n_sym * sps]

    # per-channel AGC so step sizes are power-independent
    scales = np.sqrt(np.mean(np.abs(rx) ** 2, axis=1, keepdims=True))
    if np.any(scales == 0.0):
        raise ConfigError("a received channel is all zero")
    rx = rx / scales
    return rx, offset, n_sym


def linear_mimo_equalize(
    detected: WaveformFrame, tx: TxRecord, cfg: EqualizerConfig
) -> EqualizedOutput:
    """Conventional butterfly MIMO over the received channels only."""
    rx, offset, n_sym = _prepare(detected, tx, cfg)
    catalog = [BranchInfo(BRANCH_RECEIVED, lb) for lb in detected.labels]
    w = _init_taps(cfg, rx.shape[0])
    y, mse = _adaptation_pass(rx, w, tx.symbols[:, : cfg.training_length], cfg, n_sym)

    decisions = qpsk_decide(y.reshape(-1)).reshape(y.shape)
    bits = np.stack([qpsk_demap(decisions[i]) for i in range(decisions.shape[0])])
    ber = _ber_per_channel(bits, tx.bits, 2 * cfg.training_length)
    state = EqualizerState(taps=w, branch_catalog=catalog, mse_history=[mse])
    return EqualizedOutput(
        labels=detected.labels,
        symbols=y,
        decisions=decisions,
        bits=bits,
        per_iteration_ber=ber[None, :],
        sync_offset=offset,
        state=state,
    )


def upic_mimo_equalize(
    detected: WaveformFrame, tx: TxRecord, cfg: EqualizerConfig
) -> EqualizedOutput:
    """Iterative parallel interference cancellation around the butterfly.

    Iteration 1 is the linear pass. Later iterations rebuild reference
    branches from feedback symbols and re-adapt from a fresh start with
    the augmented branch set active for the whole frame.
    """
    rx, offset, n_sym = _prepare(detected, tx, cfg)
    n_out = cfg.n_outputs
    train = tx.symbols[:, : cfg.training_length]
    received_catalog = [BranchInfo(BRANCH_RECEIVED, lb) for lb in detected.labels]

    per_iter_ber = np.empty((cfg.iterations, n_out), dtype=np.float64)
    mse_history: list[np.ndarray] = []
    y = None
    state = None
    prev_decisions: np.ndarray | None = None

    for it in range(cfg.iterations):
        if it == 0:
            branches = rx
            catalog = list(received_catalog)
        else:
            if cfg.feedback_mode == "genie":
                feedback = tx.symbols[:, :n_sym]
            else:
                feedback = prev_decisions.copy()
                # the training prefix is known, no need to trust decisions there
                feedback[:, : cfg.training_length] = train[:, : cfg.training_length]
            refs, ref_catalog = build_upic_references(
                feedback,
                cfg,
                tx.shaping,
                rx.shape[1],
                rx_channels=rx,
                labels=detected.labels,
            )
            branches = np.concatenate([rx, refs], axis=0)
            catalog = list(received_catalog) + ref_catalog

        w = _init_taps(cfg, branches.shape[0])
        y, mse = _adaptation_pass(branches, w, train, cfg, n_sym)
        mse_history.append(mse)

        decisions = qpsk_decide(y.reshape(-1)).reshape(y.shape)
        bits = np.stack([qpsk_demap(decisions[i]) for i in range(n_out)])
        per_iter_ber[it] = _ber_per_channel(bits, tx.bits, 2 * cfg.training_length)
        prev_decisions = decisions
        state = EqualizerState(taps=w, branch_catalog=catalog, mse_history=mse_history)

    return EqualizedOutput(
        labels=detected.labels,
        symbols=y,
        decisions=prev_decisions,
        bits=bits,
        per_iteration_ber=per_iter_ber,
        sync_offset=offset,
        state=state,
    )


def evm(symbols: np.ndarray, reference: np.ndarray) -> float:
    """Error-vector magnitude in dB after a scalar least-squares gain fit.

    The complex gain alpha minimizing |symbols - alpha * reference|^2 is
    divided out first, so a pure scale/rotation difference reports the
    -150 dB sentinel (anything at or below -100 dB means "exact").
    """
    s = np.asarray(symbols).reshape(-1)
    r = np.asarray(reference).reshape(-1)
    if s.size != r.size or s.size == 0:
        raise ParameterError("symbols and reference must have equal nonzero length")
    denom = np.vdot(r, r)
    if denom == 0.0:
        raise ParameterError("reference is all zero")
    alpha = np.vdot(r, s) / denom
    if alpha == 0.0:
        return float(10.0 * np.log10(np.mean(np.abs(s - r) ** 2) / np.mean(np.abs(r) ** 2)))
    err = np.mean(np.abs(s / alpha - r) ** 2) / np.mean(np.abs(r) ** 2)
    if err < 1e-15:
        return -150.0
    return float(10.0 * np.log10(err))
