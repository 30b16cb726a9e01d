"""Optical channel models: coupler crosstalk emulation and few-mode fiber.

Both builders produce a frequency-flat complex mixing matrix H over a
dual-polarization channel layout. Propagation keeps the pilot-tone-origin
and signal-origin fields separate through the (linear) channel so the
receiver can decompose the beat product exactly; the physical received
field is always their sum.

Impairment order inside ``propagate``:

1. laser phase noise applied to the origin fields before mixing; every
   channel sees exp(j phi(t)), except the pilot path which sees
   exp(j phi(t - differential_path_delay)) because only the launch fields
   carry a per-path phase history,
2. the sample-wise multiply by H,
3. per received-port skew (fractional delay). Skews act at the output
   because the delay that matters downstream is the receive-path length
   between the demultiplexer and each coherent-receiver input; an
   input-side delay on a constant-modulus pilot would be unobservable,
4. additive complex white noise at noise_power_dbm per port (receiver
   input referred), drawn independently of the phase-noise stream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dsp import WaveformFrame, fractional_delay
from .errors import ConfigError, ParameterError
from .rng import Rng
from .txgen import PT_LABEL, dbm_to_meansquare

# stream keys under the channel seed
_STREAM_BUILD = 1
_STREAM_PHASE = 2
_STREAM_NOISE = 3

COUPLER_LABELS = ("SIGx", "SIGy", "PTx", "PTy")
COUPLER_PT_LABELS = ("PTx", "PTy")

MMF3_LABELS = ("LP11ax", "LP11ay", "LP11bx", "LP11by", "LP01x", "LP01y")
MMF3_PT_LABELS = ("LP01x", "LP01y")


@dataclass
class ChannelModel:
    """A built channel realization: mixing matrix plus propagation knobs."""

    transfer: np.ndarray  # (M, M) complex, acts on the channel layout
    labels: tuple[str, ...]
    pt_channel_labels: tuple[str, ...]
    skews: np.ndarray  # per received port, in samples
    linewidth_hz: float = 0.0
    differential_path_delay_s: float = 0.0
    noise_power_dbm: float = float("-inf")
    mdl_db: float = 0.0
    seed: int = 0
    # True: launch the pilot split evenly across its ports (fiber at 45 deg);
    # False: launch on the first PT port and let H's rotation stage split it.
    pt_launch_split: bool = True

    def __post_init__(self):
        self.transfer = np.asarray(self.transfer, dtype=np.complex128)
        m = self.transfer.shape[0]
        if self.transfer.shape != (m, m):
            raise ConfigError("transfer matrix must be square")
        self.labels = tuple(self.labels)
        if len(self.labels) != m:
            raise ConfigError("one label per channel required")
        self.pt_channel_labels = tuple(self.pt_channel_labels)
        for lb in self.pt_channel_labels:
            if lb not in self.labels:
                raise ConfigError(f"PT label {lb!r} not in channel labels")
        self.skews = np.asarray(self.skews, dtype=np.float64)
        if self.skews.shape != (m,):
            raise ConfigError("one skew per channel required")

    @property
    def n_channels(self) -> int:
        return self.transfer.shape[0]

    def pt_mask(self) -> np.ndarray:
        return np.array([lb in self.pt_channel_labels for lb in self.labels])


@dataclass(frozen=True)
class CouplerSpec:
    """2x2 coupler crosstalk emulator between a signal path and the PT path.

    The coupler acts per polarization with field matrix
    [[sqrt(1-k), j sqrt(k)], [j sqrt(k), sqrt(1-k)]]; the pilot's state of
    polarization is rotated by pt_sop_rotation_deg first, so at 45 degrees
    the leaked pilot power splits evenly between the signal polarizations.
    """

    coupling_ratio_k: float
    pt_sop_rotation_deg: float = 45.0
    linewidth_hz: float = 0.0
    differential_path_delay_s: float = 0.0
    noise_power_dbm: float = float("-inf")
    skews: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    seed: int = 0


@dataclass(frozen=True)
class MmfSpec:
    """Few-mode fiber: pilot on the fundamental mode pair, signals on the
    higher-order mode pairs (n_modes=3 gives the four LP11 channels).

    intergroup_xt_db sets the total pilot-to-signal-group leaked intensity
    exactly (per pilot polarization, by construction); -inf disables the
    intergroup coupling entirely. A single-entry list is accepted for the
    one LP01-to-higher-group pair this layout has. mdl_db is the spread
    between the largest and smallest singular value of H.
    """

    n_modes: int = 3
    intergroup_xt_db: float | tuple[float, ...] = -7.0
    mdl_db: float = 0.0
    intra_group_mixing: bool = True
    linewidth_hz: float = 0.0
    differential_path_delay_s: float = 0.0
    noise_power_dbm: float = float("-inf")
    skews: tuple[float, ...] = (0.0,) * 6
    seed: int = 0


def _random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    # fix the QR phase convention so the draw is Haar distributed
    return q * (np.diag(r) / np.abs(np.diag(r)))


def build_coupler_channel(spec: CouplerSpec) -> ChannelModel:
    k = spec.coupling_ratio_k
    if not 0.0 <= k <= 1.0:
        raise ParameterError(f"coupling_ratio_k must be in [0, 1], got {k}")

    c, s = np.sqrt(1.0 - k), 1j * np.sqrt(k)
    mix = np.eye(4, dtype=np.complex128)
    # per-polarization coupling between (SIG pol, PT pol)
    for sig, pt in ((0, 2), (1, 3)):
        mix[sig, sig] = c
        mix[sig, pt] = s
        mix[pt, sig] = s
        mix[pt, pt] = c

    th = np.deg2rad(spec.pt_sop_rotation_deg)
    rot = np.eye(4, dtype=np.complex128)
    rot[2:, 2:] = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])

    return ChannelModel(
        transfer=mix @ rot,
        labels=COUPLER_LABELS,
        pt_channel_labels=COUPLER_PT_LABELS,
        skews=np.asarray(spec.skews, dtype=np.float64),
        linewidth_hz=spec.linewidth_hz,
        differential_path_delay_s=spec.differential_path_delay_s,
        noise_power_dbm=spec.noise_power_dbm,
        mdl_db=0.0,
        seed=spec.seed,
        pt_launch_split=False,
    )


def build_mmf_channel(spec: MmfSpec) -> ChannelModel:
    """H = D (MDL) . U_intra (signal-block unitary) . G (intergroup) . P (phases).

    G couples each pilot polarization into the signal block through a
    seeded random direction with intensity exactly 10^(xt_db/10); the
    whole matrix is unitary before D by construction.
    """
    xt_db = spec.intergroup_xt_db
    if isinstance(xt_db, (tuple, list)):
        if len(xt_db) != 1:
            raise ParameterError(
                "per-pair crosstalk lists support exactly the one "
                "LP01-to-higher-group pair of this layout"
            )
        xt_db = float(xt_db[0])
    if xt_db != float("-inf") and xt_db > 0.0:
        raise ParameterError(f"intergroup_xt_db must be <= 0 dB, got {xt_db}")
    if spec.mdl_db < 0.0:
        raise ParameterError("mdl_db must be >= 0")
    if spec.n_modes < 2:
        raise ParameterError("n_modes must be >= 2")

    m = 2 * spec.n_modes
    n_sig = m - 2
    if spec.n_modes == 3:
        labels = MMF3_LABELS
    else:
        labels = tuple(
            f"LP11{chr(ord('a') + i)}{p}" for i in range(spec.n_modes - 1) for p in "xy"
        ) + MMF3_PT_LABELS
    skews = np.asarray(spec.skews, dtype=np.float64)
    if skews.size != m:
        if not np.any(skews):
            skews = np.zeros(m)
        else:
            raise ParameterError(
                f"skews must list one delay per channel ({m}), got {skews.size}"
            )
    gen = Rng(spec.seed).split(_STREAM_BUILD).generator()

    phases = np.exp(2j * np.pi * gen.uniform(size=m))
    p = np.diag(phases).astype(np.complex128)

    # intergroup block rotation: pilot subspace vs seeded directions in the
    # signal block, leak intensity chi per pilot polarization, exact
    chi = 0.0 if xt_db == float("-inf") else 10.0 ** (xt_db / 10.0)
    if chi > 0.0:
        z = gen.standard_normal((n_sig, 2)) + 1j * gen.standard_normal((n_sig, 2))
        v, _ = np.linalg.qr(z)  # (n_sig, 2) isometry
        cc = np.sqrt(1.0 - chi)
        ss = np.sqrt(chi)
        g = np.zeros((m, m), dtype=np.complex128)
        g[:n_sig, :n_sig] = np.eye(n_sig) - (1.0 - cc) * (v @ v.conj().T)
        g[:n_sig, n_sig:] = ss * v
        g[n_sig:, :n_sig] = -ss * v.conj().T
        g[n_sig:, n_sig:] = cc * np.eye(2)
    else:
        g = np.eye(m, dtype=np.complex128)

    u = np.eye(m, dtype=np.complex128)
    if spec.intra_group_mixing:
        u[:n_sig, :n_sig] = _random_unitary(n_sig, gen)

    if spec.mdl_db > 0.0:
        span = np.linspace(spec.mdl_db / 2.0, -spec.mdl_db / 2.0, m)
        amps = 10.0 ** (gen.permutation(span) / 20.0)
        amps = amps / np.sqrt(np.mean(amps**2))
        d = np.diag(amps).astype(np.complex128)
    else:
        d = np.eye(m, dtype=np.complex128)

    return ChannelModel(
        transfer=d @ u @ g @ p,
        labels=labels,
        pt_channel_labels=MMF3_PT_LABELS,
        skews=skews,
        linewidth_hz=spec.linewidth_hz,
        differential_path_delay_s=spec.differential_path_delay_s,
        noise_power_dbm=spec.noise_power_dbm,
        mdl_db=spec.mdl_db,
        seed=spec.seed,
    )


def expand_to_channel_layout(frame: WaveformFrame, model: ChannelModel) -> WaveformFrame:
    """Map a transmit frame (signal channels + one PT) onto the model layout.

    Signal channels fill the model's non-PT ports in order. The single PT
    waveform goes onto the first PT port when the layout has a dedicated
    pilot-rotation stage (coupler), or is split evenly across both pilot
    polarizations otherwise (launch at 45 degrees into the fiber).
    """
    sig_labels = [lb for lb in model.labels if lb not in model.pt_channel_labels]
    tx_sig = [lb for lb in frame.labels if lb != PT_LABEL]
    if len(tx_sig) != len(sig_labels):
        raise ConfigError(
            f"frame has {len(tx_sig)} signal channels, layout needs {len(sig_labels)}"
        )
    if PT_LABEL not in frame.labels:
        raise ConfigError("frame carries no pilot tone channel")

    out = np.zeros((model.n_channels, frame.n_samples), dtype=np.complex128)
    for tx_lb, port_lb in zip(tx_sig, sig_labels):
        out[model.labels.index(port_lb)] = frame.channel(tx_lb)

    pt_wave = frame.channel(PT_LABEL)
    pt_ports = [model.labels.index(lb) for lb in model.pt_channel_labels]
    if model.pt_launch_split:
        for idx in pt_ports:
            out[idx] = pt_wave / np.sqrt(len(pt_ports))
    else:
        out[pt_ports[0]] = pt_wave

    return WaveformFrame(
        channels=out,
        sample_rate=frame.sample_rate,
        samples_per_symbol=frame.samples_per_symbol,
        labels=model.labels,
    )


def _wiener_phase(n: int, linewidth_hz: float, sample_rate: float,
                  gen: np.random.Generator) -> np.ndarray:
    steps = gen.standard_normal(n) * np.sqrt(2.0 * np.pi * linewidth_hz / sample_rate)
    phi = np.cumsum(steps)
    return phi - phi[0]


def propagate(frame: WaveformFrame, model: ChannelModel, rng: Rng) -> WaveformFrame:
    """Run a frame through the channel; returns the received frame.

    The result carries ``origins`` with the signal-origin and pilot-origin
    parts of every port's field (noise excluded); their sum plus noise is
    the returned total. Superposition holds on the origin parts to machine
    precision because every stage before the noise add is linear.
    """
    if frame.labels != model.labels:
        raise ConfigError(
            f"frame layout {frame.labels} does not match channel {model.labels}"
        )
    pt_mask = model.pt_mask()
    x_sig = np.where(pt_mask[:, None], 0.0, frame.channels)
    x_pt = np.where(pt_mask[:, None], frame.channels, 0.0)

    if model.linewidth_hz > 0.0:
        gen = rng.split(_STREAM_PHASE).generator()
        phi = _wiener_phase(frame.n_samples, model.linewidth_hz, frame.sample_rate, gen)
        delay_samples = int(round(model.differential_path_delay_s * frame.sample_rate))
        phi_pt = np.empty_like(phi)
        if delay_samples == 0:
            phi_pt[:] = phi
        elif delay_samples > 0:
            phi_pt[delay_samples:] = phi[: len(phi) - delay_samples]
            phi_pt[:delay_samples] = phi[0]
        else:
            phi_pt[:delay_samples] = phi[-delay_samples:]
            phi_pt[delay_samples:] = phi[-1]
        x_sig = x_sig * np.exp(1j * phi)[None, :]
        x_pt = x_pt * np.exp(1j * phi_pt)[None, :]

    y_sig = model.transfer @ x_sig
    y_pt = model.transfer @ x_pt

    if np.any(model.skews != 0.0):
        for i, d in enumerate(model.skews):
            if d != 0.0:
                y_sig[i] = fractional_delay(y_sig[i], float(d))
                y_pt[i] = fractional_delay(y_pt[i], float(d))

    total = y_sig + y_pt
    noise_ms = dbm_to_meansquare(model.noise_power_dbm)
    if noise_ms > 0.0:
        gen = rng.split(_STREAM_NOISE).generator()
        shape = total.shape
        noise = (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) * np.sqrt(
            noise_ms / 2.0
        )
        total = total + noise

    return WaveformFrame(
        channels=total,
        sample_rate=frame.sample_rate,
        samples_per_symbol=frame.samples_per_symbol,
        labels=model.labels,
        origins={"signal": y_sig, "pt": y_pt},
    )


def channel_to_json(model: ChannelModel) -> str:
    """Serialize a channel realization for replay; exact float round-trip."""
    doc = {
        "labels": list(model.labels),
        "pt_channel_labels": list(model.pt_channel_labels),
        "h_real": model.transfer.real.tolist(),
        "h_imag": model.transfer.imag.tolist(),
        "skews": model.skews.tolist(),
        "mdl_db": model.mdl_db,
        "seed": model.seed,
        "linewidth_hz": model.linewidth_hz,
        "differential_path_delay_s": model.differential_path_delay_s,
        "noise_power_dbm": model.noise_power_dbm,
        "pt_launch_split": model.pt_launch_split,
    }
    return json.dumps(doc, sort_keys=True, indent=1)


def channel_from_json(text: str) -> ChannelModel:
    doc = json.loads(text)
    try:
        transfer = np.asarray(doc["h_real"], dtype=np.float64) + 1j * np.asarray(
            doc["h_imag"], dtype=np.float64
        )
        return ChannelModel(
            transfer=transfer,
            labels=tuple(doc["labels"]),
            pt_channel_labels=tuple(doc["pt_channel_labels"]),
            skews=np.asarray(doc["skews"], dtype=np.float64),
            linewidth_hz=float(doc["linewidth_hz"]),
            differential_path_delay_s=float(doc["differential_path_delay_s"]),
            noise_power_dbm=float(doc["noise_power_dbm"]),
            mdl_db=float(doc["mdl_db"]),
            seed=int(doc["seed"]),
            pt_launch_split=bool(doc["pt_launch_split"]),
        )
    except KeyError as missing:
        raise ConfigError(f"channel JSON missing key {missing}") from None
