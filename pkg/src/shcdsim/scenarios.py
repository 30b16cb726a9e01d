"""Scenario presets, seeded sweep execution, and result serialization.

A scenario is one swept experiment: a transmit/channel/receiver/equalizer
configuration, a sweep variable with its values, and a trial count. Every
(value, trial) point runs the full pipeline once and equalizes the same
detected waveform under each scheme, so scheme deltas are paired, not
Monte-Carlo artifacts. Randomness depends on the trial index only; sweep
values change parameters, never realizations, which keeps comparisons
across sweep values paired as well.

Schemes, fixed per point:

* ``linear``: one conventional butterfly pass, no reference branches
* ``upic1``: iterative pass with 1st-order references only
* ``upic12``: iterative pass with 1st- plus 2nd-order references

All output files are deterministic byte-for-byte: ordering is sorted, no
timestamps are written, and floats are serialized with ``repr``.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .channel import (
    ChannelModel,
    CouplerSpec,
    MmfSpec,
    build_coupler_channel,
    build_mmf_channel,
    expand_to_channel_layout,
    propagate,
)
from .equalizer import (
    EqualizerConfig,
    EqualizedOutput,
    linear_mimo_equalize,
    upic_mimo_equalize,
    evm,
)
from .errors import ConfigError, ShcdsimError
from .metrics import BerResult, constellation_dump, count_ber
from .receiver import RxConfig, shcd_detect
from .rng import Rng
from .txgen import TxConfig, generate_tx
from .version import __version__

SCHEMA_VERSION = "1"

SCHEMES = ("linear", "upic1", "upic12")
SWEEP_VARIABLES = (
    "input_power_dbm",
    "coupling_ratio",
    "pspr_tx_db",
    "intergroup_xt_db",
)
PRESETS = ("coupler", "mmf3", "custom")

RESULTS_COLUMNS = (
    "scenario",
    "sweep_variable",
    "sweep_value",
    "trial",
    "scheme",
    "channel",
    "ber",
    "ci95",
    "evm_db",
    "fec_pass",
    "status",
)
TAPS_COLUMNS = (
    "sweep_value",
    "trial",
    "scheme",
    "output_ch",
    "branch_kind",
    "branch_detail",
    "norm_db",
)

_CONSTELLATION_POINTS = 2000

# trial-seed stream indices (see rng.Rng.split)
_SEED_TX = 1
_SEED_CHANNEL = 2
_SEED_PROPAGATION = 3
_SEED_RECEIVER = 4


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    preset: str
    tx: TxConfig
    channel: CouplerSpec | MmfSpec
    rx: RxConfig
    eq: EqualizerConfig
    sweep: SweepSpec
    trials_per_point: int = 4
    seed: int = 0
    output_dir: str = "runs/scenario"


@dataclass
class PointRecord:
    """Outcome of one (sweep value, trial, scheme) pipeline run."""

    sweep_value: float
    trial: int
    scheme: str
    status: str  # "ok" or "error: <class>: <message>"
    channel_labels: tuple[str, ...] = ()
    ber: BerResult | None = None
    evm_db: float = float("nan")
    evm_per_channel: dict[str, float] = field(default_factory=dict)
    tap_rows: list[tuple[str, str, str, float]] = field(default_factory=list)
    per_iteration_ber: np.ndarray | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass
class SweepResult:
    config: ScenarioConfig
    records: list[PointRecord]

    @property
    def n_failures(self) -> int:
        return sum(1 for r in self.records if not r.ok)


@dataclass
class ValidationReport:
    violations: list[str]
    bit_rate_gbps: float

    @property
    def ok(self) -> bool:
        return not self.violations


# ---------------------------------------------------------------------------
# presets


def preset_coupler() -> ScenarioConfig:
    """Dual-polarization 10 GBaud link with a 2x2 coupler crosstalk emulator.

    The pilot arm carries a residual 1.7-sample path skew, so the beat
    products of signal with its own leaked copy are decorrelated at the
    decision instants instead of collapsing to a DC offset. The
    input-power sweep deliberately runs into pilot-to-signal ratios near
    0 dB, where that 2nd-order term (growing with signal power) pulls the
    linear equalizer above the FEC threshold; the 1st-order term sits near
    -26 dB at k=0.05 regardless of power.
    """
    tx = TxConfig(
        n_signal_channels=2,
        symbol_rate=10e9,
        n_symbols=(1 << 15) + 10000,
        training_length=10000,
        seed=0,
        signal_power_dbm=0.0,
        pt_power_dbm=10.0,
    )
    channel = CouplerSpec(
        coupling_ratio_k=0.05,
        linewidth_hz=100e3,
        noise_power_dbm=-16.0,
        skews=(0.0, 0.0, 1.7, 1.7),
    )
    rx = RxConfig(lo_channel_labels=("PTx", "PTy"))
    eq = EqualizerConfig(n_outputs=2)
    sweep = SweepSpec("input_power_dbm", (0.0, 4.0, 8.0, 12.0, 14.0, 16.0))
    return ScenarioConfig(
        name="coupler",
        preset="coupler",
        tx=tx,
        channel=channel,
        rx=rx,
        eq=eq,
        sweep=sweep,
        trials_per_point=4,
        seed=20240,
        output_dir="runs/coupler",
    )


def preset_mmf3() -> ScenarioConfig:
    """Four signal channels over the three-mode-group fiber at 30 GBaud.

    Sweeps the transmit pilot-to-signal power ratio; the low end exposes
    the 2nd-order penalty, the high end is where the 2nd-order reference
    weights collapse well below the 1st-order ones.
    """
    tx = TxConfig(
        n_signal_channels=4,
        symbol_rate=30e9,
        n_symbols=(1 << 15) + 10000,
        training_length=10000,
        seed=0,
        signal_power_dbm=0.0,
        pt_power_dbm=10.0,
    )
    channel = MmfSpec(
        intergroup_xt_db=-7.0,
        mdl_db=1.0,
        linewidth_hz=100e3,
        noise_power_dbm=-13.0,
    )
    rx = RxConfig(lo_channel_labels=("LP01x", "LP01y"))
    eq = EqualizerConfig(n_outputs=4)
    sweep = SweepSpec("pspr_tx_db", (3.0, 6.0, 9.0, 14.0, 20.0, 24.0))
    return ScenarioConfig(
        name="mmf3",
        preset="mmf3",
        tx=tx,
        channel=channel,
        rx=rx,
        eq=eq,
        sweep=sweep,
        trials_per_point=4,
        seed=30303,
        output_dir="runs/mmf3",
    )


def get_preset(name: str) -> ScenarioConfig:
    if name == "coupler":
        return preset_coupler()
    if name == "mmf3":
        return preset_mmf3()
    raise ConfigError(f"unknown preset {name!r}; choose from coupler, mmf3")


# ---------------------------------------------------------------------------
# validation


def validate_config(cfg: ScenarioConfig) -> ValidationReport:
    """Collect invariant violations across all nested configs.

    Never raises; the CLI maps a nonempty list to exit code 1. Also
    reports the aggregate bit rate (channels x 2 bits/symbol x baud).
    """
    v: list[str] = []
    if cfg.preset not in PRESETS:
        v.append(f"preset must be one of {PRESETS}, got {cfg.preset!r}")
    if cfg.sweep.variable not in SWEEP_VARIABLES:
        v.append(f"sweep.variable must be one of {SWEEP_VARIABLES}")
    if len(cfg.sweep.values) == 0:
        v.append("sweep.values must be nonempty")
    if cfg.trials_per_point < 1:
        v.append("trials_per_point must be >= 1")

    try:
        cfg.tx.validate()
    except ShcdsimError as exc:
        v.append(f"tx: {exc}")
    try:
        cfg.eq.validate()
    except ShcdsimError as exc:
        v.append(f"eq: {exc}")
    if cfg.eq.n_outputs != cfg.tx.n_signal_channels:
        v.append(
            f"eq.n_outputs ({cfg.eq.n_outputs}) must match "
            f"tx.n_signal_channels ({cfg.tx.n_signal_channels})"
        )
    if cfg.eq.training_length != cfg.tx.training_length:
        v.append(
            f"eq.training_length ({cfg.eq.training_length}) must match "
            f"tx.training_length ({cfg.tx.training_length})"
        )
    if cfg.eq.iterations < 2:
        v.append("eq.iterations must be >= 2 so the upic schemes can act")

    is_coupler = isinstance(cfg.channel, CouplerSpec)
    try:
        _build_model(cfg.channel)
    except ShcdsimError as exc:
        v.append(f"channel: {exc}")
    if cfg.sweep.variable == "coupling_ratio":
        if not is_coupler:
            v.append("coupling_ratio sweeps need a coupler channel")
        for val in cfg.sweep.values:
            if not 0.0 <= val <= 1.0:
                v.append(f"coupling ratio {val} outside [0, 1]")
    if cfg.sweep.variable == "intergroup_xt_db":
        if is_coupler:
            v.append("intergroup_xt_db sweeps need an mmf3 channel")
        for val in cfg.sweep.values:
            if val > 0.0:
                v.append(f"intergroup crosstalk {val} dB must be <= 0")

    want_signals = 2 if is_coupler else 4
    if cfg.tx.n_signal_channels != want_signals:
        v.append(
            f"{'coupler' if is_coupler else 'mmf3'} channel carries "
            f"{want_signals} signal channels, tx has {cfg.tx.n_signal_channels}"
        )
    for lo in cfg.rx.lo_channel_labels:
        expected = ("PTx", "PTy") if is_coupler else ("LP01x", "LP01y")
        if lo not in expected:
            v.append(f"rx LO label {lo!r} not a pilot port of this channel")

    bit_rate = cfg.tx.n_signal_channels * 2 * cfg.tx.symbol_rate / 1e9
    return ValidationReport(violations=v, bit_rate_gbps=bit_rate)


# ---------------------------------------------------------------------------
# sweep engine


def _build_model(spec: CouplerSpec | MmfSpec) -> ChannelModel:
    if isinstance(spec, CouplerSpec):
        return build_coupler_channel(spec)
    if isinstance(spec, MmfSpec):
        return build_mmf_channel(spec)
    raise ConfigError(f"unsupported channel spec type {type(spec).__name__}")


def _apply_sweep(
    cfg: ScenarioConfig, value: float
) -> tuple[TxConfig, CouplerSpec | MmfSpec]:
    var = cfg.sweep.variable
    tx, ch = cfg.tx, cfg.channel
    if var == "input_power_dbm":
        tx = replace(tx, signal_power_dbm=float(value))
    elif var == "pspr_tx_db":
        tx = replace(tx, pt_power_dbm=tx.signal_power_dbm + float(value))
    elif var == "coupling_ratio":
        ch = replace(ch, coupling_ratio_k=float(value))
    elif var == "intergroup_xt_db":
        ch = replace(ch, intergroup_xt_db=float(value))
    else:
        raise ConfigError(f"unknown sweep variable {var!r}")
    return tx, ch


def _scheme_eq(eq: EqualizerConfig, scheme: str) -> EqualizerConfig:
    if scheme == "linear":
        return replace(eq, iterations=1, upic_order="off")
    if scheme == "upic1":
        return replace(eq, iterations=max(2, eq.iterations), upic_order="first")
    if scheme == "upic12":
        return replace(
            eq, iterations=max(2, eq.iterations), upic_order="first_and_second"
        )
    raise ConfigError(f"unknown scheme {scheme!r}")


def _error_status(exc: Exception) -> str:
    msg = str(exc).replace(",", ";").replace("\n", " ")
    return f"error: {type(exc).__name__}: {msg}"


def _score_output(
    out: EqualizedOutput, tx_record, eq: EqualizerConfig
) -> tuple[BerResult, float, dict[str, float]]:
    n_sym = out.bits.shape[1] // 2
    skip = 2 * eq.training_length
    channel_bits = {}
    tx_parts, rx_parts = [], []
    for i, lb in enumerate(out.labels):
        t = tx_record.bits[i, skip : 2 * n_sym]
        r = out.bits[i, skip : 2 * n_sym]
        channel_bits[lb] = (t, r)
        tx_parts.append(t)
        rx_parts.append(r)
    ber = count_ber(
        np.concatenate(tx_parts), np.concatenate(rx_parts), 0, channel_bits
    )

    evm_ch = {}
    s_parts, r_parts = [], []
    for i, lb in enumerate(out.labels):
        s = out.symbols[i, eq.training_length : n_sym]
        r = tx_record.symbols[i, eq.training_length : n_sym]
        evm_ch[lb] = evm(s, r)
        s_parts.append(s)
        r_parts.append(r)
    evm_all = evm(np.concatenate(s_parts), np.concatenate(r_parts))
    return ber, evm_all, evm_ch


def run_point(
    cfg: ScenarioConfig, value: float, trial: int, schemes: tuple[str, ...] = SCHEMES
) -> list[PointRecord]:
    """Run one sweep point: one shared pipeline, one record per scheme.

    Randomness is derived from (cfg.seed, trial) only. Any error in the
    shared transmit/channel/detect stage marks all scheme records; a
    scheme-local error marks just that record, and the sweep continues.
    """
    base = Rng(cfg.seed).split(trial)
    records = [PointRecord(float(value), trial, s, status="pending") for s in schemes]

    try:
        tx_cfg, ch_spec = _apply_sweep(cfg, value)
        tx_cfg = replace(tx_cfg, seed=base.split(_SEED_TX).seed)
        ch_spec = replace(ch_spec, seed=base.split(_SEED_CHANNEL).seed)
        model = _build_model(ch_spec)
        tx = generate_tx(tx_cfg)
        launched = expand_to_channel_layout(tx.frame, model)
        received = propagate(launched, model, base.split(_SEED_PROPAGATION))
        detected, _ = shcd_detect(received, cfg.rx, base.split(_SEED_RECEIVER))
    except ShcdsimError as exc:
        status = _error_status(exc)
        for rec in records:
            rec.status = status
        return records

    for rec in records:
        eq = _scheme_eq(cfg.eq, rec.scheme)
        try:
            if eq.iterations == 1:
                out = linear_mimo_equalize(detected, tx, eq)
            else:
                out = upic_mimo_equalize(detected, tx, eq)
            ber, evm_all, evm_ch = _score_output(out, tx, eq)
        except ShcdsimError as exc:
            rec.status = _error_status(exc)
            continue
        rec.status = "ok"
        rec.channel_labels = out.labels
        rec.ber = ber
        rec.evm_db = evm_all
        rec.evm_per_channel = evm_ch
        rec.tap_rows = out.tap_report()
        rec.per_iteration_ber = out.per_iteration_ber
        rec._output = out  # kept for constellation dumps; not serialized
    return records


def run_scenario(cfg: ScenarioConfig, write_files: bool = True) -> SweepResult:
    """Execute the full sweep and (optionally) write the output file set.

    Files written under cfg.output_dir: results.csv, taps.csv,
    manifest.json, and constellation/<scheme>_v<idx>_t<trial>_<ch>.csv
    dumps for trial 0 of every sweep value.
    """
    report = validate_config(cfg)
    if not report.ok:
        raise ConfigError("invalid scenario: " + "; ".join(report.violations))

    records: list[PointRecord] = []
    dumps: list[tuple[PointRecord, int]] = []
    # rows come out sorted by (sweep_value, trial, scheme) whatever order
    # the config listed the values in
    for vi, value in enumerate(sorted(cfg.sweep.values)):
        for trial in range(cfg.trials_per_point):
            point = run_point(cfg, value, trial)
            records.extend(point)
            for rec in point:
                if trial == 0 and rec.ok:
                    dumps.append((rec, vi))

    result = SweepResult(config=cfg, records=records)
    if write_files:
        os.makedirs(cfg.output_dir, exist_ok=True)
        write_results_csv(os.path.join(cfg.output_dir, "results.csv"), result)
        write_taps_csv(os.path.join(cfg.output_dir, "taps.csv"), result)
        write_manifest(os.path.join(cfg.output_dir, "manifest.json"), cfg)
        for rec, vi in dumps:
            out = getattr(rec, "_output", None)
            if out is None:
                continue
            n_sym = out.symbols.shape[1]
            for i, lb in enumerate(rec.channel_labels):
                path = os.path.join(
                    cfg.output_dir,
                    "constellation",
                    f"{rec.scheme}_v{vi:02d}_t{rec.trial}_{lb}.csv",
                )
                constellation_dump(
                    out.symbols[i, cfg.eq.training_length : n_sym],
                    path,
                    max_points=_CONSTELLATION_POINTS,
                )
    return result


# ---------------------------------------------------------------------------
# serialization


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def results_rows(result: SweepResult) -> list[tuple[str, ...]]:
    """Expand records to CSV rows: per-channel rows plus a pooled 'all' row."""
    rows = []
    cfg = result.config
    for rec in result.records:
        head = (
            cfg.name,
            cfg.sweep.variable,
            _fmt(float(rec.sweep_value)),
            str(rec.trial),
            rec.scheme,
        )
        if not rec.ok:
            rows.append(
                head
                + ("all", "nan", "nan", "nan", "false", rec.status)
            )
            continue
        for lb in rec.channel_labels:
            ch = rec.ber.per_channel[lb]
            rows.append(
                head
                + (
                    lb,
                    _fmt(ch.ber),
                    _fmt(ch.ci95_halfwidth),
                    _fmt(rec.evm_per_channel[lb]),
                    _fmt(ch.fec_pass),
                    "ok",
                )
            )
        rows.append(
            head
            + (
                "all",
                _fmt(rec.ber.ber),
                _fmt(rec.ber.ci95_halfwidth),
                _fmt(rec.evm_db),
                _fmt(rec.ber.fec_pass),
                "ok",
            )
        )
    return rows


def write_results_csv(path: str, result: SweepResult) -> str:
    lines = [",".join(RESULTS_COLUMNS)]
    lines += [",".join(row) for row in results_rows(result)]
    _write_text(path, "\n".join(lines) + "\n")
    return path


def write_taps_csv(path: str, result: SweepResult) -> str:
    lines = [",".join(TAPS_COLUMNS)]
    for rec in result.records:
        for out_ch, kind, detail, norm_db in rec.tap_rows:
            lines.append(
                ",".join(
                    (
                        _fmt(float(rec.sweep_value)),
                        str(rec.trial),
                        rec.scheme,
                        out_ch,
                        kind,
                        detail,
                        _fmt(float(norm_db)),
                    )
                )
            )
    _write_text(path, "\n".join(lines) + "\n")
    return path


def write_manifest(path: str, cfg: ScenarioConfig) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "seed": cfg.seed,
        "config": scenario_to_dict(cfg),
    }
    _write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def _write_text(path: str, text: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    d = {
        "name": cfg.name,
        "preset": cfg.preset,
        "seed": cfg.seed,
        "trials_per_point": cfg.trials_per_point,
        "output_dir": cfg.output_dir,
        "sweep": {"variable": cfg.sweep.variable, "values": list(cfg.sweep.values)},
        "tx": asdict(cfg.tx),
        "channel": asdict(cfg.channel),
        "rx": asdict(cfg.rx),
        "eq": asdict(cfg.eq),
    }
    d["channel"]["kind"] = "coupler" if isinstance(cfg.channel, CouplerSpec) else "mmf3"
    d["channel"]["skews"] = list(cfg.channel.skews)
    d["rx"]["lo_channel_labels"] = list(cfg.rx.lo_channel_labels)
    if cfg.tx.channel_labels is not None:
        d["tx"]["channel_labels"] = list(cfg.tx.channel_labels)
    if cfg.eq.pair_set is not None:
        d["eq"]["pair_set"] = [list(p) for p in cfg.eq.pair_set]
    return d


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"missing {where}.{key} in scenario config")
    return d[key]


def _construct(cls, kwargs: dict, section: str):
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad [{section}] config: {exc}") from exc


def scenario_from_dict(d: dict) -> ScenarioConfig:
    tx_d = dict(_require(d, "tx", "config"))
    if tx_d.get("channel_labels") is not None:
        tx_d["channel_labels"] = tuple(tx_d["channel_labels"])
    tx = _construct(TxConfig, tx_d, "tx")

    ch_d = dict(_require(d, "channel", "config"))
    kind = ch_d.pop("kind", None)
    if kind not in ("coupler", "mmf3"):
        raise ConfigError(f"channel.kind must be 'coupler' or 'mmf3', got {kind!r}")
    if "skews" in ch_d:
        ch_d["skews"] = tuple(ch_d["skews"])
    channel = _construct(
        CouplerSpec if kind == "coupler" else MmfSpec, ch_d, "channel"
    )

    rx_d = dict(_require(d, "rx", "config"))
    rx_d["lo_channel_labels"] = tuple(rx_d["lo_channel_labels"])
    if rx_d.get("pairing") is not None:
        rx_d["pairing"] = dict(rx_d["pairing"])
    rx = _construct(RxConfig, rx_d, "rx")

    eq_d = dict(_require(d, "eq", "config"))
    if eq_d.get("pair_set") is not None:
        eq_d["pair_set"] = tuple(tuple(int(x) for x in p) for p in eq_d["pair_set"])
    eq = _construct(EqualizerConfig, eq_d, "eq")

    sweep_d = _require(d, "sweep", "config")
    sweep = SweepSpec(
        variable=_require(sweep_d, "variable", "sweep"),
        values=tuple(float(v) for v in _require(sweep_d, "values", "sweep")),
    )
    return ScenarioConfig(
        name=_require(d, "name", "config"),
        preset=_require(d, "preset", "config"),
        tx=tx,
        channel=channel,
        rx=rx,
        eq=eq,
        sweep=sweep,
        trials_per_point=int(d.get("trials_per_point", 4)),
        seed=int(_require(d, "seed", "config")),
        output_dir=str(d.get("output_dir", "runs/scenario")),
    )


def _toml_scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_scalar(x) for x in v) + "]"
    raise ConfigError(f"cannot serialize {type(v).__name__} to TOML")


def scenario_to_toml(cfg: ScenarioConfig) -> str:
    """Emit the scenario as TOML, in the same layout scenario_from_dict reads."""
    d = scenario_to_dict(cfg)
    lines = []
    for key in ("name", "preset", "seed", "trials_per_point", "output_dir"):
        lines.append(f"{key} = {_toml_scalar(d[key])}")
    for section in ("sweep", "tx", "channel", "rx", "eq"):
        lines.append("")
        lines.append(f"[{section}]")
        for key, val in d[section].items():
            if val is None:
                continue  # TOML has no null; absent means default
            lines.append(f"{key} = {_toml_scalar(val)}")
    return "\n".join(lines) + "\n"


def load_scenario(path: str) -> ScenarioConfig:
    """Read a scenario config from .toml or .json."""
    if path.endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:  # 3.10: stdlib tomllib arrived in 3.11
            import tomli as tomllib

        with open(path, "rb") as fh:
            return scenario_from_dict(tomllib.load(fh))
    if path.endswith(".json"):
        with open(path, "r", encoding="utf-8") as fh:
            return scenario_from_dict(json.load(fh))
    raise ConfigError(f"config path must end in .toml or .json: {path}")


def replay(manifest_path: str, output_dir: str | None = None) -> SweepResult:
    """Re-run a recorded manifest; byte-identical outputs by construction."""
    with open(manifest_path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"manifest schema version {version!r} not supported "
            f"(expected {SCHEMA_VERSION!r})"
        )
    cfg = scenario_from_dict(_require(doc, "config", "manifest"))
    if output_dir is not None:
        cfg = replace(cfg, output_dir=output_dir)
    return run_scenario(cfg)
