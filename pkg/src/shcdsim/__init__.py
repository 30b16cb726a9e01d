"""Numerical simulator for self-homodyne coherent links over multiplexed
spatial channels, with interference-cancelling MIMO equalization.

The pipeline: ``generate_tx`` makes shaped QPSK frames plus a CW pilot,
``build_coupler_channel``/``build_mmf_channel`` realize a seeded mixing
channel, ``propagate`` runs the frame through it, ``shcd_detect`` beats
each signal port against the pilot and exposes the exact interference
decomposition, and the equalizer module recovers symbols with or without
reference-branch cancellation. ``scenarios`` wraps all of it in seeded,
replayable sweeps.
"""

from .version import __version__
from .errors import (
    ShcdsimError,
    ParameterError,
    ConfigError,
    NoPeakError,
    SyncFailureError,
    LoStarvedError,
    EqualizerDivergenceError,
    SkewOutOfRangeError,
    DegenerateInputError,
)
from .rng import Rng
from .dsp import (
    WaveformFrame,
    RrcFilter,
    rrc_design,
    convolve_same,
    fractional_delay,
    xcorr_peak,
)
from .txgen import (
    PT_LABEL,
    QPSK_CONSTELLATION,
    TxConfig,
    TxRecord,
    dbm_to_meansquare,
    generate_tx,
    qpsk_map,
    qpsk_demap,
    qpsk_decide,
    shape_symbols,
)
from .channel import (
    ChannelModel,
    CouplerSpec,
    MmfSpec,
    build_coupler_channel,
    build_mmf_channel,
    expand_to_channel_layout,
    propagate,
    channel_to_json,
    channel_from_json,
)
from .receiver import (
    RxConfig,
    BeatDecomposition,
    shcd_detect,
    interference_powers,
    decomposition_to_csv,
)
from .equalizer import (
    EqualizerConfig,
    EqualizerState,
    EqualizedOutput,
    BranchInfo,
    frame_sync,
    linear_mimo_equalize,
    build_upic_references,
    upic_mimo_equalize,
    evm,
)
from .metrics import (
    FEC_THRESHOLD,
    BerResult,
    count_ber,
    wilson_interval,
    q_factor_db,
    constellation_dump,
    thin_symbols,
)
from .scenarios import (
    SCHEMA_VERSION,
    SCHEMES,
    ScenarioConfig,
    SweepSpec,
    SweepResult,
    PointRecord,
    ValidationReport,
    preset_coupler,
    preset_mmf3,
    get_preset,
    validate_config,
    run_point,
    run_scenario,
    results_rows,
    write_results_csv,
    write_taps_csv,
    write_manifest,
    scenario_to_dict,
    scenario_from_dict,
    scenario_to_toml,
    load_scenario,
    replay,
)

__all__ = [name for name in dir() if not name.startswith("_")]
