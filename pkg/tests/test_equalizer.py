"""Frame sync, butterfly MIMO, interference-reference rebuilding, UPIC."""

import numpy as np
import pytest

from shcdsim import (
    ChannelModel,
    ConfigError,
    CouplerSpec,
    EqualizerConfig,
    EqualizerDivergenceError,
    MmfSpec,
    ParameterError,
    Rng,
    RxConfig,
    SkewOutOfRangeError,
    SyncFailureError,
    TxConfig,
    WaveformFrame,
    build_coupler_channel,
    build_upic_references,
    evm,
    expand_to_channel_layout,
    frame_sync,
    generate_tx,
    linear_mimo_equalize,
    propagate,
    qpsk_map,
    shape_symbols,
    shcd_detect,
    upic_mimo_equalize,
)
from shcdsim.equalizer import BRANCH_DC, BRANCH_FIRST, BRANCH_RECEIVED, BRANCH_SECOND

COUPLER_LO = ("PTx", "PTy")
MMF_LO = ("LP01x", "LP01y")


def _coupler_chain(
    k,
    signal_dbm,
    seed=11,
    n_symbols=(1 << 15) + 10000,
    training=10000,
    pt_dbm=10.0,
    noise_dbm=-16.0,
    skews=(0.0, 0.0, 1.7, 1.7),
):
    tx = generate_tx(
        TxConfig(
            n_signal_channels=2,
            symbol_rate=10e9,
            n_symbols=n_symbols,
            training_length=training,
            seed=seed,
            signal_power_dbm=signal_dbm,
            pt_power_dbm=pt_dbm,
        )
    )
    model = build_coupler_channel(
        CouplerSpec(
            coupling_ratio_k=k,
            linewidth_hz=100e3,
            noise_power_dbm=noise_dbm,
            skews=skews,
        )
    )
    rx = propagate(expand_to_channel_layout(tx.frame, model), model, Rng(seed + 1))
    detected, _ = shcd_detect(rx, RxConfig(lo_channel_labels=COUPLER_LO), Rng(seed + 2))
    return detected, tx


def _eq_cfg(**kw):
    base = dict(n_outputs=2, training_length=10000)
    base.update(kw)
    return EqualizerConfig(**base)


class TestEqualizerConfig:
    def test_rejections(self):
        with pytest.raises(ConfigError):
            _eq_cfg(taps_per_branch=30).validate()
        with pytest.raises(ConfigError):
            _eq_cfg(sps_in=4).validate()
        with pytest.raises(ConfigError):
            _eq_cfg(mu_train=0.0).validate()
        with pytest.raises(ConfigError):
            _eq_cfg(mu_dd=1.0).validate()
        with pytest.raises(ConfigError):
            _eq_cfg(iterations=0).validate()
        with pytest.raises(ConfigError):
            _eq_cfg(feedback_mode="oracle").validate()
        with pytest.raises(ConfigError):
            _eq_cfg(upic_order="third").validate()
        with pytest.raises(ConfigError):
            _eq_cfg(upic_order="off", iterations=2).validate()
        with pytest.raises(ConfigError):
            _eq_cfg(pair_set=((0, 5),)).validate()
        with pytest.raises(ConfigError):
            _eq_cfg(training_length=100).validate()

    def test_default_pair_set_is_all_ordered_pairs(self):
        cfg = _eq_cfg()
        assert cfg.second_order_pairs() == ((0, 0), (0, 1), (1, 0), (1, 1))


def _training_waves(seed=3, n_train=512, sps=2):
    gen = Rng(seed).generator()
    bits = gen.integers(0, 2, (2, 2 * n_train))
    from shcdsim import rrc_design

    shaping = rrc_design(0.1, 16, sps)
    waves = np.stack(
        [shape_symbols(qpsk_map(bits[i]), shaping, n_train * sps) for i in range(2)]
    )
    return waves


class TestFrameSync:
    def test_constructed_delay_of_100(self):
        tr = _training_waves()
        rx = np.concatenate([np.zeros((2, 100), dtype=complex), tr,
                             np.zeros((2, 300), dtype=complex)], axis=1)
        assert frame_sync(rx, tr, samples_per_symbol=2) == 100

    def test_monte_carlo_at_10db_snr(self):
        tr = _training_waves(seed=4)
        p_sig = np.mean(np.abs(tr) ** 2)
        sigma = np.sqrt(p_sig / 10.0 / 2.0)
        gen = Rng(5).generator()
        for _ in range(50):
            delay = int(gen.integers(0, 64))
            rx = np.concatenate(
                [np.zeros((2, delay), dtype=complex), tr,
                 np.zeros((2, 128 - delay), dtype=complex)], axis=1
            )
            rx = rx + sigma * (
                gen.standard_normal(rx.shape) + 1j * gen.standard_normal(rx.shape)
            )
            assert frame_sync(rx, tr, samples_per_symbol=2) == delay

    def test_all_zero_rx_fails(self):
        tr = _training_waves()
        with pytest.raises(SyncFailureError):
            frame_sync(np.zeros_like(tr), tr, samples_per_symbol=2)

    def test_waveform_frame_input_carries_sps(self):
        tr = _training_waves()
        rx = np.concatenate([np.zeros((2, 40), dtype=complex), tr], axis=1)
        frame = WaveformFrame(
            channels=rx, sample_rate=20e9, samples_per_symbol=2, labels=("A", "B")
        )
        assert frame_sync(frame, tr) == 40

    def test_bare_array_needs_sps(self):
        tr = _training_waves()
        with pytest.raises(ParameterError):
            frame_sync(tr, tr)

    def test_short_training_rejected(self):
        tr = _training_waves(n_train=64)
        with pytest.raises(ParameterError):
            frame_sync(tr, tr, samples_per_symbol=2)


class TestLinearMimo:
    def test_identity_channel_is_transparent(self):
        # oracle: with no mixing the converged butterfly is a single unit
        # tap per channel, so the data region must slice error-free
        detected, tx = _coupler_chain(
            k=0.0,
            signal_dbm=0.0,
            noise_dbm=float("-inf"),
            skews=(0.0,) * 4,
            n_symbols=(1 << 14) + 4000,
            training=4000,
        )
        cfg = _eq_cfg(training_length=4000, iterations=1)
        out = linear_mimo_equalize(detected, tx, cfg)
        assert float(np.max(out.per_iteration_ber)) == 0.0
        n_train = cfg.training_length
        data_evm = evm(out.symbols[:, n_train:], tx.symbols[:, n_train : out.symbols.shape[1]])
        assert data_evm < -30.0
        # shape contracts
        n_sym = out.symbols.shape[1]
        assert out.decisions.shape == out.symbols.shape
        assert out.bits.shape == (2, 2 * n_sym)

    def test_random_unitary_4x4_inverted(self):
        # oracle: H unitary means the zero-forcing solution H^{-1} exists
        # and is noise-free optimal; the butterfly must find it
        tx = generate_tx(
            TxConfig(
                n_signal_channels=4,
                symbol_rate=30e9,
                n_symbols=(1 << 14) + 4000,
                training_length=4000,
                seed=21,
                signal_power_dbm=0.0,
                pt_power_dbm=10.0,
            )
        )
        from shcdsim.channel import _random_unitary

        h = np.eye(6, dtype=complex)
        h[:4, :4] = _random_unitary(4, Rng(22).generator())
        model = ChannelModel(
            transfer=h,
            labels=("LP11ax", "LP11ay", "LP11bx", "LP11by") + MMF_LO,
            pt_channel_labels=MMF_LO,
            skews=np.zeros(6),
        )
        rx = propagate(expand_to_channel_layout(tx.frame, model), model, Rng(23))
        detected, _ = shcd_detect(rx, RxConfig(lo_channel_labels=MMF_LO), Rng(24))
        out = linear_mimo_equalize(
            detected, tx, _eq_cfg(n_outputs=4, training_length=4000, iterations=1)
        )
        assert float(np.max(out.per_iteration_ber)) == 0.0

    def test_coupling_strictly_degrades_ber(self):
        # paired seeds: same transmitter, same noise stream, only k differs
        with_xt, tx_a = _coupler_chain(k=0.05, signal_dbm=16.0)
        without_xt, tx_b = _coupler_chain(k=0.0, signal_dbm=16.0)
        cfg = _eq_cfg(iterations=1)
        ber_xt = float(np.mean(linear_mimo_equalize(with_xt, tx_a, cfg).per_iteration_ber))
        ber_clean = float(np.mean(linear_mimo_equalize(without_xt, tx_b, cfg).per_iteration_ber))
        assert ber_xt > ber_clean

    def test_divergence_detected(self):
        detected, tx = _coupler_chain(
            k=0.05, signal_dbm=8.0, n_symbols=6000, training=2000
        )
        cfg = _eq_cfg(training_length=2000, iterations=1, mu_train=0.9, mu_dd=0.9)
        with pytest.raises(EqualizerDivergenceError):
            linear_mimo_equalize(detected, tx, cfg)

    def test_output_count_mismatch_rejected(self):
        detected, tx = _coupler_chain(
            k=0.0, signal_dbm=0.0, n_symbols=4000, training=1000
        )
        with pytest.raises(ConfigError):
            linear_mimo_equalize(detected, tx, _eq_cfg(n_outputs=3, training_length=1000))

    def test_training_longer_than_tx_prefix_rejected(self):
        detected, tx = _coupler_chain(
            k=0.0, signal_dbm=0.0, n_symbols=16000, training=1000
        )
        with pytest.raises(ConfigError):
            linear_mimo_equalize(detected, tx, _eq_cfg(training_length=2000))


class TestBuildUpicReferences:
    def test_zero_skew_estimated_as_zero(self):
        detected, tx = _coupler_chain(
            k=0.05, signal_dbm=8.0, skews=(0.0,) * 4,
            n_symbols=12000, training=4000,
        )
        cfg = _eq_cfg(training_length=4000)
        refs, catalog = build_upic_references(
            tx.symbols, cfg, tx.shaping, detected.n_samples,
            rx_channels=detected.channels, labels=detected.labels,
        )
        skews = [b.skew_applied for b in catalog if b.kind != BRANCH_DC]
        assert all(abs(s) < 0.1 for s in skews)

    def test_pt_path_skew_3p5_recovered(self):
        detected, tx = _coupler_chain(
            k=0.05, signal_dbm=8.0, skews=(0.0, 0.0, 3.5, 3.5),
            n_symbols=12000, training=4000,
        )
        cfg = _eq_cfg(training_length=4000)
        _, catalog = build_upic_references(
            tx.symbols, cfg, tx.shaping, detected.n_samples,
            rx_channels=detected.channels, labels=detected.labels,
        )
        skews = [b.skew_applied for b in catalog if b.kind != BRANCH_DC]
        assert all(abs(s - 3.5) < 0.1 for s in skews)

    def test_first_order_only_catalog(self):
        detected, tx = _coupler_chain(
            k=0.05, signal_dbm=8.0, n_symbols=12000, training=4000
        )
        cfg = _eq_cfg(training_length=4000, upic_order="first")
        refs, catalog = build_upic_references(
            tx.symbols, cfg, tx.shaping, detected.n_samples
        )
        kinds = [b.kind for b in catalog]
        assert BRANCH_SECOND not in kinds
        assert kinds.count(BRANCH_FIRST) == 2
        assert kinds.count(BRANCH_DC) == 1
        assert refs.shape[0] == len(catalog) == 3

    def test_full_catalog_and_pair_subset(self):
        detected, tx = _coupler_chain(
            k=0.05, signal_dbm=8.0, n_symbols=12000, training=4000
        )
        cfg = _eq_cfg(training_length=4000)
        _, catalog = build_upic_references(
            tx.symbols, cfg, tx.shaping, detected.n_samples
        )
        kinds = [b.kind for b in catalog]
        assert kinds.count(BRANCH_FIRST) == 2
        assert kinds.count(BRANCH_SECOND) == 4
        sub = _eq_cfg(training_length=4000, pair_set=((0, 0), (1, 1)))
        _, catalog_sub = build_upic_references(
            tx.symbols, sub, tx.shaping, detected.n_samples
        )
        assert [b.kind for b in catalog_sub].count(BRANCH_SECOND) == 2

    def test_excessive_skew_raises(self):
        detected, tx = _coupler_chain(
            k=0.05, signal_dbm=8.0, skews=(0.0, 0.0, 9.0, 9.0),
            n_symbols=12000, training=4000,
        )
        cfg = _eq_cfg(training_length=4000, taps_per_branch=15)
        with pytest.raises(SkewOutOfRangeError):
            build_upic_references(
                tx.symbols, cfg, tx.shaping, detected.n_samples,
                rx_channels=detected.channels, labels=detected.labels,
            )

    def test_order_off_rejected(self):
        detected, tx = _coupler_chain(
            k=0.05, signal_dbm=8.0, n_symbols=12000, training=4000
        )
        cfg = _eq_cfg(training_length=4000, upic_order="off", iterations=1)
        with pytest.raises(ConfigError):
            build_upic_references(tx.symbols, cfg, tx.shaping, detected.n_samples)

    def test_short_feedback_rejected(self):
        detected, tx = _coupler_chain(
            k=0.05, signal_dbm=8.0, n_symbols=12000, training=4000
        )
        cfg = _eq_cfg(training_length=4000)
        with pytest.raises(ParameterError):
            build_upic_references(
                tx.symbols[:, :1000], cfg, tx.shaping, detected.n_samples
            )


class TestUpicEqualize:
    def test_null_crosstalk_matches_linear_and_refs_die(self):
        detected, tx = _coupler_chain(k=0.0, signal_dbm=8.0)
        linear = linear_mimo_equalize(detected, tx, _eq_cfg(iterations=1))
        upic = upic_mimo_equalize(detected, tx, _eq_cfg())
        ber_lin = float(np.mean(linear.per_iteration_ber[-1]))
        ber_upic = float(np.mean(upic.per_iteration_ber[-1]))
        assert abs(ber_upic - ber_lin) < 2e-3
        rows = upic.tap_report()
        strongest_rx = max(r[3] for r in rows if r[1] == BRANCH_RECEIVED)
        for row in rows:
            if row[1] in (BRANCH_FIRST, BRANCH_SECOND, BRANCH_DC):
                assert row[3] < strongest_rx - 25.0

    def test_high_power_point_iteration_monotone_and_conservative(self):
        # k=0.05 at +16 dBm input: the linear pass sits around 2e-2 BER,
        # dominated by 2nd-order interference the references can cancel
        detected, tx = _coupler_chain(k=0.05, signal_dbm=16.0)
        linear = linear_mimo_equalize(detected, tx, _eq_cfg(iterations=1))
        upic = upic_mimo_equalize(detected, tx, _eq_cfg())
        ber_it1 = float(np.mean(upic.per_iteration_ber[0]))
        ber_it2 = float(np.mean(upic.per_iteration_ber[1]))
        assert ber_it1 > 1e-3  # the point genuinely stresses the butterfly
        assert ber_it2 <= ber_it1
        # augmented adaptation never loses to the linear one on the
        # training tail (it can always zero the extra branches)
        n_train = 10000
        tail = slice(n_train - 2000, n_train)
        mse_lin = float(np.mean(linear.state.mse_history[-1][tail]))
        mse_aug = float(np.mean(upic.state.mse_history[-1][tail]))
        assert 10 * np.log10(mse_aug) <= 10 * np.log10(mse_lin) + 0.1

    def test_genie_not_worse_than_hard_decision(self):
        detected, tx = _coupler_chain(k=0.05, signal_dbm=16.0)
        genie = upic_mimo_equalize(detected, tx, _eq_cfg(feedback_mode="genie"))
        hard = upic_mimo_equalize(detected, tx, _eq_cfg(feedback_mode="hard_decision"))
        ber_genie = float(np.mean(genie.per_iteration_ber[-1]))
        ber_hard = float(np.mean(hard.per_iteration_ber[-1]))
        assert ber_genie <= ber_hard + 1e-3

    def test_lms_stationary_tail(self):
        detected, tx = _coupler_chain(k=0.05, signal_dbm=8.0)
        out = linear_mimo_equalize(detected, tx, _eq_cfg(iterations=1))
        mse = out.state.mse_history[-1]
        tail = mse[-2000:]
        slope = np.polyfit(np.arange(tail.size), tail, 1)[0]
        assert slope <= np.std(tail) / tail.size * 3


class TestEvm:
    def test_identical_is_sentinel(self):
        syms = qpsk_map(Rng(1).generator().integers(0, 2, 4096))
        assert evm(syms, syms) <= -100.0

    def test_awgn_20db(self):
        gen = Rng(2).generator()
        ref = qpsk_map(gen.integers(0, 2, 2 * 100_000))
        noisy = ref + np.sqrt(0.01 / 2.0) * (
            gen.standard_normal(ref.size) + 1j * gen.standard_normal(ref.size)
        )
        assert abs(evm(noisy, ref) - (-20.0)) < 0.2

    def test_scale_and_rotation_normalized_away(self):
        syms = qpsk_map(Rng(3).generator().integers(0, 2, 4096))
        assert evm(2.0 * np.exp(0.3j) * syms, syms) <= -100.0

    def test_zero_reference_rejected(self):
        with pytest.raises(ParameterError):
            evm(np.ones(8, dtype=complex), np.zeros(8, dtype=complex))

    def test_length_mismatch_rejected(self):
        with pytest.raises(ParameterError):
            evm(np.ones(8, dtype=complex), np.ones(9, dtype=complex))
