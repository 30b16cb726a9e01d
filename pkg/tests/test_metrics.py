"""BER counting, Wilson intervals, Q-factor mapping, constellation export."""

import itertools

import numpy as np
import pytest
from scipy import special

from shcdsim import (
    EqualizerConfig,
    FEC_THRESHOLD,
    MmfSpec,
    ParameterError,
    Rng,
    RxConfig,
    TxConfig,
    build_mmf_channel,
    constellation_dump,
    count_ber,
    expand_to_channel_layout,
    generate_tx,
    linear_mimo_equalize,
    propagate,
    q_factor_db,
    qpsk_map,
    shcd_detect,
    thin_symbols,
    upic_mimo_equalize,
    wilson_interval,
)


def _naive_count(a, b, skip):
    errs = 0
    total = 0
    for x, y in zip(a[skip:], b[skip:]):
        total += 1
        if x != y:
            errs += 1
    return errs, total


class TestCountBer:
    def test_quarter(self):
        r = count_ber([1, 0, 1, 0], [1, 0, 1, 1])
        assert r.ber == 0.25
        assert r.bit_errors == 1
        assert r.bits_counted == 4

    def test_identical_passes_fec(self):
        bits = Rng(0).generator().integers(0, 2, 4096)
        r = count_ber(bits, bits)
        assert r.ber == 0.0
        assert r.fec_pass

    def test_threshold_is_inclusive(self):
        tx = np.zeros(2000, dtype=int)
        rx_at = tx.copy()
        rx_at[:9] = 1  # 9/2000 = 4.5e-3 exactly
        assert count_ber(tx, rx_at).ber == FEC_THRESHOLD
        assert count_ber(tx, rx_at).fec_pass
        rx_over = tx.copy()
        rx_over[:10] = 1
        assert not count_ber(tx, rx_over).fec_pass

    def test_skip_excludes_prefix(self):
        tx = np.zeros(100, dtype=int)
        rx = tx.copy()
        rx[:50] = 1  # all errors inside the skipped prefix
        r = count_ber(tx, rx, skip=50)
        assert r.ber == 0.0
        assert r.bits_counted == 50

    def test_agrees_with_naive_loop(self):
        # exhaustive over every pair for short streams
        for n in range(1, 7):
            for a in itertools.product((0, 1), repeat=n):
                for b in itertools.product((0, 1), repeat=n):
                    r = count_ber(a, b)
                    n_err, total = _naive_count(a, b, 0)
                    assert (r.bit_errors, r.bits_counted) == (n_err, total)
        gen = Rng(1).generator()
        for n in (7, 16, 1000, 10000):
            for _ in range(20):
                a = gen.integers(0, 2, n)
                b = gen.integers(0, 2, n)
                skip = int(gen.integers(0, n))
                r = count_ber(a, b, skip=skip)
                n_err, total = _naive_count(list(a), list(b), skip)
                assert (r.bit_errors, r.bits_counted) == (n_err, total)
                assert r.ber == n_err / total

    def test_per_channel_breakdown(self):
        gen = Rng(2).generator()
        ch = {
            "X": (gen.integers(0, 2, 400), gen.integers(0, 2, 400)),
            "Y": (gen.integers(0, 2, 400), gen.integers(0, 2, 400)),
        }
        tx = np.concatenate([ch["X"][0], ch["Y"][0]])
        rx = np.concatenate([ch["X"][1], ch["Y"][1]])
        r = count_ber(tx, rx, channel_bits=ch)
        assert set(r.per_channel) == {"X", "Y"}
        assert (
            r.per_channel["X"].bit_errors + r.per_channel["Y"].bit_errors
            == r.bit_errors
        )

    def test_rejections(self):
        with pytest.raises(ParameterError):
            count_ber([0, 1], [0, 1, 1])
        with pytest.raises(ParameterError):
            count_ber([0, 1], [0, 1], skip=2)
        with pytest.raises(ParameterError):
            count_ber([0, 1], [0, 1], skip=-1)


class TestWilsonInterval:
    def test_zero_errors_still_informative(self):
        low, high = wilson_interval(0, 100000)
        assert low == 0.0
        assert 0.0 < high < 1e-4

    def test_contains_point_estimate(self):
        gen = Rng(3).generator()
        for _ in range(200):
            n = int(gen.integers(1, 10000))
            k = int(gen.integers(0, n + 1))
            low, high = wilson_interval(k, n)
            assert low <= k / n <= high
            assert 0.0 <= low <= high <= 1.0

    def test_coverage_at_low_ber(self):
        # binomial MC: the 95% interval must cover the true p in at
        # least 93% of trials at p=5e-3, n=1e5
        p, n = 5e-3, 100_000
        gen = Rng(4).generator()
        hits = 0
        for k in gen.binomial(n, p, 1000):
            low, high = wilson_interval(int(k), n)
            if low <= p <= high:
                hits += 1
        assert hits >= 930

    def test_rejections(self):
        with pytest.raises(ParameterError):
            wilson_interval(0, 0)
        with pytest.raises(ParameterError):
            wilson_interval(5, 4)
        with pytest.raises(ParameterError):
            wilson_interval(-1, 4)

    def test_ci_halfwidth_matches_bounds(self):
        r = count_ber(np.zeros(1000, int), np.r_[np.ones(3, int), np.zeros(997, int)])
        low, high = r.ci95_bounds()
        assert r.ci95_halfwidth == pytest.approx((high - low) / 2.0)


class TestQFactor:
    def test_roundtrip_against_forward_map(self):
        # forward map: ber = 0.5 erfc(Q / sqrt(2))
        for ber in (1e-2, 1e-3, 1e-6, 1e-9):
            q = 10.0 ** (q_factor_db(ber) / 20.0)
            assert 0.5 * special.erfc(q / np.sqrt(2.0)) == pytest.approx(ber, rel=1e-9)

    def test_clamped_at_zero_ber(self):
        assert q_factor_db(0.0) == q_factor_db(1e-15)
        assert np.isfinite(q_factor_db(0.0))

    def test_half_and_worse_have_no_q(self):
        assert q_factor_db(0.5) == float("-inf")
        assert q_factor_db(0.9) == float("-inf")

    def test_rejections(self):
        with pytest.raises(ParameterError):
            q_factor_db(-0.1)
        with pytest.raises(ParameterError):
            q_factor_db(1.1)


class TestThinSymbols:
    def test_short_stream_untouched(self):
        s = np.arange(10) + 1j
        assert np.array_equal(thin_symbols(s, 10), s)
        assert np.array_equal(thin_symbols(s, 100), s)

    def test_stride_is_deterministic_and_spans(self):
        s = np.arange(1000) + 0j
        t1 = thin_symbols(s, 64)
        t2 = thin_symbols(s, 64)
        assert t1.size == 64
        assert np.array_equal(t1, t2)
        assert t1[0] == s[0] and t1[-1] == s[-1]

    def test_rejections(self):
        with pytest.raises(ParameterError):
            thin_symbols(np.array([]), 4)
        with pytest.raises(ParameterError):
            thin_symbols(np.ones(4), 0)


def _load_points(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        assert header == "re,im"
        pts = [complex(*map(float, line.split(","))) for line in fh]
    return np.array([complex(p.real, p.imag) for p in pts])


class TestConstellationDump:
    def test_four_symbols_four_rows(self, tmp_path):
        syms = qpsk_map(np.array([0, 0, 0, 1, 1, 0, 1, 1]))
        path = constellation_dump(syms, str(tmp_path / "c.csv"))
        assert _load_points(path).size == 4

    def test_noiseless_qpsk_four_distinct_points(self, tmp_path):
        syms = qpsk_map(Rng(5).generator().integers(0, 2, 2048))
        pts = _load_points(constellation_dump(syms, str(tmp_path / "q.csv")))
        uniq = np.unique(np.round(pts, 12))
        assert uniq.size == 4
        assert np.allclose(np.abs(uniq), 1.0, atol=1e-12)

    def test_repeat_writes_identical_bytes(self, tmp_path):
        syms = (Rng(6).generator().standard_normal(5000)
                + 1j * Rng(7).generator().standard_normal(5000))
        p1 = constellation_dump(syms, str(tmp_path / "a" / "d1.csv"), max_points=512)
        p2 = constellation_dump(syms, str(tmp_path / "b" / "d2.csv"), max_points=512)
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_empty_rejected(self, tmp_path):
        with pytest.raises(ParameterError):
            constellation_dump(np.array([]), str(tmp_path / "e.csv"))

    def test_upic_shrinks_low_pspr_clusters(self, tmp_path):
        # strong 2nd-order regime: 4 dB PSPR through the -7 dB fiber; the
        # linear cloud is interference-limited, cancellation must shrink it
        tx = generate_tx(
            TxConfig(
                n_signal_channels=4,
                symbol_rate=30e9,
                n_symbols=(1 << 14) + 4000,
                training_length=4000,
                seed=31,
                signal_power_dbm=6.0,
                pt_power_dbm=10.0,
            )
        )
        model = build_mmf_channel(
            MmfSpec(intergroup_xt_db=-7.0, linewidth_hz=100e3, seed=32)
        )
        rx = propagate(expand_to_channel_layout(tx.frame, model), model, Rng(33))
        detected, _ = shcd_detect(
            rx, RxConfig(lo_channel_labels=("LP01x", "LP01y")), Rng(34)
        )
        lin = linear_mimo_equalize(
            detected, tx, EqualizerConfig(n_outputs=4, training_length=4000, iterations=1)
        )
        upc = upic_mimo_equalize(
            detected, tx, EqualizerConfig(n_outputs=4, training_length=4000)
        )

        def cluster_var(path):
            pts = _load_points(path)
            total = 0.0
            for sx in (1, -1):
                for sy in (1, -1):
                    c = pts[(np.sign(pts.real) == sx) & (np.sign(pts.imag) == sy)]
                    total += float(np.mean(np.abs(c - c.mean()) ** 2))
            return total / 4.0

        v = {}
        for name, out in (("lin", lin), ("upic", upc)):
            path = constellation_dump(
                out.symbols[0, 4000:], str(tmp_path / f"{name}.csv"), max_points=4096
            )
            v[name] = cluster_var(path)
        assert v["upic"] / v["lin"] < 1.0
