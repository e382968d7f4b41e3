"""DPSK framing, modulation and both detectors, including the insertion mode."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmlink.array_channel import NoiseConfig, WeightStream, propagate
from dmlink.modem import (
    BitStream,
    DetectorConfig,
    DpskConfig,
    EmptyInterval,
    NonAscii,
    PhaseTrace,
    async_detect,
    constellation,
    decode_ascii,
    dpsk_modulate,
    encode_ascii,
    format_bit_log,
    pad_messages,
    symbol_pad_bits,
    sync_detect,
    trace_from_stream,
    uniform_boundaries,
    wrap_phase,
)

FS = 8000.0
SPS = 16  # samples per symbol in these tests
SYMBOL = SPS / FS


def staircase(phases, sps=SPS, fs=FS):
    """Ideal received trace: each phase held for one symbol period."""
    p = np.repeat(np.asarray(phases, dtype=float), sps)
    t = np.arange(p.size) / fs
    return PhaseTrace(times=t, phases=p)


def roundtrip_sync(bits, config):
    phases = dpsk_modulate(bits, config)
    trace = staircase(phases)
    edges = uniform_boundaries(trace.times.size, len(phases))
    return sync_detect(trace, config, edges)


def test_wrap_phase():
    assert wrap_phase(0.0) == 0.0
    assert wrap_phase(np.pi) == np.pi
    assert wrap_phase(-np.pi) == np.pi
    assert np.isclose(wrap_phase(3 * np.pi / 2), -np.pi / 2)
    arr = wrap_phase(np.array([2 * np.pi, -3 * np.pi]))
    assert np.allclose(arr, [0.0, np.pi])


def test_encode_ascii_single_char():
    assert np.array_equal(encode_ascii("A").bits, [0, 1, 0, 0, 0, 0, 0, 1])


def test_encode_ascii_sizes():
    assert len(encode_ascii("")) == 0
    assert len(encode_ascii("x" * 100)) == 800


def test_encode_ascii_rejects_non_ascii():
    with pytest.raises(NonAscii):
        encode_ascii("café")


def test_decode_ascii():
    assert decode_ascii(encode_ascii("A")).text == "A"
    nine = decode_ascii(np.concatenate([encode_ascii("A").bits, [1]]))
    assert nine.text == "A"
    assert nine.dropped_bits == 1
    padded = decode_ascii(encode_ascii("hi\x00\x00"))
    assert padded.text == "hi"
    assert padded.stripped_padding == 2


def test_pad_messages():
    assert pad_messages(["ab", "a"]) == ["ab", "a\x00"]
    assert pad_messages(["ab", "cd"]) == ["ab", "cd"]
    assert pad_messages(["", "xy"]) == ["\x00\x00", "xy"]
    assert pad_messages([]) == []


def test_symbol_pad_bits():
    assert symbol_pad_bits(8, 1) == 0
    assert symbol_pad_bits(8, 3) == 1
    assert symbol_pad_bits(9, 3) == 0
    assert symbol_pad_bits(0, 4) == 0


def test_constellation_b1_polarity():
    table = constellation(1)
    assert table[0] == (np.pi / 2, 1)
    assert table[1] == (-np.pi / 2, 0)


def test_constellation_b2():
    incs = [inc for inc, _ in constellation(2)]
    labels = [label for _, label in constellation(2)]
    assert np.allclose(incs, [np.pi / 4, 3 * np.pi / 4, -3 * np.pi / 4, -np.pi / 4])
    assert labels == [0, 1, 3, 2]


@pytest.mark.parametrize("b", [1, 2, 3, 4])
def test_constellation_geometry(b):
    table = constellation(b)
    incs = np.array([inc for inc, _ in table])
    labels = [label for _, label in table]
    assert len(table) == 1 << b
    assert sorted(labels) == list(range(1 << b))
    # no two increments closer than the constellation spacing
    for i in range(len(incs)):
        for j in range(i + 1, len(incs)):
            d = abs(wrap_phase(incs[i] - incs[j]))
            assert d >= np.pi / (1 << (b - 1)) - 1e-12
    # neighbouring labels differ in exactly one bit, cyclically
    for i in range(len(labels)):
        diff = labels[i] ^ labels[(i + 1) % len(labels)]
        assert bin(diff).count("1") == 1


def test_dpsk_modulate_b1_example():
    phases = dpsk_modulate(np.array([1, 1, 0]), DpskConfig(bits_per_symbol=1))
    assert np.allclose(phases, [0.0, np.pi / 2, np.pi, np.pi / 2])


def test_dpsk_modulate_empty():
    phases = dpsk_modulate(np.array([], dtype=np.uint8), DpskConfig())
    assert np.array_equal(phases, [0.0])


def test_dpsk_modulate_b2_example():
    phases = dpsk_modulate(np.array([0, 0]), DpskConfig(bits_per_symbol=2))
    assert np.allclose(phases, [0.0, np.pi / 4])


def test_dpsk_initial_phase_offsets_everything():
    cfg = DpskConfig(bits_per_symbol=1, initial_phase=1.0)
    phases = dpsk_modulate(np.array([1, 0]), cfg)
    assert np.allclose(phases, [1.0, 1.0 + np.pi / 2, 1.0])


def test_dpsk_accumulates_without_wrapping():
    phases = dpsk_modulate(np.ones(10, dtype=np.uint8), DpskConfig(bits_per_symbol=1))
    assert phases[-1] == pytest.approx(10 * np.pi / 2)


@given(st.integers(1, 4), st.lists(st.integers(0, 1), max_size=50))
@settings(max_examples=60, deadline=None)
def test_sync_roundtrip_any_pattern(b, bitlist):
    bits = np.array(bitlist, dtype=np.uint8)
    out = roundtrip_sync(bits, DpskConfig(bits_per_symbol=b))
    assert np.array_equal(out.bits[:bits.size], bits)
    assert np.all(out.bits[bits.size:] == 0)
    assert len(out) == bits.size + symbol_pad_bits(bits.size, b)


@pytest.mark.parametrize("b", [1, 2, 3, 4])
def test_sync_roundtrip_clean(b):
    rng = np.random.default_rng(b)
    bits = rng.integers(0, 2, size=64).astype(np.uint8)
    cfg = DpskConfig(bits_per_symbol=b)
    out = roundtrip_sync(bits, cfg)
    pad = symbol_pad_bits(bits.size, b)
    assert np.array_equal(out.bits[:bits.size], bits)
    assert np.all(out.bits[bits.size:] == 0)
    assert len(out) == bits.size + pad


@pytest.mark.parametrize("b", [1, 2, 3, 4])
def test_sync_roundtrip_with_phase_noise(b):
    # noise a tenth of the constellation spacing never flips a decision
    spacing = np.pi / (1 << (b - 1))
    rng = np.random.default_rng(100 + b)
    bits = rng.integers(0, 2, size=60).astype(np.uint8)
    cfg = DpskConfig(bits_per_symbol=b)
    phases = dpsk_modulate(bits, cfg)
    trace = staircase(phases)
    noisy = PhaseTrace(trace.times,
                       trace.phases + rng.normal(0, spacing / 10, trace.phases.size))
    edges = uniform_boundaries(trace.times.size, len(phases))
    out = sync_detect(noisy, cfg, edges)
    assert np.array_equal(out.bits[:bits.size], bits)


def test_sync_tie_breaks_to_lowest_index():
    # zero increment sits exactly between +pi/2 and -pi/2; B=1 labels [1, 0]
    trace = staircase([0.0, 0.0])
    out = sync_detect(trace, DpskConfig(bits_per_symbol=1),
                      uniform_boundaries(trace.times.size, 2))
    assert np.array_equal(out.bits, [1])


def test_sync_rejects_empty_interval():
    trace = staircase([0.0, np.pi / 2])
    edges = np.array([0, 16, 16, 32])
    with pytest.raises(EmptyInterval):
        sync_detect(trace, DpskConfig(), edges)


def test_uniform_boundaries():
    edges = uniform_boundaries(32, 2)
    assert np.array_equal(edges, [0, 16, 32])
    with pytest.raises(ValueError):
        uniform_boundaries(32, 0)


@pytest.mark.parametrize("b", [1, 2, 3, 4])
def test_async_equals_sync_on_clean_traces(b):
    rng = np.random.default_rng(200 + b)
    bits = rng.integers(0, 2, size=48).astype(np.uint8)
    cfg = DpskConfig(bits_per_symbol=b)
    phases = dpsk_modulate(bits, cfg)
    trace = staircase(phases)
    edges = uniform_boundaries(trace.times.size, len(phases))
    sync_bits = sync_detect(trace, cfg, edges)
    async_bits = async_detect(trace, cfg)
    assert np.array_equal(sync_bits.bits, async_bits.bits)


def test_async_counts_injected_excursion_as_extra_symbol():
    # a sustained mid-symbol phase step is indistinguishable from a symbol
    cfg = DpskConfig(bits_per_symbol=1)
    phases = dpsk_modulate(np.array([1]), cfg)  # [0, pi/2]
    trace = staircase(phases)
    corrupted = trace.phases.copy()
    corrupted[-3:] = 0.0  # step of -pi/2 held for the confirmation window
    out = async_detect(PhaseTrace(trace.times, corrupted), cfg)
    assert len(out) == 2  # one sent, two detected
    assert np.array_equal(out.bits, [1, 0])


def test_async_insertions_with_hair_trigger_detector():
    # zero refractory and half threshold on a noisy trace over-detects
    cfg = DpskConfig(bits_per_symbol=1)
    det = DetectorConfig(transition_threshold=np.pi / 4, refractory=0.0)
    bits = np.ones(40, dtype=np.uint8)
    phases = dpsk_modulate(bits, cfg)
    longer = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        trace = staircase(phases)
        noisy = PhaseTrace(trace.times,
                           trace.phases + rng.normal(0, 0.5, trace.phases.size))
        out = async_detect(noisy, cfg, det)
        if len(out) > bits.size:
            longer += 1
    assert longer >= 90


def test_async_insertion_rate_monotone_in_jitter():
    # mean length excess grows with sampling-clock wander
    cfg = DpskConfig(bits_per_symbol=1, symbol_rate=FS / SPS)
    bits_per_trial = 50
    h = np.array([[1.0, 1.0]])
    means = []
    for jitter in (0.0, 0.2, 0.35):
        excess = []
        for seed in range(50):
            rng = np.random.default_rng(1000 + seed)
            bits = rng.integers(0, 2, size=bits_per_trial).astype(np.uint8)
            phases = dpsk_modulate(bits, cfg)
            vecs = np.stack([np.exp(1j * phases), np.zeros_like(phases)], axis=1)
            stream = propagate(h, WeightStream(vecs, SYMBOL),
                               NoiseConfig(timing_jitter=jitter, seed=seed),
                               sample_rate=FS)
            trace = trace_from_stream(stream)[0]
            out = async_detect(trace, cfg)
            excess.append(max(0, len(out) - bits_per_trial))
        means.append(np.mean(excess))
    assert means[0] <= means[1] <= means[2]
    assert means[2] > 0


def test_detector_config_validation():
    with pytest.raises(ValueError):
        DetectorConfig(transition_threshold=0.0)
    with pytest.raises(ValueError):
        DetectorConfig(confirmation_window=0)
    with pytest.raises(ValueError):
        DetectorConfig(refractory=1.0)
    assert DetectorConfig().threshold_for(2) == np.pi / 4
    assert DetectorConfig(transition_threshold=0.3).threshold_for(2) == 0.3


def test_dpsk_config_validation():
    with pytest.raises(ValueError):
        DpskConfig(bits_per_symbol=5)
    with pytest.raises(ValueError):
        DpskConfig(symbol_rate=0.0)


def test_bitstream_validation():
    with pytest.raises(ValueError):
        BitStream(np.array([0, 2, 1]))
    assert len(BitStream(np.array([], dtype=np.uint8))) == 0


def test_phase_trace_validation():
    with pytest.raises(ValueError):
        PhaseTrace(np.array([0.0, 0.0]), np.array([1.0, 2.0]))
    trace = staircase([0.0, 1.0])
    assert trace.sample_rate == pytest.approx(FS)


def test_format_bit_log_marks_mismatches():
    log = format_bit_log(np.array([1, 0, 1]), np.array([1, 1, 1]))
    lines = log.splitlines()
    assert lines[0] == "# format_version: 1"
    assert lines[1].endswith("101")
    assert lines[2].endswith("111")
    assert lines[3].endswith(" ^ ")


def test_format_bit_log_length_mismatch():
    log = format_bit_log(np.array([1, 1]), np.array([1, 1, 0, 1]))
    marks = log.splitlines()[3]
    assert marks.endswith("  ^^")
