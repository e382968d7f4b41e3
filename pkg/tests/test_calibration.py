"""Amplitude-only channel estimation: probes, phase recovery, sign resolution."""

import numpy as np
import pytest

from dmlink.calibration import (
    CalibrationMeasurements,
    DegenerateMagnitude,
    EstimatedCsi,
    MeasurementFloor,
    amplitude_estimate,
    assemble_H,
    calibrate,
    estimate_csi,
    probe_weights,
    resolve_sign,
    run_calibration,
    solve_abs_phase,
)


def amplitude_meter(h):
    """Noise-free amplitude readings for a given channel matrix."""
    hm = np.asarray(h, dtype=complex)
    return lambda w: np.abs(hm @ np.asarray(w, dtype=complex))


def test_probe_weights_two_elements():
    w = probe_weights(2)
    assert len(w) == 4
    assert np.array_equal(w[0], [1, 0])
    assert np.array_equal(w[1], [0, 1])
    assert np.array_equal(w[2], [1, 1])
    assert np.array_equal(w[3], [1, 1j])


def test_probe_weights_three_elements():
    # each extra element adds one solo and two pair probes
    w = probe_weights(3)
    assert len(w) == 7
    assert np.array_equal(w[3], [1, 1, 0])
    assert np.array_equal(w[4], [1, 1j, 0])
    assert np.array_equal(w[5], [1, 0, 1])
    assert np.array_equal(w[6], [1, 0, 1j])


def test_identity_channel_hits_floor():
    # receiver 2 cannot hear element 1 at all
    with pytest.raises(MeasurementFloor):
        run_calibration(amplitude_meter(np.eye(2)))


def test_run_calibration_collects_in_order():
    seen = []

    def meter(w):
        seen.append(np.array(w))
        return np.abs(np.array([[1.0, 1.0], [1.0, -1.0]]) @ w)

    meas = run_calibration(meter)
    assert len(seen) == 4
    assert np.array_equal(meas.amp_tx1_only, [1.0, 1.0])
    assert np.array_equal(meas.amp_tx2_only, [1.0, 1.0])
    assert np.allclose(meas.amp_both_zero, [2.0, 0.0])
    assert np.allclose(meas.amp_both_quad, [np.sqrt(2), np.sqrt(2)])


def test_solve_abs_phase_worked_values():
    assert solve_abs_phase(1.0, 1.0, 2.0) == 0.0
    assert np.isclose(solve_abs_phase(1.0, 1.0, np.sqrt(2.0)), np.pi / 2, atol=1e-12)
    # |1 + 0.5 e^{j pi/3}| = 1.3228757
    assert np.isclose(solve_abs_phase(1.0, 0.5, 1.3228756555322954),
                      np.pi / 3, atol=1e-9)


def test_solve_abs_phase_inverts_forward_model():
    rng = np.random.default_rng(2)
    for _ in range(500):
        t1 = rng.uniform(0.01, 3.0)
        t2 = rng.uniform(0.01, 3.0)
        theta = rng.uniform(0.0, np.pi)
        both = abs(t1 + t2 * np.exp(1j * theta))
        assert abs(solve_abs_phase(t1, t2, both) - theta) < 1e-9


def test_solve_abs_phase_clamps_to_endpoints():
    # out-of-range cosine arguments degrade to exactly 0 or pi
    assert solve_abs_phase(1.0, 1.0, 2.0 + 1e-4) == 0.0
    assert solve_abs_phase(1.0, 0.5, 0.4995) == np.pi


def test_solve_abs_phase_rejects_tiny_amplitudes():
    with pytest.raises(DegenerateMagnitude):
        solve_abs_phase(1e-9, 1.0, 1.0)
    with pytest.raises(DegenerateMagnitude):
        solve_abs_phase(1.0, 0.0, 1.0)


def test_resolve_sign_worked_values():
    # oracles: p = |1 + e^{j(pi/2 +- pi/3)}|
    p_plus = abs(1 + np.exp(1j * (np.pi / 2 + np.pi / 3)))
    p_minus = abs(1 + np.exp(1j * (np.pi / 2 - np.pi / 3)))
    assert np.isclose(p_plus, 0.5176380902050415)
    assert np.isclose(p_minus, 1.9318516525781366)
    assert resolve_sign(1.0, 1.0, np.pi / 3, 0.5176381) == 1
    assert resolve_sign(1.0, 1.0, np.pi / 3, 1.9318517) == -1


def test_resolve_sign_tie_prefers_positive():
    # theta = 0 makes both hypotheses identical
    assert resolve_sign(1.0, 1.0, 0.0, np.sqrt(2.0)) == 1
    # so does theta = pi
    quad = abs(1 + np.exp(1j * (np.pi / 2 + np.pi)))
    assert resolve_sign(1.0, 1.0, np.pi, quad) == 1


def test_sign_recovery_over_grid():
    # full forward model over a dense grid of true phases
    rng = np.random.default_rng(5)
    thetas = np.linspace(-np.pi, np.pi, 1000, endpoint=True)
    for theta in thetas:
        t1 = rng.uniform(0.1, 2.0)
        t2 = rng.uniform(0.1, 2.0)
        both = abs(t1 + t2 * np.exp(1j * theta))
        quad = abs(t1 + t2 * np.exp(1j * (np.pi / 2 + theta)))
        abs_th = solve_abs_phase(t1, t2, both)
        sign = resolve_sign(t1, t2, abs_th, quad)
        got = sign * abs_th
        err = np.angle(np.exp(1j * (got - theta)))
        assert abs(err) < 1e-6, f"theta={theta}"


def test_assemble_H_examples():
    csi = EstimatedCsi(magnitudes=np.array([[1.0, 1.0], [1.0, 1.0]]),
                       theta=np.array([[np.pi / 2], [-np.pi / 2]]))
    h = assemble_H(csi)
    assert np.allclose(h.entries, [[1.0, 1j], [1.0, -1j]], atol=1e-15)

    csi2 = EstimatedCsi(magnitudes=np.array([[1.0, 0.5], [2.0, 1.0]]),
                        theta=np.array([[0.0], [np.pi]]))
    h2 = assemble_H(csi2)
    assert np.allclose(h2.entries, [[1.0, 0.5], [2.0, -1.0]], atol=1e-15)


def test_assembled_first_column_real_nonnegative():
    rng = np.random.default_rng(8)
    mags = rng.uniform(0.1, 2.0, size=(4, 2))
    theta = rng.uniform(-np.pi, np.pi, size=(4, 1))
    h = assemble_H(EstimatedCsi(mags, theta))
    assert np.all(h.entries[:, 0].imag == 0)
    assert np.all(h.entries[:, 0].real >= 0)


def test_calibrate_recovers_gauge_equivalent_channel():
    # estimates match the truth after rotating each row's phase reference
    rng = np.random.default_rng(17)
    for _ in range(50):
        h = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        h += 0.3 * np.sign(h.real) + 0.3j * np.sign(h.imag)  # keep entries off zero
        h_hat, csi, _ = calibrate(amplitude_meter(h))
        gauge = np.conj(h[:, 0]) / np.abs(h[:, 0])
        assert np.allclose(h_hat.entries, gauge[:, None] * h, atol=1e-9)
        assert np.all(csi.theta > -np.pi) and np.all(csi.theta <= np.pi)


def test_calibrate_worked_channel():
    h = np.array([[1.0, 1.0], [1.0, -1.0]])
    h_hat, csi, _ = calibrate(amplitude_meter(h))
    assert np.allclose(h_hat.entries, h, atol=1e-12)
    assert np.isclose(abs(csi.theta[1, 0]), np.pi)


def test_estimate_csi_from_measurements():
    meas = CalibrationMeasurements(
        solo=(np.array([1.0, 1.0]), np.array([1.0, 0.5])),
        pair_zero=(np.array([2.0, 1.3228756555322954]),),
        pair_quad=(np.array([np.sqrt(2.0), abs(1 + 0.5 * np.exp(1j * (np.pi / 2 + np.pi / 3)))]),))
    csi = estimate_csi(meas)
    assert np.allclose(csi.magnitudes, [[1.0, 1.0], [1.0, 0.5]])
    assert np.isclose(csi.theta[0, 0], 0.0, atol=1e-9)
    assert np.isclose(csi.theta[1, 0], np.pi / 3, atol=1e-9)


def test_three_element_calibration():
    rng = np.random.default_rng(23)
    h = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
    h += 0.3 * np.sign(h.real) + 0.3j * np.sign(h.imag)
    h_hat, _, _ = calibrate(amplitude_meter(h), n_elements=3)
    gauge = np.conj(h[:, 0]) / np.abs(h[:, 0])
    assert np.allclose(h_hat.entries, gauge[:, None] * h, atol=1e-9)


def test_amplitude_estimate_discards_transient():
    samples = np.full((1, 100), 3.0 + 0j)
    samples[0, :10] = 50.0  # settling garbage
    assert amplitude_estimate(samples)[0] == 3.0
    # complex magnitude, not real part
    rot = 2.0 * np.exp(1j * np.linspace(0, 6, 100))[None, :]
    assert np.isclose(amplitude_estimate(rot)[0], 2.0)
