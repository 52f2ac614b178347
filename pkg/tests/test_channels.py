import math
import warnings

import numpy as np
import pytest
from conftest import random_physical_bath, random_stable_spec, rel_err
from scipy.integrate import solve_ivp
from scipy.linalg import expm as sp_expm

from gaussio.channels import (
    DETECTOR,
    PULSE,
    STATIONARY,
    GaussianChannel,
    ModeProfile,
    apply_channel,
    cp_min_eigenvalue,
    detector_channel,
    pulse_channel,
    restrict,
    stationary_spectrum,
)
from gaussio.errors import BasisError, InvariantError, LosslessModeError, StabilityError
from gaussio.linalg import T_INF
from gaussio.measures import mean_occupation, purity, squeezing_db
from gaussio.states import (
    CovState,
    squeezed_state,
    thermal_state,
    to_quadrature,
    two_mode_squeezed_state,
    vacuum_state,
)
from gaussio.system import SystemSpec, build_drift


def oscillator(nu=5.0, kappa=1.0, nbar=0.0):
    return build_drift(SystemSpec.thermal([[0, nu], [nu, 0]], [kappa], [nbar]))


def random_profile(rng, n):
    return ModeProfile(-rng.uniform(0.3, 3, n) + 1j * rng.normal(0, 2, n))


def random_initial_state(rng, n):
    kappa = np.ones(n)
    return CovState(random_physical_bath(rng, kappa))


def pulse_oracle(model, lam, sigma0, t_end):
    """Integrate the joint (v, w) moments with dw = e^{Lambda t} v_out dt up to t_end."""
    a, k, s, vb = model.A, model.K, model.sigma_in, model.vbar_in
    d = a.shape[0]
    kinv = np.diag(1 / np.diag(k))

    def mats(t):
        el = np.diag(np.exp(lam * t))
        b = np.zeros((2 * d, 2 * d), complex)
        b[:d, :d] = a
        b[d:, :d] = el @ k
        dm = np.vstack([np.eye(d), -el @ kinv])
        return b, dm

    def rhs(t, y):
        b, dm = mats(t)
        sig = y[: 4 * d * d].reshape(2 * d, 2 * d)
        m = y[4 * d * d :]
        dsig = b @ sig + sig @ b.conj().T + dm @ s @ dm.conj().T
        return np.concatenate([dsig.ravel(), b @ m + dm @ vb])

    s0 = np.zeros((2 * d, 2 * d), complex)
    s0[:d, :d] = sigma0
    y0 = np.concatenate([s0.ravel(), np.zeros(2 * d, complex)])
    sol = solve_ivp(rhs, (0, t_end), y0, method="DOP853", rtol=1e-11, atol=1e-13)
    y = sol.y[:, -1]
    norm = np.diag(np.sqrt(np.abs(2 * lam.real)))
    sig = y[: 4 * d * d].reshape(2 * d, 2 * d)[d:, d:]
    return norm @ sig @ norm, -(norm @ y[4 * d * d :][d:])


def detector_oracle(model, lam, sigma0, t):
    """Van Loan: joint (v, y) with dy = (Lambda y + v_out) dt, evaluated by one augmented expm."""
    a, k, s, vb = model.A, model.K, model.sigma_in, model.vbar_in
    d = a.shape[0]
    kinv = np.diag(1 / np.diag(k))
    b = np.zeros((2 * d, 2 * d), complex)
    b[:d, :d] = a
    b[d:, :d] = k
    b[d:, d:] = np.diag(lam)
    dm = np.vstack([np.eye(d), -kinv])
    q = dm @ s @ dm.conj().T
    big = np.zeros((4 * d, 4 * d), complex)
    big[: 2 * d, : 2 * d] = -b
    big[: 2 * d, 2 * d :] = q
    big[2 * d :, 2 * d :] = b.conj().T
    e = sp_expm(big * t)
    phi = e[2 * d :, 2 * d :].conj().T
    noise = phi @ e[: 2 * d, 2 * d :]
    s0 = np.zeros((2 * d, 2 * d), complex)
    s0[:d, :d] = sigma0
    sig = phi @ s0 @ phi.conj().T + noise
    aug = np.zeros((2 * d + 1, 2 * d + 1), complex)
    aug[: 2 * d, : 2 * d] = b
    aug[: 2 * d, -1] = dm @ vb
    mean = sp_expm(aug * t)[: 2 * d, -1]
    nt = np.diag(np.sqrt(np.abs(2 * lam.real) / -np.expm1(2 * lam.real * t)))
    return nt @ sig[d:, d:] @ nt, nt @ mean[d:]


# -- pulse ---------------------------------------------------------------------


def test_matched_pulse_is_identity_up_to_phase():
    nu, kappa = 5.0, 0.8
    m = oscillator(nu, kappa)
    ch = pulse_channel(m, m.sigma_in, ModeProfile([1j * nu - kappa / 2]))
    assert np.linalg.norm(ch.M + np.eye(2)) < 1e-10
    assert np.linalg.norm(ch.N) < 1e-10
    for db in (6, 20):
        out = apply_channel(ch, squeezed_state(db))
        assert squeezing_db(out) == pytest.approx(db, abs=1e-9)
        assert purity(out) == pytest.approx(1, abs=1e-9)
    th = thermal_state(2.5)
    assert mean_occupation(apply_channel(ch, th), 0) == pytest.approx(2.5, abs=1e-9)


def test_broadband_pulse_reads_input_vacuum():
    kappa = 1.0
    m = oscillator(5.0, kappa)
    ch = pulse_channel(m, m.sigma_in, ModeProfile([-1e6 * kappa]))
    assert np.linalg.norm(ch.M, 2) <= 2e-3
    for s0 in (squeezed_state(10), thermal_state(3.0)):
        out = apply_channel(ch, s0)
        assert np.abs(out.sigma - np.eye(2)).max() <= 5e-3


def test_pulse_channel_matches_ode_oracle(rng):
    for _ in range(3):
        spec = random_stable_spec(rng, 2)
        m = build_drift(spec)
        prof = random_profile(rng, 2)
        s0 = random_initial_state(rng, 2)
        ch = pulse_channel(m, m.sigma_in, prof)
        t_end = 40 / min(np.abs(prof.lambdas.real).min(), m.stability_margin)
        sig, mean = pulse_oracle(m, prof.lambdas, s0.sigma, t_end)
        out = apply_channel(ch, s0)
        assert rel_err(out.sigma, sig) < 1e-7
        assert rel_err(ch.offset, mean) < 1e-7


# -- detector / stationary ---------------------------------------------------


def test_detector_channel_matches_van_loan(rng):
    for _ in range(10):
        n = rng.integers(1, 4)
        spec = random_stable_spec(rng, n)
        m = build_drift(spec)
        prof = random_profile(rng, n)
        s0 = random_initial_state(rng, n)
        t = rng.uniform(0.1, 4)
        ch = detector_channel(m, m.sigma_in, prof, t)
        sig, mean = detector_oracle(m, prof.lambdas, s0.sigma, t)
        assert rel_err(apply_channel(ch, s0).sigma, sig) < 1e-9
        assert rel_err(ch.offset, mean) < 1e-9
        np.testing.assert_allclose(ch.N, ch.N.conj().T, atol=1e-10 * np.linalg.norm(ch.N))


def test_detector_small_time_sees_only_input_vacuum():
    kappa = 1.0
    m = oscillator(5.0, kappa)
    ch = detector_channel(m, m.sigma_in, ModeProfile([-5 - 2j]), 1e-6 / kappa)
    out = apply_channel(ch, squeezed_state(20))
    assert np.abs(out.sigma - np.eye(2)).max() <= 1e-3


def test_stationary_vacuum_and_thermal_throughput(rng):
    for mu in (-0.3 + 1j, -4 - 1j, -1 + 0j):
        m = oscillator(2.0, 0.6)
        ch = stationary_spectrum(m, m.sigma_in, ModeProfile([mu]))
        np.testing.assert_allclose(ch.N, np.eye(2), atol=1e-10)
        assert np.all(ch.M == 0) and ch.kind == STATIONARY
        m = oscillator(2.0, 0.6, nbar=1.7)
        ch = stationary_spectrum(m, m.sigma_in, ModeProfile([mu]))
        np.testing.assert_allclose(ch.N, 4.4 * np.eye(2), atol=1e-9)


def test_detector_converges_to_stationary(rng):
    spec = random_stable_spec(rng, 2)
    m = build_drift(spec)
    prof = random_profile(rng, 2)
    st = stationary_spectrum(m, m.sigma_in, prof)
    t = 60 / min(np.abs(prof.lambdas.real).min(), m.stability_margin)
    det = detector_channel(m, m.sigma_in, prof, t)
    s0 = random_initial_state(rng, 2)
    assert rel_err(apply_channel(det, s0).sigma, apply_channel(st, s0).sigma) < 1e-9
    assert rel_err(det.offset, st.offset) < 1e-9
    assert detector_channel(m, m.sigma_in, prof, T_INF).kind == STATIONARY


def test_resonant_detector_rate_uses_augmented_form():
    nu, kappa = 5.0, 1.0
    m = oscillator(nu, kappa)
    res = m.spectral.eigenvalues
    mu = res[np.argmin(res.imag)]  # -i nu - kappa/2 exactly
    s0 = thermal_state(1.0)
    for eps in (0.0, 1e-8, 1e-6):
        prof = ModeProfile([mu * (1 + eps)])
        with warnings.catch_warnings(record=True) as rec:
            warnings.simplefilter("always")
            ch = detector_channel(m, m.sigma_in, prof, 2.0)
        assert ch.warnings and any("resonant" in str(w.message) for w in rec)
        sig, mean = detector_oracle(m, prof.lambdas, s0.sigma, 2.0)
        assert rel_err(apply_channel(ch, s0).sigma, sig) < 1e-12
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            st = stationary_spectrum(m, m.sigma_in, prof)
        np.testing.assert_allclose(st.N, np.eye(2), atol=1e-12)


def test_augmented_form_agrees_with_closed_form(rng):
    from gaussio import channels

    spec = random_stable_spec(rng, 2)
    m = build_drift(spec)
    prof = random_profile(rng, 2)
    s0 = random_initial_state(rng, 2)
    for t in (0.8, T_INF):
        closed = detector_channel(m, m.sigma_in, prof, t)
        st = channels._prepare(m, m.sigma_in, prof)
        z, n_, off = channels._augmented(st, m, t)
        assert rel_err(z @ s0.sigma @ z.conj().T + n_, apply_channel(closed, s0).sigma) < 1e-10
        assert rel_err(off, closed.offset) < 1e-10


# -- complete positivity -------------------------------------------------------


def test_complete_positivity_random_specs(rng):
    worst = math.inf
    for _ in range(100):
        n = int(rng.integers(1, 5))
        spec = random_stable_spec(rng, n)
        m = build_drift(spec)
        prof = random_profile(rng, n)
        chans = [
            pulse_channel(m, m.sigma_in, prof),
            detector_channel(m, m.sigma_in, prof, float(rng.uniform(0.05, 5))),
            stationary_spectrum(m, m.sigma_in, prof),
        ]
        s0 = random_initial_state(rng, n)
        for ch in chans:
            worst = min(worst, cp_min_eigenvalue(ch))
            assert apply_channel(ch, s0).physicality_min_eigenvalue() >= -1e-9
    assert worst >= -1e-9


def test_denominators_have_negative_real_part():
    with pytest.raises(InvariantError):
        ModeProfile([0.0 + 1j])
    with pytest.raises(InvariantError):
        ModeProfile([-1.0, 0.5])
    lam = ModeProfile([-1 + 2j, -0.1 - 3j]).lambdas
    assert np.all((lam[:, None] + lam[None, :].conj()).real < 0)


# -- guards --------------------------------------------------------------------


def test_lossless_accessible_mode_rejected():
    h = np.zeros((4, 4))
    h[0, 1] = h[1, 0] = 1.0
    h[2, 3] = h[3, 2] = 2.0
    spec = SystemSpec.thermal(h + 0.0, [1.0, 0.0], [0.0, 0.0])
    m = build_drift(spec)
    with pytest.raises((LosslessModeError, StabilityError)):
        pulse_channel(m, m.sigma_in, ModeProfile([-1, -1], accessible=[1]))


def test_lossy_submanifold_rows():
    h = np.zeros((4, 4))
    h[0, 1] = h[1, 0] = 1.0
    h[2, 3] = h[3, 2] = 1.5
    h[1, 2] = h[2, 1] = h[0, 3] = h[3, 0] = 0.3  # beam splitter keeps both modes damped
    spec = SystemSpec.thermal(h, [1.0, 0.0], [0.0, 0.0])
    m = build_drift(spec)
    assert m.stable
    ch = pulse_channel(m, m.sigma_in, ModeProfile([-1 + 1j, -1], accessible=[0]))
    assert ch.output_modes == (0,) and ch.M.shape == (2, 4)
    with pytest.raises(LosslessModeError, match="lossless accessible"):
        pulse_channel(m, m.sigma_in, ModeProfile([-1, -1], accessible=[1]))


def test_unstable_model_rejected():
    spec = SystemSpec(np.zeros((2, 2)), [0.0], np.zeros((2, 2)))
    m = build_drift(spec)
    with pytest.raises(StabilityError):
        detector_channel(m, m.sigma_in, ModeProfile([-1]), 1.0)


# -- application, bases, serialization ----------------------------------------


def test_apply_channel_trivial_examples():
    prof = ModeProfile([-1.0])
    ident = GaussianChannel(-np.eye(2), np.zeros((2, 2)), PULSE, prof, (0,))
    s = squeezed_state(12)
    np.testing.assert_allclose(apply_channel(ident, s).sigma, s.sigma)
    erase = GaussianChannel(np.zeros((2, 2)), np.eye(2), PULSE, prof, (0,))
    np.testing.assert_allclose(apply_channel(erase, s).sigma, np.eye(2))
    with pytest.raises(BasisError):
        apply_channel(ident, to_quadrature(s))


def test_quadrature_channel_agrees_with_ladder(rng):
    spec = random_stable_spec(rng, 2)
    m = build_drift(spec)
    ch = detector_channel(m, m.sigma_in, random_profile(rng, 2), 1.1)
    s0 = random_initial_state(rng, 2)
    q = apply_channel(ch.to_basis("quadrature"), to_quadrature(s0))
    np.testing.assert_allclose(q.sigma, to_quadrature(apply_channel(ch, s0)).sigma, atol=1e-10)
    np.testing.assert_allclose(q.sigma.imag, 0, atol=1e-10)


def test_channel_round_trip(rng):
    spec = random_stable_spec(rng, 2)
    m = build_drift(spec)
    ch = detector_channel(m, m.sigma_in, random_profile(rng, 2), 0.7)
    back = GaussianChannel.from_dict(ch.to_dict())
    np.testing.assert_array_equal(back.M, ch.M)
    np.testing.assert_array_equal(back.N, ch.N)
    assert back.kind == DETECTOR and back.t == 0.7 and back.spec_digest == spec.digest()
    st = stationary_spectrum(m, m.sigma_in, ch.profile)
    assert GaussianChannel.from_dict(st.to_dict()).t == math.inf


def test_restrict_examples():
    assert np.allclose(restrict(vacuum_state(3), [1]).sigma, np.eye(2))
    tms = two_mode_squeezed_state(0.6)
    assert purity(restrict(tms, [0])) < 1
    s = thermal_state([0.1, 0.2, 0.3])
    np.testing.assert_array_equal(restrict(s, [0, 1, 2]).sigma, s.sigma)
    with pytest.raises(ValueError):
        restrict(s, [])
