"""Acceptance criteria 1-9.

Each test carries ``@pytest.mark.criterion(n)``; the terminal summary prints
one PASS/FAIL line per criterion. Run on its own with
``pytest tests/test_acceptance.py -v``.
"""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize

from istms.analytic import (
    DriveConfig,
    gamma_ext,
    gamma_istms,
    integrated_noise,
    integrated_signal,
    signal_mean,
    snr,
    snr_ext,
    snr_int,
)
from istms.lindblad import (
    HilbertConfig,
    cavity_model,
    jc_model,
    jc_vs_dispersive_error,
    photon_numbers,
    smallest_converged_n_max,
    steady_state,
    validate_density_matrix,
)
from istms.params import SystemParams, n_sqz
from istms.spectra import (
    dos_right,
    heating_rate,
    mixing_coefficients,
    purcell_left_rate,
    squeezing_spectrum,
    spectrum_db,
)
from istms import sweeps

TS = "2000-01-01T00:00:00+00:00"
D10 = DriveConfig(nbar0=10.0)
crit = pytest.mark.criterion


# ---------------------------------------------------------------- 1

@crit(1)
@pytest.mark.parametrize("chi", [0.1, 0.05, 0.01])
def test_c1_threshold_rate(chi):
    p = SystemParams(chi=chi, lam=0.5 - chi)
    assert gamma_istms(p, D10) == pytest.approx(4 * 10.0, rel=1e-12)


# ---------------------------------------------------------------- 2

@crit(2)
@pytest.mark.parametrize("chi", [0.05, 0.1, 0.25])
@pytest.mark.parametrize("lam", [0.0, 0.05, 0.1])
def test_c2_longtime_consistency(chi, lam):
    p = SystemParams(chi=chi, lam=lam)
    tau = 1000.0
    assert snr(tau, p, D10).snr ** 2 / tau == pytest.approx(gamma_istms(p, D10), rel=0.01)


# ---------------------------------------------------------------- 3

@crit(3)
def test_c3_spectrum_values():
    p = SystemParams(chi=1e-9, lam=0.25)
    assert squeezing_spectrum(0.0, p) == pytest.approx(1 / 18, abs=1e-10)
    assert spectrum_db(0.0, p) == pytest.approx(10 * math.log10(1 / 9), abs=1e-10)
    assert round(float(spectrum_db(0.0, p)), 2) == -9.54


@crit(3)
def test_c3_two_minima():
    p = SystemParams(chi=1.0, lam=0.25)
    res = sweeps.fig2_spectrum([1.0], timestamp=TS)
    w, s = res.column("omega"), res.column("s_out")
    step = w[1] - w[0]
    inner = (s[1:-1] < s[:-2]) & (s[1:-1] < s[2:])
    found = np.sort(w[1:-1][inner])
    assert len(found) == 2
    exact = optimize.minimize_scalar(lambda x: squeezing_spectrum(x, p), bounds=(0.2, 3.0),
                                     method="bounded", options={"xatol": 1e-12}).x
    assert np.allclose(found, [-exact, exact], atol=step)
    assert np.allclose(np.abs(found), 1.0, atol=0.1)


@crit(3)
@pytest.mark.parametrize("chi", [0.001, 0.1, 0.5, 1.0, 2.0])
@pytest.mark.parametrize("lam", [1e-3, 0.1, 0.25, 0.45, 0.4999])
def test_c3_squeezed_everywhere(chi, lam):
    s = squeezing_spectrum(np.linspace(-10, 10, 2001), SystemParams(chi=chi, lam=lam))
    assert np.all(s < 0.5)


# ---------------------------------------------------------------- 4

@pytest.fixture(scope="module")
def fig3():
    return sweeps.fig3_tau_star(chi=0.01, timestamp=TS)


@crit(4)
def test_c4_fig3_reduction(fig3):
    table = sweeps.fig3_ratio_table(fig3)
    ratios = np.array([r for _, r in table])
    print("\n".join(f"nbar={n:9.3f} ratio={r:.4f}" for n, r in table))
    # the ratio peaks at intermediate nbar and then declines slowly
    assert 4.0 <= ratios.max() <= 5.5
    nbar_peak = table[int(np.argmax(ratios))][0]
    assert nbar_peak <= 250.0


@crit(4)
def test_c4_invalid_rows(fig3):
    nsq = fig3.column("nbar_sqz")[0]
    for nbar, status in zip(fig3.column("nbar"), fig3.column("status")):
        assert status == ("invalid" if nbar < nsq + 1 else "ok")


# ---------------------------------------------------------------- 5

@pytest.fixture(scope="module")
def fig6():
    # default truncation (20 per mode) and 8 points in (0, 1] of kappa/2 - chi
    return sweeps.fig6_jc(timestamp=TS, workers=1)


@pytest.mark.slow
@crit(5)
def test_c5_full_error_bound(fig6):
    print(fig6.to_csv())
    assert all(s == "ok" for s in fig6.column("status"))
    assert fig6.column("lam")[-1] == pytest.approx(0.45)
    assert np.all(fig6.column("full_error") <= 0.015)


@pytest.mark.slow
@crit(5)
def test_c5_qubit_error_tracks_full_error(fig6):
    frac = fig6.column("lambda_fraction")
    diff = np.abs(fig6.column("qubit_error") - fig6.column("full_error"))[frac >= 0.5]
    assert np.all(diff <= 0.005)


@pytest.mark.slow
@crit(5)
def test_c5_error_grows_with_lambda(fig6):
    err = fig6.column("full_error")
    assert np.all(np.diff(err) > 0)


@pytest.mark.slow
@crit(5)
def test_c5_truncation_convergence(fig6):
    # n_max -> n_max + 2 at the top of the sweep must move every quantity by < 0.1 %
    row = dict(zip(fig6.columns, fig6.rows[-1]))
    h = HilbertConfig.square(HilbertConfig().n_max_even + 2)
    c = jc_vs_dispersive_error(sweeps.fig6_default_params().replace(lam=row["lam"]), h)
    pairs = {"n_even": (row["n_even"], c.n_even), "n_odd": (row["n_odd"], c.n_odd),
             "full_error": (row["full_error"], c.full_error),
             "qubit_error": (row["qubit_error"], c.qubit_error)}
    rel = {k: abs(a - b) / max(abs(a), abs(b)) for k, (a, b) in pairs.items()}
    print(json.dumps(rel, indent=1))
    assert all(v < 1e-3 for v in rel.values()), rel


# ---------------------------------------------------------------- 6

LAMS = [0.1, 0.25, 0.4, 0.45]


@pytest.fixture(scope="module")
def cavity_states():
    out = {}
    for lam in LAMS:
        p = SystemParams(J=10.0, lam=lam)
        n = smallest_converged_n_max(p)
        h = HilbertConfig.square(n, qubit=False)
        res = steady_state(cavity_model(p, h))
        validate_density_matrix(res.rho)
        out[lam] = (n, *photon_numbers(res.rho, h))
    return out


@pytest.mark.slow
@crit(6)
@pytest.mark.parametrize("lam", LAMS)
def test_c6_each_mode_matches_n_sqz(cavity_states, lam):
    # literal reading: each normal mode carries n_sqz photons
    n, ne, no = cavity_states[lam]
    target = n_sqz(SystemParams(J=10.0, lam=lam))
    assert ne == pytest.approx(no, rel=1e-9)
    assert ne == pytest.approx(target, rel=0.01)


@pytest.mark.slow
@crit(6)
@pytest.mark.parametrize("lam", LAMS)
def test_c6_total_matches_n_sqz(cavity_states, lam):
    n, ne, no = cavity_states[lam]
    target = n_sqz(SystemParams(J=10.0, lam=lam))
    assert ne == pytest.approx(no, rel=1e-9)
    assert ne + no == pytest.approx(target, rel=0.01)


# ---------------------------------------------------------------- 7

@crit(7)
def test_c7_purcell_suite():
    grid = [SystemParams(g=g, J=J, lam=lam, kappa_left_int=kl)
            for g in (0.1, 1.0, 2.0) for J in (5.0, 10.0, 40.0)
            for lam in (0.0, 0.2, 0.45, 0.4999) for kl in (0.0, 0.01)]
    for p in grid:
        assert dos_right(0.0, p) == 0.0
        assert abs(mixing_coefficients(p).sigma_minus_right) < 1e-12
        assert heating_rate(p) == pytest.approx(p.kappa * (p.g * p.lam / p.J**2) ** 2, rel=1e-12, abs=0)
        assert purcell_left_rate(p) == pytest.approx(p.kappa_left_int * (p.g / p.J) ** 2, rel=1e-12, abs=0)
        assert heating_rate(p) / ((p.g / p.J) ** 2 * p.kappa) < (p.kappa / (2 * p.J)) ** 2


# ---------------------------------------------------------------- 8

@crit(8)
@pytest.mark.parametrize("chi", [0.1, 0.05, 0.01])
@pytest.mark.parametrize("frac", [0.0, 0.5, 0.9, 0.999])
def test_c8_external_loss_threshold(chi, frac):
    eta = frac * 2 * chi**2
    rate = gamma_ext(SystemParams(chi=chi, lam=0.5 - chi), D10, eta)
    assert 40.0 / 2 < rate <= 40.0 * (1 + 1e-12)


@crit(8)
def test_c8_zero_loss_bit_identical():
    tau = np.logspace(-3, 4, 200)
    for chi, lam in [(0.05, 0.45), (0.3, 0.1), (1.0, 0.0)]:
        p = SystemParams(chi=chi, lam=lam)
        ref = snr(tau, p, D10)
        for r in (snr_ext(tau, p, D10, 0.0), snr_int(tau, p, D10, 0.0)):
            assert np.array_equal(r.snr, ref.snr)
            assert np.array_equal(r.signal, ref.signal) and np.array_equal(r.noise, ref.noise)


# ---------------------------------------------------------------- 9

@crit(9)
@settings(max_examples=40, deadline=None)
@given(st.floats(1e-4, 2.0), st.floats(0.0, 0.49), st.floats(0.01, 200.0))
def test_c9_signal_quadrature(chi, lam, tau):
    p = SystemParams(chi=chi, lam=lam)
    val, _ = integrate.quad(lambda t: 2 * signal_mean(t, p, D10), 0, tau, epsabs=0, epsrel=1e-12, limit=500)
    assert integrated_signal(tau, p, D10) == pytest.approx(val, rel=1e-6)


@crit(9)
@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(1e-3, 0.499), st.floats(100.0, 1e5))
def test_c9_noise_below_vacuum(chi, lam, tau):
    assert integrated_noise(tau, SystemParams(chi=chi, lam=lam)) < tau / 2


@crit(9)
@pytest.mark.parametrize("lam, method", [(0.0, "direct"), (0.0, "krylov"), (0.2, "direct"), (0.2, "krylov"),
                                         (0.2, "jump-chain"), (0.45, "direct"), (0.45, "krylov"),
                                         (0.45, "jump-chain")])
def test_c9_density_matrix_invariants(lam, method):
    p = SystemParams(J=10.0, g=1.0, lam=lam)
    h = HilbertConfig.square(4)
    res = steady_state(jc_model(p, h), method=method)
    rho = validate_density_matrix(res.rho)
    assert abs(np.trace(rho) - 1) < 1e-9
    assert np.max(np.abs(rho - rho.conj().T)) < 1e-9
    assert np.linalg.eigvalsh(rho)[0] >= -1e-8
    assert res.residual < 1e-8


@pytest.mark.slow
@crit(9)
def test_c9_fig6_outputs_are_states(fig6):
    assert np.all(fig6.column("residual") < 1e-8)
    assert np.all((fig6.column("p_excited") >= 0) & (fig6.column("p_excited") <= 1))


@crit(9)
@pytest.mark.parametrize("make", [
    lambda: sweeps.fig2_spectrum(timestamp=TS),
    lambda: sweeps.fig3_tau_star(nbar_grid=[10.0, 50.0, 200.0], timestamp=TS),
    lambda: sweeps.fig4_dos(timestamp=TS),
    lambda: sweeps.fig5_loss(timestamp=TS),
    lambda: sweeps.fig6_jc([0.5, 1.0], hilbert=HilbertConfig.square(5), timestamp=TS),
])
def test_c9_byte_identical_reruns(make):
    first = make()
    again = sweeps.rerun(json.loads(first.to_csv().split("\n", 1)[0][len("# manifest: "):]))
    assert again.to_csv() == first.to_csv()
