import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from radres.errors import ConfigurationError, DomainError
from radres.potential import (BarrierWell, HolderOscillatory, LogDecay, MollifierBump,
                              PowerDecay, Sampled, decreasing_majorant, envelope_check, evaluate,
                              holder_scan, holder_seminorm, mollify, mollify_error_report)


def test_power_decay_value():
    assert evaluate(PowerDecay(C=1, delta=2), 1.0) == 0.25


def test_negative_radius_rejected():
    with pytest.raises(DomainError):
        PowerDecay()(-0.1)
    with pytest.raises(DomainError):
        PowerDecay()(np.array([0.0, -1.0]))


@pytest.mark.parametrize("V", [PowerDecay(C=-2, delta=3), LogDecay(C=1, rho=2),
                               HolderOscillatory(alpha=0.5, beta=3), BarrierWell(depth=3.0)])
def test_value_at_origin_bounded(V):
    assert abs(V(0.0)) <= V.sup_norm * (1 + 1e-14)


def test_weierstrass_direct_sum():
    V = HolderOscillatory(alpha=0.5, beta=3, terms=12)
    r = 2.0
    ref = math.fsum(2.0 ** (-0.5 * k) * math.cos(2.0 ** k * r) for k in range(13)) * 3.0 ** -3
    assert abs(V(r) - ref) <= 1e-14


def test_invalid_parameters():
    with pytest.raises(DomainError):
        PowerDecay(delta=1.0)
    with pytest.raises(DomainError):
        LogDecay(rho=1.0)
    with pytest.raises(DomainError):
        HolderOscillatory(alpha=1.0)
    with pytest.raises(ConfigurationError):
        BarrierWell(r_in=2, r_out=1)


@pytest.mark.parametrize("V", [PowerDecay(C=1.5, delta=2.5), LogDecay(C=0.7, rho=3)])
def test_closed_form_derivatives(V):
    r = np.linspace(0.1, 10.0, 41)
    e = 1e-6
    fd = (V(r + e) - V(r - e)) / (2 * e)
    assert np.allclose(V.derivative(r), fd, rtol=1e-6, atol=1e-10)


def test_l1_norms_match_quadrature():
    assert PowerDecay(C=1, delta=2).l1_norm() == 1.0
    assert PowerDecay(C=-2, delta=3).l1_norm() == 1.0
    assert BarrierWell(height=2, depth=1).l1_norm() == 3.0
    ref, _ = integrate.quad(PowerDecay(C=1, delta=3), 0, np.inf)
    assert ref == pytest.approx(0.5, rel=1e-10)


def test_log_decay_l1_tail_substitution():
    V = LogDecay(C=1, rho=2)
    head, _ = integrate.quad(V, 0, 1e3, limit=1000)
    # int_{1e3}^inf (r+1)^{-1} log(r+2)^{-2} dr ~ 1 / log(1002)
    assert V.l1_norm() == pytest.approx(head + 1.0 / math.log(1002.0), rel=1e-3)


def test_envelope_equality_families():
    grid = np.arange(0.0, 100.0001, 0.1)
    rep = envelope_check(PowerDecay(C=1, delta=3), grid)
    assert rep.passed and rep.max_ratio == pytest.approx(1.0, abs=1e-14)
    assert envelope_check(LogDecay(C=1, rho=2), grid).passed


def test_envelope_compact_support():
    V = BarrierWell(height=2.0, r_in=1.0, r_out=2.0)
    grid = np.arange(0.0, 100.0001, 0.1)
    C = V.sup_norm * (1 + V.r_out) ** 10
    assert envelope_check(V, grid, delta=10, C=C).passed


def test_envelope_errors():
    with pytest.raises(ConfigurationError):
        envelope_check(PowerDecay(), [])
    with pytest.raises(ConfigurationError):
        envelope_check(PowerDecay(), [1.0, 0.5])
    with pytest.raises(ConfigurationError):
        envelope_check(BarrierWell(), [0.0, 1.0])


def test_envelope_detects_violation():
    rep = envelope_check(PowerDecay(C=1, delta=2), np.linspace(0, 50, 501), delta=3, C=1)
    assert not rep.passed and rep.worst_r == 50.0


def test_holder_constant_is_zero(func):
    V = func(lambda r: np.full_like(r, 5.0), sup=5.0)
    assert holder_seminorm(V, 0.5, 2.0, np.linspace(0, 10, 101)) == 0.0


def test_holder_lipschitz_scan(func):
    V = func(lambda r: np.exp(-r))
    grid = np.linspace(0, 20, 2001)
    est = holder_seminorm(V, 0.5, 0.0, grid)
    assert 0 < est <= 1.0 * 0.5 ** 0.5 + 1e-12


def test_holder_nonmembership_signal():
    V = HolderOscillatory(alpha=0.5, beta=3, terms=12)
    grid = np.linspace(0, 10, 4001)
    offs = 2.0 ** -np.arange(1, 11)
    ok = holder_scan(V, 0.5, 3, grid, offs)
    bad = holder_scan(V, 0.9, 3, grid, offs)
    assert np.all(np.isfinite(ok))
    # the 0.9 quotient grows as offsets shrink; the 0.5 one stays level
    assert bad[-1] > 2 * bad.min()
    assert ok[-1] <= ok[0]


def test_holder_argument_checks(func):
    V = func(np.exp)
    with pytest.raises(DomainError):
        holder_scan(V, 0.0, 1, [0.0])
    with pytest.raises(DomainError):
        holder_scan(V, 0.5, 1, [0.0], offsets=[2.0])


def test_bump_normalization():
    b = MollifierBump()
    assert b.mass == pytest.approx(1.0, abs=1e-13)
    assert abs(b.derivative_mass) < 1e-12
    assert b.first_moment == pytest.approx(0.5, abs=1e-13)


def test_bump_derivative_matches_fd():
    b = MollifierBump()
    s = np.linspace(0.05, 0.95, 19)
    e = 1e-6
    assert np.allclose(b.density_derivative(s), (b.density(s + e) - b.density(s - e)) / (2 * e),
                       rtol=1e-6, atol=1e-8)


def test_mollify_constant_and_affine(func):
    five = func(lambda r: np.full_like(r, 5.0), sup=5.0)
    r = np.linspace(0, 5, 11)
    for theta in (1.0, 0.3, 0.01):
        assert np.allclose(mollify(five, theta)(r), 5.0, atol=1e-12)
        assert np.allclose(mollify(five, theta).derivative(r), 0.0, atol=1e-10)
    lin = func(lambda r: r, sup=np.inf)
    m1 = MollifierBump().first_moment
    for theta in (0.5, 0.1):
        assert np.allclose(mollify(lin, theta)(r), r + theta * m1, atol=1e-10)
        assert np.allclose(mollify(lin, theta).derivative(r), 1.0, atol=1e-10)


def test_mollify_quadrature_oracle(func):
    V = func(lambda r: np.exp(-r))
    b = MollifierBump()
    theta, r = 0.1, 0.5
    ref, _ = integrate.quad(lambda s: b.density(s) * math.exp(-(r + theta * s)), 0, 1,
                            epsabs=1e-14, epsrel=1e-13)
    assert mollify(V, theta)(r) == pytest.approx(ref, abs=1e-12)


def test_mollified_derivative_matches_fd():
    V = HolderOscillatory(alpha=0.5, beta=2.5, terms=4)
    Vt = mollify(V, 0.05, MollifierBump.resolving(V, 0.05))
    r = np.linspace(0.2, 4, 12)
    e = 1e-5
    assert np.allclose(Vt.derivative(r), (Vt(r + e) - Vt(r - e)) / (2 * e), rtol=1e-6, atol=1e-8)


def test_mollify_rejects_bad_theta():
    with pytest.raises(DomainError):
        mollify(PowerDecay(), 0.0)
    with pytest.raises(DomainError):
        mollify(PowerDecay(), 1.5)


def test_mollified_forwards_metadata():
    Vt = mollify(HolderOscillatory(alpha=0.3, beta=2.5), 0.1)
    assert (Vt.alpha, Vt.beta, Vt.kind) == (0.3, 2.5, "Mollified")
    assert Vt.max_frequency == 2.0 ** 12


def test_error_report_constant_is_zero(func):
    five = func(lambda r: np.full_like(r, 5.0), sup=5.0)
    rep = mollify_error_report(five, mollify(five, 0.1), 0.5, 3, 0.1, np.linspace(0, 10, 101))
    assert rep.c_err < 1e-12 and rep.c_deriv < 1e-10


def test_error_report_theta_mismatch():
    V = PowerDecay()
    with pytest.raises(ConfigurationError):
        mollify_error_report(V, mollify(V, 0.1), 0.5, 2, 0.2, [0.0, 1.0])


def test_error_report_two_theta_stable():
    V = HolderOscillatory(alpha=0.5, beta=3)
    grid = np.linspace(0, 20, 4001)
    c = [mollify_error_report(V, mollify(V, t, MollifierBump.resolving(V, t)), 0.5, 3, t, grid).c_err
         for t in (0.1, 0.05)]
    assert 0.25 <= c[1] / c[0] <= 4


def test_error_report_lipschitz_trend(func):
    V = func(lambda r: np.exp(-r), lambda r: -np.exp(-r))
    grid = np.linspace(0, 10, 2001)
    c = [mollify_error_report(V, mollify(V, t), 1.0, 0.0, t, grid).c_err for t in (0.2, 0.1, 0.05)]
    assert max(c) / min(c) < 1.5


def test_sampled_interpolation(tmp_path):
    p = tmp_path / "v.txt"
    np.savetxt(p, np.column_stack([[0, 1, 2], [1.0, 3.0, 2.0]]))
    V = Sampled.from_file(p, delta=2.0)
    assert V(0.5) == 2.0 and V(5.0) == 0.0 and V.sup_norm == 3.0 and V.delta == 2.0
    with pytest.raises(ConfigurationError):
        Sampled([0, 0], [1, 1])


def test_sum_potential():
    V = PowerDecay(C=1, delta=2) + BarrierWell(height=1)
    assert V(1.5) == pytest.approx(2.5 ** -2 + 1)
    assert V.sup_norm == 2.0 and not V.differentiable


def test_decreasing_majorant():
    V = BarrierWell(height=2.0, r_in=1.0, r_out=2.0)
    r = np.linspace(0, 4, 41)
    p = decreasing_majorant(V, r)
    assert np.all(np.diff(p) <= 0) and np.all(p >= np.maximum(V(r), 0))


@given(st.floats(0.0, 1e3), st.floats(1.01, 6.0))
def test_power_decay_envelope_property(r, delta):
    V = PowerDecay(C=1.0, delta=delta)
    assert abs(V(r)) * (1 + r) ** delta == pytest.approx(1.0, rel=1e-12)


@given(st.floats(0.01, 1.0), st.floats(0.0, 50.0))
def test_mollify_preserves_constants_property(theta, r):
    V = BarrierWell(height=3.0, r_in=0.0, r_out=1e9)
    assert mollify(V, theta)(r) == pytest.approx(3.0, abs=1e-12)
