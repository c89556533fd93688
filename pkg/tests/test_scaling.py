import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclab.errors import DomainError
from fraclab.scaling import (FracParams, Regime, lambda_continuous, lambda_minus, lambda_plus, regime,
                             scaled_coefficients)
from oracles import lambda_mp


def test_lambda_plus_reference_value():
    # (1 - 1.2) / (0.1^0.2 - 1)
    assert lambda_plus(FracParams(0.6, 0.1)) == pytest.approx(lambda_mp(0.6, 0.1), rel=1e-14)
    assert lambda_plus(FracParams(0.6, 0.1)) == pytest.approx(0.5419427727623911, rel=1e-14)


def test_lambda_minus_reference_value():
    # exponent (1 - 2s)/(2s) = 0.25 at s = 0.4
    assert lambda_minus(FracParams(0.4, 0.1)) == pytest.approx(lambda_mp(0.4, 0.1), rel=1e-14)
    assert lambda_minus(FracParams(0.4, 0.1)) == pytest.approx(0.2 / (1 - 0.1**0.25), rel=1e-14)


def test_half_is_inverse_log():
    assert lambda_continuous(FracParams(0.5, 0.1)) == pytest.approx(1 / math.log(10), rel=1e-15)
    assert lambda_continuous(FracParams(0.5, math.exp(-10))) == pytest.approx(0.1, rel=1e-15)


@pytest.mark.parametrize("eps", [0.1, 1e-3, 1e-8])
def test_both_branches_approach_half(eps):
    mid = 1 / abs(math.log(eps))
    for d in (1e-6, 1e-9, 1e-11):
        assert lambda_plus(FracParams(0.5 + d, eps)) == pytest.approx(mid, rel=10 * d * abs(math.log(eps)))
        assert lambda_minus(FracParams(0.5 - d, eps)) == pytest.approx(mid, rel=10 * d * abs(math.log(eps)))


def test_branch_domains():
    with pytest.raises(DomainError):
        lambda_plus(FracParams(0.5, 0.1))
    with pytest.raises(DomainError):
        lambda_minus(FracParams(0.6, 0.1))
    with pytest.raises(DomainError):
        FracParams(1.0, 0.1)
    with pytest.raises(DomainError):
        FracParams(0.5, 1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(1e-12, 0.5))
def test_matches_high_precision(s, eps):
    p = FracParams(s, eps)
    if p.is_half:
        return
    assert lambda_continuous(p) == pytest.approx(lambda_mp(s, eps), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(1e-12, 0.5))
def test_coefficient_identity(s, eps):
    p = FracParams(s, eps)
    cp, cs = scaled_coefficients(p)
    lam = lambda_continuous(p)
    assert cp == pytest.approx(lam / eps, rel=1e-14)
    assert cs == pytest.approx(lam * eps ** max(2 * s - 1, 0.0), rel=1e-12)


def test_coefficients_reference():
    cp, cs = scaled_coefficients(FracParams(0.6, 0.1))
    assert cp == pytest.approx(5.419427727623911, rel=1e-14)
    assert cs == pytest.approx(0.5419427727623911 * 0.1**0.2, rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-6, 20), st.floats(1.0, 30.0), st.floats(1.0, 30.0))
def test_lambda_log_eps_depends_only_on_x(x, L1, L2):
    vals = []
    for L in (L1, L2):
        s = 0.5 + x / (2 * L)
        if not s < 1.0:
            return
        vals.append(lambda_continuous(FracParams(s, math.exp(-L))) * L)
    assert vals[0] == pytest.approx(vals[1], rel=1e-10)
    assert vals[0] == pytest.approx(x / -math.expm1(-x), rel=1e-10)


def test_regime_examples():
    assert regime(FracParams(0.5, 1e-3)).classification is Regime.SUB_LOGARITHMIC
    eps = 1e-3
    rep = regime(FracParams(0.5 + 1 / (2 * abs(math.log(eps))), eps))
    assert rep.value == pytest.approx(1.0, rel=1e-12)
    assert rep.classification is Regime.ORDER1
    assert regime(FracParams(0.9, 1e-12)).classification is Regime.SUPER_LOGARITHMIC
    assert regime(FracParams(0.1, 1e-12)).value < -10


def test_regime_sign_symmetry():
    eps = 1e-4
    a = regime(FracParams(0.5 + 0.05, eps))
    b = regime(FracParams(0.5 - 0.05, eps))
    assert a.value == pytest.approx(-b.value, rel=1e-12)
    assert a.classification is b.classification


def test_regime_thresholds_validated():
    with pytest.raises(DomainError):
        regime(FracParams(0.6, 0.1), (1.0, 0.5))


def test_sweep_is_continuous_across_half():
    eps = 1e-4
    s = np.linspace(0.45, 0.55, 101)
    lam = np.array([lambda_continuous(FracParams(v, eps)) for v in s])
    assert np.max(np.abs(np.diff(lam))) < 2e-3


@pytest.mark.parametrize("eps", [1e-2, 1e-4, 1e-6])
def test_deviation_from_inverse_log_follows_series(eps):
    L = -math.log(eps)
    for k in range(4, 9):
        for sign in (1, -1):
            s = 0.5 + sign * 10.0**-k
            lam_L = lambda_continuous(FracParams(s, eps)) * L
            if sign > 0:
                x = (2 * s - 1) * L
                expected = 1 + x / 2 + x * x / 12
            else:
                y = (1 - 2 * s) * L / (2 * s)
                expected = 2 * s * (1 + y / 2 + y * y / 12)
            assert abs(lam_L - expected) <= 1e-9 + abs(2 * s - 1) ** 3 * L**3


@pytest.mark.parametrize("s", [0.55, 0.7, 0.95])
def test_super_half_coefficients_asymptotics(s):
    rows = [scaled_coefficients(FracParams(s, 10.0**-k)) for k in range(1, 13)]
    pot, semi = np.array(rows).T
    assert np.all(np.diff(pot) > 0)
    assert semi[-1] < semi[0] and semi[-1] < 0.1
    # monotone decay once past the transient
    assert np.all(np.diff(semi[6:]) < 0)


def test_lambda_minus_limits():
    # fixed s < 1/2: the quotient tends to 1 - 2s
    vals = [lambda_minus(FracParams(0.3, 10.0**-k)) for k in range(1, 30, 4)]
    assert np.all(np.diff(vals) <= 0) and vals[-1] == pytest.approx(0.4, rel=1e-12)
    # s_eps -> 1/2 from below: lambda_- -> 0 and lambda_-/eps -> inf
    rows = []
    for k in range(2, 40, 4):
        eps = 10.0**-k
        p = FracParams(0.5 - 1 / math.log(eps) ** 2, eps)
        rows.append((lambda_minus(p), lambda_minus(p) / eps))
    lam, ratio = np.array(rows).T
    assert np.all(np.diff(lam) < 0) and lam[-1] < 0.02
    assert np.all(np.diff(ratio) > 0)


def test_half_coefficients():
    cp, cs = scaled_coefficients(FracParams(0.5, 1e-3))
    L = math.log(1e3)
    assert cp == pytest.approx(1 / (1e-3 * L), rel=1e-15)
    assert cs == pytest.approx(1 / L, rel=1e-15)


def test_regime_large_exponent():
    rep = regime(FracParams(0.6, math.exp(-100)))
    assert rep.value == pytest.approx(20.0, rel=1e-12)
    assert rep.classification is Regime.SUPER_LOGARITHMIC
