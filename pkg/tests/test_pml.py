import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from layered_nmm.pml import StretchProfile


def test_physical_interval_is_unstretched():
    p = StretchProfile(5.0, 0.05, 70.0, 0)
    t = np.linspace(-2.5, 2.5, 11)
    assert np.array_equal(p.stretch(t), t.astype(complex))
    assert np.all(p.alpha_at(t) == 1)


def test_constant_profile_one_sided_limits():
    p = StretchProfile(5.0, 0.05, 70.0, 0)
    assert p.sigma_at(2.5) == 0.0
    assert p.sigma_at(2.5, inside_pml=True) == 70.0
    assert p.alpha_at(2.52) == 1 + 70j


@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_stretch_matches_quadrature(m):
    p = StretchProfile(4.0, 1.0, 12.0, m)
    for t in (2.3, 2.9, -2.7, 3.0):
        integral, _ = quad(lambda s: p.sigma_at(s), 0, abs(t), points=[2.0])
        assert p.stretch(t) == pytest.approx(t + 1j * np.sign(t) * integral, abs=1e-12)
    assert p.total_absorption() == pytest.approx(12.0 / (m + 1))


def test_outside_box_raises():
    p = StretchProfile(5.0, 0.05, 70.0)
    with pytest.raises(ValueError):
        p.stretch(2.6)


@pytest.mark.parametrize("kwargs", [dict(L=0, d=1, sigma=1), dict(L=1, d=1, sigma=-1),
                                    dict(L=1, d=1, sigma=1, m=1.5)])
def test_invalid_profiles(kwargs):
    with pytest.raises(ValueError):
        StretchProfile(**kwargs)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.integers(0, 4))
def test_stretch_is_odd_with_growing_imaginary_part(a, b, m):
    p = StretchProfile(2.0, 1.0, 5.0, m)
    lo, hi = sorted((1.0 + a, 1.0 + b))
    assert p.stretch(hi).imag >= p.stretch(lo).imag - 1e-15
    assert p.stretch(-hi) == pytest.approx(-p.stretch(hi))
