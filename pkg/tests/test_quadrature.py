import math

import numpy as np
import pytest
import scipy.special as sc
from hypothesis import given, strategies as st

from afscale import quadrature
from afscale.errors import QuadratureError


@given(st.floats(-0.95, 3.0), st.floats(-0.95, 3.0))
def test_jacobi_weights_sum_to_beta_function(p, q):
    x, w = quadrature.gauss_jacobi(30, p, q)
    assert np.all((x > 0) & (x < 1))
    assert w.sum() == pytest.approx(sc.beta(p + 1, q + 1), rel=1e-12)


def test_jacobi_integral_polynomial_exact():
    # int_0^1 x^-0.7 (1-x)^1.2 x^3 dx
    val = quadrature.jacobi_integral(lambda x: x ** 3, -0.7, 1.2, n=10)
    assert val == pytest.approx(sc.beta(3.3, 2.2), rel=1e-13)


def test_jacobi_integral_shifted_interval():
    val = quadrature.jacobi_integral(np.cos, -0.5, 0.0, 1.0, 3.0, n=20)
    ref = 0.0
    # oracle: substitution x = 1 + t^2 removes the singularity
    t, w = quadrature.gauss_legendre(200, 0.0, math.sqrt(2.0))
    ref = float(np.dot(w, 2.0 * np.cos(1.0 + t * t)))
    assert val == pytest.approx(ref, rel=1e-12)


def test_jacobi_integral_flags_disagreement():
    with pytest.raises(QuadratureError):
        quadrature.jacobi_integral(lambda x: np.abs(x - 0.3) ** 0.5, 0.0, 0.0, n=4, rtol=1e-12)


def test_gauss_legendre_and_adaptive():
    x, w = quadrature.gauss_legendre(12, -1.0, 2.0)
    assert float(np.dot(w, x ** 5)) == pytest.approx((2 ** 6 - 1) / 6, rel=1e-13)
    val = quadrature.adaptive_integral(lambda x: np.sqrt(x) * np.exp(-x), 0.0, 30.0, rtol=1e-11)
    assert val == pytest.approx(sc.gamma(1.5) * sc.gammainc(1.5, 30.0), rel=1e-9)
