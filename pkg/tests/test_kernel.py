import math

import numpy as np
import pytest

from tddm.kernel import (
    BurgersSpec,
    build_kernel,
    build_kernel_general_burgers,
    general_burgers_coefficients,
    real_space_kernel_nu0,
    sample_real_space,
    stress_multiplier,
)
from tddm.spectral import make_grid

GRID = make_grid(16, np.pi)  # integer wavenumbers


def at(kernel, k1, k2):
    g = kernel.grid
    i = int(np.nonzero(g.k1 == k1)[0][0])
    j = int(np.nonzero(g.k2 == k2)[0][0])
    return kernel.multiplier[i, j]


def test_zero_mode_is_one():
    assert at(build_kernel(GRID, 1 / 3, 0.16), 0, 0) == 1.0


def test_hand_values():
    k = build_kernel(GRID, 1 / 3, 0.16)
    assert at(k, 1, 0) == pytest.approx(math.exp(-0.12), abs=1e-12)  # 0.88692
    assert at(k, 0, 1) == pytest.approx(math.exp(-0.08), abs=1e-12)  # 0.92312
    assert at(k, 1, 0) == pytest.approx(0.88692, abs=5e-6)


def test_reflection_symmetry():
    m = build_kernel(make_grid(32, np.pi), 1 / 3, 0.16).multiplier
    flip = lambda a, ax: np.roll(np.flip(a, ax), 1, ax)  # k -> -k in native order
    assert np.array_equal(m, flip(m, 0))
    assert np.array_equal(m, flip(m, 1))


def test_decreasing_along_rays():
    k = build_kernel(make_grid(64, np.pi), 1 / 3, 0.16)
    row = k.multiplier[:32, 0]
    diag = np.array([k.multiplier[i, i] for i in range(32)])
    assert np.all(np.diff(row) < 0) and np.all(np.diff(diag) < 0)


@pytest.mark.parametrize("nu, t", [(-0.1, 0.16), (0.5, 0.16), (1 / 3, 0.0), (1 / 3, -1.0)])
def test_rejects_bad_parameters(nu, t):
    with pytest.raises(ValueError):
        build_kernel(GRID, nu, t)


def test_general_burgers_reduces_to_default():
    a = build_kernel(GRID, 1 / 3, 0.16).multiplier
    b = build_kernel_general_burgers(GRID, 1 / 3, 0.16, BurgersSpec(1.0, 0.0)).multiplier
    assert np.abs(a - b).max() == 0.0


def test_general_burgers_along_y_swaps_axes():
    k = build_kernel_general_burgers(GRID, 1 / 3, 0.16, BurgersSpec(0.0, 1.0))
    assert at(k, 1, 0) == pytest.approx(math.exp(-0.08), abs=1e-12)
    assert at(k, 0, 1) == pytest.approx(math.exp(-0.12), abs=1e-12)


def test_diagonal_burgers_isotropic_at_nu0():
    s = math.sqrt(0.5)
    a = build_kernel(GRID, 0.0, 0.16).multiplier
    b = build_kernel_general_burgers(GRID, 0.0, 0.16, BurgersSpec(s, s)).multiplier
    assert np.abs(a - b).max() < 1e-14


def test_general_coefficients_rotate():
    # q(k) = (b.k)^2/(1-nu) + (b x k)^2 evaluated directly
    nu, th = 0.3, 0.7
    b = BurgersSpec(math.cos(th), math.sin(th))
    a, c, e = general_burgers_coefficients(nu, b)
    for k1, k2 in [(1.0, 0.0), (0.3, -2.0), (1.5, 1.5)]:
        dot = b.b1 * k1 + b.b2 * k2
        cross = b.b1 * k2 - b.b2 * k1
        assert a * k1**2 + 2 * c * k1 * k2 + e * k2**2 == pytest.approx(dot**2 / (1 - nu) + cross**2)


def test_burgers_must_be_unit():
    with pytest.raises(ValueError):
        BurgersSpec(1.0, 1.0)


def test_rotated_kernel_hermitian():
    from tddm.spectral import inverse_transform
    g = make_grid(32, np.pi)
    k = build_kernel_general_burgers(g, 1 / 3, 0.16, BurgersSpec(0.6, 0.8))
    inverse_transform(k.multiplier.astype(complex), g)  # raises if not Hermitian


def test_closed_form_centre_value():
    assert real_space_kernel_nu0(0.0, 0.0, 0.16) == pytest.approx(2 / (math.pi * 0.16**2))
    assert real_space_kernel_nu0(0.0, 0.0, 0.16) == pytest.approx(24.87, abs=0.01)


def test_closed_form_unit_mass():
    from scipy import integrate
    t = 0.16
    mass, _ = integrate.quad(lambda r: 2 * math.pi * r * real_space_kernel_nu0(r, 0.0, t), 0, np.inf)
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_closed_form_far_field_bound():
    t = 0.16
    r = np.array([1.0, 2.0, 3.0])
    assert np.all(real_space_kernel_nu0(r, 0.0, t) <= t / (4 * math.pi) / r**3 * 1.0001)


def test_sampled_kernel_sums_to_one():
    g = make_grid(128, np.pi)
    k = sample_real_space(build_kernel(g, 1 / 3, 0.16)).values
    assert k.sum() * g.dx**2 == pytest.approx(1.0, abs=1e-12)
    assert np.unravel_index(np.argmax(k), k.shape) == (64, 64)


def test_stress_multiplier_matches_kernel_exponent():
    g = make_grid(32, np.pi)
    t = 0.16
    k = build_kernel(g, 1 / 3, t)
    assert np.allclose(np.exp(t * stress_multiplier(g, 1 / 3)), k.multiplier, atol=1e-14)
