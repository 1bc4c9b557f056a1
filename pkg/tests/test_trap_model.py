import numpy as np
import pytest
import scipy.constants as const

from iontrap_bench.constants import YB171, IonSpecies
from iontrap_bench.errors import (DimensionError, DomainExhaustedError,
                                  UnknownPointError, ValidationError)
from iontrap_bench.trap_model import (AnalyticElectrode, ElectrodeBasis, RfDrive,
                                      characterize_site, find_rf_null,
                                      secular_frequency, total_potential,
                                      trap_depth)

Q = const.e
M_YB = 171 * const.atomic_mass


def single_electrode_basis(fn, bounds):
    return ElectrodeBasis([AnalyticElectrode("e0", fn)], bounds=np.asarray(bounds))


def quadratic_basis(c, half_width=1e-3):
    """phi(x) = 0.5 * c * x^2 along the first axis."""
    def fn(p):
        x = p[0]
        grad = np.array([c * x, 0.0, 0.0])
        hess = np.diag([c, 0.0, 0.0])
        return 0.5 * c * x * x, grad, hess
    b = half_width
    return single_electrode_basis(fn, [[-b, b], [-b, b], [-b, b]])


def test_total_potential_all_zero(demo):
    point = demo.site(0.0)
    rf_off = demo.rf.with_amplitude(0.0)
    out = total_potential(demo.basis, np.zeros(len(demo.basis)), rf_off, YB171, point)
    assert out.energy == 0.0
    assert np.all(out.gradient == 0.0)
    assert np.all(out.hessian == 0.0)


def test_quadratic_basis_hessian_exact():
    c = 7.28e7
    basis = quadratic_basis(c)
    out = total_potential(basis, [1.0], None, YB171, np.zeros(3))
    assert out.hessian[0, 0] == Q * c
    assert out.energy == 0.0


def test_demo_basis_laplace_and_symmetry(demo):
    rng = np.random.default_rng(11)
    for _ in range(25):
        point = np.array([
            rng.uniform(-500e-6, 500e-6),
            rng.uniform(-80e-6, 80e-6),
            rng.uniform(20e-6, 150e-6),
        ])
        _, _, hesses = demo.basis.sample(point)
        for h in hesses:
            scale = np.abs(h).max()
            assert np.abs(h - h.T).max() <= 1e-12 * scale
            assert abs(np.trace(h)) <= 1e-9 * scale


def test_electrostatic_linearity(demo):
    rng = np.random.default_rng(5)
    v = rng.normal(size=len(demo.basis))
    point = demo.site(50e-6)
    one = total_potential(demo.basis, v, None, YB171, point)
    two = total_potential(demo.basis, 2.0 * v, None, YB171, point)
    assert np.array_equal(two.gradient, 2.0 * one.gradient)
    assert two.energy == 2.0 * one.energy


def test_pseudopotential_nonnegative(demo):
    rng = np.random.default_rng(6)
    for _ in range(10):
        point = np.array([rng.uniform(-300e-6, 300e-6), rng.uniform(-50e-6, 50e-6),
                          rng.uniform(20e-6, 200e-6)])
        out = total_potential(demo.basis, np.zeros(len(demo.basis)), demo.rf,
                              YB171, point)
        assert out.energy >= 0.0


def test_voltage_length_mismatch(demo):
    with pytest.raises(DimensionError):
        total_potential(demo.basis, np.zeros(3), None, YB171, demo.site(0.0))


def test_unknown_point(demo):
    outside = np.array([0.0, 0.0, -10e-6])
    with pytest.raises(UnknownPointError):
        total_potential(demo.basis, np.zeros(len(demo.basis)), None, YB171, outside)


# -- secular_frequency -------------------------------------------------------

def test_secular_curvature_reference_axial():
    # potential curvature 7.28e7 V/m^2 on one axis -> 1.02 MHz for 171Yb+
    hess = np.diag([Q * 7.28e7, 0.0, 0.0])
    modes = secular_frequency(hess, YB171)
    f_mhz = modes.omega.max() / (2 * np.pi * 1e6)
    assert abs(f_mhz - 1.02) / 1.02 < 1e-3
    assert not modes.imaginary.any()


def test_secular_zero_hessian():
    modes = secular_frequency(np.zeros((3, 3)), YB171)
    assert np.all(modes.omega == 0.0)
    assert not modes.imaginary.any()


def test_secular_isotropic_axes_orthonormal():
    c = Q * 1e8
    modes = secular_frequency(np.eye(3) * c, YB171)
    assert np.allclose(modes.omega, modes.omega[0], rtol=1e-12)
    assert np.allclose(modes.axes @ modes.axes.T, np.eye(3), atol=1e-12)


def test_secular_rejects_asymmetric():
    h = np.array([[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    with pytest.raises(ValidationError):
        secular_frequency(h, YB171)


def test_secular_negative_flagged_not_dropped():
    hess = np.diag([Q * 7.28e7, -Q * 2e7, Q * 1e7])
    modes = secular_frequency(hess, YB171)
    assert modes.imaginary.tolist() == [True, False, False]
    assert np.all(modes.omega > 0.0)  # magnitudes reported, not dropped


def test_secular_roundtrip_identity():
    rng = np.random.default_rng(7)
    for _ in range(50):
        omega = 2 * np.pi * rng.uniform(0.1e6, 10e6)
        curvature = M_YB * omega ** 2 / Q
        modes = secular_frequency(np.diag([Q * curvature, 0, 0]), YB171)
        assert abs(modes.omega.max() - omega) / omega < 1e-9


def test_species_validation():
    with pytest.raises(ValidationError):
        IonSpecies(mass=-1.0, charge=Q)
    with pytest.raises(ValidationError):
        IonSpecies(mass=1e-25, charge=0.0)


# -- trap_depth ---------------------------------------------------------------

def test_depth_quadratic_monotone_reaches_domain_edge():
    c = 1e8
    basis = quadratic_basis(c, half_width=1e-3)
    with pytest.raises(DomainExhaustedError) as err:
        trap_depth(basis, [1.0], None, YB171, np.zeros(3), [1, 0, 0])
    # boundary value = energy difference at the domain edge
    expected = Q * 0.5 * c * (1e-3) ** 2
    assert err.value.boundary_value == pytest.approx(expected, rel=1e-6)


def test_depth_quartic_double_well():
    a, b = 3.0e19, 1.2e7  # U = a x^4 - b x^2 (J with x in m) at 1 V
    def fn(p):
        x = p[0]
        u = (a * x ** 4 - b * x ** 2) / Q
        du = (4 * a * x ** 3 - 2 * b * x) / Q
        d2u = (12 * a * x ** 2 - 2 * b) / Q
        return u, np.array([du, 0, 0]), np.diag([d2u, 0, 0])
    basis = single_electrode_basis(fn, [[-1e-3, 1e-3]] * 3)
    x_min = np.sqrt(b / (2 * a))
    depth = trap_depth(basis, [1.0], None, YB171, np.array([x_min, 0, 0]), [-1, 0, 0])
    assert depth == pytest.approx(b ** 2 / (4 * a), rel=1e-6)


def test_depth_demo_radial_71_mev(demo):
    site = demo.site(0.0)
    depth = trap_depth(demo.basis, np.zeros(len(demo.basis)), demo.rf, YB171,
                       site, [0, 0, 1])
    depth_mev = depth / const.e * 1e3
    assert abs(depth_mev - 71.0) / 71.0 < 0.10


def test_depth_invariant_under_constant_offset():
    a, b = 3.0e19, 1.2e7
    def make(offset):
        def fn(p):
            x = p[0]
            u = (a * x ** 4 - b * x ** 2) / Q + offset
            du = (4 * a * x ** 3 - 2 * b * x) / Q
            d2u = (12 * a * x ** 2 - 2 * b) / Q
            return u, np.array([du, 0, 0]), np.diag([d2u, 0, 0])
        return single_electrode_basis(fn, [[-1e-3, 1e-3]] * 3)
    x_min = np.sqrt(b / (2 * a))
    site = np.array([x_min, 0, 0])
    d0 = trap_depth(make(0.0), [1.0], None, YB171, site, [-1, 0, 0])
    d1 = trap_depth(make(123.456), [1.0], None, YB171, site, [-1, 0, 0])
    assert d1 == pytest.approx(d0, rel=1e-9)


def test_depth_rejects_non_minimum():
    c = 1e8
    basis = quadratic_basis(c)
    # hilltop: negative curvature via negative voltage
    with pytest.raises(ValidationError):
        trap_depth(basis, [-1.0], None, YB171, np.zeros(3), [1, 0, 0])


# -- RF pieces ----------------------------------------------------------------

def test_characterize_demo_site(demo):
    site = characterize_site(demo.basis, np.zeros(len(demo.basis)), demo.rf,
                             YB171, demo.site(0.0), [0, 0, 1])
    radial_mhz = site.frequencies.max() / (2 * np.pi * 1e6)
    assert radial_mhz == pytest.approx(3.52, rel=1e-6)
    assert abs(site.depth / const.e * 1e3 - 71.0) / 71.0 < 0.10


def test_rf_drive_validation(demo):
    with pytest.raises(ValidationError):
        RfDrive(frequency=-1.0, amplitude=10.0, electrode=demo.rf.electrode)


def test_rf_null_and_calibration(demo):
    null = find_rf_null(demo.rf, np.array([0.0, 1e-6, 45e-6]))
    assert abs(null[2] - 50e-6) < 2e-6
    assert abs(null[1]) < 1e-9
    point = demo.site(0.0)
    out = total_potential(demo.basis, np.zeros(len(demo.basis)), demo.rf, YB171, point)
    modes = secular_frequency(out.hessian, YB171)
    assert modes.omega.max() == pytest.approx(2 * np.pi * 3.52e6, rel=1e-9)
