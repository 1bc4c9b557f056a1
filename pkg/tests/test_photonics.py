import math

import numpy as np
import pytest
from scipy.integrate import quad

from iontrap_bench.analysis import fit_gaussian_profile
from iontrap_bench.errors import ValidationError
from iontrap_bench.photonics import (BeamModel, FlatBeam, LossChain, LossElement,
                                     SplitterSpec, beam_intensity,
                                     evanescent_coupling, loss_budget,
                                     mesh_transmission, split,
                                     split_ratio_from_rabi_imbalance)


def make_beam(power=1e-6, fwhm=5.26e-6):
    return BeamModel(focus=np.array([0.0, 0.0, 50e-6]),
                     direction=np.array([1.0, 0.0, 1.0]),
                     wavelength=435e-9, fwhm=fwhm, power=power)


def test_peak_intensity_identity():
    beam = make_beam()
    w0 = beam.fwhm / math.sqrt(2 * math.log(2))
    expected = 2 * beam.power / (math.pi * w0 ** 2)
    assert beam_intensity(beam, beam.focus) == pytest.approx(expected, rel=1e-12)


def test_half_maximum_at_half_fwhm():
    beam = make_beam()
    offset = np.array([0.0, 1.0, 0.0])  # transverse to (1,0,1)/sqrt(2)
    point = beam.focus + 0.5 * beam.fwhm * offset
    peak = beam_intensity(beam, beam.focus)
    assert beam_intensity(beam, point) == pytest.approx(0.5 * peak, rel=1e-12)


def test_transverse_power_integral_matches():
    beam = make_beam(power=2.3e-6)
    # radial integral of the transverse profile at the focus plane
    def integrand(r):
        point = beam.focus + r * np.array([0.0, 1.0, 0.0])
        return beam_intensity(beam, point) * 2 * math.pi * r
    total, _ = quad(integrand, 0.0, 20 * beam.waist, limit=200)
    assert total == pytest.approx(beam.power, rel=1e-6)


def test_power_integral_off_focus_plane():
    beam = make_beam(power=1.0e-6)
    s = 30e-6  # along propagation: diverged but still carries full power
    center = beam.focus + s * beam.direction
    def integrand(r):
        return beam_intensity(beam, center + r * np.array([0, 1.0, 0])) * 2 * math.pi * r
    total, _ = quad(integrand, 0.0, 200 * beam.waist, limit=400)
    assert total == pytest.approx(beam.power, rel=1e-4)


def test_beam_profile_fit_recovers_fwhm():
    beam = make_beam()
    xs = np.linspace(-12e-6, 12e-6, 61)
    transverse = np.array([1.0, 0.0, -1.0]) / np.sqrt(2)
    values = np.array([beam_intensity(beam, beam.focus + x * transverse)
                       for x in xs])
    fit = fit_gaussian_profile(xs, values)
    assert fit.converged
    assert fit.params["fwhm"] == pytest.approx(5.26e-6, rel=0.01)


def test_flat_repump_beam_uniform():
    repump = FlatBeam(intensity=7.5)
    assert beam_intensity(repump, np.array([0.0, 0.0, 50e-6])) == 7.5
    assert beam_intensity(repump, np.array([300e-6, 40e-6, 80e-6])) == 7.5
    with pytest.raises(ValidationError):
        FlatBeam(intensity=-1.0)


def test_beam_validation():
    with pytest.raises(ValidationError):
        BeamModel(focus=np.zeros(3), direction=np.zeros(3), wavelength=435e-9,
                  fwhm=5e-6, power=1.0)
    with pytest.raises(ValidationError):
        make_beam(fwhm=-1e-6)


# -- splitter -----------------------------------------------------------------

def test_split_even_lossless():
    out = split(1e-3, SplitterSpec())
    assert np.allclose(out, [0.5e-3, 0.5e-3], rtol=1e-15)


def test_split_half_db_loss():
    out = split(1e-3, SplitterSpec(ratios=(0.5, 0.5), insertion_loss_db=0.2))
    expected = 0.5e-3 * 10 ** (-0.02)
    assert out[0] == pytest.approx(expected, rel=1e-12)
    assert out[0] == pytest.approx(0.4775e-3, abs=5e-8)


def test_split_ratio_sum_validation():
    with pytest.raises(ValidationError):
        SplitterSpec(ratios=(0.7, 0.5))
    with pytest.raises(ValidationError):
        SplitterSpec(ratios=(0.5, -0.1))


def test_split_energy_conservation_property():
    rng = np.random.default_rng(21)
    for _ in range(50):
        n = rng.integers(2, 6)
        raw = rng.uniform(0.05, 1.0, n)
        ratios = tuple(raw / raw.sum())
        spec = SplitterSpec(ratios=ratios, insertion_loss_db=rng.uniform(0, 3))
        out = split(1e-3, spec)
        assert out.sum() <= 1e-3 * (1 + 1e-12)
        assert np.all(out >= 0)


def test_rabi_imbalance_to_power_ratio():
    ratio, (hi, lo) = split_ratio_from_rabi_imbalance(0.064)
    assert ratio == pytest.approx((1.064) ** 2, rel=1e-15)
    assert ratio == pytest.approx(1.132, abs=5e-4)
    assert hi == pytest.approx(0.531, abs=5e-4)
    assert lo == pytest.approx(0.469, abs=5e-4)
    ratio39, _ = split_ratio_from_rabi_imbalance(0.039)
    assert ratio39 == pytest.approx(1.0795, abs=5e-5)


# -- loss budget --------------------------------------------------------------

def bench_chain():
    return LossChain.from_dicts([
        {"name": "input_combiner", "loss_db": 3.0},
        {"name": "input_grating", "loss_db": 6.5},
        {"name": "propagation", "loss_db_per_cm": 0.9, "length_cm": 0.5},
        {"name": "output_grating", "loss_db": 6.5},
        {"name": "splitter", "loss_db": 3.0},
    ])


def test_bench_budget_near_20_db():
    budget = loss_budget(bench_chain())
    assert budget.total_db == pytest.approx(19.45, abs=1e-12)
    assert abs(budget.total_db - 20.0) < 1.0
    assert budget.transmission == pytest.approx(10 ** -1.945, rel=1e-12)
    assert dict(budget.table)["propagation"] == pytest.approx(0.45, rel=1e-12)


def test_zero_loss_chain():
    chain = LossChain.from_dicts([{"name": "a", "loss_db": 0.0},
                                  {"name": "b", "loss_db": 0.0}])
    budget = loss_budget(chain)
    assert budget.total_db == 0.0
    assert budget.transmission == 1.0


def test_empty_chain_rejected():
    with pytest.raises(ValidationError):
        loss_budget(LossChain(elements=()))


def test_negative_loss_rejected():
    with pytest.raises(ValidationError):
        LossElement(name="x", loss_db=-0.5)
    with pytest.raises(ValidationError):
        LossElement(name="x", loss_db=1.0, loss_db_per_cm=1.0, length_cm=1.0)
    with pytest.raises(ValidationError):
        LossElement(name="x")


def test_db_additivity():
    c1 = bench_chain()
    c2 = LossChain.from_dicts([{"name": "window", "loss_db": 1.2}])
    joint = LossChain(elements=c1.elements + c2.elements)
    assert loss_budget(joint).total_db == pytest.approx(
        loss_budget(c1).total_db + loss_budget(c2).total_db, rel=1e-14)


def test_in_experiment_49_db_gives_54_nw():
    chain = LossChain.from_dicts([
        {"name": "bench_total", "loss_db": 20.0},
        {"name": "unattributed", "loss_db": 29.0},
    ])
    budget = loss_budget(chain)
    power_out = budget.power_out(4.3e-3)
    assert budget.total_db == 49.0
    assert power_out == pytest.approx(54e-9, rel=0.01)


# -- evanescent coupling ------------------------------------------------------

def test_evanescent_trivial_zeros():
    assert evanescent_coupling(0.0, 1.7e-3, 435e-9) == 0.0
    assert evanescent_coupling(1e-3, 0.0, 435e-9) == 0.0


def test_evanescent_quadratic_regime():
    # pi * dn * L / lambda = 1e-12 -> fraction 1e-24
    wavelength = 435e-9
    length = 1.7e-3
    dn = 1e-12 * wavelength / (math.pi * length)
    frac = evanescent_coupling(dn, length, wavelength)
    assert frac == pytest.approx(1e-24, rel=0.01)


def test_evanescent_monotone_then_clamped():
    dn, wavelength = 1e-4, 435e-9
    l_half = wavelength / (2 * dn)
    lengths = np.linspace(0, l_half, 40)
    fracs = [evanescent_coupling(dn, L, wavelength) for L in lengths]
    assert np.all(np.diff(fracs) >= -1e-15)
    assert fracs[-1] == pytest.approx(1.0, abs=1e-12)
    assert evanescent_coupling(dn, 2 * l_half, wavelength) <= 1.0


# -- mesh ---------------------------------------------------------------------

def test_mesh_three_micron_holes():
    frac = mesh_transmission(3e-6, 1e-6)
    assert frac == pytest.approx(0.5625, rel=1e-15)
    assert abs(frac - 0.55) < 0.02  # "roughly 55%"


def test_mesh_limits():
    assert mesh_transmission(3e-6, 0.0) == 1.0
    assert mesh_transmission(2e-6, 2e-6) == pytest.approx(0.25, rel=1e-15)
    with pytest.raises(ValidationError):
        mesh_transmission(0.0, 1e-6)
