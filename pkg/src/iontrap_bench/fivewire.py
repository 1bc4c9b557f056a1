"""Analytic surface-trap potentials built from rectangular electrode patches.

A patch at unit potential on the grounded plane z = 0 contributes, in the
half-space z > 0, a potential equal to its subtended solid angle divided by
2*pi (gapless approximation).  Each patch decomposes into four quadrant
corner terms arctan(u*v / (z*r)) whose first and second derivatives have
closed forms, so value, gradient, and Hessian are available everywhere
above the plane with no numerical differentiation.  Every corner term is
harmonic, which makes the Laplace check on the bundled geometry exact up
to rounding.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import UnknownPointError
from .trap_model import ElectrodeBasis, RfDrive, calibrate_rf_amplitude, find_rf_null


def _corner_terms(u, v, z):
    """Value, gradient, Hessian of arctan(u*v/(z*r)) wrt (u, v, z)."""
    A = u * u + z * z
    B = v * v + z * z
    r2 = u * u + v * v + z * z
    r = np.sqrt(r2)
    r3 = r * r2

    val = np.arctan2(u * v, z * r)

    g_u = z * v / (r * A)
    g_v = z * u / (r * B)
    g_z = -u * v * (r2 + z * z) / (r * A * B)

    g_uu = -z * v * u * (A + 2.0 * r2) / (r3 * A * A)
    g_vv = -z * u * v * (B + 2.0 * r2) / (r3 * B * B)
    g_uv = z / r3
    uv2 = u * u + v * v
    g_uz = v * (A * uv2 - 2.0 * z * z * r2) / (r3 * A * A)
    g_vz = u * (B * uv2 - 2.0 * z * z * r2) / (r3 * B * B)
    g_zz = -(g_uu + g_vv)

    grad = np.array([g_u, g_v, g_z])
    hess = np.array([
        [g_uu, g_uv, g_uz],
        [g_uv, g_vv, g_vz],
        [g_uz, g_vz, g_zz],
    ])
    return val, grad, hess


@dataclass(frozen=True)
class RectPatch:
    """Rectangular electrode patch [x1, x2] x [y1, y2] on the z = 0 plane."""

    x1: float
    x2: float
    y1: float
    y2: float

    def potential(self, point):
        """Potential (per applied volt), gradient, and Hessian at `point`.

        Valid for z > 0.  Returns (value, gradient[3], hessian[3, 3]) in
        V, V/m, V/m^2 per volt on the patch.
        """
        x, y, z = point
        if z <= 0.0:
            raise UnknownPointError(f"patch potential requires z > 0, got z={z}")
        val = 0.0
        grad = np.zeros(3)
        hess = np.zeros((3, 3))
        for xc, sx in ((self.x2, 1.0), (self.x1, -1.0)):
            for yc, sy in ((self.y2, 1.0), (self.y1, -1.0)):
                s = sx * sy
                cv, cg, ch = _corner_terms(xc - x, yc - y, z)
                val += s * cv
                # u = xc - x, v = yc - y: du/dx = -1, dv/dy = -1.
                grad[0] += -s * cg[0]
                grad[1] += -s * cg[1]
                grad[2] += s * cg[2]
                hess[0, 0] += s * ch[0, 0]
                hess[1, 1] += s * ch[1, 1]
                hess[2, 2] += s * ch[2, 2]
                hess[0, 1] += s * ch[0, 1]
                hess[0, 2] += -s * ch[0, 2]
                hess[1, 2] += -s * ch[1, 2]
        hess[1, 0] = hess[0, 1]
        hess[2, 0] = hess[0, 2]
        hess[2, 1] = hess[1, 2]
        inv2pi = 1.0 / (2.0 * np.pi)
        return val * inv2pi, grad * inv2pi, hess * inv2pi


@dataclass(frozen=True)
class PatchElectrode:
    """A named electrode made of one or more rectangular patches."""

    name: str
    patches: tuple = field(default_factory=tuple)

    def potential(self, point):
        val = 0.0
        grad = np.zeros(3)
        hess = np.zeros((3, 3))
        for p in self.patches:
            v, g, h = p.potential(point)
            val += v
            grad += g
            hess += h
        return val, grad, hess


# ---------------------------------------------------------------------------
# Bundled demonstration geometry
# ---------------------------------------------------------------------------
#
# Symmetric rail pair at RAIL_INNER < |y| < RAIL_OUTER carrying RF, a row of
# segmented control electrodes on the center strip between the rails, and
# coarser control segments outside the rails.  The RF null line sits at
# z = sqrt(RAIL_INNER * RAIL_OUTER) above y = 0 for infinite rails; the
# bundled values put it near 50 um and give a pseudopotential escape barrier
# near 71 meV once the radial frequency is calibrated to 2*pi*3.52 MHz.

RAIL_LENGTH = 4.0e-3  # rails span x in [-2 mm, 2 mm]


def five_wire_electrodes(
    rail_inner,
    rail_outer,
    inner_segments=13,
    inner_segment_width=100e-6,
    outer_segments=5,
    outer_width=150e-6,
):
    """Construct the electrode list for a five-wire surface trap.

    Returns (dc_electrodes, rf_electrode).  The DC set is one row of
    `inner_segments` electrodes on the center strip plus `outer_segments`
    per side outside the rails.
    """
    half_span = 0.5 * inner_segments * inner_segment_width
    dc = []
    for i in range(inner_segments):
        x1 = -half_span + i * inner_segment_width
        dc.append(PatchElectrode(
            name=f"c{i:02d}",
            patches=(RectPatch(x1, x1 + inner_segment_width, -rail_inner, rail_inner),),
        ))
    outer_segment_width = 2.0 * half_span / outer_segments
    for side, label in ((1.0, "t"), (-1.0, "b")):
        y1, y2 = side * rail_outer, side * (rail_outer + outer_width)
        ylo, yhi = min(y1, y2), max(y1, y2)
        for i in range(outer_segments):
            x1 = -half_span + i * outer_segment_width
            dc.append(PatchElectrode(
                name=f"{label}{i:02d}",
                patches=(RectPatch(x1, x1 + outer_segment_width, ylo, yhi),),
            ))
    rf = PatchElectrode(
        name="rf",
        patches=(
            RectPatch(-RAIL_LENGTH / 2, RAIL_LENGTH / 2, rail_inner, rail_outer),
            RectPatch(-RAIL_LENGTH / 2, RAIL_LENGTH / 2, -rail_outer, -rail_inner),
        ),
    )
    return dc, rf


@dataclass(frozen=True)
class DemoTrap:
    """Bundled analytic trap: DC basis, RF drive, and trapping-line metadata."""

    basis: ElectrodeBasis
    rf: RfDrive
    height: float       # RF null height above the surface, m
    site_spacing: float  # nominal spacing between addressed sites, m

    def site(self, x):
        """Point on the trapping line at axial coordinate x (m)."""
        return self.basis.axis_point(x)


def demo_trap(
    height=50e-6,
    rail_ratio=2.0,
    rf_frequency=2.0 * np.pi * 50e6,
    rf_amplitude=0.0,
    inner_segments=13,
    outer_segments=5,
    species=None,
    calibrate_radial=None,
):
    """Build the bundled five-wire demonstration trap.

    Rail edges are placed at height/sqrt(rail_ratio) and height*sqrt(rail_ratio)
    so the RF null sits near `height`.  When `calibrate_radial` (rad/s) is
    given, the RF amplitude is scanned until the radial pseudopotential
    frequency matches it (requires `species`).
    """
    rail_inner = height / np.sqrt(rail_ratio)
    rail_outer = height * np.sqrt(rail_ratio)
    dc, rf_electrode = five_wire_electrodes(
        rail_inner, rail_outer,
        inner_segments=inner_segments, outer_segments=outer_segments)
    span = 0.5 * inner_segments * 100e-6
    bounds = np.array([
        [-span, span],
        [-(rail_outer + 200e-6), rail_outer + 200e-6],
        [1e-6, 8.0 * height],
    ])
    rf = RfDrive(frequency=rf_frequency, amplitude=rf_amplitude, electrode=rf_electrode)
    null = find_rf_null(rf, np.array([0.0, 0.0, np.sqrt(rail_inner * rail_outer)]))
    basis = ElectrodeBasis(dc, bounds=bounds, axis_y=float(null[1]), axis_z=float(null[2]))
    if calibrate_radial is not None:
        if species is None:
            raise ValueError("calibrate_radial requires a species")
        rf = calibrate_rf_amplitude(rf.with_amplitude(1.0), species, calibrate_radial, null)
    return DemoTrap(basis=basis, rf=rf, height=float(null[2]), site_spacing=200e-6)
