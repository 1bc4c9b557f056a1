"""Load and save electrode-basis files.

File format (JSON, strict -- unknown keys are rejected):

    {
      "points":    [[x_um, y_um, z_um], ...],
      "electrodes": [{"name": "c00"}, ...],
      "values":    [[...], ...],        # [electrode][point], V per volt
      "gradients": [[[...3]], ...],     # [electrode][point][3], V/m per volt
      "hessians":  [[[[...3]]], ...],   # [electrode][point][3][3], V/m^2 per volt
      "trap_axis": {"y_um": 0.0, "z_um": 50.0}   # optional
    }

Validation failures raise :class:`BasisFileError` with the offending JSON
pointer and its line in the file.
"""

import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .jsonpos import pointer_line
from .trap_model import ElectrodeBasis, SampledElectrode

_REQUIRED_KEYS = ("points", "electrodes", "values", "gradients", "hessians")
_OPTIONAL_KEYS = ("trap_axis",)

HESSIAN_SYMMETRY_RTOL = 1e-12


class BasisFileError(ValidationError):
    """Schema violation in a basis file, located by line and JSON pointer."""

    def __init__(self, path, pointer, message, text=""):
        line, col = pointer_line(text, pointer)
        super().__init__(f"{path}:{line}:{col}: {pointer or '/'}: {message}")
        self.pointer = pointer
        self.line = line


def _check_number_array(data, pointer, shape, path, text):
    arr = np.asarray(data, dtype=object)
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        raise BasisFileError(path, pointer, "expected an array of numbers", text)
    if arr.shape != shape:
        raise BasisFileError(
            path, pointer, f"expected shape {shape}, got {arr.shape}", text)
    if not np.all(np.isfinite(arr)):
        raise BasisFileError(path, pointer, "non-finite value", text)
    return arr


def load_basis(path):
    """Read a sampled :class:`ElectrodeBasis` from a JSON basis file."""
    path = Path(path)
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BasisFileError(path, "", f"invalid JSON: {exc.msg} (line {exc.lineno})", text)

    if not isinstance(data, dict):
        raise BasisFileError(path, "", "top level must be an object", text)
    for key in _REQUIRED_KEYS:
        if key not in data:
            raise BasisFileError(path, "", f"missing required key {key!r}", text)
    for key in data:
        if key not in _REQUIRED_KEYS + _OPTIONAL_KEYS:
            raise BasisFileError(path, f"/{key}", f"unknown key {key!r}", text)

    electrodes = data["electrodes"]
    if not isinstance(electrodes, list) or not electrodes:
        raise BasisFileError(path, "/electrodes", "must be a nonempty list", text)
    names = []
    for i, e in enumerate(electrodes):
        ptr = f"/electrodes/{i}"
        if not isinstance(e, dict) or set(e) != {"name"}:
            raise BasisFileError(path, ptr, 'expected an object {"name": ...}', text)
        if not isinstance(e["name"], str) or not e["name"]:
            raise BasisFileError(path, f"{ptr}/name", "name must be a nonempty string", text)
        if e["name"] in names:
            raise BasisFileError(path, f"{ptr}/name", f"duplicate name {e['name']!r}", text)
        names.append(e["name"])

    if not isinstance(data["points"], list) or not data["points"]:
        raise BasisFileError(path, "/points", "must be a nonempty list", text)
    n_points = len(data["points"])
    points_um = _check_number_array(data["points"], "/points", (n_points, 3), path, text)
    points = points_um * 1e-6

    n_elec = len(names)
    values = _check_number_array(data["values"], "/values", (n_elec, n_points), path, text)
    gradients = _check_number_array(
        data["gradients"], "/gradients", (n_elec, n_points, 3), path, text)
    hessians = _check_number_array(
        data["hessians"], "/hessians", (n_elec, n_points, 3, 3), path, text)

    for ie in range(n_elec):
        for ip in range(n_points):
            h = hessians[ie, ip]
            scale = np.abs(h).max()
            if scale > 0 and np.abs(h - h.T).max() > HESSIAN_SYMMETRY_RTOL * scale:
                raise BasisFileError(
                    path, f"/hessians/{ie}/{ip}", "Hessian is not symmetric", text)

    axis_y = axis_z = None
    if "trap_axis" in data:
        axis = data["trap_axis"]
        if not isinstance(axis, dict) or set(axis) != {"y_um", "z_um"}:
            raise BasisFileError(path, "/trap_axis",
                                 'expected {"y_um": ..., "z_um": ...}', text)
        axis_y = float(axis["y_um"]) * 1e-6
        axis_z = float(axis["z_um"]) * 1e-6

    sampled = [
        SampledElectrode(name, points, values[i], gradients[i], hessians[i])
        for i, name in enumerate(names)
    ]
    return ElectrodeBasis(sampled, points=points, axis_y=axis_y, axis_z=axis_z)


def save_basis(basis, points_um, path):
    """Sample `basis` at the given points (um) and write a basis file."""
    points_um = np.asarray(points_um, dtype=float)
    values, gradients, hessians = [], [], []
    for e in basis.electrodes:
        v_row, g_row, h_row = [], [], []
        for p_um in points_um:
            v, g, h = e.potential(p_um * 1e-6)
            v_row.append(v)
            g_row.append(g.tolist())
            h_row.append(h.tolist())
        values.append(v_row)
        gradients.append(g_row)
        hessians.append(h_row)
    data = {
        "points": points_um.tolist(),
        "electrodes": [{"name": n} for n in basis.names],
        "values": values,
        "gradients": gradients,
        "hessians": hessians,
    }
    if basis.axis_y is not None and basis.axis_z is not None:
        data["trap_axis"] = {"y_um": basis.axis_y * 1e6, "z_um": basis.axis_z * 1e6}
    Path(path).write_text(json.dumps(data, indent=1))
