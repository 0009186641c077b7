"""Default scattering-matrix models for the bundled cell library.

Wavelengths and lengths are in micrometres. Dispersion is first-order:
n(lam) = n_eff - (n_g - n_eff) * (lam - lam0) / lam0, which yields a group
index of n_g at lam0. Loss is applied as a field amplitude factor derived
from alpha in dB/cm. Cells flagged lossless in their manifests use unit
amplitude and produce exactly unitary matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo


@dataclass(frozen=True)
class OpticalConstants:
    """Strip-waveguide defaults; representative values, configurable."""

    n_eff: float = 2.34
    n_g: float = 4.2
    alpha_db_cm: float = 2.0
    lam0: float = 1.55


def effective_index(consts: OpticalConstants, lam: float) -> float:
    return consts.n_eff - (consts.n_g - consts.n_eff) * (lam - consts.lam0) / consts.lam0


def propagation(consts: OpticalConstants, length: float, lam: float, lossless: bool = False) -> complex:
    """Field transfer factor of a waveguide segment of the given length."""
    phase = 2 * math.pi * effective_index(consts, lam) * length / lam
    if lossless:
        amp = 1.0
    else:
        amp = 10 ** (-consts.alpha_db_cm * (length * 1e-4) / 20)
    return amp * complex(math.cos(phase), math.sin(phase))


def _two_port(t: complex) -> np.ndarray:
    return np.array([[0, t], [t, 0]], dtype=complex)


def straight_model(params, consts, lam):
    return ("o1", "o2"), _two_port(propagation(consts, params["length"], lam))


def bend90_model(params, consts, lam):
    arc = math.pi * params["radius"] / 2
    return ("o1", "o2"), _two_port(propagation(consts, arc, lam))


def bend180_model(params, consts, lam):
    arc = math.pi * params["radius"]
    return ("o1", "o2"), _two_port(propagation(consts, arc, lam))


def bezier_model(params, consts, lam):
    length = geo.bezier_path_length(params["dx"], params["dy"])
    return ("o1", "o2"), _two_port(propagation(consts, length, lam))


def _coupler_matrix(coupling: float, p: complex) -> np.ndarray:
    """4-port coupler, ports (o1 top-west, o2 bottom-west, o3 top-east, o4 bottom-east)."""
    t = math.sqrt(1 - coupling)
    k = 1j * math.sqrt(coupling)
    s = np.zeros((4, 4), dtype=complex)
    s[0, 2] = s[2, 0] = t * p
    s[0, 3] = s[3, 0] = k * p
    s[1, 3] = s[3, 1] = t * p
    s[1, 2] = s[2, 1] = k * p
    return s


def directional_coupler_model(params, consts, lam):
    p = propagation(consts, params["length"] + 2 * params["dx"], lam, lossless=True)
    return ("o1", "o2", "o3", "o4"), _coupler_matrix(params["coupling"], p)


def mmi2x2_model(params, consts, lam):
    p = propagation(consts, params["length_mmi"] + 4.0, lam, lossless=True)
    return ("o1", "o2", "o3", "o4"), _coupler_matrix(0.5, p)


def mmi1x2_model(params, consts, lam):
    p = propagation(consts, params["length_mmi"] + 4.0, lam, lossless=True)
    a = p / math.sqrt(2)
    s = np.zeros((3, 3), dtype=complex)
    s[0, 1] = s[1, 0] = a
    s[0, 2] = s[2, 0] = a
    return ("o1", "o2", "o3"), s


def _mzi_block(consts, lam, delta_length, arm_length, extra_phase=0.0):
    """2x2 transfer of coupler / two arms / coupler, top-arm-first ordering."""
    c = np.array([[1, 1j], [1j, 1]], dtype=complex) / math.sqrt(2)
    p1 = propagation(consts, arm_length, lam, lossless=True) * np.exp(1j * extra_phase)
    p2 = propagation(consts, arm_length + delta_length, lam, lossless=True)
    d = np.array([[p1, 0], [0, p2]], dtype=complex)
    return c @ d @ c


def mzi_2x2_model(params, consts, lam, extra_phase=0.0):
    u = _mzi_block(consts, lam, params["delta_length"], 50.0, extra_phase)
    s = np.zeros((4, 4), dtype=complex)
    # west (o1 top, o2 bottom) -> east (o3 top, o4 bottom); reciprocal
    west, east = (0, 1), (2, 3)
    for j in range(2):
        for i in range(2):
            s[east[j], west[i]] = u[j, i]
            s[west[i], east[j]] = u[j, i]
    return ("o1", "o2", "o3", "o4"), s


def mzi_2x2_heater_model(params, consts, lam):
    return mzi_2x2_model(params, consts, lam, extra_phase=params.get("phase", 0.0))


def mzi_1x2_model(params, consts, lam):
    c = np.array([[1, 1j], [1j, 1]], dtype=complex) / math.sqrt(2)
    arm = 40.0
    p1 = propagation(consts, arm, lam, lossless=True)
    p2 = propagation(consts, arm + params["delta_length"], lam, lossless=True)
    v = c @ (np.array([p1, p2], dtype=complex) / math.sqrt(2))
    s = np.zeros((3, 3), dtype=complex)
    s[0, 1] = s[1, 0] = v[0]  # top output o2
    s[0, 2] = s[2, 0] = v[1]  # bottom output o3
    return ("o1", "o2", "o3"), s


def ring_single_model(params, consts, lam):
    r = params["radius"]
    circumference = 2 * math.pi * r
    t = math.sqrt(1 - params["coupling"])
    rt = propagation(consts, circumference, lam)  # round-trip incl. loss
    bus = propagation(consts, 2 * r + 4, lam)
    s21 = bus * (t - rt) / (1 - t * rt)
    return ("o1", "o2"), _two_port(s21)


def heater_tin_model(params, consts, lam):
    p = propagation(consts, params["length"], lam) * np.exp(1j * params.get("phase", 0.0))
    return ("o1", "o2"), _two_port(p)


def phase_modulator_model(params, consts, lam):
    p = propagation(consts, params["length"], lam) * np.exp(1j * params.get("phase", 0.0))
    return ("o1", "o2"), _two_port(p)


def crossing_model(params, consts, lam):
    p = propagation(consts, params["size"], lam, lossless=True)
    s = np.zeros((4, 4), dtype=complex)
    s[0, 2] = s[2, 0] = p
    s[1, 3] = s[3, 1] = p
    return ("o1", "o2", "o3", "o4"), s


def one_port_model(params, consts, lam):
    r = complex(params.get("reflection", 0.0))
    return ("o1",), np.array([[r]], dtype=complex)


SMODELS = {
    "straight": straight_model,
    "bend_circular_90": bend90_model,
    "bend_circular_180": bend180_model,
    "bezier_curve": bezier_model,
    "directional_coupler": directional_coupler_model,
    "mmi1x2": mmi1x2_model,
    "mmi2x2": mmi2x2_model,
    "mzi_1x2": mzi_1x2_model,
    "mzi_2x2": mzi_2x2_model,
    "mzi_2x2_heater_tin": mzi_2x2_heater_model,
    "ring_single": ring_single_model,
    "grating_coupler": one_port_model,
    "edge_coupler": one_port_model,
    "heater_tin": heater_tin_model,
    "phase_modulator": phase_modulator_model,
    "crossing": crossing_model,
    "terminator": one_port_model,
}
