"""Frequency-domain circuit verification by scattering-matrix composition.

Each instance contributes the S-matrix of its cell's default model; the
circuit matrix is grown by absorbing one connection at a time with the
standard two-port interconnection (port elimination) formula. The result is
independent of the order in which connections are absorbed, which the test
suite checks to 1e-10. Electrical ports never enter composition.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dsl import PicDesign, PortConnection, PortRef
from .pdk import OpticalConstants, PdkRegistry, default_smatrix

log = logging.getLogger(__name__)


class SingularConnection(ValueError):
    """Port elimination hit a numerically singular denominator."""

    def __init__(self, connection: PortConnection, denominator: complex):
        self.connection = connection
        super().__init__(
            f"connection {connection} gives singular elimination "
            f"(|denominator| = {abs(denominator):.3e})"
        )


class PassivityError(ValueError):
    """A passive circuit produced a transfer magnitude above unity."""


@dataclass(frozen=True)
class ComposedSMatrix:
    ports: tuple[str, ...]  # "instance:port" labels of external ports
    data: np.ndarray
    wavelength: float

    def transfer(self, a: str, b: str) -> complex:
        return complex(self.data[self.ports.index(b), self.ports.index(a)])


@dataclass(frozen=True)
class Spectrum:
    wavelengths: tuple[float, ...]
    ports: tuple[str, ...]
    responses: Mapping[tuple[str, str], tuple[complex, ...]]


def _innerconnect(s: np.ndarray, k: int, l: int) -> np.ndarray:
    """Connect ports k and l of one network, eliminating both.

    Standard interconnection formula (e.g. Filipsson 1981); returns the
    reduced matrix with rows/columns k and l removed.
    """
    d = (1 - s[k, l]) * (1 - s[l, k]) - s[k, k] * s[l, l]
    if abs(d) < 1e-12:
        raise _SingularElimination(d)
    n = s.shape[0]
    keep = [i for i in range(n) if i not in (k, l)]
    out = np.empty((len(keep), len(keep)), dtype=complex)
    for a, i in enumerate(keep):
        for b, j in enumerate(keep):
            out[a, b] = s[i, j] + (
                s[k, j] * s[i, l] * (1 - s[l, k])
                + s[l, j] * s[i, k] * (1 - s[k, l])
                + s[k, j] * s[l, l] * s[i, k]
                + s[l, j] * s[k, k] * s[i, l]
            ) / d
    return out


class _SingularElimination(Exception):
    def __init__(self, denominator: complex):
        self.denominator = denominator


def _natural(label: str):
    import re

    return tuple(int(p) if p.isdigit() else p for p in re.split(r"(\d+)", label))


def compose(
    design: PicDesign,
    registry: PdkRegistry,
    wavelength: float,
    constants: OpticalConstants | None = None,
    connection_order: Sequence[int] | None = None,
) -> ComposedSMatrix:
    """Compose the design's S-matrix over its external (unconnected) ports.

    ``connection_order`` permutes the absorption order of connections; the
    result is order-independent and the argument exists for property tests.
    """
    consts = constants or registry.constants

    labels: list[str] = []
    blocks: list[np.ndarray] = []
    for inst in design.instances:
        cell = registry.get(inst.cell)
        if inst.model_stale:
            log.warning(
                "instance %s (%s) has non-default parameters; simulating with "
                "the default parametric model",
                inst.id,
                inst.cell,
            )
        (sm,) = default_smatrix(cell, inst.params, [wavelength], consts)
        labels.extend(f"{inst.id}:{p}" for p in sm.ports)
        blocks.append(sm.data)

    n = len(labels)
    s = np.zeros((n, n), dtype=complex)
    at = 0
    for b in blocks:
        k = b.shape[0]
        s[at : at + k, at : at + k] = b
        at += k

    order = list(connection_order) if connection_order is not None else list(
        range(len(design.connections))
    )
    live = list(labels)
    for ci in order:
        conn = design.connections[ci]
        try:
            k = live.index(f"{conn.a.instance}:{conn.a.port}")
            l = live.index(f"{conn.b.instance}:{conn.b.port}")
        except ValueError:
            raise KeyError(f"connection {conn} references a non-optical port") from None
        try:
            s = _innerconnect(s, k, l)
        except _SingularElimination as exc:
            raise SingularConnection(conn, exc.denominator) from None
        del live[max(k, l)]
        del live[min(k, l)]

    # canonical external port order, independent of elimination order
    perm = sorted(range(len(live)), key=lambda i: _natural(live[i]))
    ports = tuple(live[i] for i in perm)
    data = s[np.ix_(perm, perm)]
    if not np.all(np.isfinite(data)):
        raise SingularConnection(design.connections[order[-1]] if order else None, 0.0)
    return ComposedSMatrix(ports, data, wavelength)


def external_ports(design: PicDesign, registry: PdkRegistry) -> tuple[str, ...]:
    """Optical ports left unconnected, as 'instance:port' labels."""
    used = {str(ref) for c in design.connections for ref in c.endpoints()}
    out = []
    for inst in design.instances:
        for p in registry.get(inst.cell).optical_ports():
            label = str(PortRef(inst.id, p.name))
            if label not in used:
                out.append(label)
    return tuple(sorted(out, key=_natural))


def sweep(
    design: PicDesign,
    registry: PdkRegistry,
    lam_start: float,
    lam_stop: float,
    n_points: int,
    constants: OpticalConstants | None = None,
) -> Spectrum:
    """Evaluate :func:`compose` across an ascending wavelength grid."""
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    if not lam_start < lam_stop:
        raise ValueError("require lam_start < lam_stop")
    lams = np.linspace(lam_start, lam_stop, n_points)
    per_pair: dict[tuple[str, str], list[complex]] = {}
    ports: tuple[str, ...] | None = None
    for lam in lams:
        m = compose(design, registry, float(lam), constants)
        if ports is None:
            ports = m.ports
            for a in ports:
                for b in ports:
                    per_pair[(a, b)] = []
        if m.data.size and np.max(np.abs(m.data)) > 1 + 1e-9:
            raise PassivityError(
                f"|S| = {np.max(np.abs(m.data)):.6f} > 1 at {lam:.6f} um"
            )
        for i, a in enumerate(ports):
            for j, b in enumerate(ports):
                per_pair[(a, b)].append(complex(m.data[j, i]))
    assert ports is not None
    return Spectrum(
        wavelengths=tuple(float(l) for l in lams),
        ports=ports,
        responses={k: tuple(v) for k, v in per_pair.items()},
    )


# ---------------------------------------------------------------------------
# export


def spectrum_to_csv(spec: Spectrum) -> str:
    """Wavelength plus magnitude (dB) and phase (rad) per port pair."""
    buf = io.StringIO()
    w = csv.writer(buf)
    pairs = sorted(spec.responses)
    header = ["wavelength_um"]
    for a, b in pairs:
        header += [f"{a}->{b}_mag_db", f"{a}->{b}_phase_rad"]
    w.writerow(header)
    for i, lam in enumerate(spec.wavelengths):
        row = [f"{lam:.9f}"]
        for pair in pairs:
            v = spec.responses[pair][i]
            mag = abs(v)
            db = 20 * np.log10(mag) if mag > 0 else float("-inf")
            row += [f"{db:.9f}", f"{np.angle(v):.9f}"]
        w.writerow(row)
    return buf.getvalue()


def spectrum_to_json(spec: Spectrum) -> str:
    doc = {
        "wavelengths_um": list(spec.wavelengths),
        "ports": list(spec.ports),
        "responses": {
            f"{a}->{b}": {
                "real": [v.real for v in vals],
                "imag": [v.imag for v in vals],
            }
            for (a, b), vals in sorted(spec.responses.items())
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True)
