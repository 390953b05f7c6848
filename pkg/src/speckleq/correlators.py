"""Single-realization observables of the transmitted light.

Output annihilators are ``a_out = t @ a_in``. Normally ordered quantities
only see occupied input ports. The quadrature variances add the vacuum noise
of the two output modes as a constant, which stands in for every unoccupied
port of the full unitary scattering matrix.
"""

from __future__ import annotations

import csv
import functools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .network import TransmissionMatrix
from .states import ProductInput, joint_normal_moment, mean_amplitude, normal_moment

#: Mean photon numbers at or below this are treated as "no light".
ZERO_INTENSITY = 1e-300

PHOTON_CORRELATION = "photon_correlation"
LOG10_QVP = "log10_qvp"
KINDS = (PHOTON_CORRELATION, LOG10_QVP)


class UndefinedCorrelationError(ZeroDivisionError):
    """An output mode in a photon correlation carries no light."""


def as_matrix(t) -> np.ndarray:
    return np.asarray(t.t if isinstance(t, TransmissionMatrix) else t, dtype=complex)


@dataclass(frozen=True)
class MomentTables:
    """Input moments restricted to the occupied ports."""

    ports: np.ndarray
    mu: np.ndarray  # <a_i>
    n: np.ndarray  # <a_i^dag a_j>
    var: np.ndarray  # <a_i^dag a_i> - |<a_i>|^2
    anom: np.ndarray  # <a_i a_i> - <a_i>^2
    g4: np.ndarray  # <a_i^dag a_j^dag a_k a_l>


@functools.lru_cache(maxsize=64)
def moment_tables(inp: ProductInput) -> MomentTables:
    ports = inp.occupied_ports
    m = len(ports)
    states = [inp.state(p) for p in ports]
    mu = np.array([mean_amplitude(s) for s in states], dtype=complex)
    n = np.outer(mu.conj(), mu)
    for a, s in enumerate(states):
        n[a, a] = normal_moment(s, 1, 1)
    var = np.array([n[a, a].real - abs(mu[a]) ** 2 for a in range(m)])
    anom = np.array([normal_moment(s, 0, 2) - mu[a] ** 2 for a, s in enumerate(states)], dtype=complex)
    g4 = np.zeros((m,) * 4, dtype=complex)
    for idx in np.ndindex(*g4.shape):
        i, j, k, l = (ports[x] for x in idx)
        g4[idx] = joint_normal_moment(inp, [i, j], [k, l])
    for arr in (mu, n, var, anom, g4):
        arr.setflags(write=False)
    return MomentTables(np.array(ports, dtype=int), mu, n, var, anom, g4)


def _rows(t, inp: ProductInput, *modes: int):
    t = as_matrix(t)
    if t.shape[1] != inp.total_ports:
        raise ValueError(f"matrix has {t.shape[1]} input columns, input has {inp.total_ports} ports")
    for mode in modes:
        if not 0 <= mode < t.shape[0]:
            raise IndexError(f"output mode {mode} out of range for {t.shape[0]} outputs")
    tab = moment_tables(inp)
    return tab, [t[mode, tab.ports] for mode in modes]


def intensity(rows: np.ndarray, tab: MomentTables) -> np.ndarray:
    """<n_out> for (a batch of) transmission rows over occupied ports."""
    return np.einsum("...i,ij,...j->...", rows.conj(), tab.n, rows).real


def coincidence_rows(ra: np.ndarray, rb: np.ndarray, tab: MomentTables) -> np.ndarray:
    """<a_a^dag a_b^dag a_b a_a> for (a batch of) row pairs."""
    return np.einsum("...i,...j,...k,...l,ijkl->...", ra.conj(), rb.conj(), rb, ra, tab.g4).real


def mean_photon(t, inp: ProductInput, alpha: int) -> float:
    tab, (ra,) = _rows(t, inp, alpha)
    return float(intensity(ra, tab))


def coincidence(t, inp: ProductInput, alpha: int, beta: int) -> float:
    """``<n_alpha n_beta>`` for two distinct output modes."""
    if alpha == beta:
        raise ValueError("coincidence needs two different output modes")
    tab, (ra, rb) = _rows(t, inp, alpha, beta)
    return float(coincidence_rows(ra, rb, tab))


def photon_correlation(t, inp: ProductInput, alpha: int, beta: int) -> float:
    """Normalized two-channel correlation ``<n_a n_b> / (<n_a><n_b>) - 1``."""
    if alpha == beta:
        raise ValueError("photon correlation needs two different output modes")
    tab, (ra, rb) = _rows(t, inp, alpha, beta)
    na, nb = intensity(ra, tab), intensity(rb, tab)
    if na <= ZERO_INTENSITY or nb <= ZERO_INTENSITY:
        raise UndefinedCorrelationError(
            f"no light in output mode {alpha if na <= ZERO_INTENSITY else beta}"
        )
    return float(coincidence_rows(ra, rb, tab) / (na * nb) - 1.0)


@dataclass(frozen=True)
class SecondMoments:
    """Mean-subtracted output second moments.

    ``A[a, b] = <a_a^dag a_b> - <a_a^dag><a_b>``,
    ``B[a, b] = <a_a a_b> - <a_a><a_b>``, ``mu[a] = <a_a>``.
    """

    A: np.ndarray
    B: np.ndarray
    mu: np.ndarray

    def quadrature_covariance(self) -> np.ndarray:
        """Symmetrized covariance of ``(X_1..X_M, Y_1..Y_M)`` including vacuum noise."""
        m = len(self.mu)
        eye = 0.5 * np.eye(m)
        xx = self.A.real + self.B.real + eye
        yy = self.A.real - self.B.real + eye
        xy = self.B.imag + self.A.imag
        return np.block([[xx, xy], [xy.T, yy]])


def propagate_second_moments(t, inp: ProductInput) -> SecondMoments:
    t = as_matrix(t)
    tab, _ = _rows(t, inp)
    sub = t[:, tab.ports]
    A = (sub.conj() * tab.var) @ sub.T
    B = (sub * tab.anom) @ sub.T
    return SecondMoments(A, B, sub @ tab.mu)


def pair_variances(a_aa, a_bb, a_ab, b_aa, b_bb, b_ab):
    """``(var(X_a - X_b), var(Y_a + Y_b))`` from second-moment entries."""
    var_x = 1.0 + a_aa.real + a_bb.real - 2.0 * a_ab.real + (b_aa + b_bb - 2.0 * b_ab).real
    var_y = 1.0 + a_aa.real + a_bb.real + 2.0 * a_ab.real - (b_aa + b_bb + 2.0 * b_ab).real
    return var_x, var_y


def quadrature_variances(t, inp: ProductInput, alpha: int, beta: int) -> tuple[float, float]:
    if alpha == beta:
        raise ValueError("quadrature variances need two different output modes")
    sm = propagate_second_moments(t, inp)
    return _variances_from(sm, alpha, beta)


def _variances_from(sm: SecondMoments, alpha: int, beta: int) -> tuple[float, float]:
    A, B = sm.A, sm.B
    vx, vy = pair_variances(A[alpha, alpha], A[beta, beta], A[alpha, beta], B[alpha, alpha], B[beta, beta], B[alpha, beta])
    return float(vx), float(vy)


def qvp(t, inp: ProductInput, alpha: int, beta: int) -> float:
    """Quadrature variance product; values below 1 witness entanglement."""
    vx, vy = quadrature_variances(t, inp, alpha, beta)
    return vx * vy


@dataclass
class ObservableGrid:
    """A fixed-reference slice of a two-mode observable laid out on the k-grid.

    Output mode ``index`` sits at ``(kx, ky) = divmod(index, ny)``.
    """

    values: np.ndarray
    kind: str
    reference_mode: int
    metadata: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def negative_cells(self) -> int:
        return int(np.sum(self.values[~np.isnan(self.values)] < 0))

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["kx", "ky", "value"])
            for (kx, ky), v in np.ndenumerate(self.values):
                w.writerow([kx, ky, repr(float(v))])

    def to_dict(self) -> dict:
        vals = [[None if math.isnan(v) else float(v) for v in row] for row in self.values]
        doc = {
            "kind": self.kind,
            "grid": list(self.shape),
            "reference_mode": self.reference_mode,
            "values": vals,
            "metadata": self.metadata,
        }
        if self.kind == LOG10_QVP:
            doc["negative_cells"] = self.negative_cells()
        return doc

    def to_json(self, path, **extra) -> None:
        doc = self.to_dict()
        doc.update(extra)
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def speckle_map(t, inp: ProductInput, kind: str, reference_mode: int | None = None,
                grid: tuple[int, int] = (10, 10), metadata: dict | None = None) -> ObservableGrid:
    """Observable between ``reference_mode`` and every other output mode.

    The reference defaults to the grid centre; its own cell is NaN.
    """
    nx, ny = grid
    t = as_matrix(t)
    if nx * ny != t.shape[0]:
        raise ValueError(f"grid {nx}x{ny} does not match {t.shape[0]} output modes")
    if reference_mode is None:
        reference_mode = (nx // 2) * ny + ny // 2
    if not 0 <= reference_mode < t.shape[0]:
        raise IndexError(f"reference mode {reference_mode} out of range")

    values = np.full(t.shape[0], np.nan)
    others = [b for b in range(t.shape[0]) if b != reference_mode]
    if kind == PHOTON_CORRELATION:
        for b in others:
            values[b] = photon_correlation(t, inp, reference_mode, b)
    elif kind == LOG10_QVP:
        sm = propagate_second_moments(t, inp)
        for b in others:
            vx, vy = _variances_from(sm, reference_mode, b)
            values[b] = math.log10(vx * vy)
    else:
        raise ValueError(f"unknown observable kind {kind!r}; expected one of {KINDS}")
    return ObservableGrid(values.reshape(nx, ny), kind, reference_mode, dict(metadata or {}))
