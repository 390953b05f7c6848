"""Transmission-matrix samplers and the (C1, C2, g) correlation model."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

Seed = Union[int, Sequence[int], np.random.SeedSequence]


class DomainError(ValueError):
    """Disorder strength outside the range a correlation model covers."""


def make_rng(seed: Seed) -> np.random.Generator:
    """PCG64 generator for an integer seed, an integer tuple or a SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def substream(master_seed: int, index: int) -> np.random.SeedSequence:
    """Independent stream for realization ``index`` of a run seeded ``master_seed``."""
    return np.random.SeedSequence(master_seed, spawn_key=(index,))


@dataclass(frozen=True)
class TransmissionMatrix:
    """Complex block ``t[alpha, i]`` (outputs x inputs) of one disorder realization."""

    t: np.ndarray
    tau: float
    provenance: dict = field(default_factory=dict)

    @property
    def m_out(self) -> int:
        return self.t.shape[0]

    @property
    def m_in(self) -> int:
        return self.t.shape[1]


def _seed_tag(seed: Seed):
    if isinstance(seed, np.random.SeedSequence):
        return {"entropy": seed.entropy, "spawn_key": list(seed.spawn_key)}
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    return [int(s) for s in seed]


def diffusive_entries(rng: np.random.Generator, shape, tau: float) -> np.ndarray:
    """Exponential intensities with mean ``tau`` and uniform phases."""
    intensity = rng.exponential(tau, size=shape)
    phase = rng.uniform(0.0, 2.0 * math.pi, size=shape)
    return np.sqrt(intensity) * np.exp(1j * phase)


def sample_diffusive(m_out: int, m_in: int, tau: float, seed: Seed) -> TransmissionMatrix:
    """I.i.d. diffusive-transport matrix: ``|t|^2 ~ Exp(tau)``, phase uniform."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau!r}")
    if m_out < 1 or m_in < 1:
        raise ValueError("matrix dimensions must be at least 1")
    t = diffusive_entries(make_rng(seed), (m_out, m_in), tau)
    return TransmissionMatrix(t, float(tau), {"sampler": "diffusive", "seed": _seed_tag(seed)})


def sample_unitary(n: int, seed: Seed) -> TransmissionMatrix:
    """Haar-random ``n x n`` unitary.

    QR of a complex Ginibre matrix, with each column of Q multiplied by the
    phase of the matching diagonal entry of R so that R has a positive
    diagonal.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = make_rng(seed)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return TransmissionMatrix(q, 1.0 / n, {"sampler": "unitary", "seed": _seed_tag(seed)})


class CorrelationModel:
    """Short-range C1, long-range C2 and conductance g versus s = L / l."""

    def values(self, s: float) -> tuple[float, float, float]:
        raise NotImplementedError

    def c1(self, s: float) -> float:
        return self.values(s)[0]

    def c2(self, s: float) -> float:
        return self.values(s)[1]

    def g(self, s: float) -> float:
        return self.values(s)[2]


@dataclass(frozen=True)
class AnalyticModel(CorrelationModel):
    """Default parametric model pinned to two disorder anchors.

    ``g = N / (1 + (N - 1) s / s_loc)`` reaches 1 at ``s_loc``;
    ``C1 = 1``; ``C2 = 2 / (3 g) * max(0, 1 - s_meso / s)``, capped at C1.
    C2 therefore vanishes up to ``s_meso`` and saturates at C1 deep in the
    localized regime.
    """

    n_modes: int
    s_meso: float = 2.0
    s_loc: float = 40.0

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("n_modes must be positive")
        if not 0 < self.s_meso < self.s_loc:
            raise ValueError("anchors must satisfy 0 < s_meso < s_loc")

    def values(self, s: float) -> tuple[float, float, float]:
        if not (s >= 0 and math.isfinite(s)):
            raise DomainError(f"s = {s!r} outside analytic model domain [0, inf)")
        g = self.n_modes / (1.0 + (self.n_modes - 1) * s / self.s_loc)
        c1 = 1.0
        c2 = 0.0 if s <= self.s_meso else min(c1, 2.0 / (3.0 * g) * (1.0 - self.s_meso / s))
        return c1, c2, g


@dataclass(frozen=True)
class TabulatedModel(CorrelationModel):
    """Piecewise-linear model from a table of ``(s, C1, C2, g)`` rows."""

    s: np.ndarray
    c1_table: np.ndarray
    c2_table: np.ndarray
    g_table: np.ndarray
    source: str = ""

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        if s.ndim != 1 or len(s) < 2:
            raise ValueError("tabulated model needs at least 2 rows")
        if np.any(np.diff(s) <= 0):
            raise ValueError("tabulated s values must be strictly increasing")
        for name in ("c1_table", "c2_table", "g_table"):
            col = np.asarray(getattr(self, name), dtype=float)
            if col.shape != s.shape:
                raise ValueError(f"{name} length does not match s")
            object.__setattr__(self, name, col)
        object.__setattr__(self, "s", s)

    def values(self, s: float) -> tuple[float, float, float]:
        if not self.s[0] <= s <= self.s[-1]:
            raise DomainError(f"s = {s!r} outside tabulated range [{self.s[0]}, {self.s[-1]}]")
        return tuple(float(np.interp(s, self.s, col)) for col in (self.c1_table, self.c2_table, self.g_table))


def load_tabulated(path) -> TabulatedModel:
    """Read a CSV with header ``s,C1,C2,g``."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["s", "C1", "C2", "g"]:
            raise ValueError(f"{path}:1: expected header 's,C1,C2,g', got {header!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 columns, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if len(rows) < 2:
        raise ValueError(f"{path}: tabulated model needs at least 2 rows")
    table = np.array(rows)
    return TabulatedModel(table[:, 0], table[:, 1], table[:, 2], table[:, 3], source=str(path))


def correlation_values(model: CorrelationModel, s: float) -> tuple[float, float, float]:
    """(C1, C2, g) at disorder strength ``s``."""
    return model.values(s)
