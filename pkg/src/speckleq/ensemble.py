"""Disorder-averaged correlations: closed forms, contraction engine, Monte Carlo.

The averaged fourth moment of transmission amplitudes between two distinct
outputs is ``tau^2 (C1 d_il d_jk + C2 d_ik d_jl)`` for the index pattern
``t*_ai t*_bj t_bk t_al``. Contracting that pattern against the input
moments gives the averaged coincidence, split by diagram type.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .correlators import (
    ZERO_INTENSITY,
    coincidence_rows,
    intensity,
    moment_tables,
    pair_variances,
)
from .network import CorrelationModel, DomainError, diffusive_entries, make_rng, substream
from .states import ProductInput, joint_normal_moment, mean_amplitude, photon_stats

STATISTICS = ("c2", "qvp")
CHUNK = 2048


@dataclass(frozen=True)
class DiagramBreakdown:
    intensity_a: float
    intensity_b: float
    interference_c: float

    @property
    def total(self) -> float:
        return self.intensity_a + self.intensity_b + self.interference_c


@dataclass(frozen=True)
class EnsembleCurvePoint:
    s: float
    c1: float
    c2: float
    g: float
    tau: float
    cbar: float
    log10_qvp_bar: float


def _pattern_weights(c1: float, c2: float):
    """Nonzero ``(i, j, k, l) -> weight`` entries of the averaged fourth moment / tau^2."""

    def weight(i, j, k, l):
        return c1 * (i == l and j == k) + c2 * (i == k and j == l)

    return weight


def averaged_coincidence_contraction(inp: ProductInput, c1: float, c2: float, tau: float) -> DiagramBreakdown:
    """Average ``<n_a n_b>`` by contracting every index quadruple with the delta patterns."""
    ports = inp.occupied_ports
    weight = _pattern_weights(c1, c2)
    a = b = c = 0.0
    for i, j, k, l in itertools.product(ports, repeat=4):
        if i == j:
            w = weight(i, j, k, l)
            if w:
                a += w * joint_normal_moment(inp, [i, j], [k, l]).real
        else:
            if i == l and j == k:
                b += c1 * joint_normal_moment(inp, [i, j], [k, l]).real
            if i == k and j == l:
                c += c2 * joint_normal_moment(inp, [i, j], [k, l]).real
    scale = tau * tau
    return DiagramBreakdown(scale * a, scale * b, scale * c)


def averaged_intensity_product_contraction(inp: ProductInput, c1: float, c2: float, tau: float) -> float:
    """Average ``<n_a><n_b>`` with the same fourth-moment contraction."""
    ports = inp.occupied_ports
    weight = _pattern_weights(c1, c2)
    total = 0.0
    for i, j, k, l in itertools.product(ports, repeat=4):
        w = weight(i, j, k, l)
        if w:
            total += w * (joint_normal_moment(inp, [i], [l]) * joint_normal_moment(inp, [j], [k])).real
    return tau * tau * total


def contraction_c2(inp: ProductInput, c1: float, c2: float) -> float:
    """Averaged correlation reassembled from the two contractions."""
    num = averaged_coincidence_contraction(inp, c1, c2, 1.0).total
    den = averaged_intensity_product_contraction(inp, c1, c2, 1.0)
    if den <= 0:
        raise ZeroDivisionError("averaged intensity product vanishes")
    return num / den - 1.0


def averaged_c2(inp: ProductInput, c1: float, c2: float) -> float:
    """Closed-form ensemble-averaged two-channel correlation."""
    states = [inp.state(p) for p in inp.occupied_ports]
    stats = [photon_stats(s) for s in states]
    means = [m for m, _ in stats]
    total = sum(means)
    excess = sum(v - m for m, v in stats)
    mu = [mean_amplitude(s) for s in states]
    cross = sum(abs(mu[i].conjugate() * mu[j]) ** 2 for i in range(len(mu)) for j in range(i + 1, len(mu)))
    num = (c1 + c2) * (total * total + excess)
    den = c1 * total * total + c2 * (sum(m * m for m in means) + 2.0 * cross)
    if den <= 0:
        raise ZeroDivisionError("no photons in the input (or C1 = C2 = 0)")
    return num / den - 1.0


def averaged_qvp(inp: ProductInput, tau: float, c1: float, c2: float) -> float:
    """Closed-form ensemble-averaged quadrature variance product."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    tab = moment_tables(inp)
    delta = tab.n - np.outer(tab.mu.conj(), tab.mu)
    trace = float(np.trace(delta).real)
    loop = float(np.einsum("ij,ji->", delta, delta).real)
    return 1.0 + 4.0 * tau * trace + 4.0 * tau * tau * (c1 * trace * trace + c2 * loop)


def sweep(inp: ProductInput, model: CorrelationModel, n_modes: int, s_values: Iterable[float]) -> list[EnsembleCurvePoint]:
    """Averaged correlation and log10 QVP along a disorder sweep, with tau = g / N^2."""
    points = []
    for s in s_values:
        try:
            c1, c2, g = model.values(s)
        except DomainError as exc:
            raise DomainError(f"sweep point s = {s}: {exc}") from None
        tau = g / n_modes**2
        cbar = averaged_c2(inp, c1, c2) if not inp.is_vacuum else math.nan
        points.append(EnsembleCurvePoint(float(s), c1, c2, g, tau, cbar, math.log10(averaged_qvp(inp, tau, c1, c2))))
    return points


@dataclass(frozen=True)
class DiffusiveSampler:
    """Recipe for the per-realization diffusive matrix used by the Monte Carlo harness."""

    tau: float
    m_out: int = 2
    m_in: int | None = None


@dataclass(frozen=True)
class MonteCarloResult:
    mean: float
    stderr: float
    n: int
    degenerate: int
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


def _chunk(args):
    inp, sampler, statistic, seed, start, stop, alpha, beta = args
    tab = moment_tables(inp)
    m_in = sampler.m_in or inp.total_ports
    rows = np.empty((stop - start, 2, len(tab.ports)), dtype=complex)
    for r, idx in enumerate(range(start, stop)):
        t = diffusive_entries(make_rng(substream(seed, idx)), (sampler.m_out, m_in), sampler.tau)
        rows[r, 0] = t[alpha, tab.ports]
        rows[r, 1] = t[beta, tab.ports]
    ra, rb = rows[:, 0], rows[:, 1]
    if statistic == "c2":
        na, nb = intensity(ra, tab), intensity(rb, tab)
        return coincidence_rows(ra, rb, tab), na * nb, (na <= ZERO_INTENSITY) | (nb <= ZERO_INTENSITY)

    def a(x, y):
        return np.einsum("ri,i,ri->r", x.conj(), tab.var, y)

    def b(x, y):
        return np.einsum("ri,i,ri->r", x, tab.anom, y)

    vx, vy = pair_variances(a(ra, ra), a(rb, rb), a(ra, rb), b(ra, ra), b(rb, rb), b(ra, rb))
    return vx * vy, None, None


def monte_carlo_average(inp: ProductInput, sampler: DiffusiveSampler, statistic: str, realizations: int,
                        master_seed: int, alpha: int = 0, beta: int = 1, workers: int = 1) -> MonteCarloResult:
    """Average a single-realization statistic over freshly sampled diffusive matrices.

    Realization ``k`` always draws from substream ``(master_seed, k)`` and the
    work is split into fixed-size chunks, so the result does not depend on
    ``workers``. For ``c2`` the coincidence and the intensity product are
    averaged separately and divided once; the standard error comes from the
    delta method for a ratio of means.
    """
    if statistic not in STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}; expected one of {STATISTICS}")
    if realizations < 2:
        raise ValueError("need at least 2 realizations")
    if alpha == beta:
        raise ValueError("alpha and beta must differ")
    m_in = sampler.m_in or inp.total_ports
    if m_in != inp.total_ports:
        raise ValueError("sampler input dimension must equal the number of input ports")
    if not (0 <= alpha < sampler.m_out and 0 <= beta < sampler.m_out):
        raise IndexError("output modes out of range for sampler")
    if statistic == "c2" and inp.is_vacuum:
        raise ValueError("photon correlation of an all-vacuum input is undefined")

    bounds = [(s, min(s + CHUNK, realizations)) for s in range(0, realizations, CHUNK)]
    jobs = [(inp, sampler, statistic, master_seed, lo, hi, alpha, beta) for lo, hi in bounds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk, jobs))
    else:
        parts = [_chunk(j) for j in jobs]

    first = np.concatenate([p[0] for p in parts])
    if statistic == "qvp":
        n = len(first)
        mean = math.fsum(first) / n
        var = math.fsum((first - mean) ** 2) / (n - 1)
        return MonteCarloResult(mean, math.sqrt(var / n), n, 0, master_seed)

    second = np.concatenate([p[1] for p in parts])
    bad = np.concatenate([p[2] for p in parts])
    keep = ~bad
    n = int(keep.sum())
    if n < 2:
        raise RuntimeError(f"{int(bad.sum())} of {realizations} realizations had a dark output mode")
    num, den = first[keep], second[keep]
    num_bar, den_bar = math.fsum(num) / n, math.fsum(den) / n
    ratio = num_bar / den_bar
    resid = num - ratio * den
    var = math.fsum(resid * resid) / (n - 1)
    return MonteCarloResult(ratio - 1.0, math.sqrt(var / n) / den_bar, n, int(bad.sum()), master_seed)
