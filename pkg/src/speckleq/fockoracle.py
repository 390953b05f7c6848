"""Brute-force truncated Fock-space verifier for small systems.

States are built from their number-basis coefficients and expectation values
are obtained by applying ladder operators to explicit tensors. Nothing here
uses the closed-form moments in :mod:`speckleq.states`; the module exists to
certify them and the correlator formulas built on top.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .states import Coherent, Fock, ModeState, ProductInput, SqueezedVacuum, Thermal, Vacuum

MAX_MODES = 3
MAX_CUTOFF = 400
TAIL = 1e-12
# Off-diagonal moments see truncation at amplitude level, so pure states are
# cut where the discarded probability is ~TAIL**2; diagonal mixtures at TAIL.
_PURE_TAIL = 1e-28
_MIXED_TAIL = 1e-14


class CutoffOverflowError(RuntimeError):
    """A creation operator pushed amplitude beyond the truncated basis."""


@dataclass(frozen=True)
class TruncatedState:
    """Single-mode state on levels ``0 .. cutoff - 1``.

    Pure states have one component of weight 1. Thermal states are a
    diagonal mixture of number states, one component per level.
    """

    components: tuple[tuple[float, np.ndarray], ...]
    cutoff: int
    tail: float

    @property
    def norm(self) -> float:
        return float(sum(w * np.vdot(v, v).real for w, v in self.components))


def _basis(n: int, d: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[n] = 1.0
    return v


def _squeezed_coefficients(r: float, phi: float, levels: int) -> np.ndarray:
    c = np.zeros(levels, dtype=complex)
    x = -complex(math.cos(phi), math.sin(phi)) * math.tanh(r)
    for m in range(0, (levels + 1) // 2):
        # sqrt((2m)!) / (2^m m!) in log space to avoid overflow
        log_mag = 0.5 * math.lgamma(2 * m + 1) - m * math.log(2) - math.lgamma(m + 1)
        c[2 * m] = math.exp(log_mag) * x**m / math.sqrt(math.cosh(r))
    return c


def _coherent_coefficients(alpha: complex, levels: int) -> np.ndarray:
    c = np.zeros(levels, dtype=complex)
    amp = math.exp(-abs(alpha) ** 2 / 2)
    term = complex(amp)
    for n in range(levels):
        c[n] = term
        term *= alpha / math.sqrt(n + 1)
    return c


def _support(coeffs: np.ndarray, target: float, start: int) -> tuple[np.ndarray, float]:
    # tail beyond level d, summed over the computed coefficients
    prob = np.abs(coeffs) ** 2
    beyond = np.concatenate([np.cumsum(prob[::-1])[::-1][1:], [0.0]])
    ok = np.nonzero(beyond <= target)[0]
    ok = ok[ok + 1 >= start]
    if not len(ok) or ok[0] + 1 >= len(coeffs):
        raise ValueError(f"truncation tail {target:g} unreachable within cutoff {len(coeffs)}")
    d = int(ok[0]) + 1
    return coeffs[:d].copy(), float(beyond[d - 1])


def build_state(spec: ModeState, cutoff: int | None = None, pad: int = 4,
                max_cutoff: int = MAX_CUTOFF) -> TruncatedState:
    """Number-basis representation of ``spec``.

    ``cutoff`` is a lower bound on the number of occupied levels; it is
    raised automatically until the discarded probability is below 1e-12.
    ``pad`` empty levels are appended so creation operators have headroom.
    """
    start = max(2, cutoff or 2)

    if isinstance(spec, Vacuum):
        coeffs, tail = _basis(0, start), 0.0
    elif isinstance(spec, Fock):
        coeffs, tail = _basis(spec.n, max(start, spec.n + 1)), 0.0
    elif isinstance(spec, Coherent):
        coeffs, tail = _support(_coherent_coefficients(spec.alpha, max_cutoff), _PURE_TAIL, start)
    elif isinstance(spec, SqueezedVacuum):
        coeffs, tail = _support(_squeezed_coefficients(spec.r, spec.phi, max_cutoff), _PURE_TAIL, start)
    elif isinstance(spec, Thermal):
        ratio = spec.nbar / (1.0 + spec.nbar)
        w = np.sqrt(ratio ** np.arange(max_cutoff) / (1.0 + spec.nbar))
        w, tail = _support(w, _MIXED_TAIL, start)
        d = len(w) + pad
        comps = tuple((float(abs(x) ** 2), _basis(n, d)) for n, x in enumerate(w) if x != 0)
        return TruncatedState(comps, d, tail)
    else:
        raise TypeError(f"unknown state type {type(spec).__name__}")

    vec = np.concatenate([coeffs, np.zeros(pad, dtype=complex)])
    return TruncatedState(((1.0, vec),), len(vec), tail)


def _apply(psi: np.ndarray, mode: int, dagger: bool) -> np.ndarray:
    d = psi.shape[mode]
    out = np.zeros_like(psi)
    src = np.moveaxis(psi, mode, 0)
    dst = np.moveaxis(out, mode, 0)
    shape = (-1,) + (1,) * (psi.ndim - 1)
    if dagger:
        if np.any(src[d - 1] != 0):
            raise CutoffOverflowError(f"creation operator on mode {mode} exceeds cutoff {d}")
        dst[1:] = src[:-1] * np.sqrt(np.arange(1, d)).reshape(shape)
    else:
        dst[:-1] = src[1:] * np.sqrt(np.arange(1, d)).reshape(shape)
    return out


def oracle_expectation(states: Sequence[TruncatedState], word: Sequence[tuple[int, bool]]) -> complex:
    """Expectation of an operator word in the product of ``states``.

    ``word`` lists ``(mode, dagger)`` letters left to right, as written in the
    operator product; the rightmost letter acts first.
    """
    if not 1 <= len(states) <= MAX_MODES:
        raise ValueError(f"oracle supports 1..{MAX_MODES} modes")
    for mode, _ in word:
        if not 0 <= mode < len(states):
            raise IndexError(f"mode {mode} out of range")

    total = 0j
    for combo in itertools.product(*(s.components for s in states)):
        weight = math.prod(w for w, _ in combo)
        psi = combo[0][1]
        for _, v in combo[1:]:
            psi = np.multiply.outer(psi, v)
        phi = psi
        for mode, dagger in reversed(word):
            phi = _apply(phi, mode, dagger)
        total += weight * np.vdot(psi, phi)
    return complex(total)


def _stats_words(d: np.ndarray):
    """Words and coefficients for ``<Q^2>`` and ``<Q>`` with Q = (D + D^dag)/sqrt 2."""
    m = len(d)
    second = []
    for i, j in itertools.product(range(m), repeat=2):
        second.append((0.5 * d[i] * d[j], ((i, False), (j, False))))
        second.append((0.5 * np.conj(d[i] * d[j]), ((i, True), (j, True))))
        second.append((0.5 * d[i] * np.conj(d[j]), ((i, False), (j, True))))
        second.append((0.5 * np.conj(d[i]) * d[j], ((i, True), (j, False))))
    first = []
    for i in range(m):
        first.append((d[i] / math.sqrt(2), ((i, False),)))
        first.append((np.conj(d[i]) / math.sqrt(2), ((i, True),)))
    return second, first


def oracle_output_statistics(t, inp: ProductInput, alpha: int, beta: int):
    """Brute-force (mean_a, mean_b, coincidence, var(X_a - X_b), var(Y_a + Y_b)).

    Output operators are expanded over the occupied input ports; the
    unoccupied ports of the full unitary enter only through explicit vacuum
    constants in the quadrature variances.
    """
    t = np.asarray(getattr(t, "t", t), dtype=complex)
    ports = inp.occupied_ports
    if len(ports) > MAX_MODES:
        raise ValueError(f"oracle supports at most {MAX_MODES} occupied ports")
    if not ports:
        return 0.0, 0.0, 0.0, 1.0, 1.0

    states = [build_state(inp.state(p)) for p in ports]
    cache: dict = {}

    def ev(word):
        if word not in cache:
            cache[word] = oracle_expectation(states, word)
        return cache[word]

    ta, tb = t[alpha, ports], t[beta, ports]
    m = len(ports)
    rng = range(m)

    def mean(row):
        return sum(np.conj(row[i]) * row[l] * ev(((i, True), (l, False))) for i in rng for l in rng).real

    coinc = 0j
    for i, j, k, l in itertools.product(rng, repeat=4):
        coef = np.conj(ta[i]) * np.conj(tb[j]) * tb[k] * ta[l]
        if coef != 0:
            coinc += coef * ev(((i, True), (j, True), (k, False), (l, False)))

    def variance(d, sign):
        # Q = (D + D^dag)/sqrt2 for sign=+1; P = i(D^dag - D)/sqrt2 is Q of D' = -i D
        d = d if sign > 0 else -1j * d
        second, first = _stats_words(d)
        q2 = sum(c * ev(w) for c, w in second)
        q1 = sum(c * ev(w) for c, w in first)
        vacuum = 0.5 * (2.0 - float(np.sum(np.abs(d) ** 2)))
        return (q2 - q1 * q1).real + vacuum

    var_x = variance(ta - tb, +1)
    var_y = variance(ta + tb, -1)
    return mean(ta), mean(tb), coinc.real, var_x, var_y
