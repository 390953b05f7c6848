"""Single-mode input states and their normally ordered moments.

Every input port carries one of five state families. Moments are exact
closed forms so that downstream correlators are bit-for-bit reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

#: Highest total order p + q served by :func:`normal_moment`.
MAX_ORDER = 8

_TWO_PI = 2.0 * math.pi


class UnsupportedOrderError(NotImplementedError):
    """Raised when a moment of unsupported order is requested."""


class ModeState:
    """Base class for single-mode states."""

    __slots__ = ()

    @property
    def is_vacuum(self) -> bool:
        raise NotImplementedError


@dataclass(frozen=True)
class Vacuum(ModeState):
    @property
    def is_vacuum(self) -> bool:
        return True


@dataclass(frozen=True)
class Fock(ModeState):
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"Fock photon number must be a nonnegative integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def is_vacuum(self) -> bool:
        return self.n == 0


@dataclass(frozen=True)
class SqueezedVacuum(ModeState):
    """Squeezed vacuum S(zeta)|0> with zeta = r * exp(i phi).

    The squeeze operator is exp(zeta* a^2 / 2 - zeta a^dag^2 / 2), so that
    ``<a^2> = -exp(i phi) sinh(r) cosh(r)`` and phi = 0 squeezes X.
    """

    r: float
    phi: float = 0.0

    def __post_init__(self):
        if not self.r >= 0:
            raise ValueError(f"squeezing amplitude must be >= 0, got {self.r!r}")
        phi = math.fmod(float(self.phi), _TWO_PI)
        if phi < 0:
            phi += _TWO_PI
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "phi", phi)

    @property
    def is_vacuum(self) -> bool:
        return self.r == 0

    @property
    def n_pair(self) -> tuple[float, complex]:
        """(<a^dag a>, <a a>)."""
        sh, ch = math.sinh(self.r), math.cosh(self.r)
        return sh * sh, -complex(math.cos(self.phi), math.sin(self.phi)) * sh * ch


@dataclass(frozen=True)
class Coherent(ModeState):
    alpha: complex

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))

    @property
    def is_vacuum(self) -> bool:
        return self.alpha == 0


@dataclass(frozen=True)
class Thermal(ModeState):
    nbar: float

    def __post_init__(self):
        if not self.nbar >= 0:
            raise ValueError(f"thermal mean photon number must be >= 0, got {self.nbar!r}")
        object.__setattr__(self, "nbar", float(self.nbar))

    @property
    def is_vacuum(self) -> bool:
        return self.nbar == 0


def _double_factorial(k: int) -> int:
    # (-1)!! = 1
    return math.prod(range(k, 0, -2)) if k > 0 else 1


def _gaussian_moment(p: int, q: int, n: float, m: complex) -> complex:
    """Normally ordered moment of a zero-mean Gaussian state by Wick pairing.

    Daggered letters pair among themselves with ``conj(m)``, plain letters
    with ``m``, and mixed pairs with ``n``.
    """
    total = 0j
    for k in range(min(p, q) + 1):
        if (p - k) % 2 or (q - k) % 2:
            continue
        count = (
            math.comb(p, k)
            * math.comb(q, k)
            * math.factorial(k)
            * _double_factorial(p - k - 1)
            * _double_factorial(q - k - 1)
        )
        total += count * n**k * m.conjugate() ** ((p - k) // 2) * m ** ((q - k) // 2)
    return total


def normal_moment(state: ModeState, p: int, q: int) -> complex:
    """Return ``<a^dag^p a^q>`` for a single-mode state."""
    if p < 0 or q < 0:
        raise ValueError("moment orders must be nonnegative")
    if p + q > MAX_ORDER:
        raise UnsupportedOrderError(f"order not implemented: p + q = {p + q} > {MAX_ORDER}")

    if isinstance(state, Vacuum):
        return 1 + 0j if p == q == 0 else 0j
    if isinstance(state, Fock):
        if p != q or p > state.n:
            return 0j
        return complex(math.perm(state.n, p))
    if isinstance(state, Coherent):
        return state.alpha.conjugate() ** p * state.alpha**q
    if isinstance(state, Thermal):
        if p != q:
            return 0j
        return complex(math.factorial(p) * state.nbar**p)
    if isinstance(state, SqueezedVacuum):
        if (p + q) % 2:
            return 0j
        n, m = state.n_pair
        return _gaussian_moment(p, q, n, m)
    raise TypeError(f"unknown state type {type(state).__name__}")


def mean_amplitude(state: ModeState) -> complex:
    """<a>; only coherent states have a nonzero field."""
    if isinstance(state, Coherent):
        return state.alpha
    return 0j


def photon_stats(state: ModeState) -> tuple[float, float]:
    """Mean and variance of the photon number."""
    mean = normal_moment(state, 1, 1).real
    variance = normal_moment(state, 2, 2).real + mean - mean * mean
    return mean, variance


@dataclass(frozen=True, eq=False)
class ProductInput:
    """Independent single-mode states on a subset of ``total_ports`` input ports.

    Ports missing from ``entries`` are vacuum.
    """

    entries: Mapping[int, ModeState]
    total_ports: int
    _key: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.total_ports < 1:
            raise ValueError("total_ports must be positive")
        entries = {}
        for port, state in self.entries.items():
            if not 0 <= port < self.total_ports:
                raise IndexError(f"port {port} out of range for {self.total_ports} ports")
            if not isinstance(state, ModeState):
                raise TypeError(f"port {port}: expected a ModeState, got {type(state).__name__}")
            entries[int(port)] = state
        entries = dict(sorted(entries.items()))
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "_key", (tuple(entries.items()), self.total_ports))

    @classmethod
    def from_states(cls, states: Sequence[ModeState], total_ports: int | None = None) -> "ProductInput":
        """Place ``states`` on ports 0, 1, ... in order."""
        total = len(states) if total_ports is None else total_ports
        return cls(dict(enumerate(states)), total)

    def __eq__(self, other):
        return isinstance(other, ProductInput) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def state(self, port: int) -> ModeState:
        if not 0 <= port < self.total_ports:
            raise IndexError(f"port {port} out of range for {self.total_ports} ports")
        return self.entries.get(port, Vacuum())

    @property
    def occupied_ports(self) -> list[int]:
        """Ports holding a non-vacuum state, ascending."""
        return [p for p, s in self.entries.items() if not s.is_vacuum]

    @property
    def is_vacuum(self) -> bool:
        return not self.occupied_ports


def joint_normal_moment(inp: ProductInput, daggered: Iterable[int], plain: Iterable[int]) -> complex:
    """``<prod a_i^dag prod a_k>`` for a product input, factorized over ports."""
    daggered, plain = list(daggered), list(plain)
    for port in daggered + plain:
        if not 0 <= port < inp.total_ports:
            raise IndexError(f"port {port} out of range for {inp.total_ports} ports")
    result = 1 + 0j
    for port in set(daggered) | set(plain):
        result *= normal_moment(inp.state(port), daggered.count(port), plain.count(port))
        if result == 0:
            return 0j
    return result
