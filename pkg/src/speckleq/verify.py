"""Release-gate checks: closed forms against the Fock oracle and against each other."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import correlators as corr
from .ensemble import DiffusiveSampler, averaged_c2, averaged_qvp, contraction_c2, monte_carlo_average
from .fockoracle import build_state, oracle_expectation, oracle_output_statistics
from .network import sample_diffusive, sample_unitary
from .states import Coherent, Fock, ProductInput, SqueezedVacuum, Thermal, Vacuum, normal_moment


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


STATE_CORPUS = [
    Vacuum(), Fock(1), Fock(2), Fock(3), SqueezedVacuum(0.15, 0.0), SqueezedVacuum(0.15, math.pi),
    SqueezedVacuum(0.6, 1.1), Coherent(0.3 + 0.4j), Coherent(-1.1 + 0.2j), Thermal(0.5), Thermal(1.7),
]

INPUT_CORPUS = [
    [Fock(2)],
    [Fock(3)],
    [Fock(1), Fock(1)],
    [Fock(1), Fock(1), Fock(1)],
    [Fock(2), Fock(1)],
    [SqueezedVacuum(0.15, 0.0), SqueezedVacuum(0.15, math.pi)],
    [Coherent(0.5 + 0.2j), Fock(1)],
    [Coherent(0.4), Coherent(-0.3j)],
    [Thermal(0.8), Fock(1)],
    [Thermal(0.3), SqueezedVacuum(0.4, 0.7), Coherent(0.2 - 0.6j)],
    [SqueezedVacuum(0.3, 0.0), Vacuum(), Fock(2)],
    [Thermal(1.2)],
]


def _rel(a: complex, b: complex) -> float:
    return abs(a - b) / max(1.0, abs(b))


def check_states(moment: Callable = None, order: int = 4) -> Check:
    moment = moment or normal_moment
    worst, where = 0.0, ""
    for state in STATE_CORPUS:
        ts = build_state(state)
        for p in range(order + 1):
            for q in range(order + 1 - p):
                word = [(0, True)] * p + [(0, False)] * q
                err = _rel(moment(state, p, q), oracle_expectation([ts], word))
                if err > worst:
                    worst, where = err, f"{state} p={p} q={q}"
    return Check("states vs fockoracle", worst < 1e-10, f"max rel err {worst:.2e} ({where})")


def check_degenerate() -> Check:
    variants = [Vacuum(), Fock(0), SqueezedVacuum(0.0, 1.3), Coherent(0), Thermal(0.0)]
    ok = all(normal_moment(v, p, q) == normal_moment(Vacuum(), p, q)
             for v in variants for p in range(5) for q in range(5 - p))
    return Check("vacuum-equivalent variants", ok, "identical moment tables" if ok else "moment tables differ")


def check_correlators(seed: int = 11) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k, states in enumerate(INPUT_CORPUS):
        inp = ProductInput.from_states(states, total_ports=3)
        t = sample_unitary(3, seed + k).t if k % 2 else rng.uniform(-1, 1, (3, 3)) * np.exp(2j * np.pi * rng.random((3, 3))) / 2
        ora = oracle_output_statistics(t, inp, 0, 1)
        ours = (corr.mean_photon(t, inp, 0), corr.mean_photon(t, inp, 1), corr.coincidence(t, inp, 0, 1),
                *corr.quadrature_variances(t, inp, 0, 1))
        worst = max(worst, max(abs(a - b) for a, b in zip(ours, ora)))
    return Check("correlators vs fockoracle", worst < 1e-8, f"max abs err {worst:.2e}")


def check_fock_law(seed: int = 5) -> Check:
    worst = 0.0
    for n in range(1, 6):
        inp = ProductInput({3: Fock(n)}, 10)
        t = sample_diffusive(6, 10, 1 / 300, (seed, n))
        for a, b in [(0, 1), (2, 5), (4, 3)]:
            worst = max(worst, abs(corr.photon_correlation(t, inp, a, b) + 1.0 / n))
    return Check("single-port Fock law C = -1/n", worst < 1e-12, f"max dev {worst:.2e}")


def check_conservation(seed: int = 3) -> Check:
    worst = 0.0
    for k, states in enumerate(INPUT_CORPUS):
        inp = ProductInput.from_states(states, total_ports=4)
        u = sample_unitary(4, seed + k)
        out = sum(corr.mean_photon(u, inp, a) for a in range(4))
        inn = sum(normal_moment(inp.state(i), 1, 1).real for i in range(4))
        worst = max(worst, abs(out - inn))
    return Check("unitary photon conservation", worst < 1e-10, f"max dev {worst:.2e}")


def check_contraction() -> Check:
    worst = 0.0
    for states in INPUT_CORPUS:
        inp = ProductInput.from_states(states)
        for c1, c2 in [(1.0, 0.0), (1.0, 1.0), (0.8, 0.3), (1.0, 0.05)]:
            worst = max(worst, abs(averaged_c2(inp, c1, c2) - contraction_c2(inp, c1, c2)))
    return Check("closed form vs contraction engine", worst < 1e-10, f"max dev {worst:.2e}")


def check_limits() -> Check:
    worst = 0.0
    for n in range(2, 11):
        inp = ProductInput.from_states([Fock(1)] * n)
        worst = max(worst, abs(averaged_c2(inp, 1.0, 1.0) - (n - 3) / (n + 1)))
        worst = max(worst, abs(averaged_c2(ProductInput.from_states([Fock(n)]), 0.7, 0.4) + 1.0 / n))
    return Check("localized-limit values", worst < 1e-12, f"max dev {worst:.2e}")


def check_monte_carlo(realizations: int = 20_000, seed: int = 99) -> Check:
    tau = 1 / 300
    zs = []
    cases = [
        (ProductInput.from_states([Fock(1), Fock(1)]), "c2"),
        (ProductInput.from_states([Fock(1), Fock(1), Fock(1)]), "c2"),
        (ProductInput.from_states([SqueezedVacuum(0.15, 0.0), SqueezedVacuum(0.15, math.pi)]), "qvp"),
    ]
    for inp, stat in cases:
        res = monte_carlo_average(inp, DiffusiveSampler(tau), stat, realizations, seed)
        ref = averaged_c2(inp, 1.0, 0.0) if stat == "c2" else averaged_qvp(inp, tau, 1.0, 0.0)
        zs.append((res.mean - ref) / res.stderr)
    worst = max(abs(z) for z in zs)
    return Check("Monte Carlo vs closed form", worst < 5, "z-scores " + ", ".join(f"{z:+.2f}" for z in zs))


def run_verification(moment: Callable | None = None, mc_realizations: int = 20_000) -> list[Check]:
    return [
        check_states(moment),
        check_degenerate(),
        check_correlators(),
        check_fock_law(),
        check_conservation(),
        check_contraction(),
        check_limits(),
        check_monte_carlo(mc_realizations),
    ]


def format_report(checks: list[Check]) -> str:
    width = max(len(c.name) for c in checks)
    lines = [f"{'check':<{width}}  result  detail", "-" * (width + 30)]
    for c in checks:
        lines.append(f"{c.name:<{width}}  {'PASS' if c.passed else 'FAIL':<6}  {c.detail}")
    return "\n".join(lines)
