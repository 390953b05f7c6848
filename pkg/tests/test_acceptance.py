"""Acceptance criteria. Run with ``pytest tests/test_acceptance.py -s`` to see one line per criterion."""
import itertools
import math
import time

import numpy as np
from scipy import stats

from speckleq.cli import main
from speckleq.config import PRESETS, build_config, make_input
from speckleq.correlators import coincidence, photon_correlation, qvp, speckle_map
from speckleq.ensemble import (
    DiffusiveSampler,
    averaged_c2,
    averaged_qvp,
    contraction_c2,
    monte_carlo_average,
)
from speckleq.fockoracle import oracle_output_statistics
from speckleq.network import sample_diffusive
from speckleq.states import Coherent, Fock, ProductInput, SqueezedVacuum, Thermal, Vacuum

TAU = 1 / 300
SQZ_PAIR = ProductInput.from_states([SqueezedVacuum(0.15, 0), SqueezedVacuum(0.15, math.pi)])


def report(number, name, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} criterion {number:2d} {name}: {detail}")
    assert ok, detail


def singles(n):
    return ProductInput.from_states([Fock(1)] * n)


def test_01_fock_constancy():
    start = time.perf_counter()
    inp = ProductInput({0: Fock(2)}, 100)
    worst = 0.0
    for seed in range(100):
        t = sample_diffusive(100, 100, TAU, seed).t
        worst = max(worst, abs(photon_correlation(t, inp, 3, 71) + 0.5))
    pairs = [(1, 0), (1, 1), (0.5, 0.2), (2, 3), (1, 1e-9)]
    closed = max(abs(averaged_c2(inp, c1, c2) + 0.5) for c1, c2 in pairs)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and closed <= 1e-12 and elapsed < 1
    report(1, "Fock constancy", ok, f"max dev {worst:.1e}, closed form dev {closed:.1e}, {elapsed:.2f} s")


def test_02_diffusive_limit_average():
    start = time.perf_counter()
    res = monte_carlo_average(singles(2), DiffusiveSampler(TAU), "c2", 100_000, 2024, workers=4)
    elapsed = time.perf_counter() - start
    z = (res.mean + 0.5) / res.stderr
    closed = averaged_c2(singles(2), 1.0, 0.0)
    ok = abs(z) < 5 and closed == -0.5 and elapsed < 60
    report(2, "diffusive-limit average", ok,
           f"MC {res.mean:.5f} +/- {res.stderr:.5f} (z = {z:.2f}), closed form {closed}, {elapsed:.1f} s")


def test_03_localized_limit():
    devs = [abs(averaged_c2(singles(n), 1.0, 1.0) - (n - 3) / (n + 1)) for n in range(2, 11)]
    named = (abs(averaged_c2(singles(2), 1, 1) + 1 / 3), abs(averaged_c2(singles(3), 1, 1)))
    trend = [averaged_c2(singles(n), 1, 1) for n in (3, 10, 100, 1000)]
    rising = all(a < b < 1 for a, b in zip(trend, trend[1:])) and trend[-1] > 0.99
    ok = max(devs) <= 1e-12 and max(named) <= 1e-12 and rising
    report(3, "localized-limit values", ok, f"max dev {max(devs + list(named)):.1e}, n=1000 gives {trend[-1]:.4f}")


def test_04_qi_signature():
    pairs = [(1, 0), (1, 0.25), (1, 1), (0.6, 0.6), (2, 0.1)]
    fock_dev = max(abs(averaged_c2(ProductInput.from_states([Fock(n)]), c1, c2) + 1 / n)
                   for n in (2, 3, 4) for c1, c2 in pairs)
    spread = min(max(averaged_c2(singles(n), c1, c2) for c1, c2 in pairs)
                 - min(averaged_c2(singles(n), c1, c2) for c1, c2 in pairs) for n in (2, 3, 4))
    coincide = max(abs(averaged_c2(singles(n), 1, 0) - averaged_c2(ProductInput.from_states([Fock(n)]), 1, 0))
                   for n in (2, 3))
    ok = fock_dev <= 1e-12 and coincide <= 1e-12 and spread > 0.1
    report(4, "QI signature", ok, f"|n> dev {fock_dev:.1e}, singles spread {spread:.3f}, C2=0 gap {coincide:.1e}")


def test_05_hom_null():
    bs = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    inp = singles(2)
    coinc = coincidence(bs, inp, 0, 1)
    c = photon_correlation(bs, inp, 0, 1)
    oracle = oracle_output_statistics(bs, inp, 0, 1)[2]
    ok = abs(coinc) <= 1e-12 and abs(c + 1) <= 1e-12 and abs(oracle - coinc) <= 1e-8
    report(5, "HOM null", ok, f"coincidence {coinc:.1e}, C = {c:.12f}, oracle {oracle:.1e}")


def test_06_entanglement_witness():
    start = time.perf_counter()
    t = np.array([[1, 1], [-1, 1]]) / math.sqrt(2)
    eps = qvp(t, SQZ_PAIR, 0, 1)
    *_, vx, vy = oracle_output_statistics(t, SQZ_PAIR, 0, 1)
    cfg = build_config(overrides={"command": "speckle", "preset": "fig3b"})
    inp = make_input(cfg, cfg.inputs, cfg.n_modes, "inputs")
    entangled = 0
    for seed in range(50):
        tm = sample_diffusive(100, cfg.n_modes, cfg.tau, seed).t
        if speckle_map(tm, inp, "log10_qvp", grid=cfg.grid).negative_cells() > 0:
            entangled += 1
    elapsed = time.perf_counter() - start
    ok = (abs(eps - math.exp(-0.6)) <= 1e-9 and abs(round(eps, 6) - 0.548812) < 1e-12
          and abs(vx * vy - eps) <= 1e-8 and entangled >= 1 and elapsed < 30)
    report(6, "entanglement witness", ok,
           f"eps {eps:.9f}, oracle gap {abs(vx * vy - eps):.1e}, {entangled}/50 seeds entangled, {elapsed:.1f} s")


def test_07_ensemble_qvp():
    inputs = [SQZ_PAIR, ProductInput.from_states([Fock(2), Thermal(0.7)]),
              ProductInput.from_states([SqueezedVacuum(1.2, 2.0), Vacuum(), Fock(1)]), singles(3)]
    grid = itertools.product(np.logspace(-4, 0, 9), np.linspace(0, 2, 5), np.linspace(0, 2, 5))
    lowest = min(averaged_qvp(inp, tau, c1, c2) for tau, c1, c2 in grid for inp in inputs)
    value = averaged_qvp(SQZ_PAIR, TAU, 1.0, 0.0)
    taus = np.logspace(-2, -14, 50)
    limit = np.array([averaged_qvp(SQZ_PAIR, tau, 1.0, 0.0) for tau in taus])
    monotone = bool(np.all(limit > 1) and np.all(np.diff(limit) < 0) and limit[-1] - 1 < 1e-12)
    ok = lowest >= 1 and abs(value - 1.000604) <= 1e-6 and monotone
    report(7, "ensemble QVP", ok, f"min over grid {lowest:.6f}, preset {value:.7f}, tau->0 monotone {monotone}")


def test_08_closed_form_matches_contraction():
    corpus = [
        [Fock(2)], [Fock(3)], [Fock(1), Fock(1)], [Fock(1)] * 4, [Fock(2), Fock(1)],
        [SqueezedVacuum(0.15, 0), SqueezedVacuum(0.15, math.pi)], [SqueezedVacuum(0.7, 2.1), Fock(1)],
        [Coherent(0.5 + 0.2j), Fock(1)], [Coherent(0.4), Coherent(-0.3j), Coherent(1.0)],
        [Thermal(0.8), Fock(1)], [Thermal(0.3), SqueezedVacuum(0.4, 0.7), Coherent(0.2 - 0.6j)],
        [Thermal(1.2), Thermal(0.1)],
    ]
    pairs = [(1.0, 0.0), (1.0, 1.0), (0.7, 0.2), (1.3, 0.05)]
    worst = max(abs(averaged_c2(ProductInput.from_states(s), c1, c2) - contraction_c2(ProductInput.from_states(s), c1, c2))
                for s in corpus for c1, c2 in pairs)
    ok = len(corpus) >= 10 and worst <= 1e-10
    report(8, "closed form vs contraction", ok, f"{len(corpus)} inputs, max dev {worst:.1e}")


def test_09_statistical_model():
    n = 100_000
    samples = np.array([sample_diffusive(2, 2, TAU, (9, k)).t for k in range(n)])
    ta, tb = samples[:, 0], samples[:, 1]
    worst = 0.0
    for i, j, k, l in itertools.product(range(2), repeat=4):
        x = ta[:, i].conj() * tb[:, j].conj() * tb[:, k] * ta[:, l] / TAU**2
        z = abs(x.mean() - float(i == l and j == k)) / (x.std(ddof=1) / math.sqrt(n))
        worst = max(worst, z)
    pvalue = stats.kstest((np.abs(samples) ** 2 / TAU).ravel()[:n], "expon").pvalue
    ok = worst < 5 and pvalue > 0.01
    report(9, "statistical model", ok, f"max |z| {worst:.2f} over 16 index patterns, KS p = {pvalue:.3f}")


def test_10_reproducibility(tmp_path):
    runs = [["speckle", "--preset", "fig3a"], ["speckle", "--preset", "fig3b"], ["sweep", "--preset", "fig4"],
            ["mc", "--preset", "mc11", "--realizations", "20000"], ["mc", "--preset", "mcsqz", "--realizations", "5000"]]
    outputs = {}
    for workers in (1, 4, 8):
        for r, args in enumerate(runs):
            out = tmp_path / f"w{workers}" / str(r)
            assert main(args + ["--seed", "31", "--workers", str(workers), "--out", str(out)]) == 0
        outputs[workers] = {p.relative_to(tmp_path / f"w{workers}"): p.read_bytes()
                            for p in sorted((tmp_path / f"w{workers}").rglob("*")) if p.is_file()}
    ok = outputs[1] == outputs[4] == outputs[8] and len(outputs[1]) > 0
    report(10, "reproducibility", ok, f"{len(outputs[1])} files byte-identical at 1, 4 and 8 workers")

