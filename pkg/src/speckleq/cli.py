"""Command-line entry point ``speckleq``.

Exit codes: 0 ok, 2 configuration error, 3 degenerate run, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
from pathlib import Path

from . import __version__
from .config import EXPERIMENTS, PRESETS, ConfigError, RunConfig, build_config, input_spec, load_config_file, make_input
from .correlators import UndefinedCorrelationError, speckle_map
from .ensemble import DiffusiveSampler, averaged_c2, averaged_qvp, monte_carlo_average, sweep
from .network import AnalyticModel, DomainError, load_tabulated, sample_diffusive
from .verify import format_report, run_verification

EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_VERIFY = 0, 2, 3, 4

SWEEP_HEADER = ["s", "C1", "C2", "g", "tau", "cbar", "log10_qvp_bar"]


class DegenerateRunError(RuntimeError):
    pass


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _finite(x: float):
    return x if math.isfinite(x) else None


def _provenance(cfg: RunConfig) -> dict:
    return {"speckleq_version": __version__, "config": cfg.resolved(), "seed": cfg.seed}


def run_speckle(cfg: RunConfig) -> list[Path]:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    inp = make_input(cfg, cfg.inputs, cfg.n_modes, "inputs")
    m_out = cfg.grid[0] * cfg.grid[1]
    t = sample_diffusive(m_out, cfg.n_modes, cfg.tau, cfg.seed)
    meta = {"seed": cfg.seed, "tau": cfg.tau, "input": input_spec(inp)}
    written = []
    for kind in cfg.kinds:
        try:
            grid = speckle_map(t, inp, kind, cfg.reference_mode, cfg.grid, metadata=meta)
        except UndefinedCorrelationError as exc:
            raise DegenerateRunError(f"{kind}: {exc}") from None
        except (IndexError, ValueError) as exc:
            raise cfg.error("reference_mode" if isinstance(exc, IndexError) else "grid", str(exc)) from None
        csv_path, json_path = out / f"speckle_{kind}.csv", out / f"speckle_{kind}.json"
        grid.to_csv(csv_path)
        grid.to_json(json_path, provenance=_provenance(cfg))
        written += [csv_path, json_path]
    return written


def _load_model(cfg: RunConfig):
    if cfg.model == "analytic":
        try:
            return AnalyticModel(cfg.n_modes, cfg.s_meso, cfg.s_loc)
        except ValueError as exc:
            raise cfg.error("anchors", str(exc)) from None
    try:
        return load_tabulated(cfg.model)
    except OSError as exc:
        raise cfg.error("model", f"cannot read tabulated model {cfg.model!r}: {exc.strerror}") from None
    except ValueError as exc:
        raise cfg.error("model", str(exc)) from None


def _label(spec) -> str:
    tokens = spec.values() if isinstance(spec, dict) else spec
    return "_".join(re.sub(r"[^A-Za-z0-9.]+", "", str(t).replace(":", "")) for t in tokens) or "vacuum"


def run_sweep(cfg: RunConfig) -> list[Path]:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    model = _load_model(cfg)
    s_values = list(cfg.s_values)

    # rows nearest each experimental structure
    annotations = []
    for name, exp in EXPERIMENTS.items():
        row = min(range(len(s_values)), key=lambda i: abs(s_values[i] - exp["s"]))
        annotations.append({"preset": name, "s": exp["s"], "native_N": exp["N"], "note": exp["note"],
                            "row": row, "row_s": s_values[row]})

    written, sets, errors = [], [], []
    for k, spec in enumerate(cfg.input_sets):
        inp = make_input(cfg, spec, None, "input_sets")
        rows = []
        for s in s_values:
            try:
                (p,) = sweep(inp, model, cfg.n_modes, [s])
            except DomainError as exc:
                errors.append({"input_set": k, "s": s, "error": str(exc)})
                continue
            rows.append(p)
        path = out / f"sweep_{k:02d}_{_label(spec)}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SWEEP_HEADER)
            for p in rows:
                w.writerow([repr(float(x)) for x in (p.s, p.c1, p.c2, p.g, p.tau, p.cbar, p.log10_qvp_bar)])
        sets.append({"file": path.name, "input": input_spec(inp), "rows": len(rows)})
        written.append(path)

    for err in errors:
        print(f"sweep: {err['error']}", file=sys.stderr)
    if errors and not any(s["rows"] for s in sets):
        raise cfg.error("s_values", "no sweep point inside the model domain")
    doc = {"provenance": _provenance(cfg), "model": model.source if hasattr(model, "source") else "analytic",
           "input_sets": sets, "annotations": annotations, "errors": errors, "header": SWEEP_HEADER}
    meta = out / "sweep.json"
    _write_json(meta, doc)
    return written + [meta]


def run_mc(cfg: RunConfig, workers: int = 1) -> list[Path]:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    inp = make_input(cfg, cfg.inputs, cfg.n_modes, "inputs")
    sampler = DiffusiveSampler(cfg.tau)
    try:
        res = monte_carlo_average(inp, sampler, cfg.statistic, cfg.realizations, cfg.seed, workers=workers)
    except RuntimeError as exc:
        raise DegenerateRunError(str(exc)) from None
    except ValueError as exc:
        raise cfg.error("inputs", str(exc)) from None
    if cfg.statistic == "c2":
        closed = averaged_c2(inp, 1.0, 0.0)
    else:
        closed = averaged_qvp(inp, cfg.tau, 1.0, 0.0)
    z = (res.mean - closed) / res.stderr if res.stderr > 0 else (0.0 if res.mean == closed else None)
    doc = res.to_dict()
    doc.update({"statistic": cfg.statistic, "closed_form": closed, "z_score": _finite(z) if z is not None else None,
                "input": input_spec(inp), "tau": cfg.tau, "provenance": _provenance(cfg)})
    path = out / "mc.json"
    _write_json(path, doc)
    return [path]


def run_verify(cfg: RunConfig) -> bool:
    checks = run_verification(mc_realizations=min(cfg.realizations, 20_000))
    print(format_report(checks))
    if cfg.out and cfg.out != ".":
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "verify.json", {"checks": [c.__dict__ for c in checks]})
    failed = [c.name for c in checks if not c.passed]
    if failed:
        print("FAILED: " + ", ".join(failed), file=sys.stderr)
    return not failed


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="speckleq", description="Quantum light through random scattering media.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=["speckle", "sweep", "mc", "verify"])
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--realizations", type=int)
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--model", help="'analytic' or a CSV table with header s,C1,C2,g")
    p.add_argument("--workers", type=int, help="processes for Monte Carlo (results do not depend on it)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        data, lines, source = {}, {}, None
        if args.config:
            data, lines = load_config_file(args.config)
            source = args.config
        overrides = {"command": args.command, "seed": args.seed, "out": args.out, "realizations": args.realizations,
                     "preset": args.preset, "model": args.model, "workers": args.workers}
        if args.command == "verify":
            data.setdefault("command", "verify")
        cfg = build_config(data, lines, source, overrides)

        if cfg.command == "speckle":
            files = run_speckle(cfg)
        elif cfg.command == "sweep":
            files = run_sweep(cfg)
        elif cfg.command == "mc":
            files = run_mc(cfg, workers=cfg.workers)
        else:
            return EXIT_OK if run_verify(cfg) else EXIT_VERIFY
    except ConfigError as exc:
        print(f"speckleq: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateRunError as exc:
        print(f"speckleq: degenerate run: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE

    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
