"""Command line scenario runner.

``phasewave run scenario.yaml`` evaluates every requested method at every
requested time and writes fields, comparison reports and a summary.
``phasewave sweep-hbar scenario.yaml --hbars 0.2,0.1,0.05`` measures how
the on-manifold phase error of the narrow beam scales with hbar.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pydantic
import yaml

from . import __version__
from .beam import beam_field, beam_points, build_beam_cache, chart_from_wkb
from .config import ScenarioConfig, load_config
from .errors import NumericalError, PhaseWaveError, UnsupportedError, ValidationError
from .exact import KINDS, error_norms, exact_field, exact_theta, initial_Psi, manifold_point, psi_config
from .fieldio import write_field_binary, write_field_csv
from .fourier import eval_fourier_integral
from .hamiltonian import builtin, polynomial
from .propagator import QuadratureSpec, propagate_aga, propagate_frozen
from .wavepacket import chirped_gaussian, wave_packet_transform

log = logging.getLogger("phasewave")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
SWEEP_ALPHAS = np.linspace(-2.0, 2.0, 81)
SWEEP_BAND = (0.35, 0.65)
N_ALPHA = 512


def build_model(cfg):
    if cfg.potential.kind == "polynomial":
        return polynomial(cfg.potential.coefficients, cfg.dim)
    return builtin(cfg.potential.kind, cfg.dim)


def quadrature_spec(cfg):
    n = cfg.quadrature.nodes_per_axis
    return QuadratureSpec(box=tuple(cfg.quadrature.box), nodes_per_axis=None if n == "auto" else n)


def _require_closed_form(cfg, what):
    if cfg.potential.kind not in KINDS:
        raise UnsupportedError(f"{what} needs a closed-form scenario, got {cfg.potential.kind!r}")


def compute_method(method, cfg, t, model, data):
    """Evaluate one method at one time.

    Returns
    -------
    ComplexField
    """
    grid = cfg.grid.spec()
    h = cfg.hbar
    dt = cfg.integrator.dt
    if method == "exact":
        _require_closed_form(cfg, "the exact method")
        return exact_field(cfg.potential.kind, grid, t, h)
    if method == "aga":
        return propagate_aga(lambda Q, P: initial_Psi(Q, P, h), grid, t, model, h, quadrature_spec(cfg), dt)
    if method == "frozen":
        return propagate_frozen(lambda Q, P: initial_Psi(Q, P, h), grid, t, model, h, quadrature_spec(cfg), dt)
    if method == "fourier":
        return eval_fourier_integral(grid, t, model, data, h, quadrature_spec(cfg), dt)
    if method == "beam":
        chart = chart_from_wkb(data)
        cache = build_beam_cache(chart, np.linspace(*chart.alpha_box, N_ALPHA), t, dt, model, data)
        return beam_field(cache, grid, t, h)
    if method == "transform":
        _require_closed_form(cfg, "the transform method")
        field = wave_packet_transform(lambda x: psi_config(cfg.potential.kind, x, t, h), grid, h)
        return type(field)(grid, field.values, h, t, "transform")
    raise UnsupportedError(f"unknown method {method!r}")


def _run_method(method, cfg, model, data):
    fields, times = [], []
    for t in cfg.times:
        start = time.perf_counter()
        fields.append(compute_method(method, cfg, t, model, data))
        times.append((time.perf_counter() - start) * 1e3)
        log.info("%s at t=%g done in %.0f ms", method, t, times[-1])
    return fields, times


def _write_fields(out, method, fields, formats):
    paths = []
    for idx, f in enumerate(fields):
        stem = out / "fields" / f"{method}_t{idx}"
        if "csv" in formats:
            paths.append(write_field_csv(stem.with_suffix(".csv"), f))
        if "binary" in formats:
            paths.append(write_field_binary(stem.with_suffix(".bin"), f))
    return paths


def run(cfg, out_dir=None, threads=0):
    """Run a scenario and write its artifacts.

    Parameters
    ----------
    cfg : ScenarioConfig
    out_dir : path, optional
        Overrides ``cfg.output.directory``.
    threads : int
        Worker threads across methods; 0 picks the CPU count.

    Returns
    -------
    dict
        The summary record, also written to ``summary.json``.
    """
    out = Path(out_dir or cfg.output.directory)
    model = build_model(cfg)
    data = chirped_gaussian()
    workers = threads or os.cpu_count() or 1
    results, errors = {}, []
    with ThreadPoolExecutor(max_workers=min(workers, len(cfg.methods))) as pool:
        futures = {m: pool.submit(_run_method, m, cfg, model, data) for m in cfg.methods}
        for m in cfg.methods:
            try:
                results[m] = futures[m].result()
            except PhaseWaveError as exc:
                log.error("%s failed: %s", m, exc)
                errors.append({"method": m, "error": type(exc).__name__, "message": str(exc)})

    files, reports, coverage = [], [], {}
    for m in cfg.methods:
        if m in results:
            files += [str(p.relative_to(out)) for p in _write_fields(out, m, results[m][0], cfg.output.formats)]
    if "beam" in results:
        coverage = {f"t{i}": float(np.mean(f.mask)) for i, f in enumerate(results["beam"][0])}
    if "exact" in results:
        ref = results["exact"][0]
        for m in cfg.methods:
            if m == "exact" or m not in results:
                continue
            for idx, (f, ms) in enumerate(zip(*results[m])):
                rec = {"method_a": m, "method_b": "exact", "t": cfg.times[idx]}
                rec.update(error_norms(f, ref[idx]).as_dict())
                rec["runtime_ms"] = round(ms, 3)
                if m == "beam":
                    rec["tube_coverage"] = float(np.mean(f.mask))
                path = out / "reports" / f"{m}_vs_exact_t{idx}.json"
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(json.dumps(rec, indent=2, sort_keys=True) + "\n")
                reports.append({k: v for k, v in rec.items() if k != "runtime_ms"})
    summary = {
        "version": __version__,
        "config": cfg.model_dump(mode="json"),
        "fields": files,
        "reports": reports,
        "tube_coverage": coverage,
        "errors": errors,
    }
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def parse_hbars(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ValidationError(f"cannot parse hbar list {text!r}") from exc
    return values


def sweep_hbar(cfg, hbars, out_dir=None):
    """On-manifold phase discrepancy of the narrow beam across hbar.

    ``D(hbar)`` is the largest ``|Theta_hbar - Phi|`` over manifold points
    with parameter in [-2, 2], where the exact field is
    ``c exp(i Theta_hbar / hbar)`` and ``Phi`` is the beam phase.

    Returns
    -------
    dict
        Rows per time with ``D``, the ratios ``D(hbar/2)/D(hbar)`` and a
        pass flag for ratios inside [0.35, 0.65].
    """
    if len(hbars) < 2:
        raise ValidationError("sweep-hbar needs at least two hbar values")
    if any(h <= 0 for h in hbars):
        raise ValidationError("hbar values must be positive")
    for a, b in zip(hbars, hbars[1:]):
        if abs(a / b - 2.0) > 1e-9:
            raise ValidationError("consecutive hbar values must halve")
    _require_closed_form(cfg, "sweep-hbar")
    kind = cfg.potential.kind
    model = build_model(cfg)
    data = chirped_gaussian()
    chart = chart_from_wkb(data)
    rows = []
    for t in cfg.times:
        cache = build_beam_cache(chart, np.linspace(*chart.alpha_box, N_ALPHA), t, cfg.integrator.dt, model, data)
        X = manifold_point(kind, SWEEP_ALPHAS, t)
        phi = beam_points(cache, X, hbars[0]).phase
        D = [float(np.max(np.abs(exact_theta(kind, X[:, 0], X[:, 1], t, h) - phi))) for h in hbars]
        ratios = [b / a for a, b in zip(D, D[1:])]
        ok = all(SWEEP_BAND[0] <= r <= SWEEP_BAND[1] for r in ratios)
        rows.append({"t": t, "hbar": list(hbars), "D": D, "ratios": ratios, "pass": ok})
    report = {"kind": kind, "rows": rows, "pass": all(r["pass"] for r in rows)}
    out = Path(out_dir or cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep_hbar.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


def build_parser():
    parser = argparse.ArgumentParser(prog="phasewave", description="Semi-classical phase-space propagation scenarios.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="scenario YAML file")
        p.add_argument("--out-dir", default=None, help="output directory (overrides the config)")
        p.add_argument("--threads", type=int, default=0, help="worker threads, 0 = auto")
        p.add_argument("--seed", type=int, default=None, help="reserved; every method is deterministic")

    common(sub.add_parser("run", help="evaluate the configured methods"))
    sw = sub.add_parser("sweep-hbar", help="hbar scaling of the narrow beam phase")
    common(sw)
    sw.add_argument("--hbars", required=True, help="comma separated, e.g. 0.2,0.1,0.05")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 0:
        print("error: --threads must be >= 0", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        cfg = load_config(args.config)
        if args.command == "run":
            summary = run(cfg, args.out_dir, args.threads)
            for rec in summary["reports"]:
                print(f"{rec['method_a']:>9s} vs exact t={rec['t']:g}: rel_l2={rec['rel_l2']:.3e} sup={rec['sup']:.3e}")
            if summary["errors"]:
                for e in summary["errors"]:
                    print(f"error: {e['method']}: {e['error']}: {e['message']}", file=sys.stderr)
                failed = {e["error"] for e in summary["errors"]}
                validation = {"UnsupportedError", "ValidationError", "ConfigurationError", "DimensionError", "DomainError"}
                return EXIT_VALIDATION if failed <= validation else EXIT_NUMERICAL
            return EXIT_OK
        hbars = parse_hbars(args.hbars)
        report = sweep_hbar(cfg, hbars, args.out_dir)
        for row in report["rows"]:
            D = ", ".join(f"{d:.4e}" for d in row["D"])
            r = ", ".join(f"{x:.3f}" for x in row["ratios"])
            print(f"t={row['t']:g}: D=[{D}] ratios=[{r}] {'pass' if row['pass'] else 'FAIL'}")
        return EXIT_OK
    except (pydantic.ValidationError, ValidationError, yaml.YAMLError, OSError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
