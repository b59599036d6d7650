"""Command line entry point: ``ymgap <subcommand> --config <path> [--out DIR] [--seed S]``.

Each subcommand runs one suite, writes ``<subcommand>.json`` (a header with a
timestamp, then deterministic results) and CSV tables into the output
directory, and exits with

* 0 when every suite assertion passed,
* 1 when some assertion failed (reports are kept),
* 2 for usage or configuration errors,
* 3 when the pipeline raised (partial outputs are removed).

``YMGAP_THREADS`` caps the BLAS/LAPACK thread pools.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
import traceback
from contextlib import nullcontext
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .fock import (FockBasis, kernel_check, ordering_shift, quantize_antiwick, quantize_normal,
                   weyl_relation_check)
from .helmholtz import SolverConfig, fourier_residuals, projector_identities, transversal
from .lattice import CauchyData, Grid, constraint_residual, energy, evolve, evolve_iter, save_cauchy
from .lie import antisymmetry_residual, casimir_contract, jacobi_residual, parse_gauge_group
from .modes import build_mode_basis
from .propagator import (PropagationConfig, chernoff_step, convergence_study, exact_amplitude, limit_operator,
                         propagate)
from .spectrum import assemble_H, bound_check, build_energy_symbol, gap_scan, spectrum_report
from .symbols import PolynomialSymbol, heat_transform, random_symbol

log = logging.getLogger("ymgap")

SUBCOMMANDS = ("lie-check", "classical-evolve", "helmholtz-check", "fock-check", "spectrum", "gap-scan",
               "propagate")


def _num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".15g")
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


class Outputs:
    """Tracks written files so a failed run can remove them."""

    def __init__(self, root: Path):
        self.root = root
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.root / name
        self.written.append(p)
        return p

    def csv(self, name: str, header: list[str], rows: list[list]) -> Path:
        p = self.path(name)
        with p.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_num(v) for v in row])
        return p

    def cleanup(self):
        for p in self.written:
            if p.exists():
                p.unlink()


# --------------------------------------------------------------------------
# pipelines: each returns (checks: dict[name, bool], results: dict)
# --------------------------------------------------------------------------

def _algebra(cfg: RunConfig):
    return parse_gauge_group(cfg.gauge_group, cfg.N)


def _solver(cfg: RunConfig) -> SolverConfig:
    return SolverConfig(cfg.solver.tol, cfg.solver.max_iter, cfg.solver.deflate_tol)


def run_lie_check(cfg: RunConfig, rng, out: Outputs):
    g = _algebra(cfg)
    X = rng.normal(size=g.dim_g)
    adX = g.ad(X)
    res = {
        "label": g.label,
        "dim_g": g.dim_g,
        "jacobi": jacobi_residual(g),
        "antisymmetry": antisymmetry_residual(g),
        "metric_identity": float(np.max(np.abs(g.metric - np.eye(g.dim_g)))),
        "casimir_identity": float(np.max(np.abs(casimir_contract(g) - np.eye(g.dim_g)))),
        "ad_antisymmetry": float(np.max(np.abs(adX + adX.T))),
        "metric_min_eigenvalue": float(np.linalg.eigvalsh(g.metric)[0]),
    }
    rows = [[i, j, k, g.c[i, j, k]] for i, j, k in zip(*np.nonzero(np.abs(g.c) > 1e-14))]
    out.csv("structure_constants.csv", ["i", "j", "k", "c"], rows)
    checks = {name: res[name] <= 1e-12 for name in
              ("jacobi", "antisymmetry", "metric_identity", "casimir_identity", "ad_antisymmetry")}
    checks["positive_metric"] = res["metric_min_eigenvalue"] > 0
    return checks, res


def _random_transversal(cfg: RunConfig, g, grid, rng):
    mb = build_mode_basis(g, grid, cfg.modes.M, cfg.modes.k_max)
    z = cfg.evolve.amplitude * (rng.normal(size=mb.M) + 1j * rng.normal(size=mb.M))
    c0 = mb.to_fields(z)
    return transversal(g, grid, c0, _solver(cfg), cfg.coupling)


def run_classical_evolve(cfg: RunConfig, rng, out: Outputs):
    g = _algebra(cfg)
    grid = Grid(cfg.grid.n, cfg.grid.h)
    c0 = _random_transversal(cfg, g, grid, rng)
    ev = cfg.evolve
    rows = [[0.0, energy(g, grid, c0, cfg.coupling), constraint_residual(g, grid, c0, cfg.coupling)]]
    final = c0
    for t, c in evolve_iter(g, grid, c0, ev.dt, ev.steps, cfg.coupling):
        rows.append([t, energy(g, grid, c, cfg.coupling), constraint_residual(g, grid, c, cfg.coupling)])
        final = c
    back = evolve(g, grid, final, -ev.dt, ev.steps, cfg.coupling)
    rev = float(max(np.max(np.abs(back.a - c0.a)), np.max(np.abs(back.e - c0.e))))
    out.csv("evolution.csv", ["t", "energy", "constraint_residual"], rows)
    for name, data in (("initial", c0), ("final", final)):
        out.path(f"{name}.bin")
        out.path(f"{name}.json")
        save_cauchy(out.root / name, g, grid, data, coupling=cfg.coupling, t=0.0 if name == "initial" else rows[-1][0])
    e0 = rows[0][1]
    res = {
        "energy_initial": e0,
        "energy_final": rows[-1][1],
        "relative_energy_drift": abs(rows[-1][1] - e0) / max(e0, 1e-300),
        "constraint_initial": rows[0][2],
        "constraint_final": rows[-1][2],
        "reversibility": rev,
        "steps": ev.steps,
        "dt": ev.dt,
    }
    checks = {"reversibility": rev <= 1e-10, "finite": bool(np.all(np.isfinite(np.array(rows))))}
    return checks, res


def run_helmholtz_check(cfg: RunConfig, rng, out: Outputs):
    g = _algebra(cfg)
    grid = Grid(cfg.grid.n, cfg.grid.h)
    scfg = _solver(cfg)
    rows, worst = [], {}
    names = ("adjointness", "idempotence", "grad_fixed", "div_transversal", "orthogonality")
    for trial in range(cfg.trials):
        a = 0.5 * rng.normal(size=grid.gauge_shape(g))
        v, w = rng.normal(size=(2,) + grid.gauge_shape(g))
        u = rng.normal(size=grid.scalar_shape(g))
        r = projector_identities(g, grid, a, v, w, u, scfg)
        rows.append([trial] + [r[n] for n in names] + [r["kernel_dimension"]])
        for n in names:
            worst[n] = max(worst.get(n, 0.0), r[n])
    four = fourier_residuals(g, grid, scfg)
    out.csv("helmholtz.csv", ["trial", *names, "kernel_dimension"], rows)
    res = {"worst": worst, "fourier": four, "trials": cfg.trials, "tol": scfg.tol}
    checks = {
        "adjointness": worst.get("adjointness", 0.0) <= 1e-12,
        "idempotence": worst.get("idempotence", 0.0) <= 1e-6,
        "div_transversal": worst.get("div_transversal", 0.0) <= 1e-6,
        "fourier": max(four.values()) <= 1e-10,
    }
    return checks, res


def run_fock_check(cfg: RunConfig, rng, out: Outputs):
    s_star = ordering_shift()
    M = min(cfg.modes.M, 3)
    n_max = cfg.fock.n_max
    if n_max < 4:
        raise ValueError("fock-check needs n_max >= 4")
    fb = FockBasis(M, n_max)
    rows, worst, worst_herm = [], 0.0, 0.0
    for trial in range(cfg.trials):
        sym = random_symbol(M, 4, rng)
        d = sym.degree
        lhs = quantize_antiwick(sym, fb).safe_block(d)
        rhs = quantize_normal(heat_transform(sym, s_star), fb).safe_block(d)
        resid = float(np.max(np.abs(lhs - rhs)))
        rsym = random_symbol(M, 4, rng, real=True)
        herm = max(quantize_antiwick(rsym, fb).hermiticity_residual(),
                   quantize_normal(rsym, fb).hermiticity_residual())
        rows.append([trial, M, d, len(sym), resid, herm])
        worst, worst_herm = max(worst, resid), max(worst_herm, herm)
    out.csv("ordering.csv", ["trial", "M", "degree", "terms", "residual", "hermiticity"], rows)
    number = PolynomialSymbol.monomial((1,), (1,))
    stated = heat_transform(number, 0.5)
    half_shift_identity = stated.allclose(number + 0.5, 0.0)
    fb1 = FockBasis(1, 16)
    weyl = weyl_relation_check([0.5], fb1, 8)
    weyl_big = weyl_relation_check([0.5], FockBasis(1, 24), 8)
    kc = kernel_check(number, FockBasis(1, max(n_max, 12)), [[0.0], [0.6], [0.5j], [-0.7 + 0.3j]], s=s_star)
    quantize_antiwick(number * 2.0, FockBasis(1, n_max), provenance="2 z* z").dump(out.path("antiwick_number.txt"))
    res = {
        "ordering_shift": s_star,
        "ordering_residual": worst,
        "hermiticity_residual": worst_herm,
        "half_shift_symbol_identity": half_shift_identity,
        "half_shift_matches_matrices": abs(s_star - 0.5) <= 1e-12,
        "weyl_residual_nmax16_block8": weyl,
        "weyl_residual_nmax24_block8": weyl_big,
        "kernel_check": kc,
        "M": M,
        "n_max": n_max,
    }
    checks = {
        "ordering_equivalence": worst <= 1e-10,
        "shift_is_one": abs(s_star - 1.0) <= 1e-12,
        "hermiticity": worst_herm <= 1e-12,
        "half_shift_symbol_identity": half_shift_identity,
        "weyl_shrinks": weyl_big < weyl,
        "kernel_corrected": kc["corrected"] <= 1e-6,
    }
    return checks, res


def _spectrum_row(r, slack):
    return [r.M, r.n_max, r.coupling, r.k, r.lambda0, r.lambda1, r.gap, slack]


SPECTRUM_COLUMNS = ["M", "n_max", "coupling", "k", "lambda0", "lambda1", "gap", "min_slack"]


def run_spectrum(cfg: RunConfig, rng, out: Outputs):
    g = _algebra(cfg)
    grid = Grid(cfg.grid.n, cfg.grid.h)
    M, n_max, s = cfg.modes.M, cfg.fock.n_max, cfg.fock.ordering_s
    report = spectrum_report(g, grid, M, n_max, cfg.coupling, s, cfg.modes.k_max)
    mb = build_mode_basis(g, grid, M, cfg.modes.k_max)
    es = build_energy_symbol(mb, cfg.coupling, s, n_max)
    fb = FockBasis(M, n_max)
    H = assemble_H(es, fb)
    seed = int(rng.integers(0, 2 ** 63))
    bound = bound_check(H, es, fb, cfg.trials, seed)
    vacuum = float(H.toarray()[0, 0].real) if fb.dim <= 4096 else float(H.matrix[0, 0].real)
    out.csv("spectrum.csv", SPECTRUM_COLUMNS, [_spectrum_row(report, bound.min_slack)])
    res = {"report": report.to_dict(), "bound": bound.__dict__, "vacuum_expectation": vacuum,
           "hermiticity": H.hermiticity_residual(), "omegas": mb.omegas}
    checks = {
        "vacuum_equals_k": abs(vacuum - es.k) <= 1e-10,
        "slack_nonnegative": bound.passed_slack,
        "hermitian": res["hermiticity"] <= 1e-12,
        "minimax_bottom_is_eigenvalue": report.minimax[0] == report.eigenvalues[0],
    }
    return checks, res


def run_gap_scan(cfg: RunConfig, rng, out: Outputs):
    g = _algebra(cfg)
    grid = Grid(cfg.grid.n, cfg.grid.h)
    seed = int(rng.integers(0, 2 ** 63))
    reports, skipped = gap_scan(g, grid, cfg.scan.M, cfg.scan.n_max, cfg.scan.coupling, cfg.fock.ordering_s,
                                cfg.modes.k_max, bound_trials=cfg.trials, seed=seed)
    out.csv("gap_scan.csv", SPECTRUM_COLUMNS, [_spectrum_row(r, r.min_slack) for r in reports])
    checks = {"gaps_nonnegative": all(r.gap >= -1e-12 for r in reports)}
    free = [r for r in reports if r.coupling == 0.0]
    if free:
        w_min = min(build_mode_basis(g, grid, r.M, cfg.modes.k_max).omegas.min() for r in free)
        checks["free_gap_is_min_frequency"] = all(abs(r.gap - w_min) <= 1e-10 for r in free)
    res = {"reports": [r.to_dict() for r in reports], "skipped": skipped}
    return checks, res


def _amplitudes(values, M, default):
    if values is None:
        return np.full(M, default, dtype=complex)
    if len(values) != M:
        raise ValueError(f"expected {M} mode amplitudes, got {len(values)}")
    return np.array([complex(re, im) for re, im in values])


def run_propagate(cfg: RunConfig, rng, out: Outputs):
    g = _algebra(cfg)
    grid = Grid(cfg.grid.n, cfg.grid.h)
    M, n_max = cfg.modes.M, cfg.fock.n_max
    mb = build_mode_basis(g, grid, M, cfg.modes.k_max)
    H_sym = build_energy_symbol(mb, cfg.coupling, cfg.fock.ordering_s).sym
    fb = FockBasis(M, n_max)
    p = cfg.propagate
    z0 = _amplitudes(p.z0, M, 0.5)
    zt = _amplitudes(p.zt, M, 0.5)
    pc = PropagationConfig(p.t, p.N, p.method, p.order)
    step = chernoff_step(H_sym, pc.tau, fb, p.method, p.order)
    amp = propagate(H_sym, z0, zt, pc, fb, step=step)
    exact = exact_amplitude(limit_operator(H_sym, fb), z0, zt, p.t)
    study = convergence_study(H_sym, z0, zt, p.t, p.N_list, fb, p.method, p.order)
    rows = [[r["N"], r["amplitude_re"], r["amplitude_im"], r["error"], r["action_re"], r["action_im"]]
            for r in study["rows"]]
    out.csv("convergence.csv", ["N", "amplitude_re", "amplitude_im", "error", "action_re", "action_im"], rows)
    safe = fb.safe_indices(H_sym.degree)
    sigma = float(np.linalg.svd(step.matrix[safe][:, safe].toarray(), compute_uv=False)[0]) if len(safe) else 0.0
    res = {
        "amplitude_re": amp.real,
        "amplitude_im": amp.imag,
        "exact_re": exact.real,
        "exact_im": exact.imag,
        "error_vs_exact": abs(amp - exact),
        "tail_bound": study["tail_bound"],
        "fitted_order": study["order"],
        "step_norm_safe_block": sigma,
        "tau": pc.tau,
    }
    checks = {
        "finite": bool(np.isfinite(amp)),
        "step_contraction": sigma <= 1 + 10 * pc.tau ** 2,
    }
    return checks, res


PIPELINES = {
    "lie-check": run_lie_check,
    "classical-evolve": run_classical_evolve,
    "helmholtz-check": run_helmholtz_check,
    "fock-check": run_fock_check,
    "spectrum": run_spectrum,
    "gap-scan": run_gap_scan,
    "propagate": run_propagate,
}


def _error_context(exc: BaseException) -> str:
    module = "ymgap"
    for frame, _ in traceback.walk_tb(exc.__traceback__):
        name = frame.f_globals.get("__name__", "")
        if name.startswith("ymgap.") and name != "ymgap.cli":
            module = name
    return module


def _threads() -> int | None:
    raw = os.environ.get("YMGAP_THREADS")
    if raw in (None, ""):
        return None
    n = int(raw)
    if n < 1:
        raise ValueError
    return n


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ymgap", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, type=Path, help="JSON configuration file")
    p.add_argument("--out", type=Path, default=None, help="output directory (overrides output_dir)")
    p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed (overrides config)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
    except FileNotFoundError:
        print(f"error: config file {args.config} not found", file=sys.stderr)
        return 2
    except ConfigError as exc:
        for path, msg in exc.errors:
            print(f"config error at {path}: {msg}", file=sys.stderr)
        return 2
    seed = cfg.seed if args.seed is None else args.seed
    if not 0 <= seed < 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        threads = _threads()
    except ValueError:
        print("error: YMGAP_THREADS must be a positive integer", file=sys.stderr)
        return 2
    root = args.out if args.out is not None else Path(cfg.output_dir)
    root.mkdir(parents=True, exist_ok=True)
    out = Outputs(root)
    rng = np.random.default_rng(seed)
    limits = threadpool_limits(threads) if threads else nullcontext()
    try:
        with limits:
            checks, results = PIPELINES[args.subcommand](cfg, rng, out)
        passed = all(checks.values())
        report = {
            "header": {
                "tool": "ymgap",
                "version": __version__,
                "subcommand": args.subcommand,
                "seed": seed,
                "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            },
            "config": cfg.to_dict(),
            "checks": checks,
            "passed": passed,
            "results": results,
        }
        report_path = out.path(f"{args.subcommand}.json")
        report_path.write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    except Exception as exc:  # noqa: BLE001 - surfaced with context, outputs removed
        out.cleanup()
        print(f"error in {_error_context(exc)} during {args.subcommand}: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 3
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {args.subcommand}: {name}")
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
