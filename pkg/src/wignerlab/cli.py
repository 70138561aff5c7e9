"""Command-line entry point: one subcommand per experiment kind.

Every run writes its result CSVs and a ``manifest.txt`` into the output
directory; failures write ``error.txt`` and exit with a kind-specific code.
"""
from __future__ import annotations

import argparse
import logging
import os
import platform
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (assemble_rep_matrix, forward_data, relative_singular_values, svd_study,
                       sweep_epsilon, tikhonov_reconstruct)
from .config import KINDS, PRESETS, ExperimentConfig, parse_config, preset_text, validate
from .core import gaussian_packet, gaussian_phase_field, get_threads, set_threads
from .errors import ConfigurationError, WignerLabError
from .liouville import solve_liouville
from .representatives import (KernelSetup, check_wigner_schrodinger_identity, liouville_kernel,
                              rep_schrodinger, wigner_kernel)
from .schrodinger import solve_schrodinger
from .wigner import CFL_SAFETY, RK3_IMAG_LIMIT, WENO_EPS, solve_wigner

log = logging.getLogger("wignerlab")

FLOAT_FMT = "%.17g"


# ---------------------------------------------------------------- output helpers


def write_csv(path: Path, header: list, columns: list, footer: list = ()) -> None:
    """Columns of equal length as CSV with LF endings and round-trip exact floats."""
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in data:
            fh.write(",".join(FLOAT_FMT % v for v in row) + "\n")
        for line in footer:
            fh.write(f"# {line}\n")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % v
    return str(v)


def write_keyvalue(path: Path, items: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for k, v in items.items():
            fh.write(f"{k}={_fmt(v)}\n")


def _phase_columns(grid, values):
    X, K = grid.mesh()
    cols = [X.ravel(), K.ravel()]
    if np.iscomplexobj(values):
        return ["x", "k", "re", "im"], cols + [values.real.ravel(), values.imag.ravel()]
    return ["x", "k", "value"], cols + [values.ravel()]


class Run:
    """Collects files, scheme notes and summary values for the manifest."""

    def __init__(self, cfg: ExperimentConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.files: list[str] = []
        self.notes: dict = {}
        self.results: dict = {}

    def csv(self, name, header, columns, footer=()):
        write_csv(self.out / name, header, columns, footer)
        self.files.append(name)

    def setup(self) -> KernelSetup:
        c = self.cfg
        return KernelSetup(c.grid(), c.potential(), c.phase_data("f"), c.phase_data("g"),
                           c["time.dt"], c["time.t_final"])


# ---------------------------------------------------------------- experiments


def run_forward_wigner(run: Run) -> None:
    c = run.cfg
    grid = c.grid()
    f0 = gaussian_phase_field(c.phase_data("f"), grid)
    for n, eps in enumerate(c.eps_values()):
        sol = solve_wigner(f0, c.potential(), eps, c["time.dt"], c["time.t_final"])
        header, cols = _phase_columns(grid, sol.snapshots[-1])
        run.csv(f"wigner_T_eps{n}.csv", header, cols)
        m = sol.masses()
        run.results[f"eps{n}.eps"] = eps
        run.results[f"eps{n}.mass_drift"] = float(abs(m[-1] - m[0]) / abs(m[0]))
        run.results[f"eps{n}.cfl"] = sol.cfl
        run.results[f"eps{n}.stiffness"] = sol.stiffness


def run_forward_liouville(run: Run) -> None:
    c = run.cfg
    grid = c.grid()
    sol = solve_liouville(c.phase_data("f"), c.potential(), c["time.dt"], c["time.t_final"],
                          grid=grid)
    header, cols = _phase_columns(grid, sol.snapshots[-1])
    run.csv("liouville_T.csv", header, cols)
    run.results["characteristics_outside_box"] = sol.flags["characteristics_outside_box"]


def run_forward_schrodinger(run: Run) -> None:
    c = run.cfg
    grid = c.grid()
    for n, eps in enumerate(c.eps_values()):
        phi0 = gaussian_packet(c.packet_data("phi"), grid, eps)
        sol = solve_schrodinger(phi0, c.potential(), eps, c["time.dt"], c["time.t_final"])
        u = sol.snapshots[-1]
        run.csv(f"schrodinger_T_eps{n}.csv", ["x", "re", "im"], [grid.x, u.real, u.imag])
        norms = sol.norms()
        run.results[f"eps{n}.eps"] = eps
        run.results[f"eps{n}.norm_drift"] = float(abs(norms[-1] - norms[0]) / norms[0])


def run_representative(run: Run) -> None:
    c = run.cfg
    grid = c.grid()
    kind = c["representative.kind"]
    header, cols = ["x"], [grid.x]
    if kind == "liouville":
        R = liouville_kernel(run.setup(), c["pair.b_x"], c["pair.c_x"])
        header.append("R_L")
        cols.append(R.values.real)
    elif kind == "wigner":
        for n, eps in enumerate(c.eps_values()):
            R = wigner_kernel(run.setup(), eps, c["pair.b_x"], c["pair.c_x"])
            header.append(f"R_W_eps{n}")
            cols.append(R.values.real)
            run.results[f"eps{n}.eps"] = eps
    else:
        dt, T = c["time.dt"], c["time.t_final"]
        for n, eps in enumerate(c.eps_values()):
            phi = gaussian_packet(c.packet_data("phi"), grid, eps)
            psi = gaussian_packet(c.packet_data("psi"), grid, eps)
            R = rep_schrodinger(solve_schrodinger(phi, c.potential(), eps, dt, T),
                                solve_schrodinger(psi, c.potential(), eps, dt, T, "backward"))
            header += [f"re_R_S_eps{n}", f"im_R_S_eps{n}"]
            cols += [R.values.real, R.values.imag]
            run.results[f"eps{n}.eps"] = eps
    run.csv(f"representative_{kind}.csv", header, cols)


def run_sweep_epsilon(run: Run) -> None:
    c = run.cfg
    eps = c.eps_values()
    report, limit, kernels = sweep_epsilon(run.setup(), eps, c["pair.b_x"], c["pair.c_x"])
    run.csv("err_curve.csv", ["eps", "err"], [report.eps_values, report.err_values],
            footer=[f"slope = {FLOAT_FMT % report.fitted_slope}",
                    f"strictly_decreasing = {str(report.strictly_decreasing).lower()}"])
    grid = limit.grid
    run.csv("kernels.csv", ["x", "R_L"] + [f"R_W_eps{n}" for n in range(len(eps))],
            [grid.x, limit.values.real] + [k.values.real for k in kernels])
    run.results["fitted_slope"] = report.fitted_slope
    run.results["strictly_decreasing"] = str(report.strictly_decreasing).lower()
    print(f"slope = {report.fitted_slope:.6f}")


def _write_matrix(run: Run, name: str, m) -> None:
    rows = m.entries.reshape(-1, m.grid.n_x)
    header = ["row"] + [f"x{n}" for n in range(m.grid.n_x)]
    run.csv(name, header, [np.arange(rows.shape[0])] + list(rows.T))


def run_svd_study(run: Run) -> None:
    c = run.cfg
    eps = c.eps_values()
    centers = c.centers()
    report, limit, sweep = svd_study(run.setup(), centers, eps)
    ii, jj = np.meshgrid(np.arange(len(centers)), np.arange(len(centers)), indexing="ij")
    run.csv("matrix_index.csv", ["row", "i", "j", "b_x", "c_x"],
            [np.arange(ii.size), ii.ravel(), jj.ravel(), centers[ii.ravel()], centers[jj.ravel()]])
    run.csv("matrix_x.csv", ["col", "x"], [np.arange(limit.grid.n_x), limit.grid.x])
    _write_matrix(run, "matrix_liouville.csv", limit)
    for n, (_, m) in enumerate(sweep):
        _write_matrix(run, f"matrix_wigner_eps{n}.csv", m)
    svs = [relative_singular_values(limit)] + [relative_singular_values(m) for _, m in sweep]
    run.csv("singular_values.csv", ["index", "s_L"] + [f"s_W_eps{n}" for n in range(len(eps))],
            [np.arange(1, len(svs[0]) + 1)] + svs)
    idx = sorted(report.singular_value_errors)
    run.csv("sv_errors.csv", ["eps"] + [f"err_s{i}" for i in idx],
            [report.eps_values] + [report.singular_value_errors[i] for i in idx])
    ks = sorted(report.subspace_angles)
    if ks:
        run.csv("subspace_angles.csv", ["eps"] + [f"angle_k{k}" for k in ks],
                [report.eps_values] + [report.subspace_angles[k] for k in ks])
    run.notes["matricization"] = "rows=(i,j) pairs, columns=x, weight=sqrt(dx)"
    run.notes["subspace_vectors"] = "singular vectors over x"
    run.results["n_centers"] = len(centers)
    run.results["fitted_slope"] = report.fitted_slope


def run_identity_check(run: Run) -> None:
    c = run.cfg
    grid = c.grid()
    res = []
    for eps in c.eps_values():
        packets = [gaussian_packet(c.packet_data(n), grid, eps)
                   for n in ("phi", "phi2", "psi", "psi2")]
        r = check_wigner_schrodinger_identity(*packets, c.potential(), eps, c["time.dt"],
                                              c["time.t_final"])
        res.append(r)
        run.results[f"eps{len(res) - 1}.residual"] = r
        print(f"eps = {eps:.6g}  residual = {r:.6e}")
    run.csv("identity.csv", ["eps", "residual"], [c.eps_values(), res])


def run_reconstruct(run: Run) -> None:
    c = run.cfg
    kind = c["reconstruct.kind"]
    eps = c.eps_values()[0] if kind == "wigner" else None
    centers = c.centers()
    m = assemble_rep_matrix(centers, centers, run.setup(), kind, eps)
    truth = c.perturbation().value(m.grid.x)
    data = forward_data(m, truth)
    v = tikhonov_reconstruct(m, data, c["reconstruct.lambda"])
    run.csv("reconstruct.csv", ["x", "truth", "reconstruction"], [m.grid.x, truth, v])
    corr = float(np.corrcoef(truth, v)[0, 1]) if np.std(v) > 0 else 0.0
    run.results["correlation"] = corr
    print(f"correlation = {corr:.6f}")


EXPERIMENTS = {
    "forward-wigner": run_forward_wigner,
    "forward-liouville": run_forward_liouville,
    "forward-schrodinger": run_forward_schrodinger,
    "representative": run_representative,
    "sweep-epsilon": run_sweep_epsilon,
    "svd-study": run_svd_study,
    "identity-check": run_identity_check,
    "reconstruct": run_reconstruct,
}


# ---------------------------------------------------------------- orchestration


def build_config(kind: str, config_path=None, preset=None, overrides=()) -> ExperimentConfig:
    """Preset (if any), then the config file, then ``key=value`` overrides."""
    if preset is None and config_path is None:
        preset = "desk"
    cfg = parse_config(preset_text(preset), partial=True) if preset else ExperimentConfig()
    if config_path is not None:
        text = Path(config_path).read_text(encoding="utf-8")
        cfg = cfg.with_overrides(parse_config(text, partial=True))
    for item in overrides:
        key, _, raw = item.partition("=")
        cfg.set(key.strip(), raw.strip())
    if cfg.kind not in (None, kind):
        raise ConfigurationError(f"config kind {cfg.kind!r} conflicts with subcommand {kind!r}")
    cfg.values["kind"] = kind
    validate(cfg)
    return cfg


def _scheme_notes(cfg: ExperimentConfig) -> dict:
    notes = {
        "boundary.x": "periodic",
        "boundary.k": "periodic (spectral), data checked for decay",
        "scheme.schrodinger": "Strang splitting, Fourier kinetic step",
        "scheme.wigner": f"WENO5 Lax-Friedrichs + SSP-RK3, CFL <= {CFL_SAFETY}, "
                         f"collision stiffness <= {RK3_IMAG_LIMIT:.6f}, weno_eps = {WENO_EPS}*max|f|^2",
        "scheme.collision": "Fourier multiplier in the k-dual variable, Nyquist zeroed",
        "scheme.liouville": "backward characteristics RK4, periodic cubic spline",
        "scheme.time_quadrature": "trapezoid on every solver step",
    }
    if all(k in cfg for k in ("grid.n_x", "grid.x_min")):
        g = cfg.grid()
        notes.update({"grid.dx": g.dx, "grid.dk": g.dk, "grid.dy": g.dy})
    return notes


def run_experiment(cfg: ExperimentConfig, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    for stale in ("error.txt",):
        (out / stale).unlink(missing_ok=True)
    run = Run(cfg, out)
    t0 = time.perf_counter()
    status = 0
    error = None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            EXPERIMENTS[cfg.kind](run)
        except WignerLabError as exc:
            status, error = exc.exit_code, exc
        except FloatingPointError as exc:  # pragma: no cover - numpy error state is off
            status, error = 3, exc
    wall = time.perf_counter() - t0
    manifest = {"kind": cfg.kind, "code_version": __version__,
                "python": platform.python_version(), "numpy": np.__version__,
                "threads": get_threads(), "status": status}
    manifest.update({f"config.{k}": cfg.raw[k] for k, _ in cfg.lines
                     if k is not None and k in cfg.raw})
    manifest.update(_scheme_notes(cfg))
    manifest.update({f"note.{k}": v for k, v in run.notes.items()})
    manifest.update({f"result.{k}": v for k, v in run.results.items()})
    seen = []
    for w in caught:
        msg = f"{w.category.__name__}: {w.message}"
        if msg not in seen:
            seen.append(msg)
    manifest["warnings.count"] = len(seen)
    manifest.update({f"warnings.{n}": m for n, m in enumerate(seen)})
    manifest["files"] = ";".join(run.files)
    manifest["wall_clock_seconds"] = f"{wall:.3f}"
    if error is not None:
        write_keyvalue(out / "error.txt", {"exit_code": status,
                                           "error_type": type(error).__name__,
                                           "message": str(error).replace("\n", " ")})
        print(f"error: {error}", file=sys.stderr)
    write_keyvalue(out / "manifest.txt", manifest)
    return status


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wignerlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", type=Path, help="flat key = value config file")
        p.add_argument("--preset", choices=sorted(PRESETS),
                       help="start from a shipped preset (default: desk when no --config)")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="FFT worker threads (env WIGNERLAB_THREADS; default: all cores)")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override one config key")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = args.threads or int(os.environ.get("WIGNERLAB_THREADS", 0)) or os.cpu_count()
    set_threads(threads)
    out = args.out
    try:
        cfg = build_config(args.kind, args.config, args.preset, args.overrides)
    except (WignerLabError, OSError) as exc:
        code = getattr(exc, "exit_code", 2)
        target = out or Path("wignerlab-out")
        target.mkdir(parents=True, exist_ok=True)
        problems = getattr(exc, "problems", [str(exc)])
        items = {"exit_code": code, "error_type": type(exc).__name__}
        items.update({f"problem.{n}": p for n, p in enumerate(problems)})
        write_keyvalue(target / "error.txt", items)
        print("configuration error:\n  " + "\n  ".join(problems), file=sys.stderr)
        return code
    if out is None:
        out = Path(cfg.get("output.dir") or f"wignerlab-out/{args.kind}")
    return run_experiment(cfg, out)


if __name__ == "__main__":
    sys.exit(main())
