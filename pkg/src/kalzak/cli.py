"""Experiment runner.

Subcommands live under `run` (simulate, filter, zakai, compare, testbed,
check) plus a standalone `export`.  Every run writes a manifest.json and
raw arrays into its run directory, then emits the formats the config's
output block asks for; `export` re-emits any of them later from the
stored arrays alone, so exports are byte-stable against the manifest.

Exit codes: 0 success, 1 usage, 2 config or model validation failure,
3 numeric failure inside a solver, 4 acceptance criteria failed.
"""

from __future__ import annotations

import json
from pathlib import Path

import click
import numpy as np

from . import __version__
from .acceptance import run_all
from .config import (build_model, build_q0, load_config, load_manifest,
                     make_manifest, write_csv, write_json_export)
from .errors import AcceptanceFailure, ConfigError, NumericError
from .grids import make_axis
from .models import ModelValidationError
from .particles import compare_filters
from .paths import simulate_paths
from .riccati import run_filter
from .svgplot import svg_line_plot
from .testbed import (apriori_ratio, heat_coefficients,
                      noisy_heat_coefficients, run_general)
from .zakai import (SolverOptions, closed_form_snapshots, l1_distance,
                    normalize_stack, reconstruct, run_reduced, run_zakai)

__all__ = ["cli", "main"]

_FORMATS = ("csv", "json", "svg-plot-data")

_DEFAULT_CHECK_CFG = {
    "label": "acceptance-gate",
    "model": {"preset": "classic_scalar"},
    "simulation": {"T": 1.0, "dt": 0.001, "seed": 0},
}


@click.group()
@click.version_option(__version__, prog_name="kalzak")
def cli():
    """Filtering experiment runner."""


@cli.group(name="run")
def run_group():
    """Execute one experiment stage from a config file."""


def _run_options(fn):
    for opt in (
        click.option("--quiet", is_flag=True, help="Suppress progress output."),
        click.option("--out", type=click.Path(), default=None,
                     help="Run directory (default: output.directory or runs/<id>)."),
        click.option("--seed", type=int, default=None,
                     help="Override simulation.seed."),
        click.option("--config", "config_path", type=click.Path(),
                     required=True, help="TOML run config."),
    ):
        fn = opt(fn)
    return fn


def _start(cfg: dict, command: str, seed, out):
    manifest = make_manifest(cfg, command=command, seed=seed)
    base = out or cfg.get("output", {}).get("directory")
    rundir = Path(base) if base else Path("runs") / manifest.manifest_id
    rundir.mkdir(parents=True, exist_ok=True)
    manifest.write(rundir / "manifest.json")
    return manifest, rundir


def _save_arrays(rundir: Path, arrays: dict):
    adir = rundir / "arrays"
    adir.mkdir(exist_ok=True)
    for name, arr in arrays.items():
        np.save(adir / f"{name}.npy", np.asarray(arr))


def _load_arrays(rundir: Path) -> dict:
    adir = Path(rundir) / "arrays"
    if not adir.is_dir():
        return {}
    return {p.stem: np.load(p, allow_pickle=False)
            for p in sorted(adir.glob("*.npy"))}


def _sim_block(cfg: dict):
    sim = cfg["simulation"]
    z0 = np.asarray(sim["z0"], float) if "z0" in sim else None
    return (float(sim["T"]), float(sim["dt"]), z0,
            float(sim.get("blowup_bound", 1e6)))


def _solver_opts(cfg: dict) -> SolverOptions:
    zk = cfg.get("zakai", {})
    return SolverOptions(
        milstein=bool(zk.get("milstein", True)),
        store_series=bool(zk.get("store_series", True)),
        max_snapshots=int(zk.get("max_snapshots", 64)),
        cfl=str(zk.get("cfl", "warn")),
    )


def _one_path(cfg, spec, master_seed):
    T, dt, z0, bound = _sim_block(cfg)
    return simulate_paths(spec, T, dt, n_paths=1, seed=master_seed,
                          z0=z0, bound=bound)[0]


def _emit_outputs(cfg, manifest, rundir, quiet, extra_formats=()):
    """Write every requested format from the arrays on disk."""
    formats = list(cfg.get("output", {}).get("formats", []))
    wanted = ["csv"] + [f for f in formats if f != "csv"] + list(extra_formats)
    written = []
    for fmt in dict.fromkeys(wanted):
        if fmt not in _FORMATS:
            raise ConfigError(f"output.formats entry {fmt!r} unknown; "
                              f"choose from {list(_FORMATS)}")
        written += _export_rundir(rundir, manifest, fmt)
    if not quiet:
        for p in written:
            click.echo(f"wrote {p}")
    return written


# ---------------------------------------------------------------------------
# table builders (shared by the run commands and `export`)

def _kind_of(manifest) -> str:
    return manifest.command.split()[-1]


def _build_tables(kind: str, arrays: dict, rundir: Path):
    """(name, columns, meta) triples for a run directory's tables."""
    if kind == "simulate":
        times, z, yt = arrays["times"], arrays["z"], arrays["ytilde"]
        d, dy = (int(v) for v in arrays["dims"])
        P, n1 = z.shape[0], z.shape[1]
        cols = [("path", np.repeat(np.arange(P), n1)),
                ("t", np.tile(times, P))]
        cols += [(f"x{j}", z[:, :, j].ravel()) for j in range(d)]
        cols += [(f"y{j}", z[:, :, d + j].ravel()) for j in range(dy)]
        cols += [(f"ytilde{j}", yt[:, :, j].ravel()) for j in range(dy)]
        return [("paths", cols, {"n_paths": P, "d": d, "dy": dy})]

    if kind == "filter":
        t, W, V, U = arrays["times"], arrays["W"], arrays["V"], arrays["U"]
        xbar, Sigma = arrays["xbar"], arrays["Sigma"]
        d = W.shape[1]
        cols = [("t", t)]
        cols += [(f"W{i}{j}", W[:, i, j]) for i in range(d) for j in range(d)]
        cols += [(f"V{i}", V[:, i]) for i in range(d)]
        cols += [("U", U)]
        cols += [(f"xbar{i}", xbar[:, i]) for i in range(d)]
        cols += [(f"Sigma{i}{j}", Sigma[:, i, j])
                 for i in range(d) for j in range(d)]
        meta = {"d": d, "min_eig": float(arrays["min_eig"].min())}
        return [("filter", cols, meta)]

    if kind == "zakai":
        tables = []
        t = arrays["times"]
        mass_cols = [("t", t)]
        for scheme in ("direct", "reduced"):
            if f"{scheme}_mass" in arrays:
                mass_cols.append((f"mass_{scheme}", arrays[f"{scheme}_mass"]))
                mass_cols.append((f"min_{scheme}", arrays[f"{scheme}_minval"]))
        tables.append(("mass", mass_cols, {}))

        snap_t = arrays["snapshot_times"]
        axes = [arrays[k] for k in ("axis0", "axis1") if k in arrays]
        K = len(snap_t)
        if len(axes) == 1:
            n = len(axes[0])
            xcols = [("x0", np.tile(axes[0], K))]
        else:
            X, Y = np.meshgrid(axes[0], axes[1], indexing="ij")
            n = X.size
            xcols = [("x0", np.tile(X.ravel(), K)),
                     ("x1", np.tile(Y.ravel(), K))]
        dcols = [("t", np.repeat(snap_t, n))] + xcols
        for name in ("direct", "recon", "closed"):
            key = f"{name}_snapshots"
            if key in arrays:
                dcols.append((name, arrays[key].reshape(K, -1).ravel()))
        tables.append(("density", dcols, {"snapshots": K}))
        return tables

    if kind == "compare":
        t, gap, cgap = arrays["times"], arrays["gap"], arrays["closed_gap"]
        cols = [("t", t), ("l1_direct_vs_recon", gap),
                ("l1_direct_vs_closed", cgap)]
        meta = {"sup_gap": float(gap.max()),
                "sup_closed_gap": float(cgap.max())}
        tables = [("comparison", cols, meta)]
        if "oracle_t" in arrays:
            d = arrays["oracle_filter_mean"].shape[1]
            ocols = [("t", arrays["oracle_t"])]
            for stem in ("filter_mean", "particle_mean", "stderr"):
                ocols += [(f"{stem}{i}", arrays[f"oracle_{stem}"][:, i])
                          for i in range(d)]
            ocols.append(("z", arrays["oracle_z"]))
            tables.append(("oracle", ocols,
                           {"max_z": float(arrays["oracle_z"].max())}))
        return tables

    if kind == "testbed":
        t, norms = arrays["times"], arrays["norms"]
        num, den = (float(v) for v in arrays["apriori"])
        meta = {"p": float(arrays["p"][0]), "apriori_numerator": num,
                "apriori_denominator": den, "apriori_ratio": num / den}
        return [("testbed", [("t", t), ("norm_p_p", norms)], meta)]

    if kind == "check":
        rows = json.loads((rundir / "criteria.json").read_text())
        cols = [
            ("index", np.array([r["index"] for r in rows])),
            ("name", [r["name"] for r in rows]),
            ("passed", [r["passed"] for r in rows]),
            ("runtime_s", np.array([r["runtime"] for r in rows])),
            ("detail", [r["detail"].replace(",", ";") for r in rows]),
        ]
        n_ok = sum(r["passed"] for r in rows)
        return [("acceptance", cols, {"passed": n_ok, "total": len(rows)})]

    raise ConfigError(f"run directory holds unknown command kind {kind!r}")


def _snapshot_lines(arrays, key: str, suffix: str):
    """Line-plot series for up to three stored density snapshots (1-D)."""
    if key not in arrays or "axis1" in arrays:
        return []
    snaps = arrays[key]
    snap_t = arrays["snapshot_times"]
    x = arrays["axis0"]
    picks = sorted({0, len(snap_t) // 2, len(snap_t) - 1})
    return [(f"t={snap_t[i]:g}{suffix}", x, snaps[i]) for i in picks]


def _build_svgs(kind: str, arrays: dict, rundir: Path):
    """(file stem, svg text) pairs for a run directory."""
    if kind == "simulate":
        t, z = arrays["times"], arrays["z"]
        d = int(arrays["dims"][0])
        series = [(f"x{j}, path 0", t, z[0, :, j]) for j in range(d)]
        return [("paths", svg_line_plot(series, title="signal components",
                                        xlabel="t", ylabel="x"))]
    if kind == "filter":
        t, xbar, Sigma = arrays["times"], arrays["xbar"], arrays["Sigma"]
        d = xbar.shape[1]
        series = [(f"xbar{i}", t, xbar[:, i]) for i in range(d)]
        series += [(f"sd{i}", t, np.sqrt(Sigma[:, i, i])) for i in range(d)]
        return [("filter", svg_line_plot(series, title="conditional moments",
                                         xlabel="t", ylabel="value"))]
    if kind == "zakai":
        out = []
        t = arrays["times"]
        mseries = [(f"mass {s}", t, arrays[f"{s}_mass"])
                   for s in ("direct", "reduced") if f"{s}_mass" in arrays]
        out.append(("mass", svg_line_plot(mseries, title="unnormalized mass",
                                          xlabel="t", ylabel="mass")))
        lines = (_snapshot_lines(arrays, "direct_snapshots", " grid")
                 + _snapshot_lines(arrays, "closed_snapshots", " closed"))
        if lines:
            out.append(("density", svg_line_plot(
                lines, title="density snapshots", xlabel="x", ylabel="density")))
        return out
    if kind == "compare":
        t = arrays["times"]
        series = [("direct vs transformed", t, arrays["gap"]),
                  ("direct vs closed form", t, arrays["closed_gap"])]
        return [("comparison", svg_line_plot(series, title="L1 distances",
                                             xlabel="t", ylabel="L1"))]
    if kind == "testbed":
        series = [("norm", arrays["times"], arrays["norms"])]
        return [("testbed", svg_line_plot(series, title="p-norm trajectory",
                                          xlabel="t", ylabel="|u|_p^p"))]
    return []


def _export_rundir(rundir: Path, manifest, fmt: str) -> list:
    kind = _kind_of(manifest)
    arrays = _load_arrays(rundir)
    written = []
    if fmt == "csv":
        for name, cols, _ in _build_tables(kind, arrays, rundir):
            path = rundir / f"{name}.csv"
            write_csv(path, cols, manifest.manifest_id)
            written.append(path)
    elif fmt == "json":
        for name, cols, meta in _build_tables(kind, arrays, rundir):
            path = rundir / f"{name}.json"
            write_json_export(path, name, cols, manifest.manifest_id, meta)
            written.append(path)
    elif fmt == "svg-plot-data":
        for name, text in _build_svgs(kind, arrays, rundir):
            path = rundir / f"{name}.svg"
            with open(path, "w") as fh:
                fh.write(f"<!-- manifest: {manifest.manifest_id} -->\n")
                fh.write(text)
            written.append(path)
    else:
        raise ConfigError(f"unknown export format {fmt!r}; "
                          f"choose from {list(_FORMATS)}")
    return written


# ---------------------------------------------------------------------------
# run subcommands

@run_group.command(name="simulate")
@_run_options
@click.option("--paths", "n_paths", type=int, default=None,
              help="Override simulation.n_paths.")
def cmd_simulate(config_path, seed, out, quiet, n_paths):
    """Simulate signal/observation paths and store them."""
    cfg = load_config(config_path)
    spec = build_model(cfg)
    manifest, rundir = _start(cfg, "run simulate", seed, out)
    T, dt, z0, bound = _sim_block(cfg)
    P = n_paths or int(cfg["simulation"].get("n_paths", 1))
    bundles = simulate_paths(spec, T, dt, n_paths=P,
                             seed=manifest.master_seed, z0=z0, bound=bound)
    blown = [b.path_index for b in bundles if b.blowup_step is not None]
    if blown and not quiet:
        click.echo(f"warning: paths {blown} hit the blow-up guard", err=True)
    _save_arrays(rundir, {
        "times": bundles[0].times,
        "z": np.stack([b.z for b in bundles]),
        "ytilde": np.stack([b.ytilde for b in bundles]),
        "dims": np.array([spec.d, spec.dy]),
    })
    _emit_outputs(cfg, manifest, rundir, quiet)
    if not quiet:
        click.echo(f"{P} path(s), {bundles[0].n_steps} steps -> {rundir}")


@run_group.command(name="filter")
@_run_options
def cmd_filter(config_path, seed, out, quiet):
    """Run the observation-driven Riccati filter along one path."""
    cfg = load_config(config_path)
    spec = build_model(cfg)
    manifest, rundir = _start(cfg, "run filter", seed, out)
    path = _one_path(cfg, spec, manifest.master_seed)
    frun = run_filter(spec, path, q0=build_q0(cfg, spec.d))
    _save_arrays(rundir, {
        "times": frun.times, "W": frun.W, "V": frun.V, "U": frun.U,
        "xbar": frun.xbar(), "Sigma": frun.cov(), "min_eig": frun.min_eig,
    })
    _emit_outputs(cfg, manifest, rundir, quiet)
    if not quiet:
        click.echo(f"filter run, min eig {frun.min_eig.min():.3e} -> {rundir}")


def _snapshot_indices(run, cfg, dt: float) -> np.ndarray:
    """Indices into run.snapshot_steps chosen for export tables."""
    req = cfg.get("zakai", {}).get("snapshots")
    stored = run.snapshot_steps
    if req:
        want = np.array([int(round(t / dt)) for t in req])
    else:
        want = np.unique(np.linspace(0, stored[-1], 9).astype(int))
    return np.unique([int(np.abs(stored - s).argmin()) for s in want])


def _zakai_payload(cfg, spec, manifest, want_reduced: bool, want_direct: bool):
    zk = cfg.get("zakai", {})
    q0 = build_q0(cfg, spec.d)
    opts = _solver_opts(cfg)
    h = float(zk.get("h", 0.05))
    L = zk.get("L")
    path = _one_path(cfg, spec, manifest.master_seed)
    frun = run_filter(spec, path, q0=q0)
    direct = reduced = None
    if want_direct:
        direct = run_zakai(spec, path, q0=q0, h=h, L=L, filter_run=frun,
                           opts=opts)
        L = direct.L
    if want_reduced:
        reduced = run_reduced(spec, path, filter_run=frun, q0=q0, h=h, L=L,
                              opts=opts)
    return path, frun, direct, reduced, h


@run_group.command(name="zakai")
@_run_options
def cmd_zakai(config_path, seed, out, quiet):
    """Solve the unnormalized density equation on a grid along one path."""
    cfg = load_config(config_path)
    spec = build_model(cfg)
    manifest, rundir = _start(cfg, "run zakai", seed, out)
    scheme = cfg.get("zakai", {}).get("scheme", "direct")
    path, frun, direct, reduced, h = _zakai_payload(
        cfg, spec, manifest, want_reduced=scheme in ("reduced", "both"),
        want_direct=scheme in ("direct", "both"))
    lead = direct or reduced
    idx = _snapshot_indices(lead, cfg, path.dt)
    steps = lead.snapshot_steps[idx]
    arrays = {
        "times": lead.times, "snapshot_times": lead.times[steps],
        "axis0": lead.axes[0],
    }
    if lead.dim == 2:
        arrays["axis1"] = lead.axes[1]
    if direct is not None:
        arrays["direct_mass"] = direct.mass
        arrays["direct_minval"] = direct.minval
        arrays["direct_snapshots"] = normalize_stack(
            direct.series[idx], h, direct.dim)
        arrays["closed_snapshots"] = closed_form_snapshots(
            frun, direct.axes, steps)
    if reduced is not None:
        arrays["reduced_mass"] = reduced.mass
        arrays["reduced_minval"] = reduced.minval
        arrays["recon_snapshots"] = normalize_stack(
            reconstruct(reduced, frun)[idx], h, reduced.dim)
    _save_arrays(rundir, arrays)
    _emit_outputs(cfg, manifest, rundir, quiet)
    if not quiet:
        click.echo(f"{scheme} run on {lead.dim}-D grid (h={h}) -> {rundir}")


@run_group.command(name="compare")
@_run_options
def cmd_compare(config_path, seed, out, quiet):
    """Cross-check solvers: direct vs transformed, plus the particle oracle.

    The L1 comparison between the direct grid solution and the mapped-back
    transformed one always runs.  When the config has an oracle block (and
    the model's noises are uncorrelated) the weighted-particle estimate of
    the conditional mean is checked against the closed form as well.
    """
    cfg = load_config(config_path)
    spec = build_model(cfg)
    manifest, rundir = _start(cfg, "run compare", seed, out)
    path, frun, direct, reduced, h = _zakai_payload(
        cfg, spec, manifest, want_reduced=True, want_direct=True)
    steps = direct.snapshot_steps
    a = normalize_stack(direct.series, h, direct.dim)
    b = normalize_stack(reconstruct(reduced, frun), h, direct.dim)
    gap = l1_distance(a, b, h, direct.dim)
    closed = closed_form_snapshots(frun, direct.axes, steps)
    cgap = l1_distance(a, closed, h, direct.dim)
    arrays = {"times": direct.times[steps], "gap": gap, "closed_gap": cgap}
    msg = f"sup gap {gap.max():.3e}, sup closed-form distance {cgap.max():.3e}"
    if "oracle" in cfg:
        oc = cfg["oracle"]
        rows = compare_filters(
            spec, path, frun,
            n_particles=int(oc.get("n_particles", 10_000)),
            seed=int(oc.get("seed", manifest.master_seed + 1)),
            steps=oc.get("steps"), q0=frun.q0,
            resample_threshold=float(oc.get("resample_threshold", 0.5)),
            n_boot=int(oc.get("n_boot", 200)))
        arrays.update({
            "oracle_t": np.array([r.t for r in rows]),
            "oracle_filter_mean": np.array([r.filter_mean for r in rows]),
            "oracle_particle_mean": np.array([r.particle_mean for r in rows]),
            "oracle_stderr": np.array([r.stderr for r in rows]),
            "oracle_z": np.array([r.z for r in rows]),
        })
        msg += f", worst particle z {max(r.z for r in rows):.2f}"
    _save_arrays(rundir, arrays)
    _emit_outputs(cfg, manifest, rundir, quiet)
    if not quiet:
        click.echo(msg + f" -> {rundir}")


@run_group.command(name="testbed")
@_run_options
def cmd_testbed(config_path, seed, out, quiet):
    """Run the general divergence-form equation and its energy report."""
    cfg = load_config(config_path)
    manifest, rundir = _start(cfg, "run testbed", seed, out)
    tb = cfg.get("testbed", {})
    family = tb.get("family", "heat")
    m = int(tb.get("n_channels", 1))
    if family == "heat":
        coeffs = heat_coefficients(m)
    elif family == "noisy_heat":
        coeffs = noisy_heat_coefficients(m)
    else:
        raise ConfigError(f"testbed.family {family!r} unknown")
    if "lam" in tb:
        coeffs.lam = float(tb["lam"])
    sim = cfg["simulation"]
    T = float(tb.get("T", sim["T"]))
    dt = float(tb.get("dt", sim["dt"]))
    axis = make_axis(float(tb.get("L", 8.0)), float(tb.get("h", 0.05)))
    u0 = np.exp(-axis ** 2 / 2.0) / np.sqrt(2.0 * np.pi)
    grun = run_general(coeffs, u0, axis, T=T, dt=dt,
                       seed=int(tb.get("seed", manifest.master_seed)))
    p = float(tb.get("p", 2.0))
    norms = (np.abs(grun.series) ** p).sum(axis=1) * grun.h
    rep = apriori_ratio(grun, p=p)
    idx = np.unique(np.linspace(0, grun.n_steps, 9).astype(int))
    _save_arrays(rundir, {
        "axis": axis, "times": grun.times, "norms": norms,
        "snapshot_times": grun.times[idx], "snapshots": grun.series[idx],
        "apriori": np.array([rep.numerator, rep.denominator]),
        "p": np.array([p]),
    })
    _emit_outputs(cfg, manifest, rundir, quiet)
    if not quiet:
        click.echo(f"{family} run, a-priori ratio {rep.ratio:.3f} -> {rundir}")


@run_group.command(name="check")
@click.option("--quiet", is_flag=True, help="Suppress the per-criterion table.")
@click.option("--out", type=click.Path(), default=None, help="Run directory.")
@click.option("--seed", type=int, default=None, help="Manifest seed label.")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Optional config; the criteria themselves are pinned.")
def cmd_check(config_path, seed, out, quiet):
    """Run the acceptance suite and print its pass/fail table."""
    cfg = load_config(config_path) if config_path else dict(_DEFAULT_CHECK_CFG)
    manifest, rundir = _start(cfg, "run check", seed, out)
    results = run_all(echo=None if quiet else click.echo)
    rows = [{"index": r.index, "name": r.name, "passed": bool(r.passed),
             "runtime": r.runtime, "detail": r.detail} for r in results]
    with open(rundir / "criteria.json", "w") as fh:
        json.dump(rows, fh, indent=2)
        fh.write("\n")
    manifest.acceptance = {
        "passed": sum(r.passed for r in results),
        "total": len(results),
        "failed_indices": [r.index for r in results if not r.passed],
    }
    manifest.write(rundir / "manifest.json")
    _emit_outputs(cfg, manifest, rundir, quiet)
    failed = [r for r in results if not r.passed]
    if failed:
        raise AcceptanceFailure(
            f"{len(failed)} of {len(results)} acceptance criteria failed: "
            + ", ".join(f"{r.index:02d} {r.name}" for r in failed))
    if not quiet:
        click.echo(f"acceptance table -> {rundir}")


@cli.command(name="export")
@click.argument("rundir", type=click.Path())
@click.option("--format", "fmt", required=True,
              type=click.Choice(list(_FORMATS)),
              help="Output format to (re-)emit.")
@click.option("--quiet", is_flag=True)
def cmd_export(rundir, fmt, quiet):
    """Re-emit a run directory's tables or plots from its stored arrays."""
    rundir = Path(rundir)
    manifest = load_manifest(rundir / "manifest.json")
    written = _export_rundir(rundir, manifest, fmt)
    if not quiet:
        for p in written:
            click.echo(f"wrote {p}")
        if not written:
            click.echo("nothing to export for this run kind")


def main(argv=None) -> int:
    """Console entry point mapping the exception taxonomy to exit codes."""
    try:
        rv = cli.main(args=argv, standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return 2
    except ModelValidationError as exc:
        click.echo(f"validation error: {exc}", err=True)
        return 2
    except ValueError as exc:
        click.echo(f"validation error: {exc}", err=True)
        return 2
    except NumericError as exc:
        click.echo(f"numeric failure: {exc}", err=True)
        return 3
    except AcceptanceFailure as exc:
        click.echo(str(exc), err=True)
        return 4
    return int(rv) if isinstance(rv, int) else 0


if __name__ == "__main__":
    raise SystemExit(main())
