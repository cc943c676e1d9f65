"""Command-line driver: coefficient sweeps, spectrum certification, PDE and
sharp-interface runs, and the cross-model validation experiment.

Configuration is plain INI (key = value under [section]); unknown sections
or keys are rejected so scripted sweeps fail loudly on typos.  Every run
writes a manifest.json with the effective parameters; pipelines are
deterministic (no randomness), so identical configs reproduce identical
CSV artifacts byte for byte.

Exit codes: 0 all checks passed; 2 a numerical event (interface collapse or
self-intersection) was encountered but the run completed; 1 failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from concurrent import futures
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, coefficients, curveflow, interface, line1d, pnls2d, spectra
from .params import PhysicalParams, ScaledParams, figure_path_beta, scale_params

MODES = ("coeffs", "spectrum", "pde", "curve", "xval", "sweep")

# section -> key -> (parser, default); None default means "no default"
_SCHEMA = {
    "run": {
        "mode": (str, None),
        "output": (str, "runs/out"),
    },
    "params": {
        "a": (float, None),
        "gamma": (float, None),
        "beta": (float, None),
        "mu": (float, None),
        "eps": (float, None),
        "box": (float, 12.0),
    },
    "line1d": {
        "half_width": (float, 20.0),
        "n": (int, 2048),
    },
    "coeffs": {
        "mu_list": (str, ""),
        "beta_rule": (str, "path"),
        "with_spectrum": (bool, False),
    },
    "spectrum": {
        "mu_list": (str, ""),
        "beta": (str, "3.0"),
    },
    "pde": {
        "n_grid": (int, 256),
        "dt": (float, 0.01),
        "t_end": (float, 100.0),
        "snapshot_every": (float, 10.0),
        "dealias": (bool, True),
        "ic": (str, "circle"),
        "radius": (float, 3.0),
        "wobble": (float, 0.1),
        "save_png": (bool, True),
        "save_fields": (bool, False),
    },
    "curve": {
        "n_markers": (int, 256),
        "dT": (float, 0.001),
        "T_end": (float, 10.0),
        "record_every": (float, 0.1),
        "ic": (str, "perturbed"),
        "radius": (float, 3.0),
        "wobble": (float, 0.1),
    },
    "xval": {
        "compare_window": (float, 0.25),
    },
    "sweep": {
        "mode": (str, "coeffs"),
        "mu_list": (str, ""),
        "workers": (int, 2),
    },
}


class ConfigError(ValueError):
    pass


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    """Validated, defaulted run configuration."""

    mode: str
    scaled: ScaledParams
    values: dict = field(default_factory=dict)  # section -> key -> value
    output_dir: Path = Path("runs/out")

    def get(self, section: str, key: str):
        return self.values[section][key]

    def echo(self) -> dict:
        out = {sec: dict(kv) for sec, kv in self.values.items()}
        out["effective_params"] = {
            "beta": self.scaled.beta,
            "mu": self.scaled.mu,
            "theta": self.scaled.theta,
            "eps": self.scaled.eps,
            "box": self.scaled.box,
        }
        out["version"] = __version__
        out["mode"] = self.mode
        return out


def _typed(section: str, key: str, raw):
    try:
        spec = _SCHEMA[section][key]
    except KeyError:
        raise ConfigError(f"unknown key [{section}] {key}") from None
    parser, _ = spec
    if parser is bool:
        return _parse_bool(raw)
    try:
        return parser(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for [{section}] {key}: {raw!r}") from None


def validate_config(path=None, overrides=None, mode=None) -> RunConfig:
    """Parse, default and range-check a config file plus CLI overrides.

    `overrides` is a list of "section.key=value" strings.  Unknown keys are
    errors.  Exactly one of the (a, gamma) / (beta, mu) parameterizations
    must be given.
    """
    values = {sec: {k: d for k, (_, d) in kv.items()} for sec, kv in _SCHEMA.items()}
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"config file not found: {path}")
        for section in parser.sections():
            if section not in _SCHEMA:
                raise ConfigError(f"unknown section [{section}]")
            for key, raw in parser.items(section):
                values[section][key] = _typed(section, key, raw)
    for item in overrides or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must be section.key=value: {item!r}")
        target, raw = item.split("=", 1)
        section, key = target.split(".", 1)
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        values[section][key] = _typed(section, key, raw)

    cfg_mode = mode or values["run"]["mode"]
    if cfg_mode is None:
        raise ConfigError("no mode given (CLI verb or [run] mode)")
    if cfg_mode not in MODES:
        raise ConfigError(f"unknown mode {cfg_mode!r}; choose from {MODES}")
    if mode and values["run"]["mode"] not in (None, mode):
        raise ConfigError(
            f"config mode {values['run']['mode']!r} conflicts with verb {mode!r}"
        )

    p = values["params"]
    physical = p["a"] is not None or p["gamma"] is not None
    scaled_given = p["beta"] is not None or p["mu"] is not None
    if physical and scaled_given:
        raise ConfigError("give either (a, gamma) or (beta, mu), not both")
    if not physical and not scaled_given:
        raise ConfigError("missing parameters: need (a, gamma) or (beta, mu)")
    if p["eps"] is None:
        raise ConfigError("missing eps")
    if not 0.0 < p["eps"] < 1.0:
        raise ConfigError(f"eps out of range (0, 1): {p['eps']}")
    if physical:
        if p["a"] is None or p["gamma"] is None:
            raise ConfigError("physical parameterization needs both a and gamma")
        scaled = scale_params(PhysicalParams(a=p["a"], gamma=p["gamma"],
                                             eps=p["eps"], box=p["box"]))
    else:
        if p["beta"] is None or p["mu"] is None:
            raise ConfigError("scaled parameterization needs both beta and mu")
        if not -1.0 <= p["mu"] <= 3.0:
            raise ConfigError(f"mu out of range [-1, 3]: {p['mu']}")
        if not p["beta"] > 0.0:
            raise ConfigError(f"beta must be positive: {p['beta']}")
        scaled = ScaledParams(beta=p["beta"], mu=p["mu"], theta=0.0,
                              eps=p["eps"], box=p["box"])
    return RunConfig(mode=cfg_mode, scaled=scaled, values=values,
                     output_dir=Path(values["run"]["output"]))


def _write_manifest(config: RunConfig, outdir: Path, extra=None) -> None:
    payload = config.echo()
    if extra:
        payload.update(extra)
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(payload, fh, indent=2, default=str)


def _mu_list(text: str, fallback: float) -> list[float]:
    if not text.strip():
        return [fallback]
    return [float(tok) for tok in text.replace(";", ",").split(",") if tok.strip()]


def _grid_from(config: RunConfig) -> line1d.LineGrid:
    return line1d.build_grid(config.get("line1d", "half_width"),
                             config.get("line1d", "n"))


def _run_coeffs(config: RunConfig, outdir: Path) -> int:
    grid = _grid_from(config)
    mus = _mu_list(config.get("coeffs", "mu_list"), config.scaled.mu)
    rule = config.get("coeffs", "beta_rule")
    if rule not in ("path",):
        rule = float(rule)
    records = coefficients.coefficient_table(
        mus, beta_rule=rule, grid=grid,
        with_spectrum=config.get("coeffs", "with_spectrum"))
    coefficients.table_to_csv(records, outdir / "coefficients.csv", grid=grid)
    failures = [r for r in records if not np.isfinite(r.alpha0)]
    _write_manifest(config, outdir, {"points": len(records),
                                     "failed_points": len(failures)})
    print(f"coeffs: {len(records)} points -> {outdir/'coefficients.csv'}")
    return 0 if not failures else 2


def _run_spectrum(config: RunConfig, outdir: Path) -> int:
    grid = _grid_from(config)
    mus = _mu_list(config.get("spectrum", "mu_list"), config.scaled.mu)
    beta_rule = config.get("spectrum", "beta")
    ok = True
    for mu in mus:
        beta = figure_path_beta(mu) if beta_rule == "path" else float(beta_rule)
        report = spectra.point_spectrum(mu, beta, grid)
        name = f"spectrum_mu{mu:+.4f}.json".replace("+", "p").replace("-", "m")
        report.to_json(outdir / name)
        ok = ok and report.certified
        print(f"spectrum mu={mu:+.4f} beta={beta:.3f}: kernel_dim="
              f"{report.kernel_dim} gap={report.gap:.5f} "
              f"bound={report.spectral_bound:.5f} certified={report.certified}")
    _write_manifest(config, outdir, {"points": len(mus)})
    return 0 if ok else 2


def _pde_initial_state(config: RunConfig, grid2: pnls2d.PeriodicGrid2D):
    kind = config.get("pde", "ic")
    if kind == "circle":
        return pnls2d.perturbed_circle_ic(config.scaled, grid2,
                                          radius=config.get("pde", "radius"),
                                          wobble=config.get("pde", "wobble"))
    if kind == "stripe":
        return pnls2d.stripe_ic(config.scaled, grid2)
    raise ConfigError(f"unknown pde ic {kind!r}")


def _save_png(field, box, vmax, path, title):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(4.2, 4.0))
    im = ax.imshow(field, origin="lower", extent=[0, box, 0, box],
                   cmap="viridis", vmin=0.0, vmax=vmax)
    ax.set_title(title)
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def _run_pde(config: RunConfig, outdir: Path) -> int:
    sp = config.scaled
    grid2 = pnls2d.build_grid2d(sp.box, config.get("pde", "n_grid"), sp.eps)
    cfg = pnls2d.SolverConfig(dt=config.get("pde", "dt"),
                              t_end=config.get("pde", "t_end"),
                              snapshot_every=config.get("pde", "snapshot_every"),
                              dealias=config.get("pde", "dealias"),
                              store_fields=True)
    ic = _pde_initial_state(config, grid2)
    record = pnls2d.simulate(ic, sp, cfg)
    record.series.to_csv(outdir / "interface.csv")
    vmax = 2.0 / np.sqrt(sp.beta)
    if config.get("pde", "save_png"):
        for tau, amp in record.snapshots:
            _save_png(amp, sp.box, vmax, outdir / f"theta_tau{tau:09.2f}.png",
                      f"|Theta| at tau = {tau:.1f}")
    if config.get("pde", "save_fields"):
        for tau, p in record.p_fields:
            np.savetxt(outdir / f"p_tau{tau:09.2f}.csv", p, delimiter=",")
    _write_manifest(config, outdir, {
        "events": [[t, name] for t, name in record.events],
        "final_tau": record.final_state.tau if record.final_state else None,
    })
    print(f"pde: {len(record.times)} snapshots, events: {record.events}")
    if any(name == "blow_up" for _, name in record.events):
        return 1
    return 2 if record.events else 0


def _curve_initial(config: RunConfig) -> curveflow.ClosedCurve:
    m = config.get("curve", "n_markers")
    radius = config.get("curve", "radius")
    center = (config.scaled.box / 2.0, config.scaled.box / 2.0)
    if config.get("curve", "ic") == "circle":
        return curveflow.circle(radius, m, center)
    wob = config.get("curve", "wobble")
    t = 2.0 * np.pi * np.arange(m) / m
    r = radius + wob * (np.sin(3 * t) - np.sin(7 * t) ** 2)
    pts = np.column_stack([center[0] + r * np.cos(t), center[1] + r * np.sin(t)])
    return curveflow.ClosedCurve(markers=pts)


def _run_curve(config: RunConfig, outdir: Path) -> int:
    grid = _grid_from(config)
    rec = coefficients.compute_record(config.scaled.mu, config.scaled.beta, grid)
    curve = _curve_initial(config)
    traj = curveflow.evolve(curve, rec, config.scaled.eps,
                            dT=config.get("curve", "dT"),
                            T_end=config.get("curve", "T_end"),
                            record_every=config.get("curve", "record_every"))
    traj.to_csv(outdir / "trajectory.csv")
    _write_manifest(config, outdir, {
        "alpha0": rec.alpha0, "nu": rec.nu, "zeta": rec.zeta,
        "events": [[t, name] for t, name in traj.events],
    })
    print(f"curve: {len(traj.times)} records, events: {traj.events}")
    return 2 if traj.events else 0


def _run_xval(config: RunConfig, outdir: Path) -> int:
    """Paired PDE / sharp-interface circle comparison with tau = T/eps^2."""
    sp = config.scaled
    grid = _grid_from(config)
    rec = coefficients.compute_record(sp.mu, sp.beta, grid)
    rstar = sp.eps * rec.equilibrium_radius_factor

    grid2 = pnls2d.build_grid2d(sp.box, config.get("pde", "n_grid"), sp.eps)
    cfg = pnls2d.SolverConfig(dt=config.get("pde", "dt"),
                              t_end=config.get("pde", "t_end"),
                              snapshot_every=config.get("pde", "snapshot_every"),
                              dealias=config.get("pde", "dealias"),
                              store_fields=True)
    ic = _pde_initial_state(config, grid2)
    record = pnls2d.simulate(ic, sp, cfg)
    record.series.to_csv(outdir / "interface.csv")

    taus, radii = [], []
    for tau, p in _pde_radius_series(record, grid2):
        taus.append(tau)
        radii.append(p)
    taus = np.array(taus)
    radii = np.array(radii)

    window = config.get("xval", "compare_window")
    i0 = max(1, int(window * len(taus)))
    comparison = []
    if len(taus) > i0 + 2:
        t_end_T = (taus[-1] - taus[i0]) * sp.eps**2
        T_ode, R_ode = curveflow.circle_ode(radii[i0], rec, sp.eps, t_end_T)
        R_interp = np.interp((taus[i0:] - taus[i0]) * sp.eps**2, T_ode, R_ode)
        rel = np.abs(radii[i0:] - R_interp) / np.maximum(R_interp, 1e-12)
        comparison = [
            {"tau": float(t), "R_pde": float(rp), "R_ode": float(ro),
             "rel_diff": float(rd)}
            for t, rp, ro, rd in zip(taus[i0:], radii[i0:], R_interp, rel)
        ]
        with open(outdir / "xval.csv", "w") as fh:
            fh.write("tau,R_pde,R_ode,rel_diff\n")
            for row in comparison:
                fh.write(f"{row['tau']:.6g},{row['R_pde']:.8g},"
                         f"{row['R_ode']:.8g},{row['rel_diff']:.4g}\n")
    _write_manifest(config, outdir, {
        "alpha0": rec.alpha0, "nu": rec.nu, "zeta": rec.zeta,
        "R_star": rstar,
        "R_pde_final": float(radii[-1]) if len(radii) else None,
        "max_rel_diff": max((r["rel_diff"] for r in comparison), default=None),
        "events": [[t, name] for t, name in record.events],
    })
    print(f"xval: R* = {rstar:.4f}, final PDE radius = "
          f"{radii[-1] if len(radii) else float('nan'):.4f}")
    return 2 if record.events else 0


def _pde_radius_series(record, grid2):
    for (tau, pfield) in record.p_fields or []:
        cs = interface.extract_contours(pfield, grid2.box)
        if cs:
            yield tau, interface.mean_radius(max(cs, key=lambda c: len(c.points)))


def _run_sweep(config: RunConfig, outdir: Path) -> int:
    inner_mode = config.get("sweep", "mode")
    if inner_mode not in ("coeffs", "spectrum", "pde"):
        raise ConfigError(f"sweep mode must be coeffs/spectrum/pde, got {inner_mode!r}")
    mus = _mu_list(config.get("sweep", "mu_list"), config.scaled.mu)
    workers = max(1, config.get("sweep", "workers"))
    jobs = []
    for mu in mus:
        sub = outdir / f"mu{mu:+.4f}".replace("+", "p").replace("-", "m")
        sub.mkdir(parents=True, exist_ok=True)
        overrides = [
            f"params.mu={mu}",
            f"params.beta={figure_path_beta(mu)}",
            f"params.eps={config.scaled.eps}",
            f"params.box={config.scaled.box}",
            f"run.output={sub}",
        ]
        jobs.append((inner_mode, overrides))
    codes = []
    with futures.ProcessPoolExecutor(max_workers=workers) as pool:
        for code in pool.map(_sweep_job, jobs):
            codes.append(code)
    _write_manifest(config, outdir, {"points": len(jobs), "codes": codes})
    return max(codes) if codes else 0


def _sweep_job(job) -> int:
    mode, overrides = job
    config = validate_config(None, overrides=overrides, mode=mode)
    return run(config)


_DISPATCH = {
    "coeffs": _run_coeffs,
    "spectrum": _run_spectrum,
    "pde": _run_pde,
    "curve": _run_curve,
    "xval": _run_xval,
    "sweep": _run_sweep,
}


def run(config: RunConfig) -> int:
    """Execute a validated config; returns the process exit code."""
    outdir = config.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        return _DISPATCH[config.mode](config, outdir)
    except pnls2d.BlowUpError as exc:
        with open(outdir / "error.json", "w") as fh:
            json.dump({"error": str(exc)}, fh)
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="darkfront",
        description="dark-soliton interface dynamics: coefficients, spectra, "
                    "PDE and sharp-interface solvers")
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("-c", "--config", help="INI config file")
    parser.add_argument("-s", "--set", dest="overrides", action="append",
                        default=[], metavar="SECTION.KEY=VALUE",
                        help="override a config value (repeatable)")
    parser.add_argument("-o", "--output", help="output directory")
    args = parser.parse_args(argv)
    try:
        config = validate_config(args.config, overrides=args.overrides,
                                 mode=args.mode)
        if args.output:
            config.output_dir = Path(args.output)
            config.values["run"]["output"] = args.output
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
