"""Experiment orchestration: config parsing, suites, artifact emission.

Config files are INI-style text with sections [params], [domain],
[potential], [grid], [suite], [tolerances], [output] plus per-suite
extras ([sweep], [oned]).  Every run emits a reports.jsonl (one JSON
object per line, each embedding the config hash and the tolerance set),
CSV tables, field snapshots in the flat binary layout, and for the
landmarks suite an SVG of the (t, z)-energy surface.

Exit codes: 0 all checks passed, 1 a criterion failed, 2 config error.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import domain as dom_mod
from . import fields, ground_state, interaction, minmax, scaling
from .svgplot import heatmap_svg

SUITES = (
    "ground-state",
    "scaling-check",
    "interaction",
    "landmarks",
    "solve",
    "one-dim",
    "verify-all",
)


class ConfigError(Exception):
    pass


@dataclass
class ExperimentConfig:
    params: scaling.ModelParams
    domain: dom_mod.ExteriorDomainSpec
    potential: dom_mod.PotentialSpec
    suite: str
    grid_cells: int
    grid_pad: float
    tol_scale: float
    solve_tol: float
    out_dir: Path
    r_values: tuple
    t_value: float
    oned_length: float
    oned_shifts: tuple
    rng_seed: int
    threads: int
    config_hash: str
    raw_text: str


def _get(cp, section, key, cast, default=None, required=False):
    try:
        if not cp.has_option(section, key):
            if required:
                raise ConfigError(f"[{section}] {key}: missing required key")
            return default
        raw = cp.get(section, key)
        return cast(raw)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from exc


def _floats(raw: str) -> tuple:
    return tuple(float(x) for x in raw.replace(",", " ").split())


def load_config(path: Path, suite: str | None = None, out_override=None,
                tol_scale_override=None, threads: int = 1) -> ExperimentConfig:
    text = Path(path).read_text()
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse failure: {exc}") from exc

    n_dim = _get(cp, "params", "n_dim", int, required=True)
    p = _get(cp, "params", "p", float, required=True)
    rho = _get(cp, "params", "rho", float, 1.0)
    try:
        params = scaling.ModelParams(n_dim=n_dim, p=p, rho=rho)
    except ValueError as exc:
        raise ConfigError(f"[params]: {exc}") from exc

    obstacle = _get(cp, "domain", "obstacle_radius", float, 0.0)
    cutoff = _get(cp, "domain", "cutoff_R", float, 0.0 if obstacle == 0 else obstacle + 1.5)
    try:
        domain = dom_mod.ExteriorDomainSpec(obstacle_radius=obstacle, cutoff_R=cutoff)
    except ValueError as exc:
        raise ConfigError(f"[domain]: {exc}") from exc

    form = _get(cp, "potential", "form", str, "zero")
    q_raw = _get(cp, "potential", "q", str, "inf")
    q = math.inf if q_raw in ("inf", "infty", "oo") else float(q_raw)
    try:
        potential = dom_mod.PotentialSpec(
            form=form,
            amplitude=_get(cp, "potential", "amplitude", float, 0.0),
            rate=_get(cp, "potential", "rate", float, 1.0),
            q=q,
        )
    except ValueError as exc:
        raise ConfigError(f"[potential]: {exc}") from exc
    if not potential.is_zero and not potential.admissible_q(n_dim):
        raise ConfigError(f"[potential] q={q} inadmissible for N={n_dim}")

    suite_name = suite or _get(cp, "suite", "name", str, required=True)
    if suite_name not in SUITES:
        raise ConfigError(f"[suite] name={suite_name!r} not one of {SUITES}")

    tol_scale = tol_scale_override if tol_scale_override is not None else _get(
        cp, "tolerances", "tol_scale", float, 1.0)
    if tol_scale <= 0:
        raise ConfigError("[tolerances] tol_scale must be positive")

    out_dir = Path(out_override or _get(cp, "output", "dir", str, "out"))

    cfg = ExperimentConfig(
        params=params,
        domain=domain,
        potential=potential,
        suite=suite_name,
        grid_cells=_get(cp, "grid", "cells", int, 384),
        grid_pad=_get(cp, "grid", "pad", float, 30.0),
        tol_scale=tol_scale,
        solve_tol=_get(cp, "tolerances", "solve_tol", float, 1e-5),
        out_dir=out_dir,
        r_values=_get(cp, "sweep", "r_values", _floats, (8.0, 12.0, 16.0, 20.0)),
        t_value=_get(cp, "sweep", "t_value", float, 0.3),
        oned_length=_get(cp, "oned", "length", float, 24.0),
        oned_shifts=_get(cp, "oned", "shifts", _floats, (3.0, 30.0)),
        rng_seed=_get(cp, "seeds", "rng_seed", int, 12345),
        threads=max(1, threads),
        config_hash=hashlib.sha256(text.encode()).hexdigest()[:16],
        raw_text=text,
    )
    return cfg


class Reporter:
    """Collects JSONL records and CSV/SVG/binary artifacts."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.records = []
        self.failures = []
        cfg.out_dir.mkdir(parents=True, exist_ok=True)

    def record(self, kind: str, payload: dict):
        rec = {
            "kind": kind,
            "config_hash": self.cfg.config_hash,
            "tol_scale": self.cfg.tol_scale,
            "solve_tol": self.cfg.solve_tol,
        }
        rec.update(payload)
        self.records.append(rec)

    def check(self, name: str, ok: bool, detail: str = ""):
        self.record("check", {"name": name, "ok": bool(ok), "detail": detail})
        line = f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else "")
        print(line)
        if not ok:
            self.failures.append(name)

    def write_csv(self, name: str, header, rows):
        path = self.cfg.out_dir / name
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")

    def write_text(self, name: str, text: str):
        (self.cfg.out_dir / name).write_text(text)

    def write_bytes(self, name: str, blob: bytes):
        (self.cfg.out_dir / name).write_bytes(blob)

    def finish(self) -> int:
        path = self.cfg.out_dir / "reports.jsonl"
        with open(path, "w") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec, sort_keys=True, default=_json_default) + "\n")
        return 1 if self.failures else 0


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o)}")


def _base_profile(cfg: ExperimentConfig):
    return ground_state.shoot_radial(cfg.params.n_dim, cfg.params.p, 1.0)


# ---------------------------------------------------------------------------
# Suites


def suite_ground_state(cfg: ExperimentConfig, rep: Reporter):
    tol = 1e-6 * cfg.tol_scale
    base = _base_profile(cfg)
    lam, prof = ground_state.normalize_to_mass(
        cfg.params.n_dim, cfg.params.p, cfg.params.rho, base=base)
    res = scaling.pohozaev_nehari_residuals(prof)
    ident = scaling.multiplier_identity(prof)
    c1, fit = ground_state.fit_decay_constant(prof)
    rep.record("ground_state", {
        "n_dim": cfg.params.n_dim, "p": cfg.params.p, "rho": cfg.params.rho,
        "lambda": lam, "mass_sq": prof.mass_sq, "energy": prof.energy,
        "c_decay": c1, "decay_fit": fit,
        "residuals": {"energy": res[0], "nehari": res[1], "pohozaev": res[2]},
        "multiplier_identity": ident["rel_discrepancy"],
    })
    rep.write_text("profile.txt", ground_state.profile_to_text(prof))
    rep.write_csv("profile.csv", ("r", "w", "dw"),
                  zip(prof.r_grid, prof.values, prof.deriv))
    rep.check("nehari-residual", abs(res[1]) < tol, f"{res[1]:.3e}")
    rep.check("pohozaev-residual", abs(res[2]) < tol, f"{res[2]:.3e}")
    rep.check("multiplier-identity", ident["rel_discrepancy"] < tol,
              f"{ident['rel_discrepancy']:.3e}")
    rep.check("decay-plateau", fit["plateau_spread"] < 0.01,
              f"spread {fit['plateau_spread']:.3e}")


def suite_scaling_check(cfg: ExperimentConfig, rep: Reporter):
    tol = 1e-6 * cfg.tol_scale
    base = _base_profile(cfg)
    consts = scaling.compute_exponents(cfg.params)
    rows = []
    ok_energy = ok_lambda = True
    for k in (0.25, 0.5, 0.75):
        sc = scaling.scaled_profile(base, k)
        direct = ground_state.shoot_radial(cfg.params.n_dim, cfg.params.p, sc.lam)
        e_rel = abs(sc.energy - direct.energy) / abs(direct.energy)
        l_rel = abs(sc.mass_sq - direct.mass_sq) / direct.mass_sq
        rows.append((k, sc.energy, direct.energy, e_rel, sc.lam, l_rel))
        ok_energy &= e_rel < tol
        ok_lambda &= l_rel < tol
    rep.write_csv("scaling.csv",
                  ("k", "scaled_energy", "shot_energy", "energy_rel",
                   "lambda", "mass_rel"), rows)
    rep.check("mass-fraction-energy-law", ok_energy)
    rep.check("mass-fraction-multiplier-law", ok_lambda)

    # multiplier-vs-mass exponent measured from independent shots
    lam_a, _ = ground_state.normalize_to_mass(cfg.params.n_dim, cfg.params.p, 1.0,
                                              base=base)
    rho_b = 2.0
    lam_b, _ = ground_state.normalize_to_mass(cfg.params.n_dim, cfg.params.p, rho_b,
                                              base=ground_state.shoot_radial(
                                                  cfg.params.n_dim, cfg.params.p, 2.0))
    measured = math.log(lam_b / lam_a) / math.log(rho_b)
    rep.record("multiplier_exponent", {
        "measured": measured, "two_s": 2.0 * consts.s, "s": consts.s,
    })
    rep.check("multiplier-mass-exponent",
              abs(measured - 2.0 * consts.s) < 1e-6 * max(1.0, 2.0 * consts.s),
              f"measured {measured:.8f} vs 2s = {2.0 * consts.s:.8f}")


def suite_interaction(cfg: ExperimentConfig, rep: Reporter):
    base = _base_profile(cfg)
    rho = math.sqrt(base.mass_sq)  # work at the lam = 1 mass scale
    params = scaling.ModelParams(cfg.params.n_dim, cfg.params.p, rho)
    consts = scaling.compute_exponents(params)
    t = cfg.t_value
    ps = scaling.scaled_profile(base, t)
    pb = scaling.scaled_profile(base, 1.0 - t)
    c1t, c2t = interaction.limit_constants(t, pb, rho**2, 1.0, consts.s)
    ests = []

    def one(r):
        return interaction.pair_estimate(r, t, ps, pb, rho**2, 1.0, consts.s,
                                         with_limits=False)

    with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
        ests = list(ex.map(one, cfg.r_values))
    rep.write_csv("interaction.csv",
                  ("t", "r", "delta", "tau", "sigma", "ratio_tau", "ratio_sigma"),
                  [(e.t, e.r, e.delta, e.tau, e.sigma, e.ratio_tau, e.ratio_sigma)
                   for e in ests])
    rep.record("interaction_limits", {"t": t, "c1t": c1t, "c2t": c2t})
    devs = [abs(e.ratio_tau - c1t) / c1t for e in ests]
    rep.check("tau-ratio-limit", max(devs[-3:]) < 0.02 * cfg.tol_scale,
              f"deviations {['%.4f' % d for d in devs]}")
    mono = all(x < y for x, y in zip([e.ratio_tau for e in ests][:-1],
                                     [e.ratio_tau for e in ests][1:]))
    rep.check("tau-ratio-monotone", mono)

    bound_vals = []
    for tt in (0.40, 0.42, 0.44, 0.46, 0.48, 0.49, 0.495, 0.499):
        pb2 = scaling.scaled_profile(base, 1.0 - tt)
        c1, _ = interaction.limit_constants(tt, pb2, rho**2, 1.0, consts.s)
        bound_vals.append((tt, c1, c1 * (0.5 - tt)))
    rep.write_csv("edge_constants.csv", ("t", "c1t", "c1t_times_gap"), bound_vals)
    prods = [v[2] for v in bound_vals]
    rep.check("edge-boundedness", max(prods) < 2.0 * float(np.median(prods)),
              f"max/median {max(prods) / float(np.median(prods)):.3f}")


def _landmark_grid(cfg: ExperimentConfig, r: float):
    half = 3.0 * r + cfg.grid_pad
    h = 2.0 * half / cfg.grid_cells
    return fields.make_grid((half,) * cfg.params.n_dim, h,
                            obstacle_radius=cfg.domain.obstacle_radius)


def _run_landmark(cfg: ExperimentConfig, base, r: float, c0="estimate"):
    grid = _landmark_grid(cfg, r)
    surf = minmax.build_surface(r, cfg.domain, cfg.potential, cfg.params, base,
                                grid, t_grid=np.linspace(0.0, 1.0, 17), z_count=32)
    wit = minmax.find_zero_barycenter(surf)
    if c0 == "estimate":
        est = minmax.estimate_c0(cfg.params, cfg.potential, cfg.domain, grid,
                                 base, witness=wit["field"])
        c0 = est["value"] if est["feasible"] else None
    report = minmax.landmarks(surf, c0=c0)
    return surf, wit, report


def suite_landmarks(cfg: ExperimentConfig, rep: Reporter):
    base = _base_profile(cfg)
    any_ok = False
    best = None
    # C0 does not depend on the separation parameter: estimate once on the
    # mid-sweep grid, reuse across the sweep
    mid = cfg.r_values[len(cfg.r_values) // 2]
    c0_shared = _run_landmark(cfg, base, mid)[2].c0
    for r in cfg.r_values:
        surf, wit, lm = _run_landmark(cfg, base, r, c0=c0_shared)
        rep.record("landmarks", {
            "r": r, "warnings": surf.warnings,
            "m": lm.m, "m_ode": lm.m_ode, "l_r": lm.l_r, "a_r": lm.a_r,
            "c0": lm.c0, "window_top": lm.window_top, "eta_h": lm.eta_h,
            "margins": lm.margins, "ordering_ok": lm.ordering_ok,
            "failures": lm.failures,
            "witness": {"t": wit["t"], "z": list(map(float, np.atleast_1d(wit["z"]))),
                        "beta_norm": float(np.linalg.norm(wit["beta"]))},
        })
        print(f"r={r}: ordering_ok={lm.ordering_ok} margins=" +
              " ".join(f"{k}={v:.3e}" for k, v in lm.margins.items() if v is not None))
        any_ok = any_ok or lm.ordering_ok
        if best is None or (lm.ordering_ok and not best[2].ordering_ok):
            best = (surf, wit, lm, r)
        rep.write_csv(f"energy_table_r{r:g}.csv",
                      ("t",) + tuple(f"z{j}" for j in range(len(surf.zs))),
                      [(t,) + tuple(row) for t, row in
                       zip(surf.t_grid, surf.energy_table)])
    surf = best[0]
    svg = heatmap_svg(surf.energy_table,
                      x_ticks=list(range(len(surf.zs))),
                      y_ticks=list(surf.t_grid),
                      x_label="direction index on the placement sphere",
                      y_label="mass fraction t",
                      title=f"two-bump energy surface, r={best[3]:g}")
    rep.write_text("energy_surface.svg", svg)
    rep.check("landmark-ordering", any_ok,
              "ordering holds for some r in the sweep" if any_ok
              else "no r in the sweep produced the full ordering")


def suite_solve(cfg: ExperimentConfig, rep: Reporter):
    base = _base_profile(cfg)
    r = cfg.r_values[len(cfg.r_values) // 2]
    surf, wit, lm = _run_landmark(cfg, base, r, c0=None)
    sol = minmax.saddle_search(wit["field"], cfg.params, cfg.potential,
                               cfg.domain, base, tol=cfg.solve_tol)
    rep.record("solve", {
        "r": r, "outcome": sol.outcome, "energy": sol.energy,
        "lambda": sol.lam, "residual_l2": sol.residual_l2,
        "residual_dual": sol.residual_dual, "sign_class": sol.sign_class,
        "in_window": sol.in_window, "window": list(sol.window),
        "iterations": sol.iterations, "drift": sol.drift,
        "history_tail": sol.history[-3:],
    })
    if sol.field is not None:
        rep.write_bytes("solution.field", fields.field_to_bytes(sol.field))
        rep.write_text("solution_centerline.csv", fields.centerline_csv(sol.field))
    rep.check("bound-state-accepted", sol.outcome == "accepted",
              f"outcome={sol.outcome} E={sol.energy:.6g} window={sol.window}")


def suite_one_dim(cfg: ExperimentConfig, rep: Reporter):
    if cfg.params.n_dim != 1:
        raise ConfigError("[suite] one-dim requires n_dim = 1")
    base = _base_profile(cfg)
    whole = minmax.one_dim_whole_line(cfg.params, cfg.potential, base,
                                      half_width=cfg.oned_length, h=0.05,
                                      r_probe=cfg.oned_length / 3.0,
                                      tol=cfg.solve_tol)
    rep.record("one_dim_whole_line", {
        "outcome": whole["report"].outcome, "energy": whole["report"].energy,
        "lambda": whole["report"].lam, "residual": whole["report"].residual_l2,
        "a_tilde": whole["a_tilde"], "l_tilde": whole["l_tilde"],
    })
    rep.check("whole-line-accepted", whole["report"].outcome == "accepted",
              whole["report"].outcome)

    lam_rho, _ = ground_state.normalize_to_mass(
        cfg.params.n_dim, cfg.params.p, cfg.params.rho, base=base)
    free = minmax.half_line_run(cfg.params, None, base, length=cfg.oned_length,
                                h=0.04, seed_at=2.4 / math.sqrt(lam_rho),
                                tol=cfg.solve_tol)
    rep.record("one_dim_half_line_free", {
        "outcome": free["report"].outcome, "energy": free["report"].energy,
        "drift": free["report"].drift,
    })
    rep.check("half-line-free-rejected",
              free["report"].outcome in ("escape-translation", "rejected-floor"),
              free["report"].outcome)

    last = None
    for shift in cfg.oned_shifts:
        length = max(cfg.oned_length, 2.0 * shift)
        run = minmax.half_line_run(cfg.params, cfg.potential, base, length=length,
                                   h=0.05, potential_shift=shift, seed_at=shift,
                                   tol=cfg.solve_tol)
        rep.record("one_dim_half_line_shifted", {
            "shift": shift, "outcome": run["report"].outcome,
            "energy": run["report"].energy, "drift": run["report"].drift,
        })
        last = run
    rep.check("half-line-shifted-accepted", last["report"].outcome == "accepted",
              f"largest shift {cfg.oned_shifts[-1]}: {last['report'].outcome}")


def suite_verify_all(cfg: ExperimentConfig, rep: Reporter):
    suite_ground_state(cfg, rep)
    suite_scaling_check(cfg, rep)
    # elementary inequality spot checks
    rng = np.random.default_rng(cfg.rng_seed)
    consts = scaling.compute_exponents(cfg.params)
    worst = 0.0
    for _ in range(2000):
        a, b = rng.uniform(0.0, 10.0, size=2)
        pp = rng.uniform(2.0, 6.0)
        worst = min(worst, scaling.elementary_power_inequality(a, b, pp))
    rep.check("power-inequality", worst >= -1e-12, f"worst slack {worst:.3e}")
    ok = True
    for tt in np.linspace(0.0, 1.0 / 3.0, 40):
        for ss in np.linspace(0.05, 4.0, 40):
            out = scaling.splitting_inequalities(tt, ss)
            ok &= out["split_ok"] and out["concavity_ok"]
    rep.check("splitting-inequalities", ok)
    th = dom_mod.smallness_threshold_wholespace(
        cfg.potential.q if not cfg.potential.is_zero else math.inf, cfg.params,
        ground_state.normalize_to_mass(cfg.params.n_dim, cfg.params.p, 1.0,
                                       base=_base_profile(cfg))[1],
    )
    rep.record("threshold", {"L": th["power_law"], "exponent": th["exponent"]})


def run(cfg: ExperimentConfig) -> int:
    rep = Reporter(cfg)
    rep.record("config", {
        "suite": cfg.suite,
        "n_dim": cfg.params.n_dim, "p": cfg.params.p, "rho": cfg.params.rho,
        "obstacle_radius": cfg.domain.obstacle_radius,
        "potential_form": cfg.potential.form,
        "potential_amplitude": cfg.potential.amplitude,
        "threads": cfg.threads,
    })
    dispatch = {
        "ground-state": suite_ground_state,
        "scaling-check": suite_scaling_check,
        "interaction": suite_interaction,
        "landmarks": suite_landmarks,
        "solve": suite_solve,
        "one-dim": suite_one_dim,
        "verify-all": suite_verify_all,
    }
    dispatch[cfg.suite](cfg, rep)
    return rep.finish()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nlsbound",
        description="Normalized bound-state experiments for the mass-constrained "
                    "Schroedinger equation on R^N and exterior domains.",
    )
    sub = parser.add_subparsers(dest="suite", required=True)
    for name in SUITES:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="INI config file")
        sp.add_argument("--out", default=None, help="output directory override")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--tol-scale", type=float, default=None,
                        help="multiply all pass/fail tolerances")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(Path(args.config), suite=args.suite,
                          out_override=args.out,
                          tol_scale_override=args.tol_scale,
                          threads=args.threads)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
