"""Batch runner: ``hardylab {spectrum,sphere,frequency,blowup,verify-all}``.

The configuration is a flat ``key = value`` text file (``#`` starts a
comment).  Keys:

    N, k, s, alpha, g_amp, g_eps, r0, modes, seed      required in a file
    field          galerkin | mode | homogeneous       (default galerkin)
    field_index    mode or class index of the field    (default 0)
    outdir         output directory                    (default hardylab_out)
    c_s_scale      multiplies the Neumann constant     (default 1, audit sabotage)
    grids.r        number of radii of the profile      (default 40)
    grids.r_min    smallest radius                     (default 1e-4)
    grids.lambda_min  smallest blow-up scale           (default 1e-4)
    grids.theta    Sturm-Liouville grid size           (default 1000)
    grids.eigs     eigenvalues per spectrum            (default 3)
    grids.trials   seeded trials per Hardy audit       (default 100)
    grids.ell_max  largest angular degree of the catalog (default 0)

Without ``--config`` the built-in defaults below are used.  Exit codes:
0 when every audit passes, 1 on an audit failure, 2 on a usage or
configuration error.
"""
from __future__ import annotations

import argparse
import math
import sys
from functools import lru_cache
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import BACKEND
from .errors import ConfigError, ConvergenceError, DomainError, HardyLabError
from .io import write_csv, write_json
from .params import ProblemParams

__all__ = ["RunConfig", "load_config", "parse_config", "run_spectrum", "run_sphere",
           "run_frequency", "run_blowup", "run_verify_all", "main"]

_REQUIRED = ("N", "k", "s", "alpha", "g_amp", "g_eps", "r0", "modes", "seed")

_TYPES = {
    "N": int, "k": int, "s": float, "alpha": float, "g_amp": float, "g_eps": float,
    "r0": float, "modes": int, "seed": int, "outdir": str, "field": str,
    "field_index": int, "c_s_scale": float,
    "grids.r": int, "grids.r_min": float, "grids.lambda_min": float,
    "grids.theta": int, "grids.eigs": int, "grids.trials": int, "grids.ell_max": int,
}

DEFAULTS = {
    "N": 3, "k": 3, "s": 0.5, "alpha": 0.0, "g_amp": 1.0, "g_eps": 0.3, "r0": 0.2,
    "modes": 32, "seed": 0, "outdir": "hardylab_out", "field": "galerkin",
    "field_index": 0, "c_s_scale": 1.0,
    "grids.r": 40, "grids.r_min": 1e-4, "grids.lambda_min": 1e-4, "grids.theta": 1000,
    "grids.eigs": 3, "grids.trials": 100, "grids.ell_max": 0,
}

_FIELDS = ("galerkin", "mode", "homogeneous")

# audit tolerances, reported next to the measured values
TOL = {
    "closed_form": 1e-4,
    "hprime": 1e-5,
    "pohozaev": 1e-6,
    "v1_floor": -1e-10,
    "monotone": 1e-8,
    "constancy": 1e-8,
    "v2_drift": 0.2,
    "family": 0.05,
    "gamma_galerkin": 2e-2,
    "gamma_catalog": 1e-3,
    "beta_spread": 1e-3,
    "normalization": 1e-8,
}


@dataclass
class RunConfig:
    """Validated run configuration."""

    params: ProblemParams
    seed: int = 0
    outdir: Path = Path("hardylab_out")
    field: str = "galerkin"
    field_index: int = 0
    c_s_scale: float = 1.0
    grids: dict = dc_field(default_factory=dict)
    c_g: float | None = None  # effective potential amplitude used by the coercivity check

    @property
    def c_s(self) -> float:
        return self.params.c_s * self.c_s_scale

    def to_dict(self):
        p = self.params
        d = {"N": p.N, "k": p.k, "s": p.s, "alpha": p.alpha, "g_amp": p.g_amp, "g_eps": p.g_eps,
             "r0": p.r0, "modes": p.modes, "seed": self.seed, "field": self.field,
             "field_index": self.field_index, "c_s_scale": self.c_s_scale, "c_g": self.c_g,
             "coercivity_margin": p.coercivity_margin(self.c_g)}
        d.update({f"grids.{k}": v for k, v in self.grids.items()})
        return d


def _convert(key, text):
    kind = _TYPES[key]
    try:
        if kind is int:
            v = float(text)
            if v != int(v):
                raise ValueError
            return int(v)
        if kind is float:
            v = float(text)
            if not math.isfinite(v):
                raise ValueError
            return v
    except ValueError:
        raise ConfigError(f"key {key!r}: cannot read {text!r} as {kind.__name__}") from None
    return text


def parse_config(text: str, require: bool = True) -> dict:
    """Parse flat ``key = value`` text into a typed dict (defaults filled in)."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = _convert(key, val)
    if require:
        missing = [k for k in _REQUIRED if k not in raw]
        if missing:
            raise ConfigError(f"missing config key(s): {', '.join(missing)}")
    out = dict(DEFAULTS)
    out.update(raw)
    return out


@lru_cache(maxsize=4)
def _galerkin(params: ProblemParams):
    from .spectrum import galerkin_hardy_solve, radial_catalog
    return galerkin_hardy_solve(radial_catalog(params), params.g_amp, params.g_eps)


def build_config(values: dict) -> RunConfig:
    """Validate a typed dict and return a RunConfig."""
    try:
        params = ProblemParams(N=values["N"], k=values["k"], s=values["s"],
                               alpha=values["alpha"], g_amp=values["g_amp"],
                               g_eps=values["g_eps"], r0=values["r0"], modes=values["modes"])
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    if values["field"] not in _FIELDS:
        raise ConfigError(f"field must be one of {', '.join(_FIELDS)}")
    if values["field_index"] < 0:
        raise ConfigError("field_index must be nonnegative")
    if values["field"] == "mode" and values["field_index"] >= params.modes:
        raise ConfigError("field_index exceeds the number of modes")
    if not values["c_s_scale"] > 0.0:
        raise ConfigError("c_s_scale must be positive")
    grids = {k.split(".", 1)[1]: v for k, v in values.items() if k.startswith("grids.")}
    for key in ("r", "theta", "eigs", "trials"):
        if grids[key] < 1:
            raise ConfigError(f"grids.{key} must be positive")
    if grids["r"] < 10:
        raise ConfigError("grids.r must be at least 10")
    if not 0.0 < grids["r_min"] < params.r0:
        raise ConfigError("grids.r_min must lie in (0, r0)")
    if not 0.0 < grids["lambda_min"] < params.r0 / 4.0:
        raise ConfigError("grids.lambda_min must lie in (0, r0/4)")
    if grids["ell_max"] < 0:
        raise ConfigError("grids.ell_max must be nonnegative")
    c_g = params.g_amp
    if values["field"] == "galerkin" and params.k == params.N:
        try:
            c_g = _galerkin(params).c_g
        except HardyLabError as exc:
            raise ConfigError(f"Galerkin solve failed: {exc}") from None
    if params.coercivity_margin(c_g) <= 0.0:
        raise ConfigError(
            f"r0={params.r0} is too large: coercivity margin "
            f"{params.coercivity_margin(c_g):.4g} <= 0 with C_g={c_g:.6g}"
        )
    return RunConfig(params, values["seed"], Path(values["outdir"]), values["field"],
                     values["field_index"], values["c_s_scale"], grids, float(c_g))


def load_config(path=None, seed: int | None = None, outdir=None) -> RunConfig:
    """Read a config file (or the defaults) and apply command-line overrides."""
    if path is None:
        values = dict(DEFAULTS)
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        values = parse_config(text)
    if seed is not None:
        values["seed"] = seed
    if outdir is not None:
        values["outdir"] = str(outdir)
    return build_config(values)


# ------------------------------------------------------------------ audits

def _audit(name, value, tol, passed, **extra):
    d = {"name": name, "value": value, "tolerance": tol, "passed": bool(passed)}
    d.update(extra)
    return d


def _report(kind, cfg, audits, **extra):
    d = {"experiment": kind, "config": cfg.to_dict(), "backend": BACKEND, "audits": audits,
         "passed": all(a["passed"] for a in audits)}
    d.update(extra)
    return d


def _need_ball(cfg, what):
    if cfg.params.k != cfg.params.N:
        raise ConfigError(f"{what} needs an x-radial ball catalog (k = N)")


def build_field(cfg: RunConfig):
    """The extended field selected by ``field`` and ``field_index``."""
    from .extension import ExtendedField, HomogeneousField
    from .spectrum import SpectralField, radial_catalog

    p = cfg.params
    if cfg.field == "homogeneous":
        return HomogeneousField.single(p, cfg.field_index)
    if cfg.field == "mode":
        c = np.zeros(p.modes)
        c[cfg.field_index] = 1.0
        return ExtendedField(SpectralField(radial_catalog(p), c, f"mode-{cfg.field_index}"))
    return ExtendedField(_galerkin(p).field)


def run_spectrum(cfg: RunConfig) -> dict:
    """Mode catalog CSV plus the Hardy Rayleigh audit."""
    from .spectrum import build_catalog, hardy_rayleigh_audit

    _need_ball(cfg, "spectrum")
    p = cfg.params
    try:
        cat = build_catalog(p, cfg.grids["ell_max"], p.modes)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    cat.to_csv(cfg.outdir / "catalog.csv")
    hardy = hardy_rayleigh_audit(p, cfg.grids["trials"], cfg.seed)
    fam_gap = abs(hardy.family_ratios[-1] / hardy.constant - 1.0)
    audits = [
        _audit("hardy_violations", hardy.violations, 0, hardy.violations == 0),
        _audit("hardy_family_gap", fam_gap, TOL["family"], fam_gap <= TOL["family"]),
    ]
    rep = _report("spectrum", cfg, audits, mu_1=float(cat.mu[0]), hardy=hardy.to_dict())
    write_json(cfg.outdir / "spectrum.json", rep)
    return rep


def run_sphere(cfg: RunConfig) -> dict:
    """Hemisphere and S^{N-1} spectra against the closed forms, plus the spherical Hardy audit."""
    from .sphere import (eta_first_closed_form, gamma_first_closed_form, hemisphere_eigen,
                         spherical_hardy_audit, sprime_eigen)

    p = cfg.params
    n, neig = cfg.grids["theta"], cfg.grids["eigs"]
    audits = []
    extra = {}
    try:
        eta1 = None
        if p.k < p.N:
            ang = sprime_eigen(p, neig, n)
            eta1 = ang.eta1
            write_csv(cfg.outdir / "sprime_spectrum.csv", ["index", "eta"],
                      [(i + 1, e) for i, e in enumerate(ang.eta)])
            err = abs(eta1 - eta_first_closed_form(p))
            audits.append(_audit("eta1_closed_form", err, TOL["closed_form"],
                                 err <= TOL["closed_form"]))
        hemi = hemisphere_eigen(p, eta1, neig, n)
        hemi.to_csv(cfg.outdir / "hemisphere_spectrum.csv")
        closed = gamma_first_closed_form(p, eta1)
        err = abs(hemi.gamma1 - closed)
        audits.append(_audit("gamma1_closed_form", err, TOL["closed_form"],
                             err <= TOL["closed_form"], numeric=hemi.gamma1, closed=closed))
        extra["exponents"] = hemi.exponents
    except ConvergenceError as exc:
        print(f"warning: {exc}; refine grids.theta", file=sys.stderr)
        audits.append(_audit("grid_convergence", str(exc), None, False))
    hardy = spherical_hardy_audit(p, cfg.grids["trials"], cfg.seed)
    audits.append(_audit("sphere_hardy_violations", hardy.violations, 0, hardy.violations == 0))
    audits.append(_audit("gamma1_above_barrier", hardy.gamma1, hardy.lower_bound,
                         hardy.eigen_bound_ok))
    rep = _report("sphere", cfg, audits, hardy=hardy.to_dict(), **extra)
    write_json(cfg.outdir / "sphere.json", rep)
    return rep


def run_frequency(cfg: RunConfig) -> dict:
    """Frequency profile CSV and the identity and inequality audits."""
    from .almgren import (check_hprime, default_radii, doubling_audit, frequency_profile,
                          hardy_boundary_audit, v2_bound_audit)

    _need_ball(cfg, "frequency")
    p = cfg.params
    fld = build_field(cfg)
    radii = default_radii(p.r0, cfg.grids["r"], cfg.grids["r_min"])
    prof = frequency_profile(fld, radii, c_s=cfg.c_s)
    prof.to_csv(cfg.outdir / "frequency_profile.csv")
    hp = check_hprime(fld, profile=prof)
    poh = float(prof.pohozaev_residuals().max())
    barrier = -prof.half_gap
    audits = [
        _audit("hprime_residual", hp, TOL["hprime"], hp <= TOL["hprime"]),
        _audit("pohozaev_residual", poh, TOL["pohozaev"], poh <= TOL["pohozaev"]),
        _audit("v1_min", float(prof.v1.min()), TOL["v1_floor"],
               prof.v1.min() >= TOL["v1_floor"]),
        _audit("frequency_above_barrier", float(prof.N.min()), barrier, prof.N.min() > barrier),
    ]
    if fld.default_source.name == "none":
        drop = float(-np.diff(prof.N).min())
        audits.append(_audit("monotone_drop", drop, TOL["monotone"], drop <= TOL["monotone"]))
    if cfg.field == "homogeneous":
        dev = float(np.abs(prof.N - fld.gamma).max())
        audits.append(_audit("frequency_constancy", dev, TOL["constancy"],
                             dev <= TOL["constancy"], gamma=fld.gamma))
    v2_self = v2_bound_audit(prof, p.g_eps)
    extra = {"profile": prof.summary(), "v2_self": v2_self.to_dict()}
    if fld.target_source is not None:
        tprof = frequency_profile(fld, radii, source=fld.target_source, c_s=cfg.c_s)
        tprof.to_csv(cfg.outdir / "frequency_profile_target.csv")
        v2 = v2_bound_audit(tprof, p.g_eps)
        audits.append(_audit("v2_fit_drift", v2.drift, TOL["v2_drift"],
                             math.isfinite(v2.C_fit) and v2.drift < TOL["v2_drift"],
                             C_fit=v2.C_fit))
        extra["target_profile"] = tprof.summary()
    dbl = doubling_audit(fld)
    audits.append(_audit("doubling_violations", dbl.violations, 0, dbl.violations == 0,
                         C1=dbl.C1))
    bnd = hardy_boundary_audit(p, cfg.grids["trials"], cfg.seed)
    audits.append(_audit("boundary_hardy_violations", bnd.violations, 0, bnd.violations == 0))
    if bnd.family_ratios:
        gap = abs(bnd.family_ratios[-1] - 1.0)
        audits.append(_audit("boundary_family_gap", gap, TOL["family"], gap <= TOL["family"]))
    extra["boundary_hardy"] = bnd.to_dict()
    rep = _report("frequency", cfg, audits, **extra)
    write_json(cfg.outdir / "frequency.json", rep)
    return rep


def run_blowup(cfg: RunConfig) -> dict:
    """Blow-up report JSON and CSV."""
    from .blowup import blowup_analysis, dyadic_lambdas

    _need_ball(cfg, "blowup")
    p = cfg.params
    fld = build_field(cfg)
    lams = dyadic_lambdas(p.r0, cfg.grids["lambda_min"])
    rep = blowup_analysis(fld, lams=lams, c_s=cfg.c_s, n_classes=max(3, cfg.grids["eigs"]))
    rep.to_csv(cfg.outdir / "blowup.csv")
    tol_g = TOL["gamma_galerkin"] if cfg.field == "galerkin" else TOL["gamma_catalog"]
    dg = abs(rep.fit.gamma - rep.match.gamma_predicted)
    norm = float(np.max(np.abs(rep.normalization - 1.0)))
    audits = [
        _audit("gamma_fit", dg, tol_g, dg <= tol_g),
        _audit("class_unambiguous", rep.match.ambiguous, False, not rep.match.ambiguous),
        _audit("beta_spread", rep.beta.spread, TOL["beta_spread"],
               rep.beta.spread <= TOL["beta_spread"]),
        _audit("asymptotic_slope", rep.asymptotic.slope, rep.asymptotic.required,
               rep.asymptotic.passed),
        _audit("normalization", norm, TOL["normalization"], norm <= TOL["normalization"]),
        _audit("unique_continuation", rep.certificate.variation, 0.01, rep.certificate.passed),
    ]
    out = _report("blowup", cfg, audits, report=rep.to_dict())
    write_json(cfg.outdir / "blowup.json", out)
    return out


def run_verify_all(cfg: RunConfig) -> dict:
    """Every experiment in turn, aggregated into one pass/fail report."""
    runs = [("spectrum", run_spectrum), ("sphere", run_sphere),
            ("frequency", run_frequency), ("blowup", run_blowup)]
    results = {}
    for name, fn in runs:
        if name != "sphere" and cfg.params.k != cfg.params.N:
            results[name] = {"skipped": "needs k = N", "passed": True}
            continue
        rep = fn(cfg)
        results[name] = {"passed": rep["passed"],
                         "failed": [a["name"] for a in rep["audits"] if not a["passed"]]}
    out = {"experiment": "verify-all", "config": cfg.to_dict(), "results": results,
           "passed": all(r["passed"] for r in results.values())}
    write_json(cfg.outdir / "verify_all.json", out)
    return out


_COMMANDS = {
    "spectrum": run_spectrum,
    "sphere": run_sphere,
    "frequency": run_frequency,
    "blowup": run_blowup,
    "verify-all": run_verify_all,
}


def _parser():
    ap = argparse.ArgumentParser(prog="hardylab", description=__doc__.split("\n")[0])
    ap.add_argument("command", choices=sorted(_COMMANDS))
    ap.add_argument("--config", type=Path, default=None, help="flat key = value config file")
    ap.add_argument("--outdir", type=Path, default=None, help="output directory")
    ap.add_argument("--seed", type=int, default=None, help="seed of the randomized audits")
    return ap


def main(argv=None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        cfg = load_config(args.config, args.seed, args.outdir)
        rep = _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except HardyLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    status = "PASS" if rep["passed"] else "FAIL"
    print(f"{args.command}: {status} (outputs in {cfg.outdir})")
    return 0 if rep["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
