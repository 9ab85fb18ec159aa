"""Batch command-line front end.

One JSON config per run; results land in an output directory as CSV/JSON
tables plus a manifest.json recording the config hash, library versions,
wall time and headline statistics. All file writes are atomic
(temp-then-rename) and CSV bodies are deterministic for identical configs.

Exit codes: 0 success, 2 config or model validation failure, 3 numerical
failure (the failing operation is named on stderr).
"""

from __future__ import annotations

import argparse
import concurrent.futures as cf
import hashlib
import json
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__, optical
from .errors import (ConfigError, DisscatError, DomainError,
                     ExceptionalPointError, NumericalFailure,
                     SpectralSingularityError)
from .models import (BUILTIN_NAMES, Interval, builtin_model, interior_grid,
                     model_from_json, validate_model)
from .oracle import (default_horizon, discretize, intertwining_residual,
                     scatt_operator, wave_minus)
from .scattering import s_matrix
from .singularity import scan

COMMANDS = ("validate", "smatrix-scan", "singularity-scan", "oracle-compare",
            "optical-scan", "resonance-find")

_G17 = "%.17g"


class RunConfig:
    """Parsed and validated run configuration."""

    def __init__(self, raw, sha, out_override=None):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        self.raw = raw
        self.sha = sha
        cmd = raw.get("command")
        if cmd is not None and cmd not in COMMANDS:
            raise ConfigError(f"unknown command {cmd!r}; known: {COMMANDS}")
        self.command = cmd

        grid = raw.get("grid") or {}
        if not isinstance(grid, dict):
            raise ConfigError("grid must be an object")
        self.grid_n = int(grid.get("n", 101))
        if self.grid_n < 3:
            raise ConfigError("grid.n must be at least 3")
        self.grid_lo = grid.get("lo")
        self.grid_hi = grid.get("hi")

        oracle = raw.get("oracle") or {}
        if not isinstance(oracle, dict):
            raise ConfigError("oracle must be an object")
        self.n_nodes = int(oracle.get("n_nodes", 200))
        self.t_factor = float(oracle.get("T_factor", 1.0))
        self.dt_factor = float(oracle.get("dt_factor", 1.0))
        if self.t_factor <= 0 or self.dt_factor <= 0:
            raise ConfigError("oracle factors must be positive")

        out = raw.get("output") or {}
        if not isinstance(out, dict):
            raise ConfigError("output must be an object")
        self.out_dir = out_override or out.get("directory") or "."
        formats = out.get("formats", ["csv", "json"])
        if not isinstance(formats, list) or not formats:
            raise ConfigError("output.formats must be a nonempty list")
        bad = set(formats) - {"csv", "json"}
        if bad:
            raise ConfigError(f"unsupported output formats: {sorted(bad)}")
        self.formats = tuple(dict.fromkeys(formats))

        self.model_spec = raw.get("model")
        self.optical_spec = raw.get("optical") or {}

    def interval_override(self):
        if self.grid_lo is None and self.grid_hi is None:
            return None
        if self.grid_lo is None or self.grid_hi is None:
            raise ConfigError("grid.lo and grid.hi must be given together")
        return Interval(float(self.grid_lo), float(self.grid_hi))

    def resolve_model(self):
        spec = self.model_spec
        if spec is None:
            raise ConfigError("config needs a 'model' entry for this command")
        try:
            if isinstance(spec, str):
                return builtin_model(spec, interval=self.interval_override())
            if isinstance(spec, dict) and "builtin" in spec:
                return builtin_model(spec["builtin"],
                                     interval=self.interval_override(),
                                     params=spec.get("params"))
            if isinstance(spec, dict):
                return model_from_json(spec)
        except KeyError as exc:
            raise ConfigError(f"bad model spec: missing {exc}") from exc
        raise ConfigError(
            f"model must be a builtin name from {BUILTIN_NAMES} or an inline object")

    def resolve_potentials(self):
        spec = self.optical_spec
        try:
            v = optical.potential_from_json(spec.get("v", {"family": "zero"}))
            w = optical.potential_from_json(spec.get("w", {"family": "zero"}))
            r_match = float(spec.get("r_match", 6.0))
            ell_max = int(spec.get("ell_max", optical.ELL_MAX_DEFAULT))
            ode = spec.get("ode") or {}
            ode_kwargs = {}
            for key, cast in (("r_min", float), ("rtol", float),
                              ("atol", float), ("max_steps", int)):
                if key in ode:
                    ode_kwargs[key] = cast(ode[key])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad optical spec: {exc}") from exc
        if ell_max < 0:
            raise ConfigError("optical.ell_max must be nonnegative")
        return v, w, r_match, ell_max, ode_kwargs


def load_config(path, out_override=None):
    try:
        with open(path, "rb") as f:
            raw_bytes = f.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(raw_bytes.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return RunConfig(raw, hashlib.sha256(raw_bytes).hexdigest(), out_override)


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-disscat-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _write_outputs(cfg, name, csv_text, json_obj):
    written = []
    if "csv" in cfg.formats and csv_text is not None:
        p = os.path.join(cfg.out_dir, f"{name}.csv")
        _atomic_write(p, csv_text)
        written.append(p)
    if "json" in cfg.formats and json_obj is not None:
        p = os.path.join(cfg.out_dir, f"{name}.json")
        _atomic_write(p, json.dumps(json_obj, indent=2, sort_keys=True) + "\n")
        written.append(p)
    return written


def _c(x):
    return [float(np.real(x)), float(np.imag(x))]


# ---------------------------------------------------------------------------
# command implementations (each returns a summary dict for the manifest)


def _cmd_validate(cfg, pool):
    model = cfg.resolve_model()
    report = validate_model(model)
    obj = {
        "ok": report.ok,
        "violations": report.violations,
        "stats": report.stats,
        "model": model.name,
    }
    _write_outputs(cfg, "validate", None, obj)
    if not report.ok:
        raise ConfigError(
            "model validation failed: "
            + "; ".join(v["code"] for v in report.violations))
    return {"ok": True, "model": model.name}


def _scan_lams(model, n):
    return interior_grid(model.interval, n)


def _cmd_smatrix_scan(cfg, pool):
    model = cfg.resolve_model()
    lams = _scan_lams(model, cfg.grid_n)
    results = list(pool.map(lambda la: s_matrix(model, la), lams))
    k = model.k
    cols = ["lambda", "sigma_min", "sigma_max", "defect_min_eig"]
    for a in range(k):
        for b in range(k):
            cols += [f"re_s_{a}{b}", f"im_s_{a}{b}"]
    lines = [",".join(cols)]
    rows_json = []
    for r in results:
        dmin = float(np.linalg.eigvalsh(r.defect).min())
        vals = [r.lam, r.sigma_min, r.sigma_max, dmin]
        for a in range(k):
            for b in range(k):
                vals += [r.s[a, b].real, r.s[a, b].imag]
        lines.append(",".join(_G17 % v for v in vals))
        rows_json.append({
            "lambda": r.lam,
            "sigma_min": r.sigma_min,
            "sigma_max": r.sigma_max,
            "defect_min_eig": dmin,
            "s": [[_c(r.s[a, b]) for b in range(k)] for a in range(k)],
            "residuals": r.cross_check_residuals,
        })
    _write_outputs(cfg, "smatrix-scan", "\n".join(lines) + "\n",
                   {"model": model.name, "rows": rows_json})
    return {
        "model": model.name,
        "n_lambda": len(lams),
        "max_sigma_max": max(r.sigma_max for r in results),
        "min_sigma_min": min(r.sigma_min for r in results),
        "max_cross_residual": max(max(r.cross_check_residuals.values())
                                  for r in results),
    }


def _cmd_singularity_scan(cfg, pool):
    model = cfg.resolve_model()
    report = scan(model, n_grid=cfg.grid_n)
    _write_outputs(cfg, "singularity-scan", report.to_csv(),
                   report.to_json_dict())
    return {
        "model": model.name,
        "n_singular": len(report.singular_points),
        "singular_lams": [p["lam_refined"] for p in report.singular_points],
        "finite_set": report.finite_set,
    }


def _cmd_oracle_compare(cfg, pool):
    model = cfg.resolve_model()
    sysd = discretize(model, cfg.n_nodes)
    t_def, dt_def = default_horizon(sysd)
    res = scatt_operator(sysd, t_final=cfg.t_factor * t_def,
                         dt=cfg.dt_factor * dt_def)
    wm = wave_minus(sysd, cfg.t_factor * t_def, cfg.dt_factor * dt_def)
    k = sysd.k
    idx = res.node_indices
    stat = list(pool.map(lambda j: s_matrix(model, sysd.nodes[j]).s, idx))
    cols = ["lambda", "rel_err"]
    for a in range(k):
        for b in range(k):
            cols += [f"re_dyn_{a}{b}", f"im_dyn_{a}{b}",
                     f"re_stat_{a}{b}", f"im_stat_{a}{b}"]
    lines = [",".join(cols)]
    rels = []
    for j, sref in zip(idx, stat):
        sdyn = res.fibers[int(j)]
        rel = float(np.abs(sdyn - sref).max() / max(np.abs(sref).max(), 1e-300))
        rels.append(rel)
        vals = [sysd.nodes[j], rel]
        for a in range(k):
            for b in range(k):
                vals += [sdyn[a, b].real, sdyn[a, b].imag,
                         sref[a, b].real, sref[a, b].imag]
        lines.append(",".join(_G17 % v for v in vals))
    smax = float(np.linalg.svd(wm, compute_uv=False)[0])
    summary = {
        "model": model.name,
        "n_nodes": cfg.n_nodes,
        "t_final": res.t_final,
        "dt": res.dt,
        "max_rel_fiber_error": max(rels),
        "median_rel_fiber_error": float(np.median(rels)),
        "sigma_max_w_minus": smax,
        "intertwining_residual": intertwining_residual(sysd, wm),
        "offdiag_max": res.offdiag_max,
    }
    _write_outputs(cfg, "oracle-compare", "\n".join(lines) + "\n", summary)
    return summary


def _optical_lams(cfg):
    lo = 0.1 if cfg.grid_lo is None else float(cfg.grid_lo)
    hi = 10.0 if cfg.grid_hi is None else float(cfg.grid_hi)
    if not (1e-3 <= lo < hi):
        raise ConfigError("optical grid needs 1e-3 <= lo < hi")
    return np.linspace(lo, hi, cfg.grid_n)


def _cmd_optical_scan(cfg, pool):
    v, w, r_match, ell_max, ode = cfg.resolve_potentials()
    lams = _optical_lams(cfg)
    probs = [optical.RadialProblem(ell=l, v=v, w=w, r_match=r_match, **ode)
             for l in range(ell_max + 1)]

    def solve_one(la):
        return [optical.solve_partial_wave(p, la) for p in probs]

    rows = list(pool.map(solve_one, lams))
    flat = [r for group in rows for r in group]
    obj = {
        "v": v.to_json_dict(), "w": w.to_json_dict(),
        "r_match": r_match, "ell_max": ell_max,
        "rows": [{
            "lambda": r.lam, "ell": r.ell, "s": _c(r.s_ell),
            "abs_s": r.abs_s, "residual": r.method_residual,
        } for r in flat],
    }
    _write_outputs(cfg, "optical-scan", optical.results_to_csv(flat), obj)
    return {
        "n_lambda": len(lams),
        "ell_max": ell_max,
        "max_abs_s": max(r.abs_s for r in flat),
        "min_abs_s": min(r.abs_s for r in flat),
        "max_residual": max(r.method_residual for r in flat),
    }


def _cmd_resonance_find(cfg, pool):
    v, w, r_match, ell_max, ode = cfg.resolve_potentials()
    lams = _optical_lams(cfg)
    hits = optical.resonance_scan(v, w, r_match, lams, ell_max=ell_max,
                                  rtol=ode.get("rtol", 1e-10))
    lines = ["ell,lam_zero,abs_s,is_zero"]
    for h in hits:
        lines.append("%d,%.17g,%.17g,%s"
                     % (h["ell"], h["lam_zero"], h["abs_s"],
                        "true" if h["is_zero"] else "false"))
    obj = {"v": v.to_json_dict(), "w": w.to_json_dict(), "hits": hits}
    _write_outputs(cfg, "resonance-find", "\n".join(lines) + "\n", obj)
    return {
        "n_candidates": len(hits),
        "n_zeros": sum(1 for h in hits if h["is_zero"]),
        "zero_lams": [h["lam_zero"] for h in hits if h["is_zero"]],
    }


_DISPATCH = {
    "validate": _cmd_validate,
    "smatrix-scan": _cmd_smatrix_scan,
    "singularity-scan": _cmd_singularity_scan,
    "oracle-compare": _cmd_oracle_compare,
    "optical-scan": _cmd_optical_scan,
    "resonance-find": _cmd_resonance_find,
}


def _versions():
    import scipy

    from . import _accel
    out = {
        "disscat": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }
    if _accel.HAS_NUMBA:
        import numba
        out["numba"] = numba.__version__
    return out


def run(cfg, command, n_threads):
    """Execute one command; returns the manifest dict (also written)."""
    if cfg.command is not None and cfg.command != command:
        raise ConfigError(
            f"config command {cfg.command!r} disagrees with CLI {command!r}")
    os.makedirs(cfg.out_dir, exist_ok=True)
    t0 = time.perf_counter()
    with cf.ThreadPoolExecutor(max_workers=n_threads) as pool:
        summary = _DISPATCH[command](cfg, pool)
    manifest = {
        "command": command,
        "config_sha256": cfg.sha,
        "versions": _versions(),
        "wall_time_s": time.perf_counter() - t0,
        "summary": summary,
    }
    _atomic_write(os.path.join(cfg.out_dir, "manifest.json"),
                  json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="disscat",
        description="Scattering matrices and spectral singularities of "
                    "dissipatively perturbed Hamiltonians.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="path to a JSON run config")
    ap.add_argument("--out", default=None, help="output directory override")
    ap.add_argument("--threads", type=int, default=None,
                    help="worker threads (default: machine parallelism)")
    args = ap.parse_args(argv)

    n_threads = args.threads if args.threads and args.threads > 0 \
        else (os.cpu_count() or 1)
    try:
        cfg = load_config(args.config, out_override=args.out)
        manifest = run(cfg, args.command, n_threads)
    except (ConfigError, DomainError) as exc:
        print(f"config/validation error: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailure, SpectralSingularityError,
            ExceptionalPointError) as exc:
        op = getattr(exc, "info", {}).get("operation", args.command)
        print(f"numerical failure in {op}: {exc}", file=sys.stderr)
        return 3
    except DisscatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(manifest["summary"], sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
