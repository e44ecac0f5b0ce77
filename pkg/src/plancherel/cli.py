"""Command-line front end.

One binary, subcommands for calibration, c-function tables, density tables,
radial eigenfunction profiles, identity checks, transforms, inversion
round-trips, and lattice averaging.  Every run writes a JSON report (config
echo, hash, named checks with residuals, timings) and, where applicable, a
CSV data table; exit status encodes the outcome:

    0  all checks passed
    1  at least one numeric check failed
    2  usage or configuration error
    3  numeric infrastructure failure (quadrature, calibration, truncation)
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .cfunc import CFunctionEngine
from .errors import (
    CalibrationError,
    ParameterError,
    PlancherelError,
    QuadratureError,
    SingularParameterError,
    StateError,
    TruncationError,
)
from .groups import build_model, calibrate_cartan_density, compute_haar_normalization
from .reporting import (
    CheckResult,
    Report,
    RunConfig,
    apply_config_file,
    fmt17,
    write_csv,
    write_report,
)
from .rootdata import SpectralParam
from .spherical import (
    RadialPhi,
    SphericalEvaluator,
    asymptotic_residual,
    constant_term_data,
    constant_term_expansion,
    convolve_radial,
    fit_decay_rate,
    mean_value_check,
    temperedness_bound_check,
    w_invariance_check,
)
from . import transform as tr

MODELS = ("sl2r", "so13", "sl3r")


# ---------------------------------------------------------------------------
# small helpers


def _parse_vector(text: str, rank: int, name: str) -> np.ndarray:
    try:
        vec = np.array([float(p) for p in text.split(",")], dtype=float)
    except ValueError as exc:
        raise ParameterError(f"cannot parse {name} {text!r}") from exc
    if vec.size != rank:
        raise ParameterError(f"{name} needs {rank} comma-separated numbers")
    return vec


def _parse_range(text: str) -> np.ndarray:
    """'start:stop:count' -> inclusive linspace."""
    try:
        lo, hi, n = text.split(":")
        return np.linspace(float(lo), float(hi), int(n))
    except ValueError as exc:
        raise ParameterError(f"cannot parse range {text!r}; use start:stop:count") from exc


def _ray_direction(model) -> np.ndarray:
    rho = model.root_datum.rho
    return -rho / np.linalg.norm(rho)


def _random_imaginary(model, rng, scale: float = 2.0) -> SpectralParam:
    return SpectralParam.imaginary(rng.normal(size=model.rank) * scale)


def _random_regular_imaginary(model, rng, scale: float = 2.0) -> SpectralParam:
    roots = model.root_datum.positive_roots
    while True:
        xi = rng.normal(size=model.rank) * scale
        if np.abs(roots @ xi).min() > 1e-3:
            return SpectralParam.imaginary(xi)


def _chunked(seq, workers: int):
    """Split work into per-worker chunks, preserving order on reassembly."""
    chunk = max(1, (len(seq) + workers - 1) // workers)
    return [seq[i : i + chunk] for i in range(0, len(seq), chunk)]


def _parallel_map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _default_bump(support: float, amplitude: float = 1.0, tilt: float = 0.0):
    def fn(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        q = (r / support) ** 2
        inside = q < 1.0
        out[inside] = amplitude * (1.0 + tilt * r[inside] ** 2) * np.exp(
            1.0 - 1.0 / (1.0 - q[inside])
        )
        return out

    return fn


def _load_radial_profile(model, spec: dict) -> tr.RadialProfile:
    support = float(spec.get("support_radius", 3.0))
    extent = float(spec.get("extent", support))
    n = int(spec.get("n", 161))
    if "values" in spec:
        return tr.RadialProfile(
            model.tag,
            np.asarray(spec["h_grid"], dtype=float),
            np.asarray(spec["values"]),
            support,
            _ray_direction(model),
        )
    fn = _default_bump(support, float(spec.get("amplitude", 1.0)),
                       float(spec.get("tilt", 0.0)))
    return tr.RadialProfile.from_function(model, fn, support, extent=extent, n=n)


def _load_horo_function(model, spec: dict) -> tr.HoroFunction:
    extent = float(spec.get("extent", 6.0))
    width = float(spec.get("width", 1.5))
    coeffs = np.asarray(spec.get("coeffs", [1.0, 0.5, 0.25]), dtype=float)

    def fn(k, mesh):
        r2 = sum(m ** 2 for m in mesh)
        angle = coeffs[0] + coeffs[1] * k[0, 0] + coeffs[2] * k[0, -1]
        return angle * np.exp(-r2 / width ** 2)

    return tr.make_horo_function(model, fn, extent,
                                 n_flat=int(spec.get("n_flat", 96)),
                                 k_resolution=float(spec.get("k_resolution", 0.5)))


# ---------------------------------------------------------------------------
# command handlers (each returns a Report)


def cmd_calibrate(cfg: RunConfig) -> Report:
    report = Report("calibrate", cfg)
    model = build_model(cfg.model)
    t0 = time.perf_counter()
    haar = compute_haar_normalization(model)
    spec = haar.quadrature_spec
    z1 = model.n_power_integral(2.0 * model.root_datum.rho, spec).real
    z2 = model.n_power_integral(2.0 * model.root_datum.rho, spec.refine()).real
    report.add(CheckResult.below("n-normalization-stability",
                                 abs(z1 - z2) / abs(z2), 1e-8))
    betas = (0.5, 1.0, 2.0)
    ratios = [
        model.gaussian_iwasawa_integral(b, haar.z_n, spec)
        / model.gaussian_cartan_integral(b, spec)
        for b in betas
    ]
    spread = (max(ratios) - min(ratios)) / abs(np.mean(ratios))
    report.add(CheckResult.below("cartan-constant-consistency", spread, 1e-5))
    report.notes["z_n"] = haar.z_n
    report.notes["cartan_const"] = haar.cartan_const
    report.notes["cartan_ratios"] = ratios
    report.timings["calibrate_s"] = time.perf_counter() - t0
    return report


def cmd_cfunc(cfg: RunConfig) -> Report:
    report = Report("cfunc", cfg)
    model = build_model(cfg.model)
    engine = CFunctionEngine(model)
    rng = np.random.default_rng(cfg.seed)
    rho = model.root_datum.rho
    points = []
    for _ in range(cfg.trials):
        # strictly inside the convergence cone of the unipotent integral
        depth = 1.0 + rng.uniform(0.0, 1.5)
        points.append(SpectralParam(-depth * rho, rng.normal(size=model.rank)))
    t0 = time.perf_counter()

    def one(lam):
        prod = engine.c_product(lam)
        integ = engine.c_integral(lam, check=False)
        return prod, integ, abs(prod - integ) / abs(prod)

    results = _parallel_map(one, points, cfg.workers)
    report.timings["evaluate_s"] = time.perf_counter() - t0
    rows = [
        list(lam.z.real) + list(lam.z.imag) + [p.real, p.imag, i.real, i.imag, r]
        for lam, (p, i, r) in zip(points, results)
    ]
    rank = model.rank
    header = ([f"re_lam_{k+1}" for k in range(rank)]
              + [f"im_lam_{k+1}" for k in range(rank)]
              + ["re_c_product", "im_c_product", "re_c_integral", "im_c_integral",
                 "rel_err"])
    path = Path(cfg.outdir) / f"cfunc_{cfg.model}.csv"
    write_csv(path, header, rows)
    report.data_files.append(path.name)
    worst = max(r for _, _, r in results)
    report.add(CheckResult.below("product-vs-integral", worst,
                                 cfg.tolerance or 1e-6))
    return report


def cmd_density(cfg: RunConfig) -> Report:
    report = Report("density", cfg)
    model = build_model(cfg.model)
    engine = CFunctionEngine(model)
    direction = model.root_datum.rho / np.linalg.norm(model.root_datum.rho)
    radii = np.linspace(cfg.lambda_max / cfg.n_lambda, cfg.lambda_max, cfg.n_lambda)
    grid = np.outer(radii, direction)
    t0 = time.perf_counter()

    def rows_for(chunk):
        return [engine.plancherel_density(SpectralParam.imaginary(row))
                for row in chunk]

    chunks = _chunked(list(grid), cfg.workers)
    dens = [d for chunk in _parallel_map(rows_for, chunks, cfg.workers) for d in chunk]
    report.timings["evaluate_s"] = time.perf_counter() - t0
    table = [list(row) + [d] for row, d in zip(grid, dens)]
    header = [f"xi_{k+1}" for k in range(model.rank)] + ["density"]
    path = Path(cfg.outdir) / f"density_{cfg.model}.csv"
    write_csv(path, header, table)
    report.data_files.append(path.name)
    m = float(min(dens))
    report.add(CheckResult("density-positivity", m, 0.0, m > 0.0))
    return report


def cmd_phi(cfg: RunConfig) -> Report:
    report = Report("phi", cfg)
    model = build_model(cfg.model)
    engine = CFunctionEngine(model)
    evaluator = SphericalEvaluator(model, resolution=cfg.resolution)
    phi_eval = RadialPhi(engine, evaluator)
    lam_text = cfg.params.get("lam", "0" + ",0" * (model.rank - 1))
    lam = SpectralParam.imaginary(_parse_vector(lam_text, model.rank, "--lambda"))
    geo = cfg.params.get("geodesic", "default")
    X = (_ray_direction(model) if geo in (None, "default")
         else _parse_vector(geo, model.rank, "--geodesic"))
    ts = np.linspace(cfg.t_min, cfg.t_max, cfg.n_t)
    t0 = time.perf_counter()
    phis = phi_eval(lam, ts, X=X)
    rows = []
    try:
        data = constant_term_data(engine, lam, X)
        expansion = constant_term_expansion(data, ts)
        rho_t = np.exp(ts * float(model.root_datum.rho @ X))
        resid = np.abs(phis * np.exp(-ts * float(model.root_datum.rho @ X))
                       - expansion)
        rate = fit_decay_rate(ts, resid)
        report.add(CheckResult.below(
            "asymptotic-decay-rate", rate,
            -0.1 * abs(float(model.root_datum.rho @ X))))
        for t, p, e, r in zip(ts, phis, expansion * rho_t, resid):
            rows.append([t, p.real, p.imag, e.real, e.imag, r])
    except SingularParameterError:
        report.notes["expansion"] = "skipped: spectral parameter on a wall"
        for t, p in zip(ts, phis):
            rows.append([t, p.real, p.imag, np.nan, np.nan, np.nan])
    report.timings["evaluate_s"] = time.perf_counter() - t0
    header = ["t", "re_phi", "im_phi", "re_expansion", "im_expansion", "residual"]
    path = Path(cfg.outdir) / f"phi_{cfg.model}.csv"
    write_csv(path, header, rows)
    report.data_files.append(path.name)
    return report


def _check_mean_value(cfg, report, model, rng):
    evaluator = SphericalEvaluator(model, resolution=cfg.resolution)
    scale = 0.5 if model.rank == 1 else 0.3
    # the product integrand k -> a(g k h) has twice the angular bandwidth of
    # a single element, so the circle rule needs twice the nodes on rank one
    kres = max(cfg.k_resolution, 2.0) if model.rank == 1 else cfg.k_resolution
    residuals = []
    for _ in range(cfg.trials):
        lam = _random_imaginary(model, rng)
        g = model.random_element(rng, scale=scale)
        h = model.random_element(rng, scale=scale)
        residuals.append(mean_value_check(evaluator, lam, g, h,
                                          k_resolution=kres))
    report.notes["residuals"] = residuals
    report.add(CheckResult.below("mean-value", max(residuals),
                                 cfg.tolerance or 1e-7))


def _check_w_invariance(cfg, report, model, rng):
    evaluator = SphericalEvaluator(model, resolution=cfg.resolution)
    scale = 0.5 if model.rank == 1 else 0.3
    residuals = []
    for _ in range(cfg.trials):
        lam = _random_imaginary(model, rng)
        g = model.random_element(rng, scale=scale)
        residuals.append(w_invariance_check(evaluator, lam, g))
    report.notes["residuals"] = residuals
    report.add(CheckResult.below("w-invariance", max(residuals),
                                 cfg.tolerance or 1e-6))


def _check_maass_selberg(cfg, report, model, rng):
    engine = CFunctionEngine(model)
    spreads = [
        engine.maass_selberg_spread(_random_regular_imaginary(model, rng))
        for _ in range(max(cfg.trials, 100))
    ]
    report.notes["max_spread"] = max(spreads)
    report.add(CheckResult.below("maass-selberg", max(spreads),
                                 cfg.tolerance or 1e-6))


def _check_asymptotics(cfg, report, model, rng):
    engine = CFunctionEngine(model)
    evaluator = SphericalEvaluator(model, resolution=cfg.resolution)
    phi_eval = RadialPhi(engine, evaluator)
    X = _ray_direction(model)
    rho_x = abs(float(model.root_datum.rho @ X))
    ts = np.linspace(5.0, 25.0, 41)
    rates = []
    for _ in range(5):
        lam = _random_regular_imaginary(model, rng)
        data = constant_term_data(engine, lam, X)
        resid = asymptotic_residual(phi_eval, data, ts)
        rates.append(fit_decay_rate(ts, resid))
    report.notes["rates"] = rates
    report.add(CheckResult.below("asymptotic-decay-rate", max(rates), -0.1 * rho_x))


def _check_tempered(cfg, report, model, rng):
    engine = CFunctionEngine(model)
    evaluator = SphericalEvaluator(model, resolution=cfg.resolution)
    phi_eval = RadialPhi(engine, evaluator)
    X = _ray_direction(model)
    flags = []
    for _ in range(max(3, cfg.trials // 4)):
        lam = _random_imaginary(model, rng)
        rep = temperedness_bound_check(phi_eval, lam, X, t_max=30.0)
        flags.append(rep.flagged)
    spurious = sum(flags)
    report.add(CheckResult("tempered-imaginary-unflagged", float(spurious),
                           1.0, spurious == 0))
    lam_bad = SpectralParam.real(2.0 * model.root_datum.rho)
    rep_bad = temperedness_bound_check(phi_eval, lam_bad, X, t_max=30.0)
    report.notes["growth_rate_2rho"] = rep_bad.linear_rate
    report.add(CheckResult("tempered-2rho-flagged", rep_bad.linear_rate,
                           0.0, rep_bad.flagged))


def _check_parseval_horo(cfg, report, model, rng):
    coeffs = rng.normal(size=3)
    f = _load_horo_function(model, {"coeffs": coeffs.tolist()})
    lhs, rhs = tr.horo_parseval_pair(f, xi_max=cfg.lambda_max,
                                     n_per_axis=max(32, cfg.n_lambda // 4))
    rel = abs(lhs - rhs) / abs(lhs)
    report.notes["norm_polar"] = lhs
    report.notes["norm_spectral"] = rhs
    report.add(CheckResult.below("parseval-horo", rel, cfg.tolerance or 1e-4))
    regroup = tr.chamber_regroup_residual(f, model)
    report.add(CheckResult.below("chamber-regrouping", regroup, 1e-6))


def _check_convolution(cfg, report, model, rng):
    engine = CFunctionEngine(model)
    haar = engine.haar
    evaluator = SphericalEvaluator(model, resolution=cfg.resolution)
    phi_eval = RadialPhi(engine, evaluator)
    r1 = 1.4 + 0.4 * rng.random()
    r2 = 1.6 + 0.4 * rng.random()
    f1 = tr.RadialProfile.from_function(
        model, _default_bump(r1, 1.0, rng.uniform(-0.5, 0.5)), r1,
        extent=r1 + r2, n=241)
    f2 = tr.RadialProfile.from_function(
        model, _default_bump(r2, 0.8, rng.uniform(-0.5, 0.5)), r2,
        extent=r1 + r2, n=241)
    c12 = convolve_radial(model, haar, f1, f2)
    c21 = convolve_radial(model, haar, f2, f1)
    comm = float(np.abs(c12.values - c21.values).max()
                 / np.abs(c12.values).max())
    report.add(CheckResult.below("convolution-commutativity", comm, 1e-6))
    xi = np.linspace(0.4, 8.0, 9).reshape(-1, 1)
    F1 = tr.spherical_transform(phi_eval, haar, f1, xi).values
    F2 = tr.spherical_transform(phi_eval, haar, f2, xi).values
    F12 = tr.spherical_transform(phi_eval, haar, c12, xi).values
    mult = float(np.abs(F12 - F1 * F2).max() / np.abs(F1 * F2).max())
    report.add(CheckResult.below("transform-multiplicativity", mult, 1e-5))


CHECKS = {
    "mean-value": _check_mean_value,
    "w-invariance": _check_w_invariance,
    "maass-selberg": _check_maass_selberg,
    "asymptotics": _check_asymptotics,
    "tempered": _check_tempered,
    "parseval-horo": _check_parseval_horo,
    "convolution": _check_convolution,
}


def cmd_check(cfg: RunConfig) -> Report:
    which = cfg.params["which"]
    report = Report(f"check {which}", cfg)
    model = build_model(cfg.model)
    rng = np.random.default_rng(cfg.seed)
    t0 = time.perf_counter()
    CHECKS[which](cfg, report, model, rng)
    report.timings["check_s"] = time.perf_counter() - t0
    return report


def cmd_transform(cfg: RunConfig) -> Report:
    which = cfg.params["which"]
    report = Report(f"transform {which}", cfg)
    spec = {}
    if cfg.params.get("input"):
        with open(cfg.params["input"]) as fh:
            spec = json.load(fh)
    model = build_model(spec.get("model", cfg.model))
    report.config.model = model.tag
    t0 = time.perf_counter()
    if which == "spherical":
        engine = CFunctionEngine(model)
        evaluator = SphericalEvaluator(model, resolution=cfg.resolution)
        phi_eval = RadialPhi(engine, evaluator)
        f = _load_radial_profile(model, spec)
        xi, w = tr.chamber_grid(cfg.lambda_max, cfg.n_lambda)
        if model.rank > 1:
            # tabulate along the central ray of the chamber
            ray = model.root_datum.rho / np.linalg.norm(model.root_datum.rho)
            lams = np.outer(xi, ray)
        else:
            lams = xi
        section = tr.spherical_transform(phi_eval, engine.haar, f, (lams, w),
                                         check=True)
        report.notes["doubling_check"] = "radial rule doubled and compared"
        rows = [[x, v.real, v.imag] for x, v in zip(xi, section.values)]
        header = ["xi", "re_transform", "im_transform"]
    else:
        f = _load_horo_function(model, spec)
        grids = [np.linspace(-cfg.lambda_max, cfg.lambda_max, cfg.n_lambda)
                 for _ in range(model.rank)]
        mesh = np.meshgrid(*grids, indexing="ij")
        xi = np.stack([m.ravel() for m in mesh], axis=1)
        section = tr.horo_transform(f, xi)
        norms = np.sum(f.k_weights[None, :] * np.abs(section.values) ** 2, axis=1)
        rows = [list(row) + [nv] for row, nv in zip(xi, norms)]
        header = [f"xi_{k+1}" for k in range(model.rank)] + ["norm_sq"]
    report.timings["transform_s"] = time.perf_counter() - t0
    path = Path(cfg.outdir) / f"transform-{which}_{model.tag}.csv"
    write_csv(path, header, rows)
    report.data_files.append(path.name)
    return report


def cmd_invert(cfg: RunConfig) -> Report:
    report = Report("invert", cfg)
    model = build_model(cfg.model)
    if model.rank != 1:
        raise ParameterError("inversion round trip runs on rank-one models")
    engine = CFunctionEngine(model)
    evaluator = SphericalEvaluator(model, resolution=cfg.resolution)
    phi_eval = RadialPhi(engine, evaluator)
    bump_name = cfg.params.get("bump", "default")
    if bump_name == "default":
        support = 3.0
    else:
        support = float(bump_name)
    f = tr.RadialProfile.from_function(model, _default_bump(support), support,
                                       n=161)
    t0 = time.perf_counter()
    xi, w = tr.chamber_grid(cfg.lambda_max, cfg.n_lambda)
    section = tr.spherical_transform(phi_eval, engine.haar, f, (xi, w))
    back = tr.wave_packet(phi_eval, section, f.h_grid)
    runtime = time.perf_counter() - t0
    sup = float(np.abs(back - f.values).max() / np.abs(f.values).max())
    dens = np.array([engine.plancherel_density(SpectralParam.imaginary(row))
                     for row in section.xi])
    spectral = float(np.sum(w * np.abs(section.values) ** 2 * dens)
                     / (2.0 * np.pi) ** model.rank)
    norm = tr.radial_l2_norm_sq(model, engine.haar, f)
    l2 = abs(norm - spectral) / norm
    report.add(CheckResult.below("round-trip-sup", sup, 1e-3))
    report.add(CheckResult.below("parseval", l2, 1e-3))
    report.notes["lambda_max_needed"] = tr.choose_lambda_max(section, engine)
    report.timings["round_trip_s"] = runtime
    path = Path(cfg.outdir) / f"invert_{cfg.model}.csv"
    write_csv(path, ["r", "f", "re_back", "im_back"],
              [[r, fv, b.real, b.imag]
               for r, fv, b in zip(f.h_grid, f.values, back)])
    report.data_files.append(path.name)
    return report


def cmd_average(cfg: RunConfig) -> Report:
    report = Report("average", cfg)
    with open(cfg.params["spec"]) as fh:
        spec = json.load(fh)
    eigendata = [
        (np.asarray(lam, dtype=float) * 1j,
         np.asarray(vr, dtype=float) + 1j * np.asarray(vi, dtype=float))
        for lam, vr, vi in spec["eigendata"]
    ]
    F = np.asarray(spec["F"], dtype=float)
    n_list = [int(s) for s in cfg.params.get("n_list", "200,2000").split(",")]
    target = tr.cesaro_target(eigendata, F)
    rows = []
    for n in n_list:
        a_n = tr.cesaro_average(eigendata, F, n)
        rows.append([n, a_n, target, abs(a_n - target)])
    header = ["n", "lattice_mean", "target", "deviation"]
    path = Path(cfg.outdir) / "average_table.csv"
    write_csv(path, header, rows)
    report.data_files.append(path.name)
    if len(rows) >= 2:
        report.add(CheckResult("deviation-decrease", rows[-1][3], rows[0][3],
                               rows[-1][3] <= rows[0][3]))
    report.notes["target"] = target
    return report


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plancherel",
        description="Spherical harmonic analysis on rank-one and rank-two "
                    "symmetric spaces: calibrations, c-functions, spherical "
                    "transforms, and their consistency checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=True):
        if model:
            p.add_argument("--model", choices=MODELS, default="sl2r")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", help="JSON config file; overrides flags")
        p.add_argument("--outdir", default=None,
                       help="output directory (default: $PLANCHEREL_OUTDIR or .)")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--resolution", type=float, default=1.0,
                       help="compact-factor quadrature resolution multiplier")
        p.add_argument("--k-resolution", type=float, default=1.0)
        p.add_argument("--tolerance", type=float, default=None)

    common(sub.add_parser("calibrate", help="measure normalizations"))

    p = sub.add_parser("cfunc", help="product vs integral c-function table")
    common(p)
    p.add_argument("--points", type=int, default=20)

    p = sub.add_parser("density", help="tabulate the inversion density")
    common(p)
    p.add_argument("--lambda-max", type=float, default=40.0)
    p.add_argument("--n", type=int, default=200)

    p = sub.add_parser("phi", help="radial eigenfunction profile along a geodesic")
    common(p)
    p.add_argument("--lambda", dest="lam", default=None,
                   help="comma-separated imaginary parts")
    p.add_argument("--geodesic", default="default",
                   help="direction in the flat (comma-separated), or 'default'")
    p.add_argument("--t-range", default="1:25:49")

    p = sub.add_parser("check", help="named identity checks")
    p.add_argument("which", choices=sorted(CHECKS))
    common(p)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--lambda-max", type=float, default=40.0)

    p = sub.add_parser("transform", help="spherical or horospherical spectra")
    p.add_argument("which", choices=["spherical", "horo"])
    common(p)
    p.add_argument("--input", help="JSON profile description")
    p.add_argument("--lambda-max", type=float, default=24.0)
    p.add_argument("--n", type=int, default=160)

    p = sub.add_parser("invert", help="transform + wave-packet round trip")
    common(p)
    p.add_argument("--bump", default="default",
                   help="'default' or a support radius")
    p.add_argument("--lambda-max", type=float, default=24.0)
    p.add_argument("--n", type=int, default=160)

    p = sub.add_parser("average", help="lattice means of a unitary flow")
    common(p, model=False)
    p.add_argument("--spec", required=True, help="eigendata JSON file")
    p.add_argument("--n-list", default="200,2000")

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(
        command=args.command,
        model=getattr(args, "model", "sl2r"),
        seed=args.seed,
        resolution=getattr(args, "resolution", 1.0),
        k_resolution=getattr(args, "k_resolution", 1.0),
        lambda_max=getattr(args, "lambda_max", 24.0),
        n_lambda=getattr(args, "n", 160),
        trials=getattr(args, "points", getattr(args, "trials", 20)),
        tolerance=getattr(args, "tolerance", None),
        outdir=args.outdir or os.environ.get("PLANCHEREL_OUTDIR", "."),
        workers=getattr(args, "workers", 1),
    )
    if args.command == "phi":
        rng_text = args.t_range.split(":")
        cfg.t_min, cfg.t_max, cfg.n_t = (float(rng_text[0]), float(rng_text[1]),
                                         int(rng_text[2]))
        cfg.params["lam"] = args.lam
        cfg.params["geodesic"] = args.geodesic
    if args.command in ("check", "transform"):
        cfg.params["which"] = args.which
    if args.command == "transform":
        cfg.params["input"] = args.input
    if args.command == "invert":
        cfg.params["bump"] = args.bump
    if args.command == "average":
        cfg.params["spec"] = args.spec
        cfg.params["n_list"] = args.n_list
    if args.config:
        apply_config_file(cfg, args.config)
    return cfg


HANDLERS = {
    "calibrate": cmd_calibrate,
    "cfunc": cmd_cfunc,
    "density": cmd_density,
    "phi": cmd_phi,
    "check": cmd_check,
    "transform": cmd_transform,
    "invert": cmd_invert,
    "average": cmd_average,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ParameterError, OSError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    try:
        report = HANDLERS[args.command](cfg)
    except (ParameterError, SingularParameterError, OSError,
            json.JSONDecodeError, KeyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (QuadratureError, CalibrationError, TruncationError,
            StateError) as exc:
        print(f"numeric infrastructure failure: {exc}", file=sys.stderr)
        return 3
    except PlancherelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    report.timings["total_s"] = time.perf_counter() - t0
    path = write_report(report, cfg.outdir)
    for check in report.checks:
        mark = "pass" if check.passed else "FAIL"
        print(f"[{mark}] {check.name}: residual {fmt17(check.residual)} "
              f"(threshold {fmt17(check.threshold)})")
    print(f"report: {path}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
