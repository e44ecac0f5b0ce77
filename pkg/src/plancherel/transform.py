"""Spectral transforms against the computed density, and averaging tools.

Rank-one geometry carries the invertible transform stack: bi-invariant
functions are radial profiles on the ray into the negative chamber, analysis
is integration against zonal eigenfunctions over polar coordinates, and
synthesis integrates over the positive spectral chamber against
|c(lambda)|^(-2) d(xi)/(2 pi).  The d(xi)/(2 pi)^rank convention is the one
under which the flat-factor Fourier inversion holds with no extra constants;
``flat_round_trip_residual`` pins it down by direct test rather than fiat.

The horospherical stack works on K/M x A data for any supported rank: the
transform is a per-node flat Fourier integral with the half-sum twist, and its
norm identity is checked against the a^(-2 rho)-density polar integral.

The averaging routine at the bottom evaluates lattice means of unitary orbits
exactly, by factoring geometric sums (diagonalizable data) or by iterated
power averaging (raw commuting generators, covering the non-semisimple case).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .cfunc import CFunctionEngine
from .errors import (
    ParameterError,
    QuadratureError,
    StateError,
    TruncationError,
)
from .groups import GroupModel, HaarNormalization
from .quadrature import QuadratureSpec, gauss_legendre, panel_rule
from .rootdata import SpectralParam, weyl_group
from .spherical import RadialPhi, SphericalEvaluator, haar_k_quadrature

TWO_PI = 2.0 * np.pi


def ray_direction(model: GroupModel) -> np.ndarray:
    """Unit vector spanning the negative chamber (rank-one models)."""
    if model.rank != 1:
        raise ParameterError("radial profiles are defined for rank-one models")
    rho = model.root_datum.rho
    return -rho / np.linalg.norm(rho)


# ---------------------------------------------------------------------------
# radial profiles


@dataclass(frozen=True)
class RadialProfile:
    """Bi-invariant function sampled on a uniform radius grid.

    ``h_grid`` holds radii r >= 0; the group point is exp(r * direction) with
    ``direction`` the unit ray into the negative chamber.  Values vanish at
    and beyond ``support_radius``; evaluation interpolates cubically and is
    exact at the nodes.

    Profiles built from a closed form keep the generating callable and
    evaluate through it (a cubic spline is only C^2, which caps downstream
    quadrature at fourth order); profiles produced numerically fall back to
    the spline.
    """

    model_tag: str
    h_grid: np.ndarray
    values: np.ndarray
    support_radius: float
    direction: np.ndarray
    fn: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        h = np.asarray(self.h_grid, dtype=float)
        v = np.asarray(self.values)
        object.__setattr__(self, "h_grid", h)
        object.__setattr__(self, "values", v)
        if h.ndim != 1 or v.shape != h.shape:
            raise ParameterError("grid and values must be equal-length 1-D arrays")
        if h[0] != 0.0 or np.abs(np.diff(h) - (h[1] - h[0])).max() > 1e-12 * h[-1]:
            raise ParameterError("radius grid must be uniform and start at 0")
        outside = h >= self.support_radius - 1e-12
        if np.any(np.abs(v[outside]) > 1e-12 * max(1.0, np.abs(v).max())):
            raise ParameterError("values must vanish at and beyond the support radius")

    @property
    def extent(self) -> float:
        return float(self.h_grid[-1])

    def _spline(self):
        return CubicSpline(self.h_grid, self.values, bc_type="natural")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.fn is not None:
            out = np.asarray(self.fn(r))
        else:
            out = self._spline()(np.clip(r, 0.0, self.extent))
        return np.where((r >= 0.0) & (r < self.support_radius), out, 0.0)

    @staticmethod
    def from_function(model: GroupModel, fn, support_radius: float,
                      extent: Optional[float] = None, n: int = 161) -> "RadialProfile":
        extent = float(extent if extent is not None else support_radius)
        grid = np.linspace(0.0, extent, n)
        vals = np.asarray(fn(grid))
        vals = np.where(grid < support_radius, vals, 0.0)
        return RadialProfile(model.tag, grid, vals, float(support_radius),
                             ray_direction(model), fn=fn)

    @staticmethod
    def zeros_like(other: "RadialProfile", support_radius: Optional[float] = None) -> "RadialProfile":
        sr = float(other.support_radius if support_radius is None else support_radius)
        return RadialProfile(other.model_tag, other.h_grid,
                             np.zeros_like(other.h_grid), sr, other.direction)

    def with_values(self, values) -> "RadialProfile":
        values = np.asarray(values)
        if np.abs(values.imag).max() < 1e-10 * max(1.0, np.abs(values).max()):
            values = values.real.copy()
        values = np.where(self.h_grid < self.support_radius, values, 0.0)
        return replace(self, values=values, fn=None)


def cartan_grid_rule(model: GroupModel, haar: HaarNormalization, radius: float,
                     spec: QuadratureSpec = QuadratureSpec()):
    """Nodes/weights turning a radial integral into the group integral:
    sum w_i u(r_i)  ~  integral over G of u(radius(g)) dg, support in
    [0, radius].  Rank-one only."""
    if haar is None:
        raise StateError("measure normalization has not been computed")
    direction = ray_direction(model)
    r, w = panel_rule(0.0, float(radius), min(spec.panel_len, 2.0), spec.nodes_per_panel)
    rd = model.root_datum
    jac = np.ones_like(r)
    for gamma, mult in zip(rd.positive_roots, rd.positive_multiplicities):
        jac *= np.abs(np.sinh(r * float(gamma @ direction))) ** int(mult)
    return r, w * jac * haar.cartan_const


def radial_l2_norm_sq(model: GroupModel, haar: HaarNormalization, f: RadialProfile) -> float:
    r, w = cartan_grid_rule(model, haar, f.support_radius)
    vals = f(r)
    return float(np.sum(w * np.abs(vals) ** 2))


# ---------------------------------------------------------------------------
# spectral sections and grids


@dataclass(frozen=True)
class SpectralSection:
    """Transform data on a grid of imaginary spectral parameters.

    ``xi`` holds the imaginary parts, one row per point; ``values`` is (n,)
    for scalar (radial) data or (n, nk) for boundary-valued data.  ``weights``
    integrate over the grid against plain d(xi) (no density, no 2 pi)."""

    xi: np.ndarray
    values: np.ndarray
    weights: Optional[np.ndarray] = None
    kind: str = "spherical"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        xi = np.atleast_2d(np.asarray(self.xi, dtype=float))
        object.__setattr__(self, "xi", xi)
        v = np.asarray(self.values)
        if v.shape[0] != xi.shape[0]:
            raise ParameterError("one value row per grid point required")

    @property
    def abs_xi(self) -> np.ndarray:
        return np.linalg.norm(self.xi, axis=1)


def chamber_grid(xi_max: float, n: int):
    """Gauss panels on the positive half-line (0, xi_max]; endpoints excluded,
    so everything stays regular."""
    per_panel = max(8, n // max(1, int(np.ceil(xi_max / 4.0))))
    return panel_rule(0.0, xi_max, 4.0, per_panel)


def radial_phi_matrix(phi_eval: RadialPhi, xi: np.ndarray, radii: np.ndarray,
                      direction: np.ndarray) -> np.ndarray:
    """phi values on a (radius, spectral point) product grid, (nr, nxi).

    Radial evaluation switches between the boundary series and the compact
    quadrature per radius, so large supports stay accurate."""
    out = np.empty((radii.size, xi.shape[0]), dtype=complex)
    for j, row in enumerate(xi):
        out[:, j] = phi_eval(SpectralParam.imaginary(row), radii, X=direction)
    return out


def spherical_transform(phi_eval: RadialPhi, haar: HaarNormalization,
                        f: RadialProfile, lams, check: bool = False) -> SpectralSection:
    """Scalar transform F(lam) = integral over G of f * phi_lam."""
    model = phi_eval.engine.model
    if haar is None:
        raise StateError("measure normalization has not been computed; calibrate first")
    if f.model_tag != model.tag:
        raise ParameterError("profile belongs to a different model")
    if f.support_radius > f.extent + 1e-12:
        raise TruncationError("profile support exceeds its grid",
                              suggested_cutoff=f.support_radius)
    weights = None
    if isinstance(lams, SpectralSection):
        weights = lams.weights
        lams = lams.xi
    elif isinstance(lams, tuple) and len(lams) == 2:
        lams, weights = lams
    xi = np.atleast_2d(np.asarray(lams, dtype=float))
    if xi.shape[1] != model.rank:
        xi = xi.reshape(-1, model.rank)
    direction = f.direction

    def evaluate(spec: QuadratureSpec):
        r, w = cartan_grid_rule(model, haar, f.support_radius, spec)
        phis = radial_phi_matrix(phi_eval, xi, r, direction)
        return phis.T @ (w * f(r))

    vals = evaluate(QuadratureSpec())
    if check:
        fine = evaluate(QuadratureSpec().refine())
        scale = max(float(np.abs(fine).max()), 1e-300)
        if float(np.abs(vals - fine).max()) / scale > 1e-6:
            raise QuadratureError("transform failed the resolution-doubling check")
        vals = fine
    return SpectralSection(xi=xi, values=vals, weights=weights, kind="spherical",
                           meta={"model": model.tag})


def fit_spectral_decay(abs_xi: np.ndarray, abs_vals: np.ndarray):
    """Fit |F| ~ C (1+|xi|)^(-p) on the outer half of the grid."""
    order = np.argsort(abs_xi)
    abs_xi, abs_vals = abs_xi[order], abs_vals[order]
    outer = abs_xi >= 0.5 * abs_xi[-1]
    x = np.log1p(abs_xi[outer])
    y = np.log(np.maximum(abs_vals[outer], 1e-300))
    slope, intercept = np.polyfit(x, y, 1)
    return float(np.exp(intercept)), float(-slope)


def choose_lambda_max(section: SpectralSection, engine: CFunctionEngine,
                      tail_tol: float = 1e-4) -> float:
    """Smallest cutoff whose estimated spectral tail mass is below tolerance.

    The integrand |F(lam)|^2 |c|^(-2) is extrapolated with the fitted
    power-law decay of |F| and a linear local model of the density.
    """
    if engine.model.rank != 1:
        raise ParameterError("tail estimation implemented for rank-one grids")
    absxi = section.abs_xi
    vals = np.abs(section.values if section.values.ndim == 1
                  else np.linalg.norm(section.values, axis=1))
    C, p = fit_spectral_decay(absxi, vals)
    dens = np.array([
        engine.plancherel_density(SpectralParam.imaginary(row)) for row in section.xi
    ])
    total = float(np.trapezoid(vals**2 * dens, absxi))
    # local density slope at the grid edge
    b = (dens[-1] - dens[-2]) / (absxi[-1] - absxi[-2])
    a = dens[-1] - b * absxi[-1]

    def tail(lmax: float) -> float:
        if 2 * p <= 2.01:
            return np.inf
        x, w = panel_rule(lmax, lmax * 8.0 + 40.0, 6.0, 24)
        return float(np.sum(w * C**2 * (1 + x) ** (-2 * p) * np.maximum(a + b * x, 0.0)))

    lo = float(absxi[-1])
    lmax = lo / 4.0
    for _ in range(60):
        if tail(lmax) <= tail_tol * max(total, 1e-300):
            return lmax
        lmax *= 1.25
    raise TruncationError("no cutoff with acceptable spectral tail found",
                          suggested_cutoff=lmax)


def wave_packet(phi_eval: RadialPhi, section: SpectralSection, radii,
                tail_tol: float = 1e-4):
    """Synthesis: integral over the positive chamber of
    psi(lam) phi_lam(g) |c(lam)|^(-2) d(xi)/(2 pi)^rank, at g = exp(r * dir).

    Requires the section's own tail (estimated from its decay fit) to be
    below ``tail_tol`` relative; otherwise a truncation error reports the
    cutoff that would suffice.
    """
    engine = phi_eval.engine
    model = engine.model
    if model.rank != 1:
        raise ParameterError("synthesis implemented on rank-one chambers")
    if section.weights is None:
        raise ParameterError("section carries no chamber quadrature weights")
    absxi = section.abs_xi
    vals = np.asarray(section.values)
    lam_needed = choose_lambda_max(section, engine, tail_tol)
    if lam_needed > absxi.max() * (1 + 1e-9):
        raise TruncationError(
            "spectral grid too short for the requested tail tolerance",
            suggested_cutoff=lam_needed,
        )
    dens = np.array([
        engine.plancherel_density(SpectralParam.imaginary(row)) for row in section.xi
    ])
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    direction = ray_direction(model)
    phis = radial_phi_matrix(phi_eval, section.xi, radii, direction)  # (nr, nxi)
    coeff = section.weights * vals * dens / TWO_PI**model.rank
    return phis @ coeff


def flat_round_trip_residual(width: float = 1.0, xi_max: float = 40.0,
                             n_x: int = 401, n_xi: int = 2000) -> float:
    """1-D self-test pinning the d(xi)/(2 pi) convention: transform a Gaussian
    on the flat factor and invert; returns the sup-norm round-trip error."""
    x = np.linspace(-8.0 * width, 8.0 * width, n_x)
    f = np.exp(-(x / width) ** 2)
    xi, wxi = panel_rule(-xi_max, xi_max, 4.0, max(16, n_xi // max(1, int(xi_max / 2))))
    fhat = np.exp(1j * np.outer(xi, -x)) @ (f * (x[1] - x[0]))
    back = (np.exp(1j * np.outer(x, xi)) @ (wxi * fhat)) / TWO_PI
    return float(np.abs(back.real - f).max() / np.abs(f).max())


# ---------------------------------------------------------------------------
# boundary-valued (horospherical) stack


@dataclass(frozen=True)
class HoroFunction:
    """Function on the K/M x A chart, sampled on quadrature nodes x uniform grid.

    ``axes`` holds one uniform coordinate grid per flat direction; ``values``
    has shape (n_k,) + tuple(len(axis) for each axis).  ``k_weights`` are the
    normalized boundary quadrature weights (pushed down from the compact
    factor's rule)."""

    model_tag: str
    k_weights: np.ndarray
    axes: tuple
    values: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        object.__setattr__(self, "axes", axes)
        v = np.asarray(self.values)
        if v.shape != (self.k_weights.size,) + tuple(a.size for a in axes):
            raise ParameterError("value array shape does not match the grids")
        for a in axes:
            if np.abs(np.diff(a) - (a[1] - a[0])).max() > 1e-10:
                raise ParameterError("flat-coordinate grids must be uniform")
        if not np.all(np.isfinite(v)):
            raise ParameterError("values must be finite")

    @property
    def rank(self) -> int:
        return len(self.axes)

    def cell_volume(self) -> float:
        return float(np.prod([a[1] - a[0] for a in self.axes]))

    def rho_phase(self) -> np.ndarray:
        """e^(-rho(H)) on the flat grid."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        h_dot_rho = sum(self.rho[i] * mesh[i] for i in range(self.rank))
        return np.exp(-h_dot_rho)


def make_horo_function(model: GroupModel, fn, extent: float, n_flat: int = 96,
                       k_resolution: float = 0.5) -> HoroFunction:
    """Sample ``fn(k_matrix, H_mesh)`` on the boundary quadrature x flat grid.

    ``fn`` receives one compact-factor node as a matrix and the tuple of
    flat-coordinate meshes, and returns values on the mesh."""
    mats, kw = haar_k_quadrature(model, k_resolution)
    axes = tuple(np.linspace(-extent, extent, n_flat) for _ in range(model.rank))
    mesh = np.meshgrid(*axes, indexing="ij")
    vals = np.stack([np.asarray(fn(k, mesh)) for k in mats])
    return HoroFunction(model.tag, kw.copy(), axes, vals,
                        model.root_datum.rho.copy())


def horo_norm_sq(f: HoroFunction) -> float:
    """Squared norm against the invariant measure (density e^(-2 rho(H)))."""
    dens = f.rho_phase() ** 2
    sq = np.abs(f.values) ** 2
    per_k = sq.reshape(f.k_weights.size, -1) @ dens.ravel() * f.cell_volume()
    return float(np.sum(f.k_weights * per_k))


def horo_transform(f: HoroFunction, xi) -> SpectralSection:
    """Per-boundary-node flat Fourier integral with the half-sum twist:
    fhat(lam)(k) = integral of f(k, H) e^((lam - rho)(H)) dH at lam = i xi."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    if xi.shape[1] != f.rank:
        raise ParameterError(f"xi must have {f.rank} columns")
    twisted = f.values * f.rho_phase()[None, ...]
    flat = twisted.reshape(f.k_weights.size, -1)
    mesh = np.meshgrid(*f.axes, indexing="ij")
    coords = np.stack([m.ravel() for m in mesh])  # (rank, n_cells)
    phases = np.exp(1j * (xi @ coords))  # (n_xi, n_cells)
    vals = (phases @ flat.T) * f.cell_volume()  # (n_xi, nk)
    return SpectralSection(xi=xi, values=vals, kind="horo",
                           meta={"model": f.model_tag})


def horo_parseval_pair(f: HoroFunction, xi_max: float = 40.0, n_per_axis: int = 48):
    """(polar-side norm^2, spectral-side norm^2) with the d(xi)/(2 pi)^rank
    convention; agreement validates the transform normalization."""
    grids = [panel_rule(-xi_max, xi_max, 4.0, n_per_axis) for _ in range(f.rank)]
    mesh = np.meshgrid(*[g[0] for g in grids], indexing="ij")
    xi = np.stack([m.ravel() for m in mesh], axis=1)
    wmesh = np.meshgrid(*[g[1] for g in grids], indexing="ij")
    w = np.prod(np.stack([m.ravel() for m in wmesh]), axis=0)
    section = horo_transform(f, xi)
    per_point = np.sum(
        f.k_weights[None, :] * np.abs(section.values) ** 2, axis=1
    )
    rhs = float(np.sum(w * per_point)) / TWO_PI ** f.rank
    return horo_norm_sq(f), rhs


def chamber_orbit_grid(model: GroupModel, xi_max: float, n: int):
    """A full-space grid assembled as the Weyl orbit of a chamber grid.

    Returns (chamber_xi, chamber_w, orbit_xi, orbit_w): chamber points lie
    strictly inside the positive chamber; the orbit arrays enumerate all
    |W| images (the W-symmetric full grid)."""
    rd = model.root_datum
    W = weyl_group(rd)
    if model.rank == 1:
        x, w = chamber_grid(xi_max, n)
        cham = x.reshape(-1, 1)
        cw = w
    else:
        # product rule on a box, filtered to the open chamber
        x1, w1 = panel_rule(0.0, xi_max, 4.0, max(8, n))
        pts, ws = [], []
        for i, a in enumerate(x1):
            for j, b in enumerate(x1):
                p = np.array([a, b])
                if np.all(rd.positive_roots @ p > 1e-9):
                    pts.append(p)
                    ws.append(w1[i] * w1[j])
        cham = np.array(pts)
        cw = np.array(ws)
    orbit_xi = np.concatenate([cham @ W.elements[w].T for w in range(len(W))])
    orbit_w = np.tile(cw, len(W))
    return cham, cw, orbit_xi, orbit_w


def chamber_regroup_residual(f: HoroFunction, model: GroupModel,
                             xi_max: float = 30.0, n: int = 24) -> float:
    """Relative difference between the full-space spectral norm on the
    W-symmetric grid and the sum of chamber integrals over the orbit."""
    rd = model.root_datum
    W = weyl_group(rd)
    cham, cw, orbit_xi, orbit_w = chamber_orbit_grid(model, xi_max, n)
    section_full = horo_transform(f, orbit_xi)
    per_point = np.sum(f.k_weights[None, :] * np.abs(section_full.values) ** 2, axis=1)
    full = float(np.sum(orbit_w * per_point))
    regrouped = 0.0
    for w in range(len(W)):
        xi_w = cham @ W.elements[w].T
        sec = horo_transform(f, xi_w)
        pp = np.sum(f.k_weights[None, :] * np.abs(sec.values) ** 2, axis=1)
        regrouped += float(np.sum(cw * pp))
    return abs(full - regrouped) / max(abs(full), 1e-300)


# ---------------------------------------------------------------------------
# lattice averages of unitary flows


def _reject_rational(c: float, max_den: int = 64, tol: float = 1e-12):
    for q in range(1, max_den + 1):
        if abs(c * q - round(c * q)) < tol * q:
            raise ParameterError(
                f"stretch factor {c} is (numerically) the ratio {round(c * q)}/{q}; "
                "the averaging lemma requires an irrational stretch"
            )


def _geometric_mean_phase(theta: float, n: int) -> complex:
    """(1/n) * sum over t = 1..n of e^(i theta t)."""
    r = np.mod(theta, TWO_PI)
    if min(r, TWO_PI - r) < 1e-13:
        return 1.0 + 0.0j
    z = np.exp(1j * theta)
    return z * (z**n - 1.0) / (z - 1.0) / n


def _default_basis(m: int, c: float) -> np.ndarray:
    basis = np.zeros((2 * m, m))
    for j in range(m):
        basis[j, j] = 1.0
        basis[m + j, j] = c
    return basis


def cesaro_average(eigendata: Sequence, F, n: int, basis=None,
                   c: float = float(np.sqrt(2.0))) -> float:
    """Lattice mean n^(-2m) sum over t in {1..n}^(2m) of ||F e^(X(t)) v||^2,
    where X(t) = sum t_j X_j, v = sum of the eigenvectors, and the basis
    satisfies X_(m+j) = c X_j with c irrational.

    The sum is evaluated exactly: expanding ||.||^2 over eigenpairs turns each
    lattice direction into a geometric sum, so the cost is quadratic in the
    number of eigenpairs and independent of n's lattice size.
    """
    F = np.asarray(F, dtype=complex)
    lams, vecs = _unpack_eigendata(eigendata, F.shape[1])
    m = lams.shape[1]
    if basis is None:
        _reject_rational(c)
        basis = _default_basis(m, c)
    else:
        basis = np.asarray(basis, dtype=float)
        if basis.shape != (2 * m, m):
            raise ParameterError(f"expected {2 * m} basis vectors of dimension {m}")
        for j in range(m):
            ratio = basis[m + j] @ basis[j] / max(basis[j] @ basis[j], 1e-300)
            if np.linalg.norm(basis[m + j] - ratio * basis[j]) > 1e-10:
                raise ParameterError("basis must satisfy X_(m+j) parallel to X_j")
            _reject_rational(ratio)
    theta = lams @ basis.T  # (N, 2m) real phases per lattice direction
    Fv = (F @ vecs.T).T  # (N, dim_out)
    gram = Fv.conj() @ Fv.T  # gram[l, k] = <F v_k, F v_l>
    nlam = lams.shape[0]
    acc = 0.0 + 0.0j
    for k in range(nlam):
        for l in range(nlam):
            factor = 1.0 + 0.0j
            for j in range(2 * m):
                factor *= _geometric_mean_phase(theta[k, j] - theta[l, j], n)
            acc += gram[l, k] * factor
    if abs(acc.imag) > 1e-8 * max(abs(acc.real), 1e-300):
        raise QuadratureError("averaging accumulated a non-real value")
    return float(acc.real)


def cesaro_target(eigendata: Sequence, F) -> float:
    """The limit of the lattice means: sum of ||F v_k||^2 over eigenpairs."""
    F = np.asarray(F, dtype=complex)
    lams, vecs = _unpack_eigendata(eigendata, F.shape[1])
    return float(sum(np.linalg.norm(F @ v) ** 2 for v in vecs))


def _unpack_eigendata(eigendata, dim: int):
    lams, vecs = [], []
    for lam_k, v_k in eigendata:
        lam_k = np.atleast_1d(np.asarray(lam_k))
        if np.iscomplexobj(lam_k):
            if np.abs(lam_k.real).max() > 1e-12 * max(1.0, np.abs(lam_k).max()):
                raise ParameterError("eigenvalue covectors must be purely imaginary")
            lam_k = lam_k.imag
        lams.append(lam_k.astype(float))
        v = np.asarray(v_k, dtype=complex)
        if v.shape != (dim,):
            raise ParameterError("eigenvector dimension does not match the map")
        vecs.append(v)
    lams = np.stack(lams)
    vecs = np.stack(vecs)
    # merge duplicated eigenvalues: they belong to one spectral projection
    merged_l, merged_v = [], []
    used = np.zeros(len(lams), dtype=bool)
    for k in range(len(lams)):
        if used[k]:
            continue
        same = np.linalg.norm(lams - lams[k], axis=1) < 1e-12
        used |= same
        merged_l.append(lams[k])
        merged_v.append(vecs[same].sum(axis=0))
    return np.stack(merged_l), np.stack(merged_v)


def cesaro_average_generators(generators: Sequence[np.ndarray], F, v, n: int) -> float:
    """The same lattice mean from raw commuting generator exponentials.

    ``generators`` lists the 2m matrices e^(X_j) of the (possibly
    non-semisimple) flat action; the mean is computed by iterated power
    averaging of the quadratic form F*F, exact up to floating point.
    """
    F = np.asarray(F, dtype=complex)
    v = np.asarray(v, dtype=complex)
    S = F.conj().T @ F
    for M in generators:
        M = np.asarray(M, dtype=complex)
        acc = np.zeros_like(S)
        power = np.eye(M.shape[0], dtype=complex)
        for _ in range(n):
            power = power @ M
            acc += power.conj().T @ S @ power
        S = acc / n
    val = v.conj() @ S @ v
    if abs(val.imag) > 1e-8 * max(abs(val.real), 1e-300):
        raise QuadratureError("averaging accumulated a non-real value")
    return float(val.real)
