"""Zonal eigenfunctions by compact-group quadrature, and their identities.

The central evaluator computes phi(lam, g) = integral over K of
a(g^{-1} k)^(rho - lam) dk.  The middle-factor power is a product of channel
powers (see GroupModel.a_log_channels), so a batch over group elements and
spectral parameters is one fused kernel call:

    phi[i, j] = sum_k w_k * exp(sum_r c_r(rho - lam_j) * L_r[i, k]),

with L_r the per-node channel logs.  Each model contributes only the geometry:
which pieces of the K-orbit matrix enter the channels, and a quadrature on K
(circle / sphere / Euler angles) whose weights are positive and sum to one.

Everything downstream is checks: the mean-value identity, Weyl-orbit
invariance, the flat-direction expansion with intertwining coefficients, decay
of its residual, and polynomial (never exponential) growth of the normalized
modulus on the imaginary axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .cfunc import CFunctionEngine
from .errors import ParameterError, QuadratureError, SingularParameterError, TruncationError
from .groups import GroupModel, HaarNormalization
from .quadrature import QuadratureSpec, gauss_legendre, trapezoid_circle
from .rootdata import SpectralParam, weyl_group

_DOUBLING_TOL = 1e-8


def _z_rows(lams, rank: int) -> np.ndarray:
    """Normalize spectral-parameter input to an (nj, rank) complex array."""
    if isinstance(lams, SpectralParam):
        return lams.z.reshape(1, rank)
    if isinstance(lams, (list, tuple)) and lams and isinstance(lams[0], SpectralParam):
        return np.stack([l.z for l in lams])
    arr = np.asarray(lams, dtype=complex)
    if arr.ndim == 1:
        arr = arr.reshape(1, rank)
    if arr.shape[1] != rank:
        raise ParameterError(f"spectral parameters must have {rank} coordinates")
    return arr


def _g_stack(gs, d: int) -> np.ndarray:
    arr = np.asarray(gs, dtype=float)
    if arr.ndim == 2:
        arr = arr.reshape(1, d, d)
    return arr


def _so_euler_nodes(resolution: float):
    """ZYZ Euler product rule for the 3x3 rotation group with normalized Haar
    measure d(phi1) d(cos beta) d(phi2) / (8 pi^2)."""
    n1 = max(8, int(round(24 * resolution)))
    nb = max(6, int(round(16 * resolution)))
    n2 = max(8, int(round(24 * resolution)))
    phi1, w1 = trapezoid_circle(n1)
    cb, wb = gauss_legendre(nb, -1.0, 1.0)
    wb = wb / 2.0
    phi2, w2 = trapezoid_circle(n2)
    return (phi1, w1), (cb, wb), (phi2, w2)


def _rot_z(phi):
    c, s = np.cos(phi), np.sin(phi)
    out = np.zeros(np.shape(phi) + (3, 3))
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    out[..., 2, 2] = 1.0
    return out


def _rot_y(cb):
    cb = np.asarray(cb)
    sb = np.sqrt(np.clip(1.0 - cb * cb, 0.0, None))
    out = np.zeros(np.shape(cb) + (3, 3))
    out[..., 0, 0] = cb
    out[..., 0, 2] = sb
    out[..., 1, 1] = 1.0
    out[..., 2, 0] = -sb
    out[..., 2, 2] = cb
    return out


def haar_k_quadrature(model: GroupModel, resolution: float = 1.0):
    """Full-matrix quadrature for the compact factor's normalized Haar measure.

    Needed when the integrand sees all of K (mean-value identity, radial
    convolution), unlike the zonal integral which collapses to an orbit.
    """
    tag = model.tag
    if tag == "sl2r":
        n = max(8, int(round(32 * resolution)))
        theta, w = trapezoid_circle(n)
        mats = np.zeros((n, 2, 2))
        mats[:, 0, 0] = np.cos(theta)
        mats[:, 0, 1] = -np.sin(theta)
        mats[:, 1, 0] = np.sin(theta)
        mats[:, 1, 1] = np.cos(theta)
        return mats, w
    if tag == "so12":
        n = max(8, int(round(32 * resolution)))
        theta, w = trapezoid_circle(n)
        mats = np.zeros((n, 3, 3))
        mats[:, 0, 0] = 1.0
        mats[:, 1, 1] = np.cos(theta)
        mats[:, 1, 2] = -np.sin(theta)
        mats[:, 2, 1] = np.sin(theta)
        mats[:, 2, 2] = np.cos(theta)
        return mats, w
    if tag in ("so13", "sl3r"):
        (phi1, w1), (cb, wb), (phi2, w2) = _so_euler_nodes(resolution)
        R = np.einsum(
            "aij,bjk,ckl->abcil", _rot_z(phi1), _rot_y(cb), _rot_z(phi2)
        ).reshape(-1, 3, 3)
        w = np.einsum("a,b,c->abc", w1, wb, w2).ravel()
        if tag == "sl3r":
            return R, w
        mats = np.zeros((R.shape[0], 4, 4))
        mats[:, 0, 0] = 1.0
        mats[:, 1:, 1:] = R
        return mats, w
    raise ParameterError(
        f"full compact-factor quadrature not implemented for model {tag!r}"
    )


class SphericalEvaluator:
    """Batched zonal-eigenfunction evaluation for one model.

    ``resolution`` scales all node counts; ``refined()`` returns a doubled
    evaluator used for the convergence self-check.
    """

    def __init__(self, model: GroupModel, resolution: float = 1.0):
        self.model = model
        self.resolution = float(resolution)
        self._refined: Optional[SphericalEvaluator] = None
        self._build_nodes()
        if np.any(self.k_weights <= 0):
            raise ParameterError("quadrature weights must be positive")
        if abs(self.k_weights.sum() - 1.0) > 1e-12:
            raise ParameterError("quadrature weights must sum to 1")

    # -- node construction ----------------------------------------------------

    def _build_nodes(self):
        tag = self.model.tag
        r = self.resolution
        if tag == "sl2r":
            n = max(16, int(round(64 * r)))
            theta, w = trapezoid_circle(n)
            # second column of the rotation by theta
            self._cols = (np.stack([-np.sin(theta), np.cos(theta)]),)
            self.k_weights = w
        elif tag.startswith("so1"):
            n = self.model.matrix_size - 1
            d = n - 1  # sphere dimension for the K-orbit of the first axis
            if d == 1:
                m_nodes = max(16, int(round(64 * r)))
                theta, w = trapezoid_circle(m_nodes)
                omega = np.stack([np.cos(theta), np.sin(theta)])
            else:
                omega, w = _sphere_product_rule(d, r)
            self._cols = (omega,)  # (n, nk): unit vectors in the boost block
            self.k_weights = w
        elif tag == "sl3r":
            (phi1, w1), (cb, wb), (phi2, w2) = _so_euler_nodes(
                2.0 * r
            )  # zonal integral needs the finer angular sampling
            R = np.einsum(
                "aij,bjk,ckl->abcil", _rot_z(phi1), _rot_y(cb), _rot_z(phi2)
            ).reshape(-1, 3, 3)
            w = np.einsum("a,b,c->abc", w1, wb, w2).ravel()
            self._cols = (R[:, :, 1].T.copy(), R[:, :, 2].T.copy())  # (3, nk) each
            self.k_weights = w
        else:
            raise ParameterError(f"no zonal quadrature for model {tag!r}")

    def refined(self) -> "SphericalEvaluator":
        if self._refined is None:
            self._refined = SphericalEvaluator(self.model, self.resolution * 2.0)
        return self._refined

    @property
    def n_nodes(self) -> int:
        return self.k_weights.size

    # -- channel logs per model -----------------------------------------------

    def _log_channels(self, gs: np.ndarray):
        tag = self.model.tag
        if tag == "sl2r":
            (col,) = self._cols
            v = np.linalg.inv(gs) @ col  # (ni, 2, nk)
            return (np.log(np.einsum("idk,idk->ik", v, v)),)
        if tag.startswith("so1"):
            (omega,) = self._cols
            J = np.diag([1.0] + [-1.0] * (self.model.matrix_size - 1))
            ginv = np.einsum("ij,njk,kl->nil", J, gs.transpose(0, 2, 1), J)
            # channel of g^{-1} k: first row of g^{-1} against (1, omega)
            vals = ginv[:, 0, 0, None] - ginv[:, 0, 1:] @ omega
            return (np.log(vals),)
        if tag == "sl3r":
            col2, col3 = self._cols
            ginv = np.linalg.inv(gs)
            c2 = ginv @ col2  # (ni, 3, nk)
            c3 = ginv @ col3
            g1 = np.einsum("idk,idk->ik", c3, c3)
            g22 = np.einsum("idk,idk->ik", c2, c2)
            g23 = np.einsum("idk,idk->ik", c2, c3)
            # the Gram determinant cancels catastrophically for extremely
            # anisotropic elements; it is >= 0 exactly, and wherever the
            # clamp bites the node weight is negligible for the regimes in
            # which this rule is used
            gram = np.maximum(g22 * g1 - g23 * g23, 1e-300)
            return (np.log(g1), np.log(gram))
        raise ParameterError(tag)

    # -- evaluation -------------------------------------------------------------

    def phi_batch(self, lams, gs, check: bool = False, _chunk: int = 64) -> np.ndarray:
        """phi values as an (n_elements, n_parameters) complex array."""
        model = self.model
        z = _z_rows(lams, model.rank)
        gs = _g_stack(gs, model.matrix_size)
        s = model.root_datum.rho[None, :] - z  # (nj, rank)
        exps = tuple(
            np.ascontiguousarray(e)
            for e in np.stack(
                [np.array(model.channel_exponents(sj)) for sj in s]
            ).T
        )
        out = np.empty((gs.shape[0], z.shape[0]), dtype=complex)
        for i0 in range(0, gs.shape[0], _chunk):
            chans = self._log_channels(gs[i0 : i0 + _chunk])
            out[i0 : i0 + _chunk] = kernels.power_sum(chans, self.k_weights, exps)
        if check:
            fine = self.refined().phi_batch(lams, gs, check=False, _chunk=_chunk)
            scale = np.maximum(np.abs(fine), 1e-12)
            err = float((np.abs(out - fine) / scale).max())
            if err > _DOUBLING_TOL:
                raise QuadratureError(
                    f"zonal quadrature failed the doubling check: rel change {err:.2e}"
                )
            return fine
        return out

    def phi(self, lam, g, check: bool = True) -> complex:
        g = g.matrix if hasattr(g, "matrix") else g
        return complex(self.phi_batch(lam, g, check=check)[0, 0])

    def phi_stereographic(self, lam, g) -> complex:
        """Independent half-angle-tangent chart (2x2 model only).

        The circle is parametrized by u = tan(theta/2) = sinh(v); on the
        v-line the integrand decays like e^(-|v|), so an equispaced rule
        converges fast.  Node count grows with the element's radius because
        the integrand develops a feature of width ~ sigma_max(g)^(-2) near
        theta = pi."""
        if self.model.tag != "sl2r":
            raise ParameterError("second chart implemented for the 2x2 model")
        g = np.asarray(g.matrix if hasattr(g, "matrix") else g, dtype=float)
        t_phys = float(np.log(np.linalg.svd(g, compute_uv=False)[0]))
        n = int(min(400 * np.exp(2.0 * t_phys), 4e5))
        if n >= 4e5:
            raise QuadratureError("element too deep for the half-angle chart")
        cut = t_phys + 24.0
        v = np.linspace(-cut, cut, 2 * n + 1)
        h = v[1] - v[0]
        u = np.sinh(v)
        den = 1.0 + u * u  # cosh(v)^2
        cos_t = (1.0 - u * u) / den
        sin_t = 2.0 * u / den
        col = np.stack([-sin_t, cos_t])
        w = np.linalg.inv(g) @ col
        q = np.einsum("dk,dk->k", w, w)
        lam = lam if isinstance(lam, SpectralParam) else SpectralParam.from_complex(lam)
        (c1,) = self.model.channel_exponents(self.model.root_datum.rho - lam.z)
        # dtheta = 2 dv / cosh(v), normalized by 2 pi
        vals = np.exp(c1 * np.log(q)) / np.sqrt(den)
        return complex(np.sum(vals) * h / np.pi)


# ---------------------------------------------------------------------------
# identity checks


def mean_value_check(evaluator: SphericalEvaluator, lam, g, h,
                     k_resolution: float = 1.0) -> float:
    """|integral over K of phi(g k h) dk  -  phi(g) phi(h)|."""
    model = evaluator.model
    gm = g.matrix if hasattr(g, "matrix") else np.asarray(g, dtype=float)
    hm = h.matrix if hasattr(h, "matrix") else np.asarray(h, dtype=float)
    mats, w = haar_k_quadrature(model, k_resolution)
    prods = np.einsum("ij,kjl,lm->kim", gm, mats, hm)
    vals = evaluator.phi_batch(lam, prods)[:, 0]
    lhs = complex(np.sum(w * vals))
    rhs = evaluator.phi(lam, gm, check=False) * evaluator.phi(lam, hm, check=False)
    return abs(lhs - rhs)


def w_invariance_check(evaluator: SphericalEvaluator, lam, g) -> float:
    """max over the Weyl group of |phi(lam, g) - phi(w lam, g)|."""
    model = evaluator.model
    W = weyl_group(model.root_datum)
    lam = lam if isinstance(lam, SpectralParam) else SpectralParam.from_complex(lam)
    orbit = [
        SpectralParam(re=W.act(w, lam.re), im=W.act(w, lam.im))
        for w in range(len(W))
    ]
    gm = g.matrix if hasattr(g, "matrix") else g
    vals = evaluator.phi_batch(orbit, gm)[0]
    return float(np.abs(vals - vals[W.identity_index]).max())


def holomorphy_residual(evaluator: SphericalEvaluator, lam, g,
                        step: float = 1e-4, coordinate: int = 0) -> float:
    """Cauchy-Riemann residual of phi in one spectral coordinate."""
    lam = lam if isinstance(lam, SpectralParam) else SpectralParam.from_complex(lam)
    e = np.zeros(evaluator.model.rank)
    e[coordinate] = 1.0
    gm = g.matrix if hasattr(g, "matrix") else g

    def at(re_shift, im_shift):
        mu = SpectralParam(re=lam.re + re_shift * e, im=lam.im + im_shift * e)
        return evaluator.phi(mu, gm, check=False)

    d_re = (at(step, 0.0) - at(-step, 0.0)) / (2.0 * step)
    d_im = (at(0.0, step) - at(0.0, -step)) / (2.0 * step)
    return abs(d_im - 1j * d_re)


# ---------------------------------------------------------------------------
# flat-direction expansion


@dataclass(frozen=True)
class ConstantTermData:
    lam: SpectralParam
    coefficients: dict  # Weyl index -> complex
    exponents: dict  # Weyl index -> lam(X) after the orbit action (complex)
    direction: np.ndarray  # X in the open negative chamber, orthonormal coords
    rho_of_x: float


def constant_term_data(engine: CFunctionEngine, lam, X) -> ConstantTermData:
    """Coefficients c(w lam) and frequencies (w lam)(X) for the expansion."""
    lam = lam if isinstance(lam, SpectralParam) else SpectralParam.from_complex(lam)
    rd = engine.model.root_datum
    if not lam.is_imaginary or not lam.is_regular(rd):
        raise SingularParameterError(
            "the expansion requires a regular parameter on the imaginary axis"
        )
    X = np.asarray(X, dtype=float)
    if not np.all(rd.positive_roots @ X < -1e-9):
        raise ParameterError("direction must lie in the open negative chamber")
    coeff, freq = {}, {}
    for w in range(len(engine.weyl)):
        wlam = engine.weyl_translate(lam, w)
        coeff[w] = engine.c_function(wlam)
        freq[w] = complex(wlam.pair(X))
    return ConstantTermData(
        lam=lam,
        coefficients=coeff,
        exponents=freq,
        direction=X,
        rho_of_x=float(rd.rho @ X),
    )


def constant_term_expansion(data: ConstantTermData, t):
    """Sum over the orbit of c(w lam) e^(t (w lam)(X)); vectorized in t."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape, dtype=complex)
    for w, c in data.coefficients.items():
        out = out + c * np.exp(t * data.exponents[w])
    return out if out.shape else complex(out)


# ---------------------------------------------------------------------------
# radial expansion at infinity
#
# Away from the walls, the zonal function restricted to exp(t X) with X in the
# open negative chamber is a convergent exponential series: plugging the
# ansatz  Phi_lam(H) = sum over mu of Gamma_mu(lam) e^((lam + rho + mu)(H)),
# mu ranging over the even-root lattice, into the radial Laplacian
#   L = Laplacian_a + sum over alpha > 0 of m_alpha coth(alpha(H)) d_alpha
# and expanding coth(alpha(H)) = -1 - 2 sum_k e^(2 k alpha(H))  (alpha(H) < 0)
# turns the eigenvalue equation L Phi = (<lam,lam> - <rho,rho>) Phi into a
# triangular recursion for the coefficients.  The full function is the
# orbit sum  phi = sum over w of c(w lam) Phi_(w lam),  which ties the
# recursion to the same c-normalization the constant term uses; agreement
# with the compact-side integral on overlapping radii is checked in tests
# and is what validates both conventions at once.


def _simple_root_coords(rd) -> np.ndarray:
    """Integer coordinates of each positive root in the simple-root basis."""
    simple = rd.simple_roots()
    coords, *_ = np.linalg.lstsq(simple.T, rd.positive_roots.T, rcond=None)
    coords = np.rint(coords.T).astype(int)
    if np.abs(coords @ simple - rd.positive_roots).max() > 1e-10:
        raise ParameterError("positive roots are not integral in the simple roots")
    return coords


def series_coefficients(rd, lam_z: np.ndarray, levels: int):
    """Recursion coefficients Gamma_mu(lam) for mu = 2 (n . simple roots).

    Returns (indices, gamma): integer lattice indices n (one row per term,
    ordered by level |n|) and the complex coefficients.  The recursion
      (<mu,mu> + 2<mu,lam>) Gamma_mu
          = 2 sum over alpha>0, k>=1 of
                m_alpha <lam + rho + mu - 2 k alpha, alpha> Gamma_(mu - 2k alpha)
    never divides by zero off the real axis, so imaginary parameters are safe
    at every level.
    """
    simple = rd.simple_roots()
    rank = simple.shape[0]
    root_int = _simple_root_coords(rd)
    lam_z = np.asarray(lam_z, dtype=complex)
    rho = rd.rho

    if rank == 1:
        indices = [(k,) for k in range(levels + 1)]
    else:
        indices = [
            (i, L - i) for L in range(levels + 1) for i in range(L + 1)
        ]
    pos = {n: i for i, n in enumerate(indices)}
    gamma = np.zeros(len(indices), dtype=complex)
    gamma[0] = 1.0
    for idx, n in enumerate(indices):
        if sum(n) == 0:
            continue
        mu = 2.0 * (np.array(n) @ simple)
        den = mu @ mu + 2.0 * (mu @ lam_z)
        acc = 0.0 + 0.0j
        for a_int, a_vec, m in zip(root_int, rd.positive_roots,
                                   rd.positive_multiplicities):
            k = 1
            while True:
                prev = tuple(n - k * a_int)
                if any(p < 0 for p in prev):
                    break
                j = pos.get(prev)
                if j is not None:
                    vec = lam_z + rho + mu - 2.0 * k * a_vec
                    acc += m * gamma[j] * (vec @ a_vec)
                k += 1
        gamma[idx] = 2.0 * acc / den
    return np.array(indices, dtype=int), gamma


class RadialPhi:
    """Zonal function along exp(t X), accurate at every radius.

    Small radii use the compact-group quadrature; once every series term
    contracts fast enough (e^(2 t alpha(X)) below ``switch_q`` for all simple
    roots), evaluation switches to the expansion at infinity, which only gets
    more accurate as t grows -- exactly where the quadrature loses the
    unresolved coordinate-cell spikes.  Singular imaginary parameters are
    evaluated by a tiny regularizing shift (even in the shift by Weyl
    invariance, so the bias is second order); real parameters always take the
    integral, whose integrand is positive there and forgiving at scale.
    """

    def __init__(self, engine: CFunctionEngine, evaluator: Optional[SphericalEvaluator] = None,
                 switch_q: float = 0.45, series_tol: float = 1e-9):
        self.engine = engine
        self.model = engine.model
        self.evaluator = evaluator if evaluator is not None else SphericalEvaluator(self.model)
        self.switch_q = float(switch_q)
        self.series_tol = float(series_tol)

    def _series_values(self, lam: SpectralParam, t: np.ndarray, X: np.ndarray):
        rd = self.model.root_datum
        simple = rd.simple_roots()
        alpha_max = float((simple @ X).max())  # least negative simple value
        levels = int(np.ceil(38.0 / (-2.0 * t.min() * alpha_max))) + 1
        if levels > 400:
            raise QuadratureError("expansion would need too many levels here")
        W = self.engine.weyl
        total = np.zeros(t.shape, dtype=complex)
        tail = 0.0
        for w in range(len(W)):
            wlam = self.engine.weyl_translate(lam, w)
            c_w = self.engine.c_function(wlam)
            indices, gamma = series_coefficients(rd, wlam.z, levels)
            freqs = (wlam.z + rd.rho + 2.0 * (indices @ simple)) @ X
            terms = gamma[None, :] * np.exp(np.outer(t, freqs))
            total += c_w * terms.sum(axis=1)
            last = indices.sum(axis=1) == levels
            tail = max(tail, float(abs(c_w) * np.abs(terms[0, last]).sum()))
        scale = max(float(np.abs(total).max()), 1e-300)
        if tail > self.series_tol * scale:
            raise QuadratureError(
                f"expansion truncation {tail:.2e} exceeds tolerance at t={t.min():.2f}"
            )
        return total

    def _integral_values(self, lam: SpectralParam, t: np.ndarray, X: np.ndarray):
        mats = np.stack([self.model.a_matrix(ti * X) for ti in t])
        return self.evaluator.phi_batch(lam, mats)[:, 0]

    def __call__(self, lam, t, X=None):
        model = self.model
        rd = model.root_datum
        lam = lam if isinstance(lam, SpectralParam) else SpectralParam.from_complex(lam)
        if X is None:
            X = -rd.rho / np.linalg.norm(rd.rho)
        X = np.asarray(X, dtype=float)
        if not np.all(rd.positive_roots @ X < -1e-9):
            raise ParameterError("direction must lie in the open negative chamber")
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < 0):
            raise ParameterError("radii must be nonnegative")
        out = np.empty(t.shape, dtype=complex)

        series_ok = lam.is_imaginary
        lam_series = lam
        if series_ok and not lam.is_regular(rd):
            eps = 1e-5
            shift = rd.rho / np.linalg.norm(rd.rho)
            lam_series = SpectralParam.imaginary(lam.im + eps * shift)
            while not lam_series.is_regular(rd):
                eps *= 1.7
                lam_series = SpectralParam.imaginary(lam.im + eps * shift)
        alpha_max = float((rd.simple_roots() @ X).max())
        t_switch = np.log(self.switch_q) / (2.0 * alpha_max)
        use_series = series_ok & (t >= t_switch)
        if np.any(use_series):
            out[use_series] = self._series_values(lam_series, t[use_series], X)
        if np.any(~use_series):
            out[~use_series] = self._integral_values(lam, t[~use_series], X)
        return out


def asymptotic_residual(phi_eval, data: ConstantTermData, t):
    """r(t) = |phi(exp tX) e^(-t rho(X)) - expansion(t)| on a t-grid.

    ``phi_eval`` is a RadialPhi (preferred: it stays accurate deep into the
    chamber) or a bare SphericalEvaluator for small radii.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if isinstance(phi_eval, SphericalEvaluator):
        mats = np.stack([phi_eval.model.a_matrix(ti * data.direction) for ti in t])
        phis = phi_eval.phi_batch(data.lam, mats)[:, 0]
    else:
        phis = phi_eval(data.lam, t, data.direction)
    normalized = phis * np.exp(-t * data.rho_of_x)
    return np.abs(normalized - constant_term_expansion(data, t))


def fit_decay_rate(t, r, floor: float = 1e-9, min_points: int = 4) -> float:
    """Least-squares slope of log r against t, ignoring floor-level samples.

    Samples at or below ``floor`` carry no rate information (they sit on the
    quadrature noise floor); if fewer than ``min_points`` remain the window
    is considered exhausted and the fit fails loudly.
    """
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    keep = r > floor
    if keep.sum() < min_points:
        raise ParameterError(
            "too few residual samples above the noise floor to fit a rate; "
            "shrink the t-window or lower the floor"
        )
    tt, rr = t[keep], np.log(r[keep])
    slope = np.polyfit(tt, rr, 1)[0]
    return float(slope)


@dataclass(frozen=True)
class TemperednessReport:
    degree: float  # fitted polynomial log-degree d
    linear_rate: float  # residual trend b (per unit t) on top of the power law
    flagged: bool
    rho_of_x: float
    window: float  # t_max actually used (extended when the trend was ambiguous)


def temperedness_bound_check(phi_eval, lam, X,
                             t_max: float = 30.0, n_samples: int = 180,
                             n_blocks: int = 12,
                             flag_factor: float = 0.1) -> TemperednessReport:
    """Check that |phi(exp tX)| e^(-t rho(X)) obeys a power law C (1+t)^d.

    Two-stage fit on envelope samples (block maxima, since the normalized
    modulus oscillates through the orbit interference): first the power law
    log g = a + d log(1+t), then the trend b of the residuals against t.  An
    exponential-growth flag needs the trend to be both above
    ``flag_factor * |rho(X)|`` and material across the window (residual growth
    beyond e^3); a trend that clears the rate bar but not the materiality bar
    is an oscillation hump, and the window is doubled once to let it unwind.
    For imaginary parameters a flag can only mean an implementation bug; for
    real parameters (2 rho, say) it is the expected negative control.

    The fitted degree is returned; in the unflagged (polynomial) regime it
    must not exceed the number of positive roots plus one.
    """
    model = phi_eval.model
    rd = model.root_datum
    X = np.asarray(X, dtype=float)
    if not np.all(rd.positive_roots @ X < -1e-9):
        raise ParameterError("direction must lie in the open negative chamber")
    lam = lam if isinstance(lam, SpectralParam) else SpectralParam.from_complex(lam)
    rho_x = float(rd.rho @ X)

    def envelope_fit(T: float):
        t = np.linspace(1.0, T, n_samples)
        if isinstance(phi_eval, SphericalEvaluator):
            mats = np.stack([model.a_matrix(ti * X) for ti in t])
            phis = phi_eval.phi_batch(lam, mats)[:, 0]
        else:
            phis = phi_eval(lam, t, X)
        g = np.maximum(np.abs(phis) * np.exp(-t * rho_x), 1e-300)
        tb, gb = [], []
        for block in np.array_split(np.arange(n_samples), n_blocks):
            j = block[np.argmax(g[block])]
            tb.append(t[j])
            gb.append(g[j])
        tb = np.array(tb)
        logg = np.log(np.array(gb))
        design = np.stack([np.ones_like(tb), np.log1p(tb), tb], axis=1)
        coef, *_ = np.linalg.lstsq(design, logg, rcond=None)
        d_pure = float(np.polyfit(np.log1p(tb), logg, 1)[0])
        return d_pure, float(coef[2])

    window = float(t_max)
    d, b = envelope_fit(window)
    if b > flag_factor * abs(rho_x):
        # prospective flag: confirm on the doubled window, where a genuine
        # exponential keeps its rate while an interference hump unwinds
        window = 2.0 * t_max
        d, b = envelope_fit(window)
    flagged = (b > flag_factor * abs(rho_x)) and (b * (window - 1.0) > 3.0)
    return TemperednessReport(degree=d, linear_rate=b, flagged=flagged,
                              rho_of_x=rho_x, window=window)


# ---------------------------------------------------------------------------
# radial convolution


def zonal_k_rule(model: GroupModel, resolution: float = 1.0):
    """Compact-factor rule adequate for M-biinvariant integrands.

    Such integrands only see the polar angle between the flat axis and its
    rotate, so the Lorentz models reduce to a single 1-D rule; other models
    fall back to the full quadrature."""
    if model.tag.startswith("so1"):
        n = max(24, int(round(32 * resolution)))
        theta, w = gauss_legendre(n, 0.0, np.pi)
        d = model.matrix_size
        mats = np.tile(np.eye(d), (n, 1, 1))
        mats[:, 1, 1] = mats[:, 2, 2] = np.cos(theta)
        mats[:, 1, 2] = -np.sin(theta)
        mats[:, 2, 1] = np.sin(theta)
        dens = np.sin(theta) ** (d - 3) if d > 3 else np.ones_like(theta)
        w = w * dens
        return mats, w / w.sum()
    return haar_k_quadrature(model, resolution)


def convolve_radial(model: GroupModel, haar: HaarNormalization, f1, f2,
                    k_resolution: float = 8.0, spec: Optional[QuadratureSpec] = None):
    """Convolution of two bi-invariant profiles, sampled radially.

    (f1 * f2)(exp H0) = c_G * integral over the negative chamber of
    J(H) f1(H) [ integral over K of f2(radial(exp(-H) k exp(H0))) dk ] dH.
    """
    from .transform import RadialProfile, cartan_grid_rule

    if not isinstance(f1, RadialProfile) or not isinstance(f2, RadialProfile):
        raise ParameterError("convolution operands must be radial profiles")
    if f1.model_tag != model.tag or f2.model_tag != model.tag:
        raise ParameterError("profiles belong to a different model")
    out_radius = f1.support_radius + f2.support_radius
    grid_extent = max(f1.extent, f2.extent)
    if out_radius > grid_extent + 1e-12:
        raise TruncationError(
            "convolution support exceeds the profile grids",
            suggested_cutoff=out_radius,
        )
    r_nodes, jw = cartan_grid_rule(model, haar, f1.support_radius,
                                   spec or QuadratureSpec(nodes_per_panel=28, panel_len=1.0))
    mats_k, wk = zonal_k_rule(model, k_resolution)
    f1_vals = f1(r_nodes)
    keep = np.abs(f1_vals) > 0
    r_nodes, jw, f1_vals = r_nodes[keep], jw[keep], f1_vals[keep]
    direction = f1.direction
    inv_a = np.stack(
        [np.linalg.inv(model.a_matrix(r * direction)) for r in r_nodes]
    )
    left = np.einsum("nij,kjl->nkil", inv_a, mats_k)  # (n_nodes, nk, d, d)
    out = RadialProfile.zeros_like(f1, support_radius=min(out_radius, grid_extent))
    samples = np.zeros(out.h_grid.shape[0], dtype=complex)
    for j, r0 in enumerate(out.h_grid):
        prods = left @ model.a_matrix(r0 * direction)
        rad = np.linalg.norm(model.cartan_radial_batch(prods), axis=-1)
        inner = (wk[None, :] * f2(rad)).sum(axis=1)  # K-average per node
        samples[j] = np.sum(jw * f1_vals * inner)
    return out.with_values(samples)


def _sphere_product_rule(d: int, resolution: float):
    """Product quadrature on the unit d-sphere in R^(d+1), weights normalized.

    Polar angles get Gauss rules against their sin-power densities; the last
    angle is periodic and gets the equispaced rule.
    """
    n_az = max(16, int(round(64 * resolution)))
    theta_az, w_az = trapezoid_circle(n_az)
    coords = [np.cos(theta_az), np.sin(theta_az)]
    weights = w_az
    for k in range(1, d):
        # prepend angle psi with density sin^k(psi) d psi on [0, pi]
        n_p = max(12, int(round(32 * resolution)))
        psi, wp = gauss_legendre(n_p, 0.0, np.pi)
        wp = wp * np.sin(psi) ** k
        wp = wp / wp.sum()
        new_first = np.repeat(np.cos(psi), weights.size)
        scale = np.repeat(np.sin(psi), weights.size)
        coords = [new_first] + [scale * np.tile(c, n_p) for c in coords]
        weights = np.repeat(wp, weights.size) * np.tile(weights, n_p)
    omega = np.stack(coords)  # (d+1, nk)
    return omega, weights
