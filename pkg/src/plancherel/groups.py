"""Concrete matrix groups: factorizations and measure normalizations.

Three model families are implemented:

* ``sl2r``   — 2x2 real unimodular matrices;
* ``so1n``   — the identity component of the Lorentz group of signature (1, n);
* ``sl3r``   — 3x3 real unimodular matrices.

Each model fixes an orthonormal basis of the flat subspace with respect to the
invariant form (4*tr, (n-1)*tr, 6*tr respectively), and all vectors/covectors
exchanged with :mod:`plancherel.rootdata` are coordinates in that basis.  The
factorization used throughout is g = k * exp(H) * nbar with nbar in the
*lower* (opposite) unipotent group.

Measure conventions: the compact factor carries normalized Haar measure, the
flat factor Lebesgue measure in the orthonormal coordinates, and the unipotent
factor Lebesgue measure divided by the normalizer z_n that makes
``integral over N of a(n)^(2 rho) dn = 1``.  The polar-coordinates density on
the negative chamber is the sinh product times a calibrated constant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import expm

from .errors import (
    CalibrationError,
    InvalidElementError,
    ParameterError,
    QuadratureError,
)
from .quadrature import QuadratureSpec, gauss_legendre, panel_rule
from .rootdata import RootDatum, build_root_datum

_TOL = 1e-10


# ---------------------------------------------------------------------------
# elements and factor containers


@dataclass(frozen=True)
class GroupElement:
    model: "GroupModel"
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", m)
        self.model.validate_matrix(m)

    def inv(self) -> "GroupElement":
        return GroupElement(self.model, self.model.invert(self.matrix))

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.model, self.matrix @ other.matrix)


@dataclass(frozen=True)
class IwasawaFactors:
    """k * exp(H) * nbar, with H in orthonormal flat coordinates."""

    k: np.ndarray
    H: np.ndarray
    nbar: np.ndarray
    model: "GroupModel"

    def reconstruct(self) -> np.ndarray:
        return self.k @ self.model.a_matrix(self.H) @ self.nbar

    def residual(self, g) -> float:
        g = np.asarray(g, dtype=float)
        return float(np.abs(self.reconstruct() - g).max() / max(1.0, np.abs(g).max()))


@dataclass(frozen=True)
class HaarNormalization:
    z_n: float
    cartan_const: float
    quadrature_spec: QuadratureSpec

    def __post_init__(self):
        if not (self.z_n > 0.0):
            raise ParameterError("z_n must be positive")


# ---------------------------------------------------------------------------
# base model


class GroupModel:
    tag: str
    matrix_size: int
    dim_n: int
    root_datum: RootDatum

    def __init__(self):
        self._haar: Optional[HaarNormalization] = None

    # -- required structure ------------------------------------------------

    @property
    def rank(self) -> int:
        return self.root_datum.rank

    @property
    def rho(self) -> np.ndarray:
        return self.root_datum.rho

    def validate_matrix(self, m: np.ndarray) -> None:
        raise NotImplementedError

    def invert(self, m: np.ndarray) -> np.ndarray:
        return np.linalg.inv(m)

    def a_matrix(self, coords) -> np.ndarray:
        """exp(H) for H given in orthonormal flat coordinates."""
        raise NotImplementedError

    def a_log_channels(self, m: np.ndarray):
        """Log quantities (per trailing matrix) determining the middle factor.

        Returns a tuple of arrays L_r with the property that
        exp(H(m)) raised to a covector s equals exp(sum_r c_r(s) * L_r)
        where c_r = self.channel_exponents(s).  Vectorized over leading axes.
        """
        raise NotImplementedError

    def channel_exponents(self, s) -> tuple:
        raise NotImplementedError

    def a_coords(self, m: np.ndarray) -> np.ndarray:
        """Orthonormal coordinates of the Iwasawa middle factor, vectorized."""
        raise NotImplementedError

    def iwasawa(self, g) -> IwasawaFactors:
        raise NotImplementedError

    def cartan_radial(self, g) -> np.ndarray:
        """Coordinates of the unique H in the closed negative chamber with
        g in K exp(H) K."""
        raise NotImplementedError

    def cartan_radial_batch(self, mats: np.ndarray) -> np.ndarray:
        """Vectorized cartan_radial over a stack of matrices, (..., rank)."""
        raise NotImplementedError

    def random_element(self, rng, scale: float = 0.5) -> GroupElement:
        raise NotImplementedError

    def n_power_integral(self, s, spec: QuadratureSpec, subset=None, **kw) -> complex:
        """Integral over the unipotent slice exp(sum of chosen root spaces) of
        a(n)^s, against Lebesgue measure in form-orthonormal coordinates.

        ``s`` is a covector in orthonormal coordinates (may be complex);
        ``subset`` selects positive-root indices (default: all of them).
        """
        raise NotImplementedError

    def gaussian_iwasawa_integral(self, beta: float, z_n: float, spec: QuadratureSpec) -> float:
        """integral over G of exp(-beta * |g|_F^2), via the k a nbar coordinates."""
        raise NotImplementedError

    def gaussian_cartan_integral(self, beta: float, spec: QuadratureSpec) -> float:
        """Same integral in polar coordinates, *without* the calibration
        constant: integral over the negative chamber of J(H) exp(-beta |exp H|_F^2) dH."""
        raise NotImplementedError

    # -- derived helpers ----------------------------------------------------

    def element(self, matrix) -> GroupElement:
        return GroupElement(self, matrix)

    def identity(self) -> GroupElement:
        return GroupElement(self, np.eye(self.matrix_size))

    def exp_a(self, coords) -> GroupElement:
        return GroupElement(self, self.a_matrix(coords))

    def a_power(self, m: np.ndarray, s) -> np.ndarray:
        """a(m)^s = exp(s(H(m))) for a covector s, vectorized over m."""
        chans = self.a_log_channels(m)
        exps = self.channel_exponents(s)
        acc = exps[0] * chans[0]
        for c, L in zip(exps[1:], chans[1:]):
            acc = acc + c * L
        return np.exp(acc)

    def u_values(self, s) -> np.ndarray:
        """Per-positive-root exponents u_gamma(s) = <s - rho, gamma>/<gamma, gamma>.

        For s = rho - lambda this is the standard spectral variable of the
        rank-one factor attached to gamma; the integral over the unipotent
        slice converges iff every Re u_gamma > 0.
        """
        s = np.asarray(s)
        rd = self.root_datum
        out = []
        for gamma in rd.positive_roots:
            out.append((s - rd.rho) @ gamma / (gamma @ gamma))
        return np.array(out)

    @property
    def haar(self) -> HaarNormalization:
        if self._haar is None:
            self._haar = compute_haar_normalization(self)
        return self._haar

    def chamber_check(self, coords, tol: float = 1e-9) -> bool:
        coords = np.asarray(coords, dtype=float)
        return bool(np.all(self.root_datum.positive_roots @ coords <= tol))


# ---------------------------------------------------------------------------
# SL(n, R) common pieces


def _flip_qr(g: np.ndarray):
    """QR factorization of the index-reversed matrix, giving g = k * (lower
    triangular with positive diagonal)."""
    n = g.shape[0]
    F = np.fliplr(np.eye(n))
    q, r = np.linalg.qr(F @ g @ F)
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    q = q * d[None, :]
    r = r * d[:, None]
    return F @ q @ F, F @ r @ F  # orthogonal, lower-positive


class _SLModel(GroupModel):
    b_coeff: float  # invariant form = b_coeff * tr(X Y)

    def validate_matrix(self, m):
        if m.shape != (self.matrix_size, self.matrix_size):
            raise InvalidElementError(f"expected {self.matrix_size}x{self.matrix_size} matrix")
        scale = max(1.0, float(np.abs(m).max()) ** self.matrix_size)
        if abs(np.linalg.det(m) - 1.0) > _TOL * scale:
            raise InvalidElementError("matrix determinant is not 1 within tolerance")

    def invert(self, m):
        return np.linalg.inv(m)

    def _diag_to_coords(self, x: np.ndarray) -> np.ndarray:
        """Coordinates of diag(x) (traceless) in the orthonormal basis."""
        raise NotImplementedError

    def _coords_to_diag(self, coords) -> np.ndarray:
        raise NotImplementedError

    def a_matrix(self, coords):
        return np.diag(np.exp(self._coords_to_diag(coords)))

    def iwasawa(self, g) -> IwasawaFactors:
        m = g.matrix if isinstance(g, GroupElement) else np.asarray(g, dtype=float)
        self.validate_matrix(m)
        k, low = _flip_qr(m)
        d = np.diag(low).copy()
        nbar = low / d[:, None]
        coords = self._diag_to_coords(np.log(d))
        return IwasawaFactors(k, coords, nbar, self)

    def cartan_radial(self, g) -> np.ndarray:
        m = g.matrix if isinstance(g, GroupElement) else np.asarray(g, dtype=float)
        sv = np.linalg.svd(m, compute_uv=False)  # descending
        x = np.log(sv)[::-1]  # increasing -> negative chamber
        return self._diag_to_coords(x)

    def cartan_radial_batch(self, mats: np.ndarray) -> np.ndarray:
        sv = np.linalg.svd(np.asarray(mats, dtype=float), compute_uv=False)
        x = np.log(sv[..., ::-1])
        return self._diag_to_coords(x)

    def random_element(self, rng, scale: float = 0.5) -> GroupElement:
        n = self.matrix_size
        x = rng.normal(size=(n, n)) * scale
        x -= np.trace(x) / n * np.eye(n)
        return GroupElement(self, expm(x))


# ---------------------------------------------------------------------------
# SL(2, R)


class SL2RModel(_SLModel):
    tag = "sl2r"
    matrix_size = 2
    dim_n = 1
    b_coeff = 4.0

    def __init__(self):
        super().__init__()
        self.root_datum = build_root_datum("rank_one", multiplicity=1)
        self._sqrt8 = 2.0 * np.sqrt(2.0)

    def _diag_to_coords(self, x):
        # H1 = diag(1,-1)/(2 sqrt2):  h = <diag(x), H1> = 4 (x1 - x2)/(2 sqrt2)
        x = np.asarray(x)
        return np.stack([np.sqrt(2.0) * (x[..., 0] - x[..., 1])], axis=-1)

    def _coords_to_diag(self, coords):
        hp = np.asarray(coords, dtype=float)[0] / self._sqrt8
        return np.array([hp, -hp])

    def a_log_channels(self, m):
        m = np.asarray(m, dtype=float)
        q = m[..., 0, 1] ** 2 + m[..., 1, 1] ** 2  # squared norm of last column
        return (np.log(q),)

    def channel_exponents(self, s):
        return (-np.sqrt(2.0) * np.asarray(s)[0],)

    def a_coords(self, m):
        (l1,) = self.a_log_channels(m)
        return np.stack([-np.sqrt(2.0) * l1], axis=-1)

    def n_power_integral(self, s, spec: QuadratureSpec, subset=None, **kw) -> complex:
        u = self.u_values(s)[0]
        if np.real(u) <= 0:
            raise QuadratureError("unipotent integral diverges for this exponent")
        x, w = spec.line(2.0 * float(np.real(u)))
        vals = np.exp((-0.5 - u) * np.log1p(x * x))
        # entry coordinate x relates to the form-orthonormal one by a factor 2
        return complex(2.0 * np.sum(w * vals))

    def gaussian_iwasawa_integral(self, beta, z_n, spec):
        # short panels: the integrand is cosh-in-the-exponent, whose useful
        # analyticity strip is narrow, and long Gauss panels stall early
        hp, w = panel_rule(-8.0, 8.0, min(spec.panel_len, 3.0), spec.nodes_per_panel)
        # exact Gaussian in the unipotent entry; a^{-2 rho} = e^{-2 h'}
        vals = np.exp(hp) * np.exp(-beta * 2.0 * np.cosh(2.0 * hp)) * np.exp(-2.0 * hp)
        return float(2.0 * np.sqrt(np.pi / beta) * self._sqrt8 * np.sum(w * vals) / z_n)

    def gaussian_cartan_integral(self, beta, spec):
        h, w = panel_rule(-30.0, 0.0, min(spec.panel_len, 3.0), spec.nodes_per_panel)
        a_of_h = h / np.sqrt(2.0)  # alpha(H) for coordinate h
        vals = np.abs(np.sinh(a_of_h)) * np.exp(-beta * 2.0 * np.cosh(2.0 * h / self._sqrt8))
        return float(np.sum(w * vals))


# ---------------------------------------------------------------------------
# SO0(1, n)


class SO1nModel(GroupModel):
    matrix_size: int

    def __init__(self, n: int):
        super().__init__()
        if n < 2:
            raise ParameterError("so1n requires n >= 2")
        self.n = n
        self.m = n - 1  # root multiplicity
        self.tag = f"so1{n}"
        self.matrix_size = n + 1
        self.dim_n = n - 1
        self.root_datum = build_root_datum("rank_one", multiplicity=self.m)
        self._J = np.diag([1.0] + [-1.0] * n)
        self._sq2m = np.sqrt(2.0 * self.m)

    def validate_matrix(self, m):
        if m.shape != (self.matrix_size, self.matrix_size):
            raise InvalidElementError(f"expected {self.matrix_size}x{self.matrix_size} matrix")
        scale = max(1.0, float(np.abs(m).max()) ** 2)
        if np.abs(m.T @ self._J @ m - self._J).max() > _TOL * scale:
            raise InvalidElementError("matrix does not preserve the Lorentz form")
        if m[0, 0] < 1.0 - _TOL or abs(np.linalg.det(m) - 1.0) > _TOL * scale:
            raise InvalidElementError("matrix is outside the identity component")

    def invert(self, m):
        return self._J @ m.T @ self._J

    def a_matrix(self, coords):
        t = float(np.asarray(coords, dtype=float)[0]) / self._sq2m
        out = np.eye(self.matrix_size)
        out[0, 0] = out[1, 1] = np.cosh(t)
        out[0, 1] = out[1, 0] = np.sinh(t)
        return out

    def a_log_channels(self, m):
        m = np.asarray(m, dtype=float)
        return (np.log(m[..., 0, 0] - m[..., 0, 1]),)

    def channel_exponents(self, s):
        return (-self._sq2m * np.asarray(s)[0],)

    def a_coords(self, m):
        (l1,) = self.a_log_channels(m)
        return np.stack([-self._sq2m * l1], axis=-1)

    def _nbar_matrix(self, u: np.ndarray) -> np.ndarray:
        n = self.n
        X = np.zeros((n + 1, n + 1))
        X[0, 2:] = u
        X[2:, 0] = u
        X[1, 2:] = -u
        X[2:, 1] = u
        return np.eye(n + 1) + X + 0.5 * (X @ X)

    def _n_matrix(self, u: np.ndarray) -> np.ndarray:
        n = self.n
        X = np.zeros((n + 1, n + 1))
        X[0, 2:] = u
        X[2:, 0] = u
        X[1, 2:] = u
        X[2:, 1] = -u
        return np.eye(n + 1) + X + 0.5 * (X @ X)

    def iwasawa(self, g) -> IwasawaFactors:
        mat = g.matrix if isinstance(g, GroupElement) else np.asarray(g, dtype=float)
        self.validate_matrix(mat)
        n = self.n
        emt = mat[0, 0] - mat[0, 1]
        t = -np.log(emt)
        u = np.exp(t) * mat[0, 2:]
        xim = np.zeros(n + 1)
        xim[0], xim[1] = 1.0, -1.0
        v1 = -np.exp(t) * (mat @ xim)[1:]
        R = np.empty((n, n))
        R[:, 0] = v1
        for j in range(2, n + 1):
            R[:, j - 1] = mat[1:, j] + emt * u[j - 2] * v1
        k = np.eye(n + 1)
        k[1:, 1:] = R
        return IwasawaFactors(k, np.array([t * self._sq2m]), self._nbar_matrix(u), self)

    def cartan_radial(self, g) -> np.ndarray:
        mat = g.matrix if isinstance(g, GroupElement) else np.asarray(g, dtype=float)
        r = np.arccosh(np.clip(mat[0, 0], 1.0, None))
        return np.array([-r * self._sq2m])

    def cartan_radial_batch(self, mats: np.ndarray) -> np.ndarray:
        mats = np.asarray(mats, dtype=float)
        r = np.arccosh(np.clip(mats[..., 0, 0], 1.0, None))
        return np.stack([-r * self._sq2m], axis=-1)

    def random_element(self, rng, scale: float = 0.5) -> GroupElement:
        a = rng.normal(size=(self.matrix_size, self.matrix_size)) * scale
        x = 0.5 * (a - self._J @ a.T @ self._J)
        return GroupElement(self, expm(x))

    def n_power_integral(self, s, spec: QuadratureSpec, subset=None, method: str = "polar") -> complex:
        u = self.u_values(s)[0]
        if np.real(u) <= 0:
            raise QuadratureError("unipotent integral diverges for this exponent")
        m = self.m
        bscale = (2.0 * np.sqrt(float(m))) ** m  # per-coordinate form norm is 2 sqrt(m)
        expo = -(m / 2.0) - u
        if method == "polar":
            # integrand (1 + r^2)^(expo) * r^(m-1) on [0, inf)
            x, w = spec.half_line(2.0 * float(np.real(u)))
            omega = 2.0 * np.pi ** (m / 2.0) / np.exp(_lgamma_real(m / 2.0))
            vals = np.exp(expo * np.log1p(x * x)) * x ** (m - 1)
            return complex(bscale * omega * np.sum(w * vals))
        if method == "grid":
            if m != 2:
                raise ParameterError("grid method implemented for the 2-dimensional slice only")
            x, w = spec.line(float(np.real(u)))  # joint tail is slower than marginal
            r2 = x[:, None] ** 2 + x[None, :] ** 2
            vals = np.exp(expo * np.log1p(r2))
            return complex(bscale * np.einsum("i,j,ij->", w, w, vals))
        raise ParameterError(f"unknown method {method!r}")

    def gaussian_iwasawa_integral(self, beta, z_n, spec):
        m = self.m
        t, wt = panel_rule(-8.0, 8.0, min(spec.panel_len, 3.0), spec.nodes_per_panel)
        # |a(t) nbar(u)|_F^2 is an even quartic A + B r^2 + C r^4 in r = |u|
        A = np.empty_like(t)
        B = np.empty_like(t)
        C = np.empty_like(t)
        e1 = np.zeros(m)
        e1[0] = 1.0
        for i, ti in enumerate(t):
            a = self.a_matrix([ti * self._sq2m])
            f0 = np.sum((a @ self._nbar_matrix(0.0 * e1)) ** 2)
            f1 = np.sum((a @ self._nbar_matrix(1.0 * e1)) ** 2)
            f2 = np.sum((a @ self._nbar_matrix(2.0 * e1)) ** 2)
            A[i] = f0
            C[i] = (f2 - 4.0 * f1 + 3.0 * f0) / 12.0
            B[i] = f1 - f0 - C[i]
        omega = 2.0 * np.pi ** (m / 2.0) / np.exp(_lgamma_real(m / 2.0))
        total = 0.0
        x0, w0 = gauss_legendre(80, 0.0, 1.0)
        for i, ti in enumerate(t):
            scale = min(1.0 / np.sqrt(beta * max(B[i], 1e-300)),
                        1.0 / (beta * max(C[i], 1e-300)) ** 0.25)
            hi = 9.0 * scale
            r = x0 * hi
            wr = w0 * hi
            inner = np.sum(wr * r ** (m - 1) * np.exp(-beta * (B[i] * r * r + C[i] * r ** 4)))
            total += wt[i] * np.exp(-beta * A[i]) * np.exp(-m * ti) * inner
        bscale = (2.0 * np.sqrt(float(m))) ** m
        return float(self._sq2m * bscale * omega * total / z_n)

    def gaussian_cartan_integral(self, beta, spec):
        h, w = panel_rule(-30.0, 0.0, min(spec.panel_len, 3.0), spec.nodes_per_panel)
        t = h / self._sq2m
        # |exp H|_F^2 = 2 cosh(2t) + (n - 1); alpha(H) = h / sqrt(2m)
        vals = np.abs(np.sinh(t)) ** self.m * np.exp(-beta * (2.0 * np.cosh(2.0 * t) + self.n - 1))
        return float(np.sum(w * vals))


# ---------------------------------------------------------------------------
# SL(3, R)


class SL3RModel(_SLModel):
    tag = "sl3r"
    matrix_size = 3
    dim_n = 3
    b_coeff = 6.0

    def __init__(self):
        super().__init__()
        self.root_datum = build_root_datum("A2")
        self._s3 = np.sqrt(3.0)

    def _diag_to_coords(self, x):
        x = np.asarray(x)
        return np.stack(
            [
                self._s3 * (x[..., 0] - x[..., 1]),
                x[..., 0] + x[..., 1] - 2.0 * x[..., 2],
            ],
            axis=-1,
        )

    def _coords_to_diag(self, coords):
        h1, h2 = np.asarray(coords, dtype=float)
        x1 = h1 / (2.0 * self._s3) + h2 / 6.0
        x2 = -h1 / (2.0 * self._s3) + h2 / 6.0
        x3 = -h2 / 3.0
        return np.array([x1, x2, x3])

    def a_log_channels(self, m):
        m = np.asarray(m, dtype=float)
        c2, c3 = m[..., :, 1], m[..., :, 2]
        g1 = np.sum(c3 * c3, axis=-1)
        g22 = np.sum(c2 * c2, axis=-1)
        g23 = np.sum(c2 * c3, axis=-1)
        g2 = g22 * g1 - g23 * g23  # Gram determinant of the last two columns
        return (np.log(g1), np.log(g2))

    def channel_exponents(self, s):
        s = np.asarray(s)
        return ((self._s3 * s[0] - 3.0 * s[1]) / 2.0, -self._s3 * s[0])

    def a_coords(self, m):
        l1, l2 = self.a_log_channels(m)
        return np.stack([self._s3 * (0.5 * l1 - l2), -1.5 * l1], axis=-1)

    # unipotent coordinates: n = [[1, x, z], [0, 1, y], [0, 0, 1]]
    # (x, y, z) are matrix entries; the form-orthonormal scale is sqrt(6) each.

    def _n_entry_integrand_exponents(self, s):
        e1, e2 = self.channel_exponents(s)
        return complex(e1), complex(e2)

    def n_power_integral(self, s, spec: QuadratureSpec, subset=None, **kw) -> complex:
        rd = self.root_datum
        if subset is None:
            subset = (0, 1, 2)
        subset = tuple(sorted(subset))
        u1, u2, u12 = (complex(u) for u in self.u_values(s))
        for i in subset:
            if np.real((u1, u2, u12)[i]) <= 0:
                raise QuadratureError("unipotent integral diverges for this exponent")
        e1, e2 = self._n_entry_integrand_exponents(s)
        bscale = 6.0 ** (len(subset) / 2.0)
        if subset == (0,):  # alpha1 direction: integrand (1+x^2)^e2
            x, w = spec.line(2.0 * u1.real)
            return bscale * complex(np.sum(w * np.exp(e2 * np.log1p(x * x))))
        if subset == (1,):  # alpha2 direction: integrand (1+y^2)^e1
            y, w = spec.line(2.0 * u2.real)
            return bscale * complex(np.sum(w * np.exp(e1 * np.log1p(y * y))))
        if subset == (1, 2):  # G1 = 1+y^2+z^2, G2 = 1+z^2
            y, wy = spec.line(2.0 * u2.real)
            z, wz = spec.line(2.0 * u12.real)
            Y, Z = y[:, None], z[None, :]
            vals = np.exp(e1 * np.log1p(Y * Y + Z * Z) + e2 * np.log1p(Z * Z))
            return bscale * complex(np.einsum("i,j,ij->", wy, wz, vals))
        if subset == (0, 2):  # G1 = 1+z^2, G2 = 1+x^2+z^2
            x, wx = spec.line(2.0 * u1.real)
            z, wz = spec.line(2.0 * u12.real)
            X, Z = x[:, None], z[None, :]
            vals = np.exp(e1 * np.log1p(Z * Z) + e2 * np.log1p(X * X + Z * Z))
            return bscale * complex(np.einsum("i,j,ij->", wx, wz, vals))
        if subset == (0, 1, 2):
            return bscale * self._full_n_integral(e1, e2, u1, u2, u12, spec)
        raise ParameterError(f"coordinate subset {subset} is not an inversion set")

    def _full_n_integral(self, e1, e2, u1, u2, u12, spec: QuadratureSpec) -> complex:
        """3-D integral of G1^e1 G2^e2 with G1 = 1+y^2+z^2,
        G2 = (1+y^2)(x - x0)^2 + G1/(1+y^2), x0 = y z/(1+y^2).

        The x-profile at fixed (y, z) is a power of a shifted quadratic whose
        width can be arbitrarily small, so the inner rule follows the ridge:
        x = x0 + width * sinh(v) turns G2 into (G1/(1+y^2)) cosh^2 v exactly.
        """
        y, wy = spec.line(2.0 * u2.real)
        z, wz = spec.line(2.0 * u12.real)
        t, wt = spec.line_t(2.0 * u1.real)
        chv = np.cosh(t)
        inner_w = wt * chv  # dx along the ridge per unit width
        total = 0.0 + 0.0j
        logch = np.log(chv)
        for i0 in range(0, y.size, 64):
            Y = y[i0 : i0 + 64, None]
            Z = z[None, :]
            G1 = 1.0 + Y * Y + Z * Z
            width = np.sqrt(G1) / (1.0 + Y * Y)
            base = np.log(G1) - np.log1p(Y * Y)  # log(G2) on the ridge floor
            inner = np.exp(e2 * (base[..., None] + 2.0 * logch[None, None, :])) @ inner_w
            total += np.sum(
                np.outer(wy[i0 : i0 + 64], wz) * np.exp(e1 * np.log(G1)) * inner * width
            )
        return complex(total)

    def gaussian_iwasawa_integral(self, beta, z_n, spec):
        # unipotent entries integrate to exact Gaussians:
        # |a nbar|_F^2 = sum d_i^2 + d2^2 x^2 + d3^2 (y^2 + z^2)
        h1, w1 = panel_rule(-10.0, 10.0, spec.panel_len, spec.nodes_per_panel)
        h2, w2 = panel_rule(-10.0, 10.0, spec.panel_len, spec.nodes_per_panel)
        H1, H2 = np.meshgrid(h1, h2, indexing="ij")
        x1 = H1 / (2.0 * self._s3) + H2 / 6.0
        x2 = -H1 / (2.0 * self._s3) + H2 / 6.0
        x3 = -H2 / 3.0
        d1, d2, d3 = np.exp(x1), np.exp(x2), np.exp(x3)
        rho = self.root_datum.rho
        dens = np.exp(-2.0 * (rho[0] * H1 + rho[1] * H2))
        gauss = (np.pi / beta) ** 1.5 / (d2 * d3 * d3)
        vals = np.exp(-beta * (d1 ** 2 + d2 ** 2 + d3 ** 2)) * gauss * dens
        total = np.einsum("i,j,ij->", w1, w2, vals)
        return float(6.0 ** 1.5 * total / z_n)

    def gaussian_cartan_integral(self, beta, spec):
        # negative chamber parametrized by h1 < 0, h2 = h1/sqrt(3) - s, s > 0
        h1, w1 = panel_rule(-30.0, 0.0, spec.panel_len, spec.nodes_per_panel)
        s, w2 = panel_rule(0.0, 30.0, spec.panel_len, spec.nodes_per_panel)
        H1 = h1[:, None]
        H2 = H1 / self._s3 - s[None, :]
        x1 = H1 / (2.0 * self._s3) + H2 / 6.0
        x2 = -H1 / (2.0 * self._s3) + H2 / 6.0
        x3 = -H2 / 3.0
        norm2 = np.exp(2 * x1) + np.exp(2 * x2) + np.exp(2 * x3)
        jac = np.ones_like(H2)
        for gamma in self.root_datum.positive_roots:
            jac = jac * np.abs(np.sinh(gamma[0] * H1 + gamma[1] * H2))
        vals = jac * np.exp(-beta * norm2)
        return float(np.einsum("i,j,ij->", w1, w2, vals))


def _lgamma_real(x: float) -> float:
    from scipy.special import gammaln

    return float(gammaln(x))


# ---------------------------------------------------------------------------
# public constructors and operations


_MODEL_CACHE: dict = {}


def build_model(tag: str) -> GroupModel:
    """Model factory; accepts "sl2r", "sl3r", or "so1<n>" (e.g. "so13")."""
    key = tag.lower()
    if key in _MODEL_CACHE:
        return _MODEL_CACHE[key]
    if key == "sl2r":
        model = SL2RModel()
    elif key == "sl3r":
        model = SL3RModel()
    elif key.startswith("so1") and key[3:].isdigit():
        model = SO1nModel(int(key[3:]))
    else:
        raise ParameterError(f"unknown model tag {tag!r}")
    _MODEL_CACHE[key] = model
    return model


def element_to_json(g: GroupElement) -> dict:
    return {"model": g.model.tag, "matrix": g.matrix.tolist()}


def element_from_json(data: dict) -> GroupElement:
    return build_model(data["model"]).element(np.array(data["matrix"], dtype=float))


def iwasawa(g: GroupElement) -> IwasawaFactors:
    return g.model.iwasawa(g)


def cartan_radial(g: GroupElement) -> np.ndarray:
    return g.model.cartan_radial(g)


def volume_weights(model: GroupModel, coords):
    """Proxy volume weight exp(-2 rho(H)) and radial weight 1 + |H| for a
    polar point with H in the closed negative chamber."""
    coords = np.asarray(coords, dtype=float)
    if not model.chamber_check(coords):
        raise ParameterError("H must lie in the closed negative chamber")
    v = float(np.exp(-2.0 * (model.rho @ coords)))
    w = 1.0 + float(np.linalg.norm(coords))
    return v, w


def compute_haar_normalization(model: GroupModel, spec: QuadratureSpec = QuadratureSpec()) -> HaarNormalization:
    """Compute z_n (two resolutions, checked) and the polar calibration constant."""
    s = 2.0 * model.root_datum.rho
    z1 = model.n_power_integral(s, spec).real
    z2 = model.n_power_integral(s, spec.refine()).real
    if abs(z1 - z2) > 1e-8 * abs(z2):
        raise QuadratureError(
            f"z_n fails the two-resolution check: {z1!r} vs {z2!r}"
        )
    c = calibrate_cartan_density(model, z_n=z2, spec=spec)
    haar = HaarNormalization(z_n=z2, cartan_const=c, quadrature_spec=spec)
    model._haar = haar
    return haar


def calibrate_cartan_density(model: GroupModel, z_n: Optional[float] = None,
                             spec: QuadratureSpec = QuadratureSpec(),
                             betas=(0.5, 1.0, 2.0)) -> float:
    """Constant c_G making the polar-coordinates integral match the
    k-a-nbar-coordinates integral for Gaussian test functions."""
    if z_n is None:
        z_n = model.haar.z_n
    ratios = []
    for beta in betas:
        iw = model.gaussian_iwasawa_integral(beta, z_n, spec)
        ca = model.gaussian_cartan_integral(beta, spec)
        ratios.append(iw / ca)
    ratios = np.array(ratios)
    mean = float(ratios.mean())
    spread = float((ratios.max() - ratios.min()) / abs(mean))
    if spread > 1e-5:
        raise CalibrationError(
            f"calibration constants disagree across test functions: {ratios!r}"
        )
    return mean
