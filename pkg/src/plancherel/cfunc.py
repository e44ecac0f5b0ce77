"""Intertwining coefficients and the spectral density.

The central object is a product over roots: to each positive root gamma with
multiplicity m attach the meromorphic factor

    T(u) = 2^(-u) Gamma(u) / (Gamma(u/2 + m/4 + 1/2) * Gamma(u/2 + m/4 + m2/2)),

evaluated at u = -<lambda, gamma>/<gamma, gamma>, times a constant kappa that
depends only on the model's measure normalizations.  kappa is not hard-coded:
the engine fits it once, by evaluating the defining unipotent integral deep in
its convergence cone and dividing out the Gamma factors, then checks that the
fit is parameter-independent.  Every downstream identity (equal moduli across
the Weyl orbit, agreement of partial products with partial integrals) is then
a genuine consistency statement rather than a tautology.

Conventions: the integral form is normalized per inversion set,
dividing the raw slice integral by z_n^(length/#positive-roots), which makes
the product form multiplicative across slices with a single per-root constant.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import loggamma

from .errors import (
    ConvergenceDomainError,
    ParameterError,
    PoleError,
    QuadratureError,
    SingularParameterError,
)
from .groups import GroupModel, HaarNormalization, compute_haar_normalization
from .quadrature import QuadratureSpec
from .rootdata import SpectralParam, WeylGroup, weyl_group

_POLE_TOL = 1e-8
_DOMAIN_MARGIN = 0.05


def gamma_ln(z, pole_tol: float = _POLE_TOL):
    """log Gamma on the complex plane, raising PoleError near poles.

    Accepts scalars or arrays; the pole check is applied elementwise.
    """
    z = np.asarray(z, dtype=complex)
    near_int = np.abs(z - np.round(z.real)) < pole_tol
    if np.any(near_int & (np.round(z.real) <= 0)):
        bad = z[near_int & (np.round(z.real) <= 0)]
        raise PoleError(f"log-gamma pole at {bad.ravel()[0]}")
    out = loggamma(z)
    return out if out.shape else complex(out)


def _as_param(lam) -> SpectralParam:
    if isinstance(lam, SpectralParam):
        return lam
    return SpectralParam.from_complex(np.asarray(lam, dtype=complex))


@dataclass(frozen=True)
class SpectralDensityTable:
    model: str
    grid: np.ndarray  # (n, rank) imaginary-part coordinates
    density: np.ndarray  # (n,)
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        rank = self.grid.shape[1]
        writer.writerow([f"xi_{i + 1}" for i in range(rank)] + ["density"])
        for row, d in zip(self.grid, self.density):
            writer.writerow([f"{v:.17g}" for v in row] + [f"{d:.17g}"])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "model": self.model,
                "grid": [[float(v) for v in row] for row in self.grid],
                "density": [float(d) for d in self.density],
                "meta": self.meta,
            },
            sort_keys=True,
        )


class CFunctionEngine:
    """Evaluates the intertwining coefficient in both its forms.

    * ``c_integral(lam, w)`` — the convergent unipotent integral over the
      slice attached to w, available when Re<lam, gamma> < 0 strictly for the
      roots inverted by w;
    * ``c_product(lam, w)`` — the meromorphic Gamma-factor product, available
      everywhere off the pole set, and validated against the integral on the
      overlap.
    """

    def __init__(self, model: GroupModel, haar: Optional[HaarNormalization] = None,
                 spec: QuadratureSpec = QuadratureSpec()):
        self.model = model
        self.spec = spec
        self.haar = haar if haar is not None else compute_haar_normalization(model, spec)
        self.weyl: WeylGroup = weyl_group(model.root_datum)
        rd = model.root_datum
        self._n_pos = len(rd.positive_roots)
        self._subset_cache = {}
        self.kappa_root = self._fit_constant()

    # -- structure helpers ---------------------------------------------------

    def _w_index(self, w) -> int:
        if w is None:
            return self.weyl.longest_element
        return int(w)

    def _inversion_indices(self, w: int) -> tuple:
        if w in self._subset_cache:
            return self._subset_cache[w]
        rd = self.model.root_datum
        pos = rd.positive_roots
        idx = []
        for gamma in self.weyl.inversion_set(w):
            d = np.linalg.norm(pos - gamma[None, :], axis=1)
            idx.append(int(np.argmin(d)))
            if d[idx[-1]] > 1e-10:
                raise ParameterError("inversion set contains a non-positive root")
        out = tuple(sorted(idx))
        self._subset_cache[w] = out
        return out

    def u_value(self, lam: SpectralParam, gamma: np.ndarray) -> complex:
        return -lam.pair(gamma) / float(gamma @ gamma)

    def template_factor(self, u, m: int, m2: int = 0) -> complex:
        log = (
            -u * np.log(2.0)
            + gamma_ln(u)
            - gamma_ln(u / 2.0 + m / 4.0 + 0.5)
            - gamma_ln(u / 2.0 + m / 4.0 + m2 / 2.0)
        )
        return complex(np.exp(log))

    # -- the two evaluation paths ---------------------------------------------

    def c_integral(self, lam, w=None, check: bool = True) -> complex:
        lam = _as_param(lam)
        w = self._w_index(w)
        subset = self._inversion_indices(w)
        if not subset:
            return 1.0 + 0.0j
        rd = self.model.root_datum
        for i in subset:
            gamma = rd.positive_roots[i]
            if np.real(self.u_value(lam, gamma)) < _DOMAIN_MARGIN:
                raise ConvergenceDomainError(
                    "the defining integral converges only for spectral parameters "
                    f"with Re<lam, gamma> <= -{_DOMAIN_MARGIN}*<gamma, gamma> on the "
                    "inverted roots; use c_product for the continued value"
                )
        s = rd.rho - lam.z  # covector exponent of the integrand
        zeta = self.haar.z_n ** (len(subset) / self._n_pos)
        val = self.model.n_power_integral(s, self.spec, subset=subset) / zeta
        if check:
            fine = self.model.n_power_integral(s, self.spec.refine(), subset=subset) / zeta
            if abs(val - fine) > 1e-6 * max(abs(fine), 1e-300):
                raise QuadratureError(
                    f"unipotent integral failed the two-resolution check: {val} vs {fine}"
                )
            val = fine
        return complex(val)

    def c_product(self, lam, w=None) -> complex:
        lam = _as_param(lam)
        w = self._w_index(w)
        rd = self.model.root_datum
        out = 1.0 + 0.0j
        for i in self._inversion_indices(w):
            gamma = rd.positive_roots[i]
            u = self.u_value(lam, gamma)
            if abs(u - np.round(u.real)) < _POLE_TOL and np.round(u.real) <= 0:
                raise PoleError(
                    f"coefficient has a pole at u={u} on root index {i}", root=i
                )
            m = int(rd.positive_multiplicities[i])
            out *= self.kappa_root * self.template_factor(u, m)
        return out

    def c_function(self, lam) -> complex:
        """The coefficient attached to the longest element (the classical one)."""
        return self.c_product(lam, self.weyl.longest_element)

    # -- fitted normalization --------------------------------------------------

    def _fit_constant(self) -> float:
        rd = self.model.root_datum
        w0 = self.weyl.longest_element
        subset = self._inversion_indices(w0)
        kappas = []
        for depth in (2.5, 3.25):
            lam = SpectralParam.real(-depth * rd.rho)
            s = rd.rho - lam.z
            zeta = self.haar.z_n ** (len(subset) / self._n_pos)
            integral = self.model.n_power_integral(s, self.spec, subset=subset) / zeta
            prod = 1.0 + 0.0j
            for i in subset:
                gamma = rd.positive_roots[i]
                prod *= self.template_factor(
                    self.u_value(lam, gamma), int(rd.positive_multiplicities[i])
                )
            kappas.append((integral / prod) ** (1.0 / len(subset)))
        k0, k1 = kappas
        if abs(k0 - k1) > 1e-7 * abs(k1) or abs(np.imag(k1)) > 1e-10 * abs(k1):
            raise QuadratureError(
                f"normalization constant fit is inconsistent: {k0} vs {k1}"
            )
        return float(np.real(k1))

    # -- spectral-side quantities ----------------------------------------------

    def weyl_translate(self, lam, w: int) -> SpectralParam:
        lam = _as_param(lam)
        return SpectralParam(
            re=self.weyl.act(w, lam.re), im=self.weyl.act(w, lam.im)
        )

    def maass_selberg_spread(self, lam) -> float:
        """Relative spread of |c| over the Weyl orbit of an imaginary regular
        parameter (zero in exact arithmetic)."""
        lam = _as_param(lam)
        if not lam.is_imaginary:
            raise ParameterError("the equal-modulus identity applies on the imaginary axis")
        if not lam.is_regular(self.model.root_datum):
            raise SingularParameterError("parameter lies on a chamber wall")
        mods = [
            abs(self.c_function(self.weyl_translate(lam, w)))
            for w in range(len(self.weyl))
        ]
        mods = np.array(mods)
        return float((mods.max() - mods.min()) / mods.mean())

    def plancherel_density(self, lam) -> float:
        """|c(lam)|^(-2) for imaginary regular lam (density against the
        flat spectral measure d(xi)/(2 pi)^rank on the positive chamber)."""
        lam = _as_param(lam)
        if not lam.is_imaginary:
            raise ParameterError("the spectral density is defined on the imaginary axis")
        if not lam.is_regular(self.model.root_datum):
            raise SingularParameterError("parameter lies on a chamber wall")
        return 1.0 / abs(self.c_function(lam)) ** 2

    def tabulate_density(self, grid) -> SpectralDensityTable:
        grid = np.atleast_2d(np.asarray(grid, dtype=float))
        if grid.shape[1] != self.model.rank:
            raise ParameterError(
                f"grid must have {self.model.rank} coordinates per row"
            )
        dens = np.empty(grid.shape[0])
        for i, xi in enumerate(grid):
            dens[i] = self.plancherel_density(SpectralParam.imaginary(xi))
        meta = {
            "z_n": self.haar.z_n,
            "cartan_const": self.haar.cartan_const,
            "kappa_root": self.kappa_root,
        }
        return SpectralDensityTable(self.model.tag, grid, dens, meta)
