"""Restricted root systems with multiplicities, Weyl groups, spectral parameters.

Coordinates everywhere are taken in a fixed orthonormal basis of the dual of
the flat subspace (orthonormal with respect to the inner product induced by
the invariant form), so the Gram matrix of the inner product is the identity
and Lebesgue measure in these coordinates is the reference normalization used
by the measure machinery.

Two families are supported: rank-one systems {±α} with an arbitrary positive
multiplicity, and the rank-two system A2 (three positive roots, all
multiplicity one).  That is exactly what the concrete matrix models need.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

_MATCH_TOL = 1e-10


def _as_vec(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ParameterError(f"expected a coordinate vector, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class RootDatum:
    """A restricted root system in orthonormal coordinates.

    roots: (n_roots, rank) array; multiplicities aligned with rows of roots;
    positive: boolean mask selecting the positive subsystem; rho is half the
    multiplicity-weighted sum of positive roots.
    """

    rank: int
    roots: np.ndarray
    multiplicities: np.ndarray
    positive: np.ndarray
    rho: np.ndarray
    family: str
    params: dict = field(default_factory=dict)

    @property
    def inner_product(self) -> np.ndarray:
        # orthonormal coordinates by construction
        return np.eye(self.rank)

    @property
    def positive_roots(self) -> np.ndarray:
        return self.roots[self.positive]

    @property
    def positive_multiplicities(self) -> np.ndarray:
        return self.multiplicities[self.positive]

    def find_root(self, vec) -> int:
        """Index of the root equal to vec (within matching tolerance), or -1."""
        vec = _as_vec(vec)
        d = np.linalg.norm(self.roots - vec[None, :], axis=1)
        i = int(np.argmin(d))
        return i if d[i] < _MATCH_TOL else -1

    def multiplicity_of(self, vec) -> int:
        i = self.find_root(vec)
        if i < 0:
            raise ParameterError(f"{vec!r} is not a root of this system")
        return int(self.multiplicities[i])

    def simple_roots(self) -> np.ndarray:
        """Positive roots that are not sums of two positive roots."""
        pos = self.positive_roots
        simple = []
        for i, a in enumerate(pos):
            decomposable = False
            for b in pos:
                c = a - b
                if np.linalg.norm(c) < _MATCH_TOL:
                    continue
                # a = b + c with b, c positive?
                d = np.linalg.norm(pos - c[None, :], axis=1)
                if d.min() < _MATCH_TOL:
                    decomposable = True
                    break
            if not decomposable:
                simple.append(a)
        return np.array(simple)

    def validate(self) -> None:
        """Check the structural invariants; raises ParameterError on failure."""
        pos = self.positive_roots
        neg = -pos
        allr = np.vstack([pos, neg])
        if allr.shape != self.roots.shape:
            raise ParameterError("positive/negative split does not cover the roots disjointly")
        for r in allr:
            if self.find_root(r) < 0:
                raise ParameterError("roots are not closed under negation")
        rho = 0.5 * (self.positive_multiplicities[:, None] * pos).sum(axis=0)
        if np.linalg.norm(rho - self.rho) > 1e-12:
            raise ParameterError("rho is not the multiplicity-weighted half sum")
        for a in self.roots:
            for b, m in zip(self.roots, self.multiplicities):
                sb = reflect(b, a)
                j = self.find_root(sb)
                if j < 0 or int(self.multiplicities[j]) != int(m):
                    raise ParameterError("a reflection fails to permute roots with multiplicities")

    # -- serialization ---------------------------------------------------

    def to_json(self) -> str:
        return json.dumps({"family": self.family, "params": self.params})

    @staticmethod
    def from_json(text: str) -> "RootDatum":
        obj = json.loads(text)
        return build_root_datum(obj["family"], **obj.get("params", {}))


def reflect(vec, alpha) -> np.ndarray:
    """Orthogonal reflection of vec in the hyperplane normal to alpha."""
    vec = np.asarray(vec, dtype=float)
    alpha = _as_vec(alpha)
    return vec - (2.0 * (vec @ alpha) / (alpha @ alpha)) * alpha


def build_root_datum(family: str, multiplicity: int = 1, **_ignored) -> RootDatum:
    """Construct a supported root system.

    family: "rank_one" (alias "A1_m") with a multiplicity parameter, or "A2".
    """
    fam = family.lower()
    if fam in {"rank_one", "a1_m", "a1"}:
        m = int(multiplicity)
        if m < 1:
            raise ParameterError(f"multiplicity must be a positive integer, got {multiplicity}")
        # alpha is a unit-length covector scaled so the concrete models match;
        # only ratios <lambda,alpha>/<alpha,alpha> matter abstractly, so unit
        # length is the clean normal form.  Concrete models carry their own
        # alpha coordinates.
        alpha = np.array([1.0 / np.sqrt(2.0 * m)])
        roots = np.array([alpha, -alpha])
        mults = np.array([m, m])
        positive = np.array([True, False])
        rho = (m / 2.0) * alpha
        return RootDatum(1, roots, mults, positive, rho, "rank_one", {"multiplicity": m})
    if fam == "a2":
        s3 = np.sqrt(3.0)
        a1 = np.array([1.0 / s3, 0.0])
        a2 = np.array([-1.0 / (2.0 * s3), 0.5])
        pos = np.array([a1, a2, a1 + a2])
        roots = np.vstack([pos, -pos])
        mults = np.ones(6, dtype=int)
        positive = np.array([True, True, True, False, False, False])
        rho = a1 + a2
        return RootDatum(2, roots, mults, positive, rho, "A2", {})
    raise ParameterError(f"unknown root-system family: {family!r}")


@dataclass(frozen=True)
class WeylGroup:
    """Finite reflection group as orthogonal matrices acting on covectors."""

    elements: np.ndarray          # (n, rank, rank)
    generators: np.ndarray        # simple reflections, (n_simple, rank, rank)
    longest_element: int          # index into elements
    datum: RootDatum

    def __len__(self) -> int:
        return self.elements.shape[0]

    def act(self, w: int, vec) -> np.ndarray:
        return self.elements[w] @ np.asarray(vec)

    @property
    def identity_index(self) -> int:
        eye = np.eye(self.datum.rank)
        for i, m in enumerate(self.elements):
            if np.allclose(m, eye, atol=1e-12):
                return i
        raise RuntimeError("identity missing from Weyl group closure")

    def index_of(self, matrix) -> int:
        d = np.abs(self.elements - np.asarray(matrix)[None]).max(axis=(1, 2))
        i = int(np.argmin(d))
        if d[i] > 1e-9:
            raise ParameterError("matrix is not a Weyl group element")
        return i

    def compose(self, w2: int, w1: int) -> int:
        """Index of the product (apply w1 first, then w2)."""
        return self.index_of(self.elements[w2] @ self.elements[w1])

    def inversion_set(self, w: int) -> np.ndarray:
        """Positive roots sent negative by w (as an array of covectors)."""
        out = []
        for gamma in self.datum.positive_roots:
            wg = self.elements[w] @ gamma
            # negative iff its pairing with rho is negative (rho strictly dominant)
            if wg @ self.datum.rho < -_MATCH_TOL:
                out.append(gamma)
        return np.array(out).reshape(len(out), self.datum.rank)


def _reflection_matrix(alpha: np.ndarray) -> np.ndarray:
    alpha = _as_vec(alpha)
    n = alpha.shape[0]
    return np.eye(n) - 2.0 * np.outer(alpha, alpha) / (alpha @ alpha)


def weyl_group(rd: RootDatum, element_cap: int = 1024) -> WeylGroup:
    """Generate the full group from simple reflections by closure."""
    gens = np.array([_reflection_matrix(a) for a in rd.simple_roots()])
    elements = [np.eye(rd.rank)]

    def seen(m):
        return any(np.allclose(m, e, atol=1e-10) for e in elements)

    frontier = [np.eye(rd.rank)]
    while frontier:
        nxt = []
        for e in frontier:
            for g in gens:
                m = g @ e
                if not seen(m):
                    elements.append(m)
                    nxt.append(m)
                    if len(elements) > element_cap:
                        raise ParameterError(
                            f"Weyl closure exceeded cap {element_cap}; malformed root data?"
                        )
        frontier = nxt
    elements = np.array(elements)

    longest = -1
    for i, m in enumerate(elements):
        if np.linalg.norm(m @ rd.rho + rd.rho) < 1e-10:
            longest = i
            break
    if longest < 0:
        raise ParameterError("no longest element found (closure incomplete?)")
    return WeylGroup(elements, gens, longest, rd)


@dataclass(frozen=True)
class SpectralParam:
    """A point of the complexified dual: lambda = re + i*im in coordinates."""

    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "re", _as_vec(self.re))
        object.__setattr__(self, "im", _as_vec(self.im))
        if self.re.shape != self.im.shape:
            raise ParameterError("re and im must have the same length")
        if not (np.all(np.isfinite(self.re)) and np.all(np.isfinite(self.im))):
            raise ParameterError("spectral parameter entries must be finite")

    @staticmethod
    def imaginary(im) -> "SpectralParam":
        im = _as_vec(im)
        return SpectralParam(np.zeros_like(im), im)

    @staticmethod
    def real(re) -> "SpectralParam":
        re = _as_vec(re)
        return SpectralParam(re, np.zeros_like(re))

    @staticmethod
    def from_complex(z) -> "SpectralParam":
        z = np.asarray(z, dtype=complex)
        return SpectralParam(z.real.copy(), z.imag.copy())

    @property
    def z(self) -> np.ndarray:
        return self.re + 1j * self.im

    @property
    def is_imaginary(self) -> bool:
        return bool(np.all(self.re == 0.0))

    def pair(self, covector) -> complex:
        """Bilinear pairing <lambda, covector> in the orthonormal coordinates."""
        return complex(self.z @ np.asarray(covector, dtype=float))

    def is_regular(self, rd: RootDatum, tol: float = 1e-10) -> bool:
        nl = np.linalg.norm(self.z)
        if nl == 0.0:
            return False
        for a in rd.positive_roots:
            if abs(self.z @ a) < tol * nl * np.linalg.norm(a):
                return False
        return True


def dominant_representative(lam: SpectralParam, W: WeylGroup):
    """The unique orbit point in the closed dominant chamber, and the w used.

    Requires purely imaginary input.  On chamber walls several group elements
    give the same dominant point; the lexicographically smallest coordinate
    vector (then the smallest element index) is chosen, which makes the map
    deterministic and constant on orbits.
    """
    if not lam.is_imaginary:
        raise ParameterError("dominant_representative expects a purely imaginary parameter")
    rd = W.datum
    pos = rd.positive_roots
    best = None
    for i, m in enumerate(W.elements):
        v = m @ lam.im
        if np.all(pos @ v >= -_MATCH_TOL):
            key = tuple(np.round(v, 12))
            if best is None or key < best[0]:
                best = (key, i, v)
    if best is None:  # cannot happen for a genuine reflection group
        raise ParameterError("no dominant representative found")
    _, i, v = best
    return SpectralParam.imaginary(v), i
