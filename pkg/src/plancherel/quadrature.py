"""Quadrature building blocks shared by the numeric modules.

Two constructions cover nearly everything here:

* composite Gauss-Legendre "panels" — a single global rule on a long interval
  converges like exp(-c * nodes / length) when the integrand has O(1)-scale
  analytic structure, so its accuracy collapses as the interval grows; fixed
  length panels keep the nodes-per-length ratio, and hence the rate, constant;

* the sinh substitution x = sinh(t) for integrands with power-law tails
  |f| ~ |x|^(-rate) — in the t variable the tail decays like exp(-rate * |t|),
  so a truncated panel rule applies, with the truncation radius chosen from
  the rate and a target tail exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "gauss_legendre",
    "panel_rule",
    "sinh_radius",
    "sinh_rule",
    "trapezoid_circle",
    "QuadratureSpec",
]


def gauss_legendre(n: int, lo: float, hi: float):
    """Gauss-Legendre nodes and weights mapped to [lo, hi]."""
    x, w = np.polynomial.legendre.leggauss(int(n))
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), w * half


def panel_rule(lo: float, hi: float, panel_len: float = 6.0, nodes_per_panel: int = 28):
    """Composite Gauss-Legendre rule with panels of at most ``panel_len``."""
    if hi <= lo:
        raise ValueError("panel_rule requires hi > lo")
    n_panels = max(1, math.ceil((hi - lo) / panel_len))
    edges = np.linspace(lo, hi, n_panels + 1)
    xs = np.empty(n_panels * nodes_per_panel)
    ws = np.empty_like(xs)
    for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        x, w = gauss_legendre(nodes_per_panel, a, b)
        xs[i * nodes_per_panel : (i + 1) * nodes_per_panel] = x
        ws[i * nodes_per_panel : (i + 1) * nodes_per_panel] = w
    return xs, ws


def sinh_radius(decay_rate: float, target_log_tail: float = 40.0,
                radius_cap: float = 240.0) -> float:
    """Truncation radius in the t variable for a tail ~ exp(-rate * |t|).

    The rate is floored so that slowly-decaying integrands get the capped
    radius rather than an unbounded one.
    """
    return min(target_log_tail / max(float(decay_rate), 0.2), radius_cap)


def sinh_rule(decay_rate: float, *, target_log_tail: float = 40.0,
              radius_cap: float = 240.0, panel_len: float = 6.0,
              nodes_per_panel: int = 28):
    """Nodes/weights for integrals over the whole line with power-law tails.

    Returns (x, w) with x = sinh(t) on a truncated panel rule in t and the
    cosh Jacobian folded into w.
    """
    r = sinh_radius(decay_rate, target_log_tail, radius_cap)
    t, w = panel_rule(-r, r, panel_len, nodes_per_panel)
    return np.sinh(t), w * np.cosh(t)


def trapezoid_circle(n: int):
    """Equispaced angles and normalized weights for periodic integrands
    (spectrally accurate in this setting)."""
    theta = 2.0 * np.pi * np.arange(n) / n
    return theta, np.full(n, 1.0 / n)


@dataclass(frozen=True)
class QuadratureSpec:
    """Resolution/truncation bundle passed through the numeric layers.

    ``refine`` produces a strictly finer spec (more nodes, larger truncation)
    used for two-resolution self-consistency checks.
    """

    nodes_per_panel: int = 28
    panel_len: float = 6.0
    target_log_tail: float = 40.0
    radius_cap: float = 240.0

    def refine(self, factor: float = 1.5) -> "QuadratureSpec":
        return replace(
            self,
            nodes_per_panel=math.ceil(self.nodes_per_panel * factor),
            target_log_tail=self.target_log_tail + 4.0,
        )

    def line(self, decay_rate: float):
        """Whole-line sinh-substituted rule for a tail rate (see sinh_rule)."""
        return sinh_rule(
            decay_rate,
            target_log_tail=self.target_log_tail,
            radius_cap=self.radius_cap,
            panel_len=self.panel_len,
            nodes_per_panel=self.nodes_per_panel,
        )

    def line_t(self, decay_rate: float):
        """The same rule before substitution: raw panels in the t variable."""
        r = sinh_radius(decay_rate, self.target_log_tail, self.radius_cap)
        return panel_rule(-r, r, self.panel_len, self.nodes_per_panel)

    def half_line(self, decay_rate: float):
        """Sinh-substituted rule on [0, inf); the origin is a panel edge, so
        integrands with a corner at 0 (odd powers of r) stay accurate."""
        r = sinh_radius(decay_rate, self.target_log_tail, self.radius_cap)
        t, w = panel_rule(0.0, r, self.panel_len, self.nodes_per_panel)
        return np.sinh(t), w * np.cosh(t)

    def segment(self, lo: float, hi: float):
        return panel_rule(lo, hi, self.panel_len, self.nodes_per_panel)
