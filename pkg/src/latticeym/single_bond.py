"""Single-bond partition functions and the constants sandwiching them.

After gauge fixing, the partition function of the free-boundary model in
d = 2 (and its solvable approximation in general d) factorizes into powers of
a one-matrix integral.  Two such integrals matter here:

* z_upper: Haar average of the Wilson weight exp(-2 beta sum_j (1 - cos lam_j)),
  an upper-bound factor for the full model;
* z_lower: Haar average of the quadratic weight
  exp(-2 C^2 (d-1) beta sum_j lam_j^2) with C^2 = 4n, a lower-bound factor.

Both scale as beta^(-n^2/2) for small lattice spacing; the extracted products
beta^(n^2/2) z stay between exp(c_lower) and exp(c_upper), with the constants
assembled in `bound_constants`.  A source-deformed variant of z_upper feeds
the generating-function bounds.
"""

from dataclasses import dataclass

import numpy as np

from .groups import GroupSpec
from .quadrature import (QuadratureSpec, ensemble_constants, flat_vandermonde,
                         i_beta, vandermonde_density, weyl_integrate)

# Truncation radii in concentrated coordinates y = sqrt(beta) lam.  The
# Wilson action obeys action >= (4/pi^2) y^2 wherever truncation is active,
# so beyond |y| = 10 the weight is below exp(-40); the quadratic action is
# exactly y^2 there, giving exp(-64) beyond |y| = 8.  Both tails sit far
# under every tolerance used in this package.
_WILSON_CUTOFF = 10.0
_QUADRATIC_CUTOFF = 8.0


@dataclass(frozen=True)
class CouplingSpec:
    """Dimension, lattice spacing and coupling of one lattice model.

    beta = a**(d-4) / g2 is the single scalar the integrals depend on; for
    d = 4 it is exactly independent of the spacing.
    """

    d: int
    a: float
    g2: float
    g0_sq: float | None = None

    def __post_init__(self):
        if self.d not in (2, 3, 4):
            raise ValueError(f"d must be 2, 3 or 4, got {self.d}")
        if not 0.0 < self.a <= 1.0:
            raise ValueError(f"lattice spacing must lie in (0, 1], got {self.a}")
        if self.g2 <= 0.0:
            raise ValueError(f"coupling g2 must be positive, got {self.g2}")
        if self.g0_sq is None:
            object.__setattr__(self, "g0_sq", self.g2)
        if self.g2 > self.g0_sq:
            raise ValueError(f"g2 = {self.g2} exceeds its ceiling g0_sq = {self.g0_sq}")

    @property
    def beta(self) -> float:
        return self.a ** (self.d - 4) / self.g2


def wilson_weight(beta: float):
    """exp(-2 beta sum_j (1 - cos lam_j)), in cancellation-free sin^2 form."""

    def f(lam):
        return np.exp(-4.0 * beta * np.sum(np.sin(0.5 * lam) ** 2, axis=-1))

    return f


def quadratic_weight(beta: float, d: int, group: GroupSpec):
    """exp(-2 C^2 (d-1) beta sum_j lam_j^2) with C^2 = 4n."""
    rate = 2.0 * group.c_squared * (d - 1) * beta

    def f(lam):
        return np.exp(-rate * np.sum(lam * lam, axis=-1))

    return f


def _wilson_scale(beta: float) -> tuple[float, float | None]:
    if beta <= 1.0:
        return 1.0, None
    return np.sqrt(beta), _WILSON_CUTOFF


def _quadratic_scale(beta: float, d: int, group: GroupSpec) -> tuple[float, float | None]:
    rate = 2.0 * group.c_squared * (d - 1) * beta
    if rate <= 1.0:
        return 1.0, None
    return np.sqrt(rate), _QUADRATIC_CUTOFF


def z_upper(coupling: CouplingSpec, group: GroupSpec, quad: QuadratureSpec) -> float:
    """Single-bond partition function with the Wilson weight."""
    scale, cutoff = _wilson_scale(coupling.beta)
    return weyl_integrate(wilson_weight(coupling.beta), group, quad,
                          scale=scale, cutoff=cutoff)


def z_lower(coupling: CouplingSpec, group: GroupSpec, quad: QuadratureSpec) -> float:
    """Single-bond partition function with the quadratic weight."""
    scale, cutoff = _quadratic_scale(coupling.beta, coupling.d, group)
    return weyl_integrate(quadratic_weight(coupling.beta, coupling.d, group),
                          group, quad, scale=scale, cutoff=cutoff)


def z_upper_normalized(coupling, group, quad) -> float:
    """beta**(n^2/2) * z_upper, the spacing-extracted form."""
    return coupling.beta ** (group.dim / 2.0) * z_upper(coupling, group, quad)


def z_lower_normalized(coupling, group, quad) -> float:
    """beta**(n^2/2) * z_lower."""
    return coupling.beta ** (group.dim / 2.0) * z_lower(coupling, group, quad)


def z_upper_source(j: complex, coupling: CouplingSpec, group: GroupSpec,
                   quad: QuadratureSpec) -> complex:
    """Source-deformed single-bond integral, entire in the complex source j.

    Haar average of exp(j sqrt(beta) Im Tr U - 2 beta sum (1 - cos lam));
    Im Tr U = sum_j sin lam_j.  At j = 0 this is z_upper.
    """
    beta = coupling.beta
    j = complex(j)
    scale, cutoff = _wilson_scale(beta)
    if cutoff is not None:
        cutoff = cutoff + abs(j)
    root_beta = np.sqrt(beta)

    def f(lam):
        source = j * root_beta * np.sum(np.sin(lam), axis=-1)
        action = 4.0 * beta * np.sum(np.sin(0.5 * lam) ** 2, axis=-1)
        return np.exp(source - action)

    value = weyl_integrate(f, group, quad, scale=scale, cutoff=cutoff)
    return complex(value)


def z_upper_source_envelope(j: complex, coupling: CouplingSpec, group: GroupSpec,
                            quad: QuadratureSpec) -> float:
    """Modulus-envelope of the source integral: source term |j| sum |sin lam_j|.

    This is the quantity the generating-function bound actually controls; it
    dominates |z_upper_source(j)| by the triangle inequality.  The integrand
    has a kink on each hyperplane lam_j = 0, so the grid is split there.
    """
    beta = coupling.beta
    mod_j = abs(complex(j))
    scale, cutoff = _wilson_scale(beta)
    if cutoff is not None:
        cutoff = cutoff + mod_j
    root_beta = np.sqrt(beta)

    def f(lam):
        source = mod_j * root_beta * np.sum(np.abs(np.sin(lam)), axis=-1)
        action = 4.0 * beta * np.sum(np.sin(0.5 * lam) ** 2, axis=-1)
        return np.exp(source - action)

    return float(weyl_integrate(f, group, quad, scale=scale, cutoff=cutoff,
                                split_origin=True))


@dataclass(frozen=True)
class BoundConstants:
    """Logarithmic constants of the extracted-singularity sandwich.

    exp(c_lower) <= beta**(n^2/2) z <= exp(c_upper) for both single-bond
    integrals, and |z_upper_source(j)| <= beta**(-n^2/2)
    exp(c_upper_source + (pi^2/8) n |j|^2).
    """

    c_upper: float
    c_lower: float
    c_upper_source: float


def bound_constants(coupling: CouplingSpec, group: GroupSpec,
                    quad: QuadratureSpec) -> BoundConstants:
    n = group.n
    d = coupling.d
    consts = ensemble_constants(group)
    log_nc = np.log(consts.cue)
    c_upper = n * n * np.log(np.pi / 2.0) + np.log(consts.gue) - log_nc

    rate = 2.0 * (d - 1) * group.c_squared
    u0 = 0.5 * np.pi * np.sqrt(rate) / np.sqrt(coupling.g0_sq)
    i_ell = i_beta(2, u0, group, quad)
    c_lower = (-log_nc
               + 0.5 * n * (n - 1) * np.log(4.0 / np.pi**2)
               - 0.5 * n * n * np.log(rate)
               + np.log(i_ell))

    c_upper_source = (n * n + 0.25 * n) * np.log(np.pi) + 0.5 * np.log(consts.gse) - log_nc
    return BoundConstants(c_upper=float(c_upper), c_lower=float(c_lower),
                          c_upper_source=float(c_upper_source))


def source_bound(j: complex, coupling: CouplingSpec, group: GroupSpec,
                 quad: QuadratureSpec) -> float:
    """Closed-form ceiling for |z_upper_source(j)|."""
    n = group.n
    c = bound_constants(coupling, group, quad).c_upper_source
    return float(coupling.beta ** (-n * n / 2.0)
                 * np.exp(c + (np.pi**2 / 8.0) * n * abs(complex(j)) ** 2))


@dataclass(frozen=True)
class TrigReport:
    """Largest violations of the pointwise inequalities behind the sandwich."""

    max_lower_violation: float
    max_upper_violation: float
    max_density_violation: float
    points_checked: int

    @property
    def ok(self) -> bool:
        worst = max(self.max_lower_violation, self.max_upper_violation,
                    self.max_density_violation)
        return worst <= 1e-12


def trig_inequality_report(n_grid: int = 20001, n_random: int = 2000,
                           seed: int = 11) -> TrigReport:
    """Grid check of (4/pi^2) u^2 <= 2(1 - cos u) <= u^2 on |u| <= pi,
    plus the induced Vandermonde sandwich on random angle vectors with all
    |lam_j| <= pi/2 for ranks 1..3."""
    u = np.linspace(-np.pi, np.pi, n_grid)
    f = 4.0 * np.sin(0.5 * u) ** 2
    lower = (4.0 / np.pi**2) * u * u
    upper = u * u
    max_low = float(np.max(lower - f))
    max_up = float(np.max(f - upper))

    rng = np.random.default_rng(seed)
    max_dens = -np.inf
    checked = n_grid
    for n in (1, 2, 3):
        lam = rng.uniform(-np.pi / 2.0, np.pi / 2.0, size=(n_random, n))
        rho = vandermonde_density(lam)
        flat = flat_vandermonde(lam)
        n_pairs = n * (n - 1) // 2
        low = (4.0 / np.pi**2) ** n_pairs * flat
        max_dens = max(max_dens, float(np.max(low - rho)), float(np.max(rho - flat)))
        checked += n_random
    return TrigReport(max_lower_violation=max_low, max_upper_violation=max_up,
                      max_density_violation=max_dens, points_checked=checked)
