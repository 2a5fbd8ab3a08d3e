"""Exactly solvable factorized model: counts, free energies, moments.

Setting the interior horizontal plaquette couplings to zero lets every bond
integral be done in closed form, so the partition function collapses to a
power of the single-bond integral, Z^n = z_n^R with R the number of retained
(non-gauge-fixed) bonds.  Everything here is a consequence of that one
identity: normalized log-partition functions, free energies and their
small-spacing limits, and coincident-point moments of the scaled plaquette
field.  The d = 2 values double as exact references for the Monte Carlo
modules, where no approximation is involved.

Conventions.  The rank-1 free energy follows the scaled-coordinate Lebesgue
normalization (its continuum limit is log sqrt(pi)); ranks >= 2 use the
Haar-normalized form, whose limit is the Gaussian-ensemble mass
N_G / N_C.  `log_partition_normalized` uses the Haar form for every rank.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidLattice
from .groups import GroupSpec
from .quadrature import QuadratureSpec, weyl_integrate
from .single_bond import (CouplingSpec, _wilson_scale, wilson_weight,
                          z_upper_normalized)


@dataclass(frozen=True)
class LatticeCounts:
    """Object counts of a d-dimensional hypercubic lattice with L^d sites."""

    sites: int
    bonds: int
    extra_bonds: int
    retained_bonds: int
    plaquettes: int


def lattice_counts(d: int, L: int) -> LatticeCounts:
    """Closed-form counts for free boundary conditions.

    `bonds` counts nearest-neighbour pairs, `extra_bonds` the wrap-around
    bonds added by periodic closure, `retained_bonds` the bonds left after
    fixing a maximal tree (all temporal bonds plus a boundary comb), and
    `plaquettes` the unit squares.  The tree identity
    bonds - retained_bonds = L**d - 1 pins the retained count to the others.
    """
    if d not in (2, 3, 4):
        raise InvalidLattice(f"d must be 2, 3 or 4, got {d}")
    if L < 2 or L % 2 != 0:
        raise InvalidLattice(f"side length must be even and >= 2, got L = {L}")
    sites = L**d
    bonds = d * (L - 1) * L ** (d - 1)
    extra = d * L ** (d - 1)
    if d == 2:
        retained = (L - 1) ** 2
    elif d == 3:
        retained = (2 * L + 1) * (L - 1) ** 2
    else:
        retained = (3 * L**3 - L**2 - L - 1) * (L - 1)
    plaquettes = (d * (d - 1) // 2) * (L - 1) ** 2 * L ** (d - 2)
    return LatticeCounts(sites=sites, bonds=bonds, extra_bonds=extra,
                         retained_bonds=retained, plaquettes=plaquettes)


def log_partition_normalized(L: int, coupling: CouplingSpec, group: GroupSpec,
                             quad: QuadratureSpec) -> float:
    """R * log z_n after extracting the beta**(n^2/2 R) spacing singularity."""
    counts = lattice_counts(coupling.d, L)
    return counts.retained_bonds * float(
        np.log(z_upper_normalized(coupling, group, quad)))


def normalized_free_energy(coupling: CouplingSpec, group: GroupSpec,
                           quad: QuadratureSpec) -> float:
    """Free energy per retained bond; independent of the lattice size.

    For rank 1 the single-bond integral is taken with the plain Lebesgue
    measure on the scaled coordinate (an extra 2 pi relative to the Haar
    form), so that the d = 2, 3 continuum limit is log sqrt(pi).
    """
    z_n = z_upper_normalized(coupling, group, quad)
    if group.n == 1:
        return float(np.log(2.0 * np.pi * z_n))
    return float(np.log(z_n))


@dataclass(frozen=True)
class LimitSequence:
    """Values of a quantity along the spacing sequence a_k = 2**-k.

    Never a symbolic limit: `cauchy_ok` just certifies that consecutive
    differences shrink below `tolerance` without growing at the tail.
    """

    spacings: tuple
    values: tuple
    tolerance: float

    @property
    def deltas(self) -> np.ndarray:
        return np.abs(np.diff(np.asarray(self.values)))

    @property
    def final_delta(self) -> float:
        return float(self.deltas[-1])

    @property
    def cauchy_ok(self) -> bool:
        d = self.deltas
        tail = d[-3:]
        return bool(d[-1] < self.tolerance and np.all(np.diff(tail) <= self.tolerance))

    @property
    def limit(self) -> float:
        return float(self.values[-1])


def free_energy_limit(d: int, g2: float, group: GroupSpec, quad: QuadratureSpec,
                      k_max: int = 10, tolerance: float = 1e-4) -> LimitSequence:
    """normalized_free_energy along a_k = 2**-k, k = 0..k_max."""
    spacings = tuple(2.0**-k for k in range(k_max + 1))
    values = tuple(
        normalized_free_energy(CouplingSpec(d=d, a=a, g2=g2), group, quad)
        for a in spacings)
    return LimitSequence(spacings=spacings, values=values, tolerance=tolerance)


def plaquette_moment(alpha: int, coupling: CouplingSpec, group: GroupSpec,
                     quad: QuadratureSpec) -> float:
    """<(tr M)^alpha>: coincident-point moment of the scaled plaquette field.

    Single-bond ratio
        int [sqrt(beta) sum_j sin lam_j]^alpha exp(-2 beta sum_j (1-cos lam_j)) rho
      / int exp(-2 beta sum_j (1-cos lam_j)) rho.
    Odd moments vanish by lam -> -lam symmetry (the quadrature returns the
    rounding-level remnant rather than short-circuiting).
    """
    if alpha < 1:
        raise ValueError(f"moment order must be >= 1, got {alpha}")
    beta = coupling.beta
    scale, cutoff = _wilson_scale(beta)
    root_beta = np.sqrt(beta)
    weight = wilson_weight(beta)

    def numerator(lam):
        return (root_beta * np.sum(np.sin(lam), axis=-1)) ** alpha * weight(lam)

    num = weyl_integrate(numerator, group, quad, scale=scale, cutoff=cutoff)
    den = weyl_integrate(weight, group, quad, scale=scale, cutoff=cutoff)
    return float(num / den)


def physical_coincident_moment(alpha: int, coupling: CouplingSpec,
                               group: GroupSpec, quad: QuadratureSpec) -> float:
    """a**(-d alpha / 2) <(tr M)^alpha>: the unscaled-field moment.

    The spacing dependence is exactly the prefactor; the scaled moment is
    bounded uniformly in a, so coincident correlations blow up as a**-d for
    alpha = 2 and no faster.
    """
    return coupling.a ** (-coupling.d * alpha / 2.0) * plaquette_moment(
        alpha, coupling, group, quad)


def moment_limit(alpha: int, d: int, g2: float, group: GroupSpec,
                 quad: QuadratureSpec, k_max: int = 10,
                 tolerance: float = 1e-4) -> LimitSequence:
    """plaquette_moment along the spacing sequence a_k = 2**-k."""
    spacings = tuple(2.0**-k for k in range(k_max + 1))
    values = tuple(
        plaquette_moment(alpha, CouplingSpec(d=d, a=a, g2=g2), group, quad)
        for a in spacings)
    return LimitSequence(spacings=spacings, values=values, tolerance=tolerance)


def gue_moment(alpha: int, group: GroupSpec) -> float:
    """Closed form for the zero-coupling limit T_alpha of <(tr M)^alpha>.

    In the limit the eigenvalue sum becomes the trace of a Gaussian Hermitian
    matrix, a centered Gaussian of variance n/2, so even moments follow the
    Wick chain (alpha-1)!! (n/2)^(alpha/2) and odd moments are zero.
    """
    if alpha % 2 == 1:
        return 0.0
    double_fact = 1.0
    for k in range(alpha - 1, 0, -2):
        double_fact *= k
    return double_fact * (group.n / 2.0) ** (alpha / 2.0)


def _limit_coupling(d: int) -> CouplingSpec:
    # Effective-limit couplings: beta ~ 1e10 makes the 1/beta corrections
    # to the Gaussian limit ~1e-11, far below the reporting tolerances.
    if d == 4:
        return CouplingSpec(d=4, a=1.0, g2=1e-10)
    a = (1e10) ** (-1.0 / (4 - d))
    return CouplingSpec(d=d, a=a, g2=1.0)


@dataclass(frozen=True)
class GaussianityReport:
    """Second/fourth moments at effectively-zero coupling vs the Wick values."""

    n: int
    d: int
    t2: float
    t4: float
    t2_gaussian: float
    t4_gaussian: float

    @property
    def wick_gap(self) -> float:
        """t4 - 3 t2^2; zero iff the limit is Gaussian at fourth order."""
        return self.t4 - 3.0 * self.t2**2


def gaussianity_report(group: GroupSpec, d: int,
                       quad: QuadratureSpec) -> GaussianityReport:
    cp = _limit_coupling(d)
    t2 = plaquette_moment(2, cp, group, quad)
    t4 = plaquette_moment(4, cp, group, quad)
    return GaussianityReport(n=group.n, d=d, t2=t2, t4=t4,
                             t2_gaussian=gue_moment(2, group),
                             t4_gaussian=gue_moment(4, group))
