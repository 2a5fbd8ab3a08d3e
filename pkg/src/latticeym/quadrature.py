"""Weyl-reduced integration over class functions of U(N).

A class function f(U) = f(angles of U) integrates against Haar measure as

    (1/N_C) * integral over (-pi, pi]^N of f(lam) rho(lam) d^N lam,

with rho the squared modulus of the eigenvalue Vandermonde and
N_C = (2 pi)^N N!.  Three evaluation methods are provided: tensor
Gauss-Legendre grids (ranks N <= 4), scrambled Sobol points with the density
as weight, and plain Monte Carlo through Haar sampling.

Large couplings concentrate the integrand near the origin; `scale` switches
to coordinates y = scale * lam so the grid tracks the concentration region.
Trigonometric factors are evaluated through 4 sin^2(x/2) forms, which stay
fully accurate for small angle differences where 1 - cos cancels.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np

from .errors import ResolutionTooLow
from .groups import GroupSpec, angular_eigenvalues_batch, haar_sample_batch

TENSOR_MAX_RANK = 4
_CHUNK = 1 << 19


@dataclass(frozen=True)
class QuadratureSpec:
    """How to evaluate Weyl-reduced integrals.

    points is per dimension (tensor method); rtol/atol bound the allowed
    disagreement between the two internal resolutions before
    ResolutionTooLow is raised.
    """

    method: str = "tensor"
    points: int = 96
    samples: int = 200_000
    seed: int = 7
    rtol: float = 1e-6
    atol: float = 1e-13

    def __post_init__(self):
        if self.method not in ("tensor", "sobol", "monte-carlo"):
            raise ValueError(f"unknown quadrature method {self.method!r}")
        if self.points < 4:
            raise ValueError("tensor quadrature needs at least 4 points per dimension")
        if self.samples < 100:
            raise ValueError("sampling methods need at least 100 samples")


@dataclass(frozen=True)
class EnsembleConstants:
    """Normalization constants of the three classical ensembles at rank N."""

    cue: float
    gue: float
    gse: float


def ensemble_constants(group: GroupSpec) -> EnsembleConstants:
    """Closed-form ensemble volumes N_C, N_G, N_S."""
    n = group.n
    cue = (2.0 * np.pi) ** n * factorial(n)
    gue = (2.0 * np.pi) ** (n / 2.0) * 2.0 ** (-n * n / 2.0)
    gse = (2.0 * np.pi) ** (n / 2.0) * 4.0 ** (-n * n)
    for j in range(1, n + 1):
        gue *= factorial(j)
        gse *= factorial(2 * j)
    return EnsembleConstants(cue=float(cue), gue=float(gue), gse=float(gse))


def vandermonde_density(lam: np.ndarray) -> np.ndarray:
    """prod_{j<k} |e^{i lam_j} - e^{i lam_k}|^2 = prod 4 sin^2((lam_j - lam_k)/2)."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    out = np.ones(lam.shape[:-1])
    for j in range(n):
        for k in range(j + 1, n):
            out = out * 4.0 * np.sin(0.5 * (lam[..., j] - lam[..., k])) ** 2
    return out


def flat_vandermonde(lam: np.ndarray) -> np.ndarray:
    """prod_{j<k} (lam_j - lam_k)^2, the small-angle limit of the density."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    out = np.ones(lam.shape[:-1])
    for j in range(n):
        for k in range(j + 1, n):
            out = out * (lam[..., j] - lam[..., k]) ** 2
    return out


@lru_cache(maxsize=None)
def _leggauss(points: int):
    return np.polynomial.legendre.leggauss(points)


@lru_cache(maxsize=None)
def _panel_nodes(points: int, panels: tuple):
    """Composite Gauss-Legendre rule with `points` nodes on each panel."""
    x0, w0 = _leggauss(points)
    xs, ws = [], []
    for lo, hi in zip(panels[:-1], panels[1:]):
        xs.append(0.5 * (hi - lo) * x0 + 0.5 * (hi + lo))
        ws.append(0.5 * (hi - lo) * w0)
    return np.concatenate(xs), np.concatenate(ws)


def _iter_tensor(x1: np.ndarray, w1: np.ndarray, ndim: int):
    """Yield (coords, weights) chunks of the full tensor-product grid."""
    m = len(x1) ** ndim
    for start in range(0, m, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, m))
        coords = np.empty((len(idx), ndim))
        weights = np.ones(len(idx))
        rem = idx
        for axis in range(ndim - 1, -1, -1):
            rem, j = np.divmod(rem, len(x1))
            coords[:, axis] = x1[j]
            weights *= w1[j]
        yield coords, weights


def _tensor_weyl(f, group, points, scale, cutoff, split_origin):
    n = group.n
    half = np.pi * scale
    if cutoff is not None:
        half = min(half, cutoff)
    panels = (-half, 0.0, half) if split_origin else (-half, half)
    x1, w1 = _panel_nodes(points, panels)
    total = 0.0 + 0.0j
    complex_seen = False
    for coords, weights in _iter_tensor(x1, w1, n):
        lam = coords / scale
        vals = np.asarray(f(lam))
        complex_seen = complex_seen or np.iscomplexobj(vals)
        total += np.sum(weights * vals * vandermonde_density(lam))
    total /= scale**n * ensemble_constants(group).cue
    return total if complex_seen else total.real


def weyl_integrate(f, group: GroupSpec, quad: QuadratureSpec, *,
                   scale: float = 1.0, cutoff: float | None = None,
                   split_origin: bool = False, return_error: bool = False):
    """Haar expectation of the class function given by f(angles).

    f is called with an (M, N) array of angle vectors and must return an (M,)
    array (real or complex).  With scale > 1 the integration runs in
    coordinates y = scale*lam over |y| <= min(pi*scale, cutoff); the caller
    guarantees the integrand is negligible beyond the cutoff.  split_origin
    places a panel boundary at 0 for integrands with a kink there.

    Tensor grids run at two resolutions and raise ResolutionTooLow if they
    disagree beyond quad.rtol/atol; sampling methods return a standard error
    instead of raising.
    """
    if quad.method == "tensor":
        if group.n > TENSOR_MAX_RANK:
            raise ValueError(f"tensor grids limited to rank {TENSOR_MAX_RANK}, got {group.n}")
        fine = _tensor_weyl(f, group, quad.points, scale, cutoff, split_origin)
        coarse_pts = max(8, (2 * quad.points) // 3)
        coarse = _tensor_weyl(f, group, coarse_pts, scale, cutoff, split_origin)
        err = abs(fine - coarse)
        if err > quad.rtol * abs(fine) + quad.atol:
            raise ResolutionTooLow(
                f"{quad.points} vs {coarse_pts} points per dim differ by {err:.3e} "
                f"(value {abs(fine):.6e})")
        return (fine, err) if return_error else fine

    if quad.method == "monte-carlo":
        rng = np.random.default_rng(np.random.SeedSequence(quad.seed))
        u = haar_sample_batch(group, rng, quad.samples)
        vals = np.asarray(f(angular_eigenvalues_batch(u)))
        mean = vals.mean()
        se = float(np.std(vals) / np.sqrt(quad.samples))
        mean = mean if np.iscomplexobj(vals) else float(mean)
        return (mean, se) if return_error else mean

    # Sobol points on the angle cube, density as importance weight.
    from scipy.stats import qmc

    n = group.n
    sampler = qmc.Sobol(d=n, scramble=True, seed=quad.seed)
    m = 1 << int(np.ceil(np.log2(quad.samples)))
    lam = (2.0 * sampler.random(m) - 1.0) * np.pi
    vals = np.asarray(f(lam)) * vandermonde_density(lam)
    scale_factor = (2.0 * np.pi) ** n / ensemble_constants(group).cue
    full = vals.mean() * scale_factor
    half = vals[: m // 2].mean() * scale_factor
    err = abs(full - half)
    if not np.iscomplexobj(vals):
        full = float(full)
    return (full, err) if return_error else full


# Integration cutoffs for the improper ensemble integrals: beyond these the
# Gaussian factor alone is < 1e-43 and the polynomial density cannot recover.
_INF_CUTOFF = {2: 10.0, 4: 7.5}


def i_beta(beta: int, u: float, group: GroupSpec, quad: QuadratureSpec,
           return_error: bool = False):
    """Ensemble integral I_beta(u) over the box (-u, u)^N.

    Integrand exp(-(beta/2) sum y^2) times the flat Vandermonde to the power
    beta/2, for beta = 2 (Hermitian ensemble) or 4 (symplectic).  u may be
    numpy.inf; I_2(inf) and I_4(inf) reproduce the GUE/GSE constants.
    """
    if beta not in (2, 4):
        raise ValueError("beta must be 2 or 4")
    if u <= 0:
        raise ValueError("u must be positive")
    half = min(float(u), _INF_CUTOFF[beta])
    n = group.n

    def integrand(y):
        dens = flat_vandermonde(y) if beta == 2 else flat_vandermonde(y) ** 2
        return np.exp(-0.5 * beta * np.sum(y * y, axis=-1)) * dens

    def run(points):
        x1, w1 = _panel_nodes(points, (-half, half))
        total = 0.0
        for coords, weights in _iter_tensor(x1, w1, n):
            total += float(np.sum(weights * integrand(coords)))
        return total

    fine = run(quad.points)
    coarse = run(max(8, (2 * quad.points) // 3))
    err = abs(fine - coarse)
    if err > quad.rtol * abs(fine) + quad.atol:
        raise ResolutionTooLow(f"ensemble integral resolutions differ by {err:.3e}")
    return (fine, err) if return_error else fine
