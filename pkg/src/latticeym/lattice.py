"""Hypercubic lattice geometry and gauge-field configurations.

A geometry object is a bundle of integer tables: site coordinates, bonds as
(origin site, direction) pairs, oriented plaquettes as ordered 4-tuples of
bond indices, and the gauge-fixed spanning tree.  The plaquette product
follows the convention

    U_p = U_mu(x) U_nu(x + e_mu) U_mu(x + e_nu)^dag U_nu(x)^dag,

so the dagger pattern of the four legs is always (no, no, yes, yes).

Gauge fixing uses the enhanced temporal gauge: bond b_k(x) is fixed to the
identity iff x_j = 0 for every j < k and x_k <= L - 2.  Direction 0 gives the
usual temporal gauge, the remaining directions add combs on the x^0 = 0
boundary slab until the fixed set is a maximal tree (L^d - 1 bonds).  The
builder verifies the tree property with a union-find pass rather than
trusting the counting.

For Metropolis updates the builder also precomputes, per retained bond, the
three-leg staples of every containing plaquette (arranged so that
A_p = 2n - 2 Re tr(U_b M_p)) and a greedy conflict coloring that groups
retained bonds into classes with no shared plaquette, enabling vectorized
simultaneous updates within a class.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidLattice, NonUnitaryInput, ShapeMismatch
from .groups import unitarity_defect

_DAG_PATTERN = np.array([False, False, True, True])

# Staple leg recipe: for a bond sitting at position l of a plaquette, the
# matrix M with Re tr(U_b M) = Re tr(U_p) is the ordered product of the other
# three legs, each entry (leg position, dagger flag).  Positions 2 and 3
# enter the plaquette daggered, which flips their staples via
# Re tr(U^dag S) = Re tr(U S^dag).
_STAPLE_RECIPE = {
    0: ((1, False), (2, True), (3, True)),
    1: ((2, True), (3, True), (0, False)),
    2: ((1, True), (0, True), (3, False)),
    3: ((2, False), (1, True), (0, True)),
}


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        """Join the classes of a and b; False if already joined (cycle)."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


@dataclass
class LatticeGeometry:
    d: int
    L: int
    boundary: str
    coords: np.ndarray          # (n_sites, d) int
    bond_site: np.ndarray       # (n_bonds,) origin site index
    bond_dir: np.ndarray        # (n_bonds,) direction mu
    bond_head: np.ndarray       # (n_bonds,) endpoint site index
    bond_id: np.ndarray         # (d, n_sites) bond lookup, -1 where absent
    plaq_site: np.ndarray       # (n_plaquettes,)
    plaq_mu: np.ndarray
    plaq_nu: np.ndarray
    plaq_legs: np.ndarray       # (n_plaquettes, 4) bond indices
    fixed_mask: np.ndarray      # (n_bonds,) bool
    classes: list = field(default_factory=list)        # arrays of bond idx
    staple_legs: list = field(default_factory=list)    # (n_c, P, 3) per class
    staple_dags: list = field(default_factory=list)
    staple_mask: list = field(default_factory=list)

    @property
    def n_sites(self):
        return self.coords.shape[0]

    @property
    def n_bonds(self):
        return self.bond_site.shape[0]

    @property
    def n_plaquettes(self):
        return self.plaq_site.shape[0]

    @property
    def retained(self):
        return np.flatnonzero(~self.fixed_mask)

    def site_index(self, coords):
        coords = np.asarray(coords)
        if coords.shape != (self.d,) or np.any(coords < 0) or np.any(coords >= self.L):
            raise InvalidLattice(f"site {coords!r} outside {self.d}d lattice of side {self.L}")
        return int(np.ravel_multi_index(tuple(coords), (self.L,) * self.d))

    def plaquette_index(self, site_coords, mu, nu):
        s = self.site_index(site_coords)
        hits = np.flatnonzero(
            (self.plaq_site == s) & (self.plaq_mu == mu) & (self.plaq_nu == nu))
        if hits.size != 1:
            raise InvalidLattice(
                f"no plaquette at site {site_coords!r} in plane ({mu},{nu})")
        return int(hits[0])


def _site_shift(coords, mu, L, periodic):
    """Index of coords + e_mu, or -1 if it leaves a free lattice."""
    out = coords.copy()
    out[:, mu] += 1
    if periodic:
        out[:, mu] %= L
        valid = np.ones(len(out), dtype=bool)
    else:
        valid = out[:, mu] < L
        out[~valid, mu] = 0  # placeholder, masked out below
    idx = np.ravel_multi_index(tuple(out.T), (L,) * coords.shape[1])
    return np.where(valid, idx, -1)


def build_geometry(d: int, L: int, boundary: str = "free") -> LatticeGeometry:
    if d not in (2, 3, 4):
        raise InvalidLattice(f"d must be 2, 3 or 4, got {d}")
    if L < 2 or L % 2 != 0:
        raise InvalidLattice(f"side length must be even and >= 2, got L = {L}")
    if boundary not in ("free", "periodic"):
        raise InvalidLattice(f"boundary must be 'free' or 'periodic', got {boundary!r}")
    periodic = boundary == "periodic"
    n_sites = L**d
    coords = np.stack(np.unravel_index(np.arange(n_sites), (L,) * d), axis=1)

    # Bonds: free-pattern bonds first (x_mu <= L-2, grouped by direction),
    # then the wrap bonds (x_mu = L-1) for periodic closure.
    bond_site, bond_dir = [], []
    for mu in range(d):
        sites = np.flatnonzero(coords[:, mu] <= L - 2)
        bond_site.append(sites)
        bond_dir.append(np.full(sites.size, mu))
    if periodic:
        for mu in range(d):
            sites = np.flatnonzero(coords[:, mu] == L - 1)
            bond_site.append(sites)
            bond_dir.append(np.full(sites.size, mu))
    bond_site = np.concatenate(bond_site)
    bond_dir = np.concatenate(bond_dir)
    bond_head = np.empty(bond_site.size, dtype=np.int64)
    for mu in range(d):
        sel = bond_dir == mu
        bond_head[sel] = _site_shift(coords[bond_site[sel]], mu, L, True)

    bond_id = np.full((d, n_sites), -1, dtype=np.int64)
    bond_id[bond_dir, bond_site] = np.arange(bond_site.size)

    # Plaquettes, plane by plane in lexicographic (mu, nu) order.
    plaq_site, plaq_mu, plaq_nu, plaq_legs = [], [], [], []
    for mu in range(d):
        for nu in range(mu + 1, d):
            if periodic:
                sites = np.arange(n_sites)
            else:
                sites = np.flatnonzero(
                    (coords[:, mu] <= L - 2) & (coords[:, nu] <= L - 2))
            x_mu = _site_shift(coords[sites], mu, L, periodic)
            x_nu = _site_shift(coords[sites], nu, L, periodic)
            legs = np.stack([
                bond_id[mu, sites],
                bond_id[nu, x_mu],
                bond_id[mu, x_nu],
                bond_id[nu, sites],
            ], axis=1)
            if np.any(legs < 0):
                raise InvalidLattice("plaquette references a missing bond")
            plaq_site.append(sites)
            plaq_mu.append(np.full(sites.size, mu))
            plaq_nu.append(np.full(sites.size, nu))
            plaq_legs.append(legs)
    plaq_site = np.concatenate(plaq_site)
    plaq_mu = np.concatenate(plaq_mu)
    plaq_nu = np.concatenate(plaq_nu)
    plaq_legs = np.concatenate(plaq_legs, axis=0)

    # Enhanced temporal gauge: fix b_k(x) iff x_j = 0 for j < k, x_k <= L-2.
    # Wrap bonds have x_k = L-1 in their own direction, so the x_k <= L-2
    # clause keeps them out automatically and the same tree works for both
    # boundary conditions.
    fixed_mask = np.zeros(bond_site.size, dtype=bool)
    for k in range(d):
        sel = coords[bond_site, k] <= L - 2
        for j in range(k):
            sel &= coords[bond_site, j] == 0
        fixed_mask |= (bond_dir == k) & sel

    uf = _UnionFind(n_sites)
    for b in np.flatnonzero(fixed_mask):
        if not uf.union(int(bond_site[b]), int(bond_head[b])):
            raise InvalidLattice("gauge-fixed set contains a cycle")
    roots = {uf.find(s) for s in range(n_sites)}
    if int(fixed_mask.sum()) != n_sites - 1 or len(roots) != 1:
        raise InvalidLattice("gauge-fixed set is not a spanning tree")

    geom = LatticeGeometry(
        d=d, L=L, boundary=boundary, coords=coords,
        bond_site=bond_site, bond_dir=bond_dir, bond_head=bond_head,
        bond_id=bond_id, plaq_site=plaq_site, plaq_mu=plaq_mu,
        plaq_nu=plaq_nu, plaq_legs=plaq_legs, fixed_mask=fixed_mask)
    _attach_update_tables(geom)
    return geom


def _attach_update_tables(geom: LatticeGeometry) -> None:
    """Greedy conflict coloring plus per-class padded staple tables."""
    retained = geom.retained
    n_plq = geom.n_plaquettes

    # bond -> (plaquette, leg position) incidences for retained bonds only
    incid = {int(b): [] for b in retained}
    for p in range(n_plq):
        for pos in range(4):
            b = int(geom.plaq_legs[p, pos])
            if b in incid:
                incid[b].append((p, pos))

    # conflict graph: retained bonds sharing any plaquette
    neighbours = {int(b): set() for b in retained}
    retained_set = set(int(b) for b in retained)
    for p in range(n_plq):
        members = [int(b) for b in geom.plaq_legs[p] if int(b) in retained_set]
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                neighbours[members[i]].add(members[j])
                neighbours[members[j]].add(members[i])

    colour = {}
    for b in retained:
        b = int(b)
        used = {colour[m] for m in neighbours[b] if m in colour}
        c = 0
        while c in used:
            c += 1
        colour[b] = c
    n_colours = max(colour.values()) + 1 if colour else 0

    for c in range(n_colours):
        members = np.array([b for b in retained if colour[int(b)] == c])
        max_p = max(len(incid[int(b)]) for b in members)
        legs = np.zeros((members.size, max_p, 3), dtype=np.int64)
        dags = np.zeros((members.size, max_p, 3), dtype=bool)
        mask = np.zeros((members.size, max_p), dtype=bool)
        for i, b in enumerate(members):
            for k, (p, pos) in enumerate(incid[int(b)]):
                recipe = _STAPLE_RECIPE[pos]
                legs[i, k] = [geom.plaq_legs[p, leg] for leg, _ in recipe]
                dags[i, k] = [dag for _, dag in recipe]
                mask[i, k] = True
        geom.classes.append(members)
        geom.staple_legs.append(legs)
        geom.staple_dags.append(dags)
        geom.staple_mask.append(mask)


class GaugeConfig:
    """A full set of bond matrices, shape (n_bonds, n, n) complex."""

    __slots__ = ("u",)

    def __init__(self, u: np.ndarray):
        u = np.asarray(u, dtype=np.complex128)
        if u.ndim != 3 or u.shape[1] != u.shape[2]:
            raise ShapeMismatch(f"expected (n_bonds, n, n) array, got {u.shape}")
        self.u = u

    @property
    def n(self) -> int:
        return self.u.shape[1]

    def copy(self) -> "GaugeConfig":
        return GaugeConfig(self.u.copy())

    def unitarity_defect(self) -> float:
        return max(unitarity_defect(m) for m in self.u)

    def require_unitary(self, tol: float = 1e-10) -> None:
        defect = self.unitarity_defect()
        if defect > tol:
            raise NonUnitaryInput(f"bond matrices drifted from unitarity by {defect:.3e}")


def cold_start(geom: LatticeGeometry, n: int) -> GaugeConfig:
    u = np.broadcast_to(np.eye(n, dtype=np.complex128),
                        (geom.n_bonds, n, n)).copy()
    return GaugeConfig(u)


def _gather_legs(u, legs, dags):
    m = u[legs]
    md = np.conj(np.swapaxes(m, -1, -2))
    return np.where(dags[..., None, None], md, m)


def plaquette_products(config: GaugeConfig, geom: LatticeGeometry) -> np.ndarray:
    """U_p for every plaquette, shape (n_plaquettes, n, n)."""
    if config.u.shape[0] != geom.n_bonds:
        raise ShapeMismatch(
            f"config has {config.u.shape[0]} bonds, geometry has {geom.n_bonds}")
    g = _gather_legs(config.u, geom.plaq_legs, _DAG_PATTERN[None, :])
    return g[:, 0] @ g[:, 1] @ g[:, 2] @ g[:, 3]


def wilson_action(config: GaugeConfig, geom: LatticeGeometry) -> float:
    """Sum over plaquettes of 2 Re tr(1 - U_p); nonnegative."""
    up = plaquette_products(config, geom)
    traces = np.trace(up, axis1=-2, axis2=-1)
    return float(2.0 * (config.n * geom.n_plaquettes - np.sum(traces.real)))


def plaquette_field(config, geom, index, coupling, variant="M"):
    """Scalar field observable of one plaquette.

    variant "M": sqrt(beta) Im tr U_p (scaled field),
    variant "F": a^(-d/2) M (physical normalization),
    variant "S": a^(d-4) A_p / g (action density; nonnegative).
    """
    up = plaquette_products(config, geom)[index]
    tr = np.trace(up)
    beta = coupling.beta
    if variant == "M":
        return float(np.sqrt(beta) * tr.imag)
    if variant == "F":
        return float(coupling.a ** (-coupling.d / 2.0) * np.sqrt(beta) * tr.imag)
    if variant == "S":
        a_p = 2.0 * (config.n - tr.real)
        return float(coupling.a ** (coupling.d - 4) * a_p / np.sqrt(coupling.g2))
    raise ValueError(f"unknown variant {variant!r}")


def scaled_field_traces(config: GaugeConfig, geom: LatticeGeometry,
                        coupling, indices) -> np.ndarray:
    """sqrt(beta) Im tr U_p over the given plaquette indices (vectorized)."""
    indices = np.asarray(indices)
    g = _gather_legs(config.u, geom.plaq_legs[indices], _DAG_PATTERN[None, :])
    up = g[:, 0] @ g[:, 1] @ g[:, 2] @ g[:, 3]
    traces = np.trace(up, axis1=-2, axis2=-1)
    return np.sqrt(coupling.beta) * traces.imag


def gauge_transform(config: GaugeConfig, geom: LatticeGeometry, site: int,
                    v: np.ndarray) -> GaugeConfig:
    """Apply U_b -> V U_b (b leaving `site`) and U_b -> U_b V^dag (b entering)."""
    defect = unitarity_defect(v)
    if defect > 1e-10:
        raise NonUnitaryInput(f"gauge matrix defect {defect:.3e}")
    out = config.u.copy()
    leaving = np.flatnonzero(geom.bond_site == site)
    entering = np.flatnonzero(geom.bond_head == site)
    out[leaving] = v @ out[leaving]
    out[entering] = out[entering] @ np.conj(v.T)
    return GaugeConfig(out)
