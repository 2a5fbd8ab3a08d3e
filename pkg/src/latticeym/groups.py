"""U(N) primitives: Haar sampling, angular spectra, log map, plaquette action.

Conventions used throughout the package:

* angular eigenvalues live on the principal branch (-pi, pi], sorted ascending;
* the Lie-algebra basis is orthonormal under Tr(a b), ordered as the real and
  imaginary off-diagonal pairs (row-major over j < k), the diagonal traceless
  generators, and the scaled identity last;
* a plaquette holonomy is U1 U2 U3^dag U4^dag and its action is the squared
  Hilbert-Schmidt distance to the identity, 2 Re Tr(1 - U_p).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NonUnitaryInput, ShapeMismatch

UNITARITY_TOL = 1e-8


@dataclass(frozen=True)
class GroupSpec:
    """The unitary group U(n)."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"group rank must be a positive integer, got {self.n}")

    @property
    def dim(self) -> int:
        """Real dimension of the Lie algebra, n**2."""
        return self.n * self.n

    @property
    def c_squared(self) -> float:
        """Constant 4n appearing in the quadratic lower bound on the action."""
        return 4.0 * self.n


@lru_cache(maxsize=None)
def generator_basis(n: int) -> np.ndarray:
    """Orthonormal Hermitian basis of u(n), shape (n**2, n, n).

    Order: for each pair j < k the symmetric then antisymmetric combination,
    then the n-1 diagonal traceless generators, then identity/sqrt(n).
    For n = 2 this is (sigma_1, sigma_2, sigma_3, 1)/sqrt(2).
    """
    basis = np.zeros((n * n, n, n), dtype=complex)
    idx = 0
    for j in range(n):
        for k in range(j + 1, n):
            sym = np.zeros((n, n), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0 / np.sqrt(2.0)
            basis[idx] = sym
            idx += 1
            antisym = np.zeros((n, n), dtype=complex)
            antisym[j, k] = -1j / np.sqrt(2.0)
            antisym[k, j] = 1j / np.sqrt(2.0)
            basis[idx] = antisym
            idx += 1
    for l in range(1, n):
        diag = np.zeros(n)
        diag[:l] = 1.0
        diag[l] = -float(l)
        basis[idx] = np.diag(diag / np.sqrt(l * (l + 1.0)))
        idx += 1
    basis[idx] = np.eye(n) / np.sqrt(n)
    basis.setflags(write=False)
    return basis


def haar_sample(group: GroupSpec, rng: np.random.Generator) -> np.ndarray:
    """One Haar-distributed matrix from U(n)."""
    return haar_sample_batch(group, rng, 1)[0]


def haar_sample_batch(group: GroupSpec, rng: np.random.Generator, count: int) -> np.ndarray:
    """Haar sample of shape (count, n, n).

    Complex Ginibre matrix, QR decomposition, then each column of Q is
    rescaled by the phase that makes the corresponding diagonal entry of R
    real positive.  Without the phase fix QR is not Haar.
    """
    n = group.n
    z = rng.standard_normal((count, n, n)) + 1j * rng.standard_normal((count, n, n))
    q, r = np.linalg.qr(z / np.sqrt(2.0))
    diag = np.einsum("bii->bi", r)
    phase = diag / np.abs(diag)
    return q * phase[:, None, :]


def unitarity_defect(u: np.ndarray) -> float:
    """Hilbert-Schmidt norm of U^dag U - 1."""
    u = np.asarray(u)
    n = u.shape[-1]
    return float(np.linalg.norm(u.conj().swapaxes(-1, -2) @ u - np.eye(n)))


def _require_unitary(u: np.ndarray, tol: float = UNITARITY_TOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {u.shape}")
    defect = unitarity_defect(u)
    if defect > tol:
        raise NonUnitaryInput(f"unitarity defect {defect:.3e} exceeds {tol:.1e}")
    return u


def _principal_angles(eigvals: np.ndarray) -> np.ndarray:
    """Map unit-modulus eigenvalues to sorted angles in (-pi, pi]."""
    angles = np.angle(eigvals)
    # np.angle can return exactly -pi (negative real axis approached from
    # below); fold that endpoint onto +pi so the branch is half-open.
    angles = np.where(angles <= -np.pi, angles + 2.0 * np.pi, angles)
    return np.sort(angles, axis=-1)


def angular_eigenvalues(u: np.ndarray) -> np.ndarray:
    """Sorted angles of the eigenvalues of a unitary matrix, in (-pi, pi]."""
    u = _require_unitary(u)
    # Schur of a normal matrix: diagonal T and orthonormal V, stable under
    # eigenvalue collisions where a direct eigensolver may lose orthogonality.
    from scipy.linalg import schur

    t, _ = schur(u, output="complex")
    return _principal_angles(np.diagonal(t))


def angular_eigenvalues_batch(u: np.ndarray) -> np.ndarray:
    """Angles for a batch (..., n, n) of unitaries; no per-matrix validation."""
    return _principal_angles(np.linalg.eigvals(u))


def log_map(u: np.ndarray) -> np.ndarray:
    """Coefficients x with U = exp(i sum_a x_a T_a), principal branch.

    Returns the real vector of length n**2 in the `generator_basis` order.
    The coefficient norm identity sum_a x_a**2 = sum_j lambda_j**2 holds
    because the basis is orthonormal.
    """
    u = _require_unitary(u)
    from scipy.linalg import schur

    t, v = schur(u, output="complex")
    lam = _principal_angles_unsorted(np.diagonal(t))
    x_mat = (v * lam) @ v.conj().T
    basis = generator_basis(u.shape[0])
    coeffs = np.einsum("aij,ji->a", basis, x_mat)
    if np.max(np.abs(coeffs.imag)) > 1e-9:
        raise NonUnitaryInput("log map produced a non-Hermitian generator")
    return coeffs.real


def _principal_angles_unsorted(eigvals: np.ndarray) -> np.ndarray:
    angles = np.angle(eigvals)
    return np.where(angles <= -np.pi, angles + 2.0 * np.pi, angles)


def lie_element(coeffs: np.ndarray, group: GroupSpec) -> np.ndarray:
    """Hermitian matrix X = sum_a x_a T_a."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (group.dim,):
        raise ShapeMismatch(f"expected {group.dim} coefficients, got shape {coeffs.shape}")
    return np.einsum("a,aij->ij", coeffs, generator_basis(group.n))


def unitary_from_coefficients(coeffs: np.ndarray, group: GroupSpec) -> np.ndarray:
    """exp(i X) for X given by basis coefficients."""
    x = lie_element(coeffs, group)
    w, v = np.linalg.eigh(x)
    return (v * np.exp(1j * w)) @ v.conj().T


def plaquette_product(u1, u2, u3, u4) -> np.ndarray:
    """Holonomy U1 U2 U3^dag U4^dag around an oriented plaquette."""
    return u1 @ u2 @ u3.conj().T @ u4.conj().T


def plaquette_action(u1, u2, u3, u4) -> float:
    """Squared HS distance of the holonomy from the identity, 2 Re Tr(1 - U_p)."""
    up = plaquette_product(*(np.asarray(u, dtype=complex) for u in (u1, u2, u3, u4)))
    n = up.shape[0]
    return float(2.0 * (n - np.trace(up).real))


@dataclass(frozen=True)
class BoundCheck:
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def quadratic_bound_check(us, group: GroupSpec) -> BoundCheck:
    """Check A_p <= k n sum_j |x^j|^2 for k = len(us) retained legs.

    `us` holds the unitaries sitting on the retained legs of one plaquette
    (between 1 and 4 of them, in leg order); the remaining legs are the
    identity.  |x^j|^2 is the squared coefficient norm of the log of U_j,
    equal to the sum of squared angular eigenvalues.
    """
    us = [np.asarray(u, dtype=complex) for u in us]
    k = len(us)
    if not 1 <= k <= 4:
        raise ShapeMismatch(f"a plaquette has between 1 and 4 retained legs, got {k}")
    legs = us + [np.eye(group.n, dtype=complex)] * (4 - k)
    lhs = plaquette_action(*legs)
    norms = sum(float(np.sum(angular_eigenvalues(u) ** 2)) for u in us)
    return BoundCheck(lhs=lhs, rhs=k * group.n * norms)


def quadratic_bound_scan(group: GroupSpec, rng: np.random.Generator, count: int,
                         k: int = 4, batch: int = 50_000):
    """Sample `count` random k-tuples of Haar matrices and count violations.

    Returns (violations, max_ratio) where max_ratio is the largest observed
    lhs/rhs; the bound holds when max_ratio <= 1.  Vectorized, so usable at
    desk scale for 1e5 tuples and n <= 3.
    """
    n = group.n
    violations = 0
    max_ratio = 0.0
    remaining = count
    eye = np.eye(n, dtype=complex)
    while remaining > 0:
        m = min(batch, remaining)
        remaining -= m
        us = haar_sample_batch(group, rng, m * k).reshape(m, k, n, n)
        legs = [us[:, j] if j < k else np.broadcast_to(eye, (m, n, n)) for j in range(4)]
        up = legs[0] @ legs[1] @ legs[2].conj().swapaxes(1, 2) @ legs[3].conj().swapaxes(1, 2)
        lhs = 2.0 * (n - np.einsum("bii->b", up).real)
        angles = angular_eigenvalues_batch(us.reshape(m * k, n, n)).reshape(m, k, n)
        rhs = k * n * np.sum(angles**2, axis=(1, 2))
        # Absolute cushion: near lambda = 0 both sides vanish quadratically and
        # the trace form of lhs loses all significant digits, so a relative
        # comparison is meaningless there.
        violations += int(np.count_nonzero(lhs > rhs + 1e-12))
        max_ratio = max(max_ratio, float(np.max(lhs / np.maximum(rhs, 1e-30))))
    return violations, max_ratio
