"""Dense complex linear algebra used throughout the package.

Matrices are plain ``complex128`` numpy arrays. Products and adjoints lean on
numpy; the Hermitian eigensolver is a cyclic Jacobi iteration (see
:mod:`blindnull.kernels`) so results are deterministic and do not depend on
the LAPACK build. Pseudo-inverses, projectors and ranks are all derived from
that eigensolver.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels

ABS_FLOOR = 1e-14
HERMITIAN_TOL = 1e-10
EIG_TOL = 1e-12
MAX_SWEEPS = 100


class ShapeError(ValueError):
    pass


class NotHermitianError(ValueError):
    pass


def as_matrix(a):
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def as_vector(x):
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim == 2 and 1 in x.shape:
        x = x.reshape(-1)
    if x.ndim != 1:
        raise ShapeError(f"expected a vector, got shape {x.shape}")
    return x


def fro(a):
    return float(np.sqrt(np.sum(np.abs(a) ** 2)))


def matmul(a, b):
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def conj_transpose(a):
    return as_matrix(a).conj().T.copy()


def quadratic_form(a, x):
    """Return ``x* A x`` as a complex number.

    For Hermitian ``A`` the imaginary part is rounding noise and the real part
    is the energy ``||A^{1/2} x||^2``.
    """
    a = as_matrix(a)
    x = as_vector(x)
    if a.shape[0] != a.shape[1] or a.shape[0] != x.shape[0]:
        raise ShapeError(f"quadratic form needs square A matching x, got {a.shape} and {x.shape}")
    return complex(np.vdot(x, a @ x))


@dataclass(frozen=True)
class HermitianEig:
    """Eigen-pairs of a Hermitian matrix, eigenvalues in descending order."""

    values: np.ndarray
    vectors: np.ndarray
    sweeps: int = 0

    def reconstruct(self):
        return (self.vectors * self.values) @ self.vectors.conj().T


def _normalize_phase(vectors):
    # largest-magnitude entry of each column made real positive; first index wins ties
    out = vectors.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        i = int(np.argmax(np.abs(col)))
        if col[i] != 0:
            out[:, k] = col * (abs(col[i]) / col[i])
    return out


def hermitian_eig(a, tol=EIG_TOL, max_sweeps=MAX_SWEEPS):
    a = as_matrix(a)
    n, m = a.shape
    if n != m:
        raise ShapeError(f"eigendecomposition needs a square matrix, got {a.shape}")
    norm = fro(a)
    skew = fro(a - a.conj().T)
    if skew > HERMITIAN_TOL * max(norm, ABS_FLOOR):
        raise NotHermitianError(f"matrix is not Hermitian: ||A - A*||_F = {skew:.3e}, ||A||_F = {norm:.3e}")
    work = np.ascontiguousarray(0.5 * (a + a.conj().T))
    vecs = np.eye(n, dtype=np.complex128)
    sweeps = 0
    if norm > 0.0:
        sweeps = kernels.jacobi_sweeps(work, vecs, tol * norm, max_sweeps)
    values = work.diagonal().real.copy()
    # stable sort keeps Jacobi column order among equal eigenvalues
    order = np.argsort(-values, kind="stable")
    return HermitianEig(values[order], _normalize_phase(vecs[:, order]), sweeps)


def singular_values(a):
    """Singular values in descending order.

    Taken from the Hermitian dilation ``[[0, A], [A*, 0]]`` whose spectrum is
    ``+-sigma``, which keeps small singular values at absolute accuracy
    ``eps * sigma_max`` (squaring through ``A*A`` would not).
    """
    a = as_matrix(a)
    m, n = a.shape
    dil = np.zeros((m + n, m + n), dtype=np.complex128)
    dil[:m, m:] = a
    dil[m:, :m] = a.conj().T
    vals = hermitian_eig(dil).values[: min(m, n)]
    return np.clip(vals, 0.0, None)


def numeric_rank(a, rel_tol=1e-8):
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    sv = singular_values(a)
    if sv.size == 0 or sv[0] <= ABS_FLOOR:
        return 0
    return int(np.count_nonzero(sv > rel_tol * sv[0]))


def pseudo_inverse(a, tol=1e-6):
    """Moore-Penrose inverse via the eigendecomposition of the smaller Gram.

    Singular values below ``tol * sigma_max`` are treated as zero.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    a = as_matrix(a)
    m, n = a.shape
    if n <= m:
        eig = hermitian_eig(a.conj().T @ a)
        lam, w = eig.values, eig.vectors
        keep = _kept(lam, tol)
        wk = w[:, keep]
        # A+ = W L^-1 W* A*
        return (wk / lam[keep]) @ wk.conj().T @ a.conj().T
    eig = hermitian_eig(a @ a.conj().T)
    lam, u = eig.values, eig.vectors
    keep = _kept(lam, tol)
    uk = u[:, keep]
    return a.conj().T @ ((uk / lam[keep]) @ uk.conj().T)


def _kept(lam, tol):
    if lam.size == 0 or lam[0] <= ABS_FLOOR**2:
        return np.zeros(lam.shape, dtype=bool)
    return lam > max(tol * tol * lam[0], 0.0)


def column_space_projector(b, tol=1e-6):
    """Orthogonal projector onto the column space of ``b``.

    Equal to ``B (B* B)^+ B*``, built from the eigenvectors of ``B B*`` whose
    eigenvalues exceed ``(tol * sigma_max)^2``.
    """
    b = as_matrix(b)
    eig = hermitian_eig(b @ b.conj().T)
    u = eig.vectors[:, _kept(eig.values, tol)]
    p = u @ u.conj().T
    return 0.5 * (p + p.conj().T)
