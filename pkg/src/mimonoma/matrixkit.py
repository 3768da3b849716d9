"""Dense complex linear algebra used throughout the simulator.

Matrices are ``numpy`` ``complex128`` arrays. Every routine accepts either a
single matrix of shape ``(rows, cols)`` or a stack ``(..., rows, cols)``;
stacks are processed in one vectorised pass, which is what makes 10^6-trial
Monte Carlo runs practical. The factorisations themselves (Householder QR,
triangular solves, inversion) are written here on top of plain array
arithmetic; ``numpy.linalg`` is deliberately not used so the test-suite can
use it as an independent oracle.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import SingularMatrixError

SINGULAR_RTOL = 1e-12
HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class QrFactors:
    """Full QR factors: ``q`` is square unitary, ``r`` has the input's shape."""

    q: np.ndarray
    r: np.ndarray


def as_matrix(a, name="matrix"):
    """Coerce ``a`` to a complex array with at least two dimensions.

    Raises ``ValueError`` for non-finite entries or fewer than two axes.
    """
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim < 2:
        raise ValueError(f"{name} must have at least 2 dimensions, got shape {arr.shape}")
    if arr.shape[-1] == 0 or arr.shape[-2] == 0:
        raise ValueError(f"{name} must have positive dimensions, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _abs2(a):
    return a.real * a.real + a.imag * a.imag


def hermitian(a):
    """Conjugate transpose over the last two axes."""
    a = as_matrix(a)
    return np.conj(np.swapaxes(a, -1, -2))


def matmul(a, b):
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[-1] != b.shape[-2]:
        raise ValueError(f"cannot multiply {a.shape} by {b.shape}: inner dimensions differ")
    return a @ b


def identity(n, batch=()):
    eye = np.eye(n, dtype=np.complex128)
    if not batch:
        return eye
    return np.broadcast_to(eye, tuple(batch) + (n, n)).copy()


def qr_decompose(a):
    """Householder QR with a real, non-negative diagonal in ``r``.

    Parameters
    ----------
    a : array_like, shape (..., rows, cols)
        Input with ``rows >= cols``.

    Returns
    -------
    QrFactors
        ``q`` of shape (..., rows, rows) and ``r`` of shape (..., rows, cols)
        with ``q @ r == a``. The phase of each diagonal entry of ``r`` is
        moved into the matching column of ``q``. Rank deficiency is not an
        error; ``r`` then carries (near-)zero diagonal entries.
    """
    a = as_matrix(a)
    *batch, rows, cols = a.shape
    if rows < cols:
        raise ValueError(f"qr_decompose needs rows >= cols, got {rows}x{cols}")

    r = a.reshape(-1, rows, cols).copy()
    size = r.shape[0]
    q = identity(rows, (size,))

    for k in range(cols):
        x = r[:, k:, k]
        norm = np.sqrt(_abs2(x).sum(axis=1))
        x0 = x[:, 0]
        mag0 = np.abs(x0)
        phase = np.ones_like(x0)
        nz = mag0 > 0
        phase[nz] = x0[nz] / mag0[nz]

        v = x.copy()
        v[:, 0] += phase * norm
        vv = _abs2(v).sum(axis=1)
        tau = np.zeros(size)
        active = vv > 0
        tau[active] = 2.0 / vv[active]

        # R <- (I - tau v v^H) R ;  Q <- Q (I - tau v v^H)
        vh_r = (np.conj(v)[:, :, None] * r[:, k:, k:]).sum(axis=1)
        r[:, k:, k:] -= (tau[:, None] * v)[:, :, None] * vh_r[:, None, :]
        q_v = (q[:, :, k:] * v[:, None, :]).sum(axis=2)
        q[:, :, k:] -= (tau[:, None] * q_v)[:, :, None] * np.conj(v)[:, None, :]
        r[:, k + 1:, k] = 0.0

    diag = r[:, np.arange(cols), np.arange(cols)]
    mag = np.abs(diag)
    phase = np.ones_like(diag)
    nz = mag > 0
    phase[nz] = diag[nz] / mag[nz]
    r[:, :cols, :] *= np.conj(phase)[:, :, None]
    q[:, :, :cols] *= phase[:, None, :]
    r[:, np.arange(cols), np.arange(cols)] = mag

    return QrFactors(
        q=q.reshape(*batch, rows, rows),
        r=r.reshape(*batch, rows, cols),
    )


def solve_upper_triangular(r, b):
    """Back substitution for ``r @ x = b`` with ``r`` upper triangular.

    No singularity check; callers screen the diagonal first.
    """
    n = r.shape[-1]
    x = np.zeros(np.broadcast_shapes(r.shape[:-2], b.shape[:-2]) + b.shape[-2:], dtype=np.complex128)
    for i in range(n - 1, -1, -1):
        acc = b[..., i, :]
        if i + 1 < n:
            acc = acc - (r[..., i, i + 1:, None] * x[..., i + 1:, :]).sum(axis=-2)
        x[..., i, :] = acc / r[..., i, i][..., None]
    return x


def singular_mask(r):
    """Flag stack entries whose triangular factor has a negligible pivot.

    A pivot counts as negligible below ``SINGULAR_RTOL`` times the largest
    diagonal magnitude of the same matrix.
    """
    d = np.abs(np.diagonal(r, axis1=-2, axis2=-1))
    scale = d.max(axis=-1)
    return ~(d.min(axis=-1) > SINGULAR_RTOL * scale)


def inverse_with_mask(a):
    """Inverse of each square matrix in the stack plus a singularity mask.

    Entries flagged singular hold garbage (possibly inf/nan) and must be
    discarded by the caller.
    """
    a = as_matrix(a)
    if a.shape[-1] != a.shape[-2]:
        raise ValueError(f"expected square matrices, got {a.shape[-2:]}")
    *batch, n, _ = a.shape
    f = qr_decompose(a.reshape(-1, n, n))
    bad = singular_mask(f.r)
    r = f.r
    if np.any(bad):
        r = r.copy()
        idx = np.arange(n)
        fixed = r[bad]
        fixed[:, idx, idx] = 1.0  # placeholder pivots, result discarded
        r[bad] = fixed
    inv = solve_upper_triangular(r, np.conj(np.swapaxes(f.q, -1, -2)))
    return inv.reshape(*batch, n, n), bad.reshape(batch)


def inverse(a):
    """General square inverse through QR; raises on a singular input."""
    inv, bad = inverse_with_mask(a)
    if np.any(bad):
        raise SingularMatrixError("matrix is numerically singular", mask=bad)
    return inv


def invert_hermitian_positive(a):
    """Inverse of a Hermitian positive definite matrix (or stack of them).

    Raises
    ------
    ValueError
        If the input is not square or not Hermitian within 1e-10.
    SingularMatrixError
        If a QR pivot falls below 1e-12 of the largest one.
    """
    a = as_matrix(a)
    if a.shape[-1] != a.shape[-2]:
        raise ValueError(f"expected square matrices, got {a.shape[-2:]}")
    skew = np.abs(a - np.conj(np.swapaxes(a, -1, -2))).max(axis=(-2, -1))
    scale = np.maximum(1.0, np.abs(a).max(axis=(-2, -1)))
    if np.any(skew > HERMITIAN_TOL * scale):
        raise ValueError("matrix is not Hermitian within tolerance")
    return inverse(a)
