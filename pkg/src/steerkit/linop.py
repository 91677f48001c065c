"""Dense complex linear algebra used throughout the package.

Operators are plain ``numpy`` arrays of dtype ``complex128``.  The helpers in
this module validate them against the package tolerances and provide the few
kernels everything else builds on (Kronecker products, partial traces,
Hermitian exponentials, norms).
"""

from __future__ import annotations

import numpy as np

from steerkit.errors import DimensionError, InvalidOperator

HERMITICITY_TOL = 1e-12
PSD_TOL = 1e-10
SOLVER_TOL = 1e-7


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a finite 2-D complex array (a copy)."""
    a = np.array(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidOperator("matrix has non-finite entries")
    return a


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + np.swapaxes(m, -1, -2).conj())


def is_hermitian(m, tol: float = HERMITICITY_TOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    scale = max(1.0, np.linalg.norm(m))
    return bool(np.linalg.norm(m - m.conj().T) <= tol * scale)


def as_hermitian(m, tol: float = HERMITICITY_TOL) -> np.ndarray:
    """Validate ``m`` as Hermitian and return its exactly symmetrized copy."""
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"Hermitian operator must be square, got {a.shape}")
    if not is_hermitian(a, tol):
        raise InvalidOperator("matrix is not Hermitian within tolerance")
    return hermitian_part(a)


def as_density(m, tol: float = PSD_TOL) -> np.ndarray:
    """Validate a density operator: Hermitian, PSD and unit trace."""
    rho = as_hermitian(m)
    if np.linalg.eigvalsh(rho)[0] < -tol:
        raise InvalidOperator("density operator has a negative eigenvalue")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise InvalidOperator(f"density operator has trace {np.trace(rho).real!r}")
    return rho


def ket(amplitudes, tol: float = HERMITICITY_TOL) -> np.ndarray:
    v = np.array(amplitudes, dtype=complex).reshape(-1)
    if abs(np.linalg.norm(v) - 1.0) > tol:
        raise InvalidOperator("ket is not normalized")
    return v


def projector(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def tensor(a, b) -> np.ndarray:
    """Kronecker product, A-major: row index ``i_A * dim_B + i_B``."""
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace(m, dims: tuple[int, int], keep: str = "B") -> np.ndarray:
    """Trace out one factor of a bipartite operator on ``A (x) B``.

    ``keep`` names the subsystem that survives ("A" or "B").
    """
    d_a, d_b = (int(d) for d in dims)
    m = as_matrix(m)
    if m.shape != (d_a * d_b, d_a * d_b):
        raise DimensionError(f"matrix of shape {m.shape} does not act on {d_a}x{d_b}")
    t = m.reshape(d_a, d_b, d_a, d_b)
    if keep == "B":
        return np.einsum("ijik->jk", t)
    if keep == "A":
        return np.einsum("ijkj->ik", t)
    raise ValueError(f"keep must be 'A' or 'B', not {keep!r}")


def eigh(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of the Hermitian part of ``h``."""
    try:
        return np.linalg.eigh(hermitian_part(np.asarray(h, dtype=complex)))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise InvalidOperator(f"eigendecomposition failed: {exc}") from exc


def matrix_exp_hermitian(h, scale: float = 1.0) -> np.ndarray:
    """``exp(scale * h)`` for Hermitian ``h`` via its eigendecomposition."""
    w, v = eigh(as_hermitian(h))
    return hermitian_part((v * np.exp(scale * w)) @ v.conj().T)


def norms(m) -> tuple[float, float]:
    """Return ``(operator_norm, frobenius_norm)``."""
    m = as_matrix(m)
    op = float(np.linalg.norm(m, 2)) if m.size else 0.0
    return op, float(np.linalg.norm(m, "fro"))


def max_eigenvalue(h: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(hermitian_part(np.asarray(h)))[-1])


def min_eigenvalue(h: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(hermitian_part(np.asarray(h)))[0])


def matrix_to_json(m) -> list:
    """Nested row-major list of ``[re, im]`` pairs."""
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(data) -> np.ndarray:
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidOperator(f"malformed matrix JSON: {exc}") from exc
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise InvalidOperator(f"matrix JSON must have shape (rows, cols, 2), got {arr.shape}")
    return as_matrix(arr[..., 0] + 1j * arr[..., 1])
