# src/fermarkov/hs.py

"""Hilbert-Schmidt geometry on matrix space.

All inner products are taken with respect to the normalized trace
tau(x) = Tr(x) / D on D x D matrices, so the identity has norm 1 and the
basis elements stored throughout the package are tau-orthonormal.
"""

from __future__ import annotations

import numpy as np


def hs_inner(x: np.ndarray, y: np.ndarray) -> complex:
    """tau(x^* y) = <x, y> / D."""
    return complex(np.vdot(x, y) / x.shape[-1])


def hs_norm(x: np.ndarray) -> float:
    """Frobenius norm normalized so that ||I|| = 1."""
    return float(np.linalg.norm(x) / np.sqrt(x.shape[-1]))


def flatten(stack: np.ndarray) -> np.ndarray:
    """(m, D, D) stack -> (m, D*D) rows."""
    return stack.reshape(stack.shape[0], -1)


def unflatten(rows: np.ndarray, dim: int) -> np.ndarray:
    """(m, D*D) rows -> (m, D, D) stack."""
    return rows.reshape(-1, dim, dim)


def orthonormal_rows(rows: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis (standard inner product) of the row span via SVD.

    Rows with singular value <= rtol * s_max are treated as dependent.
    """
    if rows.shape[0] == 0:
        return rows
    _, s, vh = np.linalg.svd(rows, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return vh[:0]
    return vh[s > rtol * s[0]]


def orthonormalize(stack: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    """tau-orthonormal basis of the span of a (m, D, D) stack."""
    dim = stack.shape[-1]
    rows = orthonormal_rows(flatten(stack), rtol)
    # standard-orthonormal rows have tau-norm 1/sqrt(D)
    return unflatten(rows * np.sqrt(dim), dim)


def coeffs(basis: np.ndarray, x: np.ndarray) -> np.ndarray:
    """tau-inner-product coefficients of x against a tau-orthonormal stack."""
    dim = x.shape[-1]
    # conj the small vector, not the big stack
    return (flatten(basis) @ x.reshape(-1).conj()).conj() / dim


def project(basis: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Orthogonal projection of x onto the span of a tau-orthonormal stack."""
    c = coeffs(basis, x)
    return (c @ flatten(basis)).reshape(x.shape)


def project_stack(basis: np.ndarray, stack: np.ndarray) -> np.ndarray:
    """Project every matrix of a stack onto the span of a tau-orthonormal stack."""
    dim = stack.shape[-1]
    rows = flatten(stack)
    b = flatten(basis)
    return unflatten((rows @ b.conj().T / dim) @ b, dim)


def residual_norms(basis: np.ndarray, stack: np.ndarray) -> np.ndarray:
    """tau-norm of the component of each stack element orthogonal to the span."""
    res = stack - project_stack(basis, stack)
    return np.linalg.norm(flatten(res), axis=1) / np.sqrt(stack.shape[-1])


def hermitian_part(x: np.ndarray) -> np.ndarray:
    return (x + x.conj().T) / 2
