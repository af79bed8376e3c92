# src/fermarkov/spectral.py

"""Hermitian eigendecomposition and spectral matrix functions.

Everything downstream (entropies, fractional powers, modular flow unitaries)
goes through these two entry points, so the hermiticity and faithfulness
tolerances live here.  Natural logarithms throughout; entropies derived from
these functions are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotHermitian, SingularMatrix

TOL_HERM = 1e-10        # max entrywise |M - M^*| accepted as self-adjoint
EPS_FAITHFUL = 1e-12    # spectrum floor below which log / negative powers fail


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues ascending, eigenvectors as unitary columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T

    def apply(self, values: np.ndarray) -> np.ndarray:
        """U diag(values) U^* for given spectral values."""
        u = self.eigenvectors
        return (u * values) @ u.conj().T


def require_hermitian(m: np.ndarray, tol: float = TOL_HERM, what: str = "matrix") -> None:
    defect = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if defect > tol:
        raise NotHermitian(f"{what} deviates from self-adjointness by {defect:.3e} > {tol:.1e}")


def _fix_phases(u: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rotate each column so its first component above tol is real positive."""
    u = u.copy()
    for k in range(u.shape[1]):
        col = u[:, k]
        nz = np.flatnonzero(np.abs(col) > tol)
        if nz.size:
            pivot = col[nz[0]]
            u[:, k] = col * (abs(pivot) / pivot)
    return u


def eig_hermitian(m: np.ndarray, tol_herm: float = TOL_HERM) -> SpectralDecomposition:
    """Eigendecomposition of a self-adjoint matrix.

    Eigenvalues come out ascending; eigenvector phases are fixed so repeated
    runs are deterministic.  Raises NotHermitian when the input is not
    self-adjoint within tol_herm.
    """
    require_hermitian(m, tol_herm)
    w, u = np.linalg.eigh((m + m.conj().T) / 2)
    return SpectralDecomposition(w, _fix_phases(u))


def mat_func(
    m: np.ndarray,
    kind: str,
    param: float | None = None,
    *,
    eps_faithful: float = EPS_FAITHFUL,
    tol_herm: float = TOL_HERM,
) -> np.ndarray:
    """Spectral function U f(lambda) U^* of a self-adjoint matrix.

    kind is one of "log", "exp", "pow" (param = exponent s) and
    "imaginary_pow" (param = t, returning the unitary m^{it}).  log, negative
    and imaginary powers require the spectrum to stay above eps_faithful.
    """
    dec = eig_hermitian(m, tol_herm)
    w = dec.eigenvalues
    if kind == "exp":
        return dec.apply(np.exp(w))
    if kind == "log":
        _require_floor(w, eps_faithful, "log")
        return dec.apply(np.log(w))
    if kind == "imaginary_pow":
        if param is None:
            raise ValueError("imaginary_pow requires the exponent t")
        _require_floor(w, eps_faithful, "imaginary_pow")
        return dec.apply(np.exp(1j * param * np.log(w)))
    if kind == "pow":
        if param is None:
            raise ValueError("pow requires the exponent s")
        s = float(param)
        if s < 0:
            _require_floor(w, eps_faithful, f"pow({s})")
        elif s != int(s):
            if w.size and w[0] < -tol_herm:
                raise SingularMatrix(
                    f"pow({s}) of indefinite matrix: min eigenvalue {w[0]:.3e}"
                )
            w = np.clip(w, 0.0, None)
        return dec.apply(np.power(w, s))
    raise ValueError(f"unknown matrix function tag {kind!r}")


def _require_floor(w: np.ndarray, eps: float, what: str) -> None:
    if w.size and w[0] <= eps:
        raise SingularMatrix(f"{what}: min eigenvalue {w[0]:.3e} <= floor {eps:.1e}")


def mat_log(m: np.ndarray, **kw) -> np.ndarray:
    return mat_func(m, "log", **kw)


def mat_exp(m: np.ndarray, **kw) -> np.ndarray:
    return mat_func(m, "exp", **kw)


def mat_pow(m: np.ndarray, s: float, **kw) -> np.ndarray:
    return mat_func(m, "pow", s, **kw)


def mat_imaginary_pow(m: np.ndarray, t: float, **kw) -> np.ndarray:
    """The unitary m^{it} for positive definite m."""
    return mat_func(m, "imaginary_pow", t, **kw)
