# src/fermarkov/entropy.py

"""State densities, restrictions, entropies and the strong-subadditivity gap.

Two pictures of a restriction coexist and the scale conventions between them
matter:

  - small picture: the restriction to the algebra of a site set I is a
    2^|I| x 2^|I| density with unit trace, obtained from the trace pairings
    with the matrix units (used for entropies);
  - embedded picture: E_I(rho) is an element of the full algebra and is the
    density (unit trace w.r.t. the full Tr) of the state composed with the
    conditional expectation (used for logs, modular flows and cocycles).

The two differ by the factor 2^{n - |I|} through the matrix-unit isomorphism.
All entropies are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.special import xlogy

from . import hs
from .car import CarAlgebra, RegionPartition, cond_expect, matrix_units, parity_automorphism
from .errors import InvariantViolation, NotFaithful, SingularReference
from .spectral import EPS_FAITHFUL, TOL_HERM, eig_hermitian, mat_imaginary_pow, require_hermitian

TOL_EQUALITY = 1e-8   # gap below which the entropy inequality counts as saturated
TOL_TRACE = 1e-10
TOL_PSD = 1e-12


@dataclass(frozen=True, eq=False)
class StateDensity:
    """Faithful-or-not density matrix on the full algebra, Tr rho = 1."""

    alg: CarAlgebra
    rho: np.ndarray
    min_eig: float

    @classmethod
    def from_matrix(cls, alg: CarAlgebra, rho: np.ndarray) -> "StateDensity":
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (alg.dim, alg.dim):
            raise ValueError(f"density shape {rho.shape} does not match dimension {alg.dim}")
        require_hermitian(rho, TOL_HERM, "density")
        tr = float(np.trace(rho).real)
        if abs(tr - 1.0) > TOL_TRACE:
            raise ValueError(f"density trace {tr!r} deviates from 1 by more than {TOL_TRACE}")
        w = np.linalg.eigvalsh(hs.hermitian_part(rho))
        if w[0] < -TOL_PSD:
            raise ValueError(f"density has negative eigenvalue {w[0]:.3e}")
        return cls(alg, hs.hermitian_part(rho), float(w[0]))

    @property
    def dim(self) -> int:
        return self.alg.dim

    @property
    def is_faithful(self) -> bool:
        return self.min_eig > EPS_FAITHFUL

    def require_faithful(self, what: str = "state") -> None:
        if not self.is_faithful:
            raise NotFaithful(f"{what}: min eigenvalue {self.min_eig:.3e} <= {EPS_FAITHFUL:.1e}")

    def parity_defect(self) -> float:
        """Entrywise deviation of rho from its parity conjugate."""
        return float(np.max(np.abs(self.rho - parity_automorphism(self.alg, self.rho))))

    def is_even(self, tol: float = 1e-10) -> bool:
        return self.parity_defect() <= tol


@dataclass(frozen=True)
class SsaReport:
    """Entropy combination S(AB) + S(BC) - S(ABC) - S(B) and its verdict."""

    gap: float
    s_total: float
    s_ab: float
    s_bc: float
    s_b: float
    saturated: bool
    tol_equality: float
    cross_residual: float


def restrict_density(state: StateDensity, region: Iterable[int]) -> np.ndarray:
    """Unit-trace density of the restriction on the 2^|I|-dimensional algebra."""
    region = tuple(sorted(int(i) for i in region))
    if region == state.alg.sites:
        return state.rho.copy()
    if not region:
        return np.ones((1, 1), dtype=complex)
    family = matrix_units(state.alg, region)
    small = family.trace_pairings(state.rho)
    small = hs.hermitian_part(small)
    w = np.linalg.eigvalsh(small)
    if w[0] < -1e-10 or abs(np.trace(small).real - 1.0) > 1e-8:
        raise InvariantViolation(
            f"restriction to {region} not a density: min eig {w[0]:.3e}, trace {np.trace(small).real!r}"
        )
    return small


def embedded_restriction(state: StateDensity, region: Iterable[int]) -> np.ndarray:
    """E_I(rho): the density of the state composed with the conditional
    expectation, as a unit-trace element of the full algebra."""
    return hs.hermitian_part(cond_expect(state.alg, state.rho, region))


def vn_entropy(density: np.ndarray) -> float:
    """-sum lambda log lambda in nats, with 0 log 0 = 0."""
    w = np.linalg.eigvalsh(hs.hermitian_part(np.asarray(density, dtype=complex)))
    w = np.clip(w, 0.0, None)
    return float(-np.sum(xlogy(w, w)))


def rel_entropy(rho: np.ndarray, sigma: np.ndarray, *, eps_faithful: float = EPS_FAITHFUL) -> float:
    """Tr rho (log rho - log sigma) in nats; sigma must be faithful."""
    dr = eig_hermitian(np.asarray(rho, dtype=complex))
    ds = eig_hermitian(np.asarray(sigma, dtype=complex))
    if ds.eigenvalues[0] <= eps_faithful:
        raise SingularReference(
            f"reference density min eigenvalue {ds.eigenvalues[0]:.3e} <= {eps_faithful:.1e}"
        )
    lam = np.clip(dr.eigenvalues, 0.0, None)
    overlaps = np.abs(dr.eigenvectors.conj().T @ ds.eigenvectors) ** 2
    term1 = float(np.sum(xlogy(lam, lam)))
    term2 = float(lam @ overlaps @ np.log(ds.eigenvalues))
    return term1 - term2


def ssa_gap(
    state: StateDensity,
    regions: RegionPartition,
    *,
    tol_equality: float = TOL_EQUALITY,
    cross_check: bool = True,
) -> SsaReport:
    """Gap of the strong subadditivity combination for the given regions.

    The gap is computed from the four restriction entropies and cross-checked
    against the equivalent difference of relative entropies of the embedded
    restrictions; a disagreement beyond 1e-8 raises InvariantViolation.
    """
    state.require_faithful()
    if regions.n_sites != state.alg.n_sites:
        raise ValueError("regions do not match the state's site count")
    s_total = vn_entropy(state.rho)
    s_ab = vn_entropy(restrict_density(state, regions.AB))
    s_bc = vn_entropy(restrict_density(state, regions.BC))
    s_b = vn_entropy(restrict_density(state, regions.B))
    gap = s_ab + s_bc - s_total - s_b

    cross_residual = 0.0
    if cross_check:
        rho_bc = embedded_restriction(state, regions.BC)
        rho_ab = embedded_restriction(state, regions.AB)
        rho_b = embedded_restriction(state, regions.B)
        alt = rel_entropy(state.rho, rho_bc) - rel_entropy(rho_ab, rho_b)
        cross_residual = abs(gap - alt)
        if cross_residual > 1e-8:
            raise InvariantViolation(
                f"entropy gap {gap:.3e} disagrees with relative-entropy route by {cross_residual:.3e}"
            )
    return SsaReport(
        gap=float(gap),
        s_total=s_total,
        s_ab=s_ab,
        s_bc=s_bc,
        s_b=s_b,
        saturated=gap <= tol_equality,
        tol_equality=tol_equality,
        cross_residual=float(cross_residual),
    )


def cocycle(rho: np.ndarray, sigma: np.ndarray, t: float, *, eps_faithful: float = EPS_FAITHFUL) -> np.ndarray:
    """u_t = rho^{it} sigma^{-it}; unitary for faithful positive inputs.

    Any positive rescaling of either input only changes u_t by a phase, so
    membership tests against subalgebra spans are scale independent.
    """
    wr = np.linalg.eigvalsh(hs.hermitian_part(np.asarray(rho, dtype=complex)))
    ws = np.linalg.eigvalsh(hs.hermitian_part(np.asarray(sigma, dtype=complex)))
    if wr[0] <= eps_faithful or ws[0] <= eps_faithful:
        raise NotFaithful(
            f"cocycle needs faithful densities: min eigs {wr[0]:.3e}, {ws[0]:.3e}"
        )
    return mat_imaginary_pow(rho, t) @ mat_imaginary_pow(sigma, -t)
