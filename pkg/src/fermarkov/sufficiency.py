# src/fermarkov/sufficiency.py

"""Sufficient subalgebras: recovery conditional expectations and the three
equivalent numerical certificates.

A subalgebra is sufficient for a pair of faithful states when one completely
positive unital map recovers both states from their restrictions.  The three
certificates checked here:

  (ii)  the relative entropy of the pair equals that of the restrictions;
  (iii) the cocycle rho_phi^{it} rho_psi^{-it} lies in the subalgebra for all
        t.  The universal quantifier is decided algebraically: the cocycle's
        derivatives at t = 0 are the iterates of the mixed derivation
        z -> (log rho_phi) z - z (log rho_psi) on the identity, so the cocycle
        stays in the span for all t exactly when the identity belongs to the
        largest derivation-invariant subspace of the span.  Sampled-t unitary
        memberships are kept as a smoke test only.
  (iv)  the state-dependent recovery maps of the two states coincide as
        superoperators.

Channels are stored as dense superoperator matrices in the column-stacking
convention; complete positivity is certified through the Choi matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hs
from .entropy import StateDensity, cocycle, rel_entropy
from .errors import FlowUnstable, InvariantViolation, NotSufficient, SingularRestriction
from .spectral import EPS_FAITHFUL, mat_log, mat_pow
from .subalgebra import (
    RANK_RTOL,
    TOL_MEMBER,
    SubalgebraBasis,
    commutant,
    invariant_subalgebra,
    invariant_subspace_under,
    membership,
)

TOL_CHANNEL = 1e-9       # unitality / state-preservation residual
TOL_PETZ_EQ = 1e-8       # superoperator distance accepted as "equal maps"
_SAMPLED_TIMES = (0.3, 1.1)


def _vec(x: np.ndarray) -> np.ndarray:
    return np.asarray(x).flatten(order="F")


def _unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim, order="F")


def _sandwich(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Superoperator of x -> a x b (column stacking)."""
    return np.kron(b.T, a)


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """Linear map on matrix space with its complete-positivity certificate."""

    dim_in: int
    dim_out: int
    superop: np.ndarray        # (dim_out^2, dim_in^2), column-stacking
    kraus_rank: int
    unital: bool

    def apply(self, x: np.ndarray) -> np.ndarray:
        return _unvec(self.superop @ _vec(x), self.dim_out)

    def choi(self) -> np.ndarray:
        """sum_ij E_ij (x) Phi(E_ij); positive semidefinite iff the map is CP."""
        d_in, d_out = self.dim_in, self.dim_out
        j = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
        for r in range(d_in):
            for c in range(d_in):
                unit = np.zeros((d_in, d_in), dtype=complex)
                unit[r, c] = 1.0
                img = self.apply(unit)
                j[r * d_out:(r + 1) * d_out, c * d_out:(c + 1) * d_out] = img
        return j

    def choi_min_eig(self) -> float:
        return float(np.linalg.eigvalsh(hs.hermitian_part(self.choi()))[0])


def projection_channel(s: SubalgebraBasis) -> QuantumChannel:
    """The trace-preserving conditional expectation onto the span of s."""
    dim = s.dim_ambient
    cols = np.stack([_vec(b) for b in s.basis], axis=1) / np.sqrt(dim)
    sup = cols @ cols.conj().T
    return _finish_channel(sup, dim)


def _finish_channel(sup: np.ndarray, dim: int) -> QuantumChannel:
    eye = np.eye(dim, dtype=complex)
    unital = bool(np.max(np.abs(_unvec(sup @ _vec(eye), dim) - eye)) <= TOL_CHANNEL)
    ch = QuantumChannel(dim, dim, sup, 0, unital)
    ev = np.linalg.eigvalsh(hs.hermitian_part(ch.choi()))
    rank = int(np.sum(ev > RANK_RTOL * max(float(ev[-1]), 1.0)))
    return QuantumChannel(dim, dim, sup, rank, unital)


def petz_map(psi: StateDensity, s: SubalgebraBasis, *, eps_faithful: float = EPS_FAITHFUL) -> QuantumChannel:
    """State-dependent recovery map a -> r0^{-1/2} E(r^{1/2} a r^{1/2}) r0^{-1/2}
    with r the density of psi, r0 its projection onto the subalgebra and E the
    trace-preserving conditional expectation onto the subalgebra.

    Completely positive and unital; composing with the restricted state
    reproduces psi.
    """
    psi.require_faithful("recovery-map state")
    if not s.contains_identity:
        raise ValueError("recovery map needs a subalgebra containing the identity")
    rho = psi.rho
    rho0 = hs.hermitian_part(s.project(rho))
    w0 = np.linalg.eigvalsh(rho0)
    if w0[0] <= eps_faithful:
        raise SingularRestriction(
            f"restricted density min eigenvalue {w0[0]:.3e} <= {eps_faithful:.1e}"
        )
    half = mat_pow(rho, 0.5)
    inv_half0 = mat_pow(rho0, -0.5)
    proj = projection_channel(s).superop
    sup = _sandwich(inv_half0, inv_half0) @ proj @ _sandwich(half, half)
    return _finish_channel(sup, psi.dim)


@dataclass(frozen=True)
class SufficiencyReport:
    """Verdicts and residuals of the three equivalent sufficiency conditions."""

    rel_entropy_full: float
    rel_entropy_restricted: float
    rel_entropy_drop: float
    cocycle_residual: float          # algebraic orbit membership (all t)
    cocycle_sampled_residual: float  # unitary membership at sampled t
    petz_residual: float
    ok_rel_entropy: bool
    ok_cocycle: bool
    ok_petz: bool
    tol_equality: float
    tol_member: float

    @property
    def overall(self) -> bool:
        return self.ok_rel_entropy and self.ok_cocycle and self.ok_petz


def _cocycle_orbit_residual(
    log_phi: np.ndarray,
    log_psi: np.ndarray,
    s: SubalgebraBasis,
) -> float:
    """Residual of the identity against the largest subspace of the span kept
    invariant by the mixed derivation z -> Lphi z - z Lpsi.

    The derivatives of t -> rho_phi^{it} rho_psi^{-it} at 0 are the iterates
    of that derivation applied to the identity, so by analyticity the cocycle
    stays inside the span for every t exactly when the identity lies in this
    invariant subspace.  The descending subspace iteration is numerically
    stable where a direct power orbit would amplify roundoff.
    """
    dim = s.dim_ambient
    scale = max(1.0, float(np.linalg.norm(log_phi, 2) + np.linalg.norm(log_psi, 2)))
    stable = invariant_subspace_under(
        lambda stack: log_phi @ stack - stack @ log_psi, s.basis, scale=scale
    )
    eye = np.eye(dim, dtype=complex)
    if stable.shape[0] == 0:
        return 1.0
    return float(hs.hs_norm(eye - hs.project(stable, eye)))


def is_sufficient(
    phi: StateDensity,
    psi: StateDensity,
    s: SubalgebraBasis,
    *,
    tol_equality: float = 1e-8,
    tol_member: float = TOL_MEMBER,
) -> SufficiencyReport:
    """Run all three sufficiency certificates for the pair (phi, psi)."""
    phi.require_faithful("first state")
    psi.require_faithful("second state")

    rho_phi, rho_psi = phi.rho, psi.rho
    s_full = rel_entropy(rho_phi, rho_psi)
    rho_phi0 = hs.hermitian_part(s.project(rho_phi))
    rho_psi0 = hs.hermitian_part(s.project(rho_psi))
    s_rest = rel_entropy(rho_phi0, rho_psi0)
    drop = s_full - s_rest
    if drop < -1e-7:
        raise InvariantViolation(f"relative entropy increased under restriction: {drop:.3e}")

    log_phi, log_psi = mat_log(rho_phi), mat_log(rho_psi)
    orbit_res = _cocycle_orbit_residual(log_phi, log_psi, s)
    sampled = max(
        membership(cocycle(rho_phi, rho_psi, t), s, tol_member)[1] for t in _SAMPLED_TIMES
    )

    sup_phi = petz_map(phi, s).superop
    sup_psi = petz_map(psi, s).superop
    petz_res = float(np.linalg.norm(sup_phi - sup_psi) / max(1.0, np.linalg.norm(sup_psi)))

    return SufficiencyReport(
        rel_entropy_full=float(s_full),
        rel_entropy_restricted=float(s_rest),
        rel_entropy_drop=float(drop),
        cocycle_residual=float(orbit_res),
        cocycle_sampled_residual=float(sampled),
        petz_residual=petz_res,
        ok_rel_entropy=abs(drop) <= tol_equality,
        ok_cocycle=orbit_res <= tol_member * 2.0,
        ok_petz=petz_res <= TOL_PETZ_EQ,
        tol_equality=tol_equality,
        tol_member=tol_member,
    )


def factor_through(
    phi: StateDensity,
    psi: StateDensity,
    s: SubalgebraBasis,
    *,
    tol_member: float = TOL_MEMBER,
    tol_recon: float = 1e-8,
) -> np.ndarray:
    """Common positive factor d with rho_phi = rho_phi0 d and rho_psi = rho_psi0 d.

    Requires the subalgebra to be stable under the modular flow of psi and the
    pair to be sufficient; d then lies in the relative commutant of the
    subalgebra.
    """
    stable = invariant_subalgebra(mat_log(psi.rho), s, validate=False)
    if stable.size < s.size:
        raise FlowUnstable(
            f"subalgebra not stable under the reference flow: {stable.size} < {s.size}"
        )
    report = is_sufficient(phi, psi, s, tol_member=tol_member)
    if not report.overall:
        raise NotSufficient(
            "pair is not sufficient for the subalgebra: "
            f"entropy drop {report.rel_entropy_drop:.3e}, "
            f"cocycle residual {report.cocycle_residual:.3e}, "
            f"recovery-map residual {report.petz_residual:.3e}"
        )

    rho_phi0 = hs.hermitian_part(s.project(phi.rho))
    d = np.linalg.solve(rho_phi0, phi.rho)
    herm_defect = hs.hs_norm(d - d.conj().T)
    if herm_defect > 1e-7 * (1.0 + hs.hs_norm(d)):
        raise InvariantViolation(f"factor is not self-adjoint: defect {herm_defect:.3e}")
    d = hs.hermitian_part(d)
    min_eig = float(np.linalg.eigvalsh(d)[0])
    if min_eig < -1e-9:
        raise InvariantViolation(f"factor has negative eigenvalue {min_eig:.3e}")

    rel_comm = commutant(s)
    inside, res = membership(d, rel_comm, tol_member)
    if not inside:
        raise InvariantViolation(f"factor outside the relative commutant: residual {res:.3e}")

    rho_psi0 = hs.hermitian_part(s.project(psi.rho))
    recon_psi = hs.hs_norm(rho_psi0 @ d - psi.rho)
    recon_phi = hs.hs_norm(rho_phi0 @ d - phi.rho)
    if recon_psi > tol_recon or recon_phi > tol_recon:
        raise InvariantViolation(
            f"factor reconstruction residuals {recon_phi:.3e}, {recon_psi:.3e} exceed {tol_recon:.1e}"
        )
    return d
