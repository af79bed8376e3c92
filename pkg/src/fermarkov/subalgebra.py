# src/fermarkov/subalgebra.py

"""Generic *-subalgebra machinery on matrix space.

Subalgebras are represented by tau-orthonormal basis stacks.  Commutants and
centers are solved as joint commutator nullspaces with a sketch-verify-refine
loop: a few random self-adjoint combinations of the basis act as constraints,
every candidate is then verified against the full basis, and failing
constraints are fed back until the candidate span is exact.

The invariant-subalgebra solver decides the "stable under e^{itH} . e^{-itH}
for all t" condition algebraically: the largest subspace V of the ambient span
with [H, V] contained in V equals, by analyticity of the flow, the set of
elements whose whole flow orbit stays in the ambient span.  Sampling t cannot
certify a universally quantified condition; the descending iteration can.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import hs
from .errors import DegenerateCenter, InvariantViolation, NotAnAlgebra
from .spectral import eig_hermitian, require_hermitian

RANK_RTOL = 1e-9     # relative singular-value threshold for rank decisions
TOL_MEMBER = 1e-9    # membership residual accepted as "inside the span"

_DEFAULT_SEED = 0x5EED  # reproducible extraction of central projections
_SKETCH_SIZE = 4        # random constraints tried before falling back to the basis


@dataclass(frozen=True, eq=False)
class SubalgebraBasis:
    """tau-orthonormal basis of a *-subalgebra of the D x D matrices."""

    dim_ambient: int
    basis: np.ndarray            # (size, D, D)
    contains_identity: bool
    parity_stable: bool | None = field(default=None)

    @property
    def size(self) -> int:
        return self.basis.shape[0]

    def project(self, x: np.ndarray) -> np.ndarray:
        return hs.project(self.basis, x)

    def membership(self, x: np.ndarray, tol: float = TOL_MEMBER) -> tuple[bool, float]:
        return membership(x, self, tol)


def subalgebra_from_matrices(
    mats: np.ndarray | list[np.ndarray],
    *,
    rtol: float = RANK_RTOL,
    parity_stable: bool | None = None,
) -> SubalgebraBasis:
    """Orthonormalize a spanning set into a SubalgebraBasis (span only; no closure)."""
    stack = np.stack([np.asarray(m, dtype=complex) for m in mats]) if isinstance(mats, list) else np.asarray(mats, dtype=complex)
    dim = stack.shape[-1]
    basis = hs.orthonormalize(stack, rtol)
    has_id = _contains_identity(basis, dim)
    return SubalgebraBasis(dim, basis, has_id, parity_stable)


def _contains_identity(basis: np.ndarray, dim: int) -> bool:
    eye = np.eye(dim, dtype=complex)
    res = hs.hs_norm(eye - hs.project(basis, eye))
    return res <= TOL_MEMBER


def membership(x: np.ndarray, s: SubalgebraBasis, tol: float = TOL_MEMBER) -> tuple[bool, float]:
    """(inside, residual): residual is the tau-norm of x minus its projection.

    Inside iff residual <= tol * (1 + ||x||).
    """
    residual = hs.hs_norm(x - hs.project(s.basis, x))
    return residual <= tol * (1.0 + hs.hs_norm(x)), float(residual)


def span_equality_residual(s1: SubalgebraBasis, s2: SubalgebraBasis) -> float:
    """Two-sided inclusion defect of the spans (max basis-element residual)."""
    r12 = hs.residual_norms(s2.basis, s1.basis)
    r21 = hs.residual_norms(s1.basis, s2.basis)
    both = np.concatenate([r12, r21])
    return float(both.max()) if both.size else 0.0


# --- span closure ------------------------------------------------------------

def span_closure(
    generators: list[np.ndarray] | np.ndarray,
    *,
    rtol: float = RANK_RTOL,
) -> SubalgebraBasis:
    """Smallest *-algebra containing the generators and the identity.

    Alternates product augmentation (left multiplication of the current span
    by generators and their adjoints) with re-orthonormalization until the
    dimension stabilizes.
    """
    gens_in = list(generators)
    if not gens_in:
        dim = 1
    else:
        dim = np.asarray(gens_in[0]).shape[-1]
    eye = np.eye(dim, dtype=complex)

    gens = []
    for g in gens_in:
        g = np.asarray(g, dtype=complex)
        for cand in (g, g.conj().T):
            nrm = hs.hs_norm(cand)
            if nrm > 1e-14:
                gens.append(cand / nrm)
    if not gens:
        return SubalgebraBasis(dim, eye[None, :, :], True, None)
    # the generated algebra only depends on the span of the generators, so an
    # orthonormal basis of that span is an exact, smaller generating set
    gens = list(hs.orthonormalize(np.stack(gens), rtol))

    basis = hs.orthonormalize(np.stack([eye] + gens), rtol)
    frontier = basis
    max_rounds = dim * dim + 1
    for _ in range(max_rounds):
        cands = np.concatenate([g @ frontier for g in gens])
        res = cands - hs.project_stack(basis, cands)
        # a residual only counts as a new direction relative to the size of the
        # product it came from: near-zero products carry amplified roundoff
        cand_norms = np.linalg.norm(hs.flatten(cands), axis=1) / np.sqrt(dim)
        res_norms = np.linalg.norm(hs.flatten(res), axis=1) / np.sqrt(dim)
        res = res[res_norms > rtol * np.maximum(1.0, cand_norms)]
        if res.shape[0] == 0:
            break
        frontier = hs.orthonormalize(res, rtol)
        basis = np.concatenate([basis, frontier])
    return SubalgebraBasis(dim, hs.orthonormalize(basis, rtol), True, None)


# --- commutant / center ------------------------------------------------------

def _hermitian_combos(basis: np.ndarray, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    m = basis.shape[0]
    combos = []
    for _ in range(count):
        w = rng.normal(size=m) + 1j * rng.normal(size=m)
        g = np.einsum("k,kij->ij", w, basis)
        g = hs.hermitian_part(g)
        nrm = hs.hs_norm(g)
        if nrm > 1e-14:
            combos.append(g / nrm)
    return combos


def _nullspace_full(constraints: list[np.ndarray], dim: int, rtol: float) -> np.ndarray:
    """Joint commutant of the constraints in the full matrix algebra.

    Accumulates M = sum_g L_g^* L_g for L_g = g^T (x) I - I (x) g (column
    stacking) and keeps the low-lying eigenvectors.  The eigenvalue threshold
    corresponds to the squared singular-value cut; candidates are verified
    against the full basis by the caller.
    """
    eye = np.eye(dim, dtype=complex)
    m = np.zeros((dim * dim, dim * dim), dtype=complex)
    for g in constraints:
        gt = g.T
        m += np.kron(g.conj() @ gt, eye)
        m += np.kron(eye, g.conj().T @ g)
        m -= np.kron(g.conj(), g)
        m -= np.kron(gt, g.conj().T)
    w, u = np.linalg.eigh(hs.hermitian_part(m))
    lam_max = max(float(w[-1]), float(len(constraints)))
    keep = w <= max(rtol * lam_max, 1e-14 * lam_max)
    cols = u[:, keep]
    # column-stacked vec: matrix = vec.reshape(D, D, order='F')
    stack = np.stack([cols[:, i].reshape(dim, dim, order="F") for i in range(cols.shape[1])]) \
        if cols.shape[1] else np.zeros((0, dim, dim), dtype=complex)
    return hs.orthonormalize(stack, RANK_RTOL) if stack.shape[0] else stack


def _nullspace_in_ambient(
    constraints: list[np.ndarray], ambient: np.ndarray, rtol: float
) -> np.ndarray:
    """Joint commutant of the constraints inside the span of an ambient stack."""
    dim = ambient.shape[-1]
    m_amb = ambient.shape[0]
    gram = np.zeros((m_amb, m_amb), dtype=complex)
    for g in constraints:
        rows = hs.flatten(ambient @ g - g @ ambient) / np.sqrt(dim)
        gram += rows.conj() @ rows.T
    w, u = np.linalg.eigh(hs.hermitian_part(gram))
    lam_max = max(float(w[-1]) if w.size else 0.0, float(len(constraints)))
    keep = w <= max(rtol * lam_max, 1e-14 * lam_max)
    coeff = u[:, keep].T                 # rows are coefficient vectors
    stack = hs.unflatten(coeff @ hs.flatten(ambient), dim)
    return stack


def _worst_commutator(x: np.ndarray, basis: np.ndarray) -> float:
    comms = basis @ x - x @ basis
    return float(np.linalg.norm(hs.flatten(comms), axis=1).max() / np.sqrt(x.shape[-1]))


def commutant(
    s: SubalgebraBasis,
    ambient: SubalgebraBasis | None = None,
    *,
    rng: np.random.Generator | None = None,
    rtol: float = 1e-11,
    tol: float = TOL_MEMBER,
    max_rounds: int = 10,
) -> SubalgebraBasis:
    """Elements of the ambient algebra (default: everything) commuting with s.

    Solves the linear system [x, b] = 0 against a sketch of constraints and
    refines with directly verified commutator residuals until exact.
    """
    rng = rng if rng is not None else np.random.default_rng(_DEFAULT_SEED)
    dim = s.dim_ambient
    if s.size <= _SKETCH_SIZE:
        constraints = [b / hs.hs_norm(b) for b in s.basis]
    else:
        constraints = _hermitian_combos(s.basis, _SKETCH_SIZE, rng)

    for _ in range(max_rounds):
        if ambient is None:
            stack = _nullspace_full(constraints, dim, rtol)
        else:
            stack = _nullspace_in_ambient(constraints, ambient.basis, rtol)
        if stack.shape[0] == 0:
            break
        worst = np.array([_worst_commutator(x, s.basis) for x in stack])
        if worst.max() <= tol:
            break
        # feed the worst offender's most violated constraint back in
        bad = stack[int(worst.argmax())]
        comms = s.basis @ bad - bad @ s.basis
        k = int(np.linalg.norm(hs.flatten(comms), axis=1).argmax())
        constraints = constraints + [s.basis[k] / hs.hs_norm(s.basis[k])]
    else:
        raise InvariantViolation("commutant refinement did not converge")

    has_id = _contains_identity(stack, dim) if stack.shape[0] else False
    return SubalgebraBasis(dim, stack, has_id, None)


def center(s: SubalgebraBasis, *, rng: np.random.Generator | None = None) -> SubalgebraBasis:
    """Basis of s intersected with its commutant."""
    if not s.contains_identity:
        raise ValueError("center requires a subalgebra containing the identity")
    return commutant(s, ambient=s, rng=rng)


def minimal_central_projections(
    s: SubalgebraBasis,
    *,
    rng: np.random.Generator | None = None,
    retries: int = 5,
    gap: float = 1e-8,
) -> list[np.ndarray]:
    """Minimal central projections, orthogonal and summing to the identity.

    A random self-adjoint central element is spectrally decomposed; eigenvalue
    clusters map to the projections.  Distinct blocks get distinct values
    almost surely, so a cluster count below the center dimension triggers a
    retry with a fresh element.
    """
    rng = rng if rng is not None else np.random.default_rng(_DEFAULT_SEED)
    z = center(s, rng=rng)
    m = z.size
    dim = s.dim_ambient
    if m == 0:
        raise DegenerateCenter("empty center basis")

    herm = []
    for b in z.basis:
        herm.extend([hs.hermitian_part(b), hs.hermitian_part(1j * b)])
    herm_basis = hs.orthonormalize(np.stack(herm), RANK_RTOL)

    for _ in range(retries):
        weights = rng.normal(size=herm_basis.shape[0])
        el = np.einsum("k,kij->ij", weights, herm_basis)
        el = hs.hermitian_part(el)
        w, u = np.linalg.eigh(el)
        spread = max(1.0, float(w[-1] - w[0]))
        splits = np.flatnonzero(np.diff(w) > gap * spread)
        bounds = np.concatenate([[0], splits + 1, [dim]])
        if len(bounds) - 1 != m:
            continue
        projections = []
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            cols = u[:, lo:hi]
            projections.append(cols @ cols.conj().T)
        if _validate_projection_family(projections, dim):
            order = np.argsort([-float(np.trace(p).real) for p in projections], kind="stable")
            return [projections[i] for i in order]
    raise DegenerateCenter(f"failed to separate {m} central blocks in {retries} attempts")


def _validate_projection_family(projections: list[np.ndarray], dim: int, tol: float = 1e-10) -> bool:
    total = np.zeros((dim, dim), dtype=complex)
    for i, p in enumerate(projections):
        if np.max(np.abs(p @ p - p)) > tol or np.max(np.abs(p - p.conj().T)) > tol:
            return False
        for q in projections[i + 1:]:
            if np.max(np.abs(p @ q)) > tol:
                return False
        total += p
    return np.max(np.abs(total - np.eye(dim))) <= tol


# --- modular-flow invariant subalgebra ----------------------------------------

def invariant_subalgebra(
    h: np.ndarray,
    ambient: SubalgebraBasis,
    *,
    rtol: float = RANK_RTOL,
    tol_member: float = TOL_MEMBER,
    validate: bool = True,
    flow_times: tuple[float, ...] = (0.1, 0.7, 1.3),
) -> SubalgebraBasis:
    """Largest subspace V of the ambient span with [h, V] inside V.

    Equals the set of elements whose orbit under x -> e^{ith} x e^{-ith} stays
    in the ambient span for every real t.  The result is verified to be a
    *-algebra and spot-checked for flow stability at a few sampled times.
    """
    require_hermitian(h, what="flow generator")
    try:
        return _invariant_iteration(h, ambient, rtol, tol_member, validate, flow_times)
    except NotAnAlgebra:
        # closure verification failure signals a rank misjudgment: tighten once
        return _invariant_iteration(h, ambient, rtol / 100, tol_member, validate, flow_times)


def invariant_subspace_under(
    apply_map,
    ambient_basis: np.ndarray,
    *,
    rtol: float = RANK_RTOL,
    scale: float = 1.0,
) -> np.ndarray:
    """Largest subspace V of the span of a tau-orthonormal stack with
    apply_map(V) inside V, via the descending iteration
    V_{k+1} = {x in V_k : apply_map(x) in V_k}.

    apply_map acts on stacks (m, D, D) -> (m, D, D) and must be linear.
    """
    dim = ambient_basis.shape[-1]
    basis = ambient_basis
    for _ in range(ambient_basis.shape[0] + 1):
        m = basis.shape[0]
        if m == 0:
            return basis
        image = apply_map(basis)
        out = image - hs.project_stack(basis, image)
        g = hs.flatten(out) / np.sqrt(dim)
        u, sing, _ = np.linalg.svd(g, full_matrices=False)
        sing = np.concatenate([sing, np.zeros(m - sing.size)])
        cut = rtol * max(float(sing[0]) if sing.size else 0.0, scale, 1.0)
        keep = sing <= cut
        if keep.all():
            return basis
        coeff = u[:, keep].conj().T
        basis = hs.unflatten(coeff @ hs.flatten(basis), dim)
    raise InvariantViolation("descending invariant-subspace iteration did not stabilize")


def _invariant_iteration(h, ambient, rtol, tol_member, validate, flow_times) -> SubalgebraBasis:
    dim = ambient.dim_ambient
    scale = float(np.linalg.norm(h, 2))
    basis = invariant_subspace_under(
        lambda stack: h @ stack - stack @ h, ambient.basis, rtol=rtol, scale=scale
    )
    result = SubalgebraBasis(dim, basis, _contains_identity(basis, dim), None)
    if validate and basis.shape[0]:
        _verify_algebra_closure(result, tol_member)
        _verify_flow_stability(h, result, flow_times, tol_member)
    return result


def _verify_algebra_closure(s: SubalgebraBasis, tol: float, max_pairs: int = 400) -> None:
    m = s.size
    pairs = [(i, j) for i in range(m) for j in range(m)]
    if len(pairs) > max_pairs:
        rng = np.random.default_rng(_DEFAULT_SEED)
        idx = rng.choice(len(pairs), size=max_pairs, replace=False)
        pairs = [pairs[i] for i in idx]
    products = np.stack([s.basis[i] @ s.basis[j] for i, j in pairs])
    res = hs.residual_norms(s.basis, products)
    scale = 1.0 + np.linalg.norm(hs.flatten(products), axis=1) / np.sqrt(s.dim_ambient)
    worst = float((res / scale).max())
    if worst > tol:
        raise NotAnAlgebra(f"product closure residual {worst:.3e} exceeds {tol:.1e}")
    adj = np.conj(np.transpose(s.basis, (0, 2, 1)))
    adj_res = float(hs.residual_norms(s.basis, adj).max())
    if adj_res > 2 * tol:
        raise NotAnAlgebra(f"adjoint closure residual {adj_res:.3e} exceeds {tol:.1e}")


def _verify_flow_stability(h, s: SubalgebraBasis, times, tol: float) -> None:
    dec = eig_hermitian(h)
    sample = s.basis if s.size <= 16 else s.basis[:: max(1, s.size // 16)]
    for t in times:
        u = dec.apply(np.exp(1j * t * dec.eigenvalues))
        flowed = u @ sample @ u.conj().T
        res = hs.residual_norms(s.basis, flowed)
        if res.max() > 100 * tol:
            raise NotAnAlgebra(f"flow stability residual {res.max():.3e} at t={t}")


# --- parity helpers -----------------------------------------------------------

def parity_split(
    s: SubalgebraBasis, parity_unitary: np.ndarray, *, rtol: float = RANK_RTOL
) -> tuple[np.ndarray, np.ndarray, float]:
    """Even and odd tau-orthonormal stacks of a parity-stable span.

    Returns (even_stack, odd_stack, stability_residual) where the residual
    measures how far conjugation by the parity unitary maps the span outside
    itself.
    """
    v = parity_unitary
    conj = v @ s.basis @ v
    stability = float(hs.residual_norms(s.basis, conj).max()) if s.size else 0.0
    even = hs.orthonormalize((s.basis + conj) / 2, rtol)
    odd = hs.orthonormalize((s.basis - conj) / 2, rtol)
    return even, odd, stability
