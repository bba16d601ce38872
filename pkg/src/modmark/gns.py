"""GNS representation of a faithful state in matrix coordinates.

Vectors are block matrices with the inner product
<xi, eta> = sum_k Tr(eta_k^+ xi_k); an algebra element x embeds as
x D^{1/2}, so the cyclic unit vector is D^{1/2} itself.  Every modular object
is then a closed-form function of the density's eigendecomposition:

    conjugation   J(xi)      = xi^+              (conjugate-linear involution)
    positive op   Delta(xi)  = D xi D^{-1}, complex powers D^z xi D^{-z}
    involution    S          = J o Delta^{1/2},  so S(x D^{1/2}) = x^+ D^{1/2}
    flow          sigma_t(x) = D^{it} x D^{-it}

Complex powers are applied blockwise, never by materializing the
coordinate-space superoperator (that is left to the verification layer,
which needs explicit matrices).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .algebra import AlgebraElement, BlockAlgebra, FaithfulState
from .errors import BadQuadrature, PowerRangeExceeded, ShapeMismatch
from .linalg import Tolerance, base_tolerance, matrix_power_from_eig, power_condition_scale

DEFAULT_Z_MAX = 2.0


class GnsVector:
    """Vector of the GNS space: one matrix per block, Hilbert-space semantics."""

    __slots__ = ("parent", "blocks")

    def __init__(self, parent: BlockAlgebra, blocks):
        mats = [np.ascontiguousarray(b, dtype=np.complex128) for b in blocks]
        if len(mats) != parent.num_blocks or any(
                b.shape != (n, n) for b, n in zip(mats, parent.block_dims)):
            raise ShapeMismatch("vector blocks do not fit the algebra")
        self.parent = parent
        self.blocks = mats

    def _same_parent(self, other: "GnsVector") -> None:
        if not isinstance(other, GnsVector) or other.parent != self.parent:
            raise ShapeMismatch("vectors belong to different spaces")

    def __add__(self, other):
        self._same_parent(other)
        return GnsVector(self.parent, [a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other):
        self._same_parent(other)
        return GnsVector(self.parent, [a - b for a, b in zip(self.blocks, other.blocks)])

    def __mul__(self, scalar):
        return GnsVector(self.parent, [complex(scalar) * a for a in self.blocks])

    __rmul__ = __mul__

    def inner(self, other: "GnsVector") -> complex:
        """<self, other> = sum_k Tr(other_k^+ self_k); linear in self."""
        self._same_parent(other)
        return complex(sum(np.vdot(b, a) for a, b in zip(self.blocks, other.blocks)))

    def norm(self) -> float:
        return float(np.sqrt(sum(np.linalg.norm(a) ** 2 for a in self.blocks)))

    def __repr__(self):
        return f"GnsVector(dims={self.parent.block_dims}, norm={self.norm():.3e})"


def left_act(x: AlgebraElement, xi: GnsVector) -> GnsVector:
    """xi |-> x xi blockwise (the algebra acting on its GNS space)."""
    if x.parent != xi.parent:
        raise ShapeMismatch("element and vector live on different algebras")
    return GnsVector(xi.parent, [a @ b for a, b in zip(x.blocks, xi.blocks)])


def right_act(x: AlgebraElement, xi: GnsVector) -> GnsVector:
    """xi |-> xi x blockwise; commutes exactly with every left action."""
    if x.parent != xi.parent:
        raise ShapeMismatch("element and vector live on different algebras")
    return GnsVector(xi.parent, [b @ a for a, b in zip(x.blocks, xi.blocks)])


@dataclass
class AnalyticVectorReport:
    """Residuals of the power group law and the imaginary-axis boundary."""

    group_residual: float
    boundary_residual: float
    pairs_checked: int
    tolerance: float

    @property
    def max_residual(self) -> float:
        return max(self.group_residual, self.boundary_residual)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance


class ModularData:
    """The full modular package of a faithful state.

    Holds the per-block eigendecomposition of the density, the cyclic vector
    omega = D^{1/2}, and the multiset of eigenvalue ratios (the spectrum of
    the positive modular operator, kept for bookkeeping).  Real parts of
    complex powers are capped at z_max; beyond that the tolerance guarantee
    of the policy in `linalg` is void, so the call refuses.
    """

    def __init__(self, state: FaithfulState, z_max: float = DEFAULT_Z_MAX):
        self.state = state
        self.algebra = state.parent
        self.d_eig = list(state.block_eigs)
        self.z_max = float(z_max)
        self.omega = GnsVector(
            self.algebra, [matrix_power_from_eig(e, 0.5) for e in self.d_eig])
        self.delta_spectrum = [
            np.outer(e.eigenvalues, 1.0 / e.eigenvalues).ravel() for e in self.d_eig]
        self._power_cache: dict[complex, list[np.ndarray]] = {}

    @property
    def kappa(self) -> float:
        return self.state.kappa

    def d_power_blocks(self, z: complex) -> list[np.ndarray]:
        """Blockwise D**z, cached per exponent."""
        z = complex(z)
        hit = self._power_cache.get(z)
        if hit is None:
            hit = [matrix_power_from_eig(e, z) for e in self.d_eig]
            self._power_cache[z] = hit
        return hit

    def _check_range(self, z: complex) -> complex:
        z = complex(z)
        if abs(z.real) > self.z_max:
            raise PowerRangeExceeded(
                f"|Re z| = {abs(z.real)} exceeds z_max = {self.z_max}")
        return z

    def embed(self, x: AlgebraElement) -> GnsVector:
        """x |-> x D^{1/2}; the identity embeds to omega."""
        if x.parent != self.algebra:
            raise ShapeMismatch("element does not live on the state's algebra")
        sq = self.d_power_blocks(0.5)
        return GnsVector(self.algebra, [a @ s for a, s in zip(x.blocks, sq)])

    def apply_J(self, xi: GnsVector) -> GnsVector:
        """Conjugate-linear involution xi |-> xi^+."""
        if xi.parent != self.algebra:
            raise ShapeMismatch("vector does not live on the state's space")
        return GnsVector(self.algebra, [b.conj().T for b in xi.blocks])

    def delta_power(self, z: complex, xi: GnsVector) -> GnsVector:
        """xi |-> D^z xi D^{-z} for |Re z| <= z_max."""
        if xi.parent != self.algebra:
            raise ShapeMismatch("vector does not live on the state's space")
        z = self._check_range(z)
        dp = self.d_power_blocks(z)
        dm = self.d_power_blocks(-z)
        return GnsVector(self.algebra, [p @ b @ m for p, b, m in zip(dp, xi.blocks, dm)])

    def apply_S(self, xi: GnsVector) -> GnsVector:
        """S = J o Delta^{1/2}, so S(x D^{1/2}) = x^+ D^{1/2}."""
        return self.apply_J(self.delta_power(0.5, xi))

    def modular_flow(self, t: float, x: AlgebraElement) -> AlgebraElement:
        """sigma_t(x) = D^{it} x D^{-it}, a state-preserving *-automorphism."""
        if x.parent != self.algebra:
            raise ShapeMismatch("element does not live on the state's algebra")
        u = self.d_power_blocks(1j * float(t))
        v = self.d_power_blocks(-1j * float(t))
        return AlgebraElement(self.algebra, [a @ b @ c for a, b, c in zip(u, x.blocks, v)])

    def modular_smear(self, x: AlgebraElement, f, half_width: float,
                      step: float) -> AlgebraElement:
        """Trapezoidal quadrature of integral f(t) sigma_t(x) dt over [-L, L].

        f is sampled on a uniform grid of spacing ~step; no adaptive scheme.
        A normalized kernel concentrating at t = 0 reproduces x in the limit.
        """
        if x.parent != self.algebra:
            raise ShapeMismatch("element does not live on the state's algebra")
        half_width = float(half_width)
        step = float(step)
        if not (half_width > 0.0 and 0.0 < step < half_width):
            raise BadQuadrature(
                f"need 0 < step < half_width, got step={step}, half_width={half_width}")
        m = int(round(2.0 * half_width / step)) + 1
        ts = np.linspace(-half_width, half_width, m)
        fs = np.asarray([float(f(t)) for t in ts])
        if not np.all(np.isfinite(fs)):
            raise BadQuadrature("kernel samples must be finite")
        out = []
        for e, b in zip(self.d_eig, x.blocks):
            lam = e.eigenvalues
            v = e.eigenvectors
            bt = v.conj().T @ b @ v
            phases = np.exp(1j * np.outer(ts, np.log(lam)))  # (m, n)
            batch = phases[:, :, None] * bt[None, :, :] * phases.conj()[:, None, :]
            block = np.trapezoid(fs[:, None, None] * batch, ts, axis=0)
            out.append(v @ block @ v.conj().T)
        return AlgebraElement(self.algebra, out)

    def analytic_vector_check(self, xi: GnsVector, z_samples) -> AnalyticVectorReport:
        """Check the power group law at sampled exponent pairs.

        Every vector of a finite-dimensional GNS space extends analytically
        to all complex powers; this documents that fact as a contract.  For
        each ordered pair (z, z') with |Re(z+z')| within range, the residual
        of D-power composition against the summed exponent is measured; for
        purely imaginary samples the result is also compared against an
        independent expm/logm evaluation of the unitary flow.
        """
        zs = [self._check_range(z) for z in z_samples]
        max_re = max((abs(z.real) for z in zs), default=0.0)
        group = 0.0
        pairs = 0
        for z1 in zs:
            for z2 in zs:
                z12 = z1 + z2
                if abs(z12.real) > self.z_max:
                    continue  # out-of-range sums are skipped, not an error
                lhs = self.delta_power(z1, self.delta_power(z2, xi))
                rhs = self.delta_power(z12, xi)
                group = max(group, (lhs - rhs).norm())
                pairs += 1
                max_re = max(max_re, abs(z12.real))
        boundary = 0.0
        logs = None
        for z in zs:
            if abs(z.real) > 1e-14:
                continue
            if logs is None:  # independent route: Schur-based logm, Pade expm
                logs = [scipy.linalg.logm(b) for b in self.state.density.blocks]
            t = z.imag
            flows = [scipy.linalg.expm(1j * t * lg) for lg in logs]
            ref = GnsVector(self.algebra,
                            [u @ b @ u.conj().T for u, b in zip(flows, xi.blocks)])
            boundary = max(boundary, (self.delta_power(z, xi) - ref).norm())
        tol = Tolerance(base_tolerance(),
                        power_condition_scale(self.kappa, max_re))
        return AnalyticVectorReport(
            group_residual=group,
            boundary_residual=boundary,
            pairs_checked=pairs,
            tolerance=tol.effective(max(1.0, xi.norm())),
        )


__all__ = [
    "GnsVector",
    "ModularData",
    "AnalyticVectorReport",
    "left_act",
    "right_act",
    "DEFAULT_Z_MAX",
]
