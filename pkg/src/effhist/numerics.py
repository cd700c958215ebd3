"""Dense complex linear algebra used by the history calculus.

All matrices are plain ``numpy`` arrays of dtype ``complex128``. The
Hermitian eigensolver is a cyclic Jacobi method in round-robin (parallel)
ordering: every round applies ``n // 2`` disjoint plane rotations at once,
so a sweep costs ``O(n)`` vectorised numpy calls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError

#: Largest matrix dimension a Kronecker product may produce.
MAX_TENSOR_DIM = 4096

#: Relative tolerance for Hermiticity, PSD checks and eigenvalue clamping.
HERMITIAN_TOL = 1e-10

#: Eigenvalues below this (times the scale) count as zero inside matrix powers.
ROUNDOFF_ZERO = 64 * np.finfo(float).eps

JACOBI_MAX_SWEEPS = 100
JACOBI_REL_TOL = 1e-14


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Return ``m`` as a square, finite ``complex128`` array (always a copy)."""
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValidationError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def frobenius(m: np.ndarray) -> float:
    return float(np.linalg.norm(m))


def scale(m: np.ndarray) -> float:
    """``max(1, ||m||_F)``, the reference size for relative tolerances."""
    return max(1.0, frobenius(m))


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return frobenius(m - dagger(m)) <= tol * scale(m)


def kron(a: np.ndarray, b: np.ndarray, max_dim: int | None = None) -> np.ndarray:
    """Kronecker product; block ``(i, j)`` of the result is ``a[i, j] * b``."""
    limit = MAX_TENSOR_DIM if max_dim is None else max_dim
    n = a.shape[0] * b.shape[0]
    if n > limit:
        raise NumericalError(f"tensor dimension overflow: {n} > {limit}")
    return np.kron(a, b)


def kron_all(factors, max_dim: int | None = None) -> np.ndarray:
    """Left-to-right Kronecker product of a sequence; ``[[1]]`` for an empty one."""
    out = np.ones((1, 1), dtype=complex)
    for f in factors:
        out = kron(out, f, max_dim=max_dim)
    return out


@dataclass(frozen=True)
class HermitianEigen:
    """Eigenvalues in ascending order and the matching orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ dagger(self.vectors)

    def apply(self, fn) -> np.ndarray:
        """Matrix function ``V diag(fn(values)) V^dagger``."""
        return (self.vectors * fn(self.values)) @ dagger(self.vectors)


def _round_robin(n: int):
    """Pairings for one Jacobi sweep: ``m - 1`` rounds of disjoint index pairs."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        if pairs:
            p, q = zip(*pairs)
            rounds.append((np.array(p), np.array(q)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi(a: np.ndarray, max_sweeps: int):
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    if n == 1:
        return a.diagonal().real.copy(), v
    target = JACOBI_REL_TOL * frobenius(a)
    rounds = _round_robin(n)
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps + 1):
        off = float(np.sqrt(np.sum(np.abs(a[offdiag]) ** 2)))
        if off <= target:
            return a.diagonal().real.copy(), v
        for p, q in rounds:
            b = a[p, q]
            mag = np.abs(b)
            active = mag > 1e-300
            safe = np.where(active, mag, 1.0)
            app = a[p, p].real
            aqq = a[q, q].real
            tau = (aqq - app) / (2.0 * safe)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            # unitary block G = [[c, s], [-s e, c e]] with e = conj(b)/|b|
            e = np.where(active, np.conj(b) / safe, 1.0)
            ap = a[:, p].copy()
            aq = a[:, q]
            a[:, p] = ap * c - aq * (s * e)
            a[:, q] = ap * s + aq * (c * e)
            rp = a[p, :].copy()
            rq = a[q, :]
            ec = np.conj(e)[:, None]
            a[p, :] = rp * c[:, None] - rq * (s[:, None] * ec)
            a[q, :] = rp * s[:, None] + rq * (c[:, None] * ec)
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp = v[:, p].copy()
            vq = v[:, q]
            v[:, p] = vp * c - vq * (s * e)
            v[:, q] = vp * s + vq * (c * e)
    raise NumericalError(f"eig failure: Jacobi did not converge in {max_sweeps} sweeps")


def hermitian_eig(m, max_sweeps: int = JACOBI_MAX_SWEEPS) -> HermitianEigen:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Raises ``ValidationError("not hermitian")`` when ``m`` deviates from its
    adjoint by more than ``1e-10 * max(1, ||m||_F)``.
    """
    a = as_matrix(m)
    if not is_hermitian(a):
        raise ValidationError("not hermitian")
    a = 0.5 * (a + dagger(a))
    values, vectors = _jacobi(a, max_sweeps)
    order = np.argsort(values, kind="stable")
    return HermitianEigen(values[order], vectors[:, order])


def eigvalsh(m) -> np.ndarray:
    return hermitian_eig(m).values


def _clamped(eig: HermitianEigen, s: float) -> np.ndarray:
    lam = eig.values.copy()
    tol = HERMITIAN_TOL * s
    if lam.size and lam[0] < -tol:
        raise ValidationError(f"not positive semidefinite (eigenvalue {lam[0]:.3e})")
    # roundoff-level eigenvalues snap to 0 so powers of projectors stay exact
    lam[lam < ROUNDOFF_ZERO * s] = 0.0
    lam[(lam > 1.0) & (lam <= 1.0 + tol)] = 1.0
    return lam


def psd_power(m, alpha: float) -> np.ndarray:
    """``m ** alpha`` for positive semidefinite ``m`` and ``alpha > 0``.

    Eigenvalues within ``1e-10 * max(1, ||m||_F)`` below zero (or at roundoff
    level above it) are clamped to zero and those just above one are clamped
    to one, so effects remain effects under roundoff.
    """
    if not alpha > 0:
        raise ValidationError(f"exponent must be positive, got {alpha}")
    a = as_matrix(m)
    eig = hermitian_eig(a)
    lam = _clamped(eig, scale(a))
    return (eig.vectors * lam**alpha) @ dagger(eig.vectors)


def psd_sqrt(m) -> np.ndarray:
    return psd_power(m, 0.5)


def unitary_from_eig(eig: HermitianEigen, theta: float) -> np.ndarray:
    """``exp(-i theta h)`` from a precomputed decomposition of ``h``."""
    return (eig.vectors * np.exp(-1j * theta * eig.values)) @ dagger(eig.vectors)


def unitary_exp(h, theta: float) -> np.ndarray:
    """``exp(-i theta h)`` for Hermitian ``h``."""
    h = as_matrix(h)
    if theta == 0:
        if not is_hermitian(h):
            raise ValidationError("not hermitian")
        return np.eye(h.shape[0], dtype=complex)
    return unitary_from_eig(hermitian_eig(h), theta)


@dataclass(frozen=True)
class OperatorClass:
    is_hermitian: bool
    is_psd: bool
    is_effect: bool
    is_projector: bool
    is_density: bool
    tol: float


def classify(m, tol: float = HERMITIAN_TOL) -> OperatorClass:
    """Classify ``m`` from its spectrum.

    ``tol`` is absolute on eigenvalues and on the trace; Hermiticity uses the
    relative test of :func:`is_hermitian`. Non-Hermitian input gets all flags
    false.
    """
    a = as_matrix(m)
    if not is_hermitian(a, max(tol, HERMITIAN_TOL)):
        return OperatorClass(False, False, False, False, False, tol)
    lam = hermitian_eig(a).values
    psd = bool(lam[0] >= -tol)
    effect = psd and bool(lam[-1] <= 1.0 + tol)
    projector = effect and bool(np.all(np.minimum(np.abs(lam), np.abs(lam - 1.0)) <= tol))
    density = psd and abs(np.trace(a) - 1.0) <= tol
    return OperatorClass(True, psd, effect, projector, bool(density), tol)


def is_effect(m, tol: float = HERMITIAN_TOL) -> bool:
    return classify(m, tol).is_effect


def leq(a: np.ndarray, b: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    """Loewner order ``a <= b``: ``b - a`` is PSD within ``tol * max(1, ||b - a||_F)``."""
    diff = b - a
    if not is_hermitian(diff):
        return False
    return bool(eigvalsh(diff)[0] >= -tol * scale(diff))


def operator_norm(m: np.ndarray) -> float:
    """Largest singular value, from the spectrum of ``m^dagger m``."""
    lam = eigvalsh(dagger(m) @ m)
    return float(np.sqrt(max(lam[-1], 0.0)))
