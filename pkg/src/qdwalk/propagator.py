"""Piecewise-constant propagation of time-dependent Hamiltonians.

Slice exponentials are evaluated with a Chebyshev expansion in Bessel
coefficients; an exact eigendecomposition route is kept alongside as an
independent check.

Units: energies in meV, times in ps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

#: Reduced Planck constant in meV*ps (CODATA 2018).
HBAR = 0.6582119569

MAX_TERMS = 512


class ConvergenceError(RuntimeError):
    """Chebyshev series failed to converge within the term cap."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class TimeGrid:
    """Uniform slicing of ``[t_start, t_end]``.

    The requested ``dt`` is adjusted slightly so that an integer number of
    slices exactly covers the interval.
    """

    t_start: float
    t_end: float
    dt: float

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")

    @property
    def n_slices(self) -> int:
        return max(1, int(round((self.t_end - self.t_start) / self.dt)))

    @property
    def step(self) -> float:
        """Actual slice width after rounding to a whole number of slices."""
        return (self.t_end - self.t_start) / self.n_slices

    def midpoints(self) -> np.ndarray:
        return self.t_start + (np.arange(self.n_slices) + 0.5) * self.step

    def edges(self) -> np.ndarray:
        return self.t_start + np.arange(self.n_slices + 1) * self.step


def bessel_j(n, x):
    """Bessel function of the first kind J_n(x) for integer order n >= 0."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("bessel_j: argument must be finite")
    if np.any(np.asarray(n) < 0):
        raise ValueError("bessel_j: order must be non-negative")
    out = special.jv(n, x)
    return float(out) if out.ndim == 0 else out


def _check_hermitian(H: np.ndarray, atol: float = 1e-12):
    if H.shape[-1] != H.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {H.shape}")
    if not np.allclose(H, np.conj(np.swapaxes(H, -1, -2)), rtol=0, atol=atol):
        raise ValueError("Hamiltonian is not Hermitian")


def _chebyshev_batch(H: np.ndarray, dt: float, tol: float,
                     max_terms: int = MAX_TERMS) -> np.ndarray:
    """exp(-i H dt / hbar) for a stack of Hermitian matrices, shape (m, d, d).

    With A = -i H dt/hbar shifted to a spectrum symmetric about zero and
    scaled to At = 2A/(mu_max - mu_min), the expansion

        exp(A) = sum_n a_n J_n(alpha) phi_n(At),  a_0 = 1, a_n = 2,
        phi_n = 2 At phi_{n-1} + phi_{n-2},  phi_0 = I, phi_1 = At

    is exact: on the anti-Hermitian argument phi_n(-iX) = (-i)^n T_n(X), so
    the plus sign in the recurrence carries the (-i)^n factors and the Bessel
    coefficients stay real. alpha is the half spectral range times dt/hbar.
    """
    m, d, _ = H.shape
    evals = np.linalg.eigvalsh(H)
    lo, hi = evals[:, 0], evals[:, -1]
    center = 0.5 * (hi + lo)
    half = 0.5 * (hi - lo)
    eye = np.eye(d)

    # zero half-range means H = center*I; the series then reduces to J_0(0)*I
    flat = half <= 1e-300
    scale = np.where(flat, 1.0, half)
    X = (H - center[:, None, None] * eye) / scale[:, None, None]
    X[flat] = 0.0
    At = -1j * X
    alpha = np.where(flat, 0.0, half * dt / HBAR)

    phi_prev = np.broadcast_to(eye, (m, d, d)).astype(complex)
    phi = At
    total = special.jv(0, alpha)[:, None, None] * phi_prev
    alpha_max = float(alpha.max())
    n = 1
    residual = math.inf
    while True:
        coeff = 2.0 * special.jv(n, alpha)
        term = coeff[:, None, None] * phi
        total = total + term
        residual = float(np.abs(term).max()) if m else 0.0
        # J_n(alpha) decays superexponentially once n exceeds alpha
        if n > alpha_max and residual < tol:
            break
        if n >= max_terms:
            raise ConvergenceError(
                f"Chebyshev series did not converge in {max_terms} terms "
                f"(last residual {residual:.3e})", residual)
        phi_prev, phi = phi, 2.0 * At @ phi + phi_prev
        n += 1
    phase = np.exp(-1j * center * dt / HBAR)
    return phase[:, None, None] * total


def expm_chebyshev(H, dt: float, tol: float = 1e-12,
                   max_terms: int = MAX_TERMS) -> np.ndarray:
    """Evolution operator exp(-i H dt / hbar) by Chebyshev expansion.

    Parameters
    ----------
    H : array_like, shape (d, d)
        Hermitian Hamiltonian in meV.
    dt : float
        Time step in ps.
    tol : float
        Terms are added until the largest entry of the latest term
        drops below ``tol``.
    max_terms : int
        Term cap; exceeding it raises :class:`ConvergenceError`.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2:
        raise ValueError("expm_chebyshev expects a single square matrix")
    _check_hermitian(H)
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    evals = np.linalg.eigvalsh(H)
    if evals[-1] - evals[0] == 0.0:
        return np.exp(-1j * evals[0] * dt / HBAR) * np.eye(H.shape[0], dtype=complex)
    return _chebyshev_batch(H[None], dt, tol, max_terms)[0]


def expm_eig_oracle(H, dt: float) -> np.ndarray:
    """exp(-i H dt / hbar) through an explicit Hermitian eigendecomposition."""
    H = np.asarray(H, dtype=complex)
    _check_hermitian(H)
    if H.shape[0] > 8:
        raise ValueError("oracle is intended for small matrices (dim <= 8)")
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * w * dt / HBAR)) @ V.conj().T


def ordered_product(U: np.ndarray) -> np.ndarray:
    """Time-ordered product U[m-1] ... U[1] U[0] of a stack of matrices.

    Uses pairwise reduction, which keeps the number of Python-level matmul
    calls logarithmic in the number of slices.
    """
    U = np.asarray(U)
    if U.shape[0] == 0:
        raise ValueError("empty stack")
    while U.shape[0] > 1:
        tail = U[-1:] if U.shape[0] % 2 else None
        paired = U[1::2] @ U[0:U.shape[0] - (U.shape[0] % 2):2]
        U = paired if tail is None else np.concatenate([paired, tail])
    return U[0]


def slice_propagators(hamiltonian: Callable[[np.ndarray], np.ndarray],
                      grid: TimeGrid, tol: float = 1e-12) -> np.ndarray:
    """Per-slice exponentials, shape (n_slices, d, d), earliest first.

    ``hamiltonian`` is sampled at the slice midpoints. It must accept a 1-D
    array of times and return the stacked matrices, shape (n, d, d).
    """
    times = grid.midpoints()
    H = np.asarray(hamiltonian(times), dtype=complex)
    if H.ndim != 3 or H.shape[0] != times.size:
        raise ValueError(
            f"sampler returned shape {H.shape}, expected ({times.size}, d, d)")
    _check_hermitian(H)
    return _chebyshev_batch(H, grid.step, tol)


def evolve(hamiltonian: Callable[[np.ndarray], np.ndarray], grid: TimeGrid,
           tol: float = 1e-12) -> np.ndarray:
    """Total evolution operator over ``grid``; later slices act on the left."""
    return ordered_product(slice_propagators(hamiltonian, grid, tol))


def unitarity_defect(U) -> float:
    """max |U U^dagger - I| over all entries."""
    U = np.asarray(U)
    return float(np.abs(U @ U.conj().T - np.eye(U.shape[0])).max())
