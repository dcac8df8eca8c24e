"""State-vector and density-matrix kernel.

Dense complex vectors and matrices at desk scale: norms, trace distances,
partial traces, Hermitian spectra via cyclic Jacobi sweeps, Haar-random
states, and rank-1 purification extraction from an approximately known
density matrix.

Basis convention used everywhere in this package: ``amps[x]`` is the
amplitude of the basis string obtained by reading ``x`` as a big-endian
integer, i.e. qubit 0 is the most significant bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import substream

#: Off-diagonal Frobenius-norm threshold at which a Jacobi sweep stops.
JACOBI_TOL = 1e-12
#: Hard cap on Jacobi sweeps before declaring non-convergence.
JACOBI_MAX_SWEEPS = 100


class EigensolverError(RuntimeError):
    """Raised when Jacobi sweeps fail to converge within the sweep cap."""


@dataclass(frozen=True)
class PureState:
    """An n-qubit amplitude vector.

    Also used for sub-normalized residual vectors, so the constructor
    checks only the dimension, never the norm.
    """

    n: int
    amps: np.ndarray

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError(f"qubit count must be non-negative, got {self.n}")
        amps = np.asarray(self.amps, dtype=np.complex128)
        if amps.shape != (1 << self.n,):
            raise ValueError(
                f"expected {1 << self.n} amplitudes for n={self.n}, got shape {amps.shape}"
            )
        object.__setattr__(self, "amps", amps)

    @property
    def dim(self) -> int:
        return 1 << self.n


@dataclass(frozen=True)
class DensityMatrix:
    """An n-qubit density matrix (Hermitian, unit trace, PSD within tolerance)."""

    n: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError(f"qubit count must be non-negative, got {self.n}")
        entries = np.asarray(self.entries, dtype=np.complex128)
        dim = 1 << self.n
        if entries.shape != (dim, dim):
            raise ValueError(
                f"expected {dim}x{dim} matrix for n={self.n}, got shape {entries.shape}"
            )
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return 1 << self.n


def norm2(v: PureState) -> float:
    """Euclidean 2-norm of the amplitude vector."""
    return float(np.linalg.norm(v.amps))


def trace_distance_pure(a: PureState, b: PureState) -> float:
    """Trace distance between two normalized pure states: sqrt(1 - |<a|b>|^2)."""
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n} qubits")
    overlap = abs(np.vdot(a.amps, b.amps))
    # |<a|b>| can exceed 1 by rounding for (near-)identical inputs.
    return float(np.sqrt(max(0.0, 1.0 - min(overlap, 1.0) ** 2)))


def _jacobi_eigvalsh(mat: np.ndarray) -> np.ndarray:
    """Eigenvalues of a complex Hermitian matrix by cyclic Jacobi sweeps.

    Each sweep annihilates every off-diagonal pair (p, q) in turn with a
    complex rotation; stops once the off-diagonal Frobenius norm drops below
    JACOBI_TOL (scaled by the matrix norm) or raises after JACOBI_MAX_SWEEPS.
    """
    a = np.array(mat, dtype=np.complex128)
    dim = a.shape[0]
    if dim == 1:
        return a.diagonal().real.copy()
    scale = max(float(np.linalg.norm(a)), 1.0)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = a.copy()
        np.fill_diagonal(off, 0.0)
        if float(np.linalg.norm(off)) <= JACOBI_TOL * scale:
            return np.sort(a.diagonal().real)
        for p in range(dim - 1):
            for q in range(p + 1, dim):
                apq = a[p, q]
                if abs(apq) == 0.0:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                # Diagonalize the 2x2 Hermitian block [[app, apq], [conj, aqq]]
                # with the unitary G = diag(1, e^{-i arg apq}) . (real Jacobi).
                phase = apq / abs(apq)
                tau = (aqq - app) / (2.0 * abs(apq))
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau)) if tau != 0.0 else 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * np.conj(phase) * col_q
                a[:, q] = s * col_p + c * np.conj(phase) * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * phase * row_q
                a[q, :] = s * row_p + c * phase * row_q
    raise EigensolverError(
        f"Jacobi sweeps did not converge within {JACOBI_MAX_SWEEPS} sweeps"
    )


def hermitian_eigenvalues(mat: np.ndarray) -> np.ndarray:
    """Sorted real eigenvalues of a Hermitian matrix (ascending)."""
    mat = np.asarray(mat, dtype=np.complex128)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    return _jacobi_eigvalsh(mat)


def trace_distance_mixed(a: DensityMatrix, b: DensityMatrix) -> float:
    """Trace distance 0.5 * ||a - b||_1 via the spectrum of the difference.

    The operands are ordered canonically (by raw bytes) before subtracting,
    so td(a, b) and td(b, a) run the identical float computation and the
    metric's symmetry holds bitwise.
    """
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n} qubits")
    first, second = a.entries, b.entries
    if first.tobytes() > second.tobytes():
        first, second = second, first
    eigs = hermitian_eigenvalues(first - second)
    return float(0.5 * np.sum(np.abs(eigs)))


def partial_trace_keep_first(state: PureState, keep: int) -> DensityMatrix:
    """Reduced density matrix on the first `keep` qubits of a pure state."""
    if not 0 <= keep <= state.n:
        raise ValueError(f"keep must lie in [0, {state.n}], got {keep}")
    rest = state.n - keep
    block = state.amps.reshape(1 << keep, 1 << rest)
    reduced = block @ block.conj().T
    return DensityMatrix(keep, reduced)


def purify_rank1(rho_desc: DensityMatrix, delta_in: float) -> PureState:
    """Recover a pure state from an entrywise-δ-approximate rank-1 matrix.

    Picks the lexicographically first basis string y whose diagonal entry is
    at least (3/4)·2^{-n}, then returns the column amplitudes
    rho[x, y] / sqrt(rho[y, y]).  When the input carries entrywise precision
    δ_in ≤ (1/4)·2^{-n}, the output is entrywise within
    2·sqrt(δ_in) / sqrt((1/8)·2^{-2n}) of a global phase of the true state.

    The output is generally not normalized to 1e-9; callers needing a unit
    vector renormalize explicitly.
    """
    dim = rho_desc.dim
    threshold = 0.75 / dim
    if delta_in > 0.25 / dim:
        raise ValueError(
            f"stated precision {delta_in} exceeds the usable bound {0.25 / dim}"
        )
    diag = rho_desc.entries.diagonal().real
    candidates = np.nonzero(diag >= threshold)[0]
    if candidates.size == 0:
        raise ValueError(
            "no diagonal entry reaches (3/4)*2^-n; input is not a "
            "rank-1 matrix known to the stated precision"
        )
    y = int(candidates[0])
    column = rho_desc.entries[:, y] / np.sqrt(diag[y])
    return PureState(rho_desc.n, column)


def haar_random_state(n: int, seed: int) -> PureState:
    """Haar-random n-qubit pure state, deterministic per seed."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    rng = substream(seed, f"haar-state-{n}")
    raw = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return PureState(n, raw / np.linalg.norm(raw))
