"""Haar-distributed SO(2N) matrices, eigenphase extraction, and the
characteristic polynomial evaluated at the symmetry point.

Sampling uses the QR decomposition of an i.i.d. standard Gaussian matrix with
the R-diagonal sign correction, which is Haar on O(2N); matrices landing in
the det = -1 coset are translated into SO(2N) by flipping the last column
(right multiplication by a fixed reflection preserves Haar invariance).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IntegrityError

__all__ = [
    "SpecialOrthogonalMatrix",
    "EigenphaseSpectrum",
    "sample_so2n",
    "sample_so2n_batch",
    "eigenphases",
    "eigenphases_batch",
    "log_char_poly_at_1",
    "log_char_poly_batch",
    "max_log_char_poly",
    "write_spectra_csv",
]

_PHASE_CLAMP = 1e-12
_ORTH_TOL = 1e-10
_DET_TOL = 1e-8


@dataclass(frozen=True)
class SpecialOrthogonalMatrix:
    """A 2N x 2N real matrix expected to lie in SO(2N)."""

    entries: np.ndarray

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.dimension // 2

    def validate(self) -> None:
        a = self.entries
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % 2 != 0:
            raise IntegrityError("matrix must be square with even dimension")
        if np.max(np.abs(a @ a.T - np.eye(a.shape[0]))) > _ORTH_TOL:
            raise IntegrityError("matrix is not orthogonal to tolerance")
        if abs(np.linalg.det(a) - 1.0) > _DET_TOL:
            raise IntegrityError("matrix determinant is not +1 to tolerance")


@dataclass(frozen=True)
class EigenphaseSpectrum:
    """The N nonnegative phases of the conjugate eigenvalue pairs, sorted ascending."""

    phases: np.ndarray

    @property
    def n_pairs(self) -> int:
        return len(self.phases)

    def __post_init__(self):
        p = self.phases
        if np.any(p < 0) or np.any(p > np.pi) or np.any(np.diff(p) < 0):
            raise IntegrityError("phases must be sorted and lie in [0, pi]")


def sample_so2n_batch(n_pairs: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Stack of `count` Haar SO(2N) matrices, shape (count, 2N, 2N)."""
    if n_pairs < 1:
        raise DomainError("n_pairs must be >= 1")
    gauss = rng.standard_normal((count, 2 * n_pairs, 2 * n_pairs))
    q, r = np.linalg.qr(gauss)
    signs = np.sign(np.diagonal(r, axis1=1, axis2=2))
    signs[signs == 0] = 1.0
    q = q * signs[:, None, :]
    dets = np.linalg.det(q)
    q[dets < 0, :, -1] *= -1.0
    return q


def sample_so2n(n_pairs: int, seed) -> SpecialOrthogonalMatrix:
    """One Haar-distributed SO(2N) matrix, deterministic for a fixed seed."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return SpecialOrthogonalMatrix(sample_so2n_batch(n_pairs, 1, rng)[0])


def eigenphases_batch(matrices: np.ndarray) -> np.ndarray:
    """Eigenphases of a stack of SO(2N) matrices, shape (count, N), each row sorted.

    Phases within 1e-12 of 0 or pi are clamped exactly, so that eigenvalues at
    +-1 do not leak numerical noise into the hard-gap statistics.
    """
    eigvals = np.linalg.eigvals(matrices)
    angles = np.abs(np.angle(eigvals))
    angles.sort(axis=-1)
    phases = angles[..., ::2].copy()
    phases[phases < _PHASE_CLAMP] = 0.0
    phases[phases > np.pi - _PHASE_CLAMP] = np.pi
    return phases


def eigenphases(matrix: SpecialOrthogonalMatrix) -> EigenphaseSpectrum:
    """Eigenphase spectrum of a single matrix; checks the SO(2N) invariants first."""
    matrix.validate()
    eigvals = np.linalg.eigvals(matrix.entries)
    angles = np.sort(np.abs(np.angle(eigvals)))
    # conjugate pairs give each phase twice
    if np.max(np.abs(angles[::2] - angles[1::2])) > 1e-8:
        raise IntegrityError("eigenvalues do not pair into conjugate phases")
    phases = angles[::2].copy()
    phases[phases < _PHASE_CLAMP] = 0.0
    phases[phases > np.pi - _PHASE_CLAMP] = np.pi
    return EigenphaseSpectrum(phases)


def log_char_poly_batch(phases: np.ndarray) -> np.ndarray:
    """log Lambda_A(1, N) = 2N log 2 + 2 sum_j log sin(theta_j / 2), rows = spectra.

    Returns -inf for spectra containing a phase exactly 0.
    """
    n = phases.shape[-1]
    with np.errstate(divide="ignore"):
        return 2 * n * np.log(2.0) + 2 * np.sum(np.log(np.sin(phases / 2)), axis=-1)


def log_char_poly_at_1(spectrum) -> float:
    """log of det(I - A) = 2^N prod (1 - cos theta_j) for one spectrum; -inf at theta = 0."""
    phases = spectrum.phases if isinstance(spectrum, EigenphaseSpectrum) else np.asarray(spectrum, float)
    return float(log_char_poly_batch(phases[None, :])[0])


def max_log_char_poly(n_pairs: int) -> float:
    """Upper bound 2N log 2 attained when all eigenvalues sit at -1."""
    return 2 * n_pairs * np.log(2.0)


def write_spectra_csv(path, phases: np.ndarray) -> None:
    """Raw spectrum dump: header theta_1,...,theta_N,log_lambda, one row per matrix."""
    phases = np.atleast_2d(phases)
    log_lambda = log_char_poly_batch(phases)
    n = phases.shape[1]
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"theta_{j + 1}" for j in range(n)] + ["log_lambda"])
        for row, ll in zip(phases, log_lambda):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(ll))])
