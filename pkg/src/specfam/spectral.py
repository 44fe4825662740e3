"""Spectral calculus for finite Hermitian matrices.

Dense eigendecomposition, spectral window projections, the bounded transform
t -> t(1+t^2)^(-1/2), and the resolvent at +i.  Everything downstream
(adapted pairs, continuity certificates, spectral flow) is built from the
handful of operations here, and all of them are plain functions of their
inputs: values are immutable after construction and safe to share between
threads.

Tolerances follow the usual backward-error scale of dense Hermitian
eigensolvers at moderate dimensions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EdgeOnSpectrum, NotHermitianError

#: relative hermiticity tolerance, scaled by the largest entry magnitude
TAU_HERMITIAN_REL = 1e-10
#: unitarity tolerance for eigenvector matrices
TAU_UNITARY = 1e-9
#: idempotency / hermiticity tolerance for spectral projections
TAU_PROJECTION = 1e-9
#: reconstruction and oracle-agreement tolerance
TAU_RECONSTRUCT = 1e-9
#: default clearance a window endpoint must keep from the spectrum
TAU_EDGE_DEFAULT = 1e-8


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """A finite self-adjoint matrix.

    The stored entries are exactly Hermitian: after validating that the input
    deviates from its adjoint by at most ``TAU_HERMITIAN_REL`` times the
    largest entry, the constructor replaces it with the average of the matrix
    and its conjugate transpose.
    """

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if m.shape[0] < 1:
            raise ValueError("operator dimension must be at least 1")
        scale = float(np.max(np.abs(m))) if m.size else 0.0
        deviation = np.abs(m - m.conj().T)
        worst = float(deviation.max())
        if worst > TAU_HERMITIAN_REL * scale:
            i, j = np.unravel_index(int(deviation.argmax()), deviation.shape)
            raise NotHermitianError(worst, TAU_HERMITIAN_REL * scale, (int(i), int(j)))
        sym = (m + m.conj().T) / 2.0
        sym.setflags(write=False)
        object.__setattr__(self, "entries", sym)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def shifted(self, lam: float) -> "HermitianOperator":
        """The operator minus ``lam`` times the identity (same eigenvectors)."""
        out = HermitianOperator(self.entries - lam * np.eye(self.dim))
        cached = self.__dict__.get("_decomposition")
        if cached is not None:
            _install_decomposition(out, cached.eigenvalues - lam, cached.eigenvectors)
        return out

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return f"HermitianOperator(dim={self.dim})"


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues and a matching orthonormal eigenbasis."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class RealWindow:
    """An interval of the real line with explicit endpoint closedness.

    Endpoint closedness only matters when an eigenvalue sits exactly on an
    endpoint, which the projection routines refuse anyway; it is kept
    explicit so window arithmetic stays unambiguous.
    """

    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"window endpoints out of order: ({self.lo}, {self.hi})")

    @classmethod
    def symmetric(cls, level: float) -> "RealWindow":
        """The closed window [-level, level]."""
        return cls(-float(level), float(level))

    def finite_endpoints(self) -> list[float]:
        return [e for e in (self.lo, self.hi) if math.isfinite(e)]

    def mask(self, values: np.ndarray) -> np.ndarray:
        """Boolean membership of ``values`` in the window."""
        lo_ok = values >= self.lo if self.lo_closed else values > self.lo
        hi_ok = values <= self.hi if self.hi_closed else values < self.hi
        return lo_ok & hi_ok

    def contains(self, value: float) -> bool:
        return bool(self.mask(np.asarray([value]))[0])


@dataclass(frozen=True)
class WindowProjection:
    """Spectral projection onto a window plus its rank and endpoint margin."""

    projection: HermitianOperator
    rank: int
    margin: float


def identity_operator(dim: int) -> HermitianOperator:
    return HermitianOperator(np.eye(dim))


def zero_operator(dim: int) -> HermitianOperator:
    return HermitianOperator(np.zeros((dim, dim)))


def diagonal_operator(values) -> HermitianOperator:
    return HermitianOperator(np.diag(np.asarray(values, dtype=float)))


def _install_decomposition(op: HermitianOperator, eigenvalues: np.ndarray,
                           eigenvectors: np.ndarray) -> None:
    """Attach a known decomposition (used when it is exact by construction)."""
    w = np.asarray(eigenvalues, dtype=float)
    w.setflags(write=False)
    object.__setattr__(op, "_decomposition", SpectralDecomposition(w, eigenvectors))


def decompose(op: HermitianOperator) -> SpectralDecomposition:
    """Eigendecomposition with ascending eigenvalues, cached on the operator.

    The LAPACK driver behind ``numpy.linalg.eigh`` is deterministic for a
    fixed input, which fixes the tie-breaking inside degenerate clusters;
    nothing downstream depends on that choice, only on the spanned subspaces.
    """
    cached = op.__dict__.get("_decomposition")
    if cached is None:
        w, v = np.linalg.eigh(op.entries)
        w.setflags(write=False)
        v.setflags(write=False)
        cached = SpectralDecomposition(w, v)
        object.__setattr__(op, "_decomposition", cached)
    return cached


def window_margin(eigenvalues: np.ndarray, window: RealWindow) -> float:
    """Smallest distance from any eigenvalue to a finite window endpoint."""
    endpoints = window.finite_endpoints()
    if not endpoints:
        return math.inf
    return float(min(np.min(np.abs(eigenvalues - e)) for e in endpoints))


def projector(dec: SpectralDecomposition, mask: np.ndarray,
              weights: np.ndarray | None = None) -> np.ndarray:
    """Sum of rank-one projectors over the masked eigenpairs.

    With ``weights`` given, returns sum_j w_j v_j v_j* instead, i.e. a
    function of the operator supported on the selected eigenspaces.
    """
    vecs = dec.eigenvectors[:, mask]
    if weights is None:
        return vecs @ vecs.conj().T
    return (vecs * np.asarray(weights)[mask]) @ vecs.conj().T


def spectral_projection(op: HermitianOperator, window: RealWindow,
                        tau_edge: float = TAU_EDGE_DEFAULT) -> WindowProjection:
    """Orthogonal projection onto the eigenspaces with eigenvalues in ``window``.

    Refuses (``EdgeOnSpectrum``) when a finite endpoint comes within
    ``tau_edge`` of the spectrum: window endpoints on the spectrum make the
    projection discontinuous in the operator and every certificate built on
    it meaningless.
    """
    dec = decompose(op)
    margin = window_margin(dec.eigenvalues, window)
    if margin < tau_edge:
        offending = min(
            window.finite_endpoints(),
            key=lambda e: float(np.min(np.abs(dec.eigenvalues - e))),
        )
        raise EdgeOnSpectrum(offending, margin)
    mask = window.mask(dec.eigenvalues)
    proj = HermitianOperator(projector(dec, mask))
    return WindowProjection(proj, int(np.count_nonzero(mask)), margin)


def bounded_transform_scalar(values):
    """The contraction t 1-> t(1+t^2)^(-1/2), elementwise."""
    v = np.asarray(values, dtype=float)
    return v / np.sqrt(1.0 + v * v)


def bounded_transform_inverse_scalar(values):
    """Inverse of the bounded transform on (-1, 1): t -> t(1-t^2)^(-1/2)."""
    v = np.asarray(values, dtype=float)
    return v / np.sqrt(1.0 - v * v)


def bounded_transform(op: HermitianOperator) -> HermitianOperator:
    """Apply the bounded transform; eigenvectors are unchanged, norm < 1.

    The result carries the transformed decomposition, so window ranks of the
    image agree exactly with window ranks of the source.
    """
    dec = decompose(op)
    vals = bounded_transform_scalar(dec.eigenvalues)
    m = (dec.eigenvectors * vals) @ dec.eigenvectors.conj().T
    out = HermitianOperator(m)
    # the transform is increasing, so the transformed list is still ascending
    _install_decomposition(out, vals, dec.eigenvectors)
    return out


def resolvent_at_i(op: HermitianOperator) -> np.ndarray:
    """(A + i)^(-1), always defined for self-adjoint A.

    Its spectral norm is max over eigenvalues of (1 + t^2)^(-1/2).
    """
    dec = decompose(op)
    vals = 1.0 / (dec.eigenvalues + 1j)
    return (dec.eigenvectors * vals) @ dec.eigenvectors.conj().T


def operator_norm(m: np.ndarray) -> float:
    """Largest singular value; equals max |eigenvalue| for Hermitian input."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return float(np.linalg.norm(m, 2))


def hermitian_norm(m: np.ndarray) -> float:
    """Spectral norm of a Hermitian matrix via eigenvalues (cheaper than SVD)."""
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh(m))))
