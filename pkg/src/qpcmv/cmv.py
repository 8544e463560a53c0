"""Finite CMV truncations: assembly, spectra, eigenvector profiles.

The doubly-infinite operator factors as L M with 2x2 blocks
Theta(a) = [[conj(a), rho], [rho, -a]], L holding the blocks at even
coefficient indices and M at odd ones.  A finite window [n_min, n_max]
is closed by injecting unimodular coefficients at positions n_min - 1 and
n_max: their rho vanishes, the straddling blocks decouple, and the finite
matrix is exactly unitary.

Assembly is done twice, through the factors and through the explicit band
entries, and both paths must agree entry for entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .errors import DomainError, EigensolverError, WindowError
from .sampling import VerblunskySequence

_EIG_TOL = 1e-10
_BOUNDARY_TOL = 1e-12


def theta_block(alpha: complex) -> np.ndarray:
    a = complex(alpha)
    r = math.sqrt((1.0 - abs(a)) * (1.0 + abs(a)))
    return np.array([[np.conj(a), r], [r, -a]], dtype=complex)


@dataclass(frozen=True, eq=False)
class CMVOperator:
    n_min: int
    n_max: int
    boundary: tuple[complex, complex]
    unitary_mode: bool
    matrix: np.ndarray
    factor_left: np.ndarray
    factor_right: np.ndarray
    band_agreement: float
    unitarity_defect: float
    det: complex

    @property
    def size(self) -> int:
        return self.n_max - self.n_min + 1

    def coord_index(self, n: int) -> int:
        return n - self.n_min

    def dump_triplets(self, fh, seed: Optional[int] = None):
        """Sparse-triplet text dump: lines 'row col re im' (window coords)."""
        if seed is not None:
            fh.write(f"# seed={seed}\n")
        fh.write(
            f"# cmv triplets window=[{self.n_min},{self.n_max}] "
            f"size={self.size} unitary={self.unitary_mode}\n"
        )
        E = self.matrix
        for i in range(self.size):
            for j in range(self.size):
                v = E[i, j]
                if v != 0:
                    fh.write(f"{i} {j} {float(v.real)!r} {float(v.imag)!r}\n")


def _coefficients(seq: VerblunskySequence, n_min: int, n_max: int,
                  boundary, unitary: bool):
    """Coefficient lookup with the truncation rule applied."""
    if unitary:
        bm, bp = (complex(boundary[0]), complex(boundary[1]))
        for b in (bm, bp):
            if abs(abs(b) - 1.0) > _BOUNDARY_TOL:
                raise DomainError(
                    "boundary coefficients must be unimodular in unitary mode"
                )
        seq.require(n_min, n_max - 1)
    else:
        seq.require(n_min - 1, n_max)
        bm, bp = seq.alpha(n_min - 1), seq.alpha(n_max)

    def coef(n: int) -> complex:
        # indices beyond the straddle positions only ever feed entries that
        # fall outside the window and are discarded; clamping keeps the
        # lookup total without touching the sequence there
        if n <= n_min - 1:
            return bm
        if n >= n_max:
            return bp
        return seq.alpha(n)

    return coef, (bm, bp)


def _factor(coef, n_min: int, n_max: int, parity: int):
    """Direct sum of Theta blocks at coefficient indices of one parity."""
    N = n_max - n_min + 1
    F = np.zeros((N, N), dtype=complex)
    det = 1.0 + 0j
    placed = np.zeros(N, dtype=bool)
    for k in range(n_min - 1, n_max + 1):
        if k % 2 != parity:
            continue
        i, j = k - n_min, k + 1 - n_min
        a = coef(k)
        if i >= 0 and j <= N - 1:
            F[i : j + 1, i : j + 1] = theta_block(a)
            det *= -1.0  # det Theta = -(|a|^2 + rho^2) = -1
            placed[i] = placed[j] = True
        elif j == 0:
            F[0, 0] = -a
            det *= -a
            placed[0] = True
        elif i == N - 1:
            F[N - 1, N - 1] = np.conj(a)
            det *= np.conj(a)
            placed[N - 1] = True
    for i in range(N):
        if not placed[i]:
            F[i, i] = 1.0
    return F, det


def _band_entries(coef, n_min: int, n_max: int) -> np.ndarray:
    """The explicit pentadiagonal entries of L M.

    Even row m:  (m, m-1) conj(a_m) rho_{m-1}; (m, m) -conj(a_m) a_{m-1};
                 (m, m+1) rho_m conj(a_{m+1}); (m, m+2) rho_m rho_{m+1}.
    Odd row m:   (m, m-2) rho_{m-1} rho_{m-2}; (m, m-1) -rho_{m-1} a_{m-2};
                 (m, m)  -a_{m-1} conj(a_m);   (m, m+1) -a_{m-1} rho_m.
    """
    N = n_max - n_min + 1

    def rho(n: int) -> float:
        a = coef(n)
        return math.sqrt((1.0 - abs(a)) * (1.0 + abs(a)))

    E = np.zeros((N, N), dtype=complex)
    for m in range(n_min, n_max + 1):
        i = m - n_min
        if m % 2 == 0:
            entries = {
                m - 1: np.conj(coef(m)) * rho(m - 1),
                m: -np.conj(coef(m)) * coef(m - 1),
                m + 1: rho(m) * np.conj(coef(m + 1)),
                m + 2: rho(m) * rho(m + 1),
            }
        else:
            entries = {
                m - 2: rho(m - 1) * rho(m - 2),
                m - 1: -rho(m - 1) * coef(m - 2),
                m: -coef(m - 1) * np.conj(coef(m)),
                m + 1: -coef(m - 1) * rho(m),
            }
        for col, v in entries.items():
            j = col - n_min
            if 0 <= j < N:
                E[i, j] = v
    return E


def assemble(
    seq: VerblunskySequence,
    n_min: int,
    n_max: int,
    boundary: tuple[complex, complex] = (1.0 + 0j, 1.0 + 0j),
    unitary: bool = True,
) -> CMVOperator:
    """Finite CMV operator on coordinates [n_min, n_max].

    In unitary mode the boundary pair replaces the coefficients at
    n_min - 1 and n_max and must be unimodular; the result is then unitary
    to rounding.  The non-unitary mode keeps the sequence's own edge
    coefficients (plain truncation) and reports the defect instead.
    """
    if n_max <= n_min:
        raise WindowError("need n_max > n_min")
    coef, bpair = _coefficients(seq, n_min, n_max, boundary, unitary)
    L, detL = _factor(coef, n_min, n_max, parity=0)
    M, detM = _factor(coef, n_min, n_max, parity=1)
    E = L @ M
    direct = _band_entries(coef, n_min, n_max)
    agreement = float(np.abs(E - direct).max())
    N = n_max - n_min + 1
    defect = float(np.abs(E.conj().T @ E - np.eye(N)).max())
    return CMVOperator(
        n_min=n_min,
        n_max=n_max,
        boundary=bpair,
        unitary_mode=unitary,
        matrix=E,
        factor_left=L,
        factor_right=M,
        band_agreement=agreement,
        unitarity_defect=defect,
        det=complex(detL * detM),
    )


# ---------------------------------------------------------------------------
# Spectra and profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    vectors: np.ndarray  # column i pairs with eigenvalues[i]
    residuals: np.ndarray
    modulus_defect: float


def spectrum(op: CMVOperator, tol: float = _EIG_TOL) -> SpectralDecomposition:
    """Eigenvalues (sorted by angle) and orthonormal eigenvectors.

    Uses a complex Schur decomposition; for a unitary (normal) matrix the
    Schur form is diagonal, so the Schur basis is an eigenbasis.  Residuals
    ||E v - lambda v|| are checked against ``tol`` and the first failure is
    reported, rather than returning silently wrong pairs.
    """
    if not op.unitary_mode:
        raise DomainError("spectrum requires a unitary-mode operator")
    T, Z = sla.schur(op.matrix, output="complex")
    lam = np.diag(T).copy()
    order = np.argsort(np.angle(lam))
    lam = lam[order]
    Z = Z[:, order]
    res = np.linalg.norm(op.matrix @ Z - Z * lam[None, :], axis=0)
    worst = int(np.argmax(res))
    if res[worst] > tol:
        raise EigensolverError(worst, float(res[worst]), tol)
    mod_defect = float(np.abs(np.abs(lam) - 1.0).max())
    if mod_defect > tol:
        raise EigensolverError(
            int(np.argmax(np.abs(np.abs(lam) - 1.0))), mod_defect, tol
        )
    return SpectralDecomposition(
        eigenvalues=lam, vectors=Z, residuals=res, modulus_defect=mod_defect
    )


@dataclass(frozen=True)
class EigenvectorProfile:
    index: int
    peak: int  # window coordinate of the peak entry
    shell_masses: tuple[float, ...]
    participation_ratio: float

    @property
    def mass_total(self) -> float:
        return sum(self.shell_masses)


def eigenvector_profile(
    op: CMVOperator, decomp: SpectralDecomposition, index: int
) -> EigenvectorProfile:
    """Mass per dyadic distance shell around the peak, plus 1 / sum w^2.

    Shell s = 0 is the peak entry itself; shell s >= 1 collects entries at
    distance in [2^(s-1), 2^s).  Masses sum to 1 for a normalized vector.
    """
    u = decomp.vectors[:, index]
    w = np.abs(u) ** 2
    w = w / w.sum()
    peak = int(np.argmax(w))
    n = w.size
    dist = np.abs(np.arange(n) - peak)
    shells = [float(w[dist == 0].sum())]
    s = 1
    while 2 ** (s - 1) <= n:
        mask = (dist >= 2 ** (s - 1)) & (dist < 2**s)
        shells.append(float(w[mask].sum()))
        s += 1
    pr = float(1.0 / np.sum(w**2))
    return EigenvectorProfile(
        index=index,
        peak=peak + op.n_min,
        shell_masses=tuple(shells),
        participation_ratio=pr,
    )


# ---------------------------------------------------------------------------
# Gauge rotation
# ---------------------------------------------------------------------------


def gauge_rotate(seq: VerblunskySequence, theta: float) -> VerblunskySequence:
    """Multiply every coefficient by e^(i theta)."""
    return VerblunskySequence(
        seq.n_min, seq.n_max, seq.values * np.exp(1j * theta)
    )


def parity_gauge_matrix(n_min: int, n_max: int, theta: float) -> np.ndarray:
    """Diagonal unitary D with E(e^(i theta) a) = D E(a) D*.

    Every entry of the operator is a product of two coefficient factors
    whose phases cancel except across the even/odd coordinate parity, so
    the compensating conjugation is the parity phase diag(e^(i theta (n mod 2))).
    """
    phases = [
        np.exp(1j * theta * (n % 2)) for n in range(n_min, n_max + 1)
    ]
    return np.diag(phases)
