"""Transfer matrices, Lipschitz budgets, Gordon certification, lower bounds.

One-step matrices follow the Szego convention

    S(a, z) = rho^-1 [[z, -conj(a)], [-a z, 1]],   rho = (1 - |a|^2)^(1/2),

whose determinant is exactly z.  Three consecutive coefficients enter the
three-step product P_n = S(a(n+2)) S(a(n+1)) S(a(n)); an explicit Lipschitz
constant L3(r) for P_n as a function of the coefficient triple turns the
near-repetition of a coefficient window into closeness of transfer blocks,
which is what the certification below measures.

All matrix work is float; exactness lives upstream in the dynamics.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, WindowError

EVIDENCE_PASS_THRESHOLD = 0.25  # half of the periodic-case floor 1/2
_UNDERFLOW_LOG10 = -300.0


# ---------------------------------------------------------------------------
# One-step matrices and products
# ---------------------------------------------------------------------------


def _rho(a) -> float:
    m = abs(a)
    return math.sqrt((1.0 - m) * (1.0 + m))


def szego_matrix(alpha: complex, z: complex) -> np.ndarray:
    if abs(alpha) >= 1:
        raise DomainError("|alpha| must be < 1")
    if abs(abs(z) - 1.0) > 1e-9:
        raise DomainError("z must lie on the unit circle")
    r = _rho(alpha)
    return np.array(
        [[z, -np.conj(alpha)], [-alpha * z, 1.0]], dtype=complex
    ) / r


def szego_batch(alpha: np.ndarray, z) -> np.ndarray:
    """S(alpha_i, z_i) as an (..., 2, 2) stack."""
    alpha = np.asarray(alpha, dtype=complex)
    z = np.asarray(z, dtype=complex)
    r = np.sqrt((1.0 - np.abs(alpha)) * (1.0 + np.abs(alpha)))
    out = np.empty(np.broadcast(alpha, z).shape + (2, 2), dtype=complex)
    out[..., 0, 0] = z
    out[..., 0, 1] = -np.conj(alpha)
    out[..., 1, 0] = -alpha * z
    out[..., 1, 1] = 1.0
    return out / r[..., None, None]


def block_product(seq, z: complex, n_from: int, n_to: int) -> np.ndarray:
    """Ordered product S(a(n_to-1), z) ... S(a(n_from), z); empty = identity."""
    if n_to < n_from:
        raise DomainError("n_to must be >= n_from")
    if n_to == n_from:
        return np.eye(2, dtype=complex)
    seq.require(n_from, n_to - 1)
    P = np.eye(2, dtype=complex)
    for n in range(n_from, n_to):
        P = szego_matrix(seq.alpha(n), z) @ P
    return P


def block_product_grid(seq, zs: np.ndarray, n_from: int, n_to: int) -> np.ndarray:
    """block_product for a whole z-grid at once: (len(zs), 2, 2)."""
    if n_to < n_from:
        raise DomainError("n_to must be >= n_from")
    zs = np.asarray(zs, dtype=complex)
    P = np.broadcast_to(np.eye(2, dtype=complex), zs.shape + (2, 2)).copy()
    if n_to == n_from:
        return P
    seq.require(n_from, n_to - 1)
    for n in range(n_from, n_to):
        P = szego_batch(np.full(zs.shape, seq.alpha(n)), zs) @ P
    return P


def spectral_norm_2x2(A: np.ndarray) -> np.ndarray:
    """Largest singular value, closed form, vectorized over leading axes."""
    f = np.sum(np.abs(A) ** 2, axis=(-2, -1))
    d = np.abs(
        A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
    ) ** 2
    return np.sqrt((f + np.sqrt(np.maximum(f * f - 4 * d, 0.0))) / 2)


def inv_2x2(A: np.ndarray) -> np.ndarray:
    det = A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
    out = np.empty_like(A)
    out[..., 0, 0] = A[..., 1, 1]
    out[..., 0, 1] = -A[..., 0, 1]
    out[..., 1, 0] = -A[..., 1, 0]
    out[..., 1, 1] = A[..., 0, 0]
    return out / det[..., None, None]


# ---------------------------------------------------------------------------
# Lipschitz budget for three-step products
# ---------------------------------------------------------------------------


def szego_norm_bound(r: float) -> float:
    """sup of ||S(a, z)|| over |a| <= r, |z| = 1 (largest singular value)."""
    if not 0 <= r < 1:
        raise DomainError("r must lie in [0, 1)")
    return math.sqrt((1 + r) / (1 - r))


def szego_lipschitz_bound(r: float) -> float:
    """C(r) with ||S(a,z) - S(b,z)|| <= C(r) |a - b| for |a|, |b| <= r.

    Split S = rho(a)^-1 B(a): the B difference has norm exactly |a - b|,
    and |rho(a)^-1 - rho(b)^-1| <= r |a-b| / (1-r^2)^(3/2) with
    ||B|| <= 1 + r.
    """
    if not 0 <= r < 1:
        raise DomainError("r must lie in [0, 1)")
    one = 1.0 / math.sqrt(1 - r * r)
    return r * (1 + r) * one**3 + one


def three_step_lipschitz(r: float) -> float:
    """L3(r): ||P - P~|| <= L3(r) max_i |a_i - a~_i| for three-step products.

    Telescoping the product difference gives three terms, each at most
    ||S||^2 times a one-step difference, hence 3 M(r)^2 C(r).
    """
    m = szego_norm_bound(r)
    return 3.0 * m * m * szego_lipschitz_bound(r)


@dataclass(frozen=True)
class LipschitzValidation:
    r: float
    bound: float
    samples: int
    max_ratio: float
    violations: int


def validate_three_step_lipschitz(
    r: float, samples: int = 100_000, seed: int = 20240601
) -> LipschitzValidation:
    """Finite-difference sampling against L3(r); ratios must stay <= 1."""
    bound = three_step_lipschitz(r)
    if r == 0.0:
        return LipschitzValidation(r, bound, 0, 0.0, 0)
    rng = np.random.default_rng(seed)
    z = np.exp(2j * np.pi * rng.random(samples))
    a = (
        np.sqrt(rng.random((samples, 3)))
        * r
        * np.exp(2j * np.pi * rng.random((samples, 3)))
    )
    scale = 10.0 ** rng.uniform(-6, 0, (samples, 3))
    step = scale * r * np.exp(2j * np.pi * rng.random((samples, 3)))
    at = a + step
    m = np.abs(at)
    at = np.where(m > r, at * (r / np.where(m == 0, 1.0, m)), at)
    S = [szego_batch(a[:, i], z) for i in range(3)]
    St = [szego_batch(at[:, i], z) for i in range(3)]
    P = S[2] @ S[1] @ S[0]
    Pt = St[2] @ St[1] @ St[0]
    dmax = np.abs(at - a).max(axis=1)
    ok = dmax > 0
    ratio = spectral_norm_2x2(P[ok] - Pt[ok]) / (bound * dmax[ok])
    return LipschitzValidation(
        r=r,
        bound=bound,
        samples=int(ok.sum()),
        max_ratio=float(ratio.max()) if ratio.size else 0.0,
        violations=int((ratio > 1.0).sum()),
    )


@dataclass(frozen=True)
class ToleranceBound:
    """Coefficient budget making three-step products k^-q close.

    value = k^-q / L3(r); if three consecutive coefficients of two windows
    differ by less than this, the corresponding three-step products differ
    by less than k^-q in operator norm, by construction of L3.
    ``underflowed`` marks budgets below the float range: the value is then
    the smallest positive float and only an exactly-zero defect can pass.
    """

    k: int
    q: int
    r: float
    value: float
    log10: float
    lipschitz: float
    underflowed: bool


def coefficient_tolerance(k: int, q: int, r: float) -> ToleranceBound:
    if k < 1 or q < 1:
        raise DomainError("k and q must be positive integers")
    if not 0 <= r < 1:
        raise DomainError("r must lie in [0, 1)")
    L = three_step_lipschitz(r)
    log10 = -q * math.log10(k) - math.log10(L)
    if log10 < _UNDERFLOW_LOG10:
        return ToleranceBound(k, q, r, math.ulp(0.0), log10, L, True)
    return ToleranceBound(k, q, r, 10.0**log10, log10, L, False)


# ---------------------------------------------------------------------------
# Gordon certification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GordonLevel:
    k: int
    q: int
    r: float
    defect: float
    threshold: float
    passed: bool
    underflowed: bool


@dataclass(frozen=True)
class GordonCertificate:
    """Measured repetition defects of a coefficient window against the
    level-k thresholds tolerance(k, q_k, r_k) / 4.

    r_k is the radius of the smallest origin-centered disk holding
    alpha(-2 q_k + 1) .. alpha(2 q_k + 1); the defect is the max of
    |alpha(n) - alpha(n +- q_k)| over -q_k + 1 <= n <= q_k + 1.
    """

    sequence_id: str
    levels: tuple[GordonLevel, ...]

    @property
    def all_passed(self) -> bool:
        return all(l.passed for l in self.levels)

    def largest_passing(self) -> Optional[GordonLevel]:
        best = None
        for l in self.levels:
            if l.passed and (best is None or l.q >= best.q):
                best = l
        return best


def certify_gordon(
    seq, pairs: Sequence[tuple[int, int]], sequence_id: str = ""
) -> GordonCertificate:
    """Certify candidate even periods q_k at levels k.

    ``pairs`` lists (k, q_k); periods must be even and non-decreasing in k.
    The window must cover [-2 q_k + 1, 2 q_k + 1] for every candidate.
    """
    last_q = 0
    levels = []
    for k, q in pairs:
        if q < 2 or q % 2 != 0:
            raise DomainError(f"candidate period {q} must be even and >= 2")
        if q < last_q:
            raise DomainError("candidate periods must be non-decreasing")
        last_q = q
        seq.require(-2 * q + 1, 2 * q + 1)
        r_k = float(
            np.abs(seq.slice(-2 * q + 1, 2 * q + 1)).max()
        )
        defect = 0.0
        for n in range(-q + 1, q + 2):
            a = seq.alpha(n)
            defect = max(
                defect, abs(a - seq.alpha(n + q)), abs(a - seq.alpha(n - q))
            )
        tol = coefficient_tolerance(k, q, r_k)
        threshold = tol.value / 4.0
        levels.append(
            GordonLevel(
                k=k,
                q=q,
                r=r_k,
                defect=defect,
                threshold=threshold,
                passed=defect <= threshold,
                underflowed=tol.underflowed,
            )
        )
    return GordonCertificate(sequence_id=sequence_id, levels=tuple(levels))


# ---------------------------------------------------------------------------
# Three-block lower bound and evidence tables
# ---------------------------------------------------------------------------


def min_max_over_unit_vectors(
    mats: np.ndarray, grid: int = 32, rounds: int = 6
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """min over unit v in C^2 of max_i ||mats[..., i, :, :] v||.

    Vectors are parameterized on the projective sphere as
    (cos t, e^(i p) sin t); a grid*grid sweep (1024 points by default) is
    followed by local zooms around the best cell.  Returns (value, t, p)
    per batch element.
    """
    mats = np.asarray(mats, dtype=complex)
    single = mats.ndim == 3
    if single:
        mats = mats[None]
    B = mats.shape[0]
    H = np.einsum("bkji,bkjl->bkil", mats.conj(), mats)
    tc = np.full(B, np.pi / 4)
    pc = np.full(B, np.pi)
    wt = np.full(B, np.pi / 4)
    wp = np.full(B, np.pi)
    best = np.full(B, np.inf)
    bt = tc.copy()
    bp = pc.copy()
    offsets = np.linspace(-1.0, 1.0, grid)
    for _ in range(rounds):
        ths = tc[:, None] + wt[:, None] * offsets[None, :]
        phs = pc[:, None] + wp[:, None] * offsets[None, :]
        ct = np.cos(ths)
        st = np.sin(ths)
        ep = np.exp(1j * phs)
        v0 = np.broadcast_to(ct[:, :, None], (B, grid, grid))
        v1 = st[:, :, None] * ep[:, None, :]
        V = np.stack([v0, v1], axis=-1)  # (B, grid, grid, 2)
        f = np.einsum("btpi,bkij,btpj->bktp", V.conj(), H, V).real
        m = np.sqrt(np.maximum(f.max(axis=1), 0.0))
        flat = m.reshape(B, -1)
        idx = flat.argmin(axis=1)
        val = flat[np.arange(B), idx]
        it, ip = np.unravel_index(idx, (grid, grid))
        upd = val < best
        best = np.where(upd, val, best)
        bt = np.where(upd, ths[np.arange(B), it], bt)
        bp = np.where(upd, phs[np.arange(B), ip], bp)
        tc, pc = bt.copy(), bp.copy()
        wt = wt * (4.0 / grid)
        wp = wp * (4.0 / grid)
    if single:
        return best[0], bt[0], bp[0]
    return best, bt, bp


@dataclass(frozen=True)
class LowerBoundResult:
    z: complex
    c: float
    norm_forward: float
    norm_double: float
    norm_backward: float
    grid: int
    rounds: int


def gordon_lower_bound(
    seq, q: int, z: complex, grid: int = 32, rounds: int = 6
) -> LowerBoundResult:
    """c(z) = min over unit v of max(||B+ v||, ||B++ v||, ||B- v||).

    B+ propagates 0 -> q, B++ propagates 0 -> 2q and B- propagates
    0 -> -q (the inverse of the product over [-q, 0)).  For a window that
    is exactly q-periodic these are A, A^2, A^-1, and the Cayley-Hamilton
    argument for unit-modulus determinants floors the value at 1/2.
    """
    if q < 2 or q % 2 != 0:
        raise DomainError("q must be even and >= 2")
    seq.require(-q, 2 * q)
    fwd = block_product(seq, z, 0, q)
    dbl = block_product(seq, z, 0, 2 * q)
    bwd = np.linalg.inv(block_product(seq, z, -q, 0))
    c, _, _ = min_max_over_unit_vectors(
        np.stack([fwd, dbl, bwd]), grid=grid, rounds=rounds
    )
    return LowerBoundResult(
        z=complex(z),
        c=float(c),
        norm_forward=float(spectral_norm_2x2(fwd)),
        norm_double=float(spectral_norm_2x2(dbl)),
        norm_backward=float(spectral_norm_2x2(bwd)),
        grid=grid,
        rounds=rounds,
    )


def validate_periodic_floor(
    samples: int = 10_000,
    seed: int = 20240601,
    grid: int = 32,
    rounds: int = 4,
    chunk: int = 512,
) -> float:
    """Brute-force floor check: random 2x2 matrices with |det| = 1 give
    min over unit v of max(||A v||, ||A^2 v||, ||A^-1 v||) >= 1/2.

    Returns the smallest value seen; it must not undercut 1/2 beyond
    grid-search slack (the sampled minimum upper-bounds nothing and
    lower-bounds the search, so a dip below 1/2 would expose an error in
    either the bound or the solver).
    """
    rng = np.random.default_rng(seed)
    worst = np.inf
    left = samples
    while left > 0:
        b = min(chunk, left)
        left -= b
        A = rng.normal(size=(b, 2, 2)) + 1j * rng.normal(size=(b, 2, 2))
        det = A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] * A[:, 1, 0]
        bad = np.abs(det) < 1e-12
        A[bad] = np.eye(2)
        det[bad] = 1.0
        A = A / np.sqrt(np.abs(det))[:, None, None]
        mats = np.stack([A, A @ A, inv_2x2(A)], axis=1)
        vals, _, _ = min_max_over_unit_vectors(mats, grid=grid, rounds=rounds)
        worst = min(worst, float(vals.min()))
    return worst


@dataclass(frozen=True)
class EvidenceRow:
    angle: float
    c: float
    norm_forward: float
    norm_double: float
    norm_backward: float


@dataclass(frozen=True)
class EvidenceTable:
    """c(z) on a circle grid with the PASS/FAIL verdict at threshold 1/4.

    ``source`` records whether q came from a passing certificate or was
    supplied explicitly (the negative-control path for sequences that are
    deliberately not Gordon).
    """

    q: int
    source: str
    rows: tuple[EvidenceRow, ...]
    min_c: float
    argmin_angle: float
    threshold: float
    verdict: str

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"


def no_point_spectrum_evidence(
    seq,
    certificate: Optional[GordonCertificate] = None,
    z_grid: int = 512,
    q: Optional[int] = None,
    extra_angles: Sequence[float] = (),
    grid: int = 32,
    rounds: int = 6,
) -> EvidenceTable:
    """Tabulate c(z) on a uniform unit-circle grid (plus optional extra
    angles) at the largest certified period, or at an explicit q.

    Verdict is PASS when the minimum stays at or above 1/4, half the
    periodic-case constant; FAIL otherwise.
    """
    if certificate is not None:
        level = certificate.largest_passing()
        if level is None:
            raise DomainError(
                "certificate has no passing level; pass q explicitly for "
                "negative controls"
            )
        q_use = level.q
        source = "certified"
    elif q is not None:
        q_use = q
        source = "explicit"
    else:
        raise DomainError("need a certificate or an explicit q")
    if z_grid < 1:
        raise DomainError("z_grid must be >= 1")
    angles = list(2.0 * math.pi * np.arange(z_grid) / z_grid)
    angles.extend(float(a) for a in extra_angles)
    zs = np.exp(1j * np.array(angles))
    fwd = block_product_grid(seq, zs, 0, q_use)
    dbl = block_product_grid(seq, zs, 0, 2 * q_use)
    bwd = inv_2x2(block_product_grid(seq, zs, -q_use, 0))
    mats = np.stack([fwd, dbl, bwd], axis=1)
    cs, _, _ = min_max_over_unit_vectors(mats, grid=grid, rounds=rounds)
    nf = spectral_norm_2x2(fwd)
    nd = spectral_norm_2x2(dbl)
    nb = spectral_norm_2x2(bwd)
    rows = tuple(
        EvidenceRow(
            angle=float(a),
            c=float(c),
            norm_forward=float(f),
            norm_double=float(d),
            norm_backward=float(b),
        )
        for a, c, f, d, b in zip(angles, cs, nf, nd, nb)
    )
    imin = int(np.argmin(cs))
    min_c = float(cs[imin])
    verdict = "PASS" if min_c >= EVIDENCE_PASS_THRESHOLD else "FAIL"
    return EvidenceTable(
        q=q_use,
        source=source,
        rows=rows,
        min_c=min_c,
        argmin_angle=float(angles[imin]),
        threshold=EVIDENCE_PASS_THRESHOLD,
        verdict=verdict,
    )
