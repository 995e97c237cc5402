"""Distances, fidelity, optimal binary measurements and multi-copy bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from .algebra import CLAMP_TOL, eigvalsh, hermitian_eig
from .channels import BlockState, Channel, density
from .errors import DomainMismatch, MultiBlockUnsupported, NotAPOVM, NotPSD, ObjectMismatch

HELSTROM_CUTOFF = 1e-12
ROUNDOFF_FLOOR = 64 * np.finfo(float).eps


def _state(x) -> BlockState:
    return x if isinstance(x, BlockState) else density(x)


def _pair(r0, r1):
    r0, r1 = _state(r0), _state(r1)
    if r0.object != r1.object:
        raise ObjectMismatch(f"states live on {list(r0.object.dims)} and {list(r1.object.dims)}")
    return r0, r1


def _block_trace_norm(m: np.ndarray) -> float:
    if m.shape[0] == 1:
        return abs(float(m[0, 0].real))
    return float(np.abs(eigvalsh(m)).sum())


def trace_norm_blocks(blocks) -> float:
    """``Σ_b ‖X_b‖₁`` for Hermitian blocks."""
    return sum(_block_trace_norm(b) for b in blocks)


def trace_distance_half(rho0, rho1) -> float:
    """Half the trace norm of ``ρ0 − ρ1``, summed over blocks."""
    r0, r1 = _pair(rho0, rho1)
    val = 0.5 * trace_norm_blocks([a - b for a, b in zip(r0.blocks, r1.blocks)])
    return min(max(val, 0.0), 1.0)


def _root_with_floor(m: np.ndarray) -> np.ndarray:
    """PSD square root with eigenvalues at round-off level set to exactly zero."""
    dec = hermitian_eig(m)
    w = dec.eigenvalues
    if w.size and w.min() < -CLAMP_TOL:
        raise NotPSD(f"minimum eigenvalue {w.min():.3e} < {-CLAMP_TOL:.0e}")
    floor = ROUNDOFF_FLOOR * max(float(w.max()), 0.0) if w.size else 0.0
    root = np.sqrt(np.where(w > floor, w, 0.0))
    return (dec.eigenvectors * root) @ dec.eigenvectors.conj().T


def fidelity(rho0, rho1) -> float:
    """Squared root fidelity ``‖√ρ0 √ρ1‖₁²`` for single-block states.

    This equals ``(Tr √(√ρ0 ρ1 √ρ0))²`` but avoids square roots of the
    round-off eigenvalues of the product, which would cost about eight
    digits on rank-deficient pairs; it is also symmetric by construction.
    """
    r0, r1 = _pair(rho0, rho1)
    if len(r0.blocks) != 1:
        raise MultiBlockUnsupported("fidelity is defined here for single-block states only")
    prod = _root_with_floor(r0.matrix) @ _root_with_floor(r1.matrix)
    sv = np.linalg.svd(prod, compute_uv=False)
    return float(min(sv.sum() ** 2, 1.0))


def fvdg_bounds(rho0, rho1) -> tuple[float, float]:
    """Fuchs-van de Graaf interval ``[1 − √F, √(1 − F)]`` for half the trace distance."""
    f = fidelity(rho0, rho1)
    return 1.0 - math.sqrt(f), math.sqrt(max(0.0, 1.0 - f))


@dataclass(frozen=True)
class MulticopyBounds:
    """Bounds on ``½‖ρ0^{⊗n} − ρ1^{⊗n}‖₁``.

    ``upper_raw`` is ``√(1 − (1 − t)^n)`` with ``t = ‖ρ0 − ρ1‖₁`` and
    ``upper`` is that value clamped to 1. ``upper_fidelity`` is the sharper
    ``√(1 − (1 − t/2)^{2n})``, which is always valid; ``upper_raw`` can drop
    below the true distance when ``n`` is even and ``t/2 > 2 − √2``.
    """

    lower: float
    upper: float
    upper_raw: float
    upper_fidelity: float

    def __iter__(self):
        return iter((self.lower, self.upper))


def multicopy_bounds(rho0, rho1, n: int) -> MulticopyBounds:
    """Lower ``1 − (1 − D²)^{n/2}`` and upper ``√(1 − (1 − 2D)^n)``, ``D`` the half distance.

    Unpacks as ``(lower, upper)``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    half = trace_distance_half(rho0, rho1)
    full = 2.0 * half
    lower = 1.0 - math.sqrt(max(0.0, 1.0 - half * half)) ** n
    raw = math.sqrt(max(0.0, 1.0 - (1.0 - full) ** n))
    via_f = math.sqrt(max(0.0, 1.0 - (1.0 - half) ** (2 * n)))
    return MulticopyBounds(max(lower, 0.0), min(raw, 1.0), raw, via_f)


def pure_multicopy_distance(overlap: float, n: int) -> float:
    """``√(1 − overlapⁿ)`` where ``overlap = |⟨ψ|φ⟩|²``."""
    if not 0.0 <= overlap <= 1.0 + 1e-12:
        raise ValueError(f"overlap {overlap} outside [0, 1]")
    return math.sqrt(max(0.0, 1.0 - min(overlap, 1.0) ** n))


@dataclass(frozen=True)
class DistinguisherResult:
    """A two-outcome measurement with the advantage it achieves on a stored pair.

    Effects are block-diagonal matrices over the direct sum of the state's
    blocks; for a one-block state they are ordinary matrices.
    """

    advantage: float
    effect0: np.ndarray
    effect1: np.ndarray
    dims: tuple = ()

    def measurement(self) -> Channel:
        """The destructive measurement channel ``object -> [1, 1]``."""
        from .channels import AlgebraObject, classical

        dom = AlgebraObject(self.dims or (self.effect0.shape[0],))
        rows = []
        for e in (self.effect0, self.effect1):
            rows.append(np.concatenate([b.conj().ravel() for b in _split(e, dom.dims)]))
        return Channel(dom, classical(2), np.stack(rows), "helstrom")


def _split(m: np.ndarray, dims) -> list[np.ndarray]:
    out, o = [], 0
    for n in dims:
        out.append(m[o:o + n, o:o + n])
        o += n
    return out


def _pair_inner(effect: np.ndarray, s: BlockState) -> float:
    return float(sum(np.vdot(e, b).real for e, b in zip(_split(effect, s.object.dims), s.blocks)))


def helstrom(rho0, rho1) -> DistinguisherResult:
    """Optimal measurement: ``effect1`` projects onto the positive part of ``ρ1 − ρ0``.

    Zero eigenvalues (below ``1e-12``) go to ``effect0``.
    """
    r0, r1 = _pair(rho0, rho1)
    projs = []
    for a, b in zip(r0.blocks, r1.blocks):
        dec = hermitian_eig(b - a)
        v = dec.eigenvectors[:, dec.eigenvalues > HELSTROM_CUTOFF]
        projs.append(v @ v.conj().T)
    e1 = block_diag(*projs)
    e0 = np.eye(e1.shape[0]) - e1
    adv = _pair_inner(e1, r1) - _pair_inner(e1, r0)
    return DistinguisherResult(adv, e0, e1, r0.object.dims)


def advantage(meas, rho0, rho1, tol: float = 1e-9) -> float:
    """``⟨E1, ρ1⟩ − ⟨E1, ρ0⟩`` for a binary POVM ``(E0, E1)``."""
    r0, r1 = _pair(rho0, rho1)
    if isinstance(meas, DistinguisherResult):
        e0, e1 = meas.effect0, meas.effect1
    else:
        e0, e1 = (np.asarray(m, dtype=np.complex128) for m in meas)
    n = sum(r0.object.dims)
    if e0.shape != (n, n) or e1.shape != (n, n):
        raise NotAPOVM("effects do not match the state space")
    if np.linalg.norm(e0 + e1 - np.eye(n)) > tol:
        raise NotAPOVM("effects do not sum to the identity")
    for e in (e0, e1):
        if np.linalg.norm(e - e.conj().T) > tol or (n > 1 and eigvalsh(e)[-1] < -tol):
            raise NotAPOVM("effect is not positive semidefinite")
    return _pair_inner(e1, r1) - _pair_inner(e1, r0)


# --------------------------------------------------------------------------
# diamond-norm lower estimate
# --------------------------------------------------------------------------


def _choi_blocks(delta: np.ndarray, ch: Channel) -> list[np.ndarray]:
    """Choi matrices ``J[(e,a),(f,a')] = Δ(|a⟩⟨a'|)[e,f]`` of each output block."""
    m = ch.domain.dims[0]
    out = []
    for i, n in enumerate(ch.codomain.dims):
        o = ch.codomain.offsets[i]
        f = delta[o:o + n * n, :].reshape(n, n, m, m)
        out.append(f.transpose(0, 2, 1, 3).reshape(n * m, n * m))
    return out


def _output_blocks(chois, y: np.ndarray, m: int) -> list[np.ndarray]:
    # (I ⊗ Yᵀ) J (I ⊗ conj Y) for an input Σ Y[a,c] |a⟩|c⟩
    outs = []
    for j in chois:
        n = j.shape[0] // m
        w = np.kron(np.eye(n), y.T)
        outs.append(w @ j @ w.conj().T)
    return outs


def _seesaw(chois, y: np.ndarray, m: int, steps: int) -> float:
    best = trace_norm_blocks(_output_blocks(chois, y, m))
    for _ in range(steps):
        mat = np.zeros((m * m, m * m), dtype=np.complex128)
        for j, out in zip(chois, _output_blocks(chois, y, m)):
            n = j.shape[0] // m
            dec = hermitian_eig((out + out.conj().T) / 2)
            sign = (dec.eigenvectors * np.sign(dec.eigenvalues)) @ dec.eigenvectors.conj().T
            s4 = sign.reshape(n, m, n, m)
            j4 = j.reshape(n, m, n, m)
            mat += np.einsum("fCec,eafA->ACac", s4, j4).reshape(m * m, m * m)
        mat = (mat + mat.conj().T) / 2
        top = hermitian_eig(mat).eigenvectors[:, 0]
        y = top.reshape(m, m)
        val = trace_norm_blocks(_output_blocks(chois, y, m))
        if val <= best + 1e-13:
            best = max(best, val)
            break
        best = val
    return best


def diamond_lower_estimate(phi: Channel, psi: Channel, budget: int = 100, seed: int = 0,
                           steps: int = 10) -> float:
    """Certified lower bound on ``‖Φ − Ψ‖_⋄`` (full norm, at most 2).

    Evaluates ``‖((Φ − Ψ) ⊗ id)(|ψ⟩⟨ψ|)‖₁`` on ``max(1, budget // steps)``
    pure inputs, each improved by a see-saw between the sign of the output
    and the best input for that sign. Restart 0 starts from the maximally
    entangled input and from each product input ``|a⟩|0⟩``; restart ``k``
    is seeded from ``(seed, k)``, so a larger budget evaluates a superset of
    inputs and never returns less.
    """
    if phi.domain != psi.domain or phi.codomain != psi.codomain:
        raise DomainMismatch("channels must share domain and codomain")
    if len(phi.domain) != 1:
        raise MultiBlockUnsupported("diamond estimate needs a single-block domain")
    m = phi.domain.dims[0]
    delta = np.asarray(phi.action) - np.asarray(psi.action)
    if not np.any(np.abs(delta) > 1e-15):
        return 0.0
    chois = _choi_blocks(delta, phi)
    restarts = max(1, int(budget) // steps)
    starts = [np.eye(m, dtype=np.complex128) / math.sqrt(m)]
    for a in range(m):
        y = np.zeros((m, m), dtype=np.complex128)
        y[a, 0] = 1.0
        starts.append(y)
    best = max(_seesaw(chois, y, m, steps) for y in starts)
    for k in range(1, restarts):
        rng = np.random.default_rng([seed, k])
        y = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
        y /= np.linalg.norm(y)
        best = max(best, _seesaw(chois, y, m, steps))
    return float(min(best, 2.0))
