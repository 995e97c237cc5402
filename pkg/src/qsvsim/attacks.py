"""Attack states, simulators and the two distinguishing measurements."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import hermitian_eig
from .channels import (
    UNIT,
    BlockState,
    Channel,
    classical,
    compose,
    density,
    distribution,
    dsum,
    identity,
    kraus_channel,
    object_dsum,
    prepare,
    trace_channel,
)
from .combs import fill
from .errors import DimensionTooSmall, PerturbationBreaksPositivity, TargetNotPure
from .metrics import helstrom, trace_distance_half
from .protocols import Protocol, TargetSpec, client_comb, ideal_channel

ALPHA = 2.0 / 9.0


@dataclass(frozen=True)
class AttackConstruction:
    """An i.i.d. source state plus the parameters that produced it."""

    kind: str
    rho: BlockState
    params: dict = field(default_factory=dict)
    xi: np.ndarray | None = None
    psi: np.ndarray | None = None
    theta: float | None = None
    eta: float | None = None
    measurement: Channel | None = None

    @property
    def matrix(self) -> np.ndarray:
        return self.rho.matrix


def completion_vectors(v: np.ndarray, count: int) -> list[np.ndarray]:
    """First ``count`` vectors of a Gram-Schmidt completion of ``v`` by the computational basis."""
    basis = [v / np.linalg.norm(v)]
    out = []
    d = v.size
    for j in range(d):
        if len(out) == count:
            break
        w = np.zeros(d, dtype=np.complex128)
        w[j] = 1.0
        for b in basis:
            w = w - np.vdot(b, w) * b
        n = np.linalg.norm(w)
        if n > 1e-8:
            w = w / n
            basis.append(w)
            out.append(w)
    return out


def orthonormal_basis_from(v: np.ndarray) -> np.ndarray:
    """Unitary whose first column is ``v``; the rest complete it by Gram-Schmidt."""
    v = v / np.linalg.norm(v)
    cols = [v] + completion_vectors(v, v.size - 1)
    return np.stack(cols, axis=1)


def _require_pure(t: TargetSpec):
    if not t.is_pure:
        raise TargetNotPure("this construction needs a pure target")


def pure_attack_state(t: TargetSpec, N: int) -> AttackConstruction:
    """``ψ = √(1−τ²) φ + τ φ⊥`` with ``τ = 1/(2√N)``."""
    _require_pure(t)
    if N < 1:
        raise ValueError("N must be at least 1")
    phi = t.vector()
    perp = completion_vectors(phi, 1)[0]
    tau = 1.0 / (2.0 * math.sqrt(N))
    psi = math.sqrt(1.0 - tau * tau) * phi + tau * perp
    rho = density(np.outer(psi, psi.conj()))
    overlap = float(abs(np.vdot(psi, phi)) ** 2)
    return AttackConstruction("pure-tau", rho, {"tau": tau, "N": N, "overlap": overlap}, psi=psi)


def mixed_attack_state(t: TargetSpec, N: float, alpha: float = ALPHA) -> AttackConstruction:
    """``ρ = φ + (α/N)(P_min − P_max)``, so ``½‖ρ − φ‖₁ = α/N``.

    ``P_max``/``P_min`` project onto an eigenvector of the largest/smallest
    eigenvalue of ``φ``. ``params["min_N"]`` is the smallest ``N`` for which
    ``ρ`` stays positive.
    """
    if t.d < 2:
        raise DimensionTooSmall("need d >= 2 to perturb the target")
    dec = hermitian_eig(t.matrix)
    vmax, vmin = dec.eigenvectors[:, 0], dec.eigenvectors[:, -1]
    lmax, lmin = float(dec.eigenvalues[0]), float(dec.eigenvalues[-1])
    eps = alpha / N
    if lmax - eps < -1e-12:
        raise PerturbationBreaksPositivity(f"alpha/N = {eps:.4g} exceeds the top eigenvalue {lmax:.4g}")
    delta = np.outer(vmin, vmin.conj()) - np.outer(vmax, vmax.conj())
    rho = density(t.matrix + eps * delta)
    params = {"alpha": alpha, "N": N, "distance": eps, "min_N": alpha / lmax if lmax > 0 else math.inf,
              "gap": lmax - lmin}
    return AttackConstruction("mixed-alpha", rho, params)


def omega(phi: np.ndarray) -> float:
    """``d/(d−1) · ½‖φ − I/d‖₁``."""
    d = phi.shape[0]
    return d / (d - 1) * trace_distance_half(density(phi), density(np.eye(d) / d))


def depolarized_attack_state(t: TargetSpec, beta: float) -> AttackConstruction:
    """``ρ = (1−β) φ + β (I − φ)/(d − 1)``."""
    d = t.d
    if d < 2:
        raise DimensionTooSmall("need d >= 2")
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    phi = t.matrix
    rho = density((1 - beta) * phi + beta * (np.eye(d) - phi) / (d - 1))
    w = omega(phi)
    return AttackConstruction("depolarized", rho, {"beta": beta, "omega": w, "distance": beta * w})


def measurement_attack_construction(t: TargetSpec, N: int) -> AttackConstruction:
    """Attack against a protocol whose output is measured in a basis containing ``ξ``.

    ``ξ = φ/√d + √(1 − 1/d)(c₁ + c₂)/√2`` with ``c₁, c₂`` completion vectors,
    so ``⟨ξ|φ⟩ = 1/√d``. The attack vector ``ψ = cos η φ + sin η b₁`` lies in
    the ``{φ, ξ}`` plane, ``b₁`` being ``ξ`` orthogonalised against ``φ``,
    with ``sin η = 1/(2√N)``. ``measurement`` is the channel
    ``ρ ↦ Σ_j ⟨ξ_j|ρ|ξ_j⟩ |j⟩⟨j|`` for the basis ``ξ_0 = ξ, ξ_1, ...``.
    """
    _require_pure(t)
    d = t.d
    if d < 3:
        raise DimensionTooSmall("the measurement construction needs d >= 3")
    phi = t.vector()
    c1, c2 = completion_vectors(phi, 2)
    xi = phi / math.sqrt(d) + math.sqrt(1 - 1 / d) * (c1 + c2) / math.sqrt(2)
    xi = xi / np.linalg.norm(xi)
    cos_t = abs(np.vdot(xi, phi))
    theta = math.acos(cos_t)
    b1 = (xi - np.vdot(phi, xi) * phi) / math.sin(theta)
    eta = math.asin(1.0 / (2.0 * math.sqrt(N)))
    psi = math.cos(eta) * phi + math.sin(eta) * b1
    if math.sin(2 * theta - eta) < math.sin(eta) - 1e-12:
        raise ValueError("sin(2θ − η) < sin η for this N")
    basis = orthonormal_basis_from(xi)
    kraus = []
    for j in range(d):
        k = np.zeros((d, d), dtype=np.complex128)
        k[j, :] = basis[:, j].conj()
        kraus.append(k)
    meas = kraus_channel(kraus, "xi-basis")
    rho = density(np.outer(psi, psi.conj()))
    params = {"N": N, "theta": theta, "eta": eta,
              "gain": float(abs(np.vdot(xi, psi)) ** 2 - abs(np.vdot(xi, phi)) ** 2),
              "identity": math.sin(eta) * math.sin(2 * theta - eta)}
    return AttackConstruction("measurement", rho, params, xi=xi, psi=psi, theta=theta, eta=eta,
                              measurement=meas)


def custom_attack(rho) -> AttackConstruction:
    r = rho if isinstance(rho, BlockState) else density(rho)
    return AttackConstruction("custom", r, {})


def iid_attack(rho, p: Protocol) -> Channel:
    """Fill the client comb with one ``prepare(ρ)`` per hole: ``[1] -> [d'] ⊕ [1]``."""
    r = rho.rho if isinstance(rho, AttackConstruction) else rho
    r = r if isinstance(r, BlockState) else density(r)
    c = client_comb(p)
    return fill(c, [prepare(r)] * len(c.signature))


def simulator_channel(t: TargetSpec, q: float, post: Channel | None = None) -> Channel:
    """Ideal resource fed ``c = 0`` with probability ``q``: ``[1] -> [d'] ⊕ [1]``."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    ch = compose(ideal_channel(t), prepare(distribution([q, 1.0 - q])))
    if post is not None:
        ch = compose(dsum(post, identity(UNIT)), ch)
    return ch


def honest_distinguisher(t: TargetSpec, post: Channel | None = None) -> Channel:
    """``Tr ⊕ id``: outcome 0 on accept, 1 on abort."""
    out = post.codomain if post is not None else t.object
    return dsum(trace_channel(out), identity(UNIT))


def dishonest_distinguisher(t: TargetSpec, rho, gamma1: np.ndarray | None = None,
                            post: Channel | None = None) -> Channel:
    """``{γ(0) ⊕ 1, γ(1) ⊕ 0}`` with ``γ`` the Helstrom measurement for ``(φ, ρ)``.

    With ``post`` given, ``γ`` separates the post-processed states.
    """
    phi = t.state
    r = rho.rho if isinstance(rho, AttackConstruction) else rho
    r = r if isinstance(r, BlockState) else density(r)
    if post is not None:
        phi, r = post(phi), post(r)
    if gamma1 is None:
        gamma1 = helstrom(phi, r).effect1
    gamma1 = np.asarray(gamma1, dtype=np.complex128)
    gamma0 = np.eye(gamma1.shape[0]) - gamma1
    dom = object_dsum(phi.object, UNIT)
    rows = np.stack([
        np.concatenate([gamma0.conj().ravel(), [1.0]]),
        np.concatenate([gamma1.conj().ravel(), [0.0]]),
    ])
    return Channel(dom, classical(2), rows, "M_D")


def direction_lambda(t: TargetSpec, rho, chi=None, gamma1: np.ndarray | None = None) -> float:
    """``min(⟨γ(1), χ⟩ − ⟨γ(1), φ⟩, ⟨γ(1), ρ⟩ − ⟨γ(1), φ⟩)`` for the Helstrom ``γ`` of ``(φ, ρ)``.

    Without ``chi`` only the ``ρ`` term is used. The lower-bound argument
    needs this to be non-negative; no optimality over directions is claimed.
    """
    r = rho.rho if isinstance(rho, AttackConstruction) else rho
    r = r if isinstance(r, BlockState) else density(r)
    if gamma1 is None:
        gamma1 = helstrom(t.state, r).effect1
    phi_val = float(np.vdot(gamma1, t.matrix).real)
    terms = [float(np.vdot(gamma1, r.matrix).real) - phi_val]
    if chi is not None:
        c = chi.matrix if isinstance(chi, BlockState) else np.asarray(chi)
        terms.append(float(np.vdot(gamma1, c).real) - phi_val)
    return min(terms)
