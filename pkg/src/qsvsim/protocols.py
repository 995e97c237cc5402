"""Verification protocols, the ideal verification resource and its filter.

The fast path (:func:`game_output`) evaluates a protocol against an i.i.d.
source analytically: with tests that factorise per copy, acceptance
probabilities are scalar powers or binomial tails, so ``N`` can be very
large. The comb builders produce the same channel explicitly and are used as
an oracle at small sizes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.stats import binom

from .algebra import eigvalsh, frobenius_inner, hermitian_eig
from .channels import (
    UNIT,
    AlgebraObject,
    BlockState,
    Channel,
    apply,
    classical,
    compose,
    compose_all,
    density,
    distribution,
    dsum,
    elif_channel,
    forget_branch,
    identity,
    move_back,
    object_dsum,
    partial_trace,
    povm_channel,
    prepare,
    tensor,
    trace_channel,
    unit_state,
)
from .combs import Comb
from .errors import DomainMismatch, InvalidState, ShapeError, TooManyCopiesForExplicit

PURITY_TOL = 1e-9
EXPLICIT_MAX_COPIES = 4


# --------------------------------------------------------------------------
# targets and tests
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TargetSpec:
    """Target state for ``K`` clients holding local dimensions ``client_dims``."""

    state: BlockState
    client_dims: tuple = ()
    partition: tuple = ()  # client indices on one side of the entanglement cut

    def __post_init__(self):
        if len(self.state.blocks) != 1:
            raise InvalidState("target must be a single-block state")
        dims = tuple(self.client_dims) or (self.state.object.dims[0],)
        if math.prod(dims) != self.state.object.dims[0]:
            raise ShapeError(f"client dims {dims} do not multiply to {self.state.object.dims[0]}")
        object.__setattr__(self, "client_dims", dims)
        object.__setattr__(self, "partition", tuple(self.partition) or ((0,) if len(dims) > 1 else ()))

    @classmethod
    def from_amplitudes(cls, amplitudes, client_dims=()) -> "TargetSpec":
        v = np.asarray(amplitudes, dtype=np.complex128).ravel()
        v = v / np.linalg.norm(v)
        return cls(density(np.outer(v, v.conj())), tuple(client_dims))

    @classmethod
    def from_matrix(cls, m, client_dims=()) -> "TargetSpec":
        return cls(density(m), tuple(client_dims))

    @property
    def K(self) -> int:
        return len(self.client_dims)

    @property
    def d(self) -> int:
        return self.state.object.dims[0]

    @property
    def matrix(self) -> np.ndarray:
        return self.state.matrix

    @property
    def object(self) -> AlgebraObject:
        return self.state.object

    @property
    def is_pure(self) -> bool:
        return abs(eigvalsh(self.matrix)[0] - 1.0) <= PURITY_TOL

    def vector(self) -> np.ndarray:
        """Unit vector of a pure target, phase fixed so the largest entry is real positive."""
        dec = hermitian_eig(self.matrix)
        v = dec.eigenvectors[:, 0]
        k = int(np.argmax(np.abs(v)))
        return v * (abs(v[k]) / v[k])


@dataclass(frozen=True)
class AcceptanceTest:
    """How the clients decide on the measured copies.

    ``all-pass`` accepts when every copy passes the per-copy effect ``E``;
    ``threshold`` accepts when at least ``k`` copies pass (``k`` may instead
    be given as a fraction of the copies, rounded up); ``explicit`` stores an
    accept effect ``μ(0)`` per number of copies.
    """

    kind: str
    effect: np.ndarray | None = None
    k: int | None = None
    fraction: float | None = None
    explicit: Mapping[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("all-pass", "threshold", "explicit"):
            raise ValueError(f"unknown test kind {self.kind!r}")
        if self.kind == "explicit":
            if not self.explicit:
                raise ValueError("explicit test needs accept effects")
            object.__setattr__(self, "explicit", {int(i): np.asarray(m, dtype=np.complex128)
                                                  for i, m in self.explicit.items()})
            for m in self.explicit.values():
                _check_effect(m)
            return
        e = np.asarray(self.effect, dtype=np.complex128)
        _check_effect(e)
        object.__setattr__(self, "effect", e)
        if self.kind == "threshold" and (self.k is None) == (self.fraction is None):
            raise ValueError("threshold test needs exactly one of k or fraction")

    @classmethod
    def all_pass(cls, effect) -> "AcceptanceTest":
        return cls("all-pass", effect)

    @classmethod
    def always_accept(cls, d: int) -> "AcceptanceTest":
        return cls("all-pass", np.eye(d))

    @classmethod
    def threshold(cls, effect, k: int | None = None, fraction: float | None = None) -> "AcceptanceTest":
        return cls("threshold", effect, k=k, fraction=fraction)

    @classmethod
    def from_effects(cls, effects: Mapping[int, np.ndarray]) -> "AcceptanceTest":
        return cls("explicit", explicit=effects)

    def needed(self, i: int) -> int:
        """Number of passing copies required out of ``i``."""
        if self.k is not None:
            return int(self.k)
        return int(math.ceil(self.fraction * i - 1e-12))


def _check_effect(e: np.ndarray, tol: float = 1e-9):
    if e.ndim != 2 or e.shape[0] != e.shape[1]:
        raise ShapeError("effect must be a square matrix")
    if np.linalg.norm(e - e.conj().T) > tol:
        raise ShapeError("effect must be Hermitian")
    if e.shape[0] > 1:
        w = eigvalsh(e)
        if w[-1] < -tol or w[0] > 1 + tol:
            raise ShapeError("effect must satisfy 0 <= E <= I")


def default_test(t: TargetSpec) -> AcceptanceTest:
    """Projector onto the target (pure) or onto its support (mixed), all copies must pass."""
    if t.is_pure:
        v = t.vector()
        return AcceptanceTest.all_pass(np.outer(v, v.conj()))
    dec = hermitian_eig(t.matrix)
    v = dec.eigenvectors[:, dec.eigenvalues > 1e-12]
    return AcceptanceTest.all_pass(v @ v.conj().T)


def acceptance_probability(test: AcceptanceTest, rho, i: int) -> float:
    """``⟨μ(0), ρ^{⊗i}⟩`` for the test's accept effect on ``i`` copies."""
    m = rho.matrix if isinstance(rho, BlockState) else np.asarray(rho, dtype=np.complex128)
    if i == 0:
        return 1.0
    if test.kind == "explicit":
        if i > EXPLICIT_MAX_COPIES:
            raise TooManyCopiesForExplicit(f"explicit tests are limited to {EXPLICIT_MAX_COPIES} copies")
        if i not in test.explicit:
            raise ShapeError(f"no explicit accept effect for {i} copies")
        big = reduce(np.kron, [m] * i)
        return float(frobenius_inner(test.explicit[i], big).real)
    p = float(np.clip(frobenius_inner(test.effect, m).real, 0.0, 1.0))
    if test.kind == "all-pass":
        return p ** i
    k = test.needed(i)
    if k <= 0:
        return 1.0
    if k > i:
        return 0.0
    return float(binom.sf(k - 1, i, p))


def accept_effect(test: AcceptanceTest, i: int) -> np.ndarray:
    """Explicit ``μ(0)`` on ``i`` copies (oracle use; exponential in ``i``)."""
    if test.kind == "explicit":
        if i == 0:
            return np.ones((1, 1), dtype=np.complex128)
        if i not in test.explicit:
            raise ShapeError(f"no explicit accept effect for {i} copies")
        return test.explicit[i]
    e = test.effect
    d = e.shape[0]
    if i == 0:
        return np.ones((1, 1), dtype=np.complex128)
    if test.kind == "all-pass":
        return reduce(np.kron, [e] * i)
    k = test.needed(i)
    out = np.zeros((d ** i, d ** i), dtype=np.complex128)
    fail = np.eye(d) - e
    for mask in range(1 << i):
        passes = bin(mask).count("1")
        if passes >= k:
            out += reduce(np.kron, [e if (mask >> (i - 1 - t)) & 1 else fail for t in range(i)])
    return out


# --------------------------------------------------------------------------
# round distributions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RoundDistribution:
    """Joint law ``p(r, i)`` of rounds ``r`` and tested copies ``i``.

    ``eta`` is the output-position law used by the simple protocol (ignored
    elsewhere); ``chi`` is the fallback state output when ``r == i``, given as
    a list of per-client states and stored as their tensor product.
    """

    table: Mapping
    chi: tuple = ()
    single_client: bool = False
    eta: tuple = ()

    def __post_init__(self):
        tab = {}
        for (r, i), p in dict(self.table).items():
            r, i, p = int(r), int(i), float(p)
            if not 0 <= i <= r:
                raise ShapeError(f"need 0 <= i <= r, got (r={r}, i={i})")
            if p < 0:
                raise ShapeError(f"negative probability at (r={r}, i={i})")
            if p > 0:
                tab[(r, i)] = tab.get((r, i), 0.0) + p
        total = sum(tab.values())
        if abs(total - 1.0) > 1e-9:
            raise ShapeError(f"p(r, i) sums to {total}")
        if self.single_client and any(r == i for r, i in tab):
            raise ShapeError("single-client protocols need p(l, l) = 0")
        object.__setattr__(self, "table", dict(sorted(tab.items())))
        object.__setattr__(self, "chi", tuple(self.chi))
        if any(r == i for r, i in tab) and not self.chi:
            raise ShapeError("p(r, r) > 0 needs a fallback state chi")

    @property
    def cap(self) -> int:
        return max(r for r, _ in self.table)

    @property
    def expected_rounds(self) -> float:
        return float(sum(p * r for (r, _), p in self.table.items()))

    def chi_state(self) -> BlockState | None:
        if not self.chi:
            return None
        m = reduce(np.kron, [c.matrix if isinstance(c, BlockState) else np.asarray(c) for c in self.chi])
        return density(m)

    @classmethod
    def point(cls, r: int, i: int, **kw) -> "RoundDistribution":
        return cls({(r, i): 1.0}, **kw)

    @classmethod
    def uniform(cls, r_lo: int, r_hi: int, **kw) -> "RoundDistribution":
        rs = range(r_lo, r_hi + 1)
        return cls({(r, r - 1): 1.0 / len(rs) for r in rs}, **kw)

    @classmethod
    def truncated_geometric(cls, mean: float, cap: int | None = None, **kw) -> "RoundDistribution":
        """``p(r, r−1) ∝ (1−s)^{r−1}`` on ``r = 1..cap`` with ``E[r] = mean``."""
        cap = cap or int(math.ceil(6 * mean)) + 1
        if not 1.0 < mean < (cap + 1) / 2:
            raise ShapeError(f"mean {mean} not reachable with cap {cap}")
        r = np.arange(1, cap + 1)

        def weights(s):
            w = (1 - s) ** (r - 1)
            return w / w.sum()

        s = brentq(lambda s: float(weights(s) @ r) - mean, 1e-12, 1 - 1e-12, xtol=1e-15)
        w = weights(s)
        return cls({(int(k), int(k) - 1): float(p) for k, p in zip(r, w)}, **kw)


# --------------------------------------------------------------------------
# protocols
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Protocol:
    """A verification protocol: target, round law, tests and an optional output channel.

    ``tests`` is one :class:`AcceptanceTest` for every ``(r, i)`` or a
    mapping from ``(r, i)`` to tests. ``post`` is applied to the accepted
    state (identity when None).
    """

    target: TargetSpec
    rounds: RoundDistribution
    tests: object
    post: Channel | None = None
    kind: str = "general"

    @classmethod
    def simple(cls, t: TargetSpec, N: int, test: AcceptanceTest | None = None, eta=None,
               post: Channel | None = None) -> "Protocol":
        eta = tuple(eta) if eta is not None else tuple([1.0 / (N + 1)] * (N + 1))
        dist = RoundDistribution.point(N + 1, N, single_client=t.K == 1, eta=eta)
        return cls(t, dist, test or default_test(t), post, "simple")

    @property
    def N(self) -> float:
        """Expected number of rounds; for the simple protocol, the number of tested copies."""
        if self.kind == "simple":
            return float(self.rounds.cap - 1)
        return self.rounds.expected_rounds

    def test_for(self, r: int, i: int) -> AcceptanceTest:
        if isinstance(self.tests, AcceptanceTest):
            return self.tests
        return self.tests[(r, i)]

    def output_object(self) -> AlgebraObject:
        return self.post.codomain if self.post is not None else self.target.object


@dataclass(frozen=True)
class GameOutput:
    """A state on ``[d'] ⊕ [1]``: unnormalised accept block and abort mass."""

    accept: np.ndarray
    abort: float

    def state(self) -> BlockState:
        return BlockState(AlgebraObject((self.accept.shape[0], 1)), [self.accept, np.array([[self.abort]])])

    @property
    def accept_mass(self) -> float:
        return float(np.trace(self.accept).real)


def _post(p: Protocol, m: np.ndarray) -> np.ndarray:
    if p.post is None:
        return m
    return apply(p.post, density(m)).matrix


def game_output(p: Protocol, rho) -> GameOutput:
    """Real-world output against a source sending i.i.d. copies of ``rho``.

    ``A = Σ_{r>i} p(r,i) P_{r,i}(ρ) Λ(ρ) + Σ_r p(r,r) P_{r,r}(ρ) Λ(χ)`` with
    ``P_{r,i}(ρ) = ⟨μ_{r,i}(0), ρ^{⊗i}⟩``; the abort mass is ``1 − Tr A``.
    """
    m = rho.matrix if isinstance(rho, BlockState) else np.asarray(rho, dtype=np.complex128)
    w_rho, w_chi = 0.0, 0.0
    for (r, i), pr in p.rounds.table.items():
        acc = pr * acceptance_probability(p.test_for(r, i), m, i)
        if r == i:
            w_chi += acc
        else:
            w_rho += acc
    out = w_rho * _post(p, m)
    if w_chi > 0:
        out = out + w_chi * _post(p, p.rounds.chi_state().matrix)
    return GameOutput(out, float(max(0.0, 1.0 - w_rho - w_chi)))


def honest_acceptance(p: Protocol) -> float:
    """``Σ p(r,i) ⟨μ_{r,i}(0), φ^{⊗i}⟩``."""
    return float(sum(pr * acceptance_probability(p.test_for(r, i), p.target.matrix, i)
                     for (r, i), pr in p.rounds.table.items()))


# --------------------------------------------------------------------------
# ideal resource
# --------------------------------------------------------------------------


def ideal_channel(t: TargetSpec) -> Channel:
    """``[1, 1] -> [d] ⊕ [1]``: bit ``c = 0`` yields the target, ``c = 1`` aborts."""
    ch = dsum(prepare(t.state), identity(UNIT))
    ch.provenance = "ideal"
    return ch


def filtered_ideal(t: TargetSpec) -> Channel:
    """The ideal resource with its source bit forced to ``c = 0``."""
    return compose(ideal_channel(t), prepare(distribution([1.0, 0.0])))


def post_composed_ideal(t: TargetSpec, post: Channel, filtered: bool = False) -> Channel:
    """Ideal resource followed by ``post`` on the accept branch; abort is untouched."""
    if post.domain != t.object:
        raise DomainMismatch(f"post channel expects {list(post.domain.dims)}, target is {list(t.object.dims)}")
    base = filtered_ideal(t) if filtered else ideal_channel(t)
    return compose(dsum(post, identity(UNIT)), base)


def ideal_output(t: TargetSpec, q: float, post: Channel | None = None) -> GameOutput:
    """Ideal resource driven with ``c = 0`` at probability ``q``."""
    m = t.matrix if post is None else apply(post, t.state).matrix
    return GameOutput(q * m, 1.0 - q)


# --------------------------------------------------------------------------
# client combs (explicit construction)
# --------------------------------------------------------------------------


def _copies(d: int, n: int) -> list[AlgebraObject]:
    return [AlgebraObject((d,))] * n


def _collect_stages(d: int, n: int) -> tuple[list[Channel], list[AlgebraObject]]:
    """Stages g_0..g_{n-1} that store received copies in arrival order."""
    stages = [identity(UNIT)]
    mem = [UNIT]
    for k in range(1, n):
        # new copy arrives in front of k-1 stored ones; push it to the back
        stages.append(move_back(1, k, _copies(d, k)))
        mem.append(AlgebraObject((d ** k,)))
    return stages, mem


def _accept_split(p: Protocol, effect: np.ndarray) -> Channel:
    d = effect.shape[0]
    return povm_channel([effect, np.eye(d) - effect])


def _finish(p: Protocol) -> Channel:
    """``[d, d] -> [d'] ⊕ [1]``: accept block through the output channel, reject traced."""
    lam = p.post if p.post is not None else identity(p.target.object)
    return dsum(lam, trace_channel(p.target.object))


def simple_client_comb(p: Protocol) -> Comb:
    """Comb with ``N+1`` holes ``[1] -> [d]`` for the simple protocol.

    Last stage: prepare the output position ``r ~ η``, move copy ``r`` to the
    back, forget the branch, measure the first ``N`` copies and either output
    the last copy or abort.
    """
    if p.kind != "simple":
        raise ShapeError("simple_client_comb needs a simple protocol")
    d, n1 = p.target.d, p.rounds.cap
    N = n1 - 1
    stages, mem = _collect_stages(d, n1)
    arrive = move_back(1, n1, _copies(d, n1))
    big = AlgebraObject((d ** n1,))
    tag = tensor(prepare(distribution(p.rounds.eta)), identity(big))
    choose = elif_channel([move_back(r, n1, _copies(d, n1)) for r in range(1, n1 + 1)])
    forget = forget_branch(n1, big)
    effect = accept_effect(p.test_for(n1, N), N)
    measure = tensor(_accept_split(p, effect), identity(p.target.object))
    last = compose_all(_finish(p), measure, forget, choose, tag, arrive)
    stages.append(last)
    sig = [(UNIT, p.target.object)] * n1
    return Comb(sig, tuple(range(n1)), stages, mem)


def _branch(p: Protocol, r: int, i: int, cap: int) -> Channel:
    d = p.target.d
    obj_d = p.target.object
    ch = identity(AlgebraObject((d ** cap,)))
    if r < cap:
        ch = compose(partial_trace(range(r + 1, cap + 1), _copies(d, cap)), ch)
    effect = accept_effect(p.test_for(r, i), i)
    if r == i:
        chi = p.rounds.chi_state()
        lam = p.post if p.post is not None else identity(obj_d)
        fallback = compose(lam, prepare(chi))
        return compose_all(dsum(fallback, identity(UNIT)), _accept_split(p, effect), ch)
    rest = identity(obj_d)
    if r - i > 1:
        rest = partial_trace(range(2, r - i + 1), _copies(d, r - i))
    meas = tensor(_accept_split(p, effect), rest)
    return compose_all(_finish(p), meas, ch)


def general_client_comb(p: Protocol) -> Comb:
    """Comb with ``D = max r`` holes; the pair ``(r, i)`` is drawn inside the last stage.

    Copies beyond ``r`` are discarded, the first ``i`` are measured with
    ``μ_{r,i}`` and copy ``i+1`` is output on acceptance; when ``r == i`` the
    clients output ``χ`` instead.
    """
    d, cap = p.target.d, p.rounds.cap
    if cap < 1:
        raise ShapeError("the comb needs at least one round")
    stages, mem = _collect_stages(d, cap)
    arrive = move_back(1, cap, _copies(d, cap))
    big = AlgebraObject((d ** cap,))
    pairs = list(p.rounds.table)
    tag = tensor(prepare(distribution([p.rounds.table[k] for k in pairs])), identity(big))
    choose = elif_channel([_branch(p, r, i, cap) for r, i in pairs])
    out_obj = object_dsum(p.output_object(), UNIT)
    forget = forget_branch(len(pairs), out_obj)
    stages.append(compose_all(forget, choose, tag, arrive))
    sig = [(UNIT, p.target.object)] * cap
    return Comb(sig, tuple(range(cap)), stages, mem)


def client_comb(p: Protocol) -> Comb:
    return simple_client_comb(p) if p.kind == "simple" else general_client_comb(p)
