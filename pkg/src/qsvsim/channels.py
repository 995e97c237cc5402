"""States and channels over finite direct sums of matrix algebras.

An object is a list of block sizes ``[n1, ..., nk]`` standing for
``M_n1 ⊕ ... ⊕ M_nk``. A state holds one PSD block per entry. A channel is
stored as a dense matrix acting on the *vectorised block space*: the
concatenation of the row-major flattening of every block, so an object with
dims ``[n1..nk]`` has vector length ``Σ n_i²``.

Row-major vectorisation gives ``vec(A X B) = (A ⊗ Bᵀ) vec(X)``; a Kraus
operator ``K`` therefore contributes ``K ⊗ conj(K)`` to the action matrix.

Combinators that take factor positions (``swap_channel``, ``move_back``,
``partial_trace``) count factors from 1.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import block_diag

from .algebra import as_matrix, eigvalsh
from .errors import (
    ChannelTooLarge,
    DomainMismatch,
    HeterogeneousSummands,
    IndexOutOfRange,
    InvalidState,
    NotAPOVM,
    NotTracePreserving,
    OutputNotState,
)

STATE_TOL = 1e-9
TP_TOL = 1e-9
MAX_ACTION_ENTRIES = 1 << 25


# --------------------------------------------------------------------------
# objects
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AlgebraObject:
    """A direct sum of full matrix algebras, named by its block sizes."""

    dims: tuple = ()

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        if any(n <= 0 for n in dims):
            raise ValueError(f"block dimensions must be positive, got {dims}")
        object.__setattr__(self, "dims", dims)

    def __iter__(self):
        return iter(self.dims)

    def __len__(self):
        return len(self.dims)

    def __repr__(self):
        return f"AlgebraObject({list(self.dims)})"

    @property
    def vec_size(self) -> int:
        return sum(n * n for n in self.dims)

    @property
    def offsets(self) -> list[int]:
        out, acc = [], 0
        for n in self.dims:
            out.append(acc)
            acc += n * n
        return out

    def identity_vec(self) -> np.ndarray:
        """Vectorised identity; its inner product with ``vec(ρ)`` is ``Tr ρ``."""
        if not self.dims:
            return np.zeros(0, dtype=np.complex128)
        return np.concatenate([np.eye(n, dtype=np.complex128).ravel() for n in self.dims])

    def is_classical(self) -> bool:
        return all(n == 1 for n in self.dims)


def obj(*dims) -> AlgebraObject:
    """Shorthand: ``obj(2, 2)`` or ``obj([2, 2])``."""
    if len(dims) == 1 and isinstance(dims[0], (list, tuple, AlgebraObject)):
        dims = tuple(dims[0])
    return AlgebraObject(tuple(dims))


UNIT = AlgebraObject((1,))
ZERO = AlgebraObject(())


def object_tensor(a: AlgebraObject, b: AlgebraObject) -> AlgebraObject:
    return AlgebraObject(tuple(m * n for m in a.dims for n in b.dims))


def object_dsum(a: AlgebraObject, b: AlgebraObject) -> AlgebraObject:
    return AlgebraObject(a.dims + b.dims)


def tensor_objects(objects: Sequence[AlgebraObject]) -> AlgebraObject:
    out = UNIT
    for o in objects:
        out = object_tensor(out, o)
    return out


def dsum_objects(objects: Sequence[AlgebraObject]) -> AlgebraObject:
    out = ZERO
    for o in objects:
        out = object_dsum(out, o)
    return out


def classical(n: int) -> AlgebraObject:
    """The classical register with ``n`` outcomes, ``[1]*n``."""
    return AlgebraObject((1,) * n)


# --------------------------------------------------------------------------
# states
# --------------------------------------------------------------------------


class BlockState:
    """Density operator on an :class:`AlgebraObject`.

    Blocks are validated on construction: Hermitian, PSD up to ``-1e-9``
    and total trace one up to ``1e-9``.
    """

    __slots__ = ("object", "blocks")

    def __init__(self, object: AlgebraObject, blocks: Iterable, *, check: bool = True):
        if not isinstance(object, AlgebraObject):
            object = AlgebraObject(tuple(object))
        blocks = tuple(as_matrix(b) for b in blocks)
        if len(blocks) != len(object.dims):
            raise InvalidState(f"{len(blocks)} blocks given for object {list(object.dims)}")
        for b, n in zip(blocks, object.dims):
            if b.shape != (n, n):
                raise InvalidState(f"block of shape {b.shape} where {n}x{n} expected")
        if check:
            _validate_blocks(blocks)
        sym = []
        for b in blocks:
            h = (b + b.conj().T) / 2
            h.flags.writeable = False
            sym.append(h)
        self.object = object
        self.blocks = tuple(sym)

    def __repr__(self):
        return f"BlockState({list(self.object.dims)}, traces={[round(t, 6) for t in self.block_traces()]})"

    def vec(self) -> np.ndarray:
        if not self.blocks:
            return np.zeros(0, dtype=np.complex128)
        return np.concatenate([b.ravel() for b in self.blocks])

    def block_traces(self) -> list[float]:
        return [float(np.trace(b).real) for b in self.blocks]

    @property
    def matrix(self) -> np.ndarray:
        """The single block of a one-block state."""
        if len(self.blocks) != 1:
            raise InvalidState("state has more than one block")
        return self.blocks[0]

    def probabilities(self) -> np.ndarray:
        """Block traces as a real vector; for classical objects, the distribution."""
        return np.array(self.block_traces())

    @classmethod
    def from_vec(cls, object: AlgebraObject, v: np.ndarray, *, check: bool = True) -> "BlockState":
        v = np.asarray(v, dtype=np.complex128).ravel()
        if v.size != object.vec_size:
            raise InvalidState(f"vector of length {v.size} for object {list(object.dims)}")
        blocks = [v[o:o + n * n].reshape(n, n) for o, n in zip(object.offsets, object.dims)]
        return cls(object, blocks, check=check)


def _validate_blocks(blocks, tol=STATE_TOL):
    total = 0.0
    for b in blocks:
        if not np.all(np.isfinite(b)):
            raise InvalidState("non-finite entry in state block")
        if np.linalg.norm(b - b.conj().T) > tol * max(1.0, np.linalg.norm(b)):
            raise InvalidState("state block is not Hermitian")
        h = (b + b.conj().T) / 2
        if h.shape[0] == 1:
            lo = h[0, 0].real
        else:
            lo = eigvalsh(h)[-1]
        if lo < -tol:
            raise InvalidState(f"state block has eigenvalue {lo:.3e} < -{tol:.0e}")
        total += np.trace(h).real
    if abs(total - 1.0) > tol:
        raise InvalidState(f"total trace {total:.12g} differs from 1")


def density(m) -> BlockState:
    """Single-block state from a density matrix."""
    m = as_matrix(m)
    return BlockState(AlgebraObject((m.shape[0],)), [m])


def pure(amplitudes) -> BlockState:
    """Single-block state ``|v⟩⟨v|`` from a (normalised) vector."""
    v = np.asarray(amplitudes, dtype=np.complex128).ravel()
    nrm = np.linalg.norm(v)
    if not np.isfinite(nrm) or abs(nrm - 1.0) > 1e-9:
        raise InvalidState(f"amplitude vector has norm {nrm}")
    return density(np.outer(v, v.conj()))


def distribution(probs) -> BlockState:
    """Classical state on ``[1]*n`` with the given probabilities."""
    p = np.asarray(probs, dtype=float).ravel()
    return BlockState(classical(p.size), [np.array([[x]]) for x in p])


def unit_state() -> BlockState:
    return BlockState(UNIT, [np.ones((1, 1))])


def state_tensor(s: BlockState, t: BlockState) -> BlockState:
    blocks = [np.kron(a, b) for a in s.blocks for b in t.blocks]
    return BlockState(object_tensor(s.object, t.object), blocks, check=False)


def state_power(s: BlockState, n: int) -> BlockState:
    out = unit_state()
    for _ in range(n):
        out = state_tensor(out, s)
    return out


def basis_vector(d: int, j: int) -> np.ndarray:
    e = np.zeros(d, dtype=np.complex128)
    e[j] = 1.0
    return e


# --------------------------------------------------------------------------
# channels
# --------------------------------------------------------------------------


def _guard(rows: int, cols: int):
    if rows * cols > MAX_ACTION_ENTRIES:
        raise ChannelTooLarge(f"action matrix {rows}x{cols} exceeds {MAX_ACTION_ENTRIES} entries")


class Channel:
    """Trace-preserving linear map between block operator spaces.

    ``action`` has shape ``(codomain.vec_size, domain.vec_size)``. Trace
    preservation is checked when the channel is built.
    """

    __slots__ = ("domain", "codomain", "action", "provenance")

    def __init__(self, domain: AlgebraObject, codomain: AlgebraObject, action, provenance="channel",
                 *, check: bool = True):
        action = np.asarray(action, dtype=np.complex128)
        shape = (codomain.vec_size, domain.vec_size)
        if action.shape != shape:
            raise DomainMismatch(f"action shape {action.shape}, expected {shape}")
        if check:
            lhs = codomain.identity_vec() @ action
            rhs = domain.identity_vec()
            err = np.max(np.abs(lhs - rhs)) if lhs.size else 0.0
            if err > TP_TOL:
                raise NotTracePreserving(f"trace preservation violated by {err:.3e}")
        action.flags.writeable = False
        self.domain = domain
        self.codomain = codomain
        self.action = action
        self.provenance = provenance

    def __repr__(self):
        return f"Channel({list(self.domain.dims)} -> {list(self.codomain.dims)}, {describe(self.provenance)})"

    def __call__(self, s: BlockState) -> BlockState:
        return apply(self, s)

    def sub_block(self, i: int, j: int) -> np.ndarray:
        """Component map from domain block ``j`` to codomain block ``i``."""
        ro, co = self.codomain.offsets[i], self.domain.offsets[j]
        n, m = self.codomain.dims[i], self.domain.dims[j]
        return self.action[ro:ro + n * n, co:co + m * m]

    def choi(self, i: int = 0, j: int = 0) -> np.ndarray:
        """Choi matrix ``Σ_ab |a⟩⟨b| ⊗ Φ_ij(|a⟩⟨b|)`` of one component map."""
        n, m = self.codomain.dims[i], self.domain.dims[j]
        f = self.sub_block(i, j).reshape(n, n, m, m)
        return f.transpose(2, 0, 3, 1).reshape(m * n, m * n)


def describe(prov) -> str:
    if isinstance(prov, str):
        return prov
    head, *args = prov
    return f"{head}(" + ", ".join(describe(a) for a in args) + ")"


def apply(ch: Channel, s: BlockState) -> BlockState:
    if s.object != ch.domain:
        raise DomainMismatch(f"state on {list(s.object.dims)}, channel expects {list(ch.domain.dims)}")
    out = ch.action @ s.vec()
    try:
        return BlockState.from_vec(ch.codomain, out)
    except InvalidState as exc:
        raise OutputNotState(f"{describe(ch.provenance)} produced an invalid state: {exc}") from exc


def identity(a: AlgebraObject) -> Channel:
    return Channel(a, a, np.eye(a.vec_size), f"id{list(a.dims)}")


def compose(g: Channel, f: Channel) -> Channel:
    """``g ∘ f``."""
    if f.codomain != g.domain:
        raise DomainMismatch(f"cannot compose: {list(f.codomain.dims)} vs {list(g.domain.dims)}")
    _guard(g.action.shape[0], f.action.shape[1])
    return Channel(f.domain, g.codomain, g.action @ f.action, ("compose", g.provenance, f.provenance))


def compose_all(*channels: Channel) -> Channel:
    """``compose_all(h, g, f) = h ∘ g ∘ f``."""
    out = channels[-1]
    for c in reversed(channels[:-1]):
        out = compose(c, out)
    return out


def tensor(f: Channel, g: Channel) -> Channel:
    """Parallel composition ``f ⊗ g``, block pairs in row-major order."""
    dom = object_tensor(f.domain, g.domain)
    cod = object_tensor(f.codomain, g.codomain)
    _guard(cod.vec_size, dom.vec_size)
    out = np.zeros((cod.vec_size, dom.vec_size), dtype=np.complex128)
    co, do = cod.offsets, dom.offsets
    nf, ng = len(f.codomain), len(g.codomain)
    mf, mg = len(f.domain), len(g.domain)
    for i, i2, j, j2 in itertools.product(range(nf), range(ng), range(mf), range(mg)):
        a = f.sub_block(i, j)
        b = g.sub_block(i2, j2)
        if not a.any() or not b.any():
            continue
        n1, n2 = f.codomain.dims[i], g.codomain.dims[i2]
        m1, m2 = f.domain.dims[j], g.domain.dims[j2]
        blk = np.einsum(
            "efab,ghcd->egfhacbd",
            a.reshape(n1, n1, m1, m1),
            b.reshape(n2, n2, m2, m2),
        ).reshape((n1 * n2) ** 2, (m1 * m2) ** 2)
        r = co[i * ng + i2]
        c = do[j * mg + j2]
        out[r:r + blk.shape[0], c:c + blk.shape[1]] = blk
    return Channel(dom, cod, out, ("tensor", f.provenance, g.provenance), check=False)


def tensor_all(channels: Sequence[Channel]) -> Channel:
    out = identity(UNIT)
    for c in channels:
        out = tensor(out, c)
    return out


def dsum(f: Channel, g: Channel) -> Channel:
    """Direct sum ``f ⊕ g`` acting blockwise."""
    dom = object_dsum(f.domain, g.domain)
    cod = object_dsum(f.codomain, g.codomain)
    _guard(cod.vec_size, dom.vec_size)
    return Channel(dom, cod, block_diag(f.action, g.action), ("dsum", f.provenance, g.provenance), check=False)


def dsum_all(channels: Sequence[Channel]) -> Channel:
    dom = dsum_objects([c.domain for c in channels])
    cod = dsum_objects([c.codomain for c in channels])
    _guard(cod.vec_size, dom.vec_size)
    act = block_diag(*[c.action for c in channels]) if channels else np.zeros((0, 0))
    return Channel(dom, cod, act, ("dsum",) + tuple(c.provenance for c in channels), check=False)


# --------------------------------------------------------------------------
# generators
# --------------------------------------------------------------------------


def prepare(target: BlockState) -> Channel:
    """Constant channel ``[1] -> target``."""
    return Channel(UNIT, target.object, target.vec()[:, None], f"prepare{list(target.object.dims)}")


def trace_channel(a: AlgebraObject) -> Channel:
    """Discard everything: ``a -> [1]``."""
    return Channel(a, UNIT, a.identity_vec()[None, :], f"tr{list(a.dims)}")


def kraus_superop(kraus: Sequence) -> np.ndarray:
    ks = [as_matrix(k) for k in kraus]
    return sum(np.kron(k, k.conj()) for k in ks)


def kraus_channel(kraus: Sequence, name: str = "kraus") -> Channel:
    """Single-block channel ``ρ ↦ Σ K ρ K†``."""
    ks = [as_matrix(k) for k in kraus]
    n, m = ks[0].shape
    return Channel(AlgebraObject((m,)), AlgebraObject((n,)), kraus_superop(ks), name)


def unitary_channel(u) -> Channel:
    return kraus_channel([u], "unitary")


def replacement_channel(a: AlgebraObject, target: BlockState) -> Channel:
    """``ρ ↦ Tr(ρ)·target``."""
    return compose(prepare(target), trace_channel(a))


def dephasing(d: int = 2, strength: float = 1.0) -> Channel:
    """Standard-basis dephasing; ``strength=1`` removes all coherences."""
    ks = [math.sqrt(1 - strength) * np.eye(d)] if strength < 1 else []
    ks += [math.sqrt(strength) * np.outer(basis_vector(d, j), basis_vector(d, j)) for j in range(d)]
    return kraus_channel(ks, f"dephase{d}")


def depolarizing(d: int, p: float) -> Channel:
    """``ρ ↦ (1-p) ρ + p Tr(ρ) I/d``."""
    a = AlgebraObject((d,))
    mix = replacement_channel(a, density(np.eye(d) / d))
    act = (1 - p) * np.eye(d * d) + p * mix.action
    return Channel(a, a, act, f"depol{d}")


def _check_povm(effects, tol=1e-9):
    es = [as_matrix(e) for e in effects]
    if not es:
        raise NotAPOVM("empty effect list")
    d = es[0].shape[0]
    for e in es:
        if e.shape != (d, d):
            raise NotAPOVM("effects have different shapes")
        if np.linalg.norm(e - e.conj().T) > tol:
            raise NotAPOVM("effect is not Hermitian")
        if d > 1 and eigvalsh(e)[-1] < -tol:
            raise NotAPOVM("effect is not positive semidefinite")
    dev = np.linalg.norm(sum(es) - np.eye(d))
    if dev > tol:
        raise NotAPOVM(f"effects sum to identity only within {dev:.3e}")
    return es


def povm_channel(effects: Sequence, destructive: bool = True) -> Channel:
    """Measurement ``[n] -> [1]*k`` (destructive) or Lüders instrument ``[n] -> [n]*k``.

    Outcome ``j`` carries weight ``⟨E_j, ρ⟩``. The non-destructive form
    leaves ``√E_j ρ √E_j`` in block ``j``.
    """
    from .algebra import psd_sqrt

    es = _check_povm(effects)
    d = es[0].shape[0]
    if destructive:
        rows = np.stack([e.conj().ravel() for e in es])
        return Channel(AlgebraObject((d,)), classical(len(es)), rows, f"measure{len(es)}")
    act = np.vstack([kraus_superop([psd_sqrt(e)]) for e in es])
    return Channel(AlgebraObject((d,)), AlgebraObject((d,) * len(es)), act, f"instrument{len(es)}")


def basis_measurement(d: int) -> Channel:
    return povm_channel([np.outer(basis_vector(d, j), basis_vector(d, j)) for j in range(d)])


# --------------------------------------------------------------------------
# combinators
# --------------------------------------------------------------------------


def _reindex(dom: AlgebraObject, cod: AlgebraObject, block_map: Sequence[int], name) -> Channel:
    """Channel copying domain block ``block_map[i]`` into codomain block ``i``."""
    act = np.zeros((cod.vec_size, dom.vec_size))
    for i, j in enumerate(block_map):
        n = cod.dims[i]
        if dom.dims[j] != n:
            raise DomainMismatch("re-indexing between blocks of different size")
        r, c = cod.offsets[i], dom.offsets[j]
        act[r:r + n * n, c:c + n * n] = np.eye(n * n)
    return Channel(dom, cod, act, name)


def branch_up(n: int, a: AlgebraObject) -> Channel:
    """Isomorphism ``I^{⊕n} ⊗ A -> A^{⊕n}``.

    Domain block ``(t, b)`` (tag ``t``, summand ``b`` of ``A``) sits at
    position ``t*len(A) + b`` by the row-major pair rule and is sent to block
    ``b`` of the ``t``-th copy of ``A``.
    """
    dom = object_tensor(classical(n), a)
    cod = dsum_objects([a] * n)
    k = len(a)
    block_map = [0] * len(cod)
    for t in range(n):
        for b in range(k):
            block_map[t * k + b] = t * k + b
    return _reindex(dom, cod, block_map, f"branch_up{n}")


def branch_down(n: int, a: AlgebraObject) -> Channel:
    """Inverse of :func:`branch_up`."""
    up = branch_up(n, a)
    return Channel(up.codomain, up.domain, up.action.T.copy(), f"branch_down{n}")


def elif_channel(branches: Sequence[Channel]) -> Channel:
    """If-else on a classical tag: ``(⊕_i f_i) ∘ branch_up``.

    The domain is ``[1]*n ⊗ A``; tag weight ``p_i`` and payload ``ρ`` give
    output block ``i`` equal to ``p_i f_i(ρ)``.
    """
    a = branches[0].domain
    for f in branches:
        if f.domain != a:
            raise DomainMismatch("if-else branches must share a domain")
    out = compose(dsum_all(branches), branch_up(len(branches), a))
    out.provenance = ("elif",) + tuple(f.provenance for f in branches)
    return out


def permute_factors(objects: Sequence[AlgebraObject], perm: Sequence[int]) -> Channel:
    """Reorder tensor factors: output factor ``t`` is input factor ``perm[t]`` (0-based)."""
    objects = [o if isinstance(o, AlgebraObject) else AlgebraObject(tuple(o)) for o in objects]
    n = len(objects)
    if sorted(perm) != list(range(n)):
        raise IndexOutOfRange(f"{perm} is not a permutation of {n} factors")
    dom = tensor_objects(objects)
    cod = tensor_objects([objects[p] for p in perm])
    _guard(cod.vec_size, dom.vec_size)
    act = np.zeros((cod.vec_size, dom.vec_size))
    counts = [len(o) for o in objects]
    out_counts = [counts[p] for p in perm]
    for bidx in itertools.product(*[range(c) for c in counts]):
        sizes = [objects[t].dims[bidx[t]] for t in range(n)]
        j = int(np.ravel_multi_index(bidx, counts)) if n else 0
        out_b = tuple(bidx[p] for p in perm)
        i = int(np.ravel_multi_index(out_b, out_counts)) if n else 0
        total = math.prod(sizes)
        src = np.arange(total * total).reshape(sizes + sizes)
        src = src.transpose(list(perm) + [n + p for p in perm]).ravel()
        r, c = cod.offsets[i], dom.offsets[j]
        act[r + np.arange(src.size), c + src] = 1.0
    return Channel(dom, cod, act, f"permute{list(perm)}", check=False)


def _adjacent_swap(t: int, objects: Sequence[AlgebraObject]) -> Channel:
    perm = list(range(len(objects)))
    perm[t - 1], perm[t] = perm[t], perm[t - 1]
    ch = permute_factors(objects, perm)
    ch.provenance = f"swap{t},{t + 1}"
    return ch


def swap_channel(k: int, l: int, objects: Sequence[AlgebraObject]) -> Channel:
    """Exchange tensor factors ``k`` and ``l`` (1-based, ``k < l``).

    Built from adjacent crossings: factor ``l`` travels left to slot ``k``,
    then the old factor ``k`` (now at ``k+1``) travels right to slot ``l``.
    """
    objects = [o if isinstance(o, AlgebraObject) else AlgebraObject(tuple(o)) for o in objects]
    n = len(objects)
    if not (1 <= k < l <= n):
        raise IndexOutOfRange(f"need 1 <= k < l <= {n}, got k={k}, l={l}")
    order = list(objects)
    steps = []
    for t in range(l - 1, k - 1, -1):
        steps.append(_adjacent_swap(t, order))
        order[t - 1], order[t] = order[t], order[t - 1]
    for t in range(k + 1, l):
        steps.append(_adjacent_swap(t, order))
        order[t - 1], order[t] = order[t], order[t - 1]
    out = steps[0]
    for s in steps[1:]:
        out = compose(s, out)
    out.provenance = f"swap{k},{l}"
    return out


def move_back(k: int, n: int, objects: Sequence[AlgebraObject]) -> Channel:
    """Move factor ``k`` to the last of ``n`` slots, keeping the others in order.

    Composition of the adjacent swaps ``(i, i+1)`` for ``i = k .. n-1``;
    ``move_back(n, n)`` is the identity.
    """
    objects = [o if isinstance(o, AlgebraObject) else AlgebraObject(tuple(o)) for o in objects]
    if len(objects) != n:
        raise IndexOutOfRange(f"{len(objects)} objects given for n={n}")
    if not (1 <= k <= n):
        raise IndexOutOfRange(f"need 1 <= k <= {n}, got {k}")
    order = list(objects)
    out = identity(tensor_objects(order))
    for i in range(k, n):
        out = compose(_adjacent_swap(i, order), out)
        order[i - 1], order[i] = order[i], order[i - 1]
    out.provenance = f"move_back{k},{n}"
    return out


def forget_branch(n: int, a: AlgebraObject) -> Channel:
    """``A^{⊕n} -> A``: sum the branches, i.e. ``(Tr ⊗ id_A) ∘ branch_down``."""
    tag_trace = trace_channel(classical(n))
    left = tensor(tag_trace, identity(a))
    # [1] ⊗ A has the same dims as A; drop the unit factor by relabelling
    left = Channel(left.domain, a, left.action, left.provenance, check=False)
    out = compose(left, branch_down(n, a))
    out.provenance = f"forget_branch{n}"
    return out


def forget_summands(summands: Sequence[AlgebraObject]) -> Channel:
    """:func:`forget_branch` for an explicit list of summands, which must agree."""
    first = summands[0]
    if any(s != first for s in summands):
        raise HeterogeneousSummands(f"summands differ: {[list(s.dims) for s in summands]}")
    return forget_branch(len(summands), first)


def partial_trace(which, objects: Sequence[AlgebraObject]) -> Channel:
    """Trace out the factor(s) ``which`` (1-based) of ``⊗ objects``.

    Works for classical and multi-block factors too; the surviving factors
    keep their order.
    """
    objects = [o if isinstance(o, AlgebraObject) else AlgebraObject(tuple(o)) for o in objects]
    drop = {which} if isinstance(which, int) else set(which)
    if not drop or any(not (1 <= w <= len(objects)) for w in drop):
        raise IndexOutOfRange(f"factor index {sorted(drop)} outside 1..{len(objects)}")
    parts = [trace_channel(o) if t + 1 in drop else identity(o) for t, o in enumerate(objects)]
    full = tensor_all(parts)
    kept = tensor_objects([o for t, o in enumerate(objects) if t + 1 not in drop])
    # the traced factors leave [1]s behind, which do not change the dims list
    return Channel(full.domain, kept, full.action, f"ptrace{sorted(drop)}")


def relabel(ch: Channel, domain: AlgebraObject | None = None, codomain: AlgebraObject | None = None) -> Channel:
    """Identify objects with equal dims lists (e.g. ``[1] ⊗ A`` with ``A``)."""
    dom = domain or ch.domain
    cod = codomain or ch.codomain
    if dom.dims != ch.domain.dims or cod.dims != ch.codomain.dims:
        raise DomainMismatch("relabel only identifies objects with identical dims")
    return Channel(dom, cod, ch.action, ch.provenance, check=False)


def random_state(a: AlgebraObject, rng: np.random.Generator, rank: int | None = None) -> BlockState:
    """Random state: Ginibre blocks weighted by a Dirichlet draw."""
    w = rng.dirichlet(np.ones(len(a))) if len(a) > 1 else np.ones(1)
    blocks = []
    for n, p in zip(a.dims, w):
        k = rank or n
        g = rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))
        m = g @ g.conj().T
        blocks.append(p * m / np.trace(m).real)
    return BlockState(a, blocks)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_channel(m: int, n: int, rng: np.random.Generator, kraus_rank: int = 2) -> Channel:
    """Random single-block channel ``[m] -> [n]`` from an isometry."""
    kraus_rank = max(kraus_rank, -(-m // n))
    z = rng.normal(size=(n * kraus_rank, m)) + 1j * rng.normal(size=(n * kraus_rank, m))
    q, _ = np.linalg.qr(z)
    ks = [q[t * n:(t + 1) * n, :] for t in range(kraus_rank)]
    return kraus_channel(ks, "random")
