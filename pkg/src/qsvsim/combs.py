"""Combs: channels with ordered holes, filled by tuples of resource channels.

A comb over a resource signature ``[(A_1, B_1), ..., (A_m, B_m)]`` uses
``p <= m`` of the holes in the order given by ``injection`` (0-based slot
indices, no repeats). Its stages are::

    g_0 : C           -> A_ι(1) ⊗ Y_1
    g_k : B_ι(k) ⊗ Y_k -> A_ι(k+1) ⊗ Y_k+1      (1 <= k < p)
    g_p : B_ι(p) ⊗ Y_p -> D

and filling with ``a_1..a_m`` gives
``g_p ∘ (a_ι(p) ⊗ id) ∘ ... ∘ (a_ι(1) ⊗ id) ∘ g_0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .channels import (
    UNIT,
    AlgebraObject,
    Channel,
    compose,
    identity,
    object_tensor,
    permute_factors,
    relabel,
    tensor,
)
from .errors import SignatureMismatch
from .metrics import diamond_lower_estimate


@dataclass(frozen=True)
class Comb:
    signature: tuple  # ((A_i, B_i), ...)
    injection: tuple  # used slots, in call order
    stages: tuple  # (g_0, ..., g_p)
    memory: tuple  # (Y_1, ..., Y_p)

    def __post_init__(self):
        sig = tuple((AlgebraObject(tuple(a)), AlgebraObject(tuple(b))) for a, b in self.signature)
        object.__setattr__(self, "signature", sig)
        object.__setattr__(self, "injection", tuple(int(i) for i in self.injection))
        object.__setattr__(self, "stages", tuple(self.stages))
        object.__setattr__(self, "memory", tuple(AlgebraObject(tuple(y)) for y in self.memory))
        self._typecheck()

    def _typecheck(self):
        p = len(self.injection)
        if len(set(self.injection)) != p:
            raise SignatureMismatch("injection repeats a slot")
        if any(not 0 <= i < len(self.signature) for i in self.injection):
            raise SignatureMismatch("injection points outside the signature")
        if len(self.stages) != p + 1 or len(self.memory) != p:
            raise SignatureMismatch(f"{p} holes need {p + 1} stages and {p} memory objects")
        for k in range(p):
            a, _ = self.signature[self.injection[k]]
            want = object_tensor(a, self.memory[k])
            if self.stages[k].codomain.dims != want.dims:
                raise SignatureMismatch(f"stage {k} ends in {list(self.stages[k].codomain.dims)}, "
                                        f"hole {self.injection[k]} expects {list(want.dims)}")
            _, b = self.signature[self.injection[k]]
            want = object_tensor(b, self.memory[k])
            if self.stages[k + 1].domain.dims != want.dims:
                raise SignatureMismatch(f"stage {k + 1} starts at {list(self.stages[k + 1].domain.dims)}, "
                                        f"expected {list(want.dims)}")

    @property
    def holes(self) -> int:
        return len(self.injection)

    @property
    def domain(self) -> AlgebraObject:
        return self.stages[0].domain

    @property
    def codomain(self) -> AlgebraObject:
        return self.stages[-1].codomain


def channel_comb(ch: Channel) -> Comb:
    """A comb with no holes that is just ``ch``."""
    return Comb((), (), (ch,), ())


def identity_comb(a: AlgebraObject, b: AlgebraObject) -> Comb:
    """One hole of type ``(a, b)``; filling with ``f`` returns ``f``."""
    return Comb(((a, b),), (0,), (identity(a), identity(b)), (UNIT,))


def check_resources(signature, resources: Sequence[Channel]):
    if len(resources) != len(signature):
        raise SignatureMismatch(f"{len(resources)} resources for {len(signature)} slots")
    for k, ((a, b), r) in enumerate(zip(signature, resources)):
        if r.domain.dims != a.dims or r.codomain.dims != b.dims:
            raise SignatureMismatch(f"slot {k} expects {list(a.dims)} -> {list(b.dims)}, "
                                    f"got {list(r.domain.dims)} -> {list(r.codomain.dims)}")


def fill(c: Comb, resources: Sequence[Channel]) -> Channel:
    """Plug ``resources`` into the holes; unused slots are ignored."""
    check_resources(c.signature, resources)
    x = c.stages[0]
    for k, slot in enumerate(c.injection):
        step = tensor(resources[slot], identity(c.memory[k]))
        x = compose(relabel(step, domain=x.codomain), x)
        x = compose(c.stages[k + 1], relabel(x, codomain=c.stages[k + 1].domain))
    return x


def _pad(ch: Channel, y: AlgebraObject) -> Channel:
    return tensor(ch, identity(y))


def nest(outer: Comb, inner, slot: int) -> Comb:
    """Substitute ``inner`` (a Comb or Channel) into hole ``slot`` of ``outer``.

    The new signature replaces ``slot`` with the inner signature. If the slot
    is not used by ``outer`` only the signature changes.
    """
    if isinstance(inner, Channel):
        inner = channel_comb(inner)
    a, b = outer.signature[slot]
    if inner.domain.dims != a.dims or inner.codomain.dims != b.dims:
        raise SignatureMismatch(f"slot {slot} has type {list(a.dims)} -> {list(b.dims)}")
    m_in = len(inner.signature)
    sig = outer.signature[:slot] + inner.signature + outer.signature[slot + 1:]

    def shift(i):
        return i if i < slot else i + m_in - 1

    if slot not in outer.injection:
        inj = tuple(shift(i) for i in outer.injection)
        return Comb(sig, inj, outer.stages, outer.memory)

    k = outer.injection.index(slot)
    y = outer.memory[k]
    inner_inj = tuple(slot + i for i in inner.injection)
    inj = tuple(shift(i) for i in outer.injection[:k]) + inner_inj + tuple(
        shift(i) for i in outer.injection[k + 1:])

    before, after = outer.stages[k], outer.stages[k + 1]
    padded = [_pad(g, y) for g in inner.stages]
    if inner.holes == 0:
        merged = compose(relabel(after, domain=padded[0].codomain),
                         compose(relabel(padded[0], domain=before.codomain), before))
        stages = outer.stages[:k] + (merged,) + outer.stages[k + 2:]
        mem = outer.memory[:k] + outer.memory[k + 1:]
    else:
        first = compose(relabel(padded[0], domain=before.codomain), before)
        last = compose(relabel(after, domain=padded[-1].codomain), padded[-1])
        stages = outer.stages[:k] + (first,) + tuple(padded[1:-1]) + (last,) + outer.stages[k + 2:]
        mem = outer.memory[:k] + tuple(object_tensor(yi, y) for yi in inner.memory) + outer.memory[k + 1:]
    return Comb(sig, inj, stages, mem)


def _is_empty(c: Comb) -> bool:
    return not c.signature and c.domain == UNIT and c.codomain == UNIT


def concat(c1: Comb, c2: Comb) -> Comb:
    """Parallel product: ``fill(concat(c1, c2), r1 + r2) = fill(c1, r1) ⊗ fill(c2, r2)``.

    The combined comb runs all of ``c1``'s holes first, carrying ``c2``'s
    input on the memory wire, then runs ``c2`` carrying ``c1``'s output.
    """
    if _is_empty(c1):
        return c2
    if _is_empty(c2):
        return c1
    sig = c1.signature + c2.signature
    off = len(c1.signature)
    inj = c1.injection + tuple(off + i for i in c2.injection)
    c2_in, d1 = c2.domain, c1.codomain
    stages, mem = [], []

    # phase 1: c1 with C2 riding along
    for k in range(c1.holes):
        stages.append(_pad(c1.stages[k], c2_in))
        mem.append(object_tensor(c1.memory[k], c2_in))
    bridge = _pad(c1.stages[-1], c2_in)  # ... -> D1 ⊗ C2
    # phase 2 starts: bring C2 to the front, run g2_0 with D1 riding along
    flip = permute_factors([d1, c2_in], [1, 0])
    bridge = compose(flip, relabel(bridge, codomain=flip.domain))
    if c2.holes == 0:
        tail = _pad(c2.stages[0], d1)
        tail = compose(tail, relabel(bridge, codomain=tail.domain))
        back = permute_factors([c2.codomain, d1], [1, 0])
        stages.append(compose(back, relabel(tail, codomain=back.domain)))
        return Comb(sig, inj, stages, mem)
    first = _pad(c2.stages[0], d1)
    stages.append(compose(first, relabel(bridge, codomain=first.domain)))
    for k in range(c2.holes):
        mem.append(object_tensor(c2.memory[k], d1))
        if k + 1 < c2.holes:
            stages.append(_pad(c2.stages[k + 1], d1))
    last = _pad(c2.stages[-1], d1)
    back = permute_factors([c2.codomain, d1], [1, 0])
    stages.append(compose(back, relabel(last, codomain=back.domain)))
    return Comb(sig, inj, stages, mem)


def resource_metric(r1: Sequence[Channel], r2: Sequence[Channel], budget: int = 100, seed: int = 0) -> float:
    """ℓ¹ sum of per-slot diamond lower estimates; a lower estimate of the resource distance."""
    if len(r1) != len(r2):
        raise SignatureMismatch("resource tuples have different lengths")
    total = 0.0
    for k, (a, b) in enumerate(zip(r1, r2)):
        if a.domain != b.domain or a.codomain != b.codomain:
            raise SignatureMismatch(f"slot {k} types differ")
        total += diamond_lower_estimate(a, b, budget, seed=seed + k)
    return total
