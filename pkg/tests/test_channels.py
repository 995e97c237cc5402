import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qsvsim import channels as ch
from qsvsim.channels import obj
from qsvsim.errors import (
    ChannelTooLarge,
    DomainMismatch,
    HeterogeneousSummands,
    IndexOutOfRange,
    InvalidState,
    NotAPOVM,
    NotTracePreserving,
    OutputNotState,
)
from oracles import apply_kraus, ginibre_state, ket, partial_trace, proj, random_kraus

PLUS = np.array([1, 1]) / np.sqrt(2)


def bell():
    return proj(np.array([1, 0, 0, 1]) / np.sqrt(2))


class TestObjects:
    @pytest.mark.parametrize("a, b, expected", [
        ([2], [2], [2, 2]),
        ([1], [3, 1], [1, 3, 1]),
        ([], [2], [2]),
    ])
    def test_dsum(self, a, b, expected):
        assert ch.object_dsum(obj(a), obj(b)).dims == tuple(expected)

    @pytest.mark.parametrize("a, b, expected", [
        ([2], [3], [6]),
        ([1, 1], [2], [2, 2]),
        ([1, 2], [3, 1], [3, 1, 6, 2]),
        ([1], [2, 3], [2, 3]),
    ])
    def test_tensor(self, a, b, expected):
        assert ch.object_tensor(obj(a), obj(b)).dims == tuple(expected)

    def test_identity_vec_gives_trace(self, rng):
        a = obj(2, 1, 3)
        s = ch.random_state(a, rng)
        assert a.identity_vec() @ s.vec() == pytest.approx(1.0)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            obj(2, 0)


class TestStates:
    def test_validation(self):
        with pytest.raises(InvalidState):
            ch.density(np.diag([0.5, 0.6]))
        with pytest.raises(InvalidState):
            ch.density(np.diag([1.5, -0.5]))
        with pytest.raises(InvalidState):
            ch.BlockState(obj(2), [np.eye(3) / 3])

    def test_distribution(self):
        s = ch.distribution([0.3, 0.7])
        assert s.object == ch.classical(2)
        np.testing.assert_allclose(s.probabilities(), [0.3, 0.7])

    def test_state_power(self, rng):
        r = ginibre_state(2, rng)
        np.testing.assert_allclose(ch.state_power(ch.density(r), 3).matrix, np.kron(np.kron(r, r), r), atol=1e-15)


class TestApply:
    def test_identity(self, rng):
        s = ch.random_state(obj(3), rng)
        np.testing.assert_allclose(ch.apply(ch.identity(obj(3)), s).matrix, s.matrix)

    def test_basis_measurement(self):
        m = np.array([[0.3, 0.1 - 0.2j], [0.1 + 0.2j, 0.7]])
        out = ch.basis_measurement(2)(ch.density(m))
        np.testing.assert_allclose(out.probabilities(), [0.3, 0.7])

    def test_trace(self, rng):
        out = ch.trace_channel(obj(2, 3))(ch.random_state(obj(2, 3), rng))
        assert out.object == ch.UNIT
        assert out.blocks[0][0, 0] == pytest.approx(1.0)

    def test_domain_mismatch(self):
        with pytest.raises(DomainMismatch):
            ch.apply(ch.identity(obj(2)), ch.density(np.eye(3) / 3))

    def test_output_not_state(self):
        # trace preserving, but it amplifies coherences past positivity
        flip = ch.Channel(obj(2), obj(2), np.array([[1, 0, 0, 0], [0, -5, 0, 0], [0, 0, -5, 0], [0, 0, 0, 1]]))
        with pytest.raises(OutputNotState):
            ch.apply(flip, ch.density(proj(PLUS)))

    def test_not_trace_preserving(self):
        with pytest.raises(NotTracePreserving):
            ch.Channel(obj(2), obj(2), 0.5 * np.eye(4))

    def test_kraus_against_direct_sum(self, rng):
        ks = random_kraus(3, 2, rng, rank=3)
        c = ch.kraus_channel(ks)
        r = ginibre_state(3, rng)
        np.testing.assert_allclose(c(ch.density(r)).matrix, apply_kraus(ks, r), atol=1e-14)

    def test_size_guard(self):
        with pytest.raises(ChannelTooLarge):
            ch.permute_factors([obj(8)] * 4, [1, 0, 2, 3])


class TestComposition:
    def test_compose_identity(self, rng):
        f = ch.random_channel(2, 3, rng)
        np.testing.assert_array_equal(ch.compose(ch.identity(f.codomain), f).action, f.action)
        np.testing.assert_array_equal(ch.compose(f, ch.identity(f.domain)).action, f.action)

    def test_compose_domain_check(self, rng):
        with pytest.raises(DomainMismatch):
            ch.compose(ch.random_channel(2, 2, rng), ch.random_channel(2, 3, rng))

    def test_interchange(self, rng):
        f, g = ch.random_channel(2, 3, rng), ch.random_channel(3, 2, rng)
        h, i = ch.random_channel(3, 2, rng), ch.random_channel(2, 2, rng)
        lhs = ch.tensor(ch.compose(g, f), ch.compose(i, h))
        rhs = ch.compose(ch.tensor(g, i), ch.tensor(f, h))
        np.testing.assert_allclose(lhs.action, rhs.action, atol=1e-12)

    def test_dsum_of_units(self):
        d = ch.dsum(ch.identity(ch.UNIT), ch.identity(ch.UNIT))
        assert d.domain.dims == (1, 1)
        np.testing.assert_array_equal(d.action, np.eye(2))

    def test_tensor_against_kraus(self, rng):
        k1, k2 = random_kraus(2, 2, rng), random_kraus(3, 2, rng)
        t = ch.tensor(ch.kraus_channel(k1), ch.kraus_channel(k2))
        r = ginibre_state(6, rng)
        joint = [np.kron(a, b) for a in k1 for b in k2]
        np.testing.assert_allclose(t(ch.density(r)).matrix, apply_kraus(joint, r), atol=1e-13)

    def test_tensor_multiblock(self, rng):
        f = ch.dsum(ch.random_channel(2, 2, rng), ch.identity(ch.UNIT))
        g = ch.basis_measurement(2)
        t = ch.tensor(f, g)
        assert t.domain.dims == (4, 2)
        assert t.codomain.dims == (2, 2, 1, 1)
        s = ch.random_state(t.domain, rng)
        out = t(s)
        assert sum(out.block_traces()) == pytest.approx(1.0)

    def test_provenance(self, rng):
        c = ch.compose(ch.trace_channel(obj(2)), ch.identity(obj(2)))
        assert "tr" in ch.describe(c.provenance)


class TestPrepare:
    def test_pure(self):
        s = ch.density(proj(ket(2, 0)))
        np.testing.assert_array_equal(ch.prepare(s)(ch.unit_state()).matrix, s.matrix)

    def test_product(self, rng):
        s = ch.density(ginibre_state(2, rng))
        np.testing.assert_allclose(ch.prepare(ch.state_tensor(s, s)).action,
                                   ch.tensor(ch.prepare(s), ch.prepare(s)).action, atol=1e-15)

    def test_bit(self):
        out = ch.prepare(ch.distribution([0.3, 0.7]))(ch.unit_state())
        np.testing.assert_allclose(out.probabilities(), [0.3, 0.7])


class TestPovm:
    def test_born_rule(self):
        out = ch.povm_channel([proj(ket(2, 0)), proj(ket(2, 1))])(ch.density(proj(PLUS)))
        np.testing.assert_allclose(out.probabilities(), [0.5, 0.5])

    def test_identity_effect_is_trace(self):
        np.testing.assert_array_equal(ch.povm_channel([np.eye(3)]).action, ch.trace_channel(obj(3)).action)

    def test_projector_on_itself(self):
        p = proj(PLUS)
        out = ch.povm_channel([p, np.eye(2) - p])(ch.density(p))
        np.testing.assert_allclose(out.probabilities(), [1, 0], atol=1e-15)

    def test_not_a_povm(self):
        with pytest.raises(NotAPOVM):
            ch.povm_channel([proj(ket(2, 0))])
        with pytest.raises(NotAPOVM):
            ch.povm_channel([np.diag([1.5, 1]), np.diag([-0.5, 0])])

    def test_instrument_keeps_post_measurement_state(self):
        e0 = np.diag([0.8, 0.3])
        inst = ch.povm_channel([e0, np.eye(2) - e0], destructive=False)
        out = inst(ch.density(proj(PLUS)))
        s = np.sqrt(e0)
        np.testing.assert_allclose(out.blocks[0], s @ proj(PLUS) @ s, atol=1e-14)


class TestBranching:
    @pytest.mark.parametrize("n, a", [(1, [2]), (2, [2]), (3, [1, 2])])
    def test_round_trip(self, n, a, rng):
        up = ch.branch_up(n, obj(a))
        down = ch.branch_down(n, obj(a))
        np.testing.assert_array_equal(ch.compose(down, up).action, np.eye(up.domain.vec_size))
        np.testing.assert_array_equal(ch.compose(up, down).action, np.eye(up.codomain.vec_size))

    def test_branch_up_n1_is_identity(self):
        np.testing.assert_array_equal(ch.branch_up(1, obj(3)).action, np.eye(9))

    def test_tagged_pair(self, rng):
        x1, x2 = ginibre_state(2, rng) * 0.4, ginibre_state(2, rng) * 0.6
        s = ch.BlockState(obj(2, 2), [x1, x2])
        down = ch.branch_down(2, obj(2))
        tagged = down(s)
        assert tagged.object.dims == (2, 2)
        back = ch.branch_up(2, obj(2))(tagged)
        np.testing.assert_array_equal(back.blocks[0], s.blocks[0])

    def test_elif_shared_branch(self, rng):
        f = ch.random_channel(2, 2, rng)
        rho = ch.density(ginibre_state(2, rng))
        inp = ch.state_tensor(ch.distribution([0.3, 0.7]), rho)
        out = ch.elif_channel([f, f])(inp)
        np.testing.assert_allclose(out.blocks[0], 0.3 * f(rho).matrix, atol=1e-14)
        np.testing.assert_allclose(out.blocks[1], 0.7 * f(rho).matrix, atol=1e-14)

    def test_elif_deterministic(self, rng):
        rho = ch.density(ginibre_state(2, rng))
        out = ch.elif_channel([ch.identity(obj(2)), ch.trace_channel(obj(2))])(
            ch.state_tensor(ch.distribution([1.0, 0.0]), rho))
        np.testing.assert_allclose(out.blocks[0], rho.matrix)
        assert out.blocks[1][0, 0] == 0

    def test_elif_prepare_after_trace(self, rng):
        zero = ch.replacement_channel(obj(2), ch.density(proj(ket(2, 0))))
        one = ch.replacement_channel(obj(2), ch.density(proj(ket(2, 1))))
        out = ch.elif_channel([zero, one])(ch.state_tensor(ch.distribution([0.5, 0.5]),
                                                           ch.density(ginibre_state(2, rng))))
        np.testing.assert_allclose(out.blocks[0], proj(ket(2, 0)) / 2, atol=1e-15)
        np.testing.assert_allclose(out.blocks[1], proj(ket(2, 1)) / 2, atol=1e-15)

    def test_elif_domain_check(self, rng):
        with pytest.raises(DomainMismatch):
            ch.elif_channel([ch.identity(obj(2)), ch.identity(obj(3))])


class TestSwapAndMove:
    def test_swap_pair(self, rng):
        r, s = ginibre_state(2, rng), ginibre_state(3, rng)
        out = ch.swap_channel(1, 2, [obj(2), obj(3)])(ch.density(np.kron(r, s)))
        np.testing.assert_allclose(out.matrix, np.kron(s, r), atol=1e-15)

    def test_swap_squared(self):
        sw = ch.swap_channel(1, 2, [obj(2), obj(2)])
        np.testing.assert_array_equal(ch.compose(sw, sw).action, np.eye(16))

    @pytest.mark.parametrize("k, l", [(1, 3), (2, 3), (1, 2)])
    def test_swap_three_factors(self, k, l, rng):
        dims = [2, 3, 2]
        rs = [ginibre_state(d, rng) for d in dims]
        out = ch.swap_channel(k, l, [obj(d) for d in dims])(ch.density(np.kron(np.kron(rs[0], rs[1]), rs[2])))
        rs[k - 1], rs[l - 1] = rs[l - 1], rs[k - 1]
        np.testing.assert_allclose(out.matrix, np.kron(np.kron(rs[0], rs[1]), rs[2]), atol=1e-14)

    def test_move_back(self, rng):
        rs = [ginibre_state(2, rng) for _ in range(3)]
        out = ch.move_back(1, 3, [obj(2)] * 3)(ch.density(np.kron(np.kron(rs[0], rs[1]), rs[2])))
        np.testing.assert_allclose(out.matrix, np.kron(np.kron(rs[1], rs[2]), rs[0]), atol=1e-14)

    def test_move_back_last_is_identity(self):
        np.testing.assert_array_equal(ch.move_back(3, 3, [obj(2)] * 3).action, np.eye(64))

    def test_index_errors(self):
        with pytest.raises(IndexOutOfRange):
            ch.swap_channel(2, 2, [obj(2)] * 3)
        with pytest.raises(IndexOutOfRange):
            ch.swap_channel(1, 4, [obj(2)] * 3)
        with pytest.raises(IndexOutOfRange):
            ch.move_back(0, 2, [obj(2)] * 2)

    def test_permutes_entangled_state(self):
        b = bell()
        out = ch.swap_channel(1, 3, [obj(2)] * 3)(ch.density(np.kron(b, np.eye(2) / 2)))
        # factor order after swap(1,3) of (A, B, C) is (C, B, A)
        direct = np.kron(b, np.eye(2) / 2).reshape([2] * 6).transpose(2, 1, 0, 5, 4, 3).reshape(8, 8)
        np.testing.assert_allclose(out.matrix, direct, atol=1e-15)


class TestForget:
    def test_n1(self):
        np.testing.assert_array_equal(ch.forget_branch(1, obj(2)).action, np.eye(4))

    def test_sum(self, rng):
        r, s = ginibre_state(2, rng), ginibre_state(2, rng)
        out = ch.forget_branch(2, obj(2))(ch.BlockState(obj(2, 2), [r / 2, s / 2]))
        np.testing.assert_allclose(out.matrix, (r + s) / 2, atol=1e-15)

    def test_heterogeneous(self):
        with pytest.raises(HeterogeneousSummands):
            ch.forget_summands([obj(2), obj(3)])

    def test_forget_after_elif(self, rng):
        f = ch.random_channel(2, 3, rng)
        lhs = ch.compose(ch.forget_branch(3, f.codomain), ch.elif_channel([f, f, f]))
        discard_tag = ch.relabel(ch.tensor(ch.trace_channel(ch.classical(3)), ch.identity(obj(2))),
                                 codomain=obj(2))
        rhs = ch.compose(f, discard_tag)
        np.testing.assert_allclose(lhs.action, rhs.action, atol=1e-12)


class TestPartialTrace:
    def test_product(self, rng):
        r, s = ginibre_state(2, rng), ginibre_state(3, rng)
        out = ch.partial_trace(2, [obj(2), obj(3)])(ch.density(np.kron(r, s)))
        np.testing.assert_allclose(out.matrix, r, atol=1e-15)

    @pytest.mark.parametrize("which", [1, 2])
    def test_bell(self, which):
        out = ch.partial_trace(which, [obj(2), obj(2)])(ch.density(bell()))
        np.testing.assert_allclose(out.matrix, np.eye(2) / 2, atol=1e-15)

    def test_classical_marginal(self):
        joint = ch.state_tensor(ch.distribution([0.2, 0.8]), ch.distribution([0.5, 0.25, 0.25]))
        out = ch.partial_trace(1, [ch.classical(2), ch.classical(3)])(joint)
        np.testing.assert_allclose(out.probabilities(), [0.5, 0.25, 0.25])

    def test_against_oracle(self, rng):
        r = ginibre_state(12, rng)
        out = ch.partial_trace([1, 3], [obj(2), obj(3), obj(2)])(ch.density(r))
        np.testing.assert_allclose(out.matrix, partial_trace(r, [2, 3, 2], [1]), atol=1e-14)

    def test_index_error(self):
        with pytest.raises(IndexOutOfRange):
            ch.partial_trace(3, [obj(2), obj(2)])


class TestNamedChannels:
    def test_dephasing_keeps_diagonal(self):
        out = ch.dephasing(2)(ch.density(proj(PLUS)))
        np.testing.assert_allclose(out.matrix, np.eye(2) / 2, atol=1e-15)
        np.testing.assert_allclose(ch.dephasing(2)(ch.density(proj(ket(2, 0)))).matrix, proj(ket(2, 0)))

    def test_depolarizing(self, rng):
        r = ginibre_state(3, rng)
        out = ch.depolarizing(3, 0.25)(ch.density(r))
        np.testing.assert_allclose(out.matrix, 0.75 * r + 0.25 * np.eye(3) / 3, atol=1e-15)

    def test_replacement(self, rng):
        t = ch.density(proj(ket(3, 2)))
        out = ch.replacement_channel(obj(3), t)(ch.density(ginibre_state(3, rng)))
        np.testing.assert_allclose(out.matrix, t.matrix, atol=1e-15)


def _choi_psd(c):
    for i in range(len(c.codomain)):
        for j in range(len(c.domain)):
            assert np.linalg.eigvalsh(c.choi(i, j)).min() >= -1e-8


@pytest.mark.parametrize("build", [
    lambda rng: ch.random_channel(2, 3, rng),
    lambda rng: ch.povm_channel([np.diag([0.7, 0.2]), np.diag([0.3, 0.8])], destructive=False),
    lambda rng: ch.swap_channel(1, 2, [obj(2), obj(3)]),
    lambda rng: ch.forget_branch(2, obj(2)),
    lambda rng: ch.elif_channel([ch.random_channel(2, 2, rng), ch.dephasing(2)]),
    lambda rng: ch.partial_trace(1, [obj(2), obj(2)]),
    lambda rng: ch.dsum(ch.random_channel(2, 2, rng), ch.basis_measurement(2)),
])
def test_constructed_channels_are_cptp(build, rng):
    c = build(rng)
    lhs = c.codomain.identity_vec() @ c.action
    np.testing.assert_allclose(lhs, c.domain.identity_vec(), atol=1e-9)
    _choi_psd(c)
    for _ in range(200):
        out = c(ch.random_state(c.domain, rng, rank=int(rng.integers(1, 3))))
        assert sum(out.block_traces()) == pytest.approx(1.0, abs=1e-9)


def test_choi_of_identity_is_unnormalised_bell():
    j = ch.identity(obj(2)).choi()
    np.testing.assert_allclose(j, 2 * bell(), atol=1e-15)


@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_random_channel_property(m, n, seed):
    rng = np.random.default_rng(seed)
    c = ch.random_channel(m, n, rng)
    out = c(ch.random_state(obj(m), rng))
    assert out.object == obj(n)
    assert np.linalg.eigvalsh(c.choi()).min() >= -1e-10


@given(st.lists(st.integers(1, 3), min_size=2, max_size=3), st.integers(0, 2**32 - 1))
def test_permutation_round_trip(dims, seed):
    rng = np.random.default_rng(seed)
    objs = [obj(d) for d in dims]
    perm = list(rng.permutation(len(dims)))
    fwd = ch.permute_factors(objs, perm)
    inv = ch.permute_factors([objs[p] for p in perm], list(np.argsort(perm)))
    np.testing.assert_array_equal(ch.compose(inv, fwd).action, np.eye(fwd.domain.vec_size))
