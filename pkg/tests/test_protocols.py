import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qsvsim import channels as ch
from qsvsim import protocols as pr
from qsvsim.combs import fill
from qsvsim.errors import DomainMismatch, InvalidState, ShapeError, TooManyCopiesForExplicit
from oracles import ginibre_state, ket, proj, round_output, simple_protocol_output, threshold_effect

PLUS = np.array([1, 1]) / np.sqrt(2)


def fill_iid(p, rho):
    """Run the explicit comb with every hole preparing ``rho``."""
    comb = pr.client_comb(p)
    prep = ch.prepare(ch.density(rho))
    out = ch.apply(fill(comb, [prep] * len(comb.signature)), ch.unit_state())
    return out.blocks[0], float(out.blocks[1].real[0, 0])


def rotated(theta):
    return np.array([np.cos(theta / 2), np.sin(theta / 2)])


class TestTargetSpec:
    def test_pure(self):
        t = pr.TargetSpec.from_amplitudes([1, 1])
        assert t.is_pure and t.K == 1 and t.d == 2
        np.testing.assert_allclose(t.vector(), PLUS, atol=1e-12)

    def test_phase_convention(self):
        t = pr.TargetSpec.from_amplitudes([1j, 0])
        np.testing.assert_allclose(t.vector(), [1, 0], atol=1e-12)

    def test_mixed(self):
        t = pr.TargetSpec.from_matrix(np.diag([0.75, 0.25]))
        assert not t.is_pure

    def test_multi_client(self):
        bell = pr.TargetSpec.from_amplitudes([1, 0, 0, 1], client_dims=(2, 2))
        assert bell.K == 2 and bell.partition == (0,)

    def test_bad_client_dims(self):
        with pytest.raises(ShapeError):
            pr.TargetSpec.from_amplitudes([1, 0, 0, 1], client_dims=(2, 3))

    def test_multi_block_rejected(self):
        with pytest.raises(InvalidState):
            pr.TargetSpec(ch.distribution([0.5, 0.5]))


class TestAcceptance:
    def test_overlap_power(self):
        # 15/16 overlap on four copies
        rho = proj(rotated(2 * np.arccos(np.sqrt(15 / 16))))
        t = pr.AcceptanceTest.all_pass(proj(ket(2, 0)))
        assert pr.acceptance_probability(t, rho, 4) == pytest.approx(50625 / 65536, abs=1e-14)

    def test_zero_copies(self, rng):
        t = pr.AcceptanceTest.all_pass(proj(ket(2, 0)))
        assert pr.acceptance_probability(t, ginibre_state(2, rng), 0) == 1.0

    def test_threshold_k0(self, rng):
        t = pr.AcceptanceTest.threshold(np.zeros((2, 2)), k=0)
        assert pr.acceptance_probability(t, ginibre_state(2, rng), 5) == 1.0

    def test_threshold_impossible(self):
        t = pr.AcceptanceTest.threshold(np.eye(2), k=4)
        assert pr.acceptance_probability(t, np.eye(2) / 2, 3) == 0.0

    def test_fraction_rounds_up(self):
        t = pr.AcceptanceTest.threshold(np.eye(2), fraction=0.5)
        assert [t.needed(i) for i in (1, 2, 3, 4)] == [1, 1, 2, 2]

    @pytest.mark.parametrize("kind,k", [("all-pass", None), ("threshold", 0), ("threshold", 2),
                                        ("threshold", 3), ("threshold", 4)])
    @pytest.mark.parametrize("i", [1, 2, 3])
    def test_against_explicit_tensor(self, rng, kind, k, i):
        e = ginibre_state(2, rng)
        e = e / np.linalg.eigvalsh(e)[-1]
        test = pr.AcceptanceTest.all_pass(e) if kind == "all-pass" else pr.AcceptanceTest.threshold(e, k=k)
        rho = ginibre_state(2, rng)
        mu0 = threshold_effect(e, i, i if kind == "all-pass" else k)
        big = rho
        for _ in range(i - 1):
            big = np.kron(big, rho)
        want = float(np.trace(mu0 @ big).real)
        assert pr.acceptance_probability(test, rho, i) == pytest.approx(want, abs=1e-12)
        np.testing.assert_allclose(pr.accept_effect(test, i), mu0, atol=1e-12)

    def test_explicit_limits(self):
        t = pr.AcceptanceTest.from_effects({1: np.eye(2) / 2})
        assert pr.acceptance_probability(t, np.eye(2) / 2, 1) == pytest.approx(0.5)
        with pytest.raises(ShapeError):
            pr.acceptance_probability(t, np.eye(2) / 2, 2)
        with pytest.raises(TooManyCopiesForExplicit):
            pr.acceptance_probability(t, np.eye(2) / 2, pr.EXPLICIT_MAX_COPIES + 1)

    @pytest.mark.parametrize("effect", [np.diag([1.2, 0]), np.array([[0, 1], [0, 0]]), np.ones(3)])
    def test_bad_effect(self, effect):
        with pytest.raises(ShapeError):
            pr.AcceptanceTest.all_pass(effect)

    def test_threshold_needs_one_parameter(self):
        with pytest.raises(ValueError):
            pr.AcceptanceTest.threshold(np.eye(2))
        with pytest.raises(ValueError):
            pr.AcceptanceTest.threshold(np.eye(2), k=1, fraction=0.5)

    def test_default_tests(self):
        assert np.allclose(pr.default_test(pr.TargetSpec.from_amplitudes([1, 1])).effect, proj(PLUS))
        mixed = pr.TargetSpec.from_matrix(np.diag([0.5, 0.5, 0]))
        assert np.allclose(pr.default_test(mixed).effect, np.diag([1, 1, 0]))

    @given(st.floats(0, 1), st.integers(1, 30), st.integers(0, 30))
    def test_threshold_monotone_in_k(self, p, i, k):
        e = np.diag([1.0, 0.0])
        rho = np.diag([p, 1 - p])
        lo = pr.acceptance_probability(pr.AcceptanceTest.threshold(e, k=k), rho, i)
        hi = pr.acceptance_probability(pr.AcceptanceTest.threshold(e, k=k + 1), rho, i)
        assert 0 <= hi <= lo + 1e-12 <= 1 + 1e-12


class TestRoundDistribution:
    def test_point(self):
        d = pr.RoundDistribution.point(5, 4)
        assert d.cap == 5 and d.expected_rounds == 5

    def test_uniform(self):
        d = pr.RoundDistribution.uniform(1, 3)
        assert d.expected_rounds == pytest.approx(2)

    @pytest.mark.parametrize("mean", [1.5, 4, 16])
    def test_geometric_mean(self, mean):
        d = pr.RoundDistribution.truncated_geometric(mean)
        assert d.expected_rounds == pytest.approx(mean, abs=1e-9)
        assert all(i == r - 1 for r, i in d.table)

    @pytest.mark.parametrize("table", [{(2, 3): 1.0}, {(2, 1): 0.5}, {(2, 1): 1.5, (3, 2): -0.5}])
    def test_invalid(self, table):
        with pytest.raises(ShapeError):
            pr.RoundDistribution(table)

    def test_single_client_forbids_diagonal(self):
        with pytest.raises(ShapeError):
            pr.RoundDistribution({(2, 2): 1.0}, chi=(np.eye(2) / 2,), single_client=True)

    def test_diagonal_needs_chi(self):
        with pytest.raises(ShapeError):
            pr.RoundDistribution({(2, 2): 1.0})

    def test_chi_is_tensor(self):
        d = pr.RoundDistribution({(1, 1): 1.0}, chi=(proj(ket(2, 0)), np.eye(2) / 2))
        np.testing.assert_allclose(d.chi_state().matrix, np.diag([0.5, 0.5, 0, 0]))

    def test_unreachable_mean(self):
        with pytest.raises(ShapeError):
            pr.RoundDistribution.truncated_geometric(5, cap=4)


class TestIdeal:
    def test_ideal_channel_outputs(self):
        t = pr.TargetSpec.from_amplitudes([1, 1])
        out = ch.apply(pr.ideal_channel(t), ch.distribution([0.3, 0.7]))
        np.testing.assert_allclose(out.blocks[0], 0.3 * proj(PLUS), atol=1e-14)
        assert out.blocks[1][0, 0] == pytest.approx(0.7)

    def test_filtered_never_aborts(self):
        t = pr.TargetSpec.from_amplitudes([1, 0])
        out = ch.apply(pr.filtered_ideal(t), ch.unit_state())
        assert out.blocks[1][0, 0] == pytest.approx(0)

    def test_replacement_post(self):
        t = pr.TargetSpec.from_amplitudes([1, 1])
        post = ch.replacement_channel(ch.obj(2), ch.pure([1, 0]))
        a = ch.apply(pr.post_composed_ideal(t, post, filtered=True), ch.unit_state())
        b = ch.apply(pr.filtered_ideal(pr.TargetSpec.from_amplitudes([1, 0])), ch.unit_state())
        np.testing.assert_allclose(a.vec(), b.vec(), atol=1e-14)

    def test_dephasing_keeps_basis_state(self):
        t = pr.TargetSpec.from_amplitudes([1, 0])
        a = ch.apply(pr.post_composed_ideal(t, ch.dephasing(2)), ch.distribution([1, 0]))
        np.testing.assert_allclose(a.blocks[0], proj(ket(2, 0)), atol=1e-14)

    def test_post_domain_checked(self):
        with pytest.raises(DomainMismatch):
            pr.post_composed_ideal(pr.TargetSpec.from_amplitudes([1, 0]), ch.dephasing(3))

    def test_ideal_output_matches_channel(self):
        t = pr.TargetSpec.from_amplitudes([1, 2, 0])
        o = pr.ideal_output(t, 0.4)
        s = ch.apply(pr.ideal_channel(t), ch.distribution([0.4, 0.6]))
        np.testing.assert_allclose(o.state().vec(), s.vec(), atol=1e-14)


class TestSimpleProtocol:
    @pytest.mark.parametrize("N", [0, 1, 2, 3])
    def test_fast_path_against_oracle(self, rng, N):
        t = pr.TargetSpec.from_amplitudes([1, 1])
        p = pr.Protocol.simple(t, N)
        rho = ginibre_state(2, rng)
        got = pr.game_output(p, rho)
        want, abort = simple_protocol_output(rho, N, proj(PLUS) if N == 0 else threshold_effect(proj(PLUS), N, N))
        np.testing.assert_allclose(got.accept, want, atol=1e-12)
        assert got.abort == pytest.approx(abort, abs=1e-12)

    @pytest.mark.parametrize("N", [0, 1, 2])
    def test_comb_against_fast_path(self, rng, N):
        t = pr.TargetSpec.from_amplitudes([1, 1])
        p = pr.Protocol.simple(t, N)
        rho = ginibre_state(2, rng)
        acc, abort = fill_iid(p, rho)
        got = pr.game_output(p, rho)
        np.testing.assert_allclose(acc, got.accept, atol=1e-12)
        assert abort == pytest.approx(got.abort, abs=1e-12)

    def test_comb_qutrit(self, rng):
        t = pr.TargetSpec.from_amplitudes([1, 1j, 0])
        p = pr.Protocol.simple(t, 2)
        rho = ginibre_state(3, rng)
        acc, abort = fill_iid(p, rho)
        np.testing.assert_allclose(acc, pr.game_output(p, rho).accept, atol=1e-12)

    def test_eta_independent_for_iid(self, rng):
        t = pr.TargetSpec.from_amplitudes([1, 0])
        rho = ginibre_state(2, rng)
        a = fill_iid(pr.Protocol.simple(t, 2, eta=[1, 0, 0]), rho)[0]
        b = fill_iid(pr.Protocol.simple(t, 2, eta=[0.2, 0.5, 0.3]), rho)[0]
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_honest_acceptance(self):
        t = pr.TargetSpec.from_matrix(np.diag([0.75, 0.25]))
        assert pr.honest_acceptance(pr.Protocol.simple(t, 9)) == pytest.approx(1.0)
        test = pr.AcceptanceTest.all_pass(np.diag([1.0, 0.0]))
        assert pr.honest_acceptance(pr.Protocol.simple(t, 2, test)) == pytest.approx(0.5625)

    def test_target_is_accepted_unchanged(self):
        t = pr.TargetSpec.from_amplitudes([1, 1])
        out = pr.game_output(pr.Protocol.simple(t, 10), t.matrix)
        np.testing.assert_allclose(out.accept, t.matrix, atol=1e-14)
        assert out.abort == pytest.approx(0)

    def test_post_channel_applied(self, rng):
        t = pr.TargetSpec.from_amplitudes([1, 1])
        p = pr.Protocol.simple(t, 2, post=ch.dephasing(2))
        rho = ginibre_state(2, rng)
        np.testing.assert_allclose(fill_iid(p, rho)[0], pr.game_output(p, rho).accept, atol=1e-12)
        assert abs(pr.game_output(p, rho).accept[0, 1]) < 1e-14


class TestGeneralProtocol:
    @pytest.mark.parametrize("table", [
        {(1, 0): 1.0},
        {(2, 1): 0.5, (3, 2): 0.5},
        {(3, 1): 0.3, (2, 1): 0.2, (3, 2): 0.5},
    ])
    def test_fast_path_against_oracle(self, rng, table):
        t = pr.TargetSpec.from_amplitudes([1, 1])
        p = pr.Protocol(t, pr.RoundDistribution(table), pr.default_test(t))
        rho = ginibre_state(2, rng)
        want = sum(w * round_output(rho, r, i, threshold_effect(proj(PLUS), i, i) if i else None)
                   for (r, i), w in table.items())
        got = pr.game_output(p, rho)
        np.testing.assert_allclose(got.accept, want, atol=1e-12)
        acc, abort = fill_iid(p, rho)
        np.testing.assert_allclose(acc, want, atol=1e-12)
        assert abort == pytest.approx(got.abort, abs=1e-12)

    def test_chi_fallback(self, rng):
        t = pr.TargetSpec.from_amplitudes([1, 0, 0, 1], client_dims=(2, 2))
        chi = (proj(ket(2, 1)), proj(ket(2, 0)))
        p = pr.Protocol(t, pr.RoundDistribution({(1, 1): 0.5, (2, 1): 0.5}, chi=chi), pr.default_test(t))
        rho = ginibre_state(4, rng)
        got = pr.game_output(p, rho)
        pa = float(np.trace(proj(np.array([1, 0, 0, 1]) / np.sqrt(2)) @ rho).real)
        want = 0.5 * pa * proj(ket(4, 2)) + 0.5 * pa * rho
        np.testing.assert_allclose(got.accept, want, atol=1e-12)
        np.testing.assert_allclose(fill_iid(p, rho)[0], want, atol=1e-12)

    def test_per_round_tests(self, rng):
        t = pr.TargetSpec.from_amplitudes([1, 0])
        tests = {(2, 1): pr.AcceptanceTest.always_accept(2), (3, 2): pr.default_test(t)}
        p = pr.Protocol(t, pr.RoundDistribution({(2, 1): 0.5, (3, 2): 0.5}), tests)
        rho = ginibre_state(2, rng)
        want = 0.5 * rho + 0.5 * rho[0, 0].real ** 2 * rho
        np.testing.assert_allclose(pr.game_output(p, rho).accept, want, atol=1e-12)
        np.testing.assert_allclose(fill_iid(p, rho)[0], want, atol=1e-12)
