import itertools
import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from plgrad import plackett_luce as pl
from plgrad import rng as rngmod
from plgrad.gumbel import sample_gumbel

from conftest import perm_from_1


def _theta(k, seed, scale=2.0):
    return torch.from_numpy(np.random.default_rng(seed).uniform(-scale, scale, k))


def brute_log_prob(theta, b):
    """Sequential-choice oracle written out with plain Python floats."""
    remaining = list(b)
    total = 0.0
    for item in b:
        denom = sum(math.exp(theta[j]) for j in remaining)
        total += math.log(math.exp(theta[item]) / denom)
        remaining.remove(item)
    return total


class TestLogProb:
    def test_uniform(self):
        assert float(pl.log_prob(torch.zeros(3), perm_from_1(2, 3, 1))) == pytest.approx(math.log(1 / 6))

    def test_two_items(self):
        theta = torch.tensor([math.log(2), 0.0])
        assert float(pl.log_prob(theta, perm_from_1(1, 2))) == pytest.approx(math.log(2 / 3))

    def test_single_item(self):
        assert float(pl.log_prob(torch.tensor([1.3]), torch.tensor([0]))) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            pl.log_prob(torch.zeros(3), torch.tensor([0, 1]))

    @pytest.mark.parametrize("k", [2, 3, 5])
    def test_matches_sequential_oracle(self, k):
        theta = _theta(k, k)
        for b in pl.all_permutations(k)[:30]:
            assert float(pl.log_prob(theta, b)) == pytest.approx(brute_log_prob(theta.tolist(), list(b)), abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 10_000), st.floats(-50, 50))
    def test_shift_invariance(self, k, seed, c):
        theta = _theta(k, seed)
        b = torch.from_numpy(np.random.default_rng(seed).permutation(k))
        assert float(pl.log_prob(theta + c, b)) == pytest.approx(float(pl.log_prob(theta, b)), abs=1e-9)

    def test_large_scores_do_not_overflow(self):
        theta = torch.tensor([800.0, 0.0, -800.0], dtype=torch.float64)
        assert float(pl.log_prob(theta, torch.tensor([0, 1, 2]))) == pytest.approx(0.0, abs=1e-12)


class TestGradLogProb:
    def test_two_items_example(self):
        g = pl.grad_log_prob(torch.zeros(2), perm_from_1(1, 2))
        assert g.tolist() == pytest.approx([0.5, -0.5])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 7), st.integers(0, 10_000))
    def test_sums_to_zero(self, k, seed):
        theta = _theta(k, seed, 5.0)
        b = torch.from_numpy(np.random.default_rng(seed + 1).permutation(k))
        assert abs(float(pl.grad_log_prob(theta, b).sum())) <= 1e-10

    @pytest.mark.parametrize("k", [2, 4, 6])
    def test_central_differences(self, k):
        theta = _theta(k, 7 * k).numpy()
        b = np.random.default_rng(k).permutation(k)
        h = 1e-5
        fd = np.array([(brute_log_prob(theta + h * e, b) - brute_log_prob(theta - h * e, b)) / (2 * h)
                       for e in np.eye(k)])
        np.testing.assert_allclose(pl.grad_log_prob(torch.from_numpy(theta), b).numpy(), fd, atol=1e-6)

    @pytest.mark.parametrize("k", [2, 3, 4, 5])
    def test_score_identity(self, k):
        theta = _theta(k, 3 * k)
        perms, probs = pl.enumerate_distribution(theta)
        expectation = probs @ pl.grad_log_prob(theta, perms).numpy()
        np.testing.assert_allclose(expectation, 0.0, atol=1e-9)

    def test_batched_matches_rowwise(self):
        theta = _theta(4, 0)
        perms = torch.from_numpy(pl.all_permutations(4))
        batched = pl.grad_log_prob(theta, perms)
        for i in (0, 5, 23):
            assert torch.equal(batched[i], pl.grad_log_prob(theta, perms[i]))


class TestSample:
    def test_single_item(self):
        b, _ = pl.sample(torch.tensor([0.2]), torch.tensor([0.3]))
        assert b.tolist() == [0]

    def test_argsort_of_keys(self):
        theta = _theta(6, 1)
        v = rngmod.uniform_seeds(rngmod.stream(1, 1), (100, 6))
        b, z = pl.sample(theta, v)
        assert torch.equal(z.detach(), sample_gumbel(theta, v))
        zb = torch.gather(z.detach(), -1, b)
        assert (zb[:, :-1] >= zb[:, 1:]).all()

    def test_ties_break_by_lower_index(self):
        assert pl.argsort_desc(torch.tensor([1.0, 2.0, 1.0, 2.0])).tolist() == [1, 3, 0, 2]

    def test_uniform_frequencies(self):
        v = rngmod.uniform_seeds(rngmod.stream(2, 1), (100_000, 3))
        b, _ = pl.sample(torch.zeros(3), v)
        codes = (b * torch.tensor([9, 3, 1])).sum(-1)
        counts = np.array([(codes == c).sum().item() for c in torch.unique(codes)])
        assert len(counts) == 6
        sigma = math.sqrt(100_000 * (1 / 6) * (5 / 6))
        assert np.all(np.abs(counts - 100_000 / 6) <= 3 * sigma)

    def test_two_item_frequency(self):
        v = rngmod.uniform_seeds(rngmod.stream(3, 1), (100_000, 2))
        b, _ = pl.sample(torch.tensor([math.log(2), 0.0]), v)
        freq = (b[:, 0] == 0).double().mean().item()
        assert abs(freq - 2 / 3) <= 3 * math.sqrt((2 / 9) / 100_000)

    def test_chi_square_k4(self):
        theta = _theta(4, 11)
        perms, probs = pl.enumerate_distribution(theta)
        v = rngmod.uniform_seeds(rngmod.stream(4, 1), (100_000, 4))
        b, _ = pl.sample(theta, v)
        codes = (b * torch.tensor([64, 16, 4, 1])).sum(-1).numpy()
        perm_codes = perms @ np.array([64, 16, 4, 1])
        observed = np.array([(codes == c).sum() for c in perm_codes])
        assert observed.sum() == 100_000
        assert stats.chisquare(observed, probs * 100_000).pvalue > 1e-3


class TestConditional:
    def test_argsort_recovers_b(self):
        k, n = 6, 100_000
        g = rngmod.stream(5, 1)
        theta = torch.from_numpy(g.uniform(-3, 3, (n, k)))
        b = torch.from_numpy(np.argsort(g.random((n, k)), axis=1))
        draw = pl.sample_conditional(theta, b, rngmod.uniform_seeds(g, (n, k)))
        assert torch.equal(pl.argsort_desc(draw.z_tilde), b)

    def test_cumulative_scores(self):
        theta = _theta(5, 2)
        b = torch.tensor([3, 0, 4, 1, 2])
        draw = pl.sample_conditional(theta, b, torch.full((5,), 0.5))
        cum = draw.cumulative_scores
        assert float(cum[0]) == pytest.approx(1.0, abs=1e-12)
        assert (cum[:-1] > cum[1:]).all()
        assert float(draw.shift) == pytest.approx(float(torch.logsumexp(theta, 0)))

    def test_chain_definition(self):
        theta = _theta(4, 9)
        b = torch.tensor([2, 0, 3, 1])
        v = torch.tensor([0.3, 0.7, 0.2, 0.9], dtype=torch.float64)
        draw = pl.sample_conditional(theta, b, v)
        z_pos = draw.z_tilde[b] - draw.shift
        expected = [-math.log(-math.log(0.3))]
        cum = draw.cumulative_scores.tolist()
        for i in range(1, 4):
            expected.append(-np.logaddexp(math.log(-math.log(float(v[i]))) - math.log(cum[i]),
                                          -expected[-1]))
        np.testing.assert_allclose(z_pos.numpy(), expected, atol=1e-12)

    def test_single_item_is_standard_gumbel(self):
        v = rngmod.uniform_seeds(rngmod.stream(6, 1), (100_000, 1))
        draw = pl.sample_conditional(torch.zeros(1), torch.tensor([0]), v)
        assert stats.kstest(draw.z_tilde[:, 0].numpy(), stats.gumbel_r.cdf).pvalue > 1e-3

    def test_rejects_non_permutation(self):
        with pytest.raises(ValueError):
            pl.sample_conditional(torch.zeros(3), torch.tensor([0, 0, 1]), torch.full((3,), 0.5))

    def test_joint_law_matches_unconditional(self):
        """(b, z~) from sample-then-condition vs (argsort z, z) from plain sampling."""
        theta = torch.tensor([0.3, -0.2, 0.1], dtype=torch.float64)
        n = 200_000
        b_a, _ = pl.sample(theta, rngmod.uniform_seeds(rngmod.stream(7, 1), (n, 3)))
        zt = pl.sample_conditional(theta, b_a, rngmod.uniform_seeds(rngmod.stream(7, 2), (n, 3))).z_tilde
        b_b, z_b = pl.sample(theta, rngmod.uniform_seeds(rngmod.stream(7, 3), (n, 3)))
        for perm in itertools.permutations(range(3)):
            ref = torch.tensor(perm)
            za = zt[(b_a == ref).all(-1)].numpy()
            zb = z_b.detach()[(b_b == ref).all(-1)].numpy()
            se = np.sqrt(za.var(0, ddof=1) / len(za) + zb.var(0, ddof=1) / len(zb))
            assert np.all(np.abs(za.mean(0) - zb.mean(0)) <= 3 * se), perm


class TestMode:
    def test_examples(self):
        assert pl.mode(torch.tensor([1.0, 3.0, 2.0])).tolist() == [1, 2, 0]
        assert pl.mode(torch.zeros(2)).tolist() == [0, 1]

    @pytest.mark.parametrize("k", [2, 4, 6])
    def test_mode_is_argmax(self, k):
        g = np.random.default_rng(k)
        for _ in range(100 // 3 + 1):
            theta = torch.from_numpy(g.normal(size=k))
            perms, probs = pl.enumerate_distribution(theta)
            assert perms[np.argmax(probs)].tolist() == pl.mode(theta).tolist()


class TestNormalizeAndEnumerate:
    def test_normalize_example(self):
        np.testing.assert_allclose(pl.normalize(torch.zeros(2)).numpy(), [-math.log(2)] * 2)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 10_000))
    def test_normalize_properties(self, k, seed):
        theta = _theta(k, seed, 10.0)
        t2 = pl.normalize(theta)
        assert abs(float(torch.logsumexp(t2, 0))) <= 1e-12
        b = torch.from_numpy(np.random.default_rng(seed).permutation(k))
        assert float(pl.log_prob(t2, b)) == pytest.approx(float(pl.log_prob(theta, b)), abs=1e-10)

    def test_enumerate_examples(self):
        perms, probs = pl.enumerate_distribution(torch.zeros(2))
        assert perms.tolist() == [[0, 1], [1, 0]] and probs.tolist() == pytest.approx([0.5, 0.5])
        _, probs = pl.enumerate_distribution(torch.tensor([math.log(2), 0.0]))
        assert probs.tolist() == pytest.approx([2 / 3, 1 / 3])

    @pytest.mark.parametrize("k", [1, 3, 5, 8])
    def test_mass_sums_to_one(self, k):
        perms, probs = pl.enumerate_distribution(_theta(k, k))
        assert len(perms) == math.factorial(k)
        assert abs(probs.sum() - 1) <= 1e-9

    def test_lexicographic(self):
        assert [tuple(p) for p in pl.all_permutations(3)] == list(itertools.permutations(range(3)))

    def test_rejects_large_k(self):
        with pytest.raises(ValueError):
            pl.enumerate_distribution(torch.zeros(9))
