import numpy as np
import pytest
import torch

from plgrad import plackett_luce as pl
from plgrad.autodiff import finite_difference_check
from plgrad.control_variate import ControlVariateParams, cv_eval_rebar, cv_eval_relax, cv_init, rho
from plgrad.relaxed_sort import hard_permutation_matrix, relaxed_permutation_matrix
from plgrad.toy import target_matrix, toy_objective

F8 = toy_objective(target_matrix(8, 0.05))


def test_init_shapes():
    p = cv_init(8, 64, 0)
    assert [tuple(t.shape) for t in (p.w1, p.b1, p.w2, p.b2)] == [(64, 8), (64,), (1, 64), (1,)]
    assert float(p.log_tau) == 0.0 and float(p.eta) == 1.0
    assert float(p.w1.abs().max()) <= 1 / np.sqrt(8) and float(p.w2.abs().max()) <= 1 / 8


def test_init_determinism():
    a, b, c = cv_init(4, 8, 1), cv_init(4, 8, 1), cv_init(4, 8, 2)
    assert all(torch.equal(x, y) for x, y in zip(a.as_dict().values(), b.as_dict().values()))
    assert not torch.equal(a.w1, c.w1)


def test_init_rejects_bad_sizes():
    with pytest.raises(ValueError):
        cv_init(0, 4)


def test_zero_network_gives_relaxed_f():
    p = cv_init(8, 16, 0)
    p = ControlVariateParams(**{**p.as_dict(), "w2": torch.zeros(1, 16, dtype=torch.float64), "b2": torch.zeros(1, dtype=torch.float64)})
    z = torch.from_numpy(np.random.default_rng(0).normal(size=8))
    expected = F8.relaxed(relaxed_permutation_matrix(z, 1.0))
    assert float(cv_eval_relax(p, z, F8.relaxed)) == pytest.approx(float(expected), abs=1e-12)


def test_zero_objective_at_origin():
    p = cv_init(4, 8, 0)
    out = cv_eval_relax(p, torch.zeros(4), lambda m: torch.zeros(m.shape[:-2], dtype=torch.float64))
    expected = p.w2 @ torch.relu(p.b1) + p.b2
    assert float(out) == pytest.approx(float(expected), abs=1e-12)


def test_relax_gradient_in_z():
    p = cv_init(5, 16, 2)
    f = toy_objective(target_matrix(5, 0.05))
    report = finite_difference_check(lambda z: cv_eval_relax(p, z, f.relaxed),
                                     {"z": np.random.default_rng(2).normal(size=5)})
    assert report.max_rel_error < 1e-5


def test_rebar_examples():
    p = cv_init(8, 4, 0)
    z = torch.from_numpy(np.random.default_rng(4).normal(size=8))
    zero = ControlVariateParams(**{**p.as_dict(), "eta": torch.tensor(0.0, dtype=torch.float64)})
    assert float(cv_eval_rebar(zero, z, F8.relaxed)) == 0.0
    doubled = ControlVariateParams(**{**p.as_dict(), "eta": torch.tensor(2.0, dtype=torch.float64)})
    assert float(cv_eval_rebar(doubled, z, F8.relaxed)) == pytest.approx(2 * float(cv_eval_rebar(p, z, F8.relaxed)))
    cold = ControlVariateParams(**{**p.as_dict(), "log_tau": torch.tensor(np.log(1e-4))})
    hard = F8(pl.mode(z))
    assert float(cv_eval_rebar(cold, z, F8.relaxed)) == pytest.approx(float(hard), abs=1e-6)


def test_rebar_requires_relaxation():
    with pytest.raises(ValueError):
        cv_eval_rebar(cv_init(3, 2), torch.zeros(3), None)


def test_non_finite_rejected():
    p = cv_init(3, 2)
    with pytest.raises(FloatingPointError):
        cv_eval_relax(p, torch.zeros(3), lambda m: torch.full(m.shape[:-2], float("nan")))


def test_continuity():
    p = cv_init(6, 16, 5)
    f = toy_objective(target_matrix(6, 0.05))
    g = np.random.default_rng(5)
    for _ in range(20):
        z = torch.from_numpy(g.normal(size=6))
        dz = torch.from_numpy(g.normal(size=6)) * 1e-7
        for fn in (lambda q: cv_eval_relax(p, q, f.relaxed), lambda q: cv_eval_rebar(p, q, f.relaxed)):
            assert abs(float(fn(z + dz) - fn(z))) < 1e-4
            assert float(fn(z)) == float(fn(z.clone()))


def test_batched_rho_matches_rows():
    p = cv_init(4, 8, 0)
    z = torch.from_numpy(np.random.default_rng(0).normal(size=(3, 4)))
    out = rho(p, z)
    assert out.shape == (3,)
    assert float(out[2]) == pytest.approx(float(rho(p, z[2])))


def test_hard_limit_sanity():
    b = torch.tensor([2, 0, 1])
    assert torch.equal(hard_permutation_matrix(b).argmax(-1), b)
