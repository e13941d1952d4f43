import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavecontrol import lattice as lt
from wavecontrol import moments as mo
from wavecontrol import spectral_bvp as sb
from wavecontrol.errors import ClusterWarning, IllConditioned, UnreachableMode


def lattice_for(lams, K, a=np.pi, family="sine"):
    bc = sb.build_boundary(alpha1=1.0, alpha2=0.3, beta1=0.5, beta2=1.0)
    return lt.build_lattice(bc, a, K, np.asarray(lams, float), family=family)


def zero_state(m):
    return lt.encode_state(np.zeros((m.K, m.N)), np.zeros((m.K, m.N)), m)


class TestFamily:
    def test_rejects_duplicates(self):
        with pytest.raises(ValueError):
            mo.ExponentialFamily([1.0, 2.0, 1.0], 1.0)

    def test_rejects_bad_horizon(self):
        with pytest.raises(ValueError):
            mo.ExponentialFamily([1.0], 0.0)

    def test_window_expansion(self):
        t = np.linspace(0, 3.0, 101)
        for p in range(4):
            coef, shift = mo._window_terms(p, 3.0)
            series = np.real(np.sum(coef[:, None] * np.exp(1j * shift[:, None] * t), axis=0))
            assert np.allclose(series, mo.window(t, 3.0, p), atol=1e-14)


class TestGram:
    def test_single(self):
        G = mo.gram(mo.ExponentialFamily([3.7], 2.5))
        assert G.shape == (1, 1) and G[0, 0] == pytest.approx(2.5)

    def test_full_period(self):
        G = mo.gram(mo.ExponentialFamily([2.0, 1.0], 2 * np.pi))
        assert np.allclose(G, 2 * np.pi * np.eye(2), atol=1e-14)

    def test_cluster_closed_form(self):
        fam = mo.ExponentialFamily([10.0, 10.01], 1.0)
        with pytest.warns(ClusterWarning):
            G = mo.gram(fam)
        d = 0.01
        off = abs((np.exp(1j * d) - 1) / (1j * d))
        oracle = (1 + off) / (1 - off)
        assert oracle > 1e4
        assert mo.gram_condition(G) == pytest.approx(oracle, rel=1e-6)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**31), p=st.integers(0, 3))
    def test_matches_quadrature_and_is_hermitian_pd(self, seed, p):
        rng = np.random.default_rng(seed)
        w = np.sort(rng.uniform(-20, 20, 6)) + np.arange(6) * 0.5
        fam = mo.ExponentialFamily(w, rng.uniform(0.5, 4.0))
        G = mo.gram(fam, p, warn=False)
        x, q = mo._time_quadrature(fam)
        E = fam.evaluate(x)
        Gq = (E * q * mo.window(x, fam.T, p)) @ E.conj().T
        assert np.allclose(G, Gq, atol=1e-11)
        assert np.allclose(G, G.conj().T)
        assert np.min(np.linalg.eigvalsh(G)) > 0


class TestEDD:
    def test_single_node(self):
        t = np.linspace(0, 2, 9)
        assert np.allclose(mo.exp_divided_differences([1.5], t)[0], np.exp(1.5j * t))

    def test_two_nodes(self):
        t = np.linspace(0, 3, 17)
        d = mo.exp_divided_differences([2.0, 2.7], t)
        assert np.allclose(d[1], (np.exp(2j * t) - np.exp(2.7j * t)) / (2.0 - 2.7), atol=1e-13)

    def test_confluent_limit(self):
        t = np.linspace(0, 3, 17)
        d = mo.exp_divided_differences([2.0, 2.0], t)
        assert np.allclose(d[1], 1j * t * np.exp(2j * t), atol=1e-13)
        near = mo.exp_divided_differences([2.0, 2.0 + 1e-9], t)
        assert np.allclose(near[1], d[1], atol=1e-8)

    def test_weights_reproduce_recursion(self):
        z = np.array([1.0, 1.3, 2.1])
        t = np.linspace(0, 2, 7)
        L = mo.divided_difference_weights(z)
        direct = L @ np.exp(1j * z[:, None] * t)
        assert np.allclose(direct, mo.exp_divided_differences(z, t), atol=1e-12)

    def test_edd_family_callables(self):
        fs = mo.edd_family([2.0, 2.7])
        t = np.array([0.5, 1.0])
        assert np.allclose(fs[0](t), np.exp(2j * t))
        assert np.allclose(fs[1](t), (np.exp(2j * t) - np.exp(2.7j * t)) / -0.7)


class TestTargets:
    def test_zero(self):
        m = lattice_for([0.3, 0.55], 3)
        prob = mo.target_moments(zero_state(m), zero_state(m), m, 5.0)
        assert not np.any(prob.targets)

    def test_single_mode_index_normalizer(self):
        m = lattice_for([3.0], 1)
        final = lt.encode_state([[1.0]], [[0.0]], m)
        prob = mo.target_moments(zero_state(m), final, m, np.pi, normalizer="index")
        assert prob.targets[m.position(1, 1)] == pytest.approx(1j * np.pi)

    def test_single_mode_kappa_normalizer(self):
        m = lattice_for([3.0], 1)
        final = lt.encode_state([[1.0]], [[0.0]], m)
        prob = mo.target_moments(zero_state(m), final, m, np.pi)
        kap = m.kappa[m.position(1, 1)]
        assert prob.targets[m.position(1, 1)] == pytest.approx(2j / (kap * np.exp(2j * np.pi)))

    def test_free_evolution_needs_no_control(self):
        from wavecontrol.simulator import free_evolution

        m = lattice_for([0.3, 0.55], 4)
        rng = np.random.default_rng(3)
        init = lt.encode_state(rng.normal(size=(4, 2)), rng.normal(size=(4, 2)), m)
        final = free_evolution(init, m, 2.3)
        prob = mo.target_moments(init, final, m, 2.3)
        assert np.max(np.abs(prob.targets)) < 1e-12

    def test_unreachable(self):
        bc = sb.build_boundary(2, 1, 1, 1)
        m = lt.build_lattice(bc, np.pi, 2, np.array([0.3]), family="cosine")
        final = lt.encode_state([[1.0], [0.0]], [[0.0], [0.0]], m)
        with pytest.raises(UnreachableMode):
            mo.target_moments(zero_state(m), final, m, 5.0)


class TestSolve:
    def test_single_mode(self):
        fam = mo.ExponentialFamily([2.0], 3.0)
        prob = mo.MomentProblem(np.array([1.5 - 0.5j]), fam)
        f = mo.solve(prob)
        t = np.linspace(0, 3, 11)
        assert np.allclose(f(t), (1.5 - 0.5j) / 3 * np.exp(2j * t))
        assert f.l2_norm ** 2 == pytest.approx(abs(1.5 - 0.5j) ** 2 / 3)

    def test_zero_targets(self):
        fam = mo.ExponentialFamily([1.0, 2.0], 3.0)
        f = mo.solve(mo.MomentProblem(np.zeros(2), fam))
        assert not np.any(f.coefficients) and not np.any(f.values)

    def test_diagonal_gram(self):
        fam = mo.ExponentialFamily([1.0, 2.0], 2 * np.pi)
        alpha = np.array([1 + 2j, -0.5j])
        f = mo.solve(mo.MomentProblem(alpha, fam))
        assert np.allclose(f.coefficients, alpha / (2 * np.pi), atol=1e-14)

    def test_ill_conditioned(self):
        fam = mo.ExponentialFamily([10.0, 10.0 + 1e-7], 1.0)
        with pytest.raises(IllConditioned):
            mo.solve(mo.MomentProblem(np.array([1.0, 0.0]), fam))

    @pytest.mark.parametrize("p", [0, 1, 2])
    def test_moments_and_residual(self, p):
        m = lattice_for([0.3, 0.55], 4)
        rng = np.random.default_rng(p)
        fam = mo.family_from_modes(m, 2 * 2 * np.pi + 1)
        alpha = rng.normal(size=len(m)) + 1j * rng.normal(size=len(m))
        prob = mo.MomentProblem(alpha, fam)
        f = mo.solve(prob, window_order=p)
        assert f.residual < 1e-10
        assert np.max(np.abs(f.moments() - alpha)) < 1e-9
        assert mo.moment_residual(f, fam, alpha) <= 1e-8

    def test_windowed_control_vanishes_at_ends(self):
        m = lattice_for([0.3], 3)
        fam = mo.family_from_modes(m, 8.0)
        f = mo.solve(mo.MomentProblem(np.ones(len(m)), fam), window_order=1)
        assert abs(f(0.0)[0]) < 1e-14 and abs(f(8.0)[0]) < 1e-12

    def test_edd_matches_direct_when_well_separated(self):
        m = lattice_for([0.3, 1.9], 3)
        fam = mo.family_from_modes(m, 2 * 2 * np.pi + 1)
        alpha = np.linspace(1, 2, len(m)) * (1 - 0.5j)
        prob = mo.MomentProblem(alpha, fam)
        fd = mo.solve(prob)
        fe = mo.solve(prob, mode="edd")
        t = np.linspace(0, fam.T, 200)
        assert np.allclose(fd(t), fe(t), atol=1e-8)
        assert np.max(np.abs(fe.moments() - alpha)) < 1e-9


class TestResidual:
    def test_zero_control(self):
        fam = mo.ExponentialFamily([1.0, 2.0], 3.0)
        alpha = np.array([0.5, -2j])
        assert mo.moment_residual(mo.zero_control(fam), fam, alpha) == pytest.approx(2.0)

    def test_single_exponential(self):
        fam = mo.ExponentialFamily([2.0], 3.0)
        f = mo.ControlSignal(fam, np.array([1.0]))
        assert mo.moment_residual(f, fam, [3.0]) < 1e-10


class TestSolverInvariants:
    def test_condition_bounded_above_threshold(self):
        # T > 2 N a: the divided-difference Gram stays bounded as the truncation
        # grows, the plain exponential Gram degrades like K^2 with the clusters
        edd, direct = [], []
        for K in (4, 8, 16, 32):
            fam = mo.family_from_modes(lattice_for([0.3, 0.55], K), 2 * 2 * np.pi + 1)
            G, _ = mo._edd_system(fam, mo.clusters_by_index(fam), 0)
            edd.append(mo.gram_condition(G))
            direct.append(mo.gram_condition(mo.gram(fam, warn=False)))
        assert max(edd) / min(edd) < 2
        assert direct[-1] / direct[0] > 50

    def test_below_threshold_flags(self):
        fam = mo.family_from_modes(lattice_for([0.3, 0.55], 16), 3.0)
        with pytest.raises(IllConditioned):
            mo.solve(mo.MomentProblem(np.ones(len(fam)), fam), cond_cap=1e8)

    def test_linearity(self):
        fam = mo.family_from_modes(lattice_for([0.3, 0.55], 4), 14.0)
        rng = np.random.default_rng(4)
        alpha = rng.normal(size=len(fam)) + 1j * rng.normal(size=len(fam))
        f1 = mo.solve(mo.MomentProblem(alpha, fam))
        f2 = mo.solve(mo.MomentProblem((2 - 3j) * alpha, fam))
        assert np.allclose(f2.coefficients, (2 - 3j) * f1.coefficients, rtol=1e-10)

    def test_minimal_norm(self):
        fam = mo.family_from_modes(lattice_for([0.3, 0.55], 3), 14.0)
        rng = np.random.default_rng(5)
        alpha = rng.normal(size=len(fam)) + 1j * rng.normal(size=len(fam))
        f = mo.solve(mo.MomentProblem(alpha, fam))
        x, w = mo._time_quadrature(fam)
        E = fam.evaluate(x)
        G = (E * w) @ E.conj().T
        fx = f(x)
        base = np.sum(w * np.abs(fx) ** 2)
        for _ in range(100):
            h = rng.normal(size=len(x)) + 1j * rng.normal(size=len(x))
            # remove the span component so every moment of f + h is unchanged
            c = np.linalg.solve(G.T, (h * w) @ E.conj().T)
            h = h - c @ E
            assert np.max(np.abs((h * w) @ E.conj().T)) < 1e-8
            assert np.sum(w * np.abs(fx + h) ** 2) >= base * (1 - 1e-12)

    def test_edd_target_growth(self):
        m = lattice_for([0.3, 0.31, 0.33], 6)
        fam = mo.family_from_modes(m, 20.0)
        rng = np.random.default_rng(6)
        alpha = rng.normal(size=len(fam)) + 1j * rng.normal(size=len(fam))
        prob = mo.MomentProblem(alpha, fam)
        assert np.isfinite(prob.edd_growth) and prob.edd_growth > 0
        for idx in mo.clusters_by_index(fam):
            k = abs(fam.labels[idx[0]][0])
            for j in range(len(idx)):
                bound = prob.edd_growth * k**j * np.max(np.abs(alpha[idx[: j + 1]]))
                assert abs(prob.edd_targets[idx[j]]) <= bound * (1 + 1e-12) or j == 0
