import math

import numpy as np
import pytest

from tteig import (InvalidArgument, hermite_dvr_laplace, hermite_mesh,
                   heisenberg_tt, henon_heiles_tt, laplace_spectrum,
                   laplace_tt, tt_round_operator)
from tteig.hamiltonians import (HamiltonianSpec, laplace_eigenbasis,
                                laplace_mode_values)
from tteig.oracle import dense_eig, densify_operator
from conftest import kron_chain


class TestLaplaceOperator:
    def test_one_dimensional_stencil(self):
        ref = np.array([[2.0, -1, 0], [-1, 2, -1], [0, -1, 2]])
        np.testing.assert_array_equal(densify_operator(laplace_tt(1, 3)), ref)

    def test_two_dimensional_kronecker_sum(self):
        n = 2
        m = np.array([[2.0, -1], [-1, 2]])
        ref = np.kron(m, np.eye(n)) + np.kron(np.eye(n), m)
        np.testing.assert_array_equal(densify_operator(laplace_tt(2, n)), ref)

    def test_ranks_exactly_two(self):
        for d in (2, 3, 6):
            assert laplace_tt(d, 4).ranks == (2,) * (d - 1)

    def test_rank_certificate_after_rounding(self):
        rounded = tt_round_operator(laplace_tt(6, 8), 1e-13)
        assert max(rounded.ranks) <= 2

    def test_symmetric_densification(self):
        m = densify_operator(laplace_tt(3, 4))
        assert np.abs(m - m.T).max() < 1e-12

    def test_bad_arguments(self):
        with pytest.raises(InvalidArgument):
            laplace_tt(0, 3)
        with pytest.raises(InvalidArgument):
            laplace_tt(2, 1)


class TestLaplaceSpectrum:
    def test_micro_values_d1_n2(self):
        vals = laplace_spectrum(1, 2)
        assert vals[0][0] == pytest.approx(1.0, abs=1e-12)
        assert vals[1][0] == pytest.approx(3.0, abs=1e-12)
        assert [idx for _, idx in vals] == [(0,), (1,)]

    def test_multiplicities_for_d5(self):
        vals = [v for v, _ in laplace_spectrum(5, 16, 31)]
        from tteig import group_levels
        sizes = [s.stop - s.start for s in group_levels(vals)]
        assert sizes[:4] == [1, 5, 10, 5]

    def test_matches_dense_oracle(self):
        dense = dense_eig(densify_operator(laplace_tt(3, 4)), 10)
        closed = [v for v, _ in laplace_spectrum(3, 4, 10)]
        np.testing.assert_allclose(dense.eigenvalues, closed, atol=1e-12)

    def test_tie_order_is_lexicographic(self):
        vals = laplace_spectrum(3, 3, 10)
        level1 = [idx for v, idx in vals if abs(v - vals[1][0]) < 1e-12]
        assert level1 == sorted(level1)

    def test_count_validation(self):
        with pytest.raises(InvalidArgument):
            laplace_spectrum(2, 2, 5)


class TestHermiteMesh:
    def test_single_node_at_origin(self):
        np.testing.assert_array_equal(hermite_mesh(1), [0.0])

    def test_two_nodes(self):
        np.testing.assert_allclose(hermite_mesh(2),
                                   [-1 / math.sqrt(2), 1 / math.sqrt(2)],
                                   atol=1e-12)

    def test_symmetric_about_zero(self):
        t = hermite_mesh(28)
        np.testing.assert_allclose(t, -t[::-1], atol=1e-13)

    def test_nodes_are_polynomial_roots(self):
        # independent check through numpy's Hermite evaluation
        n = 28
        t = hermite_mesh(n)
        coeffs = np.zeros(n + 1)
        coeffs[n] = 1.0
        values = np.polynomial.hermite.hermval(t, coeffs)
        grid = np.linspace(t[0], t[-1], 4001)
        scale = np.abs(np.polynomial.hermite.hermval(grid, coeffs)).max()
        assert np.abs(values).max() < 1e-8 * scale


class TestHermiteDvr:
    def test_single_node_value(self):
        np.testing.assert_allclose(hermite_dvr_laplace(1), [[0.5]], atol=1e-15)

    def test_two_node_off_diagonal(self):
        d = hermite_dvr_laplace(2)
        assert d[0, 1] == pytest.approx(-0.5, abs=1e-12)
        assert d[1, 0] == pytest.approx(-0.5, abs=1e-12)

    def test_symmetry(self):
        d = hermite_dvr_laplace(28)
        assert np.abs(d - d.T).max() < 1e-12

    def test_harmonic_oscillator_levels(self):
        # 0.5 D + 0.5 Q^2 reproduces k + 1/2 essentially exactly
        n = 10
        t = hermite_mesh(n)
        h = 0.5 * hermite_dvr_laplace(n) + 0.5 * np.diag(t ** 2)
        w = np.linalg.eigvalsh(h)
        np.testing.assert_allclose(w[:4], [0.5, 1.5, 2.5, 3.5], atol=1e-10)


class TestHenonHeiles:
    def test_zero_coupling_is_kronecker_sum(self):
        n = 6
        t = hermite_mesh(n)
        h1 = 0.5 * hermite_dvr_laplace(n) + 0.5 * np.diag(t ** 2)
        eye = np.eye(n)
        ref = np.kron(h1, eye) + np.kron(eye, h1)
        got = densify_operator(henon_heiles_tt(2, n, 0.0))
        np.testing.assert_allclose(got, ref, atol=1e-12)

    def test_termwise_dense_assembly(self):
        n, lam = 6, 0.111803
        t = hermite_mesh(n)
        eye = np.eye(n)
        q = np.diag(t)
        h1 = 0.5 * hermite_dvr_laplace(n) + 0.5 * q @ q
        ref = (np.kron(h1, eye) + np.kron(eye, h1)
               + lam * np.kron(q @ q, q) - (lam / 3.0) * np.kron(eye, q @ q @ q))
        got = densify_operator(henon_heiles_tt(2, n, lam))
        np.testing.assert_allclose(got, ref, atol=1e-12)

    def test_three_site_termwise_assembly(self):
        n, lam = 4, 0.111803
        t = hermite_mesh(n)
        eye = np.eye(n)
        q = np.diag(t)
        q2, q3 = q @ q, q @ q @ q
        h1 = 0.5 * hermite_dvr_laplace(n) + 0.5 * q2
        ref = (kron_chain([h1, eye, eye]) + kron_chain([eye, h1, eye])
               + kron_chain([eye, eye, h1])
               - (lam / 3.0) * (kron_chain([eye, q3, eye])
                                + kron_chain([eye, eye, q3]))
               + lam * (kron_chain([q2, q, eye]) + kron_chain([eye, q2, q])))
        got = densify_operator(henon_heiles_tt(3, n, lam))
        np.testing.assert_allclose(got, ref, atol=1e-12)

    def test_harmonic_levels_at_zero_coupling(self):
        spec = dense_eig(densify_operator(henon_heiles_tt(2, 10, 0.0)), 4)
        np.testing.assert_allclose(spec.eigenvalues, [1.0, 2.0, 2.0, 3.0],
                                   atol=1e-6)

    def test_rank_certificate(self):
        a = henon_heiles_tt(6, 8)
        assert max(a.ranks) <= 7
        rounded = tt_round_operator(a, 1e-13)
        assert max(rounded.ranks) <= 7

    def test_symmetric_densification(self):
        m = densify_operator(henon_heiles_tt(3, 6))
        assert np.abs(m - m.T).max() < 1e-12

    def test_needs_a_neighbour(self):
        with pytest.raises(InvalidArgument):
            henon_heiles_tt(1, 6)


class TestHeisenberg:
    def test_two_site_spectrum(self):
        w = np.linalg.eigvalsh(densify_operator(heisenberg_tt(2)))
        np.testing.assert_allclose(w, [-0.75, 0.25, 0.25, 0.25], atol=1e-12)

    def test_matches_spin_component_assembly(self):
        sx = 0.5 * np.array([[0, 1], [1, 0]], dtype=complex)
        sy = 0.5 * np.array([[0, -1j], [1j, 0]])
        sz = 0.5 * np.array([[1, 0], [0, -1]], dtype=complex)
        for d in (2, 3):
            ref = np.zeros((2 ** d, 2 ** d), dtype=complex)
            for i in range(d - 1):
                for s in (sx, sy, sz):
                    ops = [np.eye(2, dtype=complex)] * d
                    ops[i] = s
                    ops[i + 1] = s
                    ref += kron_chain(ops)
            assert np.abs(ref.imag).max() == 0.0
            got = densify_operator(heisenberg_tt(d))
            np.testing.assert_allclose(got, ref.real, atol=1e-12)

    def test_ranks_are_five(self):
        for d in (3, 5, 9):
            assert heisenberg_tt(d).ranks == (5,) * (d - 1)

    def test_rank_certificate_after_rounding(self):
        rounded = tt_round_operator(heisenberg_tt(8), 1e-13)
        assert max(rounded.ranks) <= 5

    def test_symmetric_densification(self):
        m = densify_operator(heisenberg_tt(6))
        assert np.abs(m - m.T).max() < 1e-12

    def test_needs_two_sites(self):
        with pytest.raises(InvalidArgument):
            heisenberg_tt(1)


class TestHamiltonianSpec:
    def test_heisenberg_forces_mode_size_two(self):
        with pytest.raises(InvalidArgument):
            HamiltonianSpec(model="heisenberg", d=4, n=3)

    def test_unknown_model_rejected(self):
        with pytest.raises(InvalidArgument):
            HamiltonianSpec(model="ising", d=4, n=2)

    def test_build_dispatch(self):
        assert HamiltonianSpec("laplace", 2, 3).build().mode_sizes == (3, 3)
        assert HamiltonianSpec("heisenberg", 3, 2).build().mode_sizes == (2, 2, 2)
        assert HamiltonianSpec("henon-heiles", 2, 4).build().mode_sizes == (4, 4)


class TestModeBasis:
    def test_mode_values_match_stencil_eigenvalues(self):
        n = 7
        w = np.linalg.eigvalsh(densify_operator(laplace_tt(1, n)))
        np.testing.assert_allclose(laplace_mode_values(n), np.sort(w), atol=1e-12)

    def test_eigenbasis_is_orthonormal_and_diagonalizes(self):
        n = 6
        u = laplace_eigenbasis(n)
        np.testing.assert_allclose(u.T @ u, np.eye(n), atol=1e-12)
        m = densify_operator(laplace_tt(1, n))
        np.testing.assert_allclose(u.T @ m @ u, np.diag(laplace_mode_values(n)),
                                   atol=1e-12)
