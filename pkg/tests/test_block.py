import numpy as np
import pytest

from tteig import (BlockTT, InvalidArgument, block_move, block_random,
                   block_split, extract_state, laplace_eigenbasis,
                   laplace_spectrum, laplace_tt, slice_gram, tt_to_dense)
from tteig.oracle import densify_operator


def random_block(rng, mode_sizes, num_states, rank, p=0, seed=77):
    return block_random(mode_sizes, num_states, rank, seed=seed, block_position=p)


def dense_states(x):
    return np.column_stack([tt_to_dense(extract_state(x, b))
                            for b in range(x.num_states)])


def analytic_two_state_block(d, n):
    """Two product eigenstates of the box Laplacian sharing one train."""
    u = laplace_eigenbasis(n)
    block = np.zeros((1, n, 2, 1))
    block[0, :, 0, 0] = u[:, 0]
    block[0, :, 1, 0] = u[:, 1]
    ground = u[:, 0].reshape(1, n, 1)
    return BlockTT([block] + [ground] * (d - 1), 0)


class TestBlockSplit:
    def test_single_state_exact_reconstruction(self, rng):
        core = rng.standard_normal((3, 4, 1, 3))
        left, g = block_split(core, "right", eps=0.0)
        rebuilt = np.einsum("inr,rbs->inbs", left, g)
        np.testing.assert_allclose(rebuilt, core, atol=1e-13)

    def test_left_direction_exact_reconstruction(self, rng):
        core = rng.standard_normal((3, 4, 2, 3))
        g, right = block_split(core, "left", eps=0.0)
        rebuilt = np.einsum("abr,rns->anbs", g, right)
        np.testing.assert_allclose(rebuilt, core, atol=1e-13)

    def test_repeated_slices_compress(self, rng):
        one = rng.standard_normal((2, 4, 1, 2))
        core = np.concatenate([one, one, one], axis=2)
        left, g = block_split(core, "right", eps=1e-12)
        single, _ = block_split(one, "right", eps=1e-12)
        assert left.shape[2] == single.shape[2]

    def test_truncation_error_within_budget(self, rng):
        core = rng.standard_normal((2, 4, 3, 2))
        left, g = block_split(core, "right", eps=0.1)
        rebuilt = np.einsum("inr,rbs->inbs", left, g)
        assert np.linalg.norm(rebuilt - core) <= 0.1 * np.linalg.norm(core)

    def test_left_core_is_left_orthogonal(self, rng):
        core = rng.standard_normal((3, 2, 4, 5))
        left, _ = block_split(core, "right", eps=0.0)
        m = left.reshape(-1, left.shape[2])
        np.testing.assert_allclose(m.T @ m, np.eye(m.shape[1]), atol=1e-12)

    def test_rank_bound(self, rng):
        rl, n, b, rr = 2, 3, 4, 2
        core = rng.standard_normal((rl, n, b, rr))
        left, _ = block_split(core, "right", eps=0.0)
        assert left.shape[2] <= min(rl * n, b * rr)

    def test_rmax_cap(self, rng):
        core = rng.standard_normal((3, 4, 3, 3))
        left, _ = block_split(core, "right", eps=0.0, rmax=2)
        assert left.shape[2] <= 2

    def test_bad_rmax_rejected(self, rng):
        with pytest.raises(InvalidArgument):
            block_split(rng.standard_normal((2, 2, 2, 2)), "right", 0.0, rmax=0)


class TestBlockMove:
    def test_exact_round_trip(self, rng):
        x = random_block(rng, [3, 3, 3], num_states=2, rank=2, p=1)
        ref = dense_states(x)
        cycled = block_move(block_move(x, 2), 1)
        np.testing.assert_allclose(dense_states(cycled), ref, atol=1e-12)
        assert cycled.block_position == 1

    def test_exact_moves_preserve_all_states(self, rng):
        x = random_block(rng, [2, 3, 2, 3], num_states=3, rank=3, p=0)
        ref = dense_states(x)
        for target in (1, 2, 3, 2, 1, 0):
            x = block_move(x, target)
            np.testing.assert_allclose(dense_states(x), ref, atol=1e-12)

    def test_rank_growth_bounded_by_state_count(self, rng):
        x = random_block(rng, [4, 4, 4], num_states=3, rank=2, p=0)
        before = x.ranks[0]
        moved = block_move(x, 1)
        assert moved.ranks[0] <= min(before * 3, 4)

    def test_analytic_product_states_stay_exact(self):
        d, n = 4, 5
        x = analytic_two_state_block(d, n)
        u = laplace_eigenbasis(n)
        ref0 = np.kron(u[:, 0], np.kron(u[:, 0], np.kron(u[:, 0], u[:, 0])))
        ref1 = np.kron(u[:, 1], np.kron(u[:, 0], np.kron(u[:, 0], u[:, 0])))
        for target in (1, 2, 3, 2, 1, 0):
            x = block_move(x, target)
            got = dense_states(x)
            np.testing.assert_allclose(got[:, 0], ref0, atol=1e-11)
            np.testing.assert_allclose(got[:, 1], ref1, atol=1e-11)

    def test_non_adjacent_rejected(self, rng):
        x = random_block(rng, [2, 2, 2], num_states=2, rank=2, p=0)
        with pytest.raises(InvalidArgument):
            block_move(x, 2)


class TestExtractState:
    def test_single_state_block_is_plain_vector(self, rng):
        x = random_block(rng, [3, 4, 3], num_states=1, rank=2, p=1)
        v = extract_state(x, 0)
        core = np.asarray(x.cores[1])[:, :, 0, :]
        np.testing.assert_array_equal(np.asarray(v.cores[1]), core)

    def test_gram_matches_slice_gram_under_orthogonal_frame(self, rng):
        x = random_block(rng, [3, 3, 3], num_states=4, rank=3, p=1)
        dense_gram = dense_states(x).T @ dense_states(x)
        np.testing.assert_allclose(dense_gram, slice_gram(x), atol=1e-11)

    def test_out_of_range_rejected(self, rng):
        x = random_block(rng, [2, 2], num_states=2, rank=2)
        with pytest.raises(InvalidArgument):
            extract_state(x, 2)


class TestPerturbationTransfer:
    def test_local_change_equals_global_change(self, rng):
        # orthogonal frame: core perturbations map isometrically to states
        x = random_block(rng, [3, 3, 3], num_states=3, rank=3, p=1)
        delta = 1e-4 * rng.standard_normal(x.cores[1].shape)
        cores = [np.array(c) for c in x.cores]
        cores[1] = cores[1] + delta
        y = BlockTT(cores, 1)
        global_change = np.linalg.norm(dense_states(y) - dense_states(x))
        assert global_change == pytest.approx(np.linalg.norm(delta), rel=1e-11)


class TestBlockRandom:
    def test_frame_orthogonal_from_start(self, rng):
        x = random_block(rng, [3, 4, 3, 2], num_states=3, rank=3, p=2)
        gram = dense_states(x).T @ dense_states(x)
        np.testing.assert_allclose(gram, slice_gram(x), atol=1e-11)

    def test_rank_bounds_respect_block_position(self):
        x = block_random([2, 2, 2], num_states=4, rank=50, seed=0,
                         block_position=0)
        # bond 0 sits right of the block: rows (i0, b) -> bound 2 * 4
        assert x.ranks[0] <= 8
        assert x.ranks[1] <= 2
