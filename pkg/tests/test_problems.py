"""Benchmark matrix families and web graph ingestion."""

import numpy as np
import pytest

from oracles import dense_of, stationary_oracle
from sparserank.problems import (
    EdgeList,
    ProblemSpec,
    build_problem,
    gen_diagonal,
    gen_random_ds,
    load_snap_edgelist,
    webgraph_to_P,
)
from sparserank.sparse import (
    pagerank_operator,
    residual_two,
    save_dsm,
    sparsity_stats,
)


def row_sums(P):
    return dense_of(P).sum(axis=1)


class TestProblemSpec:
    def test_unknown_family(self):
        with pytest.raises(ValueError, match="unknown family"):
            ProblemSpec(family="dense", n=10)

    def test_diagonal_needs_odd_band(self):
        with pytest.raises(ValueError, match="odd"):
            ProblemSpec(family="diagonal", n=10, n_d=4)

    def test_band_cannot_exceed_n(self):
        with pytest.raises(ValueError, match="exceed"):
            ProblemSpec(family="diagonal", n=3, n_d=5)

    def test_random_needs_valid_s(self):
        with pytest.raises(ValueError, match="s must"):
            ProblemSpec(family="random_ds", n=5, s=6)

    def test_webgraph_needs_path(self):
        with pytest.raises(ValueError, match="source_path"):
            ProblemSpec(family="webgraph", n=1)


class TestGenDiagonal:
    def test_band_one_is_identity(self):
        P = gen_diagonal(3, 1)
        A = pagerank_operator(P)
        assert np.array_equal(dense_of(P), np.eye(3))
        assert A.nnz == 0

    def test_small_band_values(self):
        M = dense_of(gen_diagonal(4, 3))
        assert np.allclose(M[0], [0.5, 0.5, 0.0, 0.0])
        assert np.allclose(M[1], [1 / 3, 1 / 3, 1 / 3, 0.0])
        assert np.allclose(M[2], [0.0, 1 / 3, 1 / 3, 1 / 3])
        assert np.allclose(M[3], [0.0, 0.0, 0.5, 0.5])

    def test_row_and_col_counts_in_band_range(self):
        s = sparsity_stats(gen_diagonal(10_000, 3))
        assert (s.row_nnz_min, s.row_nnz_max) == (2, 3)
        assert (s.col_nnz_min, s.col_nnz_max) == (2, 3)

    def test_stochastic(self):
        for n_d in (1, 3, 5, 11):
            assert np.allclose(row_sums(gen_diagonal(40, n_d)), 1.0, atol=1e-12)

    def test_random_weights_keep_support_and_sums(self):
        flat = gen_diagonal(30, 5)
        rw = gen_diagonal(30, 5, seed=9, random_weights=True)
        assert np.array_equal(dense_of(flat) > 0, dense_of(rw) > 0)
        assert np.allclose(row_sums(rw), 1.0, atol=1e-12)
        assert not np.allclose(dense_of(rw), dense_of(flat))

    def test_wrap_band_is_exact_and_translation_invariant(self):
        P = gen_diagonal(12, 3, wrap=True)
        s = sparsity_stats(P)
        assert s.row_nnz_min == s.row_nnz_max == 3
        assert s.col_nnz_min == s.col_nnz_max == 3
        M = dense_of(P)
        assert np.allclose(M, np.roll(np.roll(M, 1, axis=0), 1, axis=1))

    def test_band_too_wide_rejected(self):
        with pytest.raises(ValueError, match="exceed"):
            gen_diagonal(3, 5)
        with pytest.raises(ValueError, match="odd"):
            gen_diagonal(10, 2)


class TestGenRandomDs:
    def test_single_permutation(self):
        P = gen_random_ds(20, 1, seed=4)
        M = dense_of(P)
        assert np.array_equal(M.sum(axis=0), np.ones(20))
        assert np.array_equal(M.sum(axis=1), np.ones(20))
        assert set(np.unique(M)) == {0.0, 1.0}
        A = pagerank_operator(P)
        arow = np.count_nonzero(dense_of(A), axis=1)
        assert set(arow) <= {0, 2}

    def test_exact_s_per_row_and_column(self):
        s = sparsity_stats(gen_random_ds(1000, 3, seed=0))
        assert s.row_nnz_min == s.row_nnz_max == 3
        assert s.col_nnz_min == s.col_nnz_max == 3

    def test_uniform_is_stationary(self):
        for seed in range(4):
            P = gen_random_ds(200, 5, seed=seed)
            A = pagerank_operator(P)
            assert residual_two(A, np.full(200, 1 / 200)) < 1e-20

    def test_entries_are_reciprocal_s(self):
        M = dense_of(gen_random_ds(50, 4, seed=2))
        assert set(np.unique(M)) == {0.0, 0.25}

    def test_deterministic_per_seed(self, tmp_path):
        a, b = tmp_path / "a.dsm", tmp_path / "b.dsm"
        save_dsm(gen_random_ds(300, 7, seed=123), a)
        save_dsm(gen_random_ds(300, 7, seed=123), b)
        assert a.read_bytes() == b.read_bytes()
        save_dsm(gen_random_ds(300, 7, seed=124), b)
        assert a.read_bytes() != b.read_bytes()

    def test_s_equals_n(self):
        M = dense_of(gen_random_ds(4, 4, seed=0))
        assert np.allclose(M, 0.25)

    def test_tight_s_still_disjoint(self):
        # hardest repair regime: s close to n leaves few free cells
        s = sparsity_stats(gen_random_ds(10, 9, seed=1))
        assert s.row_nnz_min == s.row_nnz_max == 9


class TestSnapLoader:
    def test_basic_file(self, tmp_path):
        p = tmp_path / "g.txt"
        p.write_text("# comment\n0\t1\n1\t0\n")
        g = load_snap_edgelist(p)
        assert g.n_nodes == 2
        assert g.n_edges == 2

    def test_duplicate_edges_collapse(self, tmp_path):
        p = tmp_path / "g.txt"
        p.write_text("0 1\n0 1\n0\t1\n1 0\n")
        assert load_snap_edgelist(p).n_edges == 2

    def test_ids_compacted_by_first_appearance(self, tmp_path):
        p = tmp_path / "g.txt"
        p.write_text("900 34\n34 7\n")
        g = load_snap_edgelist(p)
        assert g.n_nodes == 3
        assert g.edges.tolist() == [[0, 1], [1, 2]]

    def test_malformed_line_reports_number(self, tmp_path):
        p = tmp_path / "g.txt"
        p.write_text("0 1\n0 1 2\n")
        with pytest.raises(ValueError, match=r"g\.txt:2"):
            load_snap_edgelist(p)

    def test_non_integer_reports_number(self, tmp_path):
        p = tmp_path / "g.txt"
        p.write_text("# ok\n0 x\n")
        with pytest.raises(ValueError, match=r":2: non-integer"):
            load_snap_edgelist(p)

    def test_empty_graph_rejected(self, tmp_path):
        p = tmp_path / "g.txt"
        p.write_text("# nothing here\n\n")
        with pytest.raises(ValueError, match="empty graph"):
            load_snap_edgelist(p)


class TestWebgraphToP:
    def test_two_node_swap(self):
        g = EdgeList(2, np.array([[0, 1], [1, 0]], dtype=np.int64))
        assert np.array_equal(dense_of(webgraph_to_P(g)), [[0, 1], [1, 0]])

    def test_dangling_gets_self_loop(self):
        g = EdgeList(1, np.empty((0, 2), dtype=np.int64))
        assert np.array_equal(dense_of(webgraph_to_P(g)), [[1.0]])

    def test_cycle_uniform_stationary(self):
        g = EdgeList(3, np.array([[0, 1], [1, 2], [2, 0]], dtype=np.int64))
        P = webgraph_to_P(g)
        pi, certified = stationary_oracle(dense_of(P))
        assert certified
        assert np.allclose(pi, 1 / 3, atol=1e-12)

    def test_outdegree_split(self):
        g = EdgeList(3, np.array([[0, 1], [0, 2], [1, 0]], dtype=np.int64))
        M = dense_of(webgraph_to_P(g))
        assert np.allclose(M[0], [0.0, 0.5, 0.5])
        assert np.allclose(M[1], [1.0, 0.0, 0.0])
        assert np.allclose(M[2], [0.0, 0.0, 1.0])  # dangling node 2


class TestBuildProblem:
    def test_dispatch_diagonal(self):
        spec = ProblemSpec(family="diagonal", n=6, n_d=3)
        assert np.array_equal(dense_of(build_problem(spec)), dense_of(gen_diagonal(6, 3)))

    def test_dispatch_random(self):
        spec = ProblemSpec(family="random_ds", n=30, s=2, seed=5)
        assert np.array_equal(
            dense_of(build_problem(spec)), dense_of(gen_random_ds(30, 2, seed=5))
        )

    def test_dispatch_webgraph(self, tmp_path):
        p = tmp_path / "g.txt"
        p.write_text("0 1\n1 0\n")
        spec = ProblemSpec(family="webgraph", n=2, source_path=str(p))
        assert np.array_equal(dense_of(build_problem(spec)), [[0, 1], [1, 0]])
