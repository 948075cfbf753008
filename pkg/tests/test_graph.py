import numpy as np
import pytest

from atprop import (
    InvalidStateError,
    ParseError,
    SparseGraph,
    ValidationError,
    add_self_loops,
    connected_components,
    degrees,
    from_edge_pairs,
    generate,
    load_edge_list,
    save_edge_list,
    validate_graph,
)
from atprop.dense import dense_adjacency


def write(tmp_path, text, name="g.edges"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoadEdgeList:
    def test_path_graph(self, tmp_path):
        g = load_edge_list(write(tmp_path, "0 1\n1 2\n"))
        assert g.n == 3
        assert g.num_edges() == 2
        assert degrees(g).values.tolist() == [1, 2, 1]

    def test_both_directions_dedup(self, tmp_path):
        g = load_edge_list(write(tmp_path, "0 1\n1 0\n"))
        assert g.num_edges() == 1
        assert degrees(g).values.tolist() == [1, 1]

    def test_parallel_edges_sum(self, tmp_path):
        g = load_edge_list(write(tmp_path, "0 1 0.5\n0 1 0.5\n"))
        assert g.num_edges() == 1
        assert degrees(g).values.tolist() == [1.0, 1.0]

    def test_comments_and_blank_lines(self, tmp_path):
        g = load_edge_list(write(tmp_path, "# header\n\n0 1\n"))
        assert g.num_edges() == 1

    def test_malformed_line_reports_number(self, tmp_path):
        with pytest.raises(ParseError, match="line 2"):
            load_edge_list(write(tmp_path, "0 1\n0 1 2 3\n"))
        with pytest.raises(ParseError, match="line 1"):
            load_edge_list(write(tmp_path, "a b\n"))

    def test_negative_id_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            load_edge_list(write(tmp_path, "-1 0\n"))

    def test_negative_weight_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            load_edge_list(write(tmp_path, "0 1 -0.5\n"))

    def test_asymmetric_directions_rejected(self, tmp_path):
        p = write(tmp_path, "0 1 0.3\n1 0 0.7\n")
        with pytest.raises(ValidationError, match="asymmetric"):
            load_edge_list(p)
        g = load_edge_list(p, symmetrize=True)
        assert degrees(g).values.tolist() == [0.7, 0.7]

    def test_n_hint_extends(self, tmp_path):
        g = load_edge_list(write(tmp_path, "0 1\n"), n_hint=5)
        assert g.n == 5
        assert degrees(g).values.tolist() == [1, 1, 0, 0, 0]

    def test_zero_weight_edge_kept(self, tmp_path):
        g = load_edge_list(write(tmp_path, "0 1 0\n"))
        assert g.num_edges() == 1
        assert degrees(g).values.tolist() == [0.0, 0.0]


class TestRoundTrip:
    @pytest.mark.parametrize("kind,params", [
        ("path", {"n": 5}),
        ("star", {"n": 6}),
        ("erdos_renyi", {"n": 40, "p": 0.15}),
    ])
    def test_save_load_identical(self, tmp_path, kind, params):
        g = generate(kind, seed=3, **params)
        p = tmp_path / "rt.edges"
        save_edge_list(g, p)
        g2 = load_edge_list(p, n_hint=g.n)
        assert g2.n == g.n
        assert np.array_equal(g2.row_offsets, g.row_offsets)
        assert np.array_equal(g2.col_indices, g.col_indices)
        assert (g2.edge_weights is None) == (g.edge_weights is None)

    def test_weighted_roundtrip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        u = np.array([0, 0, 1, 2])
        v = np.array([1, 2, 3, 3])
        w = rng.random(4)
        w[1] = 0.0  # masked marker must survive
        g = from_edge_pairs(4, u, v, w)
        p = tmp_path / "w.edges"
        save_edge_list(g, p)
        g2 = load_edge_list(p)
        assert np.array_equal(g2.edge_weights, g.edge_weights)

    def test_self_loop_roundtrip(self, tmp_path):
        g = add_self_loops(generate("path", n=3))
        p = tmp_path / "loops.edges"
        save_edge_list(g, p)
        g2 = load_edge_list(p)
        assert g2.has_self_loops
        assert np.array_equal(g2.col_indices, g.col_indices)


class TestSelfLoops:
    def test_p2(self):
        g = add_self_loops(generate("path", n=2))
        assert degrees(g).values.tolist() == [2, 2]

    def test_isolated_node(self):
        g = from_edge_pairs(1, [], [])
        looped = add_self_loops(g)
        assert degrees(looped).values.tolist() == [1]

    def test_star_center(self):
        g = add_self_loops(generate("star", n=5))
        assert degrees(g).values[0] == 5

    def test_double_loop_rejected(self):
        g = add_self_loops(generate("path", n=2))
        with pytest.raises(InvalidStateError):
            add_self_loops(g)

    def test_degree_plus_one_property(self):
        for seed in range(5):
            g = generate("erdos_renyi", n=30, p=0.2, seed=seed)
            np.testing.assert_array_equal(
                degrees(add_self_loops(g)).values, degrees(g).values + 1
            )


class TestDegrees:
    def test_triangle(self):
        assert degrees(generate("complete", n=3)).values.tolist() == [2, 2, 2]

    def test_star(self):
        assert degrees(generate("star", n=5)).values.tolist() == [4, 1, 1, 1, 1]

    def test_weighted_edge(self):
        g = from_edge_pairs(2, [0], [1], [0.5])
        assert degrees(g).values.tolist() == [0.5, 0.5]


class TestComponents:
    def test_two_disjoint_edges(self):
        g = from_edge_pairs(4, [0, 2], [1, 3])
        assert connected_components(g).tolist() == [0, 0, 1, 1]

    def test_cycle_connected(self):
        assert connected_components(generate("cycle", n=5)).max() == 0

    def test_zero_weight_does_not_connect(self):
        g = from_edge_pairs(4, [0, 2, 1], [1, 3, 2], [1.0, 1.0, 0.0])
        comp = connected_components(g)
        assert comp[0] == comp[1]
        assert comp[2] == comp[3]
        assert comp[1] != comp[2]


class TestGenerate:
    def test_cycle_degrees(self):
        assert degrees(generate("cycle", n=4)).values.tolist() == [2, 2, 2, 2]

    def test_complete_degrees(self):
        assert degrees(generate("complete", n=4)).values.tolist() == [3, 3, 3, 3]

    def test_er_deterministic(self):
        g1 = generate("erdos_renyi", n=50, p=0.1, seed=7)
        g2 = generate("erdos_renyi", n=50, p=0.1, seed=7)
        assert np.array_equal(g1.col_indices, g2.col_indices)
        assert np.array_equal(g1.row_offsets, g2.row_offsets)

    def test_invalid_probability(self):
        with pytest.raises(ValidationError):
            generate("erdos_renyi", n=10, p=1.5)
        with pytest.raises(ValidationError):
            generate("sbm", sizes=[5, 5], p_in=-0.1, p_out=0.0)

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            generate("torus", n=4)

    def test_sbm_block_structure(self):
        g = generate("sbm", sizes=[20, 20], p_in=1.0, p_out=0.0, seed=1)
        comp = connected_components(g)
        assert comp.max() == 1
        assert degrees(g).values.tolist() == [19.0] * 40


class TestInvariants:
    @pytest.mark.parametrize("seed", range(4))
    def test_symmetry_against_dense(self, seed):
        g = generate("erdos_renyi", n=60, p=0.1, seed=seed)
        validate_graph(g)
        a = dense_adjacency(g)
        np.testing.assert_array_equal(a, a.T)

    def test_rows_strictly_increasing(self):
        g = generate("erdos_renyi", n=40, p=0.2, seed=2)
        for u in range(g.n):
            cols, _ = g.row(u)
            assert np.all(np.diff(cols) > 0)

    def test_validate_catches_asymmetry(self):
        g = from_edge_pairs(3, [0, 1], [1, 2], [1.0, 2.0])
        broken = SparseGraph(
            n=3,
            row_offsets=g.row_offsets.copy(),
            col_indices=g.col_indices.copy(),
            edge_weights=np.array([1.0, 1.0, 2.0, 3.0]),
        )
        with pytest.raises(ValidationError, match="symmetric"):
            validate_graph(broken)
