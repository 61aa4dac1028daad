import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import certsor as cs


def build(text):
    return cs.load_edge_list(io.BytesIO(text.encode()))


class TestLoadEdgeList:
    def test_unweighted_two_cycle(self):
        a = build("0 1\n1 0\n")
        assert a.n == 2
        assert np.array_equal(a.to_dense(), [[0.0, 1.0], [1.0, 0.0]])
        assert np.array_equal(a.diag, [0.0, 0.0])

    def test_weighted_self_loop(self):
        a = build("0 0 2.5\n")
        assert a.n == 1
        assert np.array_equal(a.diag, [2.5])
        assert a.nnz == 1

    def test_duplicate_arcs_sum(self):
        a = build("0 1 3\n0 1 4\n")
        assert a.to_dense()[0, 1] == 7.0
        assert a.nnz == 1

    def test_comments_and_blanks_skipped(self):
        a = build("# header\n\n0 1\n# tail\n")
        assert a.nnz == 1

    def test_negative_weight_rejected_with_line(self):
        with pytest.raises(cs.EdgeListFormatError, match="line 2"):
            build("0 1\n1 0 -2\n")

    def test_malformed_line_rejected_with_line(self):
        with pytest.raises(cs.EdgeListFormatError, match="line 3"):
            build("0 1\n1 0\n1 two\n")
        with pytest.raises(cs.EdgeListFormatError, match="line 1"):
            build("0 1 2 3\n")
        with pytest.raises(cs.EdgeListFormatError, match="line 2"):
            build("0 1\n-1 0\n")

    def test_transpose_flag(self):
        a = cs.load_edge_list(io.BytesIO(b"0 1 5\n"), transpose=True)
        assert a.to_dense()[1, 0] == 5.0

    def test_default_weight(self):
        a = cs.load_edge_list(io.BytesIO(b"0 1\n"), default_weight=0.25)
        assert a.to_dense()[0, 1] == 0.25

    def test_dimension_is_one_plus_max_id(self):
        a = build("0 4\n")
        assert a.n == 5

    def test_summary_counts_dangling(self):
        a = build("0 1\n2 0\n")
        summary = cs.ingest_summary(a)
        assert summary.node_count == 3
        assert summary.arc_count == 2
        assert summary.dangling_count == 1  # node 1 has no outgoing arcs

    def test_row_sums_match_per_line_accumulation(self):
        rng = np.random.default_rng(7)
        lines = []
        sums = np.zeros(12)
        for _ in range(300):
            u = int(rng.integers(0, 12))
            v = int(rng.integers(0, 12))
            w = float(rng.uniform(0, 3))
            lines.append(f"{u} {v} {w!r}")
            sums[u] += w
        # Force the dimension in case an id never appears as a source.
        lines.append("11 11 0.0")
        a = build("\n".join(lines) + "\n")
        got = cs.matvec(a, np.ones(a.n))
        assert np.allclose(got, sums, rtol=1e-12, atol=0.0)


class TestMatvec:
    def test_permutation_matrix(self):
        a = cs.from_coo(2, [0, 1], [1, 0], [1.0, 1.0])
        assert np.array_equal(cs.matvec(a, np.array([3.0, 1.0])), [1.0, 3.0])

    def test_zero_matrix(self):
        a = cs.from_coo(3, [], [], [])
        assert np.array_equal(cs.matvec(a, np.array([1.0, 2.0, 3.0])), np.zeros(3))

    def test_nilpotent(self):
        a = cs.from_coo(2, [0], [1], [1.0])
        assert np.array_equal(cs.matvec(a, np.array([3.0, 1.0])), [1.0, 0.0])

    def test_dimension_mismatch(self):
        a = cs.from_coo(2, [0], [1], [1.0])
        with pytest.raises(ValueError):
            cs.matvec(a, np.ones(3))

    def test_row_sum_identity(self):
        rng = np.random.default_rng(3)
        dense = np.where(rng.random((9, 9)) < 0.4, rng.random((9, 9)), 0.0)
        rows, cols = np.nonzero(dense)
        a = cs.from_coo(9, rows, cols, dense[rows, cols])
        assert np.allclose(cs.matvec(a, np.ones(9)), dense.sum(axis=1), rtol=1e-14)


class TestRowNormalize:
    def test_half_half_and_null_row(self):
        a = cs.from_coo(2, [0, 0], [0, 1], [1.0, 1.0])
        g, d = cs.row_normalize(a)
        assert np.array_equal(g.to_dense(), [[0.5, 0.5], [0.0, 0.0]])
        assert np.array_equal(d, [0.0, 1.0])

    def test_identity_already_stochastic(self):
        a = cs.from_coo(2, [0, 1], [0, 1], [1.0, 1.0])
        g, d = cs.row_normalize(a)
        assert np.array_equal(g.to_dense(), np.eye(2))
        assert np.array_equal(d, [0.0, 0.0])

    def test_weighted_rows(self):
        a = cs.from_coo(2, [0, 0, 1], [0, 1, 0], [2.0, 6.0, 4.0])
        g, d = cs.row_normalize(a)
        assert np.array_equal(g.to_dense(), [[0.25, 0.75], [1.0, 0.0]])
        assert np.array_equal(d, [0.0, 0.0])

    def test_rows_sum_to_one_or_zero(self):
        rng = np.random.default_rng(11)
        dense = np.where(rng.random((20, 20)) < 0.3, rng.random((20, 20)), 0.0)
        dense[4, :] = 0.0
        rows, cols = np.nonzero(dense)
        a = cs.from_coo(20, rows, cols, dense[rows, cols])
        g, d = cs.row_normalize(a)
        sums = cs.matvec(g, np.ones(20))
        for i in range(20):
            if d[i]:
                assert sums[i] == 0.0
            else:
                assert abs(sums[i] - 1.0) <= 1e-15
        assert np.array_equal(d != 0.0, dense.sum(axis=1) == 0.0)


class TestTranspose:
    def test_nilpotent(self):
        a = cs.from_coo(2, [0], [1], [1.0])
        assert np.array_equal(cs.transpose(a).to_dense(), [[0.0, 0.0], [1.0, 0.0]])

    def test_symmetric_fixed_point(self):
        a = cs.from_coo(2, [0, 1], [1, 0], [2.0, 2.0])
        assert np.array_equal(cs.transpose(a).to_dense(), a.to_dense())

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_involution_and_column_sums(self, seed):
        rng = np.random.default_rng(seed)
        dense = np.where(rng.random((5, 5)) < 0.5, rng.random((5, 5)), 0.0)
        rows, cols = np.nonzero(dense)
        a = cs.from_coo(5, rows, cols, dense[rows, cols])
        at = cs.transpose(a)
        assert np.array_equal(cs.transpose(at).to_dense(), a.to_dense())
        assert np.array_equal(cs.row_sums(at), a.to_dense().sum(axis=0))


class TestCache:
    def test_roundtrip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(5)
        dense = np.where(rng.random((7, 7)) < 0.5, rng.random((7, 7)), 0.0)
        rows, cols = np.nonzero(dense)
        a = cs.from_coo(7, rows, cols, dense[rows, cols])
        path = tmp_path / "a.csor"
        cs.write_cache(a, path)
        b = cs.read_cache(path)
        assert b.n == a.n
        for name in ("row_offsets", "col_indices", "values", "diag"):
            assert np.array_equal(getattr(a, name), getattr(b, name))
        # Re-serializing must reproduce the same bytes.
        path2 = tmp_path / "b.csor"
        cs.write_cache(b, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.csor"
        path.write_bytes(b"NOPEx" + b"\x00" * 64)
        with pytest.raises(cs.CacheFormatError):
            cs.read_cache(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "short.csor"
        path.write_bytes(b"CSOR1" + b"\x01")
        with pytest.raises(cs.CacheFormatError):
            cs.read_cache(path)


class TestConstruction:
    def test_explicit_zeros_dropped(self):
        a = cs.from_coo(2, [0, 1], [1, 1], [0.0, 3.0])
        assert a.nnz == 1
        assert a.diag[1] == 3.0

    def test_negative_value_rejected(self):
        with pytest.raises(ValueError):
            cs.from_coo(2, [0], [1], [-1.0])

    def test_index_out_of_range(self):
        with pytest.raises(ValueError):
            cs.from_coo(2, [0], [2], [1.0])

    def test_inconsistent_diag_rejected(self):
        with pytest.raises(ValueError, match="diag"):
            cs.SparseMatrix(2, [0, 1, 1], [0], [1.0], [0.0, 0.0])

    def test_arrays_frozen(self):
        a = cs.from_coo(2, [0], [1], [1.0])
        with pytest.raises(ValueError):
            a.values[0] = 2.0
