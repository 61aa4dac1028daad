import json

import numpy as np
import pytest

import certsor as cs
from certsor.cli import main
from certsor.io import read_vector, write_vector

import oracles


@pytest.fixture
def graph_dir(tmp_path):
    """A 50-node random digraph ingested into a cache."""
    rng = np.random.default_rng(99)
    n = 50
    dense = np.where(rng.random((n, n)) < 0.15, rng.integers(1, 4, (n, n)), 0)
    np.fill_diagonal(dense, 0)
    dense[7, :] = 0  # one dangling node
    dense[0, 1] = max(dense[0, 1], 1)
    dense[1, 0] = max(dense[1, 0], 1)
    lines = [f"{i} {j} {dense[i, j]}"
             for i, j in zip(*np.nonzero(dense))]
    lines.append(f"{n - 1} {n - 1} 0.0")  # pins the dimension
    edges = tmp_path / "graph.txt"
    edges.write_text("\n".join(lines) + "\n")
    out = tmp_path / "run"
    rc = main(["ingest", str(edges), "--out-dir", str(out)])
    assert rc == 0
    return out / "graph.csor", out, dense.astype(np.float64)


def run(args):
    return main([str(a) for a in args])


class TestIngest:
    def test_cache_roundtrips_bit_exactly(self, tmp_path):
        edges = tmp_path / "tiny.txt"
        edges.write_text("0 1 2.0\n1 0 3.0\n")
        assert run(["ingest", edges, "--out-dir", tmp_path]) == 0
        cache = cs.read_cache(tmp_path / "tiny.csor")
        direct = cs.load_edge_list(edges)
        assert np.array_equal(cache.to_dense(), direct.to_dense())
        assert (tmp_path / "ingest.manifest.json").exists()

    def test_transpose_flag(self, tmp_path):
        edges = tmp_path / "tiny.txt"
        edges.write_text("0 1 2.0\n")
        assert run(["ingest", edges, "--transpose", "--out-dir", tmp_path]) == 0
        cache = cs.read_cache(tmp_path / "tiny.csor")
        assert cache.to_dense()[1, 0] == 2.0

    def test_malformed_line_exits_2(self, tmp_path, capsys):
        edges = tmp_path / "bad.txt"
        edges.write_text("0 1\nnot numbers\n")
        assert run(["ingest", edges, "--out-dir", tmp_path]) == 2
        assert "line 2" in capsys.readouterr().err

    def test_missing_file_exits_1(self, tmp_path):
        assert run(["ingest", tmp_path / "absent.txt", "--out-dir", tmp_path]) == 1


class TestSuitable:
    def test_single_sigma_writes_weights(self, graph_dir):
        cache, out, _ = graph_dir
        assert run(["suitable", cache, "--sigma", "40", "--out-dir", out]) == 0
        doc = json.loads((out / "suitable.json").read_text())
        assert doc["status"] == "suitable"
        w = read_vector(out / "w.csorv")
        a = cs.read_cache(cache)
        assert cs.check_suitable(a, cs.WeightVector(w), 40.0).suitable

    def test_sigma_below_lower_bracket_exits_3(self, graph_dir, capsys):
        cache, out, _ = graph_dir
        assert run(["suitable", cache, "--sigma", "1e-6", "--out-dir", out]) == 3
        assert "sigma" in capsys.readouterr().err

    def test_schedule_iterations_nondecreasing_on_10k_graph(self, tmp_path):
        from certsor import synth
        graph = synth.powerlaw_graph(10_000, seed=17)
        cache = tmp_path / "synth.csor"
        cs.write_cache(graph, cache)
        assert run(["suitable", cache, "--sigma-schedule", "4",
                    "--out-dir", tmp_path]) == 0
        docs = json.loads((tmp_path / "suitable.json").read_text())
        iters = [d["iterations"] for d in docs]
        assert all(d["status"] == "suitable" for d in docs)
        assert iters == sorted(iters)
        for i in range(1, 5):
            assert (tmp_path / f"w_{i}.csorv").exists()

    def test_missing_cache_exits_1(self, tmp_path):
        assert run(["suitable", tmp_path / "no.csor", "--sigma", "2",
                    "--out-dir", tmp_path]) == 1

    def test_outputs_byte_identical_across_out_dirs(self, tmp_path):
        g = cs.from_coo(4, [0, 1, 2, 3], [1, 2, 3, 0], [1.0, 2.0, 1.0, 0.5])
        cache = tmp_path / "g.csor"
        cs.write_cache(g, cache)
        for sub in ("a", "b"):
            assert run(["suitable", cache, "--sigma-schedule", "3",
                        "--out-dir", tmp_path / sub]) == 0
        for name in ("suitable.json", "w_1.csorv", "w_2.csorv", "w_3.csorv"):
            assert (tmp_path / "a" / name).read_bytes() == \
                   (tmp_path / "b" / name).read_bytes()

    def test_garbage_cache_exits_2(self, tmp_path):
        bad = tmp_path / "junk.csor"
        bad.write_bytes(b"JUNKx" + b"\x00" * 32)
        assert run(["suitable", bad, "--sigma", "2", "--out-dir", tmp_path]) == 2


class TestSolve:
    def test_full_pipeline_matches_dense_oracle(self, graph_dir):
        cache, out, dense = graph_dir
        upper = dense.sum(axis=1).max()
        s, sigma = 1.5 * upper, 1.1 * upper
        assert run(["solve", cache, "--s", s, "--sigma", sigma,
                    "--target-error", "1e-10", "--out-dir", out]) == 0
        x = read_vector(out / "x.csorv")
        cert = json.loads((out / "solve_cert.json").read_text())
        xbar = oracles.solve_dense(s, dense, np.ones(len(x)))
        assert np.max(np.abs(x - xbar)) <= cert["supnorm_bound"]
        assert cert["manifest"].endswith("solve.manifest.json")
        assert (out / "solve.manifest.json").exists()

    def test_reruns_are_byte_identical(self, graph_dir, tmp_path):
        cache, _, dense = graph_dir
        upper = dense.sum(axis=1).max()
        args = ["solve", cache, "--s", 1.5 * upper, "--sigma", 1.1 * upper,
                "--schedule", "random:7", "--target-error", "1e-8"]
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert run(args + ["--out-dir", out1]) == 0
        assert run(args + ["--out-dir", out2]) == 0
        for name in ("x.csorv", "solve_cert.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_parallel_and_sequential_agree_within_bounds(self, graph_dir):
        cache, out, dense = graph_dir
        upper = dense.sum(axis=1).max()
        base = ["solve", cache, "--s", 1.5 * upper, "--sigma", 1.1 * upper,
                "--target-error", "1e-10"]
        seq_dir, par_dir = out / "seq", out / "par"
        assert run(base + ["--schedule", "seq", "--out-dir", seq_dir]) == 0
        assert run(base + ["--schedule", "par:4", "--out-dir", par_dir]) == 0
        x_seq = read_vector(seq_dir / "x.csorv")
        x_par = read_vector(par_dir / "x.csorv")
        b_seq = json.loads((seq_dir / "solve_cert.json").read_text())["supnorm_bound"]
        b_par = json.loads((par_dir / "solve_cert.json").read_text())["supnorm_bound"]
        assert np.max(np.abs(x_seq - x_par)) <= b_seq + b_par

    def test_random_schedule_without_seed_exits_2(self, graph_dir):
        cache, out, dense = graph_dir
        upper = dense.sum(axis=1).max()
        assert run(["solve", cache, "--s", 1.5 * upper, "--sigma", 1.1 * upper,
                    "--schedule", "random", "--out-dir", out]) == 2

    def test_precomputed_weights_accepted(self, graph_dir):
        cache, out, dense = graph_dir
        upper = dense.sum(axis=1).max()
        sigma = 1.1 * upper
        assert run(["suitable", cache, "--sigma", sigma, "--out-dir", out]) == 0
        assert run(["solve", cache, "--s", 1.5 * upper, "--sigma", sigma,
                    "--w", out / "w.csorv", "--out-dir", out]) == 0


class TestRankingCommands:
    def test_katz_matches_dense(self, graph_dir):
        cache, out, dense = graph_dir
        rho = oracles.rho_dense(dense)
        sigma = 1.1 * rho
        alpha = 0.5 / sigma
        assert run(["katz", cache, "--alpha", alpha, "--sigma", sigma,
                    "--target-error", "1e-11", "--out-dir", out]) == 0
        k = read_vector(out / "katz.csorv")
        cert = json.loads((out / "katz_cert.json").read_text())
        expected = np.linalg.solve(np.eye(len(k)) - alpha * dense.T,
                                   np.ones(len(k)))
        assert np.max(np.abs(k - expected)) <= cert["supnorm_bound"] + 1e-12
        assert (out / "katz.manifest.json").exists()

    def test_pagerank_matches_dense_strongly_preferential(self, graph_dir):
        cache, out, dense = graph_dir
        assert run(["pagerank", cache, "--alpha", "0.85",
                    "--target-error", "1e-12", "--l1-cert",
                    "--out-dir", out]) == 0
        r = read_vector(out / "pagerank.csorv")
        n = len(r)
        g_dense = dense / np.where(dense.sum(1) > 0, dense.sum(1), 1.0)[:, None]
        d = (dense.sum(1) == 0).astype(float)
        expected = oracles.dense_strong_pagerank(g_dense, d, 0.85,
                                                 np.full(n, 1.0 / n))
        assert np.max(np.abs(r - expected)) <= 1e-9
        l1 = json.loads((out / "pagerank_l1_cert.json").read_text())
        assert l1["bound"] >= 0.0
        assert (out / "pagerank.manifest.json").exists()

    def test_l1_cert_requires_plain_sweeps(self, graph_dir):
        cache, out, _ = graph_dir
        assert run(["pagerank", cache, "--alpha", "0.5", "--omega", "1.1",
                    "--l1-cert", "--out-dir", out]) == 2

    def test_generic_u_distribution(self, graph_dir, tmp_path):
        cache, out, dense = graph_dir
        n = dense.shape[0]
        rng = np.random.default_rng(5)
        u = rng.uniform(0.1, 1.0, n)
        upath = tmp_path / "u.csorv"
        write_vector(u / u.sum(), upath)
        assert run(["pagerank", cache, "--alpha", "0.85", "--generic-u", upath,
                    "--target-error", "1e-12", "--out-dir", out]) == 0
        r = read_vector(out / "pagerank.csorv")
        g_dense = dense / np.where(dense.sum(1) > 0, dense.sum(1), 1.0)[:, None]
        d = (dense.sum(1) == 0).astype(float)
        p = g_dense + np.outer(d, u / u.sum())
        v = np.full(n, 1.0 / n)
        expected = 0.15 * np.linalg.solve(np.eye(n) - 0.85 * p.T, v)
        assert np.max(np.abs(r - expected)) <= 1e-9


class TestTau:
    def test_prints_correlation(self, tmp_path, capsys):
        a = tmp_path / "a.csorv"
        b = tmp_path / "b.csorv"
        write_vector(np.array([1.0, 2.0, 3.0, 4.0]), a)
        write_vector(np.array([1.0, 2.0, 3.0, 4.0]), b)
        assert run(["tau", a, b, "--out-dir", tmp_path]) == 0
        assert capsys.readouterr().out.strip() == "1"

    def test_rounding_flag_applies_to_second_file(self, tmp_path, capsys):
        a = tmp_path / "a.txt"
        b = tmp_path / "b.txt"
        a.write_text("0\n0\n1\n1\n")
        b.write_text("0.001\n-0.002\n1.001\n0.998\n")
        assert run(["tau", a, b, "--out-dir", tmp_path]) == 0
        noisy = float(capsys.readouterr().out)
        assert noisy < 1.0
        assert run(["tau", a, b, "--round", "1", "--out-dir", tmp_path]) == 0
        assert float(capsys.readouterr().out) == 1.0

    def test_degenerate_exits_3(self, tmp_path):
        a = tmp_path / "a.txt"
        b = tmp_path / "b.txt"
        a.write_text("1\n1\n1\n")
        b.write_text("1\n2\n3\n")
        assert run(["tau", a, b, "--out-dir", tmp_path]) == 3


class TestBench:
    def test_emits_csv_with_expected_columns(self, graph_dir):
        cache, out, _ = graph_dir
        assert run(["bench", cache, "--sigma-schedule", "3",
                    "--target-error", "1e-6", "--out-dir", out]) == 0
        lines = (out / "bench.csv").read_text().strip().splitlines()
        assert lines[0] == "sigma,iterations,wallclock_ms,r,bound"
        assert len(lines) == 4
        for line in lines[1:]:
            sigma, iters, ms, r, bound = line.split(",")
            assert float(sigma) > 0 and int(iters) >= 1
            assert float(r) < 1.0 and float(bound) >= 0.0
        assert (out / "bench.manifest.json").exists()


class TestManifests:
    def test_every_certificate_references_an_existing_manifest(self, graph_dir):
        cache, out, dense = graph_dir
        upper = dense.sum(axis=1).max()
        assert run(["solve", cache, "--s", 1.5 * upper, "--sigma", 1.1 * upper,
                    "--out-dir", out]) == 0
        for cert_name in ("solve_cert.json",):
            doc = json.loads((out / cert_name).read_text())
            assert "manifest" in doc
            manifest = json.loads((out / "solve.manifest.json").read_text())
            assert str(out / cert_name) in manifest["outputs"]
            assert str(cache) in manifest["inputs"]
