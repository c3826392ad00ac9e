"""Acceptance suite: one test per release criterion, each printing a
[PASS] line with the measured figure (run with ``pytest -s`` to see them).
"""

import itertools
import math
import time

import numpy as np
import pytest

from ttkd import trajio
from ttkd.amuset import (
    TrajectoryPair,
    amuse_dense,
    amuset_cca,
    amuset_edmd,
    cca_dense,
    empirical_subspace_convergence,
)
from ttkd.basis import (
    BasisDimension,
    BasisSpec,
    constant,
    dense_transform,
    gaussian,
    transform_exact,
)
from ttkd.cli import main
from ttkd.dynamics import SdeConfig, simulate_double_well
from ttkd.hocur import HocurConfig, hocur_transform, maxvol
from ttkd.tensor import subspace_distance, unfold
from ttkd.tt import (
    TensorTrain,
    global_svd,
    segment_gram,
    segment_to_matrix,
    tt_to_dense,
)

WHITENING_DEVIATIONS = []  # filled by every cca_dense run of this suite


def report(name, detail):
    print(f"[PASS] {name}: {detail}")


def random_basis_spec(rng, p, n_max, d=2):
    dims = []
    for k in range(p):
        n_k = int(rng.integers(1, n_max + 1))
        funcs = [constant()] + [
            gaussian(rng.uniform(-1.5, 1.5), rng.uniform(0.5, 1.5))
            for _ in range(n_k - 1)
        ]
        dims.append(BasisDimension(k % d + 1, tuple(funcs)))
    return BasisSpec(tuple(dims))


def oracle_instance(rng, index):
    """Well-conditioned instances for the AMUSEt-vs-dense battery."""
    d = 2
    if index % 5 == 0:  # N = 27 grid family
        dims = [
            BasisDimension(k % 2 + 1, (constant(), gaussian(-1.3, 1.0), gaussian(1.3, 1.0)))
            for k in range(3)
        ]
        spec = BasisSpec(tuple(dims))
    elif index % 5 == 1:  # N = 16, p = 4
        dims = [
            BasisDimension(k % 2 + 1, (constant(), gaussian((-1) ** k * 1.2, 1.2)))
            for k in range(4)
        ]
        spec = BasisSpec(tuple(dims))
    elif index % 5 == 2:  # N = 8, random centers
        dims = [
            BasisDimension(
                k % 2 + 1,
                (constant(), gaussian(rng.uniform(-1.5, 1.5), rng.uniform(0.8, 1.5))),
            )
            for k in range(3)
        ]
        spec = BasisSpec(tuple(dims))
    elif index % 5 == 3:  # N = 9, p = 2
        dims = [
            BasisDimension(
                k + 1,
                (
                    constant(),
                    gaussian(rng.uniform(-1.8, 0.0), rng.uniform(0.8, 1.8)),
                    gaussian(rng.uniform(0.0, 1.8), rng.uniform(0.8, 1.8)),
                ),
            )
            for k in range(2)
        ]
        spec = BasisSpec(tuple(dims))
    else:  # N = 256 with more basis functions than snapshots
        d = 3
        dims = [
            BasisDimension(
                k % 3 + 1,
                (constant(), gaussian(-1.5, 1.2), gaussian(0.0, 1.0), gaussian(1.5, 1.2)),
            )
            for k in range(4)
        ]
        spec = BasisSpec(tuple(dims))
    m = int(rng.integers(30, 61))
    x = rng.standard_normal((d, m))
    y = x + 0.3 * rng.standard_normal((d, m))
    return spec, x, y


class TestAcceptance:
    def test_unfolding_equivalence(self):
        # Eq.-10 check: exact TT unfolding equals the dense transform
        rng = np.random.default_rng(100)
        start = time.perf_counter()
        worst = 0.0
        for _ in range(50):
            p = int(rng.integers(2, 5))
            spec = random_basis_spec(rng, p, n_max=4)
            m = int(rng.integers(5, 61))
            x = rng.standard_normal((2, m))
            tt = transform_exact(x, spec)
            lhs = unfold(tt_to_dense(tt), spec.order)
            rhs = dense_transform(x, spec)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        elapsed = time.perf_counter() - start
        assert worst <= 1e-12
        assert elapsed < 10.0
        report(
            "unfolding equivalence",
            f"50 instances, max entry error {worst:.2e}, {elapsed:.2f}s",
        )

    def test_global_svd_contract(self):
        rng = np.random.default_rng(101)
        worst_gram, worst_recon = 0.0, 0.0
        for trial in range(10):
            dims = tuple(rng.integers(2, 5, size=int(rng.integers(3, 5))))
            ranks = tuple(rng.integers(2, 5, size=len(dims) - 1))
            full = (1,) + ranks + (1,)
            tt = TensorTrain(
                [rng.standard_normal((full[k], n, full[k + 1])) for k, n in enumerate(dims)]
            )
            eps = [0.0, 1e-2, 1e-1][trial % 3]
            svd = global_svd(tt, eps)
            assert np.all(svd.sigma > 0)
            assert np.all(np.diff(svd.sigma) <= 0)
            gram_u = np.max(np.abs(segment_gram(svd.u_cores) - np.eye(svd.rank)))
            gram_v = np.max(np.abs(svd.v.T @ svd.v - np.eye(svd.rank)))
            worst_gram = max(worst_gram, float(gram_u), float(gram_v))
            target = unfold(tt_to_dense(tt), tt.order - 1)
            approx = segment_to_matrix(svd.u_cores) @ np.diag(svd.sigma) @ svd.v.T
            rel = np.linalg.norm(target - approx) / np.linalg.norm(target)
            bound = max(eps, 1e-12) * math.sqrt(tt.order - 1)
            assert rel <= bound
            worst_recon = max(worst_recon, rel / bound)
        assert worst_gram <= 1e-10
        report(
            "global SVD contract",
            f"orthonormality dev {worst_gram:.2e}, reconstruction within "
            f"{worst_recon:.2f} of the eps*sqrt(p) budget",
        )

    def test_amuset_vs_dense_oracle(self):
        rng = np.random.default_rng(102)
        worst_edmd, worst_cca, worst_streamed = 0.0, 0.0, 0.0
        for index in range(20):
            spec, x, y = oracle_instance(rng, index)
            assert spec.full_dimension <= 2000
            pair = TrajectoryPair.from_matrices(x, y)
            dense_e = amuse_dense(dense_transform(x, spec), dense_transform(y, spec))
            for method, bucket in (("exact", "e"), ("streamed", "s")):
                res = amuset_edmd(pair, spec, eps=0.0, method=method)
                assert res.n_values == dense_e.n_values
                diff = float(np.max(np.abs(np.asarray(res.values) - dense_e.values)))
                if bucket == "e":
                    worst_edmd = max(worst_edmd, diff)
                else:
                    worst_streamed = max(worst_streamed, diff)
            dense_c = cca_dense(dense_transform(x, spec), dense_transform(y, spec))
            WHITENING_DEVIATIONS.append(dense_c.whitening_deviation)
            for method in ("exact", "streamed"):
                res = amuset_cca(x, y, spec, eps=0.0, method=method)
                assert res.n_values == dense_c.n_values
                diff = float(
                    np.max(np.abs(res.singular_values - dense_c.singular_values))
                )
                worst_cca = max(worst_cca, diff)
        assert worst_edmd <= 1e-8
        assert worst_streamed <= 1e-8
        assert worst_cca <= 1e-8
        report(
            "AMUSEt vs dense oracle",
            f"20 instances: |dlambda| exact {worst_edmd:.2e}, streamed "
            f"{worst_streamed:.2e}, |dsigma| {worst_cca:.2e}",
        )

    def test_lemma1_whitening(self):
        rng = np.random.default_rng(103)
        for index in range(8):
            spec, x, y = oracle_instance(rng, index)
            res = cca_dense(dense_transform(x, spec), dense_transform(y, spec))
            WHITENING_DEVIATIONS.append(res.whitening_deviation)
        worst = max(WHITENING_DEVIATIONS)
        assert worst <= 1e-10  # cca_dense also enforces this internally
        report(
            "Lemma 1 whitening",
            f"{len(WHITENING_DEVIATIONS)} cca_dense runs, max |C00 - Id| {worst:.2e}",
        )

    def test_maxvol_certificate(self):
        rng = np.random.default_rng(104)
        # dominance certificate on random tall matrices at the default delta
        worst_cert = 0.0
        for _ in range(20):
            a = rng.standard_normal((30, 5))
            mv = maxvol(a, tol=5e-2)
            assert mv.converged
            coeff = a @ np.linalg.inv(a[[r - 1 for r in mv.rows]])
            worst_cert = max(worst_cert, float(np.max(np.abs(coeff))))
            assert worst_cert <= 1.05 + 1e-12
        # exhaustive local optimality: 3-choose-2 and 8-choose-3
        for rows, cols, n_trials in ((3, 2, 20), (8, 3, 20)):
            for _ in range(n_trials):
                a = rng.standard_normal((rows, cols))
                mv = maxvol(a, tol=1e-12, max_iter=10_000)
                chosen = [r - 1 for r in mv.rows]
                base = abs(np.linalg.det(a[chosen]))
                for pos in range(cols):
                    for repl in set(range(rows)) - set(chosen):
                        swap = list(chosen)
                        swap[pos] = repl
                        assert abs(np.linalg.det(a[swap])) <= base * (1 + 1e-9)
        report(
            "maxvol certificate",
            f"max |A A_I^-1| = {worst_cert:.4f} <= 1.05; swap-optimality on "
            "3C2 and 8C3 brute force",
        )

    def test_hocur_exactness_full_rank(self):
        start = time.perf_counter()
        rng = np.random.default_rng(105)
        dims = [
            BasisDimension(
                k % 2 + 1,
                (constant(), gaussian(-1.0 + 0.3 * k, 0.8), gaussian(1.0 - 0.2 * k, 1.1)),
            )
            for k in range(3)
        ]
        spec = BasisSpec(tuple(dims))
        x = rng.standard_normal((2, 20))
        cfg = HocurConfig(max_ranks=(3, 9, 20), n_iter=2, alpha=3.0)
        tt = hocur_transform(x, spec, cfg)
        exact = tt_to_dense(transform_exact(x, spec))
        approx = tt_to_dense(tt)
        entry_err = float(np.max(np.abs(exact.data - approx.data)))
        assert entry_err <= 1e-8
        pair = TrajectoryPair.from_trajectory(x, lag=1)
        res_h = amuset_edmd(pair, spec, eps=0.0, method="hocur", hocur_config=cfg)
        res_e = amuset_edmd(pair, spec, eps=0.0, method="exact")
        assert res_h.n_values == res_e.n_values
        lam_err = float(np.max(np.abs(np.asarray(res_h.values) - np.asarray(res_e.values))))
        assert lam_err <= 1e-6
        elapsed = time.perf_counter() - start
        assert elapsed < 30.0
        report(
            "HOCUR exactness at full rank",
            f"entry error {entry_err:.2e}, eigenvalue error {lam_err:.2e}, {elapsed:.2f}s",
        )

    def test_abc_flow_paper_scale(self, tmp_path):
        # 25^3 points, tau=5, A=sqrt(3), B=sqrt(2), C=1; 10 Gaussians
        # (variance 1) per dimension -> N = 1000 basis functions
        start = time.perf_counter()
        traj = tmp_path / "abc.traj"
        rc = main(["generate", "abc", "--n-per-dim", "25", "--tau", "5", "--out", str(traj)])
        assert rc == 0
        z = trajio.read_trajectory(traj)
        assert z.shape == (3, 2 * 25**3)
        basis_path = tmp_path / "basis.json"
        from ttkd.basis import gaussian_grid_spec

        spec = gaussian_grid_spec(3, 10, 0.0, 2 * math.pi, 1.0)
        assert spec.full_dimension == 1000
        spec.save(basis_path)
        out = tmp_path / "abc_cca.json"
        rc = main(
            [
                "cca", "--traj", str(traj), "--basis", str(basis_path),
                "--eps", "1e-3", "--method", "streamed", "--q", "12",
                "--grid-eval", str(tmp_path / "abc_grid.csv"),
                "--phi-csv", str(tmp_path / "abc_phi.csv"),
                "--out", str(out),
            ]
        )
        assert rc == 0
        doc = trajio.read_results(out)
        lam = np.real(trajio.eigenvalues_from_json(doc["eigenvalues"]))
        assert np.all(lam > 0.0)
        assert np.all(lam <= 1.0 + 1e-8)
        assert np.all(np.diff(lam) <= 1e-12)
        assert lam[0] >= 0.9
        elapsed = time.perf_counter() - start
        assert elapsed < 1800.0
        report(
            "ABC flow at paper scale",
            f"m=15625, N=1000: lambda_1 {lam[0]:.4f}, spectrum in (0, 1], {elapsed:.1f}s",
        )

    def test_variational_monotonicity(self):
        traj = simulate_double_well(
            SdeConfig(beta=2.0, dt=1e-3, n_steps=400_000, x0=1.0, seed=21)
        )[:, ::10]
        pair = TrajectoryPair.from_trajectory(traj, lag=100)
        spec = BasisSpec(
            (
                BasisDimension(1, (constant(), gaussian(-1.0, 0.3), gaussian(1.0, 0.3))),
                BasisDimension(
                    1, (constant(), gaussian(0.0, 0.5), gaussian(-0.6, 0.4), gaussian(0.6, 0.4))
                ),
            )
        )
        psi_x = dense_transform(pair.x, spec)
        psi_y = dense_transform(pair.y, spec)
        sums = []
        for eps in (1e-2, 1e-3, 1e-4):
            res = amuse_dense(psi_x, psi_y, trunc=eps, symmetrize=True)
            assert res.n_values >= 3
            sums.append(float(np.sum(np.real(res.values[:3]))))
        assert sums[1] >= sums[0] - 1e-10
        assert sums[2] >= sums[1] - 1e-10
        report(
            "variational monotonicity",
            "sum of 3 leading eigenvalues "
            + " <= ".join(f"{s:.8f}" for s in sums)
            + " as eps decreases",
        )

    def test_proposition1_trend(self):
        spec = BasisSpec(
            (
                BasisDimension(
                    1, (gaussian(-0.8, 0.5), gaussian(0.0, 0.4), gaussian(0.8, 0.5))
                ),
                BasisDimension(
                    1, (constant(), gaussian(0.4, 0.6), gaussian(-0.4, 0.6))
                ),
            )
        )
        wins = 0
        firsts, lasts = [], []
        for seed in range(5):
            dists = empirical_subspace_convergence(
                lambda m, rng: rng.standard_normal((1, m)),
                spec,
                [500, 2000, 8000],
                ranks=(2, 3),
                seed=seed,
            )
            firsts.append(dists[0])
            lasts.append(dists[-1])
            if dists[-1] < dists[0]:
                wins += 1
        assert wins >= 4
        report(
            "Proposition 1 trend",
            f"{wins}/5 seeds with d(m=8000) < d(m=500); "
            f"median d(500) {np.median(firsts):.3f}",
        )

    def test_lemma_a1_kron_identity(self):
        rng = np.random.default_rng(106)
        worst = 0.0
        for _ in range(20):
            n1, n2, r = 7, 4, 3
            f = np.linalg.qr(rng.standard_normal((n1, r)))[0]
            g = np.linalg.qr(rng.standard_normal((n1, r)))[0]
            d_small = subspace_distance(f, g)
            d_big = subspace_distance(np.kron(f, np.eye(n2)), np.kron(g, np.eye(n2)))
            worst = max(worst, abs(d_big - d_small))
        assert worst <= 1e-12
        report("Lemma A.1", f"20 subspace pairs, max |d_kron - d| = {worst:.2e}")

    def test_hocur_rank_sufficiency_pattern(self):
        # stands in for the molecular experiments: capped-rank HOCUR matches
        # the HOSVD pipeline's slowest eigenvalue on synthetic reversible data
        traj = simulate_double_well(
            SdeConfig(beta=2.0, dt=1e-3, n_steps=300_000, x0=1.0, seed=8)
        )[:, ::10]
        pair = TrajectoryPair.from_trajectory(traj, lag=100)
        dims = [
            BasisDimension(
                1,
                (
                    constant(),
                    gaussian(-1.0 + 0.2 * k, 0.4),
                    gaussian(1.0 - 0.2 * k, 0.4),
                    gaussian(0.3 * (k - 1), 0.8),
                ),
            )
            for k in range(3)
        ]
        spec = BasisSpec(tuple(dims))
        cfg = HocurConfig(max_ranks=(4, 16, 50), n_iter=2, alpha=4.0)
        res_h = amuset_edmd(pair, spec, eps=1e-8, method="hocur", hocur_config=cfg)
        res_s = amuset_edmd(pair, spec, eps=1e-8, method="streamed")
        lam2_h = float(np.real(res_h.values[1]))
        lam2_s = float(np.real(res_s.values[1]))
        assert abs(lam2_h - lam2_s) <= 1e-2
        report(
            "HOCUR rank sufficiency",
            f"lambda_2 hocur {lam2_h:.6f} vs hosvd {lam2_s:.6f} "
            f"(|diff| {abs(lam2_h - lam2_s):.2e} <= 1e-2)",
        )
