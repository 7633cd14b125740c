use nalgebra::{DMatrix, SymmetricEigen};
use nprox_core::embed::{
    generate_walks, sgns_gradients, sgns_loss, svd_embed, train_sgns, truncated_svd, SgnsConfig, SvdConfig,
    SvdMethod, WalkStrategy,
};
use nprox_core::rng::seeded;
use nprox_core::{SparseSymmetricMatrix, Vocab};
use rand::Rng;

fn vocab(n: usize) -> Vocab {
    Vocab::new((0..n).map(|i| format!("v{i}")).collect()).unwrap()
}

/// Asserts `count` lies within three binomial standard deviations of `n · p`.
fn within_3_sigma(count: usize, n: usize, p: f64, what: &str) {
    let mean = n as f64 * p;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    assert!(
        (count as f64 - mean).abs() <= 3.0 * sd.max(1.0),
        "{what}: {count} vs expected {mean:.1} (sd {sd:.1})"
    );
}

#[test]
fn uniform_walk_follows_edge_weights() {
    let g = SparseSymmetricMatrix::from_triplets(
        5,
        [(0, 1, 1.0), (0, 2, 2.0), (0, 3, 3.0), (1, 2, 0.5), (2, 4, 4.0), (3, 4, 1.0)],
    )
    .unwrap();
    let walks = generate_walks(&g, WalkStrategy::Uniform, 500, 41, 3).unwrap();
    let mut counts = vec![vec![0usize; 5]; 5];
    for w in &walks.walks {
        for s in w.windows(2) {
            counts[s[0] as usize][s[1] as usize] += 1;
        }
    }
    let steps: usize = counts.iter().flatten().sum();
    assert!(steps >= 100_000, "only {steps} steps");
    for i in 0..5 {
        let out: usize = counts[i].iter().sum();
        let wsum = g.weighted_degree(i);
        for j in 0..5 {
            let p = g.get(i, j) / wsum;
            within_3_sigma(counts[i][j], out, p, &format!("{i}->{j}"));
        }
    }
}

#[test]
fn node2vec_bias_on_a_triangle_with_a_tail() {
    // From 1 having arrived from 0: back to 0 costs 1/p, 2 is a common
    // neighbour of 0 (weight 1), 3 is two hops from 0 (weight 1/q).
    let g = SparseSymmetricMatrix::from_triplets(4, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (1, 3, 1.0)]).unwrap();
    for (p, q) in [(0.25, 1.0), (1.0, 4.0), (2.0, 0.5)] {
        let walks = generate_walks(&g, WalkStrategy::Node2vec { p, q }, 3000, 40, 9).unwrap();
        let mut next = [0usize; 4];
        for w in &walks.walks {
            for s in w.windows(3) {
                if s[0] == 0 && s[1] == 1 {
                    next[s[2] as usize] += 1;
                }
            }
        }
        let total: usize = next.iter().sum();
        let z = 1.0 / p + 1.0 + 1.0 / q;
        within_3_sigma(next[0], total, (1.0 / p) / z, "return");
        within_3_sigma(next[2], total, 1.0 / z, "common neighbour");
        within_3_sigma(next[3], total, (1.0 / q) / z, "outward");
        assert_eq!(next[1], 0);
    }
}

#[test]
fn sgns_gradients_match_central_differences() {
    let mut r = seeded(31);
    let h = 1e-6;
    for _ in 0..50 {
        let d = r.random_range(2..12);
        let k = r.random_range(1..6);
        let mut v = |_: usize| (0..d).map(|_| r.random_range(-1.0..1.0)).collect::<Vec<f64>>();
        let center = v(0);
        let context = v(0);
        let negs: Vec<Vec<f64>> = (0..k).map(|_| v(0)).collect();
        let refs = |n: &[Vec<f64>]| -> Vec<Vec<f64>> { n.to_vec() };
        let loss = |c: &[f64], o: &[f64], n: &[Vec<f64>]| {
            let nr: Vec<&[f64]> = n.iter().map(Vec::as_slice).collect();
            sgns_loss(c, o, &nr)
        };
        let nr: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
        let g = sgns_gradients(&center, &context, &nr);

        let check = |analytic: f64, numeric: f64, what: &str| {
            let scale = analytic.abs().max(numeric.abs()).max(1e-3);
            assert!((analytic - numeric).abs() / scale < 1e-5, "{what}: {analytic} vs {numeric}");
        };
        for i in 0..d {
            let (mut a, mut b) = (center.clone(), center.clone());
            a[i] += h;
            b[i] -= h;
            check(g.center[i], (loss(&a, &context, &negs) - loss(&b, &context, &negs)) / (2.0 * h), "center");
            let (mut a, mut b) = (context.clone(), context.clone());
            a[i] += h;
            b[i] -= h;
            check(g.context[i], (loss(&center, &a, &negs) - loss(&center, &b, &negs)) / (2.0 * h), "context");
            for n in 0..k {
                let (mut a, mut b) = (refs(&negs), refs(&negs));
                a[n][i] += h;
                b[n][i] -= h;
                check(g.negatives[n][i], (loss(&center, &context, &a) - loss(&center, &context, &b)) / (2.0 * h), "negative");
            }
        }
    }
}

fn cos(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

#[test]
fn sgns_separates_two_cliques() {
    let mut t = Vec::new();
    for base in [0, 6] {
        for i in 0..6 {
            for j in i + 1..6 {
                t.push((base + i, base + j, 1.0));
            }
        }
    }
    t.push((5, 6, 1.0));
    let g = SparseSymmetricMatrix::from_triplets(12, t).unwrap();
    let walks = generate_walks(&g, WalkStrategy::Uniform, 20, 20, 4).unwrap();
    let cfg = SgnsConfig {
        dim: 8,
        window: 3,
        epochs: 20,
        seed: 4,
        ..Default::default()
    };
    let (e, trace) = train_sgns(&walks, &vocab(12), &cfg).unwrap();
    assert!(trace.monitor_loss.last().unwrap() < &trace.monitor_loss[0]);
    let (mut within, mut across) = (0.0, 0.0);
    let (mut nw, mut na) = (0, 0);
    for i in 0..12 {
        for j in i + 1..12 {
            let c = cos(e.row(i), e.row(j));
            if (i < 6) == (j < 6) {
                within += c;
                nw += 1;
            } else {
                across += c;
                na += 1;
            }
        }
    }
    assert!(within / nw as f64 > across / na as f64 + 0.3);
}

#[test]
fn sgns_is_reproducible_with_a_seed() {
    let g = SparseSymmetricMatrix::from_triplets(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
    let walks = generate_walks(&g, WalkStrategy::Uniform, 5, 10, 1).unwrap();
    let cfg = SgnsConfig {
        dim: 4,
        epochs: 3,
        ..Default::default()
    };
    let a = train_sgns(&walks, &vocab(4), &cfg).unwrap().0;
    let b = train_sgns(&walks, &vocab(4), &cfg).unwrap().0;
    assert_eq!(a.data(), b.data());
}

fn random_symmetric(n: usize, seed: u64) -> SparseSymmetricMatrix {
    let mut r = seeded(seed);
    let mut t = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            t.push((i, j, r.random_range(0.0..1.0)));
        }
    }
    SparseSymmetricMatrix::from_triplets(n, t).unwrap()
}

fn dense(s: &SparseSymmetricMatrix) -> DMatrix<f64> {
    let n = s.dim();
    DMatrix::from_fn(n, n, |i, j| s.get(i, j))
}

/// Optimal rank-`d` Frobenius error from the eigenvalues of a symmetric matrix.
fn reference_error(a: &DMatrix<f64>, d: usize) -> f64 {
    let mut sv: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().map(|x| x.abs()).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv[d..].iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn truncated_svd_is_frobenius_optimal() {
    let dense_cfg = SvdConfig {
        method: SvdMethod::Dense,
        ..Default::default()
    };
    for seed in 0..20 {
        let s = random_symmetric(20, seed);
        let a = dense(&s);
        let t = truncated_svd(&s, 5, seed, &dense_cfg).unwrap();
        let err = (&a - t.reconstruct()).norm();
        let best = reference_error(&a, 5);
        assert!((err - best).abs() <= 1e-6 * best, "seed {seed}: {err} vs {best}");

        let full = truncated_svd(&s, 20, seed, &dense_cfg).unwrap();
        assert!((&a - full.reconstruct()).norm() <= 1e-8);
    }
}

#[test]
fn randomized_svd_recovers_a_planted_low_rank_matrix() {
    // Four dense blocks plus weak noise: a clear gap after the fourth value.
    let n = 200;
    let mut r = seeded(8);
    let mut t = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let w = if i / 50 == j / 50 { 1.0 } else { 0.0 } + r.random_range(0.0..0.01);
            t.push((i, j, w));
        }
    }
    let s = SparseSymmetricMatrix::from_triplets(n, t).unwrap();
    let a = dense(&s);
    let cfg = SvdConfig {
        method: SvdMethod::Randomized,
        ..Default::default()
    };
    let tr = truncated_svd(&s, 4, 3, &cfg).unwrap();
    let err = (&a - tr.reconstruct()).norm();
    let best = reference_error(&a, 4);
    assert!(err <= best * (1.0 + 1e-3), "{err} vs {best}");
}

#[test]
fn full_rank_embedding_gram_is_matrix_square() {
    let s = random_symmetric(15, 4);
    let e = svd_embed(&s, &vocab(15), 15, 0, &SvdConfig::default()).unwrap();
    let emb = DMatrix::from_row_slice(15, 15, e.data());
    let a = dense(&s);
    let diff = (&emb * emb.transpose() - &a * &a).norm();
    assert!(diff < 1e-9 * (&a * &a).norm(), "{diff}");
}
