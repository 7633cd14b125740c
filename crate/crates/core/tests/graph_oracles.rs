use std::collections::BTreeMap;

use nprox_core::graph::{
    component_report, connected_components, low_degree_filter, modularity, ppmi_matrix, select_gamma,
};
use nprox_core::rng::seeded;
use nprox_core::SparseSymmetricMatrix;
use rand::Rng;

fn random_graph(n: usize, density: f64, seed: u64, integer: bool) -> SparseSymmetricMatrix {
    let mut r = seeded(seed);
    let mut t = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.random::<f64>() < density {
                let w = if integer {
                    r.random_range(1..20) as f64
                } else {
                    r.random_range(0.1..3.0)
                };
                t.push((i, j, w));
            }
        }
    }
    SparseSymmetricMatrix::from_triplets(n, t).unwrap()
}

#[test]
fn ppmi_matches_scalar_reevaluation() {
    for seed in 0..50 {
        let m = random_graph(8, 0.6, seed, true);
        if m.edge_count() == 0 {
            continue;
        }
        let dense = m.to_dense();
        let total: f64 = (0..8).flat_map(|i| (i + 1..8).map(move |j| (i, j))).map(|(i, j)| dense[i][j]).sum();
        let rows: Vec<f64> = dense.iter().map(|r| r.iter().sum()).collect();
        let s = ppmi_matrix(&m).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                if i == j {
                    continue;
                }
                let expect = if dense[i][j] > 0.0 {
                    let pij = dense[i][j] / total;
                    (pij / ((rows[i] / total) * (rows[j] / total))).log2().max(0.0)
                } else {
                    0.0
                };
                assert!((s.get(i, j) - expect).abs() < 1e-12, "seed {seed} ({i},{j}): {} vs {expect}", s.get(i, j));
            }
        }
    }
}

#[test]
fn two_nodes_single_pair_is_zero() {
    let m = SparseSymmetricMatrix::from_triplets(2, [(0, 1, 1.0)]).unwrap();
    assert_eq!(ppmi_matrix(&m).unwrap().edge_count(), 0);
}

fn floyd_warshall(m: &SparseSymmetricMatrix) -> Vec<Vec<usize>> {
    let n = m.dim();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for (i, j, _) in m.edges() {
        d[i][j] = 1;
        d[j][i] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

#[test]
fn components_match_reachability() {
    for seed in 0..30 {
        let n = 25;
        let m = random_graph(n, 0.06, 100 + seed, false);
        let d = floyd_warshall(&m);
        let comps = connected_components(&m);
        let mut label = vec![usize::MAX; n];
        for (c, members) in comps.iter().enumerate() {
            for &v in members {
                assert_eq!(label[v], usize::MAX, "node {v} in two components");
                label[v] = c;
            }
        }
        for i in 0..n {
            for j in 0..n {
                let reach = d[i][j] < usize::MAX / 4;
                assert_eq!(reach, label[i] == label[j], "seed {seed} ({i},{j})");
            }
        }
        for w in comps.windows(2) {
            assert!(w[0].len() >= w[1].len());
        }

        let rep = component_report(&m);
        let largest = &comps[0];
        if largest.len() > 1 {
            let mut sum = 0usize;
            for &a in largest {
                for &b in largest {
                    sum += d[a][b];
                }
            }
            let expect = sum as f64 / (largest.len() * (largest.len() - 1)) as f64;
            assert!((rep.largest_mean_shortest_path.unwrap() - expect).abs() < 1e-12);
        }
    }
}

fn labels(pairs: &[(usize, &str)]) -> BTreeMap<usize, String> {
    pairs.iter().map(|&(i, l)| (i, l.to_string())).collect()
}

#[test]
fn two_disjoint_triangles_have_modularity_half() {
    let m = SparseSymmetricMatrix::from_triplets(
        6,
        [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0)],
    )
    .unwrap();
    let l = labels(&[(0, "a"), (1, "a"), (2, "a"), (3, "b"), (4, "b"), (5, "b")]);
    assert!((modularity(&m, &l, true).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn modularity_matches_dense_definition() {
    for seed in 0..20 {
        let n = 12;
        let m = random_graph(n, 0.4, 300 + seed, false);
        let mut r = seeded(seed);
        let l: BTreeMap<usize, String> = (0..n).map(|i| (i, format!("c{}", r.random_range(0..3)))).collect();
        let a = m.to_dense();
        let k: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
        let two_m: f64 = k.iter().sum();
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                if l[&i] == l[&j] {
                    q += a[i][j] - k[i] * k[j] / two_m;
                }
            }
        }
        q /= two_m;
        assert!((modularity(&m, &l, true).unwrap() - q).abs() < 1e-12, "seed {seed}");
    }
}

#[test]
fn random_labels_have_near_zero_modularity() {
    let n = 200;
    let m = random_graph(n, 0.1, 9, false);
    let mut r = seeded(77);
    let mut qs = Vec::new();
    for _ in 0..50 {
        let l: BTreeMap<usize, String> = (0..n).map(|i| (i, format!("c{}", r.random_range(0..4)))).collect();
        qs.push(modularity(&m, &l, true).unwrap());
    }
    let mean = qs.iter().sum::<f64>() / qs.len() as f64;
    assert!(mean.abs() < 0.01, "mean modularity of random labellings {mean}");
}

#[test]
fn gamma_is_largest_admissible_threshold() {
    let mut r = seeded(5);
    for _ in 0..200 {
        let n = r.random_range(1..40);
        let degrees: Vec<usize> = (0..n).map(|_| r.random_range(0..12)).collect();
        let f = r.random_range(0.0..1.0);
        let removed = |g: usize| degrees.iter().filter(|&&d| d < g).count();
        let gamma = select_gamma(&degrees, f);
        assert!(removed(gamma) as f64 <= f * n as f64);
        assert!(removed(gamma + 1) as f64 > f * n as f64);
    }
}

#[test]
fn filter_keeps_only_high_degree_nodes() {
    let m = random_graph(60, 0.08, 21, false);
    let f = low_degree_filter(&m, 0.3).unwrap();
    assert!(f.kept.windows(2).all(|w| w[0] < w[1]));
    assert!(((60 - f.kept.len()) as f64) <= 0.3 * 60.0);
    for &v in &f.kept {
        assert!(m.degree(v) >= f.gamma);
    }
    assert_eq!(f.graph.dim(), f.kept.len());
    for (a, b, w) in f.graph.edges() {
        assert_eq!(w, m.get(f.kept[a], f.kept[b]));
    }
}
