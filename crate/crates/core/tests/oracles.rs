mod common;

use std::collections::VecDeque;

use num_complex::Complex64 as C64;
use rand::Rng;

use common::*;
use treecost::cost::normal::{normal_cdf, normal_quantile, second_order};
use treecost::cost::spectrum::{Spectrum, SpectrumEntropy};
use treecost::cost::exact_costs;
use treecost::protocol::pauli::{generalized_pauli_x, generalized_pauli_z};
use treecost::{Config, NamedState, PartyId, PureState, RootedTree};

#[test]
fn spectrum_entropy_matches_enumeration() {
    let mut r = rng(5);
    for _ in 0..40 {
        let probs = random_probabilities(&mut r, 4);
        let n = r.random_range(1..=7);
        let spec = Spectrum::new(probs.iter().map(|&p| (p, 1)).collect()).unwrap();
        let table = SpectrumEntropy::new(&spec, n, 1 << 20).unwrap();
        for eps in [0.02, 0.2, 0.6] {
            let lib = table.evaluate(eps).unwrap();
            let oracle = brute_force_spectrum_entropy(&probs, n, eps);
            assert!((lib - oracle).abs() < 1e-9, "{probs:?} n={n} eps={eps}: {lib} vs {oracle}");
        }
    }
}

#[test]
fn flat_spectrum_closed_form() {
    // d equal eigenvalues: d (1/d - t) = 1 - eps
    for d in [2usize, 3, 5] {
        let table = SpectrumEntropy::new(&Spectrum::uniform(d).unwrap(), 1, 100).unwrap();
        for eps in [0.01, 0.3, 0.9] {
            let want = -(eps / d as f64).log2();
            assert!((table.evaluate(eps).unwrap() - want).abs() < 1e-12);
        }
    }
}

#[test]
fn degenerate_levels_match_expanded_list() {
    let grouped = Spectrum::new(vec![(0.4, 1), (0.2, 3)]).unwrap();
    let table = SpectrumEntropy::new(&grouped, 4, 1 << 20).unwrap();
    for eps in [0.05, 0.5] {
        let oracle = brute_force_spectrum_entropy(&[0.4, 0.2, 0.2, 0.2], 4, eps);
        assert!((table.evaluate(eps).unwrap() - oracle).abs() < 1e-9);
    }
}

#[test]
fn normal_cdf_against_series() {
    for i in -60..=60 {
        let x = i as f64 / 10.0;
        // the series cancels in the lower tail, so compare absolutely
        assert!((normal_cdf(x) - series_normal_cdf(x)).abs() < 2e-15, "x={x}");
    }
}

#[test]
fn quantile_inverts_series_cdf() {
    for p in [1e-8, 1e-4, 0.01, 0.2, 0.5, 0.7, 0.99, 1.0 - 1e-6] {
        let x = normal_quantile(p).unwrap();
        assert!((series_normal_cdf(x) - p).abs() < 1e-12 * p.min(1.0 - p).max(1e-3), "p={p}");
    }
}

#[test]
fn second_order_coefficients_from_moments() {
    let probs = [0.75f64, 0.25];
    let a: f64 = probs.iter().map(|&p| -p * p.log2()).sum();
    let v: f64 = probs.iter().map(|&p| p * (p.log2() + a).powi(2)).sum();
    let c = second_order(&Spectrum::new(vec![(0.75, 1), (0.25, 1)]).unwrap(), 0.04).unwrap();
    assert!((c.a - a).abs() < 1e-14);
    assert!((c.s - v.sqrt()).abs() < 1e-14);
    assert!((c.b - 2.301052880417215869).abs() < 1e-10);
}

#[test]
fn exact_costs_match_rank_oracle() {
    let cfg = Config::default();
    for seed in 0..30 {
        let (s, t) = random_triple(900 + seed, 6, 3);
        let rep = exact_costs(&s, &t, &cfg).unwrap();
        for e in t.edges() {
            let (inside, _) = t.bipartition(e).unwrap();
            let rank = oracle_rank(&s, &inside, 1e-9);
            assert_eq!(rep.edges[e.index()].rank, rank);
            assert!((rep.edges[e.index()].cost - (rank as f64).log2()).abs() < 1e-12);
        }
    }
}

/// Vertices reachable from `child` once the edge to its parent is cut.
fn reachable_without(t: &RootedTree, parent: PartyId, child: PartyId) -> Vec<PartyId> {
    let mut adj = vec![Vec::new(); t.n()];
    for &(a, b) in t.undirected_edges() {
        if (a, b) != (parent, child) && (b, a) != (parent, child) {
            adj[a.0].push(b);
            adj[b.0].push(a);
        }
    }
    let mut seen = vec![false; t.n()];
    let mut queue = VecDeque::from([child]);
    seen[child.0] = true;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v.0] {
            if !seen[w.0] {
                seen[w.0] = true;
                queue.push_back(w);
            }
        }
    }
    (0..t.n()).filter(|&i| seen[i]).map(PartyId).collect()
}

#[test]
fn bipartitions_match_reachability() {
    let line = RootedTree::line(&[2; 8]).unwrap();
    let e2 = line.edge(2).unwrap();
    let (inside, outside) = line.bipartition(&e2).unwrap();
    assert_eq!(inside, (2..8).map(PartyId).collect::<Vec<_>>());
    assert_eq!(outside, vec![PartyId(0), PartyId(1)]);
    for seed in 0..25 {
        let t = RootedTree::random(&[2; 9], seed).unwrap();
        for e in t.edges() {
            let mut inside = t.bipartition(e).unwrap().0;
            inside.sort();
            assert_eq!(inside, reachable_without(&t, e.parent, e.child));
        }
    }
}

#[test]
fn n_copies_amplitudes_are_products() {
    let dims = [2usize, 3];
    let s = NamedState::Random(17).build(&dims).unwrap();
    let n = 3;
    let block = s.n_copies(n, 1 << 20).unwrap();
    assert_eq!(block.dims(), &[8, 27]);
    let amp = |a: usize, b: usize| s.amplitudes()[a * 3 + b];
    for x in 0..8 {
        for y in 0..27 {
            // copy index least significant inside each register
            let xs = [x / 4, (x / 2) % 2, x % 2];
            let ys = [y / 9, (y / 3) % 3, y % 3];
            let want: C64 = (0..n).map(|c| amp(xs[c], ys[c])).product();
            assert!((block.amplitudes()[x * 27 + y] - want).norm() < 1e-14);
        }
    }
}

#[test]
fn weyl_commutation() {
    // Z X = omega X Z for the clock and shift matrices
    for d in [2usize, 3, 5] {
        let x = generalized_pauli_x(d, 1).unwrap();
        let z = generalized_pauli_z(d, 1).unwrap();
        let omega = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / d as f64);
        let lhs = &z * &x;
        let rhs = (&x * &z) * omega;
        assert!((lhs - rhs).norm() < 1e-12, "d={d}");
    }
}

#[test]
fn product_state_has_unit_ranks() {
    let dims = [3usize, 2, 2, 3];
    let t = RootedTree::star(&dims).unwrap();
    let s = PureState::new(dims.to_vec(), {
        let mut v = vec![C64::new(0.0, 0.0); 36];
        v[0] = C64::new(1.0, 0.0);
        v
    })
    .unwrap();
    let rep = exact_costs(&s, &t, &Config::default()).unwrap();
    assert!(rep.edges.iter().all(|e| e.rank == 1 && e.cost == 0.0));
}
