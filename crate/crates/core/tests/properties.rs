use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qgnls_core::asymptotic::{dirichlet_data, internal_offset};
use qgnls_core::emit::{read_state, write_state, StateTable};
use qgnls_core::graph::{build_selection, EdgeShape, MetricGraph};
use qgnls_core::grid::{GraphFunction, GraphGrid};
use qgnls_core::linalg::{
    count_below, dense_inertia_window, dense_pencil_eigenvalues, pencil_inertia,
};
use qgnls_core::phase::{linearized_pair, period_partials, period_t_plus, shoot_bump};
use qgnls_core::scenario::flower;
use qgnls_core::spectral::{sturm_count_edge, Robin};
use qgnls_core::sweep::fit_log_rate;

#[derive(Debug, Clone)]
enum Kind {
    Pendant(f64),
    Loop(f64),
    Internal(usize, f64),
    Half,
}

fn kind() -> impl Strategy<Value = Kind> {
    prop_oneof![
        (1.0..4.0f64).prop_map(Kind::Pendant),
        (1.0..3.0f64).prop_map(Kind::Loop),
        (0usize..8, 1.0..3.0f64).prop_map(|(o, l)| Kind::Internal(o, l)),
        Just(Kind::Half),
    ]
}

/// Random connected-enough graph: edges hang off random vertices and
/// internal edges join distinct vertices.
fn graph() -> impl Strategy<Value = MetricGraph> {
    (1usize..4, prop::collection::vec((0usize..8, kind()), 1..6)).prop_map(|(nv, edges)| {
        let mut g = MetricGraph::new();
        let vs: Vec<_> = (0..nv).map(|i| g.add_vertex(format!("v{i}"))).collect();
        for (i, (at, k)) in edges.into_iter().enumerate() {
            let v = vs[at % nv];
            let shape = match k {
                Kind::Pendant(length) => EdgeShape::Pendant { vertex: v, length },
                Kind::Loop(half_length) => EdgeShape::Looping {
                    vertex: v,
                    half_length,
                },
                Kind::Internal(o, half_length) if nv > 1 => {
                    let w = vs[(at + 1 + o % (nv - 1)) % nv];
                    EdgeShape::Internal {
                        minus: v,
                        plus: w,
                        half_length,
                    }
                }
                Kind::Internal(_, length) => EdgeShape::Pendant { vertex: v, length },
                Kind::Half => EdgeShape::HalfLine { vertex: v },
            };
            g.add_edge(format!("e{i}"), shape);
        }
        for &v in &vs {
            if g.degree(v) == 0 {
                g.add_edge(
                    format!("p{v}"),
                    EdgeShape::Pendant {
                        vertex: v,
                        length: 1.5,
                    },
                );
            }
        }
        g
    })
}

fn grid_and_diag() -> impl Strategy<Value = (Arc<GraphGrid>, Vec<f64>, u64)> {
    (graph(), any::<u64>()).prop_map(|(g, seed)| {
        let grid = Arc::new(GraphGrid::with_cutoff(&g, 0.25, 4.0).expect("grid"));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let diag: Vec<f64> = grid
            .mass
            .iter()
            .map(|&m| m * rng.gen_range(-6.0..3.0))
            .collect();
        (grid, diag, seed)
    })
}

fn eigs(a: &DMatrix<f64>) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    a.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degree_sum_counts_edge_ends(g in graph()) {
        let total: usize = (0..g.vertices.len()).map(|v| g.degree(v)).sum();
        let ends: usize = g.edges.iter().map(|e| match e.shape {
            EdgeShape::Looping { .. } | EdgeShape::Internal { .. } => 2,
            EdgeShape::Pendant { .. } | EdgeShape::HalfLine { .. } => 1,
        }).sum();
        prop_assert_eq!(total, ends);
    }

    #[test]
    fn inertia_is_congruence_invariant((grid, diag, seed) in grid_and_diag()) {
        let a = grid.assemble(&diag);
        let (dense, _) = a.to_dense_active();
        let ev = eigs(&dense);
        prop_assume!(ev.iter().all(|x| x.abs() > 1e-4));
        let n = dense.nrows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let p = DMatrix::from_fn(n, n, |i, j| {
            if i == j { 1.0 } else if j < i { rng.gen_range(-0.5..0.5) } else { 0.0 }
        });
        let b = p.transpose() * &dense * &p;
        let factored = a.inertia().unwrap();
        prop_assert_eq!(factored, dense_inertia_window(&dense, 0.0));
        prop_assert_eq!(factored, dense_inertia_window(&b, 1e-9));
    }

    #[test]
    fn pencil_inertia_matches_dense((grid, diag, _) in grid_and_diag(), tol in 1e-8..1e-2f64) {
        let k = grid.assemble(&diag);
        let ev = dense_pencil_eigenvalues(&k, &grid.mass);
        prop_assume!(ev.iter().all(|x| (x.abs() - tol).abs() > 1e-9));
        let i = pencil_inertia(&k, &grid.mass, tol).unwrap();
        prop_assert_eq!(i.negative, ev.iter().filter(|&&x| x < -tol).count());
        prop_assert_eq!(i.zero, ev.iter().filter(|&&x| x.abs() <= tol).count());
        prop_assert_eq!(i.total(), ev.len());
    }

    #[test]
    fn count_below_matches_dense((grid, diag, _) in grid_and_diag(), sigma in -8.0..4.0f64) {
        let k = grid.assemble(&diag);
        let ev = dense_pencil_eigenvalues(&k, &grid.mass);
        prop_assume!(ev.iter().all(|x| (x - sigma).abs() > 1e-9));
        prop_assert_eq!(count_below(&k, &grid.mass, sigma).unwrap(), ev.iter().filter(|&&x| x < sigma).count());
    }

    #[test]
    fn selection_ignores_order(mask in 1u8..8, perm in Just([0usize, 1, 2]).prop_shuffle()) {
        let g = flower(&[1.0, 1.2, 1.4], 3).unwrap().graph;
        let ids: Vec<String> = (0..3).filter(|i| mask & (1 << i) != 0).map(|i| format!("e{}", i + 1)).collect();
        let shuffled: Vec<&String> = perm.iter().filter_map(|&i| ids.get(i)).chain(ids.iter().skip(3)).collect();
        let a = build_selection(&g, &ids).unwrap();
        let b = build_selection(&g, &shuffled).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a, build_selection(&g, &ids).unwrap());
    }

    #[test]
    fn offset_is_antisymmetric(zj in 3usize..40, zk in 3usize..40) {
        prop_assert_eq!(internal_offset(zj, zk).unwrap(), -internal_offset(zk, zj).unwrap());
    }

    #[test]
    fn period_is_decreasing_and_logarithmic(lp in -4.0..-2.0f64, lq in -4.0..-2.0f64) {
        let (p, q) = (10f64.powf(lp), 10f64.powf(lq));
        let (tp, tq) = period_partials(p, q).unwrap();
        prop_assert!(tp < 0.0 && tq < 0.0);
        let t = period_t_plus(p, q).unwrap();
        let bound = 10.0 * (p * p + q * q) * (p.ln().abs() + q.ln().abs());
        prop_assert!((t + ((p + q) / 4.0).ln()).abs() <= bound);
    }

    #[test]
    fn bumps_conserve_energy_and_have_one_negative_mode(eps_ell in 4.5..10.0f64, f in 0.3..2.5f64) {
        let p = f * (-eps_ell).exp();
        let b = shoot_bump(eps_ell, p).unwrap();
        prop_assert!(b.energy_drift() <= 1e-9, "drift {}", b.energy_drift());
        prop_assert!(b.u.windows(2).all(|w| w[1] < w[0]) && b.u.iter().all(|&u| u > 0.0));
        let pair = linearized_pair(&b).unwrap();
        prop_assert_eq!(pair.s_zeros, 1);
        prop_assert!(pair.even_ratio > 0.0);
        for symmetric in [false, true] {
            let s = sturm_count_edge(&b, symmetric);
            prop_assert_eq!(s.count, 1);
            prop_assert!(!s.zero_eigenvalue);
        }
    }

    #[test]
    fn dirichlet_data_decreases_in_eps(eps in 4.0..12.0f64, step in 0.1..2.0f64) {
        let sc = flower(&[1.0, 1.0, 1.0], 2).unwrap();
        let sel = build_selection(&sc.graph, &sc.selection).unwrap();
        let a = dirichlet_data(&sc.graph, &sel, eps, None).unwrap();
        let b = dirichlet_data(&sc.graph, &sel, eps + step, None).unwrap();
        for (x, y) in a.p.iter().zip(&b.p) {
            prop_assert!(y < x);
        }
    }

    #[test]
    fn robin_display_round_trips(a in 0.0..1e6f64, inf in any::<bool>()) {
        let r = if inf { Robin::Infinite } else { Robin::Finite(a) };
        prop_assert_eq!(r.to_string().parse::<Robin>().unwrap(), r);
    }

    #[test]
    fn state_csv_round_trips((grid, diag, _) in grid_and_diag(), eps in 1.0..20.0f64, res in 0.0..1.0f64) {
        let u = GraphFunction { grid: Arc::clone(&grid), values: diag, eps };
        let t = StateTable::from_function(&u, res);
        let mut buf = Vec::new();
        write_state(&mut buf, &t).unwrap();
        let back = read_state(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(back.to_function(grid).unwrap().values, u.values);
    }

    #[test]
    fn rate_fit_recovers_exponentials(slope in -5.0..5.0f64, c in -3.0..3.0f64, n in 2usize..8) {
        let pts: Vec<(f64, f64)> = (0..n).map(|i| {
            let x = 4.0 + i as f64;
            (x, (c + slope * x).exp())
        }).collect();
        let f = fit_log_rate("x", &pts).unwrap();
        prop_assert!((f.slope - slope).abs() < 1e-9);
        prop_assert!((f.intercept - c).abs() < 1e-8);
    }
}
