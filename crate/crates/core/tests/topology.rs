mod common;

use geodeflect::geometry::{euclid_dist, Point};
use geodeflect::topology::{
    analytic_radius, generate_proxigraph, generate_udg, radius_for_density, Connectivity, Generator, NodeId, RngSeed,
    Topology, VoidRegion,
};
use proptest::prelude::*;

fn proxigraph_with_ranges(n: usize, mean: f64, std: f64, seed: u64, void: Option<VoidRegion>) -> (Topology, Vec<f64>) {
    let g = Generator::new(n)
        .with_void(void)
        .with_connectivity(Connectivity::ResampleThenLargest)
        .proxigraph(mean, std, RngSeed(seed))
        .unwrap();
    (g.topology, g.ranges)
}

#[test]
fn udg_edges_are_exactly_the_short_pairs() {
    for seed in 0..5 {
        let t = generate_udg(200, 0.2, None, RngSeed(seed)).unwrap();
        assert!(t.is_connected());
        for u in t.nodes() {
            let p = t.position(u);
            assert!(p.x * p.x + p.y * p.y <= 1.0);
            for v in t.nodes().filter(|&v| v != u) {
                let close = euclid_dist(p, t.position(v)) <= 0.2;
                assert_eq!(t.has_edge(u, v), close, "pair {u} {v}");
            }
        }
    }
}

#[test]
fn adjacency_is_symmetric_sorted_and_loop_free() {
    let t = generate_udg(300, 0.15, None, RngSeed(3)).unwrap();
    for u in t.nodes() {
        let nbrs = t.neighbors(u);
        assert!(nbrs.windows(2).all(|w| w[0] < w[1]));
        assert!(!nbrs.contains(&u));
        for &v in nbrs {
            assert!(t.neighbors(v).contains(&u));
        }
    }
}

#[test]
fn void_stays_empty() {
    let void = VoidRegion::central_square(1.0);
    for seed in 0..5 {
        let t = generate_udg(500, 0.12, Some(void), RngSeed(seed)).unwrap();
        for p in t.positions() {
            assert!(!(p.x.abs() <= 0.2 && p.y.abs() <= 0.2), "{p} inside the void");
        }
        let (pg, _) = proxigraph_with_ranges(500, 0.12, 0.25, seed, Some(void));
        assert!(pg.positions().iter().all(|p| !void.contains(*p)));
    }
}

#[test]
fn generation_is_deterministic_and_text_round_trips() {
    let a = generate_udg(150, 0.25, None, RngSeed(42)).unwrap();
    let b = generate_udg(150, 0.25, None, RngSeed(42)).unwrap();
    assert_eq!(a, b);
    let c = generate_udg(150, 0.25, None, RngSeed(43)).unwrap();
    assert_ne!(a, c);
    let back: Topology = a.to_text().parse().unwrap();
    assert_eq!(back, a);

    let (p1, r1) = proxigraph_with_ranges(150, 0.25, 0.25, 9, None);
    let (p2, r2) = proxigraph_with_ranges(150, 0.25, 0.25, 9, None);
    assert_eq!((p1.clone(), r1), (p2, r2));
    assert_eq!(Topology::read_text(p1.to_text().as_bytes()).unwrap(), p1);
}

#[test]
fn proxigraph_edges_need_both_ranges() {
    let (t, ranges) = proxigraph_with_ranges(300, 0.15, 0.25, 5, None);
    assert_eq!(ranges.len(), t.len());
    for u in t.nodes() {
        for v in t.nodes().filter(|&v| v > u) {
            let d = euclid_dist(t.position(u), t.position(v));
            assert_eq!(t.has_edge(u, v), d <= ranges[u.index()].min(ranges[v.index()]));
        }
    }
}

#[test]
fn proxigraph_is_not_a_unit_disk_graph() {
    let t = generate_proxigraph(1000, 0.12, 0.25, None, RngSeed(1)).unwrap();
    let witness = t.nodes().any(|u| {
        let pu = t.position(u);
        let longest_edge = t.neighbors(u).iter().map(|&w| euclid_dist(pu, t.position(w))).fold(0.0, f64::max);
        t.nodes().any(|v| v != u && !t.has_edge(u, v) && euclid_dist(pu, t.position(v)) < longest_edge)
    });
    assert!(witness, "expected u, v, w with d(u,v) < d(u,w), (u,w) an edge and (u,v) not");
}

#[test]
fn zero_deviation_proxigraph_is_the_udg() {
    for seed in 0..3 {
        let p = generate_proxigraph(200, 0.2, 0.0, None, RngSeed(seed)).unwrap();
        let u = generate_udg(200, 0.2, None, RngSeed(seed)).unwrap();
        assert_eq!(p.positions(), u.positions());
        assert_eq!(p.edges().collect::<Vec<_>>(), u.edges().collect::<Vec<_>>());
    }
}

#[test]
fn k_neighborhood_matches_independent_bfs() {
    let t = generate_udg(400, 0.15, None, RngSeed(8)).unwrap();
    for src in t.nodes().step_by(37) {
        let dist = common::hop_distances(&t, src);
        for k in 1..=4 {
            let want: Vec<NodeId> = t.nodes().filter(|v| matches!(dist[v.index()], Some(h) if h >= 1 && h <= k)).collect();
            let got: Vec<NodeId> = t.k_neighborhood(src, k).unwrap().into_iter().collect();
            assert_eq!(got, want, "src {src} k {k}");
        }
        assert_eq!(t.k_neighborhood(src, 1).unwrap().into_iter().collect::<Vec<_>>(), t.neighbors(src));
    }
    assert!(t.k_neighborhood(NodeId(10_000), 2).is_err());
}

#[test]
fn bfs_hops_matches_floyd_warshall() {
    let t = generate_udg(30, 0.45, None, RngSeed(2)).unwrap();
    let n = t.len();
    const INF: u32 = u32::MAX / 2;
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for (u, v) in t.edges() {
        d[u.index()][v.index()] = 1;
        d[v.index()][u.index()] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
            }
        }
    }
    for u in t.nodes() {
        for v in t.nodes() {
            let want = (d[u.index()][v.index()] < INF).then_some(d[u.index()][v.index()]);
            assert_eq!(t.bfs_hops(u, v), want);
        }
    }
}

#[test]
fn calibrated_radius_gives_target_degree() {
    let r = radius_for_density(1000, 8.0, 1.0).unwrap();
    assert!((analytic_radius(1000, 8.0, 1.0) - 0.0895).abs() < 1e-3);
    assert!(r > analytic_radius(1000, 8.0, 1.0));
    let gen = Generator::new(1000).with_connectivity(Connectivity::LargestComponent);
    let mut total = 0.0;
    for seed in 0..20 {
        // degree of the raw sample, before any component extraction
        let positions = gen.sample_positions(&mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed));
        total += common::udg_from_points(positions, r).mean_degree();
    }
    let mean = total / 20.0;
    assert!((mean - 8.0).abs() <= 0.5, "measured mean degree {mean}");
}

#[test]
fn largest_component_keeps_the_biggest_piece() {
    let pts = vec![
        Point::new(0.0, 0.0),
        Point::new(0.1, 0.0),
        Point::new(0.2, 0.0),
        Point::new(0.9, 0.9),
        Point::new(0.95, 0.9),
    ];
    let t = common::udg_from_points(pts, 0.15);
    assert!(!t.is_connected());
    assert_eq!(t.components().len(), 2);
    let big = t.largest_component();
    assert_eq!(big.len(), 3);
    assert!(big.is_connected());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_format_round_trips_arbitrary_graphs(
        pts in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2..25),
        radius in 0.05..1.5f64,
    ) {
        let t = common::udg_from_points(pts.into_iter().map(|(x, y)| Point::new(x, y)).collect(), radius);
        let back: Topology = t.to_text().parse().unwrap();
        prop_assert_eq!(back, t);
    }
}
