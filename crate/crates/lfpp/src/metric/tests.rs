use super::*;
use crate::field::SamplerKind;
use crate::rng::{stream_rng, StreamKind};
use rand::Rng;

fn synthetic_field(d: u32, n: usize, spacing: f64, values: Vec<f64>) -> FieldSample {
    let grid = GridSpec::new(d, n, spacing).unwrap();
    assert_eq!(values.len(), grid.total_sites());
    FieldSample {
        grid,
        values,
        epsilon: 0.1,
        anchor: None,
        sampler: SamplerKind::Synthetic,
        seed: 0,
    }
}

fn random_weights(d: u32, n: usize, spacing: f64, seed: u64) -> WeightGrid {
    let grid = GridSpec::new(d, n, spacing).unwrap();
    let mut rng = stream_rng(seed, StreamKind::Perturbation, 7, 0);
    let values: Vec<f64> = (0..grid.total_sites())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let f = synthetic_field(d, n, spacing, values);
    weight_grid_unchecked(&f, 1.0).unwrap()
}

/// Independent shortest-path oracle: Bellman-Ford over an explicitly built
/// edge list (own neighbor enumeration, own wrap arithmetic).
fn bellman_ford(w: &WeightGrid, stencil: Stencil, src: usize) -> Vec<f64> {
    let grid = &w.grid;
    let n = grid.n_per_axis as i64;
    let d = grid.dimension_d as usize;
    let total = grid.total_sites();
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for u in 0..total {
        let cu = grid.coords(u);
        let deltas: Vec<Vec<i64>> = (0..3usize.pow(d as u32))
            .map(|code| {
                let mut c = code;
                (0..d)
                    .map(|_| {
                        let t = (c % 3) as i64 - 1;
                        c /= 3;
                        t
                    })
                    .collect()
            })
            .collect();
        for delta in &deltas {
            let norm: i64 = delta.iter().map(|t| t * t).sum();
            if norm == 0 {
                continue;
            }
            if stencil == Stencil::Axes && norm != 1 {
                continue;
            }
            let mut v = 0usize;
            for i in 0..d {
                let c = (cu[i] as i64 + delta[i]).rem_euclid(n) as usize;
                v = v * n as usize + c;
            }
            let len = grid.spacing * (norm as f64).sqrt();
            edges.push((u, v, len * 0.5 * (w.vertex_weights[u] + w.vertex_weights[v])));
        }
    }
    let mut dist = vec![f64::INFINITY; total];
    dist[src] = 0.0;
    for _ in 0..total {
        let mut changed = false;
        for &(u, v, c) in &edges {
            if dist[u].is_finite() && dist[u] + c < dist[v] {
                dist[v] = dist[u] + c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

#[test]
fn params_invariants() {
    let p = CouplingParams::new(3, 1.2, 0.3).unwrap();
    assert!((p.q_exponent - (3.0 / 1.2 + 0.6)).abs() < 1e-12);
    assert!((p.xi * p.d_gamma - p.gamma).abs() < 1e-12);
    assert!(p.q_exponent > 6.0f64.sqrt());
    let bm = CouplingParams::brownian_map_point();
    assert!((bm.xi_q() - 5.0 / 6.0).abs() < 1e-14);
    assert!((bm.d_gamma - 4.0).abs() < 1e-12);
    assert!(CouplingParams::new(2, 2.0, 0.4).is_err()); // gamma = sqrt(2d)
    assert!(CouplingParams::new(2, 1.0, 0.0).is_err());
}

#[test]
fn weights_of_flat_and_constant_fields() {
    let params = CouplingParams::brownian_map_point();
    let f0 = synthetic_field(2, 8, 0.25, vec![0.0; 64]);
    let w0 = weight_grid(&f0, &params).unwrap();
    assert!(w0.vertex_weights.iter().all(|&w| w == 1.0));

    let fc = synthetic_field(2, 8, 0.25, vec![1.7; 64]);
    let wc = weight_grid(&fc, &params).unwrap();
    let want = (params.xi * 1.7).exp();
    assert!(wc.vertex_weights.iter().all(|&w| w == want));

    // adding a constant multiplies every weight by e^{xi c}
    let mut shifted = f0.clone();
    for (v, src) in shifted.values.iter_mut().zip(&fc.values) {
        *v = src + 0.6;
    }
    let ws = weight_grid(&shifted, &params).unwrap();
    let factor = (params.xi * 0.6).exp();
    for (a, b) in ws.vertex_weights.iter().zip(&wc.vertex_weights) {
        assert!((a - b * factor).abs() < 1e-14 * a);
    }
}

#[test]
fn weight_overflow_reports_sites() {
    let params = CouplingParams::brownian_map_point();
    let mut values = vec![0.0; 64];
    values[17] = 1e4;
    values[33] = -1e4;
    let f = synthetic_field(2, 8, 0.25, values);
    match weight_grid(&f, &params) {
        Err(MetricError::WeightOverflow { count, first }) => {
            assert_eq!(count, 2);
            assert_eq!(first, vec![17, 33]);
        }
        other => panic!("expected overflow, got {other:?}"),
    }
    let un = synthetic_field(2, 8, 0.25, vec![0.0; 64]);
    let mut pre = un.clone();
    pre.epsilon = 0.0;
    assert!(matches!(
        weight_grid(&pre, &params),
        Err(MetricError::Unmollified)
    ));
}

#[test]
fn unit_weights_axes_stencil_is_l1() {
    // spacing a power of two keeps repeated sums exact
    let f = synthetic_field(2, 16, 0.25, vec![0.0; 256]);
    let w = weight_grid_unchecked(&f, 1.0).unwrap();
    let g = &w.grid;
    for (from, to, l1) in [
        ([0usize, 0], [3usize, 0], 3usize),
        ([0, 0], [5, 7], 12),
        ([2, 2], [2, 10], 8),
        ([1, 15], [1, 1], 2), // wraps
    ] {
        let res = distance(
            &w,
            Stencil::Axes,
            &[g.index(&from)],
            &[g.index(&to)],
            None,
        )
        .unwrap();
        assert_eq!(res.value, 0.25 * l1 as f64, "{from:?} -> {to:?}");
        assert_eq!(res.kind, DistanceKind::PointPoint);
    }
}

#[test]
fn weyl_constant_shift_scales_distances() {
    let params = CouplingParams::brownian_map_point();
    let w = random_weights(2, 16, 0.25, 5);
    let mut shifted_field = synthetic_field(
        2,
        16,
        0.25,
        w.vertex_weights.iter().map(|x| x.ln()).collect(),
    );
    for v in shifted_field.values.iter_mut() {
        *v += 0.8;
    }
    let w2 = weight_grid_unchecked(&shifted_field, 1.0).unwrap();
    let factor = (params.xi * 0.0 + 0.8f64).exp(); // xi = 1 here
    let g = &w.grid;
    let src = [g.index(&[1, 2])];
    let dst = [g.index(&[11, 9])];
    let d1 = distance(&w, Stencil::Moore, &src, &dst, None).unwrap().value;
    let d2 = distance(&w2, Stencil::Moore, &src, &dst, None)
        .unwrap()
        .value;
    assert!(
        (d2 - factor * d1).abs() < 1e-12 * d2,
        "{d2} vs {} * {d1}",
        factor
    );
}

#[test]
fn dijkstra_matches_bellman_ford() {
    // 2-d and 3-d random instances, both stencils, exact equality
    for inst in 0..10u64 {
        let w = random_weights(2, 8, 0.5, 100 + inst);
        let g = w.grid;
        let src = g.index(&[inst as usize % 8, 3]);
        for stencil in [Stencil::Moore, Stencil::Axes] {
            let oracle = bellman_ford(&w, stencil, src);
            for probe in [g.index(&[7, 7]), g.index(&[0, 5]), g.index(&[4, 1])] {
                let got = distance(&w, stencil, &[src], &[probe], None).unwrap().value;
                assert_eq!(got, oracle[probe], "d=2 inst={inst} {stencil:?}");
            }
        }
    }
    for inst in 0..10u64 {
        let w = random_weights(3, 4, 0.5, 200 + inst);
        let g = w.grid;
        let src = g.index(&[1, 2, 3]);
        let oracle = bellman_ford(&w, Stencil::Moore, src);
        for probe in [g.index(&[3, 3, 3]), g.index(&[0, 1, 2])] {
            let got = distance(&w, Stencil::Moore, &[src], &[probe], None)
                .unwrap()
                .value;
            assert_eq!(got, oracle[probe], "d=3 inst={inst}");
        }
    }
}

#[test]
fn triangle_inequality_on_sampled_triples() {
    let w = random_weights(2, 32, 0.125, 9);
    let g = w.grid;
    let mut rng = stream_rng(17, StreamKind::Perturbation, 0, 0);
    for _ in 0..60 {
        let pick = |rng: &mut rand_chacha::ChaCha8Rng| {
            g.index(&[rng.gen_range(0..32), rng.gen_range(0..32)])
        };
        let (a, b, c) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
        let dab = distance(&w, Stencil::Moore, &[a], &[b], None).unwrap().value;
        let dbc = distance(&w, Stencil::Moore, &[b], &[c], None).unwrap().value;
        let dac = distance(&w, Stencil::Moore, &[a], &[c], None).unwrap().value;
        assert!(
            dac <= dab + dbc + 1e-11 * (dab + dbc),
            "triangle violated: {dac} > {dab} + {dbc}"
        );
        // symmetry
        let dca = distance(&w, Stencil::Moore, &[c], &[a], None).unwrap().value;
        assert!((dac - dca).abs() <= 1e-12 * dac.max(1e-300));
    }
}

#[test]
fn path_cost_reproduces_value() {
    let w = random_weights(2, 16, 0.25, 23);
    let g = w.grid;
    let res = distance_with_path(
        &w,
        Stencil::Moore,
        &[g.index(&[0, 0])],
        &[g.index(&[9, 13])],
        None,
    )
    .unwrap();
    let path = res.path.as_ref().unwrap();
    assert_eq!(path.first(), Some(&g.index(&[0, 0])));
    assert_eq!(path.last(), Some(&g.index(&[9, 13])));
    let mut acc = 0.0;
    for pair in path.windows(2) {
        let (u, v) = (pair[0], pair[1]);
        let cu = g.coords(u);
        let cv = g.coords(v);
        let mut norm = 0.0f64;
        for i in 0..2 {
            let mut diff = (cu[i] as i64 - cv[i] as i64).unsigned_abs() as usize;
            diff = diff.min(g.n_per_axis - diff);
            norm += (diff * diff) as f64;
        }
        acc += norm.sqrt() * g.spacing * 0.5 * (w.vertex_weights[u] + w.vertex_weights[v]);
    }
    assert!(
        (acc - res.value).abs() < 1e-9,
        "path cost {acc} vs value {}",
        res.value
    );
}

#[test]
fn locality_is_exact_under_outside_perturbation() {
    let w = random_weights(2, 16, 0.25, 31);
    let g = w.grid;
    // domain: a central block
    let mut mask = vec![false; g.total_sites()];
    for i in 4..12 {
        for j in 4..12 {
            mask[g.index(&[i, j])] = true;
        }
    }
    let src = [g.index(&[5, 5])];
    let dst = [g.index(&[10, 11])];
    let base = distance(&w, Stencil::Moore, &src, &dst, Some(&mask))
        .unwrap()
        .value;
    for trial in 0..20u64 {
        let mut perturbed = w.clone();
        let mut rng = stream_rng(trial, StreamKind::Perturbation, 1, 0);
        for (idx, wv) in perturbed.vertex_weights.iter_mut().enumerate() {
            if !mask[idx] {
                *wv = rng.gen_range(0.01..100.0);
            }
        }
        let got = distance(&perturbed, Stencil::Moore, &src, &dst, Some(&mask))
            .unwrap()
            .value;
        assert_eq!(got, base, "outside perturbation leaked into the domain");
    }
}

#[test]
fn translation_equivariance_on_torus() {
    let w = random_weights(2, 16, 0.25, 37);
    let g = w.grid;
    let n = g.n_per_axis;
    let shift = [5usize, 11];
    let mut shifted = w.clone();
    for idx in 0..g.total_sites() {
        let c = g.coords(idx);
        let s = g.index(&[(c[0] + shift[0]) % n, (c[1] + shift[1]) % n]);
        shifted.vertex_weights[idx] = w.vertex_weights[s];
    }
    // D_{h(.+z)}(x, y) = D_h(x + z, y + z)
    for (x, y) in [([0usize, 0], [7usize, 3]), ([2, 9], [14, 14])] {
        let lhs = distance(
            &shifted,
            Stencil::Moore,
            &[g.index(&x)],
            &[g.index(&y)],
            None,
        )
        .unwrap()
        .value;
        let xs = [(x[0] + shift[0]) % n, (x[1] + shift[1]) % n];
        let ys = [(y[0] + shift[0]) % n, (y[1] + shift[1]) % n];
        let rhs = distance(&w, Stencil::Moore, &[g.index(&xs)], &[g.index(&ys)], None)
            .unwrap()
            .value;
        assert_eq!(lhs, rhs);
    }
}

#[test]
fn monotone_in_weights_and_internal_geq_global() {
    let w = random_weights(2, 16, 0.25, 41);
    let g = w.grid;
    let mut heavier = w.clone();
    let mut rng = stream_rng(43, StreamKind::Perturbation, 2, 0);
    for wv in heavier.vertex_weights.iter_mut() {
        *wv *= 1.0 + rng.gen_range(0.0..0.5);
    }
    let src = [g.index(&[1, 1])];
    let dst = [g.index(&[12, 6])];
    let d0 = distance(&w, Stencil::Moore, &src, &dst, None).unwrap().value;
    let d1 = distance(&heavier, Stencil::Moore, &src, &dst, None)
        .unwrap()
        .value;
    assert!(d1 >= d0);

    let mut mask = vec![false; g.total_sites()];
    for i in 0..16 {
        for j in 0..8 {
            mask[g.index(&[i, j])] = true;
        }
    }
    let internal = distance(&w, Stencil::Moore, &src, &dst, Some(&mask))
        .unwrap()
        .value;
    assert!(internal >= d0);
}

#[test]
fn disconnected_domain_gives_infinity() {
    let w = random_weights(2, 16, 0.25, 47);
    let g = w.grid;
    let mut mask = vec![false; g.total_sites()];
    mask[g.index(&[0, 0])] = true;
    mask[g.index(&[8, 8])] = true;
    let res = distance(
        &w,
        Stencil::Moore,
        &[g.index(&[0, 0])],
        &[g.index(&[8, 8])],
        Some(&mask),
    )
    .unwrap();
    assert!(res.value.is_infinite());
    assert!(matches!(
        distance(&w, Stencil::Moore, &[], &[0], None),
        Err(MetricError::EmptySiteSet)
    ));
}

#[test]
fn across_shell_unit_weights_bounds() {
    let f = synthetic_field(2, 64, 0.0625, vec![0.0; 4096]);
    let w = weight_grid_unchecked(&f, 1.0).unwrap();
    let shell = ShellSpec::new([2.0, 2.0, 0.0, 0.0], 0.5, 1.25).unwrap();
    let res = across_distance(&w, Stencil::Moore, &shell).unwrap();
    let a = 0.0625;
    let gap = 0.75f64;
    let lo = a * (gap / a - 2.0).floor();
    let hi = 2.0f64.sqrt() * gap + 2.0 * a;
    assert!(
        res.value >= lo && res.value <= hi,
        "across = {} outside [{lo}, {hi}]",
        res.value
    );
    assert_eq!(res.kind, DistanceKind::Across);
}

#[test]
fn across_matches_bellman_ford_on_masked_graph() {
    let w = random_weights(2, 16, 0.25, 53);
    let shell = ShellSpec::new([2.0, 2.0, 0.0, 0.0], 0.5, 1.5).unwrap();
    let res = across_distance(&w, Stencil::Moore, &shell).unwrap();
    // oracle: Bellman-Ford on the masked graph with a virtual source
    let g = &w.grid;
    let inner = sphere_sites(g, &shell.center, shell.r_inner);
    let outer = sphere_sites(g, &shell.center, shell.r_outer);
    let mask = shell_mask(g, &shell);
    let mut masked = w.clone();
    for (idx, wv) in masked.vertex_weights.iter_mut().enumerate() {
        if !mask[idx] {
            *wv = f64::INFINITY;
        }
    }
    let mut best = f64::INFINITY;
    for &s in &inner {
        let dist = bellman_ford(&masked, Stencil::Moore, s);
        for &t in &outer {
            if dist[t] < best {
                best = dist[t];
            }
        }
    }
    assert_eq!(res.value, best);
}

#[test]
fn around_distance_monotone_and_pairwise() {
    let w = random_weights(2, 32, 0.125, 59);
    let shell = ShellSpec::new([2.0, 2.0, 0.0, 0.0], 0.5, 1.25).unwrap();
    let a2 = around_distance(&w, Stencil::Moore, &shell, 2).unwrap().value;
    let a8 = around_distance(&w, Stencil::Moore, &shell, 8).unwrap().value;
    let a16 = around_distance(&w, Stencil::Moore, &shell, 16)
        .unwrap()
        .value;
    assert!(a8 >= a2, "{a8} < {a2}");
    assert!(a16 >= a8, "{a16} < {a8}");

    // n_rays = 2: exactly the internal distance between the antipodal rays
    let g = &w.grid;
    let dirs = ray_directions(2, 2);
    let r0 = ray_sites(g, &shell, &dirs[0]);
    let r1 = ray_sites(g, &shell, &dirs[1]);
    let mut mask = shell_mask(g, &shell);
    for &s in r0.iter().chain(&r1) {
        mask[s] = true;
    }
    let pair = distance(&w, Stencil::Moore, &r0, &r1, Some(&mask))
        .unwrap()
        .value;
    assert_eq!(a2, pair);

    assert!(matches!(
        around_distance(&w, Stencil::Moore, &shell, 1),
        Err(MetricError::TooFewRays { .. })
    ));
}

#[test]
fn median_distance_statistics() {
    let values: Vec<f64> = (1..=101).map(|i| i as f64).collect();
    let rep = median_distance(&values, 1).unwrap();
    assert_eq!(rep.median, 51.0);
    assert!(rep.ci_low <= 51.0 && 51.0 <= rep.ci_high);

    let flat = vec![2.5; 150];
    let rep = median_distance(&flat, 2).unwrap();
    assert_eq!(rep.median, 2.5);
    assert_eq!(rep.ci_low, 2.5);
    assert_eq!(rep.ci_high, 2.5);

    assert!(matches!(
        median_distance(&flat[..50], 3),
        Err(MetricError::InsufficientEnsemble { .. })
    ));
    let mut bad = flat.clone();
    bad[7] = f64::INFINITY;
    assert!(matches!(
        median_distance(&bad, 4),
        Err(MetricError::InfiniteSample { .. })
    ));
}
