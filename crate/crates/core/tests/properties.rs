mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use salda::classify::{fit_centroids, CentroidSource};
use salda::dataset::{fit_standardizer, make_folds, partition_by_class};
use salda::graph::{build_class_graph, build_full_graph, build_knn_graph, class_sigma, GraphKind, KernelKind};
use salda::harness::{fit_model, TrainOptions};
use salda::linalg::{asymmetry, sym_eigenvalues_desc, sym_norm2};
use salda::saliency::{misclassification_prior, solve_saliency, uniform_saliency, SaliencyPrior, SaliencyResult};
use salda::scatter::{self, build_pair, ClassStats, Variant};
use salda::solver::{solve_pencil, Projection};

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

/// `D × n` sample matrix with entries in `[-5, 5]`.
fn samples(d: std::ops::RangeInclusive<usize>, n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = DMatrix<f64>> {
    (d, n).prop_flat_map(|(d, n)| {
        prop::collection::vec(-5.0f64..5.0, d * n).prop_map(move |v| DMatrix::from_vec(d, n, v))
    })
}

fn instance() -> impl Strategy<Value = common::Labeled> {
    any::<u64>().prop_map(|seed| common::Labeled::random(&mut ChaCha8Rng::seed_from_u64(seed)))
}

fn saliency_for(inst: &common::Labeled, part: &salda::dataset::ClassPartition) -> Vec<SaliencyResult> {
    (0..inst.c)
        .map(|k| {
            let p = inst.class_weights(k);
            SaliencyResult {
                representation: (&part.samples[k] * DVector::from_column_slice(&p)).iter().copied().collect(),
                p,
                h_condition: f64::NAN,
                regularized: false,
                epsilon: 0.0,
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(cfg(64))]

    #[test]
    fn folds_are_stratified(labels in prop::collection::vec(0usize..4, 10..80), k in 2usize..6, seed: u64) {
        let plan = make_folds(&labels, k, seed).unwrap();
        for c in 0..4 {
            let counts: Vec<usize> = (0..k).map(|f| plan.count(&labels, c, f)).collect();
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            prop_assert!(hi - lo <= 1, "class {c}: {counts:?}");
        }
        let mut all: Vec<usize> = (0..k).flat_map(|f| plan.test_indices(f)).collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
    }

    #[test]
    fn partition_is_a_permutation(inst in instance()) {
        let x = inst.features();
        let part = partition_by_class(&x, &inst.y, inst.c).unwrap();
        prop_assert_eq!(part.reassemble(), x);
        let mut seen: Vec<usize> = part.indices.concat();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..inst.y.len()).collect::<Vec<_>>());
    }

    #[test]
    fn standardizer_sees_only_its_rows(x in samples(2..=4, 6..=12), shift in 1.0f64..100.0) {
        let x = x.transpose();
        let train = x.rows(0, 4).into_owned();
        let a = fit_standardizer(&train).unwrap();
        let mut shifted = x.clone();
        for i in 4..x.nrows() {
            for j in 0..x.ncols() {
                shifted[(i, j)] += shift;
            }
        }
        prop_assert_eq!(&fit_standardizer(&shifted.rows(0, 4).into_owned()).unwrap(), &a);
        prop_assert_ne!(&fit_standardizer(&shifted).unwrap(), &a);
    }

    #[test]
    fn graphs_are_exactly_symmetric_and_bounded(x in samples(1..=4, 1..=15), knn: bool, squared: bool) {
        let kernel = if squared { KernelKind::Squared } else { KernelKind::Paper };
        let kind = if knn { GraphKind::Knn } else { GraphKind::Full };
        let g = build_class_graph(&x, kind, kernel).unwrap();
        prop_assert_eq!(asymmetry(&g.weights), 0.0);
        let n = x.ncols();
        for i in 0..n {
            prop_assert_eq!(g.weights[(i, i)], 0.0);
            for j in 0..n {
                let w = g.weights[(i, j)];
                prop_assert!((0.0..=1.0).contains(&w));
                if i != j && !knn {
                    prop_assert_eq!(w == 1.0, x.column(i) == x.column(j));
                }
            }
        }
    }

    #[test]
    fn knn_edges_nest_in_k(x in samples(1..=3, 3..=15), k in 1usize..6) {
        let sigma = class_sigma(&x);
        let small = build_knn_graph(&x, sigma, k, KernelKind::Paper).unwrap();
        let large = build_knn_graph(&x, sigma, k + 1, KernelKind::Paper).unwrap();
        let full = build_full_graph(&x, sigma, KernelKind::Paper).unwrap();
        for (i, &w) in small.weights.iter().enumerate() {
            if w > 0.0 {
                prop_assert_eq!(large.weights[i], w);
            }
            if large.weights[i] > 0.0 {
                prop_assert_eq!(full.weights[i], large.weights[i]);
            }
        }
    }

    #[test]
    fn saliency_matches_inverse_and_is_a_distribution(x in samples(1..=4, 1..=12), rival in prop::collection::vec(-3.0f64..3.0, 4), knn: bool) {
        let d = x.nrows();
        let own = x.column_sum() / x.ncols() as f64;
        let means = vec![own.clone(), DVector::from_column_slice(&rival[..d])];
        let kind = if knn { GraphKind::Knn } else { GraphKind::Full };
        let g = build_class_graph(&x, kind, KernelKind::Paper).unwrap();
        let prior = misclassification_prior(&x, &means, 0).unwrap();
        let got = solve_saliency(&x, &g, &prior, 0.0).unwrap();
        let pts: Vec<Vec<f64>> = x.column_iter().map(|c| c.iter().copied().collect()).collect();
        let want = common::saliency(&common::affinity(&pts, knn, false), &common::prior(&pts, own.as_slice(), &[rival[..d].to_vec()]), got.epsilon);
        for (a, b) in got.p.iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
        prop_assert!((got.p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(got.p.iter().all(|&p| p >= 0.0));
        let rep = x * DVector::from_column_slice(&got.p);
        for (a, b) in rep.iter().zip(&got.representation) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn saliency_is_permutation_equivariant(x in samples(1..=3, 2..=10), v in prop::collection::vec(0.0f64..3.0, 10), rot in 1usize..10) {
        let n = x.ncols();
        let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let xp = DMatrix::from_fn(x.nrows(), n, |r, c| x[(r, perm[c])]);
        let prior = SaliencyPrior { v: v[..n].to_vec() };
        let prior_p = SaliencyPrior { v: perm.iter().map(|&i| v[i]).collect() };
        let a = solve_saliency(&x, &build_class_graph(&x, GraphKind::Full, KernelKind::Paper).unwrap(), &prior, 0.0).unwrap();
        let b = solve_saliency(&xp, &build_class_graph(&xp, GraphKind::Full, KernelKind::Paper).unwrap(), &prior_p, 0.0).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            prop_assert!((b.p[k] - a.p[i]).abs() <= 1e-9, "{} vs {}", b.p[k], a.p[i]);
        }
    }

    #[test]
    fn zero_prior_on_connected_graph_is_uniform(x in samples(1..=3, 2..=12)) {
        let g = build_class_graph(&x, GraphKind::Full, KernelKind::Paper).unwrap();
        prop_assume!(g.weights.iter().enumerate().all(|(i, &w)| w > 0.0 || i % (x.ncols() + 1) == 0));
        let prior = SaliencyPrior { v: vec![0.0; x.ncols()] };
        let r = solve_saliency(&x, &g, &prior, 0.0).unwrap();
        prop_assert!(r.regularized);
        let u = 1.0 / x.ncols() as f64;
        for p in &r.p {
            prop_assert!((p - u).abs() <= 1e-6);
        }
    }

    #[test]
    fn every_scatter_is_symmetric_psd(inst in instance()) {
        let x = inst.features();
        let part = partition_by_class(&x, &inst.y, inst.c).unwrap();
        let stats = ClassStats::from_partition(&part);
        let sal = saliency_for(&inst, &part);
        let mut variants = Variant::baselines();
        variants.extend(Variant::all_swlda());
        for v in variants {
            let pair = build_pair(v, &part, &stats, Some(&sal)).unwrap();
            for m in [&pair.s_b, &pair.s_w, &pair.s_t] {
                prop_assert_eq!(asymmetry(m), 0.0);
                let lmin = *sym_eigenvalues_desc(m).last().unwrap();
                prop_assert!(lmin >= -1e-8 * sym_norm2(m).max(1e-300), "{v}: λmin {lmin}");
            }
        }
    }

    #[test]
    fn ordered_pair_sum_is_twice_unordered(inst in instance()) {
        let x = inst.features();
        let part = partition_by_class(&x, &inst.y, inst.c).unwrap();
        let stats = ClassStats::from_partition(&part);
        let sal = saliency_for(&inst, &part);
        let s3 = scatter::swlda_between(&part, &stats, &sal, 3).unwrap();
        let mut half = common::Sq::zeros(inst.dim());
        for a in 0..inst.c {
            for b in (a + 1)..inst.c {
                let dv = common::diff(&inst.rep(a), &inst.rep(b));
                half.rank1(&dv, &dv, 2.0);
            }
        }
        prop_assert!(half.max_diff(&s3) <= 1e-10);
    }

    #[test]
    fn scatters_scale_quadratically(inst in instance(), s in 0.1f64..10.0) {
        let x = inst.features();
        let part = partition_by_class(&x, &inst.y, inst.c).unwrap();
        let stats = ClassStats::from_partition(&part);
        let sal = saliency_for(&inst, &part);
        let xs = &x * s;
        let part_s = partition_by_class(&xs, &inst.y, inst.c).unwrap();
        let stats_s = ClassStats::from_partition(&part_s);
        let sal_s = saliency_for(&inst, &part_s);
        let mut checks = vec![
            (scatter::classic_within(&part, &stats), scatter::classic_within(&part_s, &stats_s)),
            (scatter::swlda_within(&part, &stats, &sal, 1).unwrap(), scatter::swlda_within(&part_s, &stats_s, &sal_s, 1).unwrap()),
        ];
        for i in 1..=4 {
            checks.push((
                scatter::swlda_between(&part, &stats, &sal, i).unwrap(),
                scatter::swlda_between(&part_s, &stats_s, &sal_s, i).unwrap(),
            ));
        }
        for (a, b) in checks {
            let tol = 1e-10 * (1.0 + b.amax());
            prop_assert!((a * (s * s) - &b).amax() <= tol);
        }
    }

    #[test]
    fn solver_invariants(seed: u64, c in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 1 + (seed % 6) as usize;
        let g = |r: usize, rng: &mut ChaCha8Rng| {
            use rand::Rng;
            let a = DMatrix::from_fn(d, r, |_, _| rng.random_range(-1.0..1.0));
            &a * a.transpose()
        };
        let s_b = g(d, &mut rng);
        let s_t = &s_b + g(d + 2, &mut rng);
        let p = solve_pencil(&s_b, &s_t, d + 1, Some(d), 0.0).unwrap();
        prop_assume!(p.regularization.is_none());
        let gram = p.w.transpose() * &s_t * &p.w;
        prop_assert!((gram - DMatrix::identity(d, d)).amax() <= 1e-6);
        prop_assert!(p.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(p.eigenvalues.iter().all(|&l| (-1e-9..=1.0 + 1e-9).contains(&l)));

        let q = solve_pencil(&s_b, &s_t, d + 1, Some(d), 0.0).unwrap();
        prop_assert_eq!(&q.w, &p.w);
        prop_assert_eq!(&q.eigenvalues, &p.eigenvalues);

        // Scaling S_b keeps directions; only distinct eigenvalues pin a direction.
        let scaled = solve_pencil(&(&s_b * c), &s_t, d + 1, Some(d), 0.0).unwrap();
        for k in 0..d {
            prop_assert!((scaled.eigenvalues[k] - c * p.eigenvalues[k]).abs() <= 1e-8 * c.max(1.0));
            let isolated = (0..d).all(|j| j == k || (p.eigenvalues[j] - p.eigenvalues[k]).abs() > 1e-3);
            if isolated {
                let (u, v) = (p.w.column(k).normalize(), scaled.w.column(k).normalize());
                prop_assert!((u.dot(&v).abs() - 1.0).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn prediction_is_rotation_invariant(reps in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 2..5), pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..20), angle in 0.0f64..std::f64::consts::TAU) {
        let model = |w: DMatrix<f64>| {
            let p = Projection { w, eigenvalues: vec![1.0, 1.0], dims: 2, regularization: None, variant: None };
            let reps: Vec<DVector<f64>> = reps.iter().map(|r| DVector::from_column_slice(r)).collect();
            fit_centroids(p, &reps, CentroidSource::Mean).unwrap()
        };
        let x = DMatrix::from_fn(pts.len(), 2, |i, j| pts[i][j]);
        let (s, c) = angle.sin_cos();
        let plain = model(DMatrix::identity(2, 2)).predict(&x).unwrap();
        let rotated = model(DMatrix::from_row_slice(2, 2, &[c, -s, s, c])).predict(&x).unwrap();
        let z = model(DMatrix::identity(2, 2));
        for (i, (a, b)) in plain.iter().zip(&rotated).enumerate() {
            if a != b {
                // Only an exact tie up to round-off may flip.
                let z_i = x.row(i);
                let da = (z_i - z.projected_centroids.row(*a)).norm_squared();
                let db = (z_i - z.projected_centroids.row(*b)).norm_squared();
                prop_assert!((da - db).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn far_class_does_not_steal_predictions(reps in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 2..4), pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..20)) {
        let id = || Projection { w: DMatrix::identity(2, 2), eigenvalues: vec![1.0, 1.0], dims: 2, regularization: None, variant: None };
        let mut vs: Vec<DVector<f64>> = reps.iter().map(|r| DVector::from_column_slice(r)).collect();
        let x = DMatrix::from_fn(pts.len(), 2, |i, j| pts[i][j]);
        let before = fit_centroids(id(), &vs, CentroidSource::Mean).unwrap().predict(&x).unwrap();
        vs.push(DVector::from_column_slice(&[1e6, 1e6]));
        let after = fit_centroids(id(), &vs, CentroidSource::Mean).unwrap().predict(&x).unwrap();
        prop_assert_eq!(before, after);
    }
}

#[test]
fn tie_breaking_follows_class_order() {
    let id = Projection {
        w: DMatrix::identity(1, 1),
        eigenvalues: vec![1.0],
        dims: 1,
        regularization: None,
        variant: None,
    };
    let reps = [DVector::from_column_slice(&[-1.0]), DVector::from_column_slice(&[1.0])];
    let x = DMatrix::from_row_slice(1, 1, &[0.0]);
    let m = fit_centroids(id.clone(), &reps, CentroidSource::Mean).unwrap();
    assert_eq!(m.predict(&x).unwrap(), vec![0]);
    // Swapping the classes moves the winner with the lower id, not with the centroid.
    let swapped = [reps[1].clone(), reps[0].clone()];
    let m = fit_centroids(id, &swapped, CentroidSource::Mean).unwrap();
    assert_eq!(m.predict(&x).unwrap(), vec![0]);
}

#[test]
fn uniform_swlda_11_spans_the_lda_subspace() {
    use salda::synth::GaussianClasses;
    let opts = TrainOptions {
        graph: GraphKind::Full,
        kernel: KernelKind::Paper,
        epsilon: 0.0,
        dims: None,
        centroid: None,
    };
    for seed in 0..10 {
        let ds = GaussianClasses::separated(4, 6, 25, 1.5, 1.0, seed).unwrap().generate().unwrap();
        let part = partition_by_class(&ds.features, &ds.labels, 4).unwrap();
        let lda = fit_model(&part, Variant::Lda, None, &opts).unwrap();
        let sw = fit_model(&part, Variant::Swlda { between: 1, within: 1 }, Some(uniform_saliency(&part)), &opts).unwrap();
        // Columns agree up to a positive per-column scale.
        for k in 0..3 {
            let a = lda.projection().w.column(k).normalize();
            let b = sw.projection().w.column(k).normalize();
            assert!((a - b).amax() < 1e-8, "seed {seed}, direction {k}");
        }
    }
}
