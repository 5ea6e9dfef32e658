use ndarray::{array, Array1, Array2};
use phonoprobe::corpus::Inventory;
use phonoprobe::probe::*;
use phonoprobe::seed;
use proptest::prelude::*;
use rand::Rng;

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

fn choose2(k: usize) -> f64 {
    (k * k.saturating_sub(1) / 2) as f64
}

/// Hubert–Arabie form from explicit pair enumeration.
fn ari_oracle(p: &[usize], q: &[usize]) -> f64 {
    let n = p.len();
    let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            match (p[i] == p[j], q[i] == q[j]) {
                (true, true) => a += 1.0,
                (true, false) => b += 1.0,
                (false, true) => c += 1.0,
                (false, false) => d += 1.0,
            }
        }
    }
    let m = choose2(n);
    let e = (a + b) * (a + c) + (c + d) * (b + d);
    if m * m == e {
        return 1.0;
    }
    (m * (a + d) - e) / (m * m - e)
}

#[test]
fn ari_matches_pair_counting() {
    let mut rng = seed::rng(1);
    for _ in 0..200 {
        let n = rng.random_range(2..=6);
        let p: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let q: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let got = adjusted_rand_index(&p, &q).unwrap();
        assert!((got - ari_oracle(&p, &q)).abs() <= 1e-12, "{p:?} {q:?}");
    }
}

#[test]
fn ari_examples() {
    let p = [0, 0, 1, 1, 2];
    assert_eq!(adjusted_rand_index(&p, &p).unwrap(), 1.0);
    assert_eq!(adjusted_rand_index(&[0, 1, 2, 3], &[0, 0, 0, 0]).unwrap(), 0.0);
    assert!(adjusted_rand_index(&[0, 1], &[0]).is_err());
    let relabeled = [7, 7, 3, 3, 9];
    assert_eq!(adjusted_rand_index(&p, &relabeled).unwrap(), 1.0);
}

/// Recomputes every candidate merge cost from the raw points.
fn ward_oracle(v: &Array2<f64>) -> Vec<(usize, usize, f64)> {
    let n = v.nrows();
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let ess = |members: &[usize]| {
        let m = members.len() as f64;
        let mean: Array1<f64> = members.iter().map(|&i| v.row(i).to_owned()).fold(Array1::zeros(v.ncols()), |a, r| a + r) / m;
        members.iter().map(|&i| (&v.row(i) - &mean).mapv(|x| x * x).sum()).sum::<f64>()
    };
    let mut out = Vec::new();
    for step in 0..n - 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for x in 0..clusters.len() {
            for y in x + 1..clusters.len() {
                let mut union = clusters[x].1.clone();
                union.extend(&clusters[y].1);
                let delta = ess(&union) - ess(&clusters[x].1) - ess(&clusters[y].1);
                if best.is_none_or(|(d, _, _)| delta < d) {
                    best = Some((delta, x, y));
                }
            }
        }
        let (delta, x, y) = best.unwrap();
        let (ix, iy) = (clusters[x].0, clusters[y].0);
        let mut union = clusters[x].1.clone();
        union.extend(&clusters[y].1);
        clusters.remove(y);
        clusters[x] = (n + step, union);
        out.push((ix.min(iy), ix.max(iy), (2.0 * delta).sqrt()));
    }
    out
}

#[test]
fn ward_matches_naive_recomputation() {
    let mut rng = seed::rng(2);
    for _ in 0..50 {
        let v = random_matrix(&mut rng, 8, 3);
        let d = ward_cluster(v.view()).unwrap();
        let oracle = ward_oracle(&v);
        assert_eq!(d.merges.len(), 7);
        for (m, (a, b, h)) in d.merges.iter().zip(oracle) {
            assert_eq!((m.a, m.b), (a, b));
            assert!((m.height - h).abs() <= 1e-9);
        }
        assert!(d.merges.windows(2).all(|w| w[0].height <= w[1].height + 1e-12));
    }
}

#[test]
fn ward_separates_tight_pairs_and_cuts_blobs() {
    let v = array![[0.0, 0.0], [10.0, 10.0], [0.1, 0.0], [10.0, 10.1]];
    let d = ward_cluster(v.view()).unwrap();
    let first: Vec<(usize, usize)> = d.merges[..2].iter().map(|m| (m.a, m.b)).collect();
    assert!(first.contains(&(0, 2)) && first.contains(&(1, 3)));
    assert_eq!(cut_tree(&d, 2).unwrap(), vec![0, 1, 0, 1]);
    assert_eq!(cut_tree(&d, 4).unwrap(), vec![0, 1, 2, 3]);
    assert_eq!(cut_tree(&d, 1).unwrap(), vec![0, 0, 0, 0]);
    assert!(cut_tree(&d, 0).is_err() && cut_tree(&d, 5).is_err());
    assert_eq!(d.merges.last().unwrap().size, 4);

    let mut rng = seed::rng(3);
    let blobs = Array2::from_shape_fn((20, 3), |(i, _)| if i % 2 == 0 { 0.0 } else { 50.0 } + rng.random_range(-1.0..1.0));
    let labels = cut_tree(&ward_cluster(blobs.view()).unwrap(), 2).unwrap();
    for (i, &l) in labels.iter().enumerate() {
        assert_eq!(l, i % 2);
    }
}

#[test]
fn pearson_matches_direct_formula() {
    let x = [1.0, 2.0, 3.0];
    let y = [1.0, 2.0, 4.0];
    // means 2 and 7/3; cov 3; var 2 and 14/3
    let expect = 3.0 / (2.0f64 * 14.0 / 3.0).sqrt();
    assert!((pearson_r(&x, &y).unwrap() - expect).abs() <= 1e-12);
    assert!((pearson_r(&x, &x).unwrap() - 1.0).abs() <= 1e-12);
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    assert!((pearson_r(&x, &neg).unwrap() + 1.0).abs() <= 1e-12);
    assert!(pearson_r(&x, &[1.0, 1.0, 1.0]).is_err());

    let mut rng = seed::rng(4);
    for _ in 0..50 {
        let a: Vec<f64> = (0..30).map(|_| rng.random_range(-3.0..3.0)).collect();
        let b: Vec<f64> = (0..30).map(|_| rng.random_range(-3.0..3.0)).collect();
        let n = 30.0;
        let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
        let sab: f64 = a.iter().zip(&b).map(|(p, q)| p * q).sum();
        let saa: f64 = a.iter().map(|p| p * p).sum();
        let sbb: f64 = b.iter().map(|p| p * p).sum();
        let direct = (n * sab - sa * sb) / ((n * saa - sa * sa).sqrt() * (n * sbb - sb * sb).sqrt());
        assert!((pearson_r(&a, &b).unwrap() - direct).abs() <= 1e-12);
    }
}

#[test]
fn distance_matrix_examples() {
    let d = distance_matrix(array![[0.0, 0.0], [3.0, 4.0]].view()).unwrap();
    assert_eq!(d, array![[0.0, 5.0], [5.0, 0.0]]);
    let mut rng = seed::rng(5);
    let v = random_matrix(&mut rng, 6, 3);
    let d = distance_matrix(v.view()).unwrap();
    for i in 0..6 {
        assert_eq!(d[[i, i]], 0.0);
        for j in 0..6 {
            assert_eq!(d[[i, j]], d[[j, i]]);
            let mut s = 0.0;
            for k in 0..3 {
                s += (v[[i, k]] - v[[j, k]]).powi(2);
            }
            assert!((d[[i, j]] - s.sqrt()).abs() < 1e-15);
        }
    }
    let r = rsa(d.view(), d.view()).unwrap();
    assert!((r - 1.0).abs() <= 1e-12);
}

#[test]
fn logreg_gradient_matches_finite_differences() {
    let mut rng = seed::rng(6);
    let x = random_matrix(&mut rng, 40, 4);
    let y: Vec<usize> = (0..40).map(|_| rng.random_range(0..3)).collect();
    let data = LabeledDataset::new(x.clone(), y.clone()).unwrap();
    let model = logreg_fit(&data, &LogregOptions::default()).unwrap();
    assert!(model.gradient_norm <= 1e-6);
    let mut p: Vec<f64> = model.weights.iter().copied().collect();
    p.extend(model.intercepts.iter());
    // perturb away from the optimum so the gradient is not ~0
    let p: Vec<f64> = p.iter().map(|v| v + rng.random_range(-0.5..0.5)).collect();
    let (_, g) = logreg_objective(x.view(), &y, 3, &p, 1.0);
    let h = 1e-6;
    for k in 0..p.len() {
        let mut q = p.clone();
        q[k] += h;
        let fp = logreg_objective(x.view(), &y, 3, &q, 1.0).0;
        q[k] -= 2.0 * h;
        let fm = logreg_objective(x.view(), &y, 3, &q, 1.0).0;
        let num = (fp - fm) / (2.0 * h);
        assert!((num - g[k]).abs() / g[k].abs().max(num.abs()).max(1e-8) < 1e-5);
    }
    let zero = logreg_objective(x.view(), &y, 3, &vec![0.0; p.len()], 1.0).0;
    let mut opt: Vec<f64> = model.weights.iter().copied().collect();
    opt.extend(model.intercepts.iter());
    assert!(logreg_objective(x.view(), &y, 3, &opt, 1.0).0 <= zero);
}

#[test]
fn logreg_examples() {
    let x = array![[0.0, 0.0], [10.0, 10.0]];
    let data = LabeledDataset::new(x.clone(), vec![0, 1]).unwrap();
    let m = logreg_fit(&data, &LogregOptions::default()).unwrap();
    assert_eq!(m.predict(x.view()), vec![0, 1]);

    let constant = Array2::from_elem((10, 2), 1.0);
    let labels = vec![2, 2, 2, 2, 2, 2, 5, 5, 5, 7];
    let m = logreg_fit(&LabeledDataset::new(constant.clone(), labels).unwrap(), &LogregOptions::default()).unwrap();
    assert!(m.predict(constant.view()).iter().all(|&p| p == 2));

    assert!(logreg_fit(&LabeledDataset::new(constant, vec![1; 10]).unwrap(), &LogregOptions::default()).is_err());
}

#[test]
fn decoding_separable_and_shuffled() {
    let mut rng = seed::rng(7);
    let n = 300;
    let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
    let sep = Array2::from_shape_fn((n, 3), |(i, j)| if labels[i] == j { 5.0 } else { 0.0 } + rng.random_range(-0.1..0.1));
    let noise = random_matrix(&mut rng, n, 3);
    let rep = decode_phonemes(
        &[("sep".into(), sep), ("noise".into(), noise)],
        &labels,
        11,
        1000,
        &LogregOptions::default(),
    )
    .unwrap();
    assert_eq!(rep.results[0].error, 0.0);
    assert_eq!((rep.results[0].ci_low, rep.results[0].ci_high), (0.0, 0.0));
    let r = &rep.results[1];
    assert!(r.ci_low <= r.error && r.error <= r.ci_high);
    assert!(r.ci_low <= rep.baseline_error && rep.baseline_error <= r.ci_high);
    assert_eq!(r.n_train + r.n_test, n);
    assert_eq!(r.n_train, 200);
}

#[test]
fn bootstrap_properties() {
    let ones = vec![1.0; 50];
    assert_eq!(bootstrap_ci(&ones, 1000, 3).unwrap(), (1.0, 1.0));
    let mut rng = seed::rng(8);
    let items: Vec<f64> = (0..80).map(|_| f64::from(rng.random_bool(0.3))).collect();
    assert_eq!(bootstrap_ci(&items, 1000, 5).unwrap(), bootstrap_ci(&items, 1000, 5).unwrap());
    assert!(bootstrap_ci(&[], 1000, 5).is_err());

    let mut covered = 0;
    for trial in 0..100u64 {
        let mut r = seed::rng(1000 + trial);
        let bern: Vec<f64> = (0..1000).map(|_| f64::from(r.random_bool(0.5))).collect();
        let (lo, hi) = bootstrap_ci(&bern, 1000, trial).unwrap();
        if lo <= 0.5 && 0.5 <= hi {
            covered += 1;
        }
    }
    assert!(covered >= 90, "coverage {covered}/100");
}

fn syms(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn abx_generation_matches_enumeration() {
    let cons = syms(&["b", "m"]);
    let vows = syms(&["aa", "iy"]);
    let tuples = abx_generate(&cons, &vows).unwrap();
    let grid: Vec<CvSyllable> = cons
        .iter()
        .flat_map(|c| vows.iter().map(move |v| CvSyllable::new(c, v)))
        .collect();
    let mut brute = Vec::new();
    for a in &grid {
        for b in &grid {
            for x in &grid {
                if a.is_minimal_pair(b) && b.is_minimal_pair(x) && !a.is_minimal_pair(x) && a != x {
                    brute.push((a.clone(), b.clone(), x.clone()));
                }
            }
        }
    }
    let mut got: Vec<_> = tuples.iter().map(|t| (t.a.clone(), t.b.clone(), t.x.clone())).collect();
    got.sort();
    brute.sort();
    assert_eq!(got, brute);

    let full = abx_generate(&syms(&["b", "d", "g", "m"]), &syms(&["aa", "iy", "uw"])).unwrap();
    assert_eq!(full.len(), 2 * 4 * 3 * 3 * 2);
    assert!(abx_generate(&syms(&["b"]), &vows).is_err());

    let be_me_my = AbxTuple {
        a: CvSyllable::new("b", "iy"),
        b: CvSyllable::new("m", "iy"),
        x: CvSyllable::new("m", "ay"),
        contrast: Contrast::Consonant,
    };
    let all = abx_generate(&syms(&["b", "m"]), &syms(&["iy", "ay"])).unwrap();
    assert!(all.contains(&be_me_my));
}

#[test]
fn abx_scoring_rules() {
    let t = AbxTuple {
        a: CvSyllable::new("b", "iy"),
        b: CvSyllable::new("m", "iy"),
        x: CvSyllable::new("m", "ay"),
        contrast: Contrast::Consonant,
    };
    let v = AbxVectors::new(vec![
        (t.a.clone(), array![0.0, 0.0]),
        (t.b.clone(), array![1.0, 0.0]),
        (t.x.clone(), array![0.9, 0.0]),
    ])
    .unwrap();
    assert_eq!(abx_score(&t, &v).unwrap(), 1.0);

    let tied = AbxVectors::new(vec![
        (t.a.clone(), array![1.0, 0.0]),
        (t.b.clone(), array![1.0, 0.0]),
        (t.x.clone(), array![3.0, 0.0]),
    ])
    .unwrap();
    assert_eq!(abx_score(&t, &tied).unwrap(), 0.5);
}

#[test]
fn abx_group_accuracies_aggregate() {
    let inv = Inventory::standard();
    let cons = syms(&["b", "d", "m", "s"]);
    let vows = syms(&["aa", "iy", "uw"]);
    let tuples = abx_generate(&cons, &vows).unwrap();
    let mut rng = seed::rng(9);
    let items: Vec<(CvSyllable, Array1<f64>)> = cons
        .iter()
        .flat_map(|c| vows.iter().map(move |v| CvSyllable::new(c, v)))
        .map(|s| (s, Array1::from_shape_fn(4, |_| rng.random_range(-1.0..1.0))))
        .collect();
    let v = AbxVectors::new(items).unwrap();
    let score = abx_evaluate(&tuples, &v, &class_group(&inv)).unwrap();
    let weighted: f64 = score.groups.values().map(|g| g.accuracy * g.n as f64).sum::<f64>() / score.n as f64;
    assert!((weighted - score.accuracy).abs() < 1e-12);
    assert_eq!(score.groups.values().map(|g| g.n).sum::<usize>(), tuples.len());
    assert!(score.groups.contains_key("vowel") && score.groups.contains_key("plosive"));

    let same = AbxVectors::new(
        cons.iter()
            .flat_map(|c| vows.iter().map(move |v| (CvSyllable::new(c, v), array![1.0, 2.0])))
            .collect(),
    )
    .unwrap();
    assert_eq!(abx_evaluate(&tuples, &same, &|_| "all".into()).unwrap().accuracy, 0.5);
    assert!(abx_evaluate(&[], &same, &|_| "all".into()).is_err());
}

#[test]
fn synonym_identical_forms_give_chance_error() {
    let mut rng = seed::rng(10);
    let sentences = 40;
    let base = random_matrix(&mut rng, sentences, 5);
    let mut x = Array2::zeros((2 * sentences, 5));
    let mut label = Vec::new();
    let mut sentence = Vec::new();
    for s in 0..sentences {
        for f in 0..2 {
            x.row_mut(2 * s + f).assign(&base.row(s));
            label.push(f);
            sentence.push(s);
        }
    }
    let mut distinct = x.clone();
    for i in 0..2 * sentences {
        distinct[[i, 0]] += 4.0 * label[i] as f64;
    }
    let pair = SynonymPairData {
        name: "a/b".into(),
        form_counts: [25, 22],
        sentence: sentence.clone(),
        label: label.clone(),
        features: vec![("same".into(), x), ("distinct".into(), distinct)],
    };
    let out = synonym_experiment(&[pair.clone()], &SynonymOptions::default(), 1).unwrap();
    match &out[0] {
        SynonymOutcome::Evaluated { errors, n_items, .. } => {
            assert_eq!(*n_items, 80);
            assert_eq!(errors[0].error, 0.5);
            assert_eq!(errors[1].error, 0.0);
        }
        other => panic!("unexpected {other:?}"),
    }
    let rare = SynonymPairData {
        form_counts: [19, 30],
        ..pair.clone()
    };
    let skewed = SynonymPairData {
        form_counts: [21, 500],
        ..pair
    };
    let out = synonym_experiment(&[rare, skewed], &SynonymOptions::default(), 1).unwrap();
    assert!(out.iter().all(|o| matches!(o, SynonymOutcome::Skipped { .. })));
}

#[test]
fn report_csv_layout() {
    let mut r = ProbeReport::default();
    r.rows.push(ReportRow::new("decode", "mfcc", "error", 0.25, 100).with_ci(0.2, 0.3));
    r.rows.push(ReportRow::new("rsa", "conv", "pearson_r", 0.5, 703));
    assert_eq!(
        r.to_csv(),
        "probe,representation,metric,value,ci_low,ci_high,n\ndecode,mfcc,error,0.25,0.2,0.3,100\nrsa,conv,pearson_r,0.5,,,703\n"
    );
    assert_eq!(r.value("decode", "mfcc", "error"), Some(0.25));
}

proptest! {
    #[test]
    fn ari_is_symmetric_and_label_invariant(
        p in proptest::collection::vec(0usize..4, 2..12),
        seed_value in 0u64..1000,
    ) {
        let mut rng = seed::rng(seed_value);
        let q: Vec<usize> = p.iter().map(|_| rng.random_range(0..3)).collect();
        let perm = [3usize, 0, 2, 1];
        let relabeled: Vec<usize> = p.iter().map(|&l| perm[l] + 10).collect();
        let a = adjusted_rand_index(&p, &q).unwrap();
        prop_assert_eq!(a, adjusted_rand_index(&relabeled, &q).unwrap());
        prop_assert!((a - adjusted_rand_index(&q, &p).unwrap()).abs() < 1e-12);
        prop_assert!(a <= 1.0 + 1e-12);
    }

    #[test]
    fn rsa_self_correlation_is_one(seed_value in 0u64..1000, rows in 3usize..12) {
        let mut rng = seed::rng(seed_value);
        let v = random_matrix(&mut rng, rows, 4);
        let d = distance_matrix(v.view()).unwrap();
        prop_assert!((rsa(d.view(), d.view()).unwrap() - 1.0).abs() <= 1e-12);
    }
}
