use lpcop_core::*;
use proptest::prelude::*;

fn tabulated(weights: &[f64]) -> Marginal {
    let total: f64 = weights.iter().sum();
    let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let residue = 1.0 - probs.iter().sum::<f64>();
    probs[0] += residue;
    let atoms = (0..probs.len()).map(|i| i as f64).collect();
    Marginal::from_parts(atoms, probs, MarginalKind::Tabulated).unwrap()
}

fn basis(weights: &[f64], cap: usize) -> LpBasis {
    let m = tabulated(weights);
    let d = max_degree_default(&m, cap);
    LpBasis::build(m, d).unwrap()
}

fn weights(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, 2..=max_len)
}

fn table(rows: usize, cols: usize) -> impl Strategy<Value = ContingencyTable> {
    prop::collection::vec(prop::collection::vec(1u64..30, cols), rows).prop_map(|c| ContingencyTable::new(c).unwrap())
}

/// Every product term of the two bases.
fn full_terms(bx: &LpBasis, by: &LpBasis) -> Vec<Term> {
    (1..=bx.degree())
        .flat_map(|j| (1..=by.degree()).map(move |k| (j, k)))
        .collect()
}

fn naive_log_z(bx: &LpBasis, by: &LpBasis, terms: &[Term], theta: &[f64]) -> f64 {
    let (p, q) = (bx.marginal().probs(), by.marginal().probs());
    let mut z = 0.0;
    for k in 0..p.len() {
        for l in 0..q.len() {
            let mut e = 0.0;
            for (t, &(j, i)) in terms.iter().enumerate() {
                e += theta[t] * bx.at(j, k) * by.at(i, l);
            }
            z += p[k] * q[l] * e.exp();
        }
    }
    z.ln()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn basis_is_orthonormal(w in weights(40)) {
        let b = basis(&w, 4);
        let p = b.marginal().probs();
        let mut worst = 0.0f64;
        for a in 1..=b.degree() {
            let mean: f64 = p.iter().zip(b.row(a)).map(|(p, t)| p * t).sum();
            worst = worst.max(mean.abs());
            for c in 1..=b.degree() {
                let dot: f64 = p.iter().zip(b.row(a)).zip(b.row(c)).map(|((p, x), y)| p * x * y).sum();
                let want = if a == c { 1.0 } else { 0.0 };
                worst = worst.max((dot - want).abs());
            }
        }
        prop_assert!(worst < 1e-9, "orthonormality error {worst}");
    }

    #[test]
    fn first_order_is_increasing(w in weights(30)) {
        let b = basis(&w, 1);
        prop_assert!(b.row(1).windows(2).all(|x| x[0] < x[1]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn log_partition_matches_naive_sum(wx in weights(5), wy in weights(5), seed in prop::collection::vec(-1.0f64..1.0, 16)) {
        let (bx, by) = (basis(&wx, 4), basis(&wy, 4));
        let terms = full_terms(&bx, &by);
        let theta: Vec<f64> = terms.iter().enumerate().map(|(i, _)| seed[i]).collect();
        let fast = log_partition(&bx, &by, &terms, &theta);
        let slow = naive_log_z(&bx, &by, &terms, &theta);
        prop_assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
    }

    #[test]
    fn gradient_matches_finite_differences(wx in weights(8), wy in weights(8), seed in prop::collection::vec(-0.5f64..0.5, 16)) {
        let (bx, by) = (basis(&wx, 4), basis(&wy, 4));
        let terms = full_terms(&bx, &by);
        let theta: Vec<f64> = (0..terms.len()).map(|i| seed[i]).collect();
        let g = log_partition_gradient(&bx, &by, &terms, &theta);
        let h = 1e-5;
        for t in 0..terms.len() {
            let mut up = theta.clone();
            let mut dn = theta.clone();
            up[t] += h;
            dn[t] -= h;
            let fd = (log_partition(&bx, &by, &terms, &up) - log_partition(&bx, &by, &terms, &dn)) / (2.0 * h);
            prop_assert!((fd - g[t]).abs() < 1e-6, "term {t}: {fd} vs {}", g[t]);
        }
    }

    #[test]
    fn log_partition_is_midpoint_convex(
        wx in weights(6), wy in weights(6),
        a in prop::collection::vec(-1.0f64..1.0, 16),
        b in prop::collection::vec(-1.0f64..1.0, 16),
    ) {
        let (bx, by) = (basis(&wx, 4), basis(&wy, 4));
        let terms = full_terms(&bx, &by);
        let n = terms.len();
        let (a, b) = (&a[..n], &b[..n]);
        let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
        let f = |t: &[f64]| log_partition(&bx, &by, &terms, t);
        prop_assert!(f(&mid) <= 0.5 * (f(a) + f(b)) + 1e-12);
    }

    #[test]
    fn fitted_models_normalise_match_moments_and_have_sound_mi(t in (2usize..6, 2usize..6).prop_flat_map(|(r, c)| table(r, c))) {
        let cfg = FitConfig { penalty: Penalty::Dense, ..FitConfig::default() };
        let fit = fit_table(&t, &cfg).unwrap();
        let m = &fit.model;

        let total: f64 = m.smooth_grid().iter().flatten().sum();
        prop_assert!((total - 1.0).abs() < 1e-10);

        for (term, e) in m.terms().iter().zip(m.expected_comoments()) {
            prop_assert!((e - fit.comoments.get(*term)).abs() < 1e-6);
        }

        let mi = mutual_information(m);
        prop_assert!(mi >= -1e-12);
        let (p, q) = (m.x_basis().marginal().probs(), m.y_basis().marginal().probs());
        let mut direct = 0.0;
        for (k, row) in m.density_grid().iter().enumerate() {
            for (l, c) in row.iter().enumerate() {
                direct += p[k] * q[l] * c * c.ln();
            }
        }
        prop_assert!((mi - direct).abs() < 1e-10, "{mi} vs {direct}");

        // Kernel normalisation of the smoothed table.
        let smooth: f64 = m.smooth_cells(&t).unwrap().iter().flatten().sum();
        prop_assert!((smooth - 1.0).abs() < 1e-8);
    }

    #[test]
    fn fit_is_invariant_under_monotone_transforms(raw in prop::collection::vec((-3.0f64..3.0, 0u8..6), 30..120)) {
        let pairs: Vec<(f64, f64)> = raw
            .iter()
            .enumerate()
            .map(|(i, &(x, c))| (x + i as f64 * 1e-6, f64::from(c) + 0.3 * x.signum()))
            .collect();
        let moved: Vec<(f64, f64)> = pairs.iter().map(|&(x, y)| (x.exp(), y.powi(3))).collect();
        let cfg = FitConfig::default();
        let a = fit_pairs(&pairs, &cfg).unwrap();
        let b = fit_pairs(&moved, &cfg).unwrap();
        prop_assert_eq!(&a.selection, &b.selection);
        prop_assert_eq!(a.model.theta(), b.model.theta());
        prop_assert_eq!(mutual_information(&a.model).to_bits(), mutual_information(&b.model).to_bits());
    }

    #[test]
    fn logistic_and_bayes_routes_agree(wx in weights(10), rate in 0.05f64..0.95, coef in prop::collection::vec(-0.8f64..0.8, 4)) {
        let bx = basis(&wx, 4);
        let by = basis(&[1.0 - rate, rate], 1);
        let terms: Vec<Term> = (1..=bx.degree()).map(|j| (j, 1)).collect();
        let theta = coef[..terms.len()].to_vec();
        let model = MaxEntCopulaModel::from_parts(bx.clone(), by, terms, theta).unwrap();
        let lr = CopulaLogisticModel::from_copula(&model, Variable::Y).unwrap();
        for k in 0..bx.support_len() {
            let bayes = ccd_route_probability(&model, Variable::Y, k).unwrap();
            prop_assert!((lr.predict_proba_at(k) - bayes).abs() < 1e-10);
        }
    }

    #[test]
    fn g2_matches_textbook_formula(t in table(3, 4)) {
        let n = t.total() as f64;
        let (r, c) = (t.row_totals(), t.col_totals());
        let mut g = 0.0;
        for (k, row) in t.counts().iter().enumerate() {
            for (l, &f) in row.iter().enumerate() {
                let f = f as f64;
                g += 2.0 * f * (f * n / (r[k] as f64 * c[l] as f64)).ln();
            }
        }
        let rep = g2_test(&t);
        prop_assert!((rep.statistic - g).abs() < 1e-10);
        prop_assert!((rep.statistic - 2.0 * n * empirical_mi(&t)).abs() < 1e-10);
        prop_assert_eq!(rep.df, 6);
    }

    #[test]
    fn saturated_plugin_reproduces_every_odds_ratio(t in table(3, 3)) {
        let ll = plugin_loglinear(&t).unwrap();
        let p = t.proportions();
        for k in 0..3 {
            for k2 in 0..3 {
                for l in 0..3 {
                    for l2 in 0..3 {
                        let direct = (p[k][l] * p[k2][l2] / (p[k][l2] * p[k2][l])).ln();
                        prop_assert!((log_odds_ratio(&ll, k, k2, l, l2).unwrap() - direct).abs() < 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn selection_ignores_storage_order(vals in prop::collection::vec(-0.5f64..0.5, 12), n in 20usize..500) {
        let rows: Vec<Vec<f64>> = vals.chunks(4).map(|c| c.to_vec()).collect();
        let t = CoMomentTable::from_values(rows.clone(), n).unwrap();
        let transposed: Vec<Vec<f64>> = (0..4).map(|k| rows.iter().map(|r| r[k]).collect()).collect();
        let tt = CoMomentTable::from_values(transposed, n).unwrap();
        let a = select(&t, 2.0);
        let b = select(&tt, 2.0);
        prop_assert_eq!(a.chosen.len(), b.chosen.len());
        let va: Vec<f64> = a.chosen.iter().map(|&x| t.get(x)).collect();
        let vb: Vec<f64> = b.chosen.iter().map(|&x| tt.get(x)).collect();
        prop_assert_eq!(va, vb);

        // Brute-force trace from an independent sort of the squared values.
        let mut sq: Vec<f64> = vals.iter().map(|v| v * v).collect();
        sq.sort_by(|x, y| y.total_cmp(x));
        let mut acc = 0.0;
        for (q, s) in sq.iter().enumerate() {
            acc += s;
            prop_assert_eq!(a.pensum_trace[q], acc - 2.0 / n as f64 * (q + 1) as f64);
        }
    }

    #[test]
    fn loglinear_reconstructs_exponent(wx in weights(6), wy in weights(6), seed in prop::collection::vec(-0.6f64..0.6, 16)) {
        let (bx, by) = (basis(&wx, 4), basis(&wy, 4));
        let terms = full_terms(&bx, &by);
        let theta: Vec<f64> = (0..terms.len()).map(|i| seed[i]).collect();
        let model = MaxEntCopulaModel::from_parts(bx.clone(), by.clone(), terms, theta).unwrap();
        let ll = to_loglinear(&model);
        prop_assert!(ll.mu.windows(2).all(|w| w[0] >= w[1]));
        for k in 0..bx.support_len() {
            for l in 0..by.support_len() {
                let direct = model.exponent_at(k, l) - model.log_z();
                prop_assert!((ll.log_copula(k, l) - direct).abs() < 1e-10);
            }
        }
        let (p, q) = (bx.marginal().probs(), by.marginal().probs());
        for a in 0..ll.rank() {
            for b in 0..ll.rank() {
                let want = if a == b { 1.0 } else { 0.0 };
                let rp: f64 = (0..p.len()).map(|k| p[k] * ll.row_scores[a][k] * ll.row_scores[b][k]).sum();
                let cq: f64 = (0..q.len()).map(|l| q[l] * ll.col_scores[a][l] * ll.col_scores[b][l]).sum();
                prop_assert!((rp - want).abs() < 1e-9 && (cq - want).abs() < 1e-9);
            }
        }
    }
}
