use bandtrace::braid::{alexander_of_closure, reduced_burau, BraidWord, LaurentMatrix, Letter};
use bandtrace::config::{parse_config, serialize_config, RunConfig, SvgOutput};
use bandtrace::surface::{eval_f, jacobian_f, root_of_unity};
use bandtrace::{BranchedDiskModel, Monomial, PerturbationParams, Sign, C64};
use proptest::prelude::*;

fn word(max_strands: usize, max_len: usize) -> impl Strategy<Value = BraidWord> {
    (2..=max_strands).prop_flat_map(move |n| {
        prop::collection::vec((1..n, any::<bool>()), 0..=max_len).prop_map(move |ls| {
            let letters = ls
                .into_iter()
                .map(|(k, pos)| Letter::new(k, if pos { Sign::Positive } else { Sign::Negative }))
                .collect();
            BraidWord::new(n, letters).unwrap()
        })
    })
}

fn complex(r: f64) -> impl Strategy<Value = C64> {
    (-r..r, -r..r).prop_map(|(a, b)| C64::new(a, b))
}

fn model() -> impl Strategy<Value = BranchedDiskModel> {
    (2usize..=5).prop_flat_map(|n| {
        let term = (complex(1.0), 0u32..=3, 0u32..=3).prop_map(move |(c, a, b)| {
            // total degree must exceed n
            let extra = (n as u32 + 1).saturating_sub(a + b);
            Monomial::new(c, a + extra, b)
        });
        (prop::collection::vec(term, 1..=4), 0.5f64..=1.0)
            .prop_map(move |(mut terms, r0)| {
                terms.sort_by_key(|t| (t.deg_w, t.deg_conj));
                terms.dedup_by_key(|t| (t.deg_w, t.deg_conj));
                BranchedDiskModel::with_radius(n, terms, r0).unwrap()
            })
    })
}

fn params() -> impl Strategy<Value = PerturbationParams> {
    // |γ| stays under a hundredth of max(|λ|, |μ|)
    (complex(0.2), complex(0.2), 0.0f64..0.0099, 0.0f64..std::f64::consts::TAU).prop_filter_map(
        "degenerate perturbation",
        |(l, m, g, a)| PerturbationParams::new(l, m, C64::from_polar(g * l.norm().max(m.norm()), a)).ok(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn burau_is_a_homomorphism(a in word(6, 12), b_letters in prop::collection::vec((1usize..6, any::<bool>()), 0..12)) {
        let n = a.strands();
        let b = BraidWord::new(
            n,
            b_letters
                .into_iter()
                .map(|(k, p)| Letter::new(1 + (k - 1) % (n - 1), if p { Sign::Positive } else { Sign::Negative }))
                .collect(),
        )
        .unwrap();
        let lhs = reduced_burau(&a.multiply(&b).unwrap());
        prop_assert_eq!(lhs, reduced_burau(&a).mul(&reduced_burau(&b)));
    }

    #[test]
    fn burau_of_inverse(a in word(6, 10)) {
        let id = LaurentMatrix::identity(a.strands() - 1);
        prop_assert_eq!(reduced_burau(&a.multiply(&a.inverse()).unwrap()), id);
    }

    #[test]
    fn alexander_is_symmetric(a in word(5, 14)) {
        prop_assume!(a.closure_components() == 1);
        let d = alexander_of_closure(&a).unwrap();
        prop_assert!(d.is_symmetric(), "{d}");
        prop_assert_eq!(d.eval(1.0).abs(), 1.0);
    }

    #[test]
    fn alexander_is_a_conjugacy_and_stabilization_invariant(a in word(5, 12), r in 0usize..12, pos in any::<bool>()) {
        prop_assume!(a.closure_components() == 1);
        let d = alexander_of_closure(&a).unwrap();
        prop_assert_eq!(&alexander_of_closure(&a.rotate(r)).unwrap(), &d);
        let n = a.strands();
        let mut letters = a.letters().to_vec();
        letters.push(Letter::new(n, if pos { Sign::Positive } else { Sign::Negative }));
        let stab = BraidWord::new(n + 1, letters).unwrap();
        prop_assert_eq!(&alexander_of_closure(&stab).unwrap(), &d);
    }

    #[test]
    fn jacobian_matches_finite_differences(m in model(), p in params(), r in 0.1f64..0.9, th in 0.0f64..std::f64::consts::TAU) {
        let w = C64::from_polar(r * m.domain_radius(), th);
        let jac = jacobian_f(&m, &p, w);
        let h = 1e-6;
        for (col, dir) in [C64::new(h, 0.0), C64::new(0.0, h)].into_iter().enumerate() {
            let (a, b) = (eval_f(&m, &p, w + dir).coords(), eval_f(&m, &p, w - dir).coords());
            let scale = jac[col].iter().map(|x| x.abs()).fold(1e-3, f64::max);
            for i in 0..4 {
                let fd = (a[i] - b[i]) / (2.0 * h);
                prop_assert!((fd - jac[col][i]).abs() <= 1e-6 * scale, "col {col} row {i}: {fd} vs {}", jac[col][i]);
            }
        }
    }

    #[test]
    fn first_coordinate_is_rotation_invariant(m in model(), p in params(), w in complex(0.7), k in 0usize..6) {
        let n = m.branch_order();
        let a = eval_f(&m, &p, w).z1;
        let b = eval_f(&m, &p, root_of_unity(n, k) * w).z1;
        prop_assert!((a - b).norm() <= 1e-12);
    }

    #[test]
    fn config_round_trips(m in model(), p in params(), seed in any::<u64>(), json in any::<bool>(), svg in 0usize..4) {
        let mut cfg = RunConfig::new(m, p);
        cfg.seed = seed;
        cfg.outputs.json = json;
        cfg.outputs.svg = [SvgOutput::None, SvgOutput::Disk, SvgOutput::Braid, SvgOutput::Both][svg];
        let text = serialize_config(&cfg);
        prop_assert_eq!(parse_config(&text).unwrap(), cfg);
    }
}
