use std::collections::HashMap;

use num_complex::Complex64;
use proptest::prelude::*;
use qreward_core::expr::{
    equiv_probe, hermitian_eigen, hermitian_eigenvalues, infer_dimension, parse_expr, BaseQuantity, BinOp, ComplexMatrix,
    Constant, Dimension, Expr, Func, ProbeConfig,
};
use qreward_core::fusion::{aggregate, fuse, select_best, LambdaMap};
use qreward_core::pipeline::{dedup, SampleRecord, Similarity, TrigramCosine, DEFAULT_UPSILON};
use qreward_core::ses::{CheckId, Indicator, PerDim, Ses};

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0.0f64..1e6).prop_map(Expr::num),
        (0u32..20).prop_map(|k| Expr::num(k as f64)),
        prop::sample::select(vec!["x", "y", "m", "L", "t", "omega"]).prop_map(Expr::sym),
        prop::sample::select(vec![Constant::Pi, Constant::Hbar, Constant::I]).prop_map(Expr::Const),
    ]
}

fn expr_tree() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Expr::neg),
            (prop::sample::select(Func::ALL.to_vec()), inner.clone()).prop_map(|(f, a)| Expr::call(f, a)),
            (
                prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow]),
                inner.clone(),
                inner
            )
                .prop_map(|(op, a, b)| Expr::binary(op, a, b)),
        ]
    })
}

fn dimension() -> impl Strategy<Value = Dimension> {
    prop::collection::vec(-3i64..=3, 7).prop_map(|powers| {
        BaseQuantity::ALL
            .iter()
            .zip(powers)
            .fold(Dimension::dimensionless(), |d, (q, p)| d.with(*q, p))
    })
}

fn hermitian(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(-2.0f64..2.0, 2 * n * n).prop_map(move |raw| {
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let re = raw[2 * (i * n + j)];
                let im = if i == j { 0.0 } else { raw[2 * (i * n + j) + 1] };
                m.set(i, j, Complex64::new(re, im));
                m.set(j, i, Complex64::new(re, -im));
            }
        }
        m
    })
}

fn det(m: &ComplexMatrix) -> Complex64 {
    match m.rows() {
        1 => m.get(0, 0),
        2 => m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0),
        3 => {
            let g = |i, j| m.get(i, j);
            g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1)) - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
                + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0))
        }
        _ => unreachable!(),
    }
}

fn indicator() -> impl Strategy<Value = Indicator> + Clone {
    prop::sample::select(vec![Indicator::Pass, Indicator::Unavailable, Indicator::Fail])
}

fn per_dim<T: Strategy + Clone>(s: T) -> impl Strategy<Value = PerDim<T::Value>> {
    (s.clone(), s.clone(), s).prop_map(|(a, b, c)| PerDim::new(a, b, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn prop_print_parse_round_trip(e in expr_tree()) {
        let text = e.to_string();
        let back = parse_expr(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        prop_assert_eq!(back, e, "{}", text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn prop_equiv_reflexive(e in expr_tree()) {
        // an error means both sides fail at every probe point, e.g. division by an identically zero term
        if let Ok(same) = equiv_probe(&e, &e, &ProbeConfig::default()) {
            prop_assert!(same, "{}", e);
        }
    }

    #[test]
    fn prop_equiv_symmetric(a in expr_tree(), b in expr_tree()) {
        let cfg = ProbeConfig::default();
        prop_assert_eq!(equiv_probe(&a, &b, &cfg).ok(), equiv_probe(&b, &a, &cfg).ok());
    }

    #[test]
    fn prop_dimension_exponents_add(da in dimension(), db in dimension()) {
        let dims = HashMap::from([("a".to_string(), da), ("b".to_string(), db)]);
        let product = infer_dimension(&parse_expr("a*b").unwrap(), &dims).unwrap();
        let quotient = infer_dimension(&parse_expr("a/b").unwrap(), &dims).unwrap();
        for q in BaseQuantity::ALL {
            prop_assert_eq!(product.exponent(q), da.exponent(q) + db.exponent(q));
            prop_assert_eq!(quotient.exponent(q), da.exponent(q) - db.exponent(q));
        }
        let sum = infer_dimension(&parse_expr("a+b").unwrap(), &dims);
        prop_assert_eq!(sum.is_ok(), da == db);
        prop_assert_eq!(infer_dimension(&parse_expr("a-2*a").unwrap(), &dims).unwrap(), da);
    }

    #[test]
    fn prop_hermitian_invariants(m in (1usize..=3).prop_flat_map(hermitian)) {
        let values = hermitian_eigenvalues(&m, 1e-12).unwrap();
        let tr = m.trace().unwrap().re;
        prop_assert!((values.iter().sum::<f64>() - tr).abs() <= 1e-9 * (1.0 + tr.abs()));
        let d = det(&m).re;
        prop_assert!((values.iter().product::<f64>() - d).abs() <= 1e-8 * (1.0 + d.abs()));
        if m.rows() == 3 {
            // second coefficient of the characteristic polynomial: sum of principal 2x2 minors
            let g = |i, j| m.get(i, j);
            let minors = (g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0)) + (g(0, 0) * g(2, 2) - g(0, 2) * g(2, 0))
                + (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1));
            let e2 = values[0] * values[1] + values[0] * values[2] + values[1] * values[2];
            prop_assert!((e2 - minors.re).abs() <= 1e-8 * (1.0 + minors.re.abs()));
        }
        for w in values.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
    }
}

fn density_claim(m: &ComplexMatrix) -> SampleRecord {
    SampleRecord::adhoc("Give the state.", format!("@claim{{kind=density_matrix, m={m}}}"))
}

fn p3(ses: &Ses, record: &SampleRecord) -> Indicator {
    let claims = ses.extract(&record.answer);
    ses.run_check(CheckId::P3, &claims, record).status
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn prop_p3_accepts_mixtures_and_rejects_shifted(
        (raw, weights, shift) in (2usize..=4).prop_flat_map(|n| {
            (hermitian(n), prop::collection::vec(0.0f64..1.0, n), 0..n)
        }),
    ) {
        let n = raw.rows();
        let v = hermitian_eigen(&raw, 1e-12).unwrap().vectors;
        let total: f64 = weights.iter().sum::<f64>() + 1e-9;
        let lambda: Vec<f64> = weights.iter().map(|w| (w + 1e-9 / n as f64) / total).collect();
        let rebuild = |diag: &[f64]| {
            let d = ComplexMatrix::diagonal(&diag.iter().map(|x| Complex64::new(*x, 0.0)).collect::<Vec<_>>());
            v.matmul(&d).unwrap().matmul(&v.dagger()).unwrap()
        };
        let ses = Ses::default();
        prop_assert_eq!(p3(&ses, &density_claim(&rebuild(&lambda))), Indicator::Pass);
        let mut shifted = lambda.clone();
        shifted[shift] -= 0.05;
        prop_assert_eq!(p3(&ses, &density_claim(&rebuild(&shifted))), Indicator::Fail);
    }

    #[test]
    fn prop_fusion_bounds_and_monotonicity(
        v in per_dim(indicator()),
        s in per_dim(0.0f64..=1.0),
        w in per_dim(0.0f64..=1.0),
        bump in per_dim(0.0f64..=1.0),
        eps in 0.001f64..0.499,
    ) {
        let lambda = LambdaMap::new(eps).unwrap();
        let fused = fuse(&v, &s, &lambda);
        let r = aggregate(&w, &fused);
        prop_assert!((0.0..=3.0).contains(&r));
        for (dim, x) in v.iter() {
            let (sk, fk) = (*s.get(dim), *fused.get(dim));
            prop_assert!((0.0..=1.0).contains(&fk));
            match x {
                Indicator::Pass => prop_assert_eq!(fk, 1.0),
                Indicator::Unavailable => prop_assert_eq!(fk, sk),
                Indicator::Fail => {}
            }
        }
        let higher = s.map(|dim, sk| (sk + bump.get(dim) * (1.0 - sk)).min(1.0));
        prop_assert!(aggregate(&w, &fuse(&v, &higher, &lambda)) >= r);
    }

    #[test]
    fn prop_flipping_pass_to_fail_lowers_fused(sk in 0.0f64..0.999_999, eps in 0.001f64..0.499) {
        let lambda = LambdaMap::new(eps).unwrap();
        let s = PerDim::splat(sk);
        let pass = fuse(&PerDim::splat(Indicator::Pass), &s, &lambda);
        let fail = fuse(&PerDim::splat(Indicator::Fail), &s, &lambda);
        for dim in qreward_core::ses::EvalDimension::ALL {
            prop_assert!(fail.get(dim) < pass.get(dim));
        }
    }

    #[test]
    fn prop_select_best_invariant_under_affine(
        rewards in prop::collection::vec(0.0f64..3.0, 1..40),
        a in 0.01f64..100.0,
        b in -10.0f64..10.0,
    ) {
        let transformed: Vec<f64> = rewards.iter().map(|r| a * r + b).collect();
        let i = select_best(&rewards);
        prop_assert_eq!(i, select_best(&transformed));
        prop_assert!(rewards.iter().all(|r| *r <= rewards[i]));
        prop_assert!(rewards[..i].iter().all(|r| *r < rewards[i]));
    }
}

fn question_corpus() -> impl Strategy<Value = Vec<SampleRecord>> {
    let words = vec!["spin", "well", "box", "ladder", "qubit", "energy", "state", "trace", "gate", "mass"];
    prop::collection::vec(prop::collection::vec(prop::sample::select(words), 1..6), 1..40).prop_map(|qs| {
        qs.into_iter()
            .enumerate()
            .map(|(i, ws)| {
                let mut r = SampleRecord::adhoc(ws.join(" "), "");
                r.id = format!("q{i:03}");
                r
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn prop_dedup_idempotent_and_separated(records in question_corpus()) {
        let sim = TrigramCosine;
        let once = dedup(records.clone(), DEFAULT_UPSILON, &sim);
        prop_assert_eq!(once.kept.len() + once.dropped.len(), records.len());
        let twice = dedup(once.kept.clone(), DEFAULT_UPSILON, &sim);
        prop_assert_eq!(&twice.kept, &once.kept);
        prop_assert!(twice.dropped.is_empty());
        let emb: Vec<_> = once.kept.iter().map(|r| sim.embed(&r.question)).collect();
        for i in 0..emb.len() {
            for j in i + 1..emb.len() {
                prop_assert!(sim.similarity(&emb[i], &emb[j]) < DEFAULT_UPSILON);
            }
        }
    }
}
