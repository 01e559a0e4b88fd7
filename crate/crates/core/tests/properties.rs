use std::sync::OnceLock;

use pdmpval::cubature::{shift_vector, CubatureSpec, NodeSource, RuleKind, Shifted, Sobol};
use pdmpval::loan::LoanParams;
use pdmpval::mc::{path_rng, simulate_path};
use pdmpval::model::bias_bound;
use pdmpval::operators::{iterated_integrand, iterated_terms, IteratedPoint};
use pdmpval::parallel::Moments;
use pdmpval::smoothing::{
    heaviside, smoothed_branch_weight, smoothed_drift_loan_unchecked, smoothed_reward_loan,
    unsmoothed_drift_loan,
};
use pdmpval::{estimate_value, SmoothedLoanModel, Substitution};
use proptest::prelude::*;

fn reference_model() -> &'static SmoothedLoanModel {
    static M: OnceLock<SmoothedLoanModel> = OnceLock::new();
    M.get_or_init(|| SmoothedLoanModel::new(LoanParams::reference()).unwrap())
}

fn power_model() -> &'static SmoothedLoanModel {
    static M: OnceLock<SmoothedLoanModel> = OnceLock::new();
    M.get_or_init(|| {
        SmoothedLoanModel::with_substitution(LoanParams::reference(), Substitution::PowerWeighted)
            .unwrap()
    })
}

proptest! {
    #[test]
    fn heaviside_is_a_monotone_symmetric_sigmoid(y in -3.0f64..3.0, dy in 0.0f64..1.0) {
        let h = heaviside(y);
        prop_assert!((0.0..=1.0).contains(&h));
        prop_assert!((h + heaviside(-y) - 1.0).abs() < 1e-15);
        prop_assert!(heaviside(y + dy) >= h);
    }

    #[test]
    fn smoothed_drift_is_nonnegative_and_exact_off_band(y in -105.0f64..5.0, eps in 0.001f64..0.5) {
        let p = LoanParams::reference().with_epsilon(eps);
        let dp = p.drift_params();
        let g = smoothed_drift_loan_unchecked(y, &dp);
        prop_assert!(g >= 0.0);
        prop_assert!(g <= p.premium + 1e-12);
        let off = y < -eps || (y > eps && y <= p.barrier - eps) || y >= p.barrier;
        if off {
            prop_assert_eq!(g, unsmoothed_drift_loan(y, p.premium, p.loan_rate, p.barrier));
        }
        let r = smoothed_reward_loan(y, p.premium, p.barrier, eps);
        prop_assert!((0.0..=p.premium).contains(&r));
    }

    #[test]
    fn branch_weights_form_a_subpartition(u in 0.0f64..1.0, q1 in 0.0f64..1.0, eps in 0.001f64..0.2) {
        let q = [0.0, q1, 1.0];
        let w1 = smoothed_branch_weight(u, 1, &q, eps).unwrap();
        let w2 = smoothed_branch_weight(u, 2, &q, eps).unwrap();
        prop_assert!((0.0..=1.0).contains(&w1) && (0.0..=1.0).contains(&w2));
        prop_assert!(w1 + w2 <= 1.0 + 1e-15);
    }

    #[test]
    fn flow_semigroup_and_monotonicity(y in -99.0f64..3.24, s in 0.0f64..20.0, t in 0.0f64..20.0) {
        let f = reference_model().flow();
        let a = f.flow_at(f.flow_at(y, s), t);
        let b = f.flow_at(y, s + t);
        prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
        prop_assert!(f.flow_at(y, s) >= y);
        prop_assert!(f.flow_at(y, s + t) >= f.flow_at(y, s));
        prop_assert!(f.reward_integral(y, s + t) >= f.reward_integral(y, s) - 1e-12);
    }

    #[test]
    fn integrand_is_nonnegative_and_single_pass(
        u in prop::collection::vec(0.0f64..1.0, 1..5usize).prop_flat_map(|v| {
            let n = v.len();
            prop::collection::vec(0.0f64..1.0, 2 * n)
        }),
        x0 in -99.0f64..3.24,
        power in any::<bool>(),
    ) {
        let m = if power { power_model() } else { reference_model() };
        let p = IteratedPoint::new(u).unwrap();
        let total = iterated_integrand(&p, x0, m);
        prop_assert!(total >= 0.0 && total.is_finite());
        let terms = iterated_terms(&p, x0, m);
        prop_assert!(terms.iter().all(|&t| t >= 0.0));
        let sum: f64 = terms.iter().sum();
        prop_assert!((sum - total).abs() <= 1e-12 * total.max(1.0));
    }

    #[test]
    fn bias_bound_decreases(n in 0usize..600, cl in 0.1f64..10.0, delta in 0.001f64..1.0) {
        let next = bias_bound(n + 1, cl, delta, 1.0);
        prop_assume!(next > f64::MIN_POSITIVE);
        prop_assert!(next < bias_bound(n, cl, delta, 1.0));
    }

    #[test]
    fn moments_merge_like_a_single_pass(xs in prop::collection::vec(-1e3f64..1e3, 2..200), cut in 0usize..200) {
        let cut = cut.min(xs.len());
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        xs[..cut].iter().for_each(|&x| a.push(x));
        xs[cut..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        prop_assert_eq!(a.count, all.count);
        prop_assert!((a.mean - all.mean).abs() < 1e-9);
        prop_assert!((a.sample_variance().unwrap() - all.sample_variance().unwrap()).abs() < 1e-6 * all.sample_variance().unwrap().max(1.0));
    }

    #[test]
    fn shifted_points_stay_in_the_unit_cube(seed in any::<u64>(), rep in 0u64..100, dim in 1usize..16) {
        let rule = Shifted::new(Sobol::new(64, dim).unwrap(), shift_vector(dim, seed, rep)).unwrap();
        let mut ok = true;
        rule.for_each_node(0..64, &mut |u, w| ok &= u.iter().all(|x| (0.0..1.0).contains(x)) && w == 1.0 / 64.0);
        prop_assert!(ok);
    }

    #[test]
    fn path_dividends_are_bounded(seed in any::<u64>(), x0 in -100.0f64..5.0) {
        let p = LoanParams::reference();
        let r = simulate_path(&p, x0, &mut path_rng(seed, 0), 512);
        let lump = (x0 - p.barrier).max(0.0);
        prop_assert!(r.discounted_dividends >= 0.0);
        prop_assert!(r.discounted_dividends <= p.value_bound() + lump + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn estimates_lie_in_the_value_range(seed in any::<u64>(), x0 in -50.0f64..3.24, kind in 0usize..3) {
        let kind = [RuleKind::Mc, RuleKind::Sobol, RuleKind::ScrambledHalton][kind];
        let spec = CubatureSpec { kind, points: 256, dim: 8, seed, replicates: 4 };
        let e = estimate_value(reference_model(), x0, 4, &spec).unwrap();
        let se = e.std_error.unwrap();
        prop_assert!(se >= 0.0);
        prop_assert!(e.value >= -3.0 * se && e.value <= reference_model().params().value_bound() + 3.0 * se);
    }
}
