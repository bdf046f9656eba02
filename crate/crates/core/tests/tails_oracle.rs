//! Poisson tails against values from a 200-digit direct summation
//! (mpmath, `mp.dps = 200`), frozen below.

use npfusion::bounds::{
    ln_poisson_right_tail, poisson_left_tail, poisson_pmf, poisson_right_tail,
};
use proptest::prelude::*;

/// (λ, n, P̄(λ, n) = Σ_{j≥n} p, P(λ, n) = Σ_{j≤n} p)
const ORACLE: [(f64, u64, f64, f64); 25] = [
    (0.5, 1, 0.3934693402873665764, 0.90979598956895013541),
    (0.5, 3, 0.014387677966970686644, 0.99824837744370917635),
    (1.0, 2, 0.26424111765711535681, 0.91969860292860580399),
    (1.0, 10, 1.1142547833872067735e-7, 0.99999998995223362431),
    (1.0, 25, 2.4664231717319414359e-26, 1.0),
    (5.0, 5, 0.55950671493478758856, 0.61596065483306311708),
    (5.0, 12, 0.00545309191300935935, 0.99798114837256296518),
    (5.0, 25, 1.5995863984870059676e-10, 0.9999999999695002922),
    (5.0, 40, 8.5500237568428867568e-23, 1.0),
    (15.0, 20, 0.1247812150325248227, 0.9170290899685397679),
    (18.0, 10, 0.9846189027394107134, 0.030366255864161760691),
    (18.0, 40, 5.3365431800314584802e-6, 0.99999769702989984545),
    (50.0, 30, 0.99908317113854392013, 0.0015940273186062903996),
    (50.0, 90, 2.2931829605547389504e-7, 0.99999987554910502798),
    (100.0, 150, 1.8842104660386700135e-6, 0.99999876690558083996),
    (258.06, 258, 0.5097687630006516571, 0.51506010430242527339),
    (258.06, 300, 0.0057854604729816221644, 0.9951189609431043998),
    (258.06, 338, 1.1268444309227051552e-6, 0.99999914959185133696),
    (258.06, 339, 8.5040814866304148849e-7, 0.99999936002591328365),
    (258.06, 480, 4.0779248971384025171e-35, 1.0),
    (1000.0, 1100, 0.00096263040586655716094, 0.99913235903655643791),
    (1000.0, 850, 0.99999947323902268848, 6.2356622097542311769e-7),
    (2817.8, 3000, 0.00034918400183503951095, 0.9996735943446686582),
    (0.1, 8, 2.2693269500714717108e-13, 0.99999999999999748135),
    (30.0, 2, 0.99999999999709913688, 4.501016648012123985e-11),
];

fn rel_err(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}

#[test]
fn right_tail_matches_oracle() {
    for &(lambda, n, right, _) in &ORACLE {
        let got = poisson_right_tail(lambda, n).unwrap();
        assert!(rel_err(got, right) < 1e-9, "P̄({lambda}, {n}) = {got:e}, oracle {right:e}");
    }
}

#[test]
fn left_tail_matches_oracle() {
    for &(lambda, n, _, left) in &ORACLE {
        let got = poisson_left_tail(lambda, n).unwrap();
        if left == 1.0 {
            assert!((got - 1.0).abs() < 1e-12, "P({lambda}, {n}) = {got}");
        } else {
            assert!(rel_err(got, left) < 1e-9, "P({lambda}, {n}) = {got:e}, oracle {left:e}");
        }
    }
}

#[test]
fn pmf_matches_oracle() {
    let got = poisson_pmf(258.06, 258).unwrap();
    assert!(rel_err(got, 0.024828867303076930492) < 1e-12, "{got}");
}

#[test]
fn tail_below_double_range_stays_finite_in_log() {
    let ln = ln_poisson_right_tail(5.0, 400).unwrap();
    assert!(ln.is_finite() && ln < -700.0);
    assert_eq!(poisson_right_tail(5.0, 400).unwrap(), 0.0);
}

#[test]
fn complementarity_on_grid() {
    for lambda in [0.5, 5.0, 258.06] {
        for n in 1..=1000u64 {
            let s = poisson_left_tail(lambda, n - 1).unwrap() + poisson_right_tail(lambda, n).unwrap();
            assert!((s - 1.0).abs() < 1e-12, "λ = {lambda}, n = {n}: {s}");
        }
    }
}

proptest! {
    #[test]
    fn right_tail_decreases_in_n(lambda in 0.05f64..3000.0, n in 0u64..5000) {
        let a = ln_poisson_right_tail(lambda, n).unwrap();
        let b = ln_poisson_right_tail(lambda, n + 1).unwrap();
        // strict once the tail is distinguishable from 1 in double precision
        prop_assert!(b <= a);
        if a < -1e-15 {
            prop_assert!(b < a, "λ = {}, n = {}: {} !< {}", lambda, n, b, a);
        }
    }

    #[test]
    fn right_tail_increases_in_lambda(lambda in 0.05f64..3000.0, bump in 1e-3f64..0.5, n in 1u64..5000) {
        let a = ln_poisson_right_tail(lambda, n).unwrap();
        let b = ln_poisson_right_tail(lambda * (1.0 + bump), n).unwrap();
        prop_assert!(b > a || (a == 0.0 && b == 0.0), "λ = {}, n = {}", lambda, n);
    }

    #[test]
    fn tails_are_probabilities(lambda in 1e-3f64..1e5, n in 0u64..200_000) {
        let r = poisson_right_tail(lambda, n).unwrap();
        let l = poisson_left_tail(lambda, n).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert!((0.0..=1.0).contains(&l));
    }
}
