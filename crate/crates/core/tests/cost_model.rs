use poolplan::cost::{self, Multiplicity, Prevalence};
use proptest::prelude::*;

fn prev(p: f64) -> Prevalence {
    Prevalence::new(p).unwrap()
}

/// Double-double arithmetic: an unevaluated sum `hi + lo` with ~106 bits.
#[derive(Clone, Copy)]
struct Dd(f64, f64);

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    Dd(s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    Dd(p, a.mul_add(b, -p))
}

impl Dd {
    fn from(x: f64) -> Self {
        Dd(x, 0.0)
    }
    fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.0, o.0);
        let t = s.1 + self.1 + o.1;
        two_sum(s.0, t)
    }
    fn neg(self) -> Dd {
        Dd(-self.0, -self.1)
    }
    fn mul(self, o: Dd) -> Dd {
        let p = two_prod(self.0, o.0);
        let t = p.1 + self.0 * o.1 + self.1 * o.0;
        two_sum(p.0, t)
    }
    fn recip_int(n: u32) -> Dd {
        // One Newton step on 1/n.
        let x = 1.0 / f64::from(n);
        let r = Dd::from(1.0).add(two_prod(x, f64::from(n)).neg());
        Dd::from(x).add(Dd::from(r.0 * x))
    }
    fn powi(self, mut e: u32) -> Dd {
        let mut base = self;
        let mut acc = Dd::from(1.0);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            e >>= 1;
        }
        acc
    }
    fn value(self) -> f64 {
        self.0 + self.1
    }
}

/// `1/s + 1 - (1-p)^s` evaluated in double-double with exact `q = 1 - p`.
fn single_cost_dd(p: f64, s: u32) -> f64 {
    let q = two_sum(1.0, -p);
    Dd::recip_int(s).add(Dd::from(1.0)).add(q.powi(s).neg()).value()
}

/// `k/s + p + q (1 - q^(s-1))^k` in double-double.
fn k_cost_dd(p: f64, k: u32, s: u32) -> f64 {
    let q = two_sum(1.0, -p);
    let suspect = Dd::from(1.0).add(q.powi(s - 1).neg());
    Dd::recip_int(s)
        .mul(Dd::from(f64::from(k)))
        .add(Dd::from(p))
        .add(q.mul(suspect.powi(k)))
        .value()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn single_cost_matches_extended_precision() {
    let got = cost::single_pool_cost(prev(0.01), 11).unwrap();
    // 50-digit reference: 0.19557083665037446605...
    assert!(rel(got, 0.195_570_836_650_374_47) < 1e-12);
    assert!(rel(got, single_cost_dd(0.01, 11)) < 1e-12);
}

#[test]
fn cost_model_matches_double_double_oracle() {
    for &p in &[1e-6, 1e-4, 0.001, 0.01112, 0.05, 0.3] {
        for &s in &[2u32, 5, 10, 23, 100, 1000] {
            let c = cost::single_pool_cost(prev(p), s).unwrap();
            assert!(rel(c, single_cost_dd(p, s)) < 1e-12, "p={p} s={s}");
            for k in 1..=4 {
                let c = cost::k_pool_cost(prev(p), Multiplicity::new(k).unwrap(), s).unwrap();
                assert!(rel(c, k_cost_dd(p, k, s)) < 1e-12, "p={p} k={k} s={s}");
            }
        }
    }
}

#[test]
fn paper_point_values() {
    let p = prev(0.01112);
    assert!((cost::single_pool_cost(p, 10).unwrap() - 0.205_797_387_897_985_96).abs() < 1e-14);
    assert!((cost::double_pool_cost(p, 23).unwrap() - 0.145_109_089_936_684_43).abs() < 1e-14);
}

fn central_difference(f: impl Fn(f64) -> f64, s: f64, h: f64) -> f64 {
    (f(s + h) - f(s - h)) / (2.0 * h)
}

#[test]
fn derivatives_match_finite_differences_at_p10() {
    let p = prev(0.01112);
    for s in [2.5, 5.0, 10.0, 23.0, 40.0, 150.0] {
        let fd = central_difference(|x| cost::single_pool_cost_real(p, x).unwrap(), s, 1e-5);
        assert!((cost::single_pool_cost_derivative(p, s).unwrap() - fd).abs() < 1e-6);
        let fd = central_difference(|x| cost::double_pool_cost_real(p, x).unwrap(), s, 1e-5);
        assert!((cost::double_pool_cost_derivative(p, s).unwrap() - fd).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn k1_reduces_to_dorfman(p in 1e-6f64..0.999, s in 1u32..5000) {
        let a = cost::k_pool_cost(prev(p), Multiplicity::SINGLE, s).unwrap();
        let b = cost::single_pool_cost(prev(p), s).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn k2_is_double_pooling(p in 1e-6f64..0.999, s in 2u32..5000) {
        prop_assert_eq!(
            cost::k_pool_cost(prev(p), Multiplicity::DOUBLE, s).unwrap(),
            cost::double_pool_cost(prev(p), s).unwrap()
        );
    }

    #[test]
    fn cost_increases_with_prevalence(
        p in 1e-5f64..0.9,
        bump in 1e-4f64..0.09,
        s in 2u32..2000,
        k in 1u32..6,
    ) {
        let k = Multiplicity::new(k).unwrap();
        let lo = cost::k_pool_cost(prev(p), k, s).unwrap();
        let hi = cost::k_pool_cost(prev(p + bump), k, s).unwrap();
        prop_assert!(hi >= lo - 4.0 * f64::EPSILON, "p={} lo={} hi={}", p, lo, hi);
        // Strict growth is only visible in f64 while q^(s-1) has not
        // vanished against 1; past that the cost is k/s + 1 to the last ulp.
        if (1.0 - p - bump).powf(f64::from(s) - 1.0) > 1e-6 {
            prop_assert!(hi > lo, "p={} lo={} hi={}", p, lo, hi);
        }
    }

    #[test]
    fn cost_is_bounded(p in 1e-9f64..0.999999, s in 2u32..10_000, k in 1u32..8) {
        let c = cost::k_pool_cost(prev(p), Multiplicity::new(k).unwrap(), s).unwrap();
        prop_assert!(c > 0.0 && c < 1.0 + f64::from(k));
    }

    #[test]
    fn cost_tends_to_harmonic_term(s in 2u32..1000, k in 1u32..6) {
        let c = cost::k_pool_cost(prev(1e-12), Multiplicity::new(k).unwrap(), s).unwrap();
        let limit = f64::from(k) / f64::from(s) + 1e-12;
        prop_assert!((c - limit).abs() < 1e-8);
    }
}
