use proptest::prelude::*;

use subres_core::scalar::{rat, Rational};
use subres_core::spectrum::{criticality, spectral_constants, SpectrumSpec};

/// Constants recomputed by naive enumeration in integer arithmetic. The
/// exponents are `c_i / den`.
struct Oracle {
    d: u32,
    lambda_tilde: Rational,
    lambda: Rational,
    mu: Option<Rational>,
    epsilon0: Rational,
}

fn vectors(ell: usize, max_total: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..ell {
        let mut next = Vec::new();
        for v in &out {
            let used: u32 = v.iter().sum();
            for k in 0..=(max_total - used) {
                let mut w = v.clone();
                w.push(k);
                next.push(w);
            }
        }
        out = next;
    }
    out.into_iter().filter(|v| v.iter().sum::<u32>() >= 1).collect()
}

fn oracle(c: &[i64], den: i64) -> Oracle {
    let ell = c.len();
    let (c1, cl) = (c[0], c[ell - 1]);
    let d = ((-c1) / (-cl)) as u32;
    let bound = 3 * (d + 2);
    let mut lt: Option<i64> = None;
    let mut mu: Option<i64> = None;
    for s in vectors(ell, bound) {
        let w: i64 = s.iter().zip(c).map(|(&k, &ci)| i64::from(k) * ci).sum();
        for &ci in c {
            let up = -ci + w;
            if up < 0 && lt.is_none_or(|b| up > b) {
                lt = Some(up);
            }
            let down = ci - w;
            if down < 0 && mu.is_none_or(|b| down > b) {
                mu = Some(down);
            }
        }
    }
    let lt = lt.expect("some negative value");
    let baseline = -c1 + i64::from(d + 1) * cl;
    let lam = lt.max(baseline);
    let mut eps0 = rat(-cl, den);
    let cands = [Some(rat(-lam, den * i64::from(d + 2))), mu.map(|m| rat(-m, den * i64::from(d + 1)))];
    for v in cands.into_iter().flatten() {
        if v < eps0 {
            eps0 = v;
        }
    }
    Oracle {
        d,
        lambda_tilde: rat(lt, den),
        lambda: rat(lam, den),
        mu: mu.map(|m| rat(m, den)),
        epsilon0: eps0,
    }
}

fn spec_of(c: &[i64], den: i64) -> SpectrumSpec {
    SpectrumSpec::new(c.iter().map(|&v| rat(v, den)).collect(), rat(1, 1000)).unwrap()
}

#[test]
fn two_block_reference_values() {
    let k = spectral_constants(&spec_of(&[-2, -1], 1));
    assert_eq!(k.d, 2);
    assert_eq!(k.lambda_tilde, rat(-1, 1));
    assert_eq!(k.lambda, rat(-1, 1));
    assert_eq!(k.mu, Some(rat(-1, 1)));
    assert_eq!(k.epsilon0, rat(1, 4));
    let o = oracle(&[-2, -1], 1);
    assert_eq!((o.d, o.lambda_tilde, o.mu, o.epsilon0), (2, rat(-1, 1), Some(rat(-1, 1)), rat(1, 4)));
}

#[test]
fn single_block_criticality_threshold() {
    // -alpha chi / (2 + alpha) with chi = -1, alpha = 1
    let spec = SpectrumSpec::new(vec![rat(-1, 1)], rat(1, 10)).unwrap();
    let c = criticality(&spec, 1, &rat(1, 1)).unwrap();
    assert_eq!(c.epsilon_bound, rat(1, 3));
    assert!(c.ok);
    let at = SpectrumSpec::new(vec![rat(-1, 1)], rat(1, 3)).unwrap();
    assert!(!criticality(&at, 1, &rat(1, 1)).unwrap().ok);
}

fn spectra() -> impl Strategy<Value = (Vec<i64>, i64)> {
    (1usize..=3, 1i64..=4).prop_flat_map(|(ell, den)| {
        (proptest::collection::btree_set(1i64..=14, ell), Just(den)).prop_map(|(set, den)| {
            let mut c: Vec<i64> = set.into_iter().map(|v| -v).collect();
            c.sort();
            (c, den)
        })
    })
}

proptest! {
    #[test]
    fn constants_match_enumeration((c, den) in spectra()) {
        let k = spectral_constants(&spec_of(&c, den));
        let o = oracle(&c, den);
        prop_assert_eq!(k.d, o.d);
        prop_assert_eq!(k.lambda_tilde, o.lambda_tilde);
        prop_assert_eq!(k.lambda, o.lambda);
        prop_assert_eq!(k.mu, o.mu);
        prop_assert_eq!(k.epsilon0, o.epsilon0);
    }

    #[test]
    fn constants_are_negative_and_gap_positive((c, den) in spectra()) {
        let k = spectral_constants(&spec_of(&c, den));
        let zero = rat(0, 1);
        prop_assert!(k.d >= 1);
        prop_assert!(k.lambda < zero);
        prop_assert!(k.mu.as_ref().is_none_or(|m| *m < zero));
        prop_assert!(k.epsilon0 > zero);
    }
}
