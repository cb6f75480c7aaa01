//! Reliability discounting and Dempster's rule restricted to singleton classes
//! plus the whole frame.
//!
//! With focal elements limited to `{k}` and the frame, two opinions combine as
//!
//! ```text
//! C   = sum_{i != j} b1_i b2_j
//! b_k = (b1_k b2_k + b1_k u2 + b2_k u1) / (1 - C)
//! u   = u1 u2 / (1 - C)
//! ```
//!
//! Kernel weights enter through [`discount`]: a measurement seen from a cell at
//! weight `w` keeps `w` of its singleton belief and hands the rest to vacuity.

use crate::error::{Error, Result};
use crate::evidence::BeliefAssignment;
use crate::scalar::Scalar;

fn same_classes<T: Scalar>(a: &BeliefAssignment<T>, b: &BeliefAssignment<T>) -> Result<()> {
    if a.num_classes() != b.num_classes() {
        return Err(Error::ClassMismatch {
            expected: a.num_classes(),
            actual: b.num_classes(),
        });
    }
    Ok(())
}

/// Scales singleton beliefs by the reliability `weight`; the remainder moves to vacuity.
pub fn discount<T: Scalar>(m: &BeliefAssignment<T>, weight: T) -> Result<BeliefAssignment<T>> {
    if !(weight >= T::zero() && weight <= T::one()) {
        return Err(Error::invalid(format!(
            "discount weight {weight} outside [0, 1]"
        )));
    }
    if weight == T::one() {
        return Ok(m.clone());
    }
    let belief = m.belief().iter().map(|&b| weight * b).collect();
    let vacuity = T::one() - weight * (T::one() - m.vacuity());
    Ok(BeliefAssignment::from_raw(belief, vacuity))
}

/// Mass the two opinions assign to mutually exclusive singletons.
pub fn conflict<T: Scalar>(m1: &BeliefAssignment<T>, m2: &BeliefAssignment<T>) -> Result<T> {
    same_classes(m1, m2)?;
    Ok(conflict_unchecked(m1.belief(), m2.belief()))
}

fn conflict_unchecked<T: Scalar>(b1: &[T], b2: &[T]) -> T {
    let mut total = T::zero();
    for (i, &x) in b1.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, &y) in b2.iter().enumerate() {
            if i != j {
                total = total + x * y;
            }
        }
    }
    total
}

/// Dempster combination before the clamp-and-renormalize step.
pub(crate) fn combine_unnormalized<T: Scalar>(
    m1: &BeliefAssignment<T>,
    m2: &BeliefAssignment<T>,
) -> Result<(Vec<T>, T)> {
    same_classes(m1, m2)?;
    let c = conflict_unchecked(m1.belief(), m2.belief());
    let norm = T::one() - c;
    if norm <= T::conflict_floor() {
        return Err(Error::TotalConflict {
            conflict: c.to_f64().unwrap_or(f64::NAN),
        });
    }
    let (u1, u2) = (m1.vacuity(), m2.vacuity());
    let belief = m1
        .belief()
        .iter()
        .zip(m2.belief())
        .map(|(&x, &y)| (x * y + x * u2 + y * u1) / norm)
        .collect();
    Ok((belief, u1 * u2 / norm))
}

/// Clamps components into `[0, 1]` and rescales when the total drifts from one.
fn settle<T: Scalar>(mut belief: Vec<T>, vacuity: T) -> BeliefAssignment<T> {
    let clamp = |x: T| x.max(T::zero()).min(T::one());
    belief.iter_mut().for_each(|b| *b = clamp(*b));
    let mut vacuity = clamp(vacuity);
    let total = belief.iter().fold(vacuity, |acc, &b| acc + b);
    if (total - T::one()).abs() > T::renorm_tolerance() {
        belief.iter_mut().for_each(|b| *b = *b / total);
        vacuity = vacuity / total;
    }
    BeliefAssignment::from_raw(belief, vacuity)
}

pub fn combine<T: Scalar>(
    m1: &BeliefAssignment<T>,
    m2: &BeliefAssignment<T>,
) -> Result<BeliefAssignment<T>> {
    let (belief, vacuity) = combine_unnormalized(m1, m2)?;
    Ok(settle(belief, vacuity))
}

/// Left fold of [`combine`] in the given order.
pub fn fuse_sequence<'a, T, I>(masses: I) -> Result<BeliefAssignment<T>>
where
    T: Scalar,
    I: IntoIterator<Item = &'a BeliefAssignment<T>>,
{
    let mut iter = masses.into_iter();
    let first = iter.next().ok_or(Error::EmptySequence)?.clone();
    iter.try_fold(first, |acc, m| combine(&acc, m))
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;

    fn ba(b: &[f64], u: f64) -> BeliefAssignment<f64> {
        BeliefAssignment::new(b.to_vec(), u).unwrap()
    }

    fn assert_close(a: &BeliefAssignment<f64>, b: &BeliefAssignment<f64>, tol: f64) {
        assert_eq!(a.num_classes(), b.num_classes());
        for (x, y) in a.belief().iter().zip(b.belief()) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
        assert!((a.vacuity() - b.vacuity()).abs() <= tol, "{a:?} vs {b:?}");
    }

    #[test]
    fn discount_examples() {
        let m = ba(&[0.6, 0.2], 0.2);
        assert_eq!(discount(&m, 1.0).unwrap(), m);
        assert_eq!(discount(&m, 0.0).unwrap(), BeliefAssignment::vacuous(2));
        let d = discount(&m, 0.5).unwrap();
        assert_close(&d, &ba(&[0.3, 0.1], 0.6), 1e-15);
        assert!(discount(&m, 1.5).is_err());
        assert!(discount(&m, -0.1).is_err());
        assert!(discount(&m, f64::NAN).is_err());
    }

    #[test]
    fn conflict_examples() {
        let m = ba(&[0.5, 0.0], 0.5);
        assert_eq!(conflict(&m, &BeliefAssignment::vacuous(2)).unwrap(), 0.0);
        assert_eq!(conflict(&m, &ba(&[0.0, 0.5], 0.5)).unwrap(), 0.25);
        assert_eq!(
            conflict(&ba(&[1.0, 0.0], 0.0), &ba(&[0.0, 1.0], 0.0)).unwrap(),
            1.0
        );
        assert!(matches!(
            conflict(&m, &BeliefAssignment::vacuous(3)),
            Err(Error::ClassMismatch {
                expected: 2,
                actual: 3
            })
        ));
    }

    #[test]
    fn combine_examples() {
        let m = ba(&[0.5, 0.1], 0.4);
        assert_close(
            &combine(&m, &BeliefAssignment::vacuous(2)).unwrap(),
            &m,
            1e-12,
        );

        let out = combine(&ba(&[0.5, 0.0], 0.5), &ba(&[0.0, 0.5], 0.5)).unwrap();
        assert_close(&out, &ba(&[1.0 / 3.0, 1.0 / 3.0], 1.0 / 3.0), 1e-15);

        let m = ba(&[0.5, 0.0], 0.5);
        let out = combine(&m, &m).unwrap();
        assert_close(&out, &ba(&[0.75, 0.0], 0.25), 1e-15);
    }

    #[test]
    fn total_conflict_is_an_error() {
        let err = combine(&ba(&[1.0, 0.0], 0.0), &ba(&[0.0, 1.0], 0.0)).unwrap_err();
        assert!(matches!(err, Error::TotalConflict { .. }));
    }

    #[test]
    fn fuse_sequence_examples() {
        let m = ba(&[0.2, 0.3, 0.1], 0.4);
        assert_eq!(fuse_sequence([&m]).unwrap(), m);
        let v = BeliefAssignment::vacuous(3);
        assert_close(&fuse_sequence([&m, &v, &v]).unwrap(), &m, 1e-12);
        assert!(matches!(
            fuse_sequence::<f64, _>(std::iter::empty()),
            Err(Error::EmptySequence)
        ));
    }

    #[test]
    fn fuse_sequence_left_equals_right_fold() {
        let a = ba(&[0.3, 0.1, 0.2], 0.4);
        let b = ba(&[0.05, 0.6, 0.1], 0.25);
        let c = ba(&[0.2, 0.2, 0.5], 0.1);
        let left = fuse_sequence([&a, &b, &c]).unwrap();
        let right = combine(&a, &combine(&b, &c).unwrap()).unwrap();
        assert_close(&left, &right, 1e-9);
    }

    #[test]
    fn works_in_single_precision() {
        let m = BeliefAssignment::new(vec![0.5f32, 0.0], 0.5).unwrap();
        let out = combine(&m, &m).unwrap();
        assert!((out.belief()[0] - 0.75).abs() < 1e-6);
        assert!((out.vacuity() - 0.25).abs() < 1e-6);
    }

    fn opinion(k: usize, min_u: f64) -> impl Strategy<Value = BeliefAssignment<f64>> {
        (prop::collection::vec(0.0f64..1.0, k), min_u..1.0).prop_map(move |(raw, u)| {
            let s: f64 = raw.iter().sum();
            let scale = if s > 0.0 { (1.0 - u) / s } else { 0.0 };
            let b: Vec<f64> = raw.iter().map(|x| x * scale).collect();
            let u = 1.0 - b.iter().sum::<f64>();
            BeliefAssignment::from_raw(b, u)
        })
    }

    fn pair(min_u: f64) -> impl Strategy<Value = (BeliefAssignment<f64>, BeliefAssignment<f64>)> {
        (2usize..=6).prop_flat_map(move |k| (opinion(k, min_u), opinion(k, min_u)))
    }

    proptest! {
        #[test]
        fn combine_commutes((a, b) in pair(0.0)) {
            let ab = combine(&a, &b).unwrap();
            let ba_ = combine(&b, &a).unwrap();
            for (x, y) in ab.belief().iter().zip(ba_.belief()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
            prop_assert!((ab.vacuity() - ba_.vacuity()).abs() <= 1e-12);
        }

        #[test]
        fn combine_stays_normalized_before_clamping((a, b) in pair(0.0)) {
            let (belief, u) = combine_unnormalized(&a, &b).unwrap();
            let total = belief.iter().fold(u, |acc, x| acc + x);
            prop_assert!((total - 1.0).abs() <= 1e-9);
            for x in belief.iter().chain(std::iter::once(&u)) {
                prop_assert!(*x >= -1e-12 && *x <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn vacuous_is_two_sided_identity((a, _b) in pair(0.0)) {
            let v = BeliefAssignment::vacuous(a.num_classes());
            for out in [combine(&a, &v).unwrap(), combine(&v, &a).unwrap()] {
                for (x, y) in out.belief().iter().zip(a.belief()) {
                    prop_assert!((x - y).abs() <= 1e-12);
                }
                prop_assert!((out.vacuity() - a.vacuity()).abs() <= 1e-12);
            }
        }

        #[test]
        fn discount_composes((a, _b) in pair(0.0), w1 in 0.0f64..=1.0, w2 in 0.0f64..=1.0) {
            let once = discount(&a, w1 * w2).unwrap();
            let twice = discount(&discount(&a, w1).unwrap(), w2).unwrap();
            for (x, y) in once.belief().iter().zip(twice.belief()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
            prop_assert!((once.vacuity() - twice.vacuity()).abs() <= 1e-12);
            prop_assert!((once.total_mass() - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn agreeing_opinions_reinforce(
            k in 2usize..6, class in 0usize..6, b1 in 0.0f64..1.0, b2 in 0.0f64..1.0,
        ) {
            // both opinions back the same single class
            let class = class % k;
            let single = |b: f64| {
                let mut v = vec![0.0; k];
                v[class] = b;
                BeliefAssignment::from_raw(v, 1.0 - b)
            };
            let (m1, m2) = (single(b1), single(b2));
            let out = combine(&m1, &m2).unwrap();
            prop_assert!(out.belief()[class] >= b1.max(b2) - 1e-12);
        }
    }

    #[test]
    fn associativity_holds() {
        let mut runner = proptest::test_runner::TestRunner::deterministic();
        let strat =
            (2usize..=6).prop_flat_map(|k| (opinion(k, 0.01), opinion(k, 0.01), opinion(k, 0.01)));
        runner
            .run(&strat, |(a, b, c)| {
                let left = combine(&combine(&a, &b).unwrap(), &c).unwrap();
                let right = combine(&a, &combine(&b, &c).unwrap()).unwrap();
                for (x, y) in left.belief().iter().zip(right.belief()) {
                    prop_assert!((x - y).abs() <= 1e-9);
                }
                prop_assert!((left.vacuity() - right.vacuity()).abs() <= 1e-9);
                Ok(())
            })
            .unwrap();
    }

    #[test]
    fn shared_argmax_alone_does_not_guarantee_reinforcement() {
        // same argmax, but the second opinion spreads heavy mass over rival classes
        let a = ba(&[0.0, 0.94, 0.0], 0.06);
        let b = ba(&[0.336, 0.372, 0.292], 0.0);
        let out = combine(&a, &b).unwrap();
        assert!(out.belief()[1] < a.belief()[1]);
    }

    #[test]
    fn identity_discount_passes_through_exactly() {
        let m = ba(&[0.125, 0.25, 0.5], 0.125);
        let d = discount(&m, 1.0).unwrap();
        assert_abs_diff_eq!(d.vacuity(), 0.125);
        assert_eq!(d.belief(), m.belief());
    }
}
