use crate::{Error, Result};

fn check(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Parameter("metric of an empty vector".into()));
    }
    Ok(())
}

/// Root mean squared error.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check(pred, truth)?;
    let sse: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sse / truth.len() as f64).sqrt())
}

/// Mean absolute error.
pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check(pred, truth)?;
    let sae: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum();
    Ok(sae / truth.len() as f64)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population standard deviation (divisor n).
pub fn population_std(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(mae(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 3.5);
        assert!(rmse(&[], &[]).is_err());
        assert!(matches!(mae(&[1.0], &[1.0, 2.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn mean_prediction_gives_std() {
        let t = [1.0, 5.0, 2.0, 8.0, -3.0];
        let m = mean(&t);
        assert!((rmse(&[m; 5], &t).unwrap() - population_std(&t)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn mae_never_exceeds_rmse(v in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..50)) {
            let (p, t): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            prop_assert!(mae(&p, &t).unwrap() <= rmse(&p, &t).unwrap() + 1e-9);
        }
    }
}
