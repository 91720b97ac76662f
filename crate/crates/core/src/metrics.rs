//! Site-level and global WMAPE between two consecutive allocations.
//!
//! Both metrics share one denominator: the total number of recipe units of
//! the current day, summed over every recipe and every factory. Values are
//! exact fractions; convert with [`to_f64`] only for reporting.

use crate::error::{Error, Result};
use crate::model::RecipeSiteMatrix;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub type Rational = Ratio<i64>;

/// Sums over many days, whose common denominator outgrows `i64`.
pub type BigRational = num_rational::BigRational;

pub fn to_f64(value: Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

pub fn big_to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

pub fn widen(value: Rational) -> BigRational {
    BigRational::new((*value.numer()).into(), (*value.denom()).into())
}

fn check_dims(prev: &RecipeSiteMatrix, cur: &RecipeSiteMatrix) -> Result<()> {
    if prev.dims() != cur.dims() {
        return Err(Error::DimensionMismatch {
            expected: cur.dims(),
            actual: prev.dims(),
        });
    }
    Ok(())
}

fn denominator(cur: &RecipeSiteMatrix) -> Result<u64> {
    match cur.total() {
        0 => Err(Error::ZeroDenominator),
        d => Ok(d),
    }
}

/// Sum of absolute cell-wise differences.
pub fn site_numerator(prev: &RecipeSiteMatrix, cur: &RecipeSiteMatrix) -> Result<u64> {
    check_dims(prev, cur)?;
    Ok(prev
        .as_slice()
        .iter()
        .zip(cur.as_slice())
        .map(|(&p, &c)| p.abs_diff(c))
        .sum())
}

/// Sum over recipes of the absolute difference in factory-aggregated units.
pub fn global_numerator(prev: &RecipeSiteMatrix, cur: &RecipeSiteMatrix) -> Result<u64> {
    check_dims(prev, cur)?;
    Ok((0..cur.n_recipes())
        .map(|i| {
            let p: u64 = prev.row(i).iter().sum();
            let c: u64 = cur.row(i).iter().sum();
            p.abs_diff(c)
        })
        .sum())
}

fn ratio(num: u64, den: u64) -> Rational {
    Rational::new(num as i64, den as i64)
}

pub fn wmape_site(prev: &RecipeSiteMatrix, cur: &RecipeSiteMatrix) -> Result<Rational> {
    let num = site_numerator(prev, cur)?;
    Ok(ratio(num, denominator(cur)?))
}

pub fn wmape_global(prev: &RecipeSiteMatrix, cur: &RecipeSiteMatrix) -> Result<Rational> {
    let num = global_numerator(prev, cur)?;
    Ok(ratio(num, denominator(cur)?))
}

/// Site and global WMAPE of one transition, with their shared denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WmapePair {
    pub site_numerator: u64,
    pub global_numerator: u64,
    pub denominator: u64,
}

impl WmapePair {
    pub fn between(prev: &RecipeSiteMatrix, cur: &RecipeSiteMatrix) -> Result<WmapePair> {
        Ok(WmapePair {
            site_numerator: site_numerator(prev, cur)?,
            global_numerator: global_numerator(prev, cur)?,
            denominator: denominator(cur)?,
        })
    }

    pub fn site(&self) -> Rational {
        ratio(self.site_numerator, self.denominator)
    }

    pub fn global(&self) -> Rational {
        ratio(self.global_numerator, self.denominator)
    }

    /// Site equals its global lower bound.
    pub fn is_tight(&self) -> bool {
        self.site_numerator == self.global_numerator
    }
}

/// Distance of the site metric above its global lower bound.
pub fn optimality_gap(pair: &WmapePair) -> Rational {
    pair.site() - pair.global()
}

/// Relative reduction `100 * (before - after) / before`.
pub fn improvement_percent(before: Rational, after: Rational) -> Result<Rational> {
    if before.is_zero() {
        return Err(Error::ZeroDenominator);
    }
    Ok((before - after) * Rational::from_integer(100) / before)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Series {
    Site,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub lead_day: i32,
    pub pair: WmapePair,
}

/// Metric values per lead day, ordered toward the final day.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HorizonCurve {
    points: Vec<CurvePoint>,
}

impl HorizonCurve {
    pub fn new(points: Vec<CurvePoint>) -> Result<HorizonCurve> {
        if points.windows(2).any(|w| w[0].lead_day >= w[1].lead_day) {
            return Err(Error::InvalidInstance(
                "curve lead days must be strictly increasing".into(),
            ));
        }
        Ok(HorizonCurve { points })
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self, series: Series) -> Vec<Rational> {
        self.points
            .iter()
            .map(|p| match series {
                Series::Site => p.pair.site(),
                Series::Global => p.pair.global(),
            })
            .collect()
    }
}

/// Unit-width rectangle sum of one series.
pub fn horizon_area(curve: &HorizonCurve, series: Series) -> Result<BigRational> {
    if curve.is_empty() {
        return Err(Error::EmptyCurve);
    }
    Ok(curve
        .values(series)
        .into_iter()
        .fold(BigRational::zero(), |acc, v| acc + widen(v)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[[u64; 3]]) -> RecipeSiteMatrix {
        RecipeSiteMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identical_matrices_have_zero_error() {
        let a = m(&[[1, 2, 3], [0, 1, 0]]);
        assert!(wmape_site(&a, &a).unwrap().is_zero());
        assert!(wmape_global(&a, &a).unwrap().is_zero());
        let pair = WmapePair::between(&a, &a).unwrap();
        assert!(optimality_gap(&pair).is_zero());
    }

    #[test]
    fn reallocation_leaves_global_unchanged() {
        let prev = m(&[[2, 1, 0], [0, 3, 1]]);
        let a = m(&[[1, 1, 1], [1, 1, 2]]);
        let b = m(&[[0, 0, 3], [4, 0, 0]]);
        assert_eq!(
            wmape_global(&prev, &a).unwrap(),
            wmape_global(&prev, &b).unwrap()
        );
        assert_ne!(
            wmape_site(&prev, &a).unwrap(),
            wmape_site(&prev, &b).unwrap()
        );
    }

    #[test]
    fn errors() {
        let a = m(&[[1, 0, 0]]);
        let z = m(&[[0, 0, 0]]);
        let other = RecipeSiteMatrix::zeros(2, 3);
        assert!(matches!(wmape_site(&a, &z), Err(Error::ZeroDenominator)));
        assert!(matches!(
            wmape_global(&other, &a),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(improvement_percent(Rational::zero(), Rational::zero()).is_err());
    }

    #[test]
    fn improvement() {
        let r = |n, d| Rational::new(n, d);
        assert_eq!(improvement_percent(r(2, 10), r(1, 10)).unwrap(), r(50, 1));
        assert!(improvement_percent(r(3, 7), r(3, 7)).unwrap().is_zero());
        let p = to_f64(improvement_percent(r(74, 1000), r(54, 1000)).unwrap());
        assert!((p - 27.027).abs() < 1e-3);
    }

    fn curve(values: &[u64]) -> HorizonCurve {
        let points = values
            .iter()
            .enumerate()
            .map(|(k, &v)| CurvePoint {
                lead_day: -18 + k as i32,
                pair: WmapePair {
                    site_numerator: v,
                    global_numerator: 0,
                    denominator: 10,
                },
            })
            .collect();
        HorizonCurve::new(points).unwrap()
    }

    #[test]
    fn area_is_rectangle_sum() {
        assert_eq!(
            horizon_area(&curve(&[3; 6]), Series::Site).unwrap(),
            widen(Rational::new(18, 10))
        );
        assert!(horizon_area(&curve(&[3; 6]), Series::Global)
            .unwrap()
            .is_zero());
        // ramp 1..=5 over denominator 10: (1+2+3+4+5)/10
        assert_eq!(
            horizon_area(&curve(&[1, 2, 3, 4, 5]), Series::Site).unwrap(),
            widen(Rational::new(3, 2))
        );
        assert!(matches!(
            horizon_area(&HorizonCurve::default(), Series::Site),
            Err(Error::EmptyCurve)
        ));
    }

    #[test]
    fn area_with_coprime_denominators() {
        let primes = [
            9973u64, 9967, 9949, 9941, 9931, 9929, 9923, 9907, 9901, 9887, 9883, 9871, 9859, 9851,
            9839, 9833,
        ];
        let points = primes
            .iter()
            .enumerate()
            .map(|(k, &d)| CurvePoint {
                lead_day: -18 + k as i32,
                pair: WmapePair {
                    site_numerator: 1,
                    global_numerator: 1,
                    denominator: d,
                },
            })
            .collect();
        let area = horizon_area(&HorizonCurve::new(points).unwrap(), Series::Site).unwrap();
        let expect: f64 = primes.iter().map(|&d| 1.0 / d as f64).sum();
        assert!((big_to_f64(&area) - expect).abs() < 1e-12);
    }

    #[test]
    fn curve_requires_increasing_days() {
        let p = CurvePoint {
            lead_day: -4,
            pair: WmapePair {
                site_numerator: 0,
                global_numerator: 0,
                denominator: 1,
            },
        };
        assert!(HorizonCurve::new(vec![p, p]).is_err());
    }
}
