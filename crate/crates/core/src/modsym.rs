//! Modular symbols `<g, alpha>` of a harmonic 1-form given by its periods.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::orbit::OrbitBall;

/// A real harmonic 1-form, represented only by its periods over the
/// homology basis `a1, b1, ..., ag, bg`.
///
/// The L2 norm is not determined by the periods (it depends on the
/// conformal structure), so it is an optional input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodForm {
    pub periods: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_sq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_norm: Option<f64>,
}

impl PeriodForm {
    pub fn new(periods: Vec<f64>) -> Result<Self> {
        let f = Self {
            periods,
            norm_sq: None,
            sup_norm: None,
        };
        f.validate()?;
        Ok(f)
    }

    /// The form dual to the first basis class, `(1, 0, ..., 0)`.
    pub fn unit(rank: usize) -> Self {
        let mut periods = vec![0.0; rank];
        periods[0] = 1.0;
        Self {
            periods,
            norm_sq: None,
            sup_norm: None,
        }
    }

    pub fn with_norm_sq(mut self, norm_sq: f64) -> Result<Self> {
        self.norm_sq = Some(norm_sq);
        self.validate()?;
        Ok(self)
    }

    pub fn with_sup_norm(mut self, sup_norm: f64) -> Result<Self> {
        self.sup_norm = Some(sup_norm);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.periods.is_empty() || self.periods.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidPeriodForm(
                "periods must be finite and nonempty".into(),
            ));
        }
        if self.periods.iter().all(|&p| p == 0.0) {
            return Err(Error::InvalidPeriodForm("periods are all zero".into()));
        }
        for (name, v) in [("norm_sq", self.norm_sq), ("sup_norm", self.sup_norm)] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::InvalidPeriodForm(format!(
                        "{name} must be > 0, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Scales the periods by `c`; a known norm scales by `c^2`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let f = Self {
            periods: self.periods.iter().map(|p| c * p).collect(),
            norm_sq: self.norm_sq.map(|n| c * c * n),
            sup_norm: self.sup_norm.map(|n| c.abs() * n),
        };
        f.validate()?;
        Ok(f)
    }

    /// `<h, alpha>` for a homology class given as an integer vector.
    pub fn pair(&self, class: &[i64]) -> Result<f64> {
        if class.len() != self.periods.len() {
            return Err(Error::DimensionMismatch {
                expected: self.periods.len(),
                got: class.len(),
            });
        }
        Ok(class
            .iter()
            .zip(&self.periods)
            .map(|(&k, &p)| k as f64 * p)
            .sum())
    }
}

/// `<g, alpha>`: the period of `alpha` over the homology class of `g`.
pub fn symbol(e: &GroupElement, f: &PeriodForm) -> Result<f64> {
    f.pair(&e.abelianization)
}

/// `[g, alpha] = sqrt(vol / (2 |alpha|^2 r)) <g, alpha>`.
pub fn normalized_symbol(e: &GroupElement, f: &PeriodForm, r: f64, vol: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "distance must be > 0, got {r}"
        )));
    }
    if !(vol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "volume must be > 0, got {vol}"
        )));
    }
    let norm_sq = f
        .norm_sq
        .ok_or_else(|| Error::InvalidPeriodForm("norm_sq is required".into()))?;
    Ok((vol / (2.0 * norm_sq * r)).sqrt() * symbol(e, f)?)
}

/// `max |<g, alpha>| / (1 + r)` over positive-distance records; 0 if none.
///
/// Bounded in `x` since symbols grow at most linearly in displacement.
pub fn eichler_ratio(ball: &OrbitBall, f: &PeriodForm) -> Result<f64> {
    let mut best = 0.0f64;
    for r in ball.records.iter().filter(|r| r.distance > 0.0) {
        best = best.max(symbol(&r.element, f)?.abs() / (1.0 + r.distance));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{SurfaceGroup, Word};
    use crate::orbit::{enumerate_ball, EnumerationOptions};
    use crate::Point;

    fn element(abel: Vec<i64>) -> GroupElement {
        let g = SurfaceGroup::octagon(2).unwrap();
        let mut e = g.identity_element();
        e.abelianization = abel;
        e
    }

    #[test]
    fn symbol_examples() {
        let g = SurfaceGroup::octagon(2).unwrap();
        let f = PeriodForm::new(vec![0.3, -1.0, 2.0, 0.7]).unwrap();
        assert_eq!(symbol(&g.identity_element(), &f).unwrap(), 0.0);
        let unit = PeriodForm::unit(4);
        assert_eq!(symbol(&element(vec![1, 0, 0, 0]), &unit).unwrap(), 1.0);
        let f = PeriodForm::new(vec![0.5, 0.0, 0.0, 3.0]).unwrap();
        assert_eq!(symbol(&element(vec![2, 0, 0, -1]), &f).unwrap(), -2.0);
        assert!(matches!(
            symbol(&element(vec![1, 0]), &f),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn validation() {
        assert!(PeriodForm::new(vec![0.0; 4]).is_err());
        assert!(PeriodForm::new(vec![]).is_err());
        assert!(PeriodForm::unit(4).with_norm_sq(0.0).is_err());
        assert!(PeriodForm::unit(4).with_sup_norm(-1.0).is_err());
    }

    #[test]
    fn normalized_symbol_examples() {
        let vol = 4.0 * std::f64::consts::PI;
        let f = PeriodForm::unit(4).with_norm_sq(1.0).unwrap();
        let e1 = element(vec![1, 0, 0, 0]);
        let v = normalized_symbol(&e1, &f, 2.0 * std::f64::consts::PI, vol).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        assert_eq!(
            normalized_symbol(&element(vec![0, 1, 0, 0]), &f, 3.0, vol).unwrap(),
            0.0
        );
        let f2 = PeriodForm::unit(4).with_norm_sq(2.0).unwrap();
        let w = normalized_symbol(&e1, &f2, 2.0 * std::f64::consts::PI, vol).unwrap();
        assert!((w * 2f64.sqrt() - v).abs() < 1e-15);
        assert!(normalized_symbol(&e1, &f, 0.0, vol).is_err());
        assert!(normalized_symbol(&e1, &PeriodForm::unit(4), 1.0, vol).is_err());
    }

    #[test]
    fn inverse_and_conjugate() {
        let g = SurfaceGroup::octagon(2).unwrap();
        let f = PeriodForm::new(vec![0.3, -1.0, 2.0, 0.7]).unwrap();
        let w = Word::parse("a1 b2 b2 A2", 2).unwrap();
        let s = Word::parse("b1 a2", 2).unwrap();
        let e = g.element_from_word(&w).unwrap();
        let inv = g.element_from_word(&w.inverse()).unwrap();
        let conj = g
            .element_from_word(&s.concat(&w).concat(&s.inverse()))
            .unwrap();
        let v = symbol(&e, &f).unwrap();
        assert_eq!(symbol(&inv, &f).unwrap(), -v);
        assert_eq!(symbol(&conj, &f).unwrap(), v);
    }

    #[test]
    fn eichler_ratio_trivial_cases() {
        let g = SurfaceGroup::octagon(2).unwrap();
        let i = Point::i();
        let opts = EnumerationOptions::default();
        let tiny = enumerate_ball(&g, &i, &i, 0.5, &opts).unwrap();
        assert_eq!(eichler_ratio(&tiny, &PeriodForm::unit(4)).unwrap(), 0.0);
        let ball = enumerate_ball(&g, &i, &i, 6.0, &opts).unwrap();
        let f = PeriodForm::new(vec![0.3, -1.0, 2.0, 0.7]).unwrap();
        let a = eichler_ratio(&ball, &f).unwrap();
        let b = eichler_ratio(&ball, &f.scaled(2.0).unwrap()).unwrap();
        assert_eq!(b, 2.0 * a);
        assert!(a > 0.0);
    }
}
