use std::fmt;
use std::sync::Arc;

use crate::error::{MfsError, Result};
use crate::Point;

/// Evaluation rule for a user-supplied `(x, y) -> value` field.
pub type FieldRule = Arc<dyn Fn(Point, Point) -> f64 + Send + Sync>;

/// A coefficient or exponent field `(x, y) -> real`, required to be
/// symmetric in its two arguments.
#[derive(Clone)]
pub enum SymmetricField {
    Constant(f64),
    /// `base + amplitude * exp(-(|x-c|^2 + |y-c|^2) / (2 width^2))`.
    Bump {
        base: f64,
        amplitude: f64,
        center: Point,
        width: f64,
    },
    /// Arbitrary rule with declared bounds; symmetry is checked on samples.
    Custom {
        rule: FieldRule,
        lower: f64,
        upper: f64,
    },
}

impl fmt::Debug for SymmetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymmetricField::Constant(c) => write!(f, "Constant({c})"),
            SymmetricField::Bump { base, amplitude, center, width } => {
                write!(f, "Bump {{ base: {base}, amplitude: {amplitude}, center: {center:?}, width: {width} }}")
            }
            SymmetricField::Custom { lower, upper, .. } => {
                write!(f, "Custom {{ lower: {lower}, upper: {upper} }}")
            }
        }
    }
}

fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

impl SymmetricField {
    #[inline]
    pub fn eval(&self, x: Point, y: Point) -> f64 {
        match self {
            SymmetricField::Constant(c) => *c,
            SymmetricField::Bump { base, amplitude, center, width } => {
                let r2 = dist2(x, *center) + dist2(y, *center);
                base + amplitude * (-r2 / (2.0 * width * width)).exp()
            }
            SymmetricField::Custom { rule, .. } => rule(x, y),
        }
    }

    /// Lower and upper bounds of the field over all of `R^N x R^N`.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            SymmetricField::Constant(c) => (*c, *c),
            SymmetricField::Bump { base, amplitude, .. } => {
                if *amplitude >= 0.0 {
                    (*base, base + amplitude)
                } else {
                    (base + amplitude, *base)
                }
            }
            SymmetricField::Custom { lower, upper, .. } => (*lower, *upper),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, SymmetricField::Constant(_))
    }

    /// Check symmetry and declared bounds at one pair.
    pub fn check_at(&self, name: &str, x: Point, y: Point) -> Result<f64> {
        let v = self.eval(x, y);
        if !v.is_finite() {
            return Err(MfsError::Config(format!("field {name} is not finite at {x:?}, {y:?}")));
        }
        if !self.is_constant() {
            let w = self.eval(y, x);
            if (v - w).abs() > 1e-12 * v.abs().max(w.abs()).max(1.0) {
                return Err(MfsError::Config(format!(
                    "field {name} is not symmetric: {name}(x,y)={v} but {name}(y,x)={w} at x={x:?}, y={y:?}"
                )));
            }
        }
        let (lo, hi) = self.bounds();
        if v < lo - 1e-12 || v > hi + 1e-12 {
            return Err(MfsError::Config(format!(
                "field {name}={v} at x={x:?}, y={y:?} lies outside its declared range [{lo}, {hi}]"
            )));
        }
        Ok(v)
    }

    /// Check symmetry on every ordered pair of the supplied points.
    pub fn check_symmetric(&self, name: &str, points: &[Point]) -> Result<()> {
        if self.is_constant() {
            return Ok(());
        }
        for (i, &x) in points.iter().enumerate() {
            for &y in &points[i..] {
                self.check_at(name, x, y)?;
            }
        }
        Ok(())
    }
}
