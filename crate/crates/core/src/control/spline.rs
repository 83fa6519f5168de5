//! Natural cubic spline through a strictly increasing set of knots.
//!
//! Each segment is `y(x) = a + b·(x − x_i) + c·(x − x_i)² + d·(x − x_i)³`.
//! The second derivative vanishes at both end knots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplineSegment {
    pub x: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl SplineSegment {
    pub fn value(&self, x: f64) -> f64 {
        let t = x - self.x;
        self.a + t * (self.b + t * (self.c + t * self.d))
    }

    pub fn slope(&self, x: f64) -> f64 {
        let t = x - self.x;
        self.b + t * (2.0 * self.c + 3.0 * t * self.d)
    }

    pub fn curvature(&self, x: f64) -> f64 {
        let t = x - self.x;
        2.0 * self.c + 6.0 * self.d * t
    }
}

/// A fitted spline: ordered segments plus the final knot abscissa.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicSpline {
    segments: Vec<SplineSegment>,
    x_end: f64,
}

impl CubicSpline {
    pub fn segments(&self) -> &[SplineSegment] {
        &self.segments
    }

    pub fn x_start(&self) -> f64 {
        self.segments[0].x
    }

    pub fn x_end(&self) -> f64 {
        self.x_end
    }

    fn segment_for(&self, x: f64) -> &SplineSegment {
        // partition_point returns the count of segments starting at or before x.
        let idx = self.segments.partition_point(|s| s.x <= x);
        &self.segments[idx.saturating_sub(1).min(self.segments.len() - 1)]
    }

    /// Evaluates the spline; outside the knot range the end segments extrapolate.
    pub fn value(&self, x: f64) -> f64 {
        self.segment_for(x).value(x)
    }

    pub fn slope(&self, x: f64) -> f64 {
        self.segment_for(x).slope(x)
    }

    pub fn curvature(&self, x: f64) -> f64 {
        self.segment_for(x).curvature(x)
    }
}

/// Fits a natural cubic spline. Requires at least two knots with strictly
/// increasing, finite abscissae.
pub fn fit_cubic_spline(points: &[(f64, f64)]) -> Result<CubicSpline> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "cubic spline needs at least 2 knots, got {n}"
        )));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::NonFinite("spline knots".into()));
    }
    for w in points.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::InvalidInput(format!(
                "spline knots must be strictly increasing in x ({} then {})",
                w[0].0, w[1].0
            )));
        }
    }

    let h: Vec<f64> = points.windows(2).map(|w| w[1].0 - w[0].0).collect();
    let a: Vec<f64> = points.iter().map(|p| p.1).collect();

    // Tridiagonal system for the quadratic coefficients; c[0] = c[n-1] = 0.
    let mut c = vec![0.0; n];
    if n > 2 {
        let m = n - 2;
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for k in 0..m {
            let i = k + 1;
            diag[k] = 2.0 * (h[i - 1] + h[i]);
            upper[k] = h[i];
            rhs[k] = 3.0 * ((a[i + 1] - a[i]) / h[i] - (a[i] - a[i - 1]) / h[i - 1]);
        }
        // Thomas algorithm; lower[k] = h[k] for row k (k >= 1).
        for k in 1..m {
            let w = h[k] / diag[k - 1];
            diag[k] -= w * upper[k - 1];
            rhs[k] -= w * rhs[k - 1];
        }
        c[m] = rhs[m - 1] / diag[m - 1];
        for k in (0..m - 1).rev() {
            c[k + 1] = (rhs[k] - upper[k] * c[k + 2]) / diag[k];
        }
    }

    let segments = (0..n - 1)
        .map(|i| SplineSegment {
            x: points[i].0,
            a: a[i],
            b: (a[i + 1] - a[i]) / h[i] - h[i] * (2.0 * c[i] + c[i + 1]) / 3.0,
            c: c[i],
            d: (c[i + 1] - c[i]) / (3.0 * h[i]),
        })
        .collect();

    Ok(CubicSpline {
        segments,
        x_end: points[n - 1].0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_give_a_line() {
        let s = fit_cubic_spline(&[(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert_eq!(s.segments().len(), 1);
        let seg = s.segments()[0];
        assert_eq!(seg.a, 0.0);
        assert!((seg.b - 1.0).abs() < 1e-15);
        assert_eq!(seg.c, 0.0);
        assert_eq!(seg.d, 0.0);
    }

    #[test]
    fn collinear_points_stay_linear() {
        let s = fit_cubic_spline(&[(0.0, 0.0), (1.0, 2.0), (2.0, 4.0)]).unwrap();
        for seg in s.segments() {
            assert!((seg.b - 2.0).abs() < 1e-12);
            assert!(seg.c.abs() < 1e-12);
            assert!(seg.d.abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(fit_cubic_spline(&[(0.0, 0.0)]).is_err());
        assert!(fit_cubic_spline(&[(0.0, 0.0), (0.0, 1.0)]).is_err());
        assert!(fit_cubic_spline(&[(1.0, 0.0), (0.0, 1.0)]).is_err());
        assert!(fit_cubic_spline(&[(0.0, f64::NAN), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn knots_interpolated_exactly() {
        let pts = [(0.0, 1.0), (0.7, -2.0), (2.0, 0.5), (3.1, 4.0)];
        let s = fit_cubic_spline(&pts).unwrap();
        for (seg, p) in s.segments().iter().zip(pts.iter()) {
            assert_eq!(seg.a, p.1);
        }
        let last = s.segments().last().unwrap();
        assert!((last.value(3.1) - 4.0).abs() < 1e-12);
        // natural boundary
        assert!(s.curvature(0.0).abs() < 1e-12);
        assert!(last.curvature(3.1).abs() < 1e-12);
    }
}
