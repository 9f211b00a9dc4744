//! Small verdict statistics shared by the validation report machinery:
//! two-window uniformity ratios and least-squares slope fits.

use serde::Serialize;

use crate::error::{Error, Result};

/// Two-window uniformity check on a series indexed by j.
///
/// Splits the series into the first and last `len / 2` entries (the middle
/// entry is excluded when the length is odd) and compares window maxima. A
/// j-uniform constant passes with ratio near 1; systematic growth in j fails.
#[derive(Debug, Clone, Serialize)]
pub struct TwoWindow {
    pub lower_max: f64,
    pub upper_max: f64,
    pub ratio: f64,
    pub factor: f64,
    pub pass: bool,
}

pub fn two_window(values: &[f64], factor: f64) -> TwoWindow {
    let w = values.len() / 2;
    let lower_max = values[..w.max(1)].iter().cloned().fold(0.0, f64::max);
    let upper_max = values[values.len() - w.max(1)..]
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    let ratio = if lower_max > 0.0 {
        upper_max / lower_max
    } else if upper_max == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    TwoWindow {
        lower_max,
        upper_max,
        ratio,
        factor,
        pass: ratio <= factor,
    }
}

/// Least-squares line fit `y ≈ slope · x + intercept`.
#[derive(Debug, Clone, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    pub points: usize,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    assert_eq!(xs.len(), ys.len());
    let m = xs.len();
    if m < 3 {
        return Err(Error::TooFewFitPoints {
            needed: 3,
            found: m,
        });
    }
    let mf = m as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = mf * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::InvalidParameter(
            "degenerate abscissas in line fit".into(),
        ));
    }
    let slope = (mf * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / mf;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        rms_residual: (ss / mf).sqrt(),
        points: m,
    })
}
