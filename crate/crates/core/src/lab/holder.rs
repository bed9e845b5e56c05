use std::fmt::Write as _;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::priors::level_witness_pair;

use super::ratio::stability_ratio;
use super::report::SigmaFit;

/// One level of a Hölder scan along the witness pairs `e_1 ± t_m e_m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub m: usize,
    pub dq: f64,
    pub dm: f64,
    pub ratio: f64,
}

/// Exact `dq` and `dm` of the witness pair at every depth in `levels`.
pub fn holder_scan(
    frame: &Frame,
    gamma: f64,
    r: f64,
    c: f64,
    levels: RangeInclusive<usize>,
) -> Result<Vec<ScanRecord>> {
    levels
        .map(|m| {
            let (x, y) = level_witness_pair(m, gamma, r, c, frame.dim(), frame.field())?;
            let e = stability_ratio(frame, &x, &y)?;
            Ok(ScanRecord {
                m,
                dq: e.dq,
                dm: e.dm,
                ratio: e.ratio,
            })
        })
        .collect()
}

/// CSV with header `m,dq,dm,ratio`, floats to 17 significant digits.
pub fn scan_csv(records: &[ScanRecord]) -> String {
    let mut out = String::from("m,dq,dm,ratio\n");
    for r in records {
        writeln!(out, "{},{:.16e},{:.16e},{:.16e}", r.m, r.dq, r.dm, r.ratio).expect("writing to a String");
    }
    out
}

/// Least-squares slope of `log dq` against `log dm`, with the largest
/// absolute residual of the fit.
pub fn holder_fit(records: &[(f64, f64)]) -> Result<SigmaFit> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|(dq, dm)| *dq > 0.0 && *dm > 0.0 && dq.is_finite() && dm.is_finite())
        .map(|(dq, dm)| (dm.ln(), dq.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Fit(format!("{} usable records, need at least 3", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("all measurement distances coincide".into()));
    }
    let sigma = sxy / sxx;
    let intercept = my - sigma * mx;
    let residual = pts
        .iter()
        .map(|p| (p.1 - intercept - sigma * p.0).abs())
        .fold(0.0, f64::max);
    Ok(SigmaFit { sigma, residual })
}
