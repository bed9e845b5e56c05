use crate::error::{Error, Result};
use crate::frame::{measurement_distance, Frame};
use crate::hilbert::{quotient_distance, Vector};

/// `dq = inf_{|α|=1} ‖f − αg‖`, `dm = ‖A(f) − A(g)‖` and their ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioEval {
    pub dq: f64,
    pub dm: f64,
    /// `dq/dm`; `+∞` when `dm = 0 < dq`, `0` when both vanish.
    pub ratio: f64,
    pub injectivity_violation: bool,
}

impl RatioEval {
    pub(crate) fn from_distances(dq: f64, dm: f64) -> Self {
        let (ratio, injectivity_violation) = if dm > 0.0 {
            (dq / dm, false)
        } else if dq > 0.0 {
            (f64::INFINITY, true)
        } else {
            (0.0, false)
        };
        RatioEval {
            dq,
            dm,
            ratio,
            injectivity_violation,
        }
    }
}

pub fn stability_ratio(frame: &Frame, f: &Vector, g: &Vector) -> Result<RatioEval> {
    let dm = measurement_distance(frame, f, g)?;
    if f.is_zero() && g.is_zero() {
        return Err(Error::Degenerate("stability ratio of two zero vectors".into()));
    }
    let dq = quotient_distance(f, g)?;
    Ok(RatioEval::from_distances(dq, dm))
}
