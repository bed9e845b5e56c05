use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::hilbert::Vector;
use crate::priors::PriorSet;

use super::engine::{derived_rng, evaluate, Columns};
use super::report::{frame_id, prior_id, StabilityReport, Verdict, Witness};
use super::search::{prior_pair, search_prior};
use super::SearchConfig;

const SAMPLE_CHUNK: usize = 256;
const SAMPLE_SALT: u64 = 0x0005_A3B1_ED00;

struct Best {
    objective: f64,
    index: usize,
    f: Vec<Complex64>,
    g: Vec<Complex64>,
}

fn best_sampled_pair(frame: &Frame, prior: &PriorSet, cfg: &SearchConfig) -> Option<Best> {
    let cols = Columns::new(frame);
    let field = frame.field();
    let chunks = cfg.sampled_pairs.div_ceil(SAMPLE_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = derived_rng(cfg.seed ^ SAMPLE_SALT, c as u64);
            let mut best: Option<Best> = None;
            for index in c * SAMPLE_CHUNK..((c + 1) * SAMPLE_CHUNK).min(cfg.sampled_pairs) {
                let (f, g) = prior_pair(prior, field, index as u64, &mut rng);
                let objective = evaluate(&cols, &f, &g);
                if best.as_ref().is_none_or(|b| objective > b.objective) {
                    best = Some(Best { objective, index, f, g });
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .reduce(|a, b| if b.objective > a.objective { b } else { a })
}

/// Tests `dq ≤ claimed_bound · dm` on the prior.
///
/// Evaluates `cfg.sampled_pairs` random pairs, then runs the worst-pair
/// ascent unless a witness already exceeds the bound. The verdict is
/// `Refuted` when some witness exceeds `claimed_bound·(1 + tol)`,
/// `Certified` when none does and most restarts converged, and
/// `Inconclusive` otherwise.
pub fn certify_lipschitz(
    frame: &Frame,
    prior: &PriorSet,
    claimed_bound: f64,
    cfg: &SearchConfig,
) -> Result<StabilityReport> {
    if !(claimed_bound.is_finite() && claimed_bound > 0.0) {
        return Err(Error::Spec(format!(
            "claimed bound {claimed_bound} must be positive and finite"
        )));
    }
    cfg.validate()?;
    if frame.dim() != prior.dim() {
        return Err(Error::Dimension {
            left: frame.dim(),
            right: prior.dim(),
        });
    }
    let threshold = claimed_bound * (1.0 + cfg.tol);
    let mut report = StabilityReport::new(frame_id(frame), prior_id(prior));
    report.claimed_bound = Some(claimed_bound);

    if let Some(best) = best_sampled_pair(frame, prior, cfg).filter(|b| b.objective > 0.0) {
        let field = frame.field();
        let w = Witness::evaluate(
            frame,
            Vector::from_raw(field, best.f),
            Vector::from_raw(field, best.g),
            format!("sampled:{}", best.index),
        )?;
        report.offer(w);
    }
    report.mark_stage();

    if report.max_ratio > threshold {
        report
            .notes
            .push("a sampled pair already exceeds the claimed bound; ascent skipped".into());
    } else {
        report = search_prior(frame, prior, cfg, &[], threshold, report)?.report;
    }

    report.verdict = if report.injectivity_violation || report.max_ratio > threshold {
        Verdict::Refuted
    } else if report.restarts > 0 && 2 * report.converged_restarts < report.restarts {
        Verdict::Inconclusive
    } else {
        Verdict::Certified
    };
    Ok(report)
}
