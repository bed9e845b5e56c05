// Incremental pair evaluator and the derivative-free ascent shared by all
// searches.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::frame::Frame;
use crate::hilbert::{quotient_distance_raw, ScalarField};
use crate::priors::{repair_in_place, PriorSet};

use super::SearchConfig;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

// keeps the regularized objective finite when dm vanishes
pub(crate) const DM_FLOOR: f64 = 1e-300;

// quotient distances this small relative to the pair are roundoff
const NOISE_FLOOR: f64 = 1e-8;

const RANDOM_MOVES: usize = 4;

pub(crate) fn derived_rng(seed: u64, k: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// Column-major copy of the conjugated frame coefficients.
pub(crate) struct Columns {
    cols: Vec<Vec<(u32, Complex64)>>,
    len: usize,
    field: ScalarField,
}

impl Columns {
    pub(crate) fn new(frame: &Frame) -> Self {
        let mut cols = vec![Vec::new(); frame.dim()];
        for (k, v) in frame.vectors().iter().enumerate() {
            for (i, c) in v.coeffs().iter().enumerate() {
                if c.re != 0.0 || c.im != 0.0 {
                    cols[i].push((k as u32, c.conj()));
                }
            }
        }
        Columns {
            cols,
            len: frame.len(),
            field: frame.field(),
        }
    }

    fn analysis_into(&self, v: &[Complex64], out: &mut Vec<Complex64>) {
        out.clear();
        out.resize(self.len, ZERO);
        for (i, &x) in v.iter().enumerate() {
            if x.re != 0.0 || x.im != 0.0 {
                for &(k, c) in &self.cols[i] {
                    out[k as usize] += x * c;
                }
            }
        }
    }
}

/// `dm²` from `T(f−g)` and `T(f+g)`.
fn gap_sqr(td: &[Complex64], ts: &[Complex64]) -> f64 {
    let mut acc = 0.0;
    for (p, q) in td.iter().zip(ts) {
        let u = (q + p) * 0.5;
        let v = (q - p) * 0.5;
        let denom = u.norm() + v.norm();
        if denom > 0.0 {
            let gap = (p * q.conj()).re / denom;
            acc += gap * gap;
        }
    }
    acc
}

fn pair_scale(f: &[Complex64], g: &[Complex64]) -> f64 {
    let nf: f64 = f.iter().map(|c| c.norm_sqr()).sum();
    let ng: f64 = g.iter().map(|c| c.norm_sqr()).sum();
    nf.max(ng).sqrt()
}

pub(crate) fn objective(dq: f64, dm: f64, scale: f64) -> f64 {
    if dq <= NOISE_FLOOR * scale {
        0.0
    } else {
        dq / (dm + DM_FLOOR)
    }
}

/// Where a search may move.
pub(crate) enum Domain<'a> {
    /// Pairs in `V_m`: only the first `m` coordinates vary.
    Subspace(usize),
    Prior(&'a PriorSet),
}

impl Domain<'_> {
    fn active(&self, dim: usize) -> usize {
        match self {
            Domain::Subspace(m) => *m,
            Domain::Prior(_) => dim,
        }
    }

    fn scale(&self, i: usize) -> f64 {
        match self {
            Domain::Subspace(_) => 1.0,
            Domain::Prior(p) => p.coordinate_scale(i),
        }
    }

    fn project(&self, v: &mut [Complex64]) -> bool {
        match self {
            Domain::Subspace(_) => true,
            Domain::Prior(p) => repair_in_place(p, v).is_ok(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Outcome {
    pub f: Vec<Complex64>,
    pub g: Vec<Complex64>,
    pub objective: f64,
    pub converged: bool,
    pub history: Vec<f64>,
}

struct State<'a> {
    cols: &'a Columns,
    domain: &'a Domain<'a>,
    f: Vec<Complex64>,
    g: Vec<Complex64>,
    td: Vec<Complex64>,
    ts: Vec<Complex64>,
    obj: f64,
    bf: Vec<Complex64>,
    bg: Vec<Complex64>,
    backup: Vec<(u32, Complex64, Complex64)>,
}

impl<'a> State<'a> {
    fn new(cols: &'a Columns, domain: &'a Domain<'a>, f: Vec<Complex64>, g: Vec<Complex64>) -> Self {
        let mut s = State {
            cols,
            domain,
            bf: f.clone(),
            bg: g.clone(),
            f,
            g,
            td: Vec::new(),
            ts: Vec::new(),
            obj: 0.0,
            backup: Vec::new(),
        };
        s.recompute();
        s
    }

    fn recompute(&mut self) {
        let d: Vec<Complex64> = self.f.iter().zip(&self.g).map(|(a, b)| a - b).collect();
        let s: Vec<Complex64> = self.f.iter().zip(&self.g).map(|(a, b)| a + b).collect();
        self.cols.analysis_into(&d, &mut self.td);
        self.cols.analysis_into(&s, &mut self.ts);
        self.obj = self.eval_current();
    }

    fn eval_current(&self) -> f64 {
        let dq = quotient_distance_raw(self.cols.field, &self.f, &self.g);
        objective(dq, gap_sqr(&self.td, &self.ts).sqrt(), pair_scale(&self.f, &self.g))
    }

    fn normalize(&mut self) {
        let n = self
            .f
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .max(self.g.iter().map(|c| c.norm_sqr()).sum::<f64>())
            .sqrt();
        if n > 0.0 && (n - 1.0).abs() > 1e-12 {
            for c in self.f.iter_mut().chain(self.g.iter_mut()) {
                *c /= n;
            }
            self.bf.copy_from_slice(&self.f);
            self.bg.copy_from_slice(&self.g);
            self.recompute();
        }
    }

    fn apply_changes(&mut self, new: &[Complex64], old: &[Complex64], sign: f64) {
        for (i, (a, b)) in new.iter().zip(old).enumerate() {
            let delta = a - b;
            if delta.re == 0.0 && delta.im == 0.0 {
                continue;
            }
            for &(k, c) in &self.cols.cols[i] {
                let k = k as usize;
                self.backup.push((k as u32, self.td[k], self.ts[k]));
                let x = delta * c;
                self.td[k] += x * sign;
                self.ts[k] += x;
            }
        }
    }

    fn restore(&mut self) {
        while let Some((k, d, s)) = self.backup.pop() {
            self.td[k as usize] = d;
            self.ts[k as usize] = s;
        }
    }

    /// Evaluates the buffered pair `(bf, bg)`; keeps it if it improves.
    fn try_buffers(&mut self, moved_f: bool, moved_g: bool) -> bool {
        if (moved_f && !self.domain.project(&mut self.bf)) || (moved_g && !self.domain.project(&mut self.bg)) {
            self.bf.copy_from_slice(&self.f);
            self.bg.copy_from_slice(&self.g);
            return false;
        }
        let field = self.cols.field;
        let dq = quotient_distance_raw(field, &self.bf, &self.bg);
        let scale = pair_scale(&self.bf, &self.bg);
        self.backup.clear();
        let bf = std::mem::take(&mut self.bf);
        let bg = std::mem::take(&mut self.bg);
        if moved_f {
            let f = std::mem::take(&mut self.f);
            self.apply_changes(&bf, &f, 1.0);
            self.f = f;
        }
        if moved_g {
            let g = std::mem::take(&mut self.g);
            self.apply_changes(&bg, &g, -1.0);
            self.g = g;
        }
        let obj = objective(dq, gap_sqr(&self.td, &self.ts).sqrt(), scale);
        self.bf = bf;
        self.bg = bg;
        if obj > self.obj {
            if moved_f {
                std::mem::swap(&mut self.f, &mut self.bf);
            }
            if moved_g {
                std::mem::swap(&mut self.g, &mut self.bg);
            }
            self.obj = obj;
            self.backup.clear();
            self.bf.copy_from_slice(&self.f);
            self.bg.copy_from_slice(&self.g);
            true
        } else {
            self.restore();
            self.bf.copy_from_slice(&self.f);
            self.bg.copy_from_slice(&self.g);
            false
        }
    }

    fn coordinate_sweep(&mut self, step: f64, stop_above: f64) -> bool {
        let active = self.domain.active(self.f.len());
        let parts: &[Complex64] = match self.cols.field {
            ScalarField::Real => &[Complex64::new(1.0, 0.0)],
            ScalarField::Complex => &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)],
        };
        let mut improved = false;
        for which in 0..2 {
            for i in 0..active {
                let scale = self.domain.scale(i);
                if scale == 0.0 {
                    continue;
                }
                for &unit in parts {
                    for sign in [1.0, -1.0] {
                        let delta = unit * (sign * step * scale);
                        if which == 0 {
                            self.bf[i] += delta;
                        } else {
                            self.bg[i] += delta;
                        }
                        if self.try_buffers(which == 0, which == 1) {
                            improved = true;
                            if self.obj > stop_above {
                                return true;
                            }
                            break;
                        }
                    }
                }
            }
        }
        improved
    }

    fn random_moves<R: Rng>(&mut self, step: f64, rng: &mut R) -> bool {
        let active = self.domain.active(self.f.len());
        let complex = self.cols.field == ScalarField::Complex;
        for _ in 0..RANDOM_MOVES {
            let mut dir: Vec<Complex64> = (0..2 * active)
                .map(|j| {
                    let s = self.domain.scale(j % active);
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = if complex { StandardNormal.sample(rng) } else { 0.0 };
                    Complex64::new(re, im) * s
                })
                .collect();
            let n = dir.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if n == 0.0 {
                return false;
            }
            for c in &mut dir {
                *c *= step / n;
            }
            for i in 0..active {
                self.bf[i] += dir[i];
                self.bg[i] += dir[active + i];
            }
            if self.try_buffers(true, true) {
                return true;
            }
        }
        false
    }
}

/// Derivative-free ascent of `dq/dm` from one starting pair.
pub(crate) fn ascend<R: Rng>(
    cols: &Columns,
    domain: &Domain<'_>,
    f: Vec<Complex64>,
    g: Vec<Complex64>,
    cfg: &SearchConfig,
    rng: &mut R,
    stop_above: f64,
) -> Outcome {
    let mut state = State::new(cols, domain, f, g);
    let mut history = Vec::with_capacity(cfg.max_iters);
    let mut step = cfg.step_init;
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        state.normalize();
        if state.obj > stop_above {
            break;
        }
        let improved = state.coordinate_sweep(step, stop_above) || state.random_moves(step, rng);
        history.push(state.obj);
        if state.obj > stop_above {
            break;
        }
        if !improved {
            step *= cfg.step_shrink;
            if step < cfg.min_step {
                converged = true;
                break;
            }
        }
    }
    Outcome {
        f: state.f,
        g: state.g,
        objective: state.obj,
        converged,
        history,
    }
}

/// Objective for a raw pair without building a search state.
pub(crate) fn evaluate(cols: &Columns, f: &[Complex64], g: &[Complex64]) -> f64 {
    let mut td = Vec::new();
    let mut ts = Vec::new();
    let d: Vec<Complex64> = f.iter().zip(g).map(|(a, b)| a - b).collect();
    let s: Vec<Complex64> = f.iter().zip(g).map(|(a, b)| a + b).collect();
    cols.analysis_into(&d, &mut td);
    cols.analysis_into(&s, &mut ts);
    objective(
        quotient_distance_raw(cols.field, f, g),
        gap_sqr(&td, &ts).sqrt(),
        pair_scale(f, g),
    )
}
