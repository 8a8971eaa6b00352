//! Multi-start search for parameter sets with a small implied bound.
//!
//! Each start runs a penalty schedule: a simplex phase (random starts only)
//! followed by projected quasi-Newton descent with numerical gradients, with
//! the penalty weight raised between stages. Every result is re-certified
//! from its serialized form before it is returned.

pub mod nelder_mead;
pub mod parametrization;
pub mod polish;

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::certifier::{bound_from_evaluation, certify_evaluation, BoundCertificate, CertifyOptions};
use crate::constraints::{Evaluation, Mode, Tolerances};
use crate::error::Error;
use crate::params::{ParameterSet, DEFAULT_LOWER_BOUND};
use parametrization::Layout;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    PenalizedDirect,
    BisectionFeasibility,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "penalized-direct" | "penalized_direct" => Ok(Strategy::PenalizedDirect),
            "bisection-feasibility" | "bisection_feasibility" => Ok(Strategy::BisectionFeasibility),
            _ => Err(Error::InvalidConfig(format!("unknown strategy '{s}'"))),
        }
    }
}

/// Relative weights of the inequality penalties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyWeights {
    pub global: f64,
    pub component: f64,
    pub e1: f64,
    pub e2: f64,
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        Self {
            global: 1.0,
            component: 1.0,
            e1: 1.0,
            e2: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub mode: Mode,
    pub kappa: f64,
    pub q: u32,
    pub starts: usize,
    /// Quasi-Newton iterations per penalty stage; 0 evaluates the start points
    /// only.
    pub max_iters: usize,
    pub seed: u64,
    pub lower_bound: f64,
    pub penalty: PenaltyWeights,
    pub strategy: Strategy,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Half-width of the multiplicative noise applied to warm starts after
    /// the first.
    pub perturbation: f64,
    pub tolerances: Tolerances,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: Mode::LossRecursive,
            kappa: 2.0,
            q: 5,
            starts: 4,
            max_iters: 150,
            seed: 0,
            lower_bound: DEFAULT_LOWER_BOUND,
            penalty: PenaltyWeights::default(),
            strategy: Strategy::PenalizedDirect,
            threads: None,
            perturbation: 0.01,
            tolerances: Tolerances::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.starts == 0 {
            return bad("starts must be at least 1");
        }
        if !(self.lower_bound > 0.0 && self.lower_bound < 1.0) {
            return bad("lower_bound must lie in (0, 1)");
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return bad("kappa must be a non-negative real");
        }
        if self.q == 0 {
            return bad("q must be positive");
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1");
        }
        if !(self.perturbation >= 0.0 && self.perturbation < 1.0) {
            return bad("perturbation must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub params: ParameterSet,
    pub certificate: BoundCertificate,
    pub feasible: bool,
    /// Variables at the lower bound.
    pub boundary_active: Vec<String>,
    /// Index of the start that produced the result.
    pub start: usize,
}

const SIMPLEX_PENALTY: f64 = 1e2;
const AL_ROUNDS: usize = 12;
/// Inequalities are pushed this far past zero so rounding cannot flip them.
const TARGET_MARGIN: f64 = 2e-9;

struct Problem {
    layout: Layout,
    mode: Mode,
    weights: PenaltyWeights,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Problem {
    fn evaluate(&self, u: &[f64]) -> Evaluation {
        Evaluation::with_component_loss(self.layout.decode(u), self.mode == Mode::LossRecursive)
    }

    /// Weighted inequality residuals (feasible when all are >= 0).
    fn residuals(&self, ev: &Evaluation) -> [f64; 4] {
        let w = &self.weights;
        [
            w.global * ev.global_condition(self.mode).1,
            w.component * ev.component_condition(self.mode).1,
            w.e1 * ev.e1(),
            w.e2 * ev.e2(),
        ]
    }

    fn violation(&self, ev: &Evaluation, margin: f64) -> f64 {
        self.residuals(ev)
            .iter()
            .map(|r| (margin - r).max(0.0).powi(2))
            .sum()
    }

    /// Augmented Lagrangian of `rho` under `residual >= TARGET_MARGIN`.
    fn lagrangian(&self, u: &[f64], lambda: &[f64; 4], mu: f64) -> f64 {
        let ev = self.evaluate(u);
        let rho = if ev.values.delta_x > 1e-12 {
            ev.raw_bound()
        } else {
            1e3
        };
        let mut total = rho;
        for (r, l) in self.residuals(&ev).iter().zip(lambda) {
            let c = r - TARGET_MARGIN;
            total += if l - mu * c > 0.0 {
                -l * c + 0.5 * mu * c * c
            } else {
                -l * l / (2.0 * mu)
            };
        }
        total
    }

    /// `(rho, violation)` at `u`; `rho` is capped when `Delta_x` is not
    /// positive.
    fn parts(&self, u: &[f64]) -> (f64, f64) {
        let ev = self.evaluate(u);
        let rho = if ev.values.delta_x > 1e-12 {
            ev.raw_bound()
        } else {
            1e3
        };
        (rho, self.violation(&ev, TARGET_MARGIN))
    }

    fn penalized(&self, u: &[f64], mu: f64) -> f64 {
        let (rho, v) = self.parts(u);
        rho + mu * v
    }

    /// Pure feasibility objective for a fixed `rho`.
    fn feasibility(&self, u: &[f64], rho: f64) -> f64 {
        let ev = self.evaluate(u);
        let gap = ev.rhs() - (ev.values.gamma_total + ev.h_b + rho * ev.values.delta_x);
        (gap + TARGET_MARGIN).max(0.0).powi(2) + self.violation(&ev, TARGET_MARGIN)
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    params: ParameterSet,
    certificate: BoundCertificate,
    violation: f64,
    start: usize,
}

fn round_trip(p: &ParameterSet) -> ParameterSet {
    ParameterSet::parse(&p.serialize()).unwrap_or_else(|_| p.clone())
}

fn candidate(prob: &Problem, p: ParameterSet, cfg: &SolverConfig, start: usize) -> Candidate {
    let p = round_trip(&p);
    let ev = Evaluation::of(&p);
    let opts = CertifyOptions {
        tolerances: cfg.tolerances,
        certify_margin: 0.0,
    };
    let rho = bound_from_evaluation(&ev).unwrap_or(f64::INFINITY);
    let certificate = certify_evaluation(&p, &ev, cfg.mode, rho, &opts);
    Candidate {
        violation: prob.violation(&ev, 0.0),
        params: p,
        certificate,
        start,
    }
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    match (a.certificate.passed, b.certificate.passed) {
        (true, false) => true,
        (false, true) => false,
        (true, true) => (a.certificate.rho, a.start) < (b.certificate.rho, b.start),
        (false, false) => (a.violation, a.start) < (b.violation, b.start),
    }
}

fn random_start(layout: &Layout, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (lo, hi) = layout.bounds();
    (0..layout.dim())
        .map(|n| {
            if layout.is_alpha_coordinate(n) {
                rng.gen_range(-6.0..0.0)
            } else if n + 2 >= layout.dim() {
                rng.gen_range((0.3f64).ln()..0.0)
            } else {
                rng.gen_range((1e-2f64).ln().max(lo[n])..hi[n])
            }
        })
        .collect()
}

fn run_start(
    prob: &Problem,
    cfg: &SolverConfig,
    start: usize,
    u0: Vec<f64>,
    from_warm: bool,
) -> Candidate {
    let mut u = u0;
    let mut iter = 0;
    if cfg.max_iters > 0 {
        if !from_warm {
            let nm = nelder_mead::minimize(
                |x| prob.penalized(x, SIMPLEX_PENALTY),
                &u,
                &prob.lo,
                &prob.hi,
                &nelder_mead::NelderMeadOptions {
                    max_evals: 40 * cfg.max_iters.max(10) * 4,
                    step: 0.5,
                    f_tol: 1e-10,
                },
            );
            u = nm.x;
        }
        let mut lambda = [0.0; 4];
        let mut mu = if from_warm { 1e3 } else { 10.0 };
        let mut last = f64::INFINITY;
        for _ in 0..AL_ROUNDS {
            let r = polish::minimize(
                |x| prob.lagrangian(x, &lambda, mu),
                &u,
                &prob.lo,
                &prob.hi,
                &polish::PolishOptions {
                    max_iters: cfg.max_iters,
                    ..Default::default()
                },
            );
            u = r.x;
            iter += r.iters;
            let ev = prob.evaluate(&u);
            let res = prob.residuals(&ev);
            let worst = res
                .iter()
                .map(|r| (TARGET_MARGIN - r).max(0.0))
                .fold(0.0, f64::max);
            for (l, r) in lambda.iter_mut().zip(&res) {
                *l = (*l - mu * (r - TARGET_MARGIN)).max(0.0);
            }
            log::info!(
                "start={start} iter={iter} best_rho={:.9} penalty={worst:.3e}",
                ev.raw_bound()
            );
            if worst > 0.25 * last {
                mu = (mu * 10.0).min(1e12);
            }
            last = worst;
            if worst == 0.0 && r.iters < 3 {
                break;
            }
        }
    }
    let mut best = candidate(prob, prob.layout.to_params(&u), cfg, start);
    if !best.certificate.passed && cfg.max_iters > 0 {
        // restoration: drive the violations to zero, ignoring rho
        let r = polish::minimize(
            |x| prob.violation(&prob.evaluate(x), 10.0 * TARGET_MARGIN),
            &u,
            &prob.lo,
            &prob.hi,
            &polish::PolishOptions {
                max_iters: cfg.max_iters,
                f_tol: 0.0,
                ..Default::default()
            },
        );
        u = r.x;
        let c = candidate(prob, prob.layout.to_params(&u), cfg, start);
        if better(&c, &best) {
            best = c;
        }
    }
    if cfg.strategy == Strategy::BisectionFeasibility && best.certificate.passed && cfg.max_iters > 0 {
        best = bisect(prob, cfg, start, u, best);
    }
    best
}

fn bisect(prob: &Problem, cfg: &SolverConfig, start: usize, mut u: Vec<f64>, mut best: Candidate) -> Candidate {
    let mut hi = best.certificate.rho;
    let mut lo = hi - 0.01;
    let opts = CertifyOptions {
        tolerances: cfg.tolerances,
        certify_margin: 0.0,
    };
    for step in 0..24 {
        if hi - lo < 1e-8 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let r = polish::minimize(
            |x| prob.feasibility(x, mid),
            &u,
            &prob.lo,
            &prob.hi,
            &polish::PolishOptions {
                max_iters: cfg.max_iters,
                f_tol: 0.0,
                ..Default::default()
            },
        );
        let p = round_trip(&prob.layout.to_params(&r.x));
        let ev = Evaluation::of(&p);
        let cert = certify_evaluation(&p, &ev, cfg.mode, mid, &opts);
        log::info!("start={start} iter={step} best_rho={hi:.9} penalty={:.3e}", r.f);
        if cert.passed {
            hi = mid;
            u = r.x;
            let c = candidate(prob, p, cfg, start);
            if better(&c, &best) {
                best = c;
            }
        } else {
            lo = mid;
        }
    }
    best
}

/// Runs the configured search. Fails only on an invalid configuration; when
/// nothing feasible is found the least-infeasible point is returned with
/// `feasible == false`.
pub fn optimize(cfg: &SolverConfig, warm_start: Option<&ParameterSet>) -> Result<Outcome, Error> {
    cfg.validate()?;
    let layout = Layout::new(cfg.q, cfg.kappa, cfg.lower_bound);
    let (lo, hi) = layout.bounds();
    let prob = Problem {
        layout,
        mode: cfg.mode,
        weights: cfg.penalty,
        lo,
        hi,
    };
    let warm = warm_start.map(|p| {
        let mut p = p.clone();
        p.kappa = cfg.kappa;
        p.q = cfg.q;
        p
    });
    let base = warm.as_ref().map(|p| prob.layout.encode(p));

    let run = |s: usize| -> Vec<Candidate> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9).wrapping_add(s as u64));
        let (u0, from_warm) = match &base {
            Some(b) if s == 0 => (b.clone(), true),
            Some(b) => {
                let w = cfg.perturbation;
                let u = b
                    .iter()
                    .enumerate()
                    .map(|(n, v)| {
                        let x = v + rng.gen_range(-w..=w).ln_1p();
                        x.clamp(prob.lo[n], prob.hi[n])
                    })
                    .collect();
                (u, true)
            }
            None => (random_start(&prob.layout, &mut rng), false),
        };
        let mut out = Vec::new();
        if s == 0 {
            if let Some(p) = &warm {
                out.push(candidate(&prob, p.clone(), cfg, 0));
            }
        }
        if cfg.max_iters > 0 || out.is_empty() {
            out.push(run_start(&prob, cfg, s, u0, from_warm));
        }
        out
    };

    let candidates: Vec<Candidate> = match cfg.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            pool.install(|| (0..cfg.starts).into_par_iter().flat_map_iter(run).collect())
        }
        None => (0..cfg.starts).into_par_iter().flat_map_iter(run).collect(),
    };

    let best = candidates
        .into_iter()
        .reduce(|a, b| if better(&b, &a) { b } else { a })
        .expect("at least one start");
    Ok(Outcome {
        boundary_active: best.params.boundary_active(cfg.lower_bound),
        feasible: best.certificate.passed,
        params: best.params,
        certificate: best.certificate,
        start: best.start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.starts = 0;
        assert!(cfg.validate().is_err());
        let cfg = SolverConfig {
            lower_bound: 1.0,
            ..Default::default()
        };
        assert!(optimize(&cfg, None).is_err());
        assert_eq!(
            "bisection-feasibility".parse::<Strategy>().unwrap(),
            Strategy::BisectionFeasibility
        );
    }

    #[test]
    fn zero_iterations_return_the_warm_start() {
        let p = ParameterSet::parse(include_str!("../../../../data/table5.cert")).unwrap();
        let cfg = SolverConfig {
            mode: Mode::Legacy,
            starts: 1,
            max_iters: 0,
            ..Default::default()
        };
        let out = optimize(&cfg, Some(&p)).unwrap();
        assert!(out.feasible);
        assert_eq!(out.params, p);
        assert!((out.certificate.rho - 3.251640).abs() < 1e-5);
    }
}
