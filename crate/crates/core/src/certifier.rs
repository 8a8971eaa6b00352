//! The implied bound and certificates for a given `rho`.

use std::fmt::Write as _;

use crate::constraints::{ConstraintReport, Evaluation, Kind, Mode, Tolerances};
use crate::error::Error;
use crate::params::ParameterSet;
use crate::sum::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub tolerances: Tolerances,
    /// Accepted shortfall of `lhs` below `rhs`.
    pub certify_margin: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            certify_margin: 0.0,
        }
    }
}

/// The scalars behind a certificate, kept for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantities {
    pub gamma: f64,
    pub h_a: f64,
    pub h_b: f64,
    pub chi: f64,
    pub sum_alpha_h_a: f64,
    pub sum_alpha_h_b: f64,
    pub sum_alpha_chi: f64,
    pub delta_x: f64,
    pub delta_y: f64,
    pub delta_z: f64,
}

impl Quantities {
    fn of(ev: &Evaluation) -> Self {
        Self {
            gamma: ev.values.gamma_total,
            h_a: ev.h_a,
            h_b: ev.h_b,
            chi: ev.chi,
            sum_alpha_h_a: ev.sum_alpha_h_a,
            sum_alpha_h_b: ev.sum_alpha_h_b,
            sum_alpha_chi: ev.sum_alpha_chi,
            delta_x: ev.values.delta_x,
            delta_y: ev.values.delta_y,
            delta_z: ev.values.delta_z,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCertificate {
    pub params: ParameterSet,
    pub mode: Mode,
    pub kappa: f64,
    pub rho: f64,
    /// `Gamma + H(B) + rho * Delta_x`.
    pub lhs: f64,
    /// `4 log2(q + 2)`.
    pub rhs: f64,
    /// `lhs` with `H(A)` in place of `H(B)`.
    pub lhs_with_h_a: f64,
    pub rounding_budget: f64,
    pub certify_margin: f64,
    pub quantities: Quantities,
    pub report: ConstraintReport,
    pub passed: bool,
}

impl BoundCertificate {
    pub fn margin(&self) -> f64 {
        self.lhs - self.rhs
    }
}

fn lhs_at(ev: &Evaluation, h: f64, rho: f64) -> (f64, f64) {
    let mut s = NeumaierSum::new();
    s += ev.values.gamma_total;
    s += h;
    s += rho * ev.values.delta_x;
    let budget = ev.values.rounding_budget * (1.0 + rho.abs())
        + s.error_bound()
        + 64.0 * f64::EPSILON * s.magnitude();
    (s.value(), budget)
}

/// Certificate built from an existing evaluation; the caller keeps `ev` and
/// `p` consistent.
pub fn certify_evaluation(
    p: &ParameterSet,
    ev: &Evaluation,
    mode: Mode,
    rho: f64,
    opts: &CertifyOptions,
) -> BoundCertificate {
    let report = ev.report(mode, &opts.tolerances);
    let (lhs, rounding_budget) = lhs_at(ev, ev.h_b, rho);
    let (lhs_with_h_a, _) = lhs_at(ev, ev.h_a, rho);
    let rhs = ev.rhs();
    let passed = report.satisfied()
        && ev.values.delta_x > 0.0
        && rho.is_finite()
        && lhs >= rhs - opts.certify_margin;
    BoundCertificate {
        params: p.clone(),
        mode,
        kappa: p.kappa,
        rho,
        lhs,
        rhs,
        lhs_with_h_a,
        rounding_budget,
        certify_margin: opts.certify_margin,
        quantities: Quantities::of(ev),
        report,
        passed,
    }
}

pub fn certify(p: &ParameterSet, mode: Mode, rho: f64, opts: &CertifyOptions) -> BoundCertificate {
    certify_evaluation(p, &Evaluation::of(p), mode, rho, opts)
}

/// Smallest `rho` (up to a few ulps) for which the certificate inequality
/// holds, ignoring the constraints.
pub fn bound_from_evaluation(ev: &Evaluation) -> Result<f64, Error> {
    let dx = ev.values.delta_x;
    if !(dx > 0.0) {
        return Err(Error::DegenerateCertificate(dx));
    }
    let mut rho = ev.raw_bound();
    let rhs = ev.rhs();
    // Nudge upward so that the evaluated lhs clears rhs exactly.
    for _ in 0..16 {
        if lhs_at(ev, ev.h_b, rho).0 >= rhs {
            break;
        }
        rho = rho.next_up();
    }
    Ok(rho)
}

pub fn implied_bound_with(p: &ParameterSet, mode: Mode, tol: &Tolerances) -> Result<f64, Error> {
    let ev = Evaluation::of(p);
    let report = ev.report(mode, tol);
    if !report.satisfied() {
        return Err(Error::ConditionsViolated(report.failing()));
    }
    bound_from_evaluation(&ev)
}

/// `(4 log2(q + 2) - Gamma - H(B)) / Delta_x` for a parameter set feasible
/// under `mode` with the default tolerances.
pub fn implied_bound(p: &ParameterSet, mode: Mode) -> Result<f64, Error> {
    implied_bound_with(p, mode, &Tolerances::default())
}

/// Human-readable report. The word `CERTIFIED` appears only on a pass.
pub fn render_text(c: &BoundCertificate) -> String {
    let q = &c.quantities;
    let mut s = String::new();
    let _ = writeln!(s, "mode           {}", c.mode);
    let _ = writeln!(s, "kappa          {}", c.kappa);
    let _ = writeln!(s, "rho            {:.7}", c.rho);
    let _ = writeln!(s, "Gamma          {:.7}", q.gamma);
    let _ = writeln!(s, "H(A)           {:.7}", q.h_a);
    let _ = writeln!(s, "H(B)           {:.7}", q.h_b);
    let _ = writeln!(s, "chi            {:.7}", q.chi);
    let _ = writeln!(s, "sum alpha*chi  {:.7}", q.sum_alpha_chi);
    let _ = writeln!(s, "Delta_x        {:.7}", q.delta_x);
    let _ = writeln!(s, "Delta_z        {:.7}", q.delta_z);
    let _ = writeln!(s, "lhs            {:.10}", c.lhs);
    let _ = writeln!(s, "lhs [H(A)]     {:.10}", c.lhs_with_h_a);
    let _ = writeln!(s, "rhs            {:.10}", c.rhs);
    let _ = writeln!(s, "margin         {:.3e}", c.margin());
    let _ = writeln!(s, "error budget   {:.3e}", c.rounding_budget);
    let _ = writeln!(s, "constraints");
    for e in &c.report.entries {
        let rel = match e.kind {
            Kind::Equality => "=",
            Kind::Inequality => ">=",
        };
        let _ = writeln!(
            s,
            "  {:<10} {:>2} 0  residual {:>+.3e}  tol {:.0e}  {}",
            e.name,
            rel,
            e.residual,
            e.tolerance,
            if e.satisfied { "ok" } else { "VIOLATED" }
        );
    }
    let _ = writeln!(s, "  structural: {}", c.report.structural.join(" "));
    if c.passed {
        let _ = writeln!(s, "CERTIFIED omega({}) <= {:.7}", c.kappa, c.rho);
    } else {
        let mut why = c.report.failing();
        if c.lhs < c.rhs - c.certify_margin {
            why.push("lhs < rhs".into());
        }
        let _ = writeln!(s, "REJECTED: {}", why.join(", "));
    }
    s
}

/// One `key=value` per line.
pub fn render_key_values(c: &BoundCertificate) -> String {
    let q = &c.quantities;
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k}={v}");
    };
    kv("mode", c.mode.to_string());
    kv("kappa", c.kappa.to_string());
    kv("rho", c.rho.to_string());
    kv("lhs", c.lhs.to_string());
    kv("lhs_h_a", c.lhs_with_h_a.to_string());
    kv("rhs", c.rhs.to_string());
    kv("margin", c.margin().to_string());
    kv("error_budget", c.rounding_budget.to_string());
    kv("gamma", q.gamma.to_string());
    kv("h_a", q.h_a.to_string());
    kv("h_b", q.h_b.to_string());
    kv("chi", q.chi.to_string());
    kv("sum_alpha_chi", q.sum_alpha_chi.to_string());
    kv("delta_x", q.delta_x.to_string());
    kv("delta_z", q.delta_z.to_string());
    for e in &c.report.entries {
        kv(&format!("residual.{}", e.name), e.residual.to_string());
    }
    kv("verdict", if c.passed { "pass" } else { "fail" }.to_string());
    s
}
