//! The four subcommands. Each returns a report; printing and exit codes
//! are handled by the caller.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use confspheres::conformal::{a_w, conformal_matrix, invariance_residual_weighted, trace_identity_residual};
use confspheres::sampling::Sampler;
use confspheres::spheres::persistent_gap_check;
use confspheres::suite::{constancy_sample, random_invariance_case, run_suite, CheckResult, SuiteOptions};
use confspheres::viscosity::certify;
use confspheres::{critical_lambda, ConformalEval, ScalarField, SphereSweepConfig};

use crate::config::RunConfig;
use crate::render::{csv_num, csv_row, csv_text, indexed, num, nums, Report};

/// Points drawn for the invariance command must map into this ball.
const INVARIANCE_REACH: f64 = 4.0;

fn field(cfg: &RunConfig) -> Result<&ScalarField, String> {
    cfg.field.as_ref().ok_or_else(|| "no field given (use --field or --grid)".to_string())
}

fn sampler(seed: Option<u64>) -> Sampler {
    match seed {
        Some(s) => Sampler::seeded(s),
        None => Sampler::seedless(),
    }
}

#[derive(Debug, Serialize)]
pub struct HessianRow {
    pub point: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub verdict: String,
    pub margin: f64,
    pub trace_residual: Option<f64>,
    pub subsolution_ok: Option<bool>,
    pub supersolution_ok: Option<bool>,
}

#[derive(Debug, Serialize)]
pub struct HessianReport {
    pub field: String,
    pub operator: &'static str,
    pub cone: String,
    pub tol: f64,
    pub epsilons: Option<Vec<f64>>,
    pub rows: Vec<HessianRow>,
}

pub fn hessian(cfg: &RunConfig) -> Result<HessianReport, String> {
    let u = field(cfg)?;
    let evals = cfg
        .points
        .par_iter()
        .map(|y| -> confspheres::Result<(ConformalEval, Option<f64>)> {
            if cfg.aw {
                Ok((a_w(u, y, &cfg.cone)?, None))
            } else {
                let m = conformal_matrix(u, y, cfg.weights)?;
                let e = ConformalEval::from_matrix(m, &cfg.cone, cfg.tol)?;
                Ok((e, Some(trace_identity_residual(u, y)?)))
            }
        })
        .collect::<confspheres::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let visc = match &cfg.epsilons {
        Some(eps) if !cfg.aw => Some(certify(u, &cfg.points, &cfg.cone, eps, cfg.tol).map_err(|e| e.to_string())?),
        Some(_) => return Err("viscosity verdicts need A^u; drop --aw".into()),
        None => None,
    };
    let rows = cfg
        .points
        .iter()
        .zip(evals)
        .enumerate()
        .map(|(i, (y, (e, trace)))| {
            let rec = visc.as_ref().map(|v| &v.records[i]);
            HessianRow {
                point: y.clone(),
                matrix: (0..cfg.n).map(|r| (0..cfg.n).map(|c| e.matrix.get(r, c)).collect()).collect(),
                eigenvalues: e.eigenvalues,
                sigmas: e.sigmas,
                verdict: format!("{:?}", e.cone_class.verdict),
                margin: e.cone_class.margin,
                trace_residual: trace,
                subsolution_ok: rec.map(|r| r.subsolution_ok),
                supersolution_ok: rec.map(|r| r.supersolution_ok),
            }
        })
        .collect();
    Ok(HessianReport {
        field: cfg.field_label.clone(),
        operator: if cfg.aw { "A_w" } else { "A^u" },
        cone: cfg.cone.label(),
        tol: cfg.tol,
        epsilons: cfg.epsilons.clone(),
        rows,
    })
}

impl Report for HessianReport {
    fn table(&self) -> String {
        let mut s = format!("field {}\noperator {}\ncone {}\n", self.field, self.operator, self.cone);
        for r in &self.rows {
            let _ = writeln!(s, "\npoint {}", nums(&r.point));
            let _ = writeln!(s, "matrix");
            for row in &r.matrix {
                let _ = writeln!(s, "  {}", nums(row));
            }
            let _ = writeln!(s, "eigenvalues {}", nums(&r.eigenvalues));
            let _ = writeln!(s, "sigma {}", nums(&r.sigmas));
            let _ = writeln!(s, "verdict {} margin {}", r.verdict, num(r.margin));
            if let Some(t) = r.trace_residual {
                let _ = writeln!(s, "trace_residual {}", num(t));
            }
            if let (Some(sub), Some(sup)) = (r.subsolution_ok, r.supersolution_ok) {
                let _ = writeln!(s, "subsolution {sub} supersolution {sup}");
            }
        }
        s
    }

    fn csv(&self) -> String {
        let n = self.rows.first().map_or(0, |r| r.point.len());
        let mut head = indexed("y", n);
        for i in 1..=n {
            head.extend((1..=n).map(|j| format!("a_{i}{j}")));
        }
        head.extend(indexed("lambda", n));
        head.extend(indexed("sigma", n));
        head.extend(["verdict", "margin", "trace_residual", "subsolution_ok", "supersolution_ok"].map(String::from));
        let mut s = csv_row(&head);
        for r in &self.rows {
            let mut cells: Vec<String> = r.point.iter().map(|v| csv_num(*v)).collect();
            cells.extend(r.matrix.iter().flatten().map(|v| csv_num(*v)));
            cells.extend(r.eigenvalues.iter().map(|v| csv_num(*v)));
            cells.extend(r.sigmas.iter().map(|v| csv_num(*v)));
            cells.push(r.verdict.clone());
            cells.push(csv_num(r.margin));
            cells.push(r.trace_residual.map(csv_num).unwrap_or_default());
            cells.push(r.subsolution_ok.map(|b| b.to_string()).unwrap_or_default());
            cells.push(r.supersolution_ok.map(|b| b.to_string()).unwrap_or_default());
            s.push_str(&csv_row(&cells));
        }
        s
    }

    fn passed(&self) -> bool {
        true
    }
}

#[derive(Debug, Serialize)]
pub struct InvarianceTrial {
    pub word: String,
    pub point: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Serialize)]
pub struct InvarianceReport {
    pub field: String,
    pub trials: usize,
    pub word_length: usize,
    pub seed: Option<u64>,
    pub tol: f64,
    pub max_residual: f64,
    pub worst: InvarianceTrial,
    pub passed: bool,
}

pub fn invariance(cfg: &RunConfig) -> Result<InvarianceReport, String> {
    let u = field(cfg)?;
    if cfg.aw {
        return Err("invariance compares A^u; drop --aw".into());
    }
    if u.contains_grid() {
        return Err("invariance needs off-lattice values; grid fields are not supported".into());
    }
    let mut s = sampler(cfg.seed);
    let cases = (0..cfg.trials)
        .map(|_| random_invariance_case(&mut s, u, cfg.word_length, INVARIANCE_REACH))
        .collect::<confspheres::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let residuals = cases
        .par_iter()
        .map(|(psi, y)| invariance_residual_weighted(u, psi, y, cfg.weights))
        .collect::<confspheres::Result<Vec<f64>>>()
        .map_err(|e| e.to_string())?;
    let (k, max) = residuals
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    Ok(InvarianceReport {
        field: cfg.field_label.clone(),
        trials: cfg.trials,
        word_length: cfg.word_length,
        seed: cfg.seed,
        tol: cfg.tol,
        max_residual: max,
        worst: InvarianceTrial { word: cases[k].0.to_string(), point: cases[k].1.clone(), residual: max },
        passed: max <= cfg.tol,
    })
}

impl Report for InvarianceReport {
    fn table(&self) -> String {
        format!(
            "field {}\ntrials {}\nword_length {}\nseed {}\nmax_residual {}\ntolerance {}\nworst_word {}\nworst_point {}\nverdict {}\n",
            self.field,
            self.trials,
            self.word_length,
            self.seed.map_or("none".to_string(), |s| s.to_string()),
            num(self.max_residual),
            num(self.tol),
            self.worst.word,
            nums(&self.worst.point),
            if self.passed { "PASS" } else { "FAIL" }
        )
    }

    fn csv(&self) -> String {
        let head = ["field", "trials", "word_length", "max_residual", "tolerance", "worst_word", "passed"];
        let mut s = csv_row(&head.map(String::from));
        s.push_str(&csv_row(&[
            csv_text(&self.field),
            self.trials.to_string(),
            self.word_length.to_string(),
            csv_num(self.max_residual),
            csv_num(self.tol),
            csv_text(&self.worst.word),
            self.passed.to_string(),
        ]));
        s
    }

    fn passed(&self) -> bool {
        self.passed
    }
}

#[derive(Debug, Serialize)]
pub struct CenterRow {
    pub center: Vec<f64>,
    pub lambda_start: f64,
    pub lambda_bar: String,
    pub lambda_bar_value: f64,
    pub censored: bool,
    pub witness: Option<Vec<f64>>,
    /// min of the lifted gap times |y−x|^{n−2} at λ̄
    pub c_hat: f64,
    /// min sampled gap over scan radii below λ₀; `None` if the scan has none
    pub below_start_min_gap: Option<f64>,
    pub profile: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize)]
pub struct SpheresReport {
    pub field: String,
    pub delta: f64,
    pub lambda_max: f64,
    pub outer_radius: f64,
    pub tol: f64,
    pub centers: Vec<CenterRow>,
    pub constancy_gap: f64,
    pub passed: bool,
}

pub fn spheres(cfg: &RunConfig) -> Result<SpheresReport, String> {
    let u = field(cfg)?;
    if cfg.aw {
        return Err("spheres needs n >= 3 and A^u; drop --aw".into());
    }
    let mut rows = Vec::with_capacity(cfg.centers.len());
    for x in &cfg.centers {
        let mut sc = SphereSweepConfig::new(x.clone(), cfg.delta, cfg.lambda_max, cfg.outer_radius);
        sc.radial_samples = cfg.radial_samples;
        sc.angular_samples = cfg.angular_samples;
        sc.bisect_tol = cfg.bisect_tol;
        let rep = critical_lambda(u, &sc).map_err(|e| format!("center {x:?}: {e}"))?;
        let (c_hat, _) = persistent_gap_check(u, x, cfg.delta, rep.lambda_bar.value(), &sc)
            .map_err(|e| format!("center {x:?}: {e}"))?;
        let below = rep
            .min_gap_profile
            .iter()
            .filter(|(l, _)| *l < rep.lambda_start)
            .map(|(_, g)| *g)
            .fold(None, |m: Option<f64>, g| Some(m.map_or(g, |m| m.min(g))));
        rows.push(CenterRow {
            center: x.clone(),
            lambda_start: rep.lambda_start,
            lambda_bar: rep.lambda_bar.to_string(),
            lambda_bar_value: rep.lambda_bar.value(),
            censored: rep.lambda_bar.is_censored(),
            witness: rep.witness,
            c_hat,
            below_start_min_gap: below,
            profile: rep.min_gap_profile,
        });
    }
    let per_axis = if cfg.n <= 4 { 9 } else { 3 };
    let constancy_gap = constancy_sample(u, per_axis).map_err(|e| e.to_string())?;
    let passed = rows.iter().all(|r| r.below_start_min_gap.is_none_or(|g| g >= -cfg.tol));
    Ok(SpheresReport {
        field: cfg.field_label.clone(),
        delta: cfg.delta,
        lambda_max: cfg.lambda_max,
        outer_radius: cfg.outer_radius,
        tol: cfg.tol,
        centers: rows,
        constancy_gap,
        passed,
    })
}

impl SpheresReport {
    pub fn profile_csv(&self) -> String {
        let n = self.centers.first().map_or(0, |c| c.center.len());
        let mut head = vec!["center_index".to_string()];
        head.extend(indexed("x", n));
        head.extend(["lambda", "min_gap"].map(String::from));
        let mut s = csv_row(&head);
        for (i, c) in self.centers.iter().enumerate() {
            for (l, g) in &c.profile {
                let mut cells = vec![i.to_string()];
                cells.extend(c.center.iter().map(|v| csv_num(*v)));
                cells.push(csv_num(*l));
                cells.push(csv_num(*g));
                s.push_str(&csv_row(&cells));
            }
        }
        s
    }
}

impl Report for SpheresReport {
    fn table(&self) -> String {
        let mut s = format!(
            "field {}\ndelta {}\nlambda_max {}\nouter_radius {}\n\n",
            self.field,
            num(self.delta),
            num(self.lambda_max),
            num(self.outer_radius)
        );
        let _ = writeln!(
            s,
            "{:<20} {:>14} {:>20} {:>14} {:>16}  witness",
            "center", "lambda_start", "lambda_bar", "c_hat", "below_start_gap"
        );
        for c in &self.centers {
            let _ = writeln!(
                s,
                "{:<20} {:>14} {:>20} {:>14} {:>16}  {}",
                nums(&c.center),
                num(c.lambda_start),
                if c.censored { format!("CENSORED({})", num(c.lambda_bar_value)) } else { num(c.lambda_bar_value) },
                num(c.c_hat),
                c.below_start_min_gap.map_or("-".to_string(), num),
                c.witness.as_deref().map_or("-".to_string(), nums)
            );
        }
        for c in &self.centers {
            let _ = writeln!(s, "\nprofile center {}", nums(&c.center));
            let _ = writeln!(s, "{:>16} {:>20}", "lambda", "min_gap");
            for (l, g) in &c.profile {
                let _ = writeln!(s, "{:>16} {:>20}", num(*l), num(*g));
            }
        }
        let _ = writeln!(s, "\nconstancy_gap {}", num(self.constancy_gap));
        let _ = writeln!(s, "verdict {}", if self.passed { "PASS" } else { "FAIL" });
        s
    }

    fn csv(&self) -> String {
        let n = self.centers.first().map_or(0, |c| c.center.len());
        let mut head = indexed("x", n);
        head.extend(["lambda_start", "lambda_bar", "censored", "c_hat", "below_start_min_gap"].map(String::from));
        head.extend(indexed("witness", n));
        head.extend(["constancy_gap", "lambda", "min_gap"].map(String::from));
        let mut s = csv_row(&head);
        for c in &self.centers {
            for (l, g) in &c.profile {
                let mut cells: Vec<String> = c.center.iter().map(|v| csv_num(*v)).collect();
                cells.push(csv_num(c.lambda_start));
                cells.push(csv_num(c.lambda_bar_value));
                cells.push(c.censored.to_string());
                cells.push(csv_num(c.c_hat));
                cells.push(c.below_start_min_gap.map(csv_num).unwrap_or_default());
                match &c.witness {
                    Some(w) => cells.extend(w.iter().map(|v| csv_num(*v))),
                    None => cells.extend(std::iter::repeat_n(String::new(), n)),
                }
                cells.push(csv_num(self.constancy_gap));
                cells.push(csv_num(*l));
                cells.push(csv_num(*g));
                s.push_str(&csv_row(&cells));
            }
        }
        s
    }

    fn passed(&self) -> bool {
        self.passed
    }
}

#[derive(Debug, Serialize)]
pub struct SuiteReport {
    pub seed: Option<u64>,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

pub fn suite(cfg: &RunConfig) -> Result<SuiteReport, String> {
    let mut opts = SuiteOptions { seed: cfg.seed, invariance_weights: cfg.weights, ..SuiteOptions::default() };
    if cfg.tol_set {
        opts.invariance_tol = cfg.tol;
    }
    let checks = run_suite(&opts).map_err(|e| e.to_string())?;
    let passed = checks.iter().all(|c| c.passed);
    Ok(SuiteReport { seed: cfg.seed, checks, passed })
}

impl Report for SuiteReport {
    fn table(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(s, "{c}");
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        let _ = writeln!(s, "{} of {} checks passed", self.checks.len() - failed, self.checks.len());
        s
    }

    fn csv(&self) -> String {
        let mut s = csv_row(&["id", "name", "passed", "measured", "tolerance", "detail"].map(String::from));
        for c in &self.checks {
            s.push_str(&csv_row(&[
                c.id.to_string(),
                csv_text(&c.name),
                c.passed.to_string(),
                csv_num(c.measured),
                csv_num(c.tolerance),
                csv_text(&c.detail),
            ]));
        }
        s
    }

    fn passed(&self) -> bool {
        self.passed
    }
}
