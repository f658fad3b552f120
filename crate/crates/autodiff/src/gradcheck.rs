use crate::error::EngineError;
use crate::rng::{uniform_index, SplitMix64};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;
use crate::Result;

/// Settings for finite-difference verification. Runs at `f64`.
#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    /// Central-difference step is `step_scale * max(1, |theta|)` per element.
    pub step_scale: f64,
    /// Maximum accepted relative error.
    pub tolerance: f64,
    /// Cap on probed elements per parameter (0 means probe every element).
    pub max_elements_per_param: usize,
    /// Seed for choosing which elements to probe.
    pub seed: u64,
    /// Relative error uses `|a - fd| / max(|a|, |fd|, denom_floor)`, so tiny
    /// gradients are compared on an absolute scale.
    pub denom_floor: f64,
    /// Skip elements whose one-sided difference quotients disagree by more
    /// than half the tolerance. For piecewise-linear kinks (relu, max-pool)
    /// that disagreement bounds the central-difference error exactly, so a
    /// probe straddling a kink is detected and excluded rather than reported
    /// as a gradient bug. Use together with a small `step_scale` so smooth
    /// curvature stays below the threshold.
    pub skip_kinks: bool,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            step_scale: 1e-3,
            tolerance: 1e-4,
            max_elements_per_param: 0,
            seed: 0,
            denom_floor: 1.0,
            skip_kinks: false,
        }
    }
}

/// Worst probed element for one parameter.
#[derive(Debug, Clone)]
pub struct ParamCheck {
    pub name: String,
    pub elements_checked: usize,
    /// Probes excluded by the kink detector (zero unless `skip_kinks`).
    pub elements_skipped: usize,
    pub max_rel_err: f64,
    pub worst_index: usize,
    pub analytic_at_worst: f64,
    pub numeric_at_worst: f64,
}

/// Per-parameter report; passes when every parameter stays under tolerance.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub params: Vec<ParamCheck>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.params.iter().all(|p| p.max_rel_err < self.tolerance)
    }

    pub fn max_rel_err(&self) -> f64 {
        self.params.iter().map(|p| p.max_rel_err).fold(0.0, f64::max)
    }

    pub fn elements_checked(&self) -> usize {
        self.params.iter().map(|p| p.elements_checked).sum()
    }

    /// One human-readable line per parameter.
    pub fn lines(&self) -> Vec<String> {
        self.params
            .iter()
            .map(|p| {
                let skipped = if p.elements_skipped > 0 {
                    format!(" ({} skipped at kinks)", p.elements_skipped)
                } else {
                    String::new()
                };
                format!(
                    "{}: {} elements{skipped}, max rel err {:.3e} (analytic {:.6e}, numeric {:.6e} at [{}]) {}",
                    p.name,
                    p.elements_checked,
                    p.max_rel_err,
                    p.analytic_at_worst,
                    p.numeric_at_worst,
                    p.worst_index,
                    if p.max_rel_err < self.tolerance { "ok" } else { "FAIL" }
                )
            })
            .collect()
    }
}

/// Verifies analytic gradients of `build_loss` against central differences.
///
/// `build_loss` must be deterministic in the parameter values: it is invoked
/// once to record the tape for analytic gradients and twice per probed
/// element for the `(loss(θ+h) - loss(θ-h)) / 2h` quotient.
pub fn grad_check<L>(
    build_loss: L,
    params: &[(&str, &Tensor<f64>)],
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport>
where
    L: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    let mut working: Vec<Tensor<f64>> = params.iter().map(|(_, t)| (*t).clone()).collect();

    // Analytic pass.
    let mut tape = Tape::new();
    let vars: Vec<Var> = working
        .iter()
        .map(|t| tape.leaf_from(t.values(), t.shape(), true))
        .collect::<Result<_>>()?;
    let loss_var = build_loss(&mut tape, &vars)?;
    let loss0 = tape.scalar_value(loss_var);
    if !loss0.is_finite() {
        return Err(EngineError::NonFinite {
            context: "grad_check loss at unperturbed parameters".into(),
            index: 0,
        });
    }
    tape.backward(loss_var)?;
    let analytic: Vec<Vec<f64>> = vars
        .iter()
        .zip(&working)
        .map(|(v, t)| tape.grad(*v).map(|g| g.to_vec()).unwrap_or_else(|| vec![0.0; t.numel()]))
        .collect();
    drop(tape);

    let eval = |working: &[Tensor<f64>]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = working
            .iter()
            .map(|t| tape.leaf_from(t.values(), t.shape(), false))
            .collect::<Result<_>>()?;
        let loss = build_loss(&mut tape, &vars)?;
        Ok(tape.scalar_value(loss))
    };

    let mut rng = SplitMix64::new(cfg.seed);
    let mut report = GradCheckReport {
        tolerance: cfg.tolerance,
        params: Vec::with_capacity(params.len()),
    };

    for k in 0..params.len() {
        let n = working[k].numel();
        let indices: Vec<usize> = if cfg.max_elements_per_param == 0 || n <= cfg.max_elements_per_param {
            (0..n).collect()
        } else {
            let mut order: Vec<usize> = (0..n).collect();
            for i in (1..order.len()).rev() {
                let j = uniform_index(&mut rng, i + 1);
                order.swap(i, j);
            }
            order.truncate(cfg.max_elements_per_param);
            order
        };

        let mut check = ParamCheck {
            name: params[k].0.to_string(),
            elements_checked: 0,
            elements_skipped: 0,
            max_rel_err: 0.0,
            worst_index: 0,
            analytic_at_worst: 0.0,
            numeric_at_worst: 0.0,
        };

        for idx in indices {
            let theta = working[k].values()[idx];
            let h = cfg.step_scale * theta.abs().max(1.0);

            working[k].values_mut()[idx] = theta + h;
            let plus = eval(&working)?;
            working[k].values_mut()[idx] = theta - h;
            let minus = eval(&working)?;
            working[k].values_mut()[idx] = theta;

            if !plus.is_finite() || !minus.is_finite() {
                return Err(EngineError::NonFinite {
                    context: format!("grad_check probe of {} ", params[k].0),
                    index: idx,
                });
            }
            let fd = (plus - minus) / (2.0 * h);
            let a = analytic[k][idx];
            let denom = a.abs().max(fd.abs()).max(cfg.denom_floor);
            if cfg.skip_kinks {
                // one-sided quotients disagreeing by more than the tolerance
                // certify a kink (or extreme curvature) inside the probe span
                let one_sided_gap = ((plus - loss0) - (loss0 - minus)).abs() / h;
                if one_sided_gap / 2.0 > 0.5 * cfg.tolerance * denom {
                    check.elements_skipped += 1;
                    continue;
                }
            }
            check.elements_checked += 1;
            let rel = (a - fd).abs() / denom;
            if rel > check.max_rel_err {
                check.max_rel_err = rel;
                check.worst_index = idx;
                check.analytic_at_worst = a;
                check.numeric_at_worst = fd;
            }
        }
        report.params.push(check);
    }
    Ok(report)
}
