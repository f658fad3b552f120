use std::fs;
use std::path::Path;

use autodiff::rng::SplitMix64;
use autodiff::{grad_check, EngineError, GradCheckConfig};
use pmn_core::{forward_vars, total_loss, AttentionMode, ModelParams, PmnConfig, Variant};

use crate::{runtime, usage, CliError};

/// Default verification geometry: small enough for exhaustive probing.
fn default_geometry() -> PmnConfig {
    PmnConfig {
        num_labels: 4,
        embed_dim: 8,
        seq_len: 20,
        hops: 2,
        conv_channels: [4, 6, 8],
        conv_widths: [9, 5, 3],
        lambda: 1.0,
        ..PmnConfig::default()
    }
}

fn one_hot(rng: &mut SplitMix64, t_len: usize) -> Vec<f64> {
    let mut x = vec![0.0; 4 * t_len];
    for t in 0..t_len {
        let base = autodiff::rng::uniform_index(rng, 4);
        x[base * t_len + t] = 1.0;
    }
    x
}

/// Runs the finite-difference suite over every variant and attention mode.
/// Each run probes at least `min_elements` parameter elements at 64-bit.
pub fn run(
    config: Option<&Path>,
    seeds: u64,
    tolerance: f64,
    min_elements: usize,
) -> Result<(), CliError> {
    let geometry = match config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(usage)?;
            let cfg: PmnConfig = toml::from_str(&text).map_err(usage)?;
            cfg
        }
        None => default_geometry(),
    };
    geometry.validate().map_err(usage)?;

    let combos = [
        (Variant::Pmn, AttentionMode::Sigmoid),
        (Variant::Pmn, AttentionMode::SoftmaxHops),
        (Variant::PmnNoLstm, AttentionMode::Sigmoid),
        (Variant::PmnNoLstm, AttentionMode::SoftmaxHops),
        (Variant::CnnMulti, AttentionMode::Sigmoid),
        (Variant::CnnMulti, AttentionMode::SoftmaxHops),
        (Variant::CnnSingle, AttentionMode::Sigmoid),
        (Variant::CnnSingle, AttentionMode::SoftmaxHops),
    ];

    let mut failures = 0usize;
    for (variant, attention) in combos {
        let cfg = PmnConfig {
            variant,
            attention,
            ..geometry.clone()
        };
        for seed in 0..seeds {
            let params = ModelParams::<f64>::init(&cfg, seed).map_err(usage)?;
            let named = params.named();
            // probe everything when the model is small; otherwise raise the
            // per-parameter cap until the total reaches the floor
            let sizes: Vec<usize> = named.iter().map(|(_, t)| t.numel()).collect();
            let total: usize = sizes.iter().sum();
            let elements_per_param = if total <= 4 * min_elements {
                0
            } else {
                let mut cap = min_elements.div_ceil(named.len());
                while sizes.iter().map(|n| (*n).min(cap)).sum::<usize>() < min_elements {
                    cap *= 2;
                }
                cap
            };
            let mut input_rng = SplitMix64::new(seed ^ 0x1234_5678);
            let x = one_hot(&mut input_rng, cfg.seq_len);
            let labels: Vec<f64> = (0..cfg.head_output_dim())
                .map(|_| f64::from(autodiff::rng::uniform_f64(&mut input_rng) < 0.5))
                .collect();

            let report = grad_check(
                |tape, vars| {
                    let pv = params.vars_from_ordered(vars);
                    let xv = tape.constant(&x, &[4, cfg.seq_len])?;
                    let fwd = forward_vars(tape, &pv, &cfg, xv, false, &mut SplitMix64::new(0))
                        .map_err(|e| EngineError::Contract(e.to_string()))?;
                    total_loss(tape, fwd.y_hat, fwd.w_final, &labels, cfg.lambda)
                        .map_err(|e| EngineError::Contract(e.to_string()))
                },
                &named,
                &GradCheckConfig {
                    tolerance,
                    max_elements_per_param: elements_per_param,
                    seed,
                    step_scale: 1e-6,
                    skip_kinks: true,
                    ..GradCheckConfig::default()
                },
            )
            .map_err(runtime)?;

            let ok = report.passed() && report.elements_checked() >= min_elements;
            println!(
                "gradcheck {variant:?}/{attention:?} seed {seed}: {} elements, max rel err {:.3e} {}",
                report.elements_checked(),
                report.max_rel_err(),
                if ok { "PASS" } else { "FAIL" }
            );
            if !ok {
                failures += 1;
                for line in report.lines() {
                    println!("  {line}");
                }
            }
        }
    }

    if failures > 0 {
        return Err(runtime(format!("{failures} gradient check runs failed")));
    }
    println!("gradcheck: all runs passed");
    Ok(())
}
