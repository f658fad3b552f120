//! Finite-difference verification for every tape operation: 20 random
//! instances per op at f64, relative error under 1e-5 (1e-4 for compositions
//! through relu/maxpool, generated away from kink points).

use autodiff::rng::{normal_f64, uniform_f64, uniform_in};
use autodiff::{grad_check, GradCheckConfig, Tape, Tensor, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Tensor<f64> {
    Tensor::vector(&(0..n).map(|_| normal_f64(rng)).collect::<Vec<_>>(), true)
}

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| normal_f64(rng)).collect(), true).unwrap()
}

fn cfg(tolerance: f64, seed: u64) -> GradCheckConfig {
    GradCheckConfig {
        tolerance,
        seed,
        ..GradCheckConfig::default()
    }
}

/// Reduces a vector-valued var to a scalar through a fixed random functional,
/// so the whole Jacobian is exercised.
fn project(tape: &mut Tape<f64>, out: Var, weights: &[f64]) -> autodiff::Result<Var> {
    let shape = tape.shape(out).to_vec();
    let w = tape.constant(weights, &shape)?;
    let prod = tape.mul(out, w)?;
    Ok(tape.sum(prod))
}

fn projection_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| uniform_in(rng, 0.25, 1.75)).collect()
}

#[test]
fn elementwise_ops_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..20 {
        let n = 3 + (trial % 5);
        let a = random_vector(&mut rng, n);
        let b = random_vector(&mut rng, n);
        let w = projection_weights(&mut rng, n);
        let report = grad_check(
            |tape, vars| {
                let sum = tape.add(vars[0], vars[1])?;
                let prod = tape.mul(sum, vars[0])?;
                let scaled = tape.scale(prod, 1.7);
                let sig = tape.sigmoid(scaled);
                let th = tape.tanh(sig);
                project(tape, th, &w)
            },
            &[("a", &a), ("b", &b)],
            &cfg(1e-5, trial as u64),
        )
        .unwrap();
        assert!(report.passed(), "trial {trial}: {}", report.lines().join("\n"));
    }
}

#[test]
fn relu_matches_finite_differences_away_from_kink() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for trial in 0..20 {
        let n = 4 + (trial % 4);
        // keep every element at least 0.05 from the kink at zero
        let values: Vec<f64> = (0..n)
            .map(|_| {
                let v = normal_f64(&mut rng);
                v.signum() * (v.abs() + 0.05)
            })
            .collect();
        let x = Tensor::vector(&values, true);
        let w = projection_weights(&mut rng, n);
        let report = grad_check(
            |tape, vars| {
                let y = tape.relu(vars[0]);
                project(tape, y, &w)
            },
            &[("x", &x)],
            &cfg(1e-4, trial as u64),
        )
        .unwrap();
        assert!(report.passed(), "trial {trial}: {}", report.lines().join("\n"));
    }
}

#[test]
fn matvec_and_affine_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for trial in 0..20 {
        let (m, n) = (2 + trial % 3, 3 + trial % 2);
        let w = random_tensor(&mut rng, &[m, n]);
        let x = random_vector(&mut rng, n);
        let b = random_vector(&mut rng, m);
        let proj = projection_weights(&mut rng, m);
        let report = grad_check(
            |tape, vars| {
                let y = tape.affine(vars[1], vars[0], vars[2])?;
                project(tape, y, &proj)
            },
            &[("w", &w), ("x", &x), ("b", &b)],
            &cfg(1e-5, trial as u64),
        )
        .unwrap();
        assert!(report.passed(), "trial {trial}: {}", report.lines().join("\n"));
    }
}

#[test]
fn affine_two_by_two_matches_scalar_loop_oracle() {
    let w = Tensor::matrix(2, 2, &[1.5, -0.5, 2.0, 0.25], false).unwrap();
    let x = Tensor::vector(&[3.0, -4.0], false);
    let b = Tensor::vector(&[0.1, -0.2], false);
    let mut tape = Tape::new();
    let (wv, xv, bv) = (tape.leaf(&w), tape.leaf(&x), tape.leaf(&b));
    let y = tape.affine(xv, wv, bv).unwrap();

    let mut oracle = [0.0f64; 2];
    for i in 0..2 {
        oracle[i] = b.values()[i];
        for j in 0..2 {
            oracle[i] += w.values()[i * 2 + j] * x.values()[j];
        }
    }
    assert_eq!(tape.value(y), &oracle);

    // identity + zero input special cases
    let mut tape = Tape::new();
    let id = tape.constant(&[1.0, 0.0, 0.0, 1.0], &[2, 2]).unwrap();
    let zero_b = tape.constant(&[0.0, 0.0], &[2]).unwrap();
    let input = tape.constant(&[7.0, -3.0], &[2]).unwrap();
    let y = tape.affine(input, id, zero_b).unwrap();
    assert_eq!(tape.value(y), &[7.0, -3.0]);
    let zeros = tape.constant(&[0.0, 0.0], &[2]).unwrap();
    let bias = tape.constant(&[0.4, 0.6], &[2]).unwrap();
    let y = tape.affine(zeros, id, bias).unwrap();
    assert_eq!(tape.value(y), &[0.4, 0.6]);
}

#[test]
fn conv1d_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for trial in 0..20 {
        let c_in = 1 + trial % 3;
        let c_out = 1 + (trial / 2) % 3;
        let width = [1, 3, 5][trial % 3];
        let len = width + 3 + trial % 4;
        let x = random_tensor(&mut rng, &[c_in, len]);
        let k = random_tensor(&mut rng, &[c_out, c_in, width]);
        let b = random_vector(&mut rng, c_out);
        let proj = projection_weights(&mut rng, c_out * len);
        let report = grad_check(
            |tape, vars| {
                let y = tape.conv1d(vars[0], vars[1], vars[2])?;
                project(tape, y, &proj)
            },
            &[("input", &x), ("kernels", &k), ("bias", &b)],
            &cfg(1e-5, trial as u64),
        )
        .unwrap();
        assert!(report.passed(), "trial {trial}: {}", report.lines().join("\n"));
    }
}

#[test]
fn maxpool_matches_finite_differences_with_clear_gaps() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for trial in 0..20 {
        let (channels, len) = (2 + trial % 3, 4 + trial % 3);
        // spread values so the max has a comfortable margin per channel
        let mut values = Vec::with_capacity(channels * len);
        for _ in 0..channels {
            let mut row: Vec<f64> = (0..len).map(|_| uniform_in(&mut rng, -1.0, 1.0)).collect();
            let at = (uniform_f64(&mut rng) * len as f64) as usize % len;
            row[at] += 3.0;
            values.extend(row);
        }
        let x = Tensor::new(vec![channels, len], values, true).unwrap();
        let proj = projection_weights(&mut rng, channels);
        let report = grad_check(
            |tape, vars| {
                let y = tape.global_maxpool(vars[0])?;
                project(tape, y, &proj)
            },
            &[("x", &x)],
            &cfg(1e-4, trial as u64),
        )
        .unwrap();
        assert!(report.passed(), "trial {trial}: {}", report.lines().join("\n"));
    }
}

#[test]
fn maxpool_tie_subgradient_is_consistent_with_finite_differences() {
    // at a tie [4, 4] the analytic rule routes everything to index 0, while
    // central differences split the mass 0.5/0.5; both are valid subgradients
    // of max and their totals must agree
    let pool_value = |values: &[f64]| {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf_from(values, &[1, 2], false).unwrap();
        let y = tape.global_maxpool(x).unwrap();
        tape.value(y)[0]
    };

    let mut tape = Tape::<f64>::new();
    let x = tape.leaf_from(&[4.0, 4.0], &[1, 2], true).unwrap();
    let y = tape.global_maxpool(x).unwrap();
    let loss = tape.sum(y);
    tape.backward(loss).unwrap();
    let analytic = tape.grad(x).unwrap().to_vec();
    assert_eq!(analytic, &[1.0, 0.0]);

    let h = 1e-5;
    let mut fd = [0.0f64; 2];
    for i in 0..2 {
        let mut plus = [4.0, 4.0];
        plus[i] += h;
        let mut minus = [4.0, 4.0];
        minus[i] -= h;
        fd[i] = (pool_value(&plus) - pool_value(&minus)) / (2.0 * h);
    }
    let analytic_total: f64 = analytic.iter().sum();
    let fd_total: f64 = fd.iter().sum();
    assert!((analytic_total - fd_total).abs() < 1e-9, "{analytic_total} vs {fd_total}");
    assert!((fd[0] - 0.5).abs() < 1e-9 && (fd[1] - 0.5).abs() < 1e-9);
}

#[test]
fn lookup_and_weighted_row_sum_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for trial in 0..20 {
        let (rows, cols) = (2 + trial % 4, 3 + trial % 3);
        let table = random_tensor(&mut rng, &[rows, cols]);
        let weights = random_vector(&mut rng, rows);
        let proj = projection_weights(&mut rng, cols);
        let row = trial % rows;
        let report = grad_check(
            |tape, vars| {
                let picked = tape.lookup_row(vars[0], row)?;
                let blended = tape.weighted_row_sum(vars[1], vars[0])?;
                let both = tape.add(picked, blended)?;
                project(tape, both, &proj)
            },
            &[("table", &table), ("weights", &weights)],
            &cfg(1e-5, trial as u64),
        )
        .unwrap();
        assert!(report.passed(), "trial {trial}: {}", report.lines().join("\n"));
    }
}

#[test]
fn cosine_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for trial in 0..20 {
        let n = 2 + trial % 5;
        let u = random_vector(&mut rng, n);
        let v = random_vector(&mut rng, n);
        let report = grad_check(
            |tape, vars| tape.cosine(vars[0], vars[1]),
            &[("u", &u), ("v", &v)],
            &cfg(1e-5, trial as u64),
        )
        .unwrap();
        assert!(report.passed(), "trial {trial}: {}", report.lines().join("\n"));
    }
}

#[test]
fn stack_concat_slice_softmax_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for trial in 0..20 {
        let n = 4 + trial % 3;
        let a = random_vector(&mut rng, n);
        let b = random_vector(&mut rng, 3);
        let proj = projection_weights(&mut rng, n + 1);
        let report = grad_check(
            |tape, vars| {
                let s0 = tape.slice(vars[0], 0, 2)?;
                let s0 = tape.sum(s0);
                let s1 = tape.sum(vars[1]);
                let pair = tape.stack(&[s0, s1])?;
                let joined = tape.concat(pair, vars[0])?;
                let soft = tape.softmax(joined)?;
                let head = tape.slice(soft, 0, n + 1)?;
                project(tape, head, &proj)
            },
            &[("a", &a), ("b", &b)],
            &cfg(1e-5, trial as u64),
        )
        .unwrap();
        assert!(report.passed(), "trial {trial}: {}", report.lines().join("\n"));
    }
}

#[test]
fn losses_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for trial in 0..20 {
        let n = 3 + trial % 4;
        // predictions well inside the clamp bounds
        let p = Tensor::vector(
            &(0..n).map(|_| uniform_in(&mut rng, 0.05, 0.95)).collect::<Vec<_>>(),
            true,
        );
        let w = random_vector(&mut rng, n);
        let targets: Vec<f64> = (0..n).map(|_| f64::from(uniform_f64(&mut rng) < 0.5)).collect();
        let t2 = targets.clone();
        let report = grad_check(
            move |tape, vars| {
                let bce = tape.bce_loss(vars[0], &targets)?;
                let sq = tape.squared_error_loss(vars[1], &t2)?;
                let sq = tape.scale(sq, 0.5);
                tape.add(bce, sq)
            },
            &[("yhat", &p), ("w", &w)],
            // finer step: the clamped-log loss has steep third derivatives
            // near the ends of (0, 1)
            &GradCheckConfig {
                tolerance: 1e-5,
                seed: trial as u64,
                step_scale: 1e-4,
                ..GradCheckConfig::default()
            },
        )
        .unwrap();
        assert!(report.passed(), "trial {trial}: {}", report.lines().join("\n"));
    }
}

#[test]
fn lstm_cell_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for trial in 0..20 {
        let d = 2 + trial % 3;
        let x = random_vector(&mut rng, d);
        let h = random_vector(&mut rng, 2 * d);
        let c = random_vector(&mut rng, d);
        let w = random_tensor(&mut rng, &[4 * d, d]);
        let u = random_tensor(&mut rng, &[4 * d, 2 * d]);
        let bias = random_vector(&mut rng, 4 * d);
        let proj_h = projection_weights(&mut rng, d);
        let proj_c = projection_weights(&mut rng, d);
        let report = grad_check(
            |tape, vars| {
                let (h_out, c_out) = tape.lstm_cell(vars[0], vars[1], vars[2], vars[3], vars[4], vars[5])?;
                let lh = project(tape, h_out, &proj_h)?;
                let lc = project(tape, c_out, &proj_c)?;
                tape.add(lh, lc)
            },
            &[("x", &x), ("h", &h), ("c", &c), ("w", &w), ("u", &u), ("bias", &bias)],
            &cfg(1e-5, trial as u64),
        )
        .unwrap();
        assert!(report.passed(), "trial {trial}: {}", report.lines().join("\n"));
    }
}

#[test]
fn lstm_cell_matches_scalar_loop_oracle() {
    // independent scalar reimplementation of the gate equations at d = 2
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let d = 2;
    let x: Vec<f64> = (0..d).map(|_| uniform_in(&mut rng, -0.5, 0.5)).collect();
    let h: Vec<f64> = (0..2 * d).map(|_| uniform_in(&mut rng, -0.5, 0.5)).collect();
    let c: Vec<f64> = (0..d).map(|_| uniform_in(&mut rng, -0.5, 0.5)).collect();
    let w: Vec<f64> = (0..4 * d * d).map(|_| uniform_in(&mut rng, -0.5, 0.5)).collect();
    let u: Vec<f64> = (0..4 * d * 2 * d).map(|_| uniform_in(&mut rng, -0.5, 0.5)).collect();
    let bias: Vec<f64> = (0..4 * d).map(|_| uniform_in(&mut rng, -0.5, 0.5)).collect();

    let sigmoid = |v: f64| 1.0 / (1.0 + (-v).exp());
    let mut pre = vec![0.0f64; 4 * d];
    for r in 0..4 * d {
        let mut acc = bias[r];
        for j in 0..d {
            acc += w[r * d + j] * x[j];
        }
        for j in 0..2 * d {
            acc += u[r * 2 * d + j] * h[j];
        }
        pre[r] = acc;
    }
    let mut h_expect = vec![0.0f64; d];
    let mut c_expect = vec![0.0f64; d];
    for j in 0..d {
        let i_g = sigmoid(pre[j]);
        let f_g = sigmoid(pre[d + j]);
        let g_g = pre[2 * d + j].tanh();
        let o_g = sigmoid(pre[3 * d + j]);
        c_expect[j] = f_g * c[j] + i_g * g_g;
        h_expect[j] = o_g * c_expect[j].tanh();
    }

    let mut tape = Tape::<f64>::new();
    let xv = tape.leaf_from(&x, &[d], false).unwrap();
    let hv = tape.leaf_from(&h, &[2 * d], false).unwrap();
    let cv = tape.leaf_from(&c, &[d], false).unwrap();
    let wv = tape.leaf_from(&w, &[4 * d, d], false).unwrap();
    let uv = tape.leaf_from(&u, &[4 * d, 2 * d], false).unwrap();
    let bv = tape.leaf_from(&bias, &[4 * d], false).unwrap();
    let (h_out, c_out) = tape.lstm_cell(xv, hv, cv, wv, uv, bv).unwrap();
    for j in 0..d {
        assert!((tape.value(h_out)[j] - h_expect[j]).abs() < 1e-14);
        assert!((tape.value(c_out)[j] - c_expect[j]).abs() < 1e-14);
    }
}

#[test]
fn dropout_gradient_matches_finite_differences_under_fixed_mask() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for trial in 0..10 {
        let n = 8;
        let x = random_vector(&mut rng, n);
        let proj = projection_weights(&mut rng, n);
        let mask_seed = 1000 + trial as u64;
        let report = grad_check(
            move |tape, vars| {
                // identical seed per evaluation keeps the mask fixed, which is
                // what makes finite differences valid through dropout
                let mut mask_rng = autodiff::rng::SplitMix64::new(mask_seed);
                let y = tape.dropout(vars[0], 0.4, true, &mut mask_rng)?;
                project(tape, y, &proj)
            },
            &[("x", &x)],
            &cfg(1e-5, trial as u64),
        )
        .unwrap();
        assert!(report.passed(), "trial {trial}: {}", report.lines().join("\n"));
    }
}

#[test]
fn embedding_double_lookup_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let table = random_tensor(&mut rng, &[3, 4]);
    let proj = projection_weights(&mut rng, 4);
    let report = grad_check(
        |tape, vars| {
            // the same row twice in one loss: gradients must sum on the row
            let a = tape.lookup_row(vars[0], 1)?;
            let b = tape.lookup_row(vars[0], 1)?;
            let s = tape.add(a, b)?;
            project(tape, s, &proj)
        },
        &[("table", &table)],
        &cfg(1e-6, 9),
    )
    .unwrap();
    assert!(report.passed(), "{}", report.lines().join("\n"));
}
