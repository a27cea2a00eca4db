//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's linear algebra.
#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;

pub fn se(scale: f64, bw: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        let r = (a[i] - b[i]) / bw[i];
        s += r * r;
    }
    scale * (-0.5 * s).exp()
}

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

/// Gaussian elimination with partial pivoting.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, v)| {
            let mut r = row.clone();
            r.push(*v);
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        m.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = m[i][n];
        for k in i + 1..n {
            s -= m[i][k] * x[k];
        }
        x[i] = s / m[i][i];
    }
    x
}

/// `ln |det a|` by elimination.
pub fn log_abs_det(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut acc = 0.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        m.swap(col, piv);
        acc += m[col][col].abs().ln();
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    acc
}

pub fn gram(scale: f64, bw: &[f64], xs: &[Vec<f64>], diag: f64) -> Vec<Vec<f64>> {
    xs.iter()
        .enumerate()
        .map(|(i, a)| {
            xs.iter()
                .enumerate()
                .map(|(j, b)| se(scale, bw, a, b) + if i == j { diag } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Posterior mean and variance by explicit dense solves; `diag` is the total diagonal
/// added to the Gram matrix.
pub fn dense_posterior(
    scale: f64,
    bw: &[f64],
    diag: f64,
    xs: &[Vec<f64>],
    ys: &[f64],
    x: &[f64],
) -> (f64, f64) {
    let off = median(ys);
    if xs.is_empty() {
        return (off, scale);
    }
    let k = gram(scale, bw, xs, diag);
    let kx: Vec<f64> = xs.iter().map(|a| se(scale, bw, a, x)).collect();
    let centered: Vec<f64> = ys.iter().map(|y| y - off).collect();
    let alpha = solve(&k, &centered);
    let v = solve(&k, &kx);
    let mean = off + kx.iter().zip(&alpha).map(|(a, b)| a * b).sum::<f64>();
    let var = scale - kx.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
    (mean, var)
}

pub fn dense_lml(scale: f64, bw: &[f64], diag: f64, xs: &[Vec<f64>], ys: &[f64]) -> f64 {
    let off = median(ys);
    let k = gram(scale, bw, xs, diag);
    let c: Vec<f64> = ys.iter().map(|y| y - off).collect();
    let a = solve(&k, &c);
    let quad: f64 = c.iter().zip(&a).map(|(x, y)| x * y).sum();
    let n = ys.len() as f64;
    -0.5 * quad - 0.5 * log_abs_det(&k) - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
}

/// Textbook lower Cholesky factor for sampling.
pub fn chol(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        l[j][j] = d.max(0.0).sqrt();
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = if l[j][j] > 0.0 { s / l[j][j] } else { 0.0 };
        }
    }
    l
}

/// One draw from `N(mean, cov)`.
pub fn sample_mvn<R: Rng>(mean: &[f64], cov: &[Vec<f64>], rng: &mut R) -> Vec<f64> {
    let l = chol(cov);
    let z: Vec<f64> = (0..mean.len())
        .map(|_| rng.sample(StandardNormal))
        .collect();
    (0..mean.len())
        .map(|i| mean[i] + (0..=i).map(|k| l[i][k] * z[k]).sum::<f64>())
        .collect()
}

pub fn uniform_points<R: Rng>(n: usize, d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.random()).collect())
        .collect()
}

/// Empirical covariance matrix of draws (rows = draws, columns = points), centered.
pub fn empirical_cov(draws: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = draws.len() as f64;
    let p = draws[0].len();
    let mean: Vec<f64> = (0..p)
        .map(|j| draws.iter().map(|d| d[j]).sum::<f64>() / n)
        .collect();
    let mut c = vec![vec![0.0; p]; p];
    for d in draws {
        for i in 0..p {
            for j in 0..p {
                c[i][j] += (d[i] - mean[i]) * (d[j] - mean[j]);
            }
        }
    }
    for row in &mut c {
        for v in row.iter_mut() {
            *v /= n - 1.0;
        }
    }
    c
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1e-300) || (a - b).abs() <= 1e-14
}

/// Plain single-objective GP-UCB written against the model primitives only:
/// random initial design, refits every `refit_every` steps, `beta_t = 0.125 ln(2t + 1)`,
/// `mu + sqrt(beta) sigma` maximized by DIRECT. Uses the same named random streams as
/// the engine so the trajectories can be compared point for point.
pub fn reference_gp_ucb(config: &mobo::engine::ExperimentConfig) -> Vec<(Vec<f64>, f64)> {
    use mobo::gp::{fit_hyperparams, GpModel};
    use mobo::rng;

    let objective = config.objective.build().unwrap();
    let d = config.dim();
    let seed = config.seed;
    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let observe = |x: Vec<f64>, xs: &mut Vec<Vec<f64>>, ys: &mut Vec<f64>| {
        let mut noise = rng::stream(seed, rng::OBJECTIVE_NOISE, &[xs.len() as u64]);
        let y = objective.evaluate_noisy(&x, &mut noise).unwrap()[0];
        xs.push(x);
        ys.push(y);
    };
    let mut init = rng::stream(seed, rng::INIT_DESIGN, &[0]);
    for _ in 0..config.n_init {
        let x: Vec<f64> = (0..d).map(|_| init.random::<f64>()).collect();
        observe(x, &mut xs, &mut ys);
    }
    let mut params = None;
    for c in 0..config.budget {
        if c % config.refit_every == 0 && xs.len() >= 2 {
            let bounds = config.hyper_bounds.scaled_to_targets(&ys);
            let mut r = rng::stream(seed, rng::MLE_RESTARTS, &[c as u64, 0]);
            params = Some(fit_hyperparams(&xs, &ys, &bounds, &mut r).unwrap().params);
        }
        let p = params.clone().unwrap_or_else(|| {
            config
                .hyper_bounds
                .scaled_to_targets(&ys)
                .default_params(d, &ys)
        });
        let model = GpModel::fit(p, xs.clone(), ys.clone()).unwrap();
        let t = (c + 1) as f64;
        let beta = 0.125 * (2.0 * t + 1.0).ln();
        let res = mobo::direct::maximize(
            d,
            |x| {
                let q = model.posterior(x).unwrap();
                q.mean + beta.sqrt() * q.std
            },
            &config.acq_opt,
        )
        .unwrap();
        observe(res.x_best, &mut xs, &mut ys);
    }
    xs.into_iter().zip(ys).collect()
}

pub fn config_json(
    objective: &str,
    method: &str,
    scal: &str,
    weights: &str,
    budget: usize,
    seed: u64,
) -> String {
    format!(
        r#"{{"objective": {objective}, "budget": {budget}, "n_init": 5,
            "acquisition": {{"method": "{method}", "scalarization": "{scal}"}},
            "weights": {weights}, "seed": {seed}, "acq_opt": {{"max_evals": 400}}}}"#
    )
}
