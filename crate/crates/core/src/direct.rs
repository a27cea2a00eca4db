//! Dividing-rectangles (DIRECT) global maximization on the unit cube, followed
//! by a coordinate-wise golden-section polish inside the incumbent's rectangle.
//!
//! Rectangles are trisected along their longest side, lowest dimension index
//! first. Under that rule a rectangle's side levels are always a prefix of
//! dimensions at level `L + 1` followed by the rest at `L`, so the total level
//! count identifies its size class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative epsilon of the potential-optimality test.
pub const EPSILON: f64 = 1e-4;
const GOLDEN: f64 = 0.618_033_988_749_894_8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptBudget {
    /// Total objective evaluations, polish included.
    pub max_evals: usize,
    pub max_rects: usize,
    /// Evaluations reserved for the polish, capped at a quarter of `max_evals`.
    pub local_refine_evals: usize,
}

impl Default for OptBudget {
    fn default() -> Self {
        OptBudget {
            max_evals: 2000,
            max_rects: 100_000,
            local_refine_evals: 200,
        }
    }
}

impl OptBudget {
    pub fn with_evals(max_evals: usize) -> Self {
        OptBudget {
            max_evals,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_evals == 0 || self.max_rects == 0 || self.local_refine_evals == 0 {
            return Err(Error::Config(format!(
                "optimizer budget entries must be positive, got {self:?}"
            )));
        }
        Ok(())
    }

    fn refine_share(&self) -> usize {
        self.local_refine_evals.min(self.max_evals / 4)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptResult {
    pub x_best: Vec<f64>,
    pub value_best: f64,
    pub evals_used: usize,
}

struct Rect {
    center: Vec<f64>,
    levels: Vec<u32>,
    level_sum: u32,
    value: f64,
}

impl Rect {
    fn size(&self) -> f64 {
        0.5 * self
            .levels
            .iter()
            .map(|l| 3f64.powi(-2 * *l as i32))
            .sum::<f64>()
            .sqrt()
    }
}

struct Counter<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counter<F> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        self.evals += 1;
        let v = (self.f)(x);
        if !v.is_finite() {
            return Err(Error::Numeric(format!("objective returned {v} at {x:?}")));
        }
        Ok(v)
    }
}

/// Indices of potentially optimal rectangles, largest size first.
fn potentially_optimal(rects: &[Rect], f_max: f64) -> Vec<usize> {
    use std::collections::BTreeMap;
    // best rectangle per size class; ties keep the oldest
    let mut best: BTreeMap<u32, usize> = BTreeMap::new();
    for (i, r) in rects.iter().enumerate() {
        best.entry(r.level_sum)
            .and_modify(|j| {
                if r.value > rects[*j].value {
                    *j = i;
                }
            })
            .or_insert(i);
    }
    let cands: Vec<(f64, f64, usize)> = best
        .values()
        .map(|&i| (rects[i].size(), rects[i].value, i))
        .collect();
    let threshold = f_max + EPSILON * f_max.abs();
    let mut chosen = Vec::new();
    for &(s_j, v_j, j) in &cands {
        let mut k_min = 0.0f64;
        let mut k_max = f64::INFINITY;
        for &(s_i, v_i, _) in &cands {
            if s_i < s_j {
                k_min = k_min.max((v_i - v_j) / (s_j - s_i));
            } else if s_i > s_j {
                k_max = k_max.min((v_j - v_i) / (s_i - s_j));
            }
        }
        if k_min > k_max {
            continue;
        }
        if k_max.is_finite() && v_j + k_max * s_j < threshold {
            continue;
        }
        chosen.push((rects[j].level_sum, j));
    }
    chosen.sort();
    chosen.into_iter().map(|(_, j)| j).collect()
}

/// Golden-section polish of each coordinate within `[lo_i, hi_i]`, accepting improvements only.
fn polish<F: FnMut(&[f64]) -> f64>(
    counter: &mut Counter<F>,
    x: &mut [f64],
    value: &mut f64,
    half_widths: &[f64],
    budget: usize,
) -> Result<()> {
    let d = x.len();
    let per_coord = budget / d;
    if per_coord < 3 {
        return Ok(());
    }
    for i in 0..d {
        let lo = (x[i] - half_widths[i]).max(0.0);
        let hi = (x[i] + half_widths[i]).min(1.0);
        if hi <= lo {
            continue;
        }
        let mut trial = x.to_vec();
        let mut probe = |v: f64, counter: &mut Counter<F>| -> Result<f64> {
            trial[i] = v;
            counter.eval(&trial)
        };
        let (mut a, mut b) = (lo, hi);
        let mut c = b - GOLDEN * (b - a);
        let mut e = a + GOLDEN * (b - a);
        let mut fc = probe(c, counter)?;
        let mut fe = probe(e, counter)?;
        let mut best = if fe > fc { (e, fe) } else { (c, fc) };
        for _ in 2..per_coord {
            if fc >= fe {
                b = e;
                e = c;
                fe = fc;
                c = b - GOLDEN * (b - a);
                fc = probe(c, counter)?;
                if fc > best.1 {
                    best = (c, fc);
                }
            } else {
                a = c;
                c = e;
                fc = fe;
                e = a + GOLDEN * (b - a);
                fe = probe(e, counter)?;
                if fe > best.1 {
                    best = (e, fe);
                }
            }
        }
        if best.1 > *value {
            x[i] = best.0;
            *value = best.1;
        }
    }
    Ok(())
}

/// Maximizes `objective` over `[0,1]^dim` within `budget`.
pub fn maximize<F: FnMut(&[f64]) -> f64>(
    dim: usize,
    objective: F,
    budget: &OptBudget,
) -> Result<OptResult> {
    if dim == 0 {
        return Err(Error::Contract(
            "cannot optimize over a zero-dimensional domain".into(),
        ));
    }
    budget.validate()?;
    let refine = budget.refine_share();
    let direct_evals = budget.max_evals - refine;
    let mut counter = Counter {
        f: objective,
        evals: 0,
    };

    let center = vec![0.5; dim];
    let value = counter.eval(&center)?;
    let mut rects = vec![Rect {
        center,
        levels: vec![0; dim],
        level_sum: 0,
        value,
    }];
    let mut best_idx = 0;

    'outer: while counter.evals + 2 <= direct_evals && rects.len() + 2 <= budget.max_rects {
        let f_max = rects[best_idx].value;
        let selected = potentially_optimal(&rects, f_max);
        let before = counter.evals;
        for j in selected {
            if counter.evals + 2 > direct_evals || rects.len() + 2 > budget.max_rects {
                break 'outer;
            }
            let (split_dim, level) = rects[j]
                .levels
                .iter()
                .enumerate()
                .min_by_key(|(i, l)| (**l, *i))
                .map(|(i, l)| (i, *l))
                .expect("dim > 0");
            if level >= 30 {
                // side below 1e-14: nothing left to resolve
                continue;
            }
            let delta = 3f64.powi(-(level as i32 + 1));
            let mut levels = rects[j].levels.clone();
            levels[split_dim] += 1;
            let level_sum = rects[j].level_sum + 1;
            for sign in [-1.0, 1.0] {
                let mut c = rects[j].center.clone();
                c[split_dim] += sign * delta;
                let v = counter.eval(&c)?;
                rects.push(Rect {
                    center: c,
                    levels: levels.clone(),
                    level_sum,
                    value: v,
                });
                if v > rects[best_idx].value {
                    best_idx = rects.len() - 1;
                }
            }
            rects[j].levels = levels;
            rects[j].level_sum = level_sum;
        }
        if counter.evals == before {
            break;
        }
    }

    let incumbent = &rects[best_idx];
    let mut x = incumbent.center.clone();
    let mut value = incumbent.value;
    let half_widths: Vec<f64> = incumbent
        .levels
        .iter()
        .map(|l| 0.5 * 3f64.powi(-(*l as i32)))
        .collect();
    let remaining = budget.max_evals - counter.evals;
    polish(&mut counter, &mut x, &mut value, &half_widths, remaining)?;

    Ok(OptResult {
        x_best: x,
        value_best: value,
        evals_used: counter.evals,
    })
}
