//! Location choice: accessibility, urban form, Cobb-Douglas utility and logit
//! relocation of workers and jobs.

use std::io::Write;

use ndarray::Array2;
use rand::Rng;
use serde::Serialize;

use crate::transport::TravelTimes;
use crate::world::Metropolis;

/// Hansen-type accessibility of every cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Accessibility {
    /// `X_c^s = sum_j E_j^s exp(-nu d_cj)`, cells x categories.
    pub workers: Array2<f64>,
    /// `sum_j A_j^s exp(-nu d_jc)`, the jobs' access to workers.
    pub jobs: Array2<f64>,
    /// `X_c = sum_s A_c^s X_c^s`.
    pub aggregate: Vec<f64>,
}

impl Accessibility {
    pub fn total(&self) -> f64 {
        self.aggregate.iter().sum()
    }
}

pub fn accessibility(metropolis: &Metropolis, times: &TravelTimes, nu: f64) -> Accessibility {
    let n = metropolis.len();
    let s_count = metropolis.categories;
    let decay = times.as_array().mapv(|d| (-nu * d).exp());
    let mut workers = Array2::zeros((n, s_count));
    let mut jobs = Array2::zeros((n, s_count));
    for c in 0..n {
        for (j, cell) in metropolis.cells.iter().enumerate() {
            let out = decay[[c, j]];
            let back = decay[[j, c]];
            for s in 0..s_count {
                workers[[c, s]] += cell.jobs[s] * out;
                jobs[[c, s]] += cell.workers[s] * back;
            }
        }
    }
    let aggregate = metropolis
        .cells
        .iter()
        .map(|cell| (0..s_count).map(|s| cell.workers[s] * workers[[cell.id, s]]).sum())
        .collect();
    Accessibility {
        workers,
        jobs,
        aggregate,
    }
}

/// Local urban-form factor of every cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UrbanForm {
    /// `prod_s' (1 + A_c^s')^m[s][s'] (1 + E_c^s')^m'[s][s']`.
    pub workers: Array2<f64>,
    /// Jobs mirror the workers' form: `(1 + E)^m (1 + A)^m'`.
    pub jobs: Array2<f64>,
}

pub fn urban_form(metropolis: &Metropolis, m: &[Vec<f64>], m_prime: &[Vec<f64>]) -> UrbanForm {
    let n = metropolis.len();
    let s_count = metropolis.categories;
    let mut workers = Array2::ones((n, s_count));
    let mut jobs = Array2::ones((n, s_count));
    for cell in &metropolis.cells {
        for s in 0..s_count {
            let mut fw = 1.0;
            let mut fj = 1.0;
            for t in 0..s_count {
                let a = 1.0 + cell.workers[t];
                let e = 1.0 + cell.jobs[t];
                fw *= a.powf(m[s][t]) * e.powf(m_prime[s][t]);
                fj *= e.powf(m[s][t]) * a.powf(m_prime[s][t]);
            }
            workers[[cell.id, s]] = fw;
            jobs[[cell.id, s]] = fj;
        }
    }
    UrbanForm { workers, jobs }
}

/// Cobb-Douglas utility `X^gamma F^(1 - gamma)`.
pub fn utility(x: f64, f: f64, gamma: f64) -> f64 {
    x.powf(gamma) * f.powf(1.0 - gamma)
}

/// Multinomial logit shares `exp(mu U_c) / sum exp(mu U_c')`, computed with
/// the maximum subtracted first.
pub fn logit_probabilities(utilities: &[f64], mu: f64) -> Vec<f64> {
    if utilities.is_empty() {
        return Vec::new();
    }
    let max = utilities.iter().map(|u| mu * u).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = utilities.iter().map(|u| (mu * u - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Accessibility, form, utility and choice probability of every cell, for
/// both workers and jobs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellScores {
    pub accessibility: Accessibility,
    pub form: UrbanForm,
    pub worker_utility: Array2<f64>,
    pub job_utility: Array2<f64>,
    pub worker_probability: Array2<f64>,
    pub job_probability: Array2<f64>,
}

pub struct ScoreParams<'a> {
    pub nu: f64,
    pub gamma: f64,
    pub mu: f64,
    pub m: &'a [Vec<f64>],
    pub m_prime: &'a [Vec<f64>],
}

fn probability_columns(utilities: &Array2<f64>, mu: f64) -> Array2<f64> {
    let mut out = Array2::zeros(utilities.raw_dim());
    for s in 0..utilities.ncols() {
        let column: Vec<f64> = utilities.column(s).to_vec();
        for (c, p) in logit_probabilities(&column, mu).into_iter().enumerate() {
            out[[c, s]] = p;
        }
    }
    out
}

pub fn score_cells(metropolis: &Metropolis, times: &TravelTimes, params: &ScoreParams) -> CellScores {
    let accessibility = accessibility(metropolis, times, params.nu);
    let form = urban_form(metropolis, params.m, params.m_prime);
    let combine = |x: &Array2<f64>, f: &Array2<f64>| {
        Array2::from_shape_fn(x.raw_dim(), |idx| utility(x[idx], f[idx], params.gamma))
    };
    let worker_utility = combine(&accessibility.workers, &form.workers);
    let job_utility = combine(&accessibility.jobs, &form.jobs);
    let worker_probability = probability_columns(&worker_utility, params.mu);
    let job_probability = probability_columns(&job_utility, params.mu);
    CellScores {
        accessibility,
        form,
        worker_utility,
        job_utility,
        worker_probability,
        job_probability,
    }
}

/// Moves `fraction` of every category's workers and jobs.
///
/// Each cell gives up the same share of its count; the pooled mass is spread
/// over all cells in proportion to the logit shares in `scores`. Allocation
/// is by expected value, so `_rng` is not drawn from.
pub fn relocate<R: Rng + ?Sized>(
    metropolis: &Metropolis,
    scores: &CellScores,
    fraction: f64,
    _rng: &mut R,
) -> Metropolis {
    let mut next = metropolis.clone();
    let keep = 1.0 - fraction;
    for s in 0..metropolis.categories {
        let worker_pool = fraction * metropolis.workers_of(s).iter().sum::<f64>();
        let job_pool = fraction * metropolis.jobs_of(s).iter().sum::<f64>();
        for cell in &mut next.cells {
            cell.workers[s] = keep * cell.workers[s] + worker_pool * scores.worker_probability[[cell.id, s]];
            cell.jobs[s] = keep * cell.jobs[s] + job_pool * scores.job_probability[[cell.id, s]];
        }
    }
    next
}

/// Writes `cell_id,side,s,X,F,U,P` rows.
pub fn write_scores_csv<W: Write>(scores: &CellScores, out: W) -> crate::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["cell_id", "side", "s", "X", "F", "U", "P"])?;
    let (n, s_count) = scores.worker_utility.dim();
    let sides = [
        ("workers", &scores.accessibility.workers, &scores.form.workers, &scores.worker_utility, &scores.worker_probability),
        ("jobs", &scores.accessibility.jobs, &scores.form.jobs, &scores.job_utility, &scores.job_probability),
    ];
    for (side, x, f, u, p) in sides {
        for c in 0..n {
            for s in 0..s_count {
                w.write_record([
                    c.to_string(),
                    side.to_string(),
                    s.to_string(),
                    x[[c, s]].to_string(),
                    f[[c, s]].to_string(),
                    u[[c, s]].to_string(),
                    p[[c, s]].to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
