use serde::Serialize;

use super::RunOutput;

/// Final indicators of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunFinal {
    pub seed: u64,
    pub total_accessibility: f64,
    pub total_travel_time: f64,
}

impl RunFinal {
    pub fn of(run: &RunOutput) -> Self {
        let row = run.final_row();
        Self {
            seed: run.seed,
            total_accessibility: row.total_accessibility,
            total_travel_time: row.total_travel_time,
        }
    }
}

/// One-sigma covariance ellipse: semi-axes are the square roots of the
/// covariance eigenvalues, `angle` is the major axis direction in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ellipse {
    pub major: f64,
    pub minor: f64,
    pub angle: f64,
}

impl Ellipse {
    pub fn from_covariance(cov: [[f64; 2]; 2]) -> Self {
        let (a, b, c) = (cov[0][0], cov[0][1], cov[1][1]);
        let half_trace = 0.5 * (a + c);
        let radius = (0.25 * (a - c).powi(2) + b * b).sqrt();
        let major = (half_trace + radius).max(0.0).sqrt();
        let minor = (half_trace - radius).max(0.0).sqrt();
        let angle = if b == 0.0 && a >= c { 0.0 } else { 0.5 * (2.0 * b).atan2(a - c) };
        Self { major, minor, angle }
    }

    /// Squared Mahalanobis length of the offset `(dx, dy)`; axes of zero
    /// length only admit a zero component (within `1e-12` of `scale`).
    pub fn mahalanobis2(&self, dx: f64, dy: f64, scale: f64) -> f64 {
        let (sin, cos) = self.angle.sin_cos();
        let along = dx * cos + dy * sin;
        let across = -dx * sin + dy * cos;
        let term = |offset: f64, axis: f64| {
            if axis > 0.0 {
                (offset / axis).powi(2)
            } else if offset.abs() <= 1e-12 * scale.max(1.0) {
                0.0
            } else {
                f64::INFINITY
            }
        };
        term(along, self.major) + term(across, self.minor)
    }
}

/// Replication summary in (total accessibility, total travel time) space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationStats {
    pub n: usize,
    pub mean: [f64; 2],
    /// Sample covariance (divisor `n - 1`; all zeros when `n == 1`).
    pub covariance: [[f64; 2]; 2],
    pub ellipse: Ellipse,
    pub finals: Vec<RunFinal>,
}

impl ReplicationStats {
    pub fn from_finals(finals: &[RunFinal]) -> Self {
        let n = finals.len();
        let mut sorted = finals.to_vec();
        // aggregation must not depend on completion order
        sorted.sort_by_key(|f| f.seed);
        let points: Vec<[f64; 2]> = sorted
            .iter()
            .map(|f| [f.total_accessibility, f.total_travel_time])
            .collect();
        // offsets from the first run keep identical runs at exactly zero spread
        let origin = points.first().copied().unwrap_or([0.0; 2]);
        let offsets: Vec<[f64; 2]> = points.iter().map(|p| [p[0] - origin[0], p[1] - origin[1]]).collect();
        let mut shift = [0.0; 2];
        for d in &offsets {
            shift[0] += d[0];
            shift[1] += d[1];
        }
        if n > 0 {
            shift[0] /= n as f64;
            shift[1] /= n as f64;
        }
        let mean = [origin[0] + shift[0], origin[1] + shift[1]];
        let mut covariance = [[0.0; 2]; 2];
        if n > 1 {
            for o in &offsets {
                let d = [o[0] - shift[0], o[1] - shift[1]];
                for i in 0..2 {
                    for j in 0..2 {
                        covariance[i][j] += d[i] * d[j];
                    }
                }
            }
            for row in &mut covariance {
                for v in row.iter_mut() {
                    *v /= (n - 1) as f64;
                }
            }
            covariance[1][0] = covariance[0][1];
        }
        Self {
            n,
            mean,
            covariance,
            ellipse: Ellipse::from_covariance(covariance),
            finals: sorted,
        }
    }

    pub fn std_dev(&self) -> [f64; 2] {
        [self.covariance[0][0].sqrt(), self.covariance[1][1].sqrt()]
    }

    /// Whether `point` lies inside this batch's 1-sigma ellipse.
    pub fn ellipse_contains(&self, point: [f64; 2]) -> bool {
        let scale = self.mean[0].abs().max(self.mean[1].abs());
        self.ellipse
            .mahalanobis2(point[0] - self.mean[0], point[1] - self.mean[1], scale)
            <= 1.0
    }
}

/// Average ranks; values within `rel_tol` (relative to the largest
/// magnitude) of their sorted neighbour share a rank.
fn ranks(values: &[f64], rel_tol: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = rel_tol * scale;
    let mut out = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] - values[order[end - 1]] <= tol {
            end += 1;
        }
        let rank = 0.5 * ((start + 1) + end) as f64;
        for &k in &order[start..end] {
            out[k] = rank;
        }
        start = end;
    }
    out
}

/// Spearman rank correlation with tie-averaged ranks.
///
/// Values closer than `1e-9` relative are treated as ties so that
/// floating-point noise does not manufacture an ordering. Returns 0 when
/// either side has no rank variation.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let rx = ranks(x, 1e-9);
    let ry = ranks(y, 1e-9);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}
