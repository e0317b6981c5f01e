//! Endogenous network growth: who decides, which links are on the table,
//! and which one gets built.

use std::fmt;
use std::io::Write;

use log::warn;
use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::transport::{Network, OdMatrix, TransportModel, TravelTimes};
use crate::world::Metropolis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stakeholder {
    Mayor(usize),
    Governor,
}

impl Stakeholder {
    pub fn level(&self) -> &'static str {
        match self {
            Stakeholder::Mayor(_) => "local",
            Stakeholder::Governor => "metropolitan",
        }
    }

    pub fn mayor(&self) -> Option<usize> {
        match self {
            Stakeholder::Mayor(i) => Some(*i),
            Stakeholder::Governor => None,
        }
    }

    pub fn governs(&self, metropolis: &Metropolis, cell: usize) -> bool {
        match self {
            Stakeholder::Mayor(i) => metropolis.cells[cell].territory == *i,
            Stakeholder::Governor => true,
        }
    }
}

impl fmt::Display for Stakeholder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stakeholder::Mayor(i) => write!(f, "mayor {i}"),
            Stakeholder::Governor => f.write_str("governor"),
        }
    }
}

/// Draws the decision level, then (for a local decision) the mayor.
///
/// The first uniform draw picks local with probability `xi`; the second,
/// taken only for local decisions, picks mayor `i` with probability
/// `Y_i / sum Y`. Returns the stakeholder and the draws consumed.
pub fn select_stakeholder<R: Rng + ?Sized>(xi: f64, weights: &[f64], rng: &mut R) -> (Stakeholder, Vec<f64>) {
    let level: f64 = rng.random();
    if level >= xi || weights.is_empty() {
        return (Stakeholder::Governor, vec![level]);
    }
    let pick: f64 = rng.random();
    let total: f64 = weights.iter().sum();
    let mayor = if total > 0.0 {
        let target = pick * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if target < acc {
                chosen = Some(i);
                break;
            }
        }
        // rounding can leave target == total; fall back to the last weighted mayor
        chosen.unwrap_or_else(|| weights.iter().rposition(|w| *w > 0.0).unwrap_or(0))
    } else {
        warn!("all mayor weights are zero; drawing a mayor uniformly");
        ((pick * weights.len() as f64) as usize).min(weights.len() - 1)
    };
    (Stakeholder::Mayor(mayor), vec![level, pick])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CandidateLink {
    pub a: usize,
    pub b: usize,
}

impl CandidateLink {
    pub fn new(a: usize, b: usize) -> Self {
        Self {
            a: a.min(b),
            b: a.max(b),
        }
    }
}

/// Buildable links, ascending by `(a, b)`.
///
/// A pair qualifies when the two cells are 8-neighbours, or when both already
/// touch the network and lie within `extension_radius` cells (Chebyshev).
pub fn enumerate_candidates(
    network: &Network,
    metropolis: &Metropolis,
    extension_radius: usize,
) -> Vec<CandidateLink> {
    let grid = metropolis.grid;
    let n = grid.len();
    let on_network: Vec<bool> = (0..n).map(|c| network.touches(c)).collect();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let reach = grid.chebyshev(a, b);
            let adjacent = reach == 1;
            let extension = on_network[a] && on_network[b] && reach <= extension_radius;
            if (adjacent || extension) && !network.contains(a, b) {
                out.push(CandidateLink::new(a, b));
            }
        }
    }
    out
}

fn decay_row_objective(
    metropolis: &Metropolis,
    cell: usize,
    row: impl Fn(usize) -> f64,
    nu: f64,
) -> f64 {
    let origin = &metropolis.cells[cell];
    if origin.workers.iter().all(|w| *w == 0.0) {
        return 0.0;
    }
    let mut per_category = vec![0.0; metropolis.categories];
    for (j, dest) in metropolis.cells.iter().enumerate() {
        let decay = (-nu * row(j)).exp();
        for (acc, e) in per_category.iter_mut().zip(&dest.jobs) {
            *acc += e * decay;
        }
    }
    origin.workers.iter().zip(&per_category).map(|(a, x)| a * x).sum()
}

/// `X(T) = sum over c in T of X_c`, the stakeholder's workers' access to all
/// jobs. For the governor T is the whole grid.
pub fn objective(metropolis: &Metropolis, times: &TravelTimes, stakeholder: Stakeholder, nu: f64) -> f64 {
    (0..metropolis.len())
        .filter(|&c| stakeholder.governs(metropolis, c))
        .map(|c| decay_row_objective(metropolis, c, |j| times.get(c, j), nu))
        .sum()
}

/// Inputs shared by every candidate evaluation in one decision.
pub struct EvaluationContext<'a> {
    pub metropolis: &'a Metropolis,
    pub model: &'a TransportModel,
    pub nu: f64,
    /// Commuting flows used for congested evaluation.
    pub od: &'a OdMatrix,
    pub congested: bool,
}

impl EvaluationContext<'_> {
    fn times(&self, network: &Network) -> TravelTimes {
        if self.congested {
            self.model.assign_traffic(&self.od.total(), network).times
        } else {
            self.model.free_flow_times(network)
        }
    }

    fn with_link(&self, network: &Network, link: CandidateLink) -> Network {
        let mut next = network.clone();
        let p = &self.model.params;
        next.add_link(&self.model.grid, link.a, link.b, p.v_link, p.capacity)
            .expect("candidate links are new and inside the grid");
        next
    }
}

/// Objective after building `link`, recomputing travel times from scratch
/// on a copy of the network.
pub fn evaluate_candidate(
    ctx: &EvaluationContext,
    network: &Network,
    link: CandidateLink,
    stakeholder: Stakeholder,
) -> f64 {
    let next = ctx.with_link(network, link);
    objective(ctx.metropolis, &ctx.times(&next), stakeholder, ctx.nu)
}

/// Free-flow evaluation of many candidates against one shortest-path matrix.
///
/// Adding a single edge `(a, b)` of time `t` changes the raw path matrix to
/// `min(D_ij, D_ia + t + D_bj, D_ib + t + D_aj)`, so each candidate costs one
/// pass over the stakeholder's rows instead of a full all-pairs search.
struct FreeFlowEvaluator<'a> {
    ctx: &'a EvaluationContext<'a>,
    raw: Array2<f64>,
    rows: Vec<usize>,
}

impl<'a> FreeFlowEvaluator<'a> {
    fn new(ctx: &'a EvaluationContext<'a>, network: &Network, stakeholder: Stakeholder) -> Self {
        let raw = ctx.model.path_matrix(network, &network.free_flow_times());
        let rows = (0..ctx.metropolis.len())
            .filter(|&c| stakeholder.governs(ctx.metropolis, c))
            .collect();
        Self { ctx, raw, rows }
    }

    fn objective_with(&self, link: CandidateLink) -> f64 {
        let model = self.ctx.model;
        let t = model.grid.distance_km(link.a, link.b) / model.params.v_link;
        let floor = model.intra_cell_time();
        let d = &self.raw;
        let (a, b) = (link.a, link.b);
        self.rows
            .iter()
            .map(|&c| {
                let via_a = d[[c, a]] + t;
                let via_b = d[[c, b]] + t;
                let row = |j: usize| {
                    if j == c {
                        floor
                    } else {
                        d[[c, j]].min(via_a + d[[b, j]]).min(via_b + d[[a, j]])
                    }
                };
                decay_row_objective(self.ctx.metropolis, c, row, self.ctx.nu)
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub step: usize,
    pub stakeholder: Stakeholder,
    pub n_candidates: usize,
    pub chosen: Option<CandidateLink>,
    /// Objective on the network before the build.
    pub obj_before: f64,
    /// Objective of the chosen link (equals `obj_before` on a no-build).
    pub obj_after: f64,
    /// Uniform draws consumed by the stakeholder selection.
    pub draws: Vec<f64>,
    /// Objective of every candidate, in enumeration order.
    #[serde(skip)]
    pub evaluations: Vec<f64>,
}

/// Evaluates every candidate and builds the best one.
///
/// Ties keep the earliest candidate in enumeration order. With no candidate
/// the network is returned unchanged and the record has `chosen == None`.
pub fn decide_and_build(
    ctx: &EvaluationContext,
    network: &Network,
    stakeholder: Stakeholder,
    extension_radius: usize,
) -> (Network, DecisionRecord) {
    let candidates = enumerate_candidates(network, ctx.metropolis, extension_radius);
    let before = objective(ctx.metropolis, &ctx.times(network), stakeholder, ctx.nu);

    let evaluations: Vec<f64> = if ctx.congested {
        candidates
            .par_iter()
            .map(|&z| evaluate_candidate(ctx, network, z, stakeholder))
            .collect()
    } else {
        let evaluator = FreeFlowEvaluator::new(ctx, network, stakeholder);
        candidates.iter().map(|&z| evaluator.objective_with(z)).collect()
    };

    let mut best: Option<(usize, f64)> = None;
    for (k, &value) in evaluations.iter().enumerate() {
        if best.is_none_or(|(_, v)| value > v) {
            best = Some((k, value));
        }
    }

    let mut record = DecisionRecord {
        step: 0,
        stakeholder,
        n_candidates: candidates.len(),
        chosen: None,
        obj_before: before,
        obj_after: before,
        draws: Vec::new(),
        evaluations,
    };
    match best {
        Some((k, value)) => {
            let link = candidates[k];
            record.chosen = Some(link);
            record.obj_after = value;
            (ctx.with_link(network, link), record)
        }
        None => {
            warn!("{stakeholder}: no candidate link left, nothing built");
            (network.clone(), record)
        }
    }
}

/// Writes `step,level,mayor_id,chosen_a,chosen_b,obj_before,obj_after,n_candidates`.
pub fn write_decisions_csv<W: Write>(records: &[DecisionRecord], out: W) -> crate::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record([
        "step",
        "level",
        "mayor_id",
        "chosen_a",
        "chosen_b",
        "obj_before",
        "obj_after",
        "n_candidates",
    ])?;
    let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        w.write_record([
            r.step.to_string(),
            r.stakeholder.level().to_string(),
            opt(r.stakeholder.mayor()),
            opt(r.chosen.map(|c| c.a)),
            opt(r.chosen.map(|c| c.b)),
            r.obj_before.to_string(),
            r.obj_after.to_string(),
            r.n_candidates.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{init_metropolis, Grid, ScenarioConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid_metropolis(rows: usize, cols: usize) -> (ScenarioConfig, Metropolis) {
        let mut config = ScenarioConfig::default();
        config.grid_rows = rows;
        config.grid_cols = cols;
        config.centers[0].position = [0.0, 0.0];
        config.centers[1].position = [(rows - 1) as f64, (cols - 1) as f64];
        let m = init_metropolis(&config, 1000.0, 1000.0).unwrap();
        (config, m)
    }

    #[test]
    fn governor_only_when_xi_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let (s, draws) = select_stakeholder(0.0, &[3.0, 1.0], &mut rng);
            assert_eq!(s, Stakeholder::Governor);
            assert_eq!(draws.len(), 1);
        }
    }

    #[test]
    fn sole_weighted_mayor_always_wins() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let (s, draws) = select_stakeholder(1.0, &[5.0, 0.0], &mut rng);
            assert_eq!(s, Stakeholder::Mayor(0));
            assert_eq!(draws.len(), 2);
        }
    }

    #[test]
    fn mayor_frequency_matches_job_share() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let hits = (0..10_000)
            .filter(|_| select_stakeholder(1.0, &[75.0, 25.0], &mut rng).0 == Stakeholder::Mayor(0))
            .count();
        let share = hits as f64 / 10_000.0;
        assert!((0.74..=0.76).contains(&share), "share {share}");
    }

    #[test]
    fn zero_weights_fall_back_to_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut counts = [0usize; 2];
        for _ in 0..2000 {
            if let (Stakeholder::Mayor(i), _) = select_stakeholder(1.0, &[0.0, 0.0], &mut rng) {
                counts[i] += 1;
            }
        }
        assert_eq!(counts[0] + counts[1], 2000);
        assert!(counts[0] > 850 && counts[1] > 850, "{counts:?}");
    }

    #[test]
    fn two_by_two_has_six_candidates() {
        let (_, m) = grid_metropolis(2, 2);
        let c = enumerate_candidates(&Network::new(), &m, 3);
        assert_eq!(c.len(), 6);
        assert!(c.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn complete_graph_has_no_candidates() {
        let (_, m) = grid_metropolis(2, 2);
        let mut net = Network::new();
        for a in 0..4 {
            for b in a + 1..4 {
                net.add_link(&m.grid, a, b, 90.0, 100.0).unwrap();
            }
        }
        assert!(enumerate_candidates(&net, &m, 3).is_empty());
    }

    #[test]
    fn extensions_join_existing_nodes_only() {
        let (_, m) = grid_metropolis(1, 8);
        let mut net = Network::new();
        net.add_link(&m.grid, 0, 1, 90.0, 100.0).unwrap();
        net.add_link(&m.grid, 4, 5, 90.0, 100.0).unwrap();
        let c = enumerate_candidates(&net, &m, 3);
        // rook pairs (7) minus built (2), plus 1-4 (distance 3); 0-4 is 4 apart
        assert_eq!(c.len(), 6);
        assert!(c.contains(&CandidateLink::new(1, 4)));
        assert!(!c.contains(&CandidateLink::new(0, 4)));
        assert!(!c.contains(&CandidateLink::new(1, 3)));
        let mut unique = c.clone();
        unique.dedup();
        assert_eq!(unique, c);
    }

    #[test]
    fn objective_partitions_additively() {
        let (config, m) = grid_metropolis(4, 4);
        let model = TransportModel::from_config(&config);
        let d = model.free_flow_times(&Network::new());
        let gov = objective(&m, &d, Stakeholder::Governor, config.nu);
        let sum: f64 = (0..m.mayors).map(|i| objective(&m, &d, Stakeholder::Mayor(i), config.nu)).sum();
        assert!((gov - sum).abs() <= 1e-9 * gov);

        let mut single = m.clone();
        for cell in &mut single.cells {
            cell.territory = 1;
        }
        single.cells[5].territory = 0;
        let one = objective(&single, &d, Stakeholder::Mayor(0), config.nu);
        let x = crate::landuse::accessibility(&single, &d, config.nu).aggregate[5];
        assert!((one - x).abs() <= 1e-12 * x);

        for cell in &mut single.cells {
            cell.territory = 1;
        }
        assert_eq!(objective(&single, &d, Stakeholder::Mayor(0), config.nu), 0.0);
    }

    fn ctx<'a>(m: &'a Metropolis, model: &'a TransportModel, od: &'a OdMatrix, nu: f64) -> EvaluationContext<'a> {
        EvaluationContext {
            metropolis: m,
            model,
            nu,
            od,
            congested: false,
        }
    }

    #[test]
    fn incremental_matches_full_recompute() {
        let (config, m) = grid_metropolis(5, 5);
        let model = TransportModel::from_config(&config);
        let od = OdMatrix::zeros(25, 2);
        let c = ctx(&m, &model, &od, config.nu);
        let mut net = Network::new();
        net.add_link(&m.grid, 6, 12, 90.0, 1000.0).unwrap();
        net.add_link(&m.grid, 12, 18, 90.0, 1000.0).unwrap();
        for who in [Stakeholder::Governor, Stakeholder::Mayor(0), Stakeholder::Mayor(1)] {
            let (_, record) = decide_and_build(&c, &net, who, 3);
            let candidates = enumerate_candidates(&net, &m, 3);
            for (z, fast) in candidates.iter().zip(&record.evaluations) {
                let slow = evaluate_candidate(&c, &net, *z, who);
                assert!((fast - slow).abs() <= 1e-10 * slow.max(1.0), "{z:?}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn duplicate_route_leaves_objective_unchanged() {
        let (config, m) = grid_metropolis(3, 3);
        let model = TransportModel::from_config(&config);
        let od = OdMatrix::zeros(9, 2);
        let c = ctx(&m, &model, &od, config.nu);
        // 0-1 and 1-2 already give 0->2 at link speed; 0-2 along the same line adds nothing
        let mut net = Network::new();
        net.add_link(&m.grid, 0, 1, 90.0, 1000.0).unwrap();
        net.add_link(&m.grid, 1, 2, 90.0, 1000.0).unwrap();
        let base = objective(&m, &model.free_flow_times(&net), Stakeholder::Governor, config.nu);
        let with = evaluate_candidate(&c, &net, CandidateLink::new(0, 2), Stakeholder::Governor);
        assert!((with - base).abs() <= 1e-12 * base);
    }

    #[test]
    fn evaluation_does_not_touch_network() {
        let (config, m) = grid_metropolis(3, 3);
        let model = TransportModel::from_config(&config);
        let od = OdMatrix::zeros(9, 2);
        let c = ctx(&m, &model, &od, config.nu);
        let mut net = Network::new();
        net.add_link(&m.grid, 0, 4, 90.0, 1000.0).unwrap();
        net.links[0].flow = 12.5;
        net.links[0].congested_time = 1.0;
        let snapshot = net.clone();
        evaluate_candidate(&c, &net, CandidateLink::new(4, 5), Stakeholder::Governor);
        decide_and_build(&c, &net, Stakeholder::Mayor(1), 3);
        assert_eq!(net, snapshot);
    }

    #[test]
    fn single_candidate_is_built() {
        let grid = Grid::new(1, 2, 2.0);
        let mut config = ScenarioConfig::default();
        config.grid_rows = 1;
        config.grid_cols = 2;
        config.centers = vec![config.centers[0].clone()];
        config.centers[0].position = [0.0, 0.0];
        let m = init_metropolis(&config, 10.0, 10.0).unwrap();
        let model = TransportModel::from_config(&config);
        let od = OdMatrix::zeros(2, 2);
        let c = ctx(&m, &model, &od, config.nu);
        let (net, record) = decide_and_build(&c, &Network::new(), Stakeholder::Governor, 3);
        assert_eq!(record.chosen, Some(CandidateLink::new(0, 1)));
        assert!(net.contains(0, 1));
        assert_eq!(net.links[0].length_km, grid.distance_km(0, 1));

        let (again, record) = decide_and_build(&c, &net, Stakeholder::Governor, 3);
        assert_eq!(record.chosen, None);
        assert_eq!(record.n_candidates, 0);
        assert_eq!(again, net);
    }

    #[test]
    fn equal_objectives_pick_first_candidate() {
        // nobody lives anywhere: every candidate scores zero
        let (config, mut m) = grid_metropolis(3, 3);
        for cell in &mut m.cells {
            cell.workers = vec![0.0; 2];
        }
        let model = TransportModel::from_config(&config);
        let od = OdMatrix::zeros(9, 2);
        let c = ctx(&m, &model, &od, config.nu);
        let (_, record) = decide_and_build(&c, &Network::new(), Stakeholder::Governor, 3);
        assert_eq!(record.chosen, Some(CandidateLink::new(0, 1)));
    }

    #[test]
    fn decisions_csv_layout() {
        let records = vec![
            DecisionRecord {
                step: 1,
                stakeholder: Stakeholder::Mayor(1),
                n_candidates: 12,
                chosen: Some(CandidateLink::new(3, 4)),
                obj_before: 1.5,
                obj_after: 2.0,
                draws: vec![0.1, 0.2],
                evaluations: vec![],
            },
            DecisionRecord {
                step: 2,
                stakeholder: Stakeholder::Governor,
                n_candidates: 0,
                chosen: None,
                obj_before: 2.0,
                obj_after: 2.0,
                draws: vec![0.9],
                evaluations: vec![],
            },
        ];
        let mut buf = Vec::new();
        write_decisions_csv(&records, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "step,level,mayor_id,chosen_a,chosen_b,obj_before,obj_after,n_candidates\n\
             1,local,1,3,4,1.5,2,12\n\
             2,metropolitan,,,,2,2,0\n"
        );
    }
}
