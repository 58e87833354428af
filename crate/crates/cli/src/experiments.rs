//! Parameter sweeps behind the CLI commands. Work items run on the rayon
//! pool; results are returned in a fixed order regardless of thread count.

use noma_core::dual::bisection_search;
use noma_core::dynamics::ActionFilter;
use noma_core::mdp::{evaluate_policy_exact, solve, Model};
use noma_core::sim::{sample_episode, MonteCarloAccumulator, MonteCarloEstimates};
use noma_core::{Policy, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::CliError;

/// One `(filter, λ)` point of a multiplier sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub filter: ActionFilter,
    pub lambda: f64,
    /// Optimal return from the initial state, `f(λ)`.
    pub dual_value: f64,
    pub outage_prob: f64,
    pub expected_capacity: f64,
}

/// Points of the default multiplier grid besides zero.
pub const DEFAULT_GRID_POINTS: usize = 48;

/// Zero plus a log-spaced grid from `1e-3` up to `T·max(ℛ₂)·2¹⁰`, with
/// `extra` (typically λ*) merged in. Sorted and deduplicated.
pub fn default_lambda_grid(cfg: &ScenarioConfig, extra: Option<f64>) -> Vec<f64> {
    let top = f64::from(cfg.horizon * cfg.max_rate_2().max(1)) * 1024.0;
    let bottom: f64 = 1e-3;
    let step = (top / bottom).ln() / (DEFAULT_GRID_POINTS - 1) as f64;
    let mut grid: Vec<f64> = std::iter::once(0.0)
        .chain((0..DEFAULT_GRID_POINTS).map(|i| bottom * (step * i as f64).exp()))
        .chain(extra)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Solves and exactly evaluates `π_λ` for every filter and λ. Rows are
/// grouped by filter in the given order, then by ascending λ.
pub fn lambda_sweep(cfg: &ScenarioConfig, grid: &[f64], filters: &[ActionFilter]) -> Vec<SweepRow> {
    let mut lambdas = grid.to_vec();
    lambdas.sort_by(f64::total_cmp);
    let models: Vec<Model> = filters.iter().map(|&f| Model::new(cfg, f)).collect();
    let items: Vec<(usize, f64)> = (0..filters.len())
        .flat_map(|i| lambdas.iter().map(move |&l| (i, l)))
        .collect();
    items
        .par_iter()
        .map(|&(i, lambda)| {
            let sol = solve(&models[i], lambda);
            let eval = evaluate_policy_exact(cfg, &sol.policy);
            SweepRow {
                filter: filters[i],
                lambda,
                dual_value: sol.values.initial(),
                outage_prob: eval.outage_prob,
                expected_capacity: eval.expected_capacity,
            }
        })
        .collect()
}

/// Random user placement: distances uniform on `[10, 100]` m and
/// large-scale fading `β = 1e-3·d⁻²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub distance: [f64; 2],
}

impl Placement {
    pub const MIN_DISTANCE_M: f64 = 10.0;
    pub const MAX_DISTANCE_M: f64 = 100.0;

    /// Placement number `index` of the stream seeded by `seed`.
    pub fn draw(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index));
        let range = Self::MIN_DISTANCE_M..=Self::MAX_DISTANCE_M;
        let d1 = rng.random_range(range.clone());
        Self {
            distance: [d1, rng.random_range(range)],
        }
    }

    pub fn beta(&self) -> [f64; 2] {
        self.distance.map(|d| 1e-3 / (d * d))
    }
}

/// Mean capacity over feasible placements for one `(filter, δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaRow {
    pub filter: ActionFilter,
    pub delta: f64,
    /// `None` when every placement was infeasible.
    pub mean_capacity: Option<f64>,
    pub feasible: usize,
    pub infeasible: usize,
}

/// Constrained-optimal capacity of each filter per outage threshold,
/// averaged over `realizations` random placements. Infeasible placements are
/// excluded from the mean and counted.
pub fn delta_sweep(
    template: &ScenarioConfig,
    deltas: &[f64],
    filters: &[ActionFilter],
    realizations: u64,
    seed: u64,
    epsilon: f64,
) -> Result<Vec<DeltaRow>, CliError> {
    let mut deltas = deltas.to_vec();
    deltas.sort_by(f64::total_cmp);
    let mut configs = Vec::with_capacity(realizations as usize);
    for m in 0..realizations {
        let [b1, b2] = Placement::draw(seed, m).beta();
        let placed = template.with_fading(b1, b2)?;
        for &delta in &deltas {
            configs.push(placed.with_delta(delta)?);
        }
    }
    let items: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..filters.len()).map(move |f| (c, f)))
        .collect();
    let results: Vec<Option<f64>> = items
        .par_iter()
        .map(|&(c, f)| {
            let r = bisection_search(&configs[c], epsilon, filters[f]);
            r.feasible.then_some(r.eval.expected_capacity)
        })
        .collect();

    let mut rows = Vec::new();
    for (f, &filter) in filters.iter().enumerate() {
        for (d, &delta) in deltas.iter().enumerate() {
            let caps: Vec<f64> = (0..realizations as usize)
                .filter_map(|m| results[(m * deltas.len() + d) * filters.len() + f])
                .collect();
            let mean_capacity = (!caps.is_empty()).then(|| caps.iter().sum::<f64>() / caps.len() as f64);
            rows.push(DeltaRow {
                filter,
                delta,
                mean_capacity,
                feasible: caps.len(),
                infeasible: realizations as usize - caps.len(),
            });
        }
    }
    Ok(rows)
}

/// Parallel version of [`noma_core::sim::monte_carlo`] with identical output.
pub fn par_monte_carlo(
    cfg: &ScenarioConfig,
    policy: &Policy,
    lambda: f64,
    episodes: u64,
    seed: u64,
) -> MonteCarloEstimates {
    let summaries: Vec<(u32, bool, f64)> = (0..episodes)
        .into_par_iter()
        .map(|m| {
            let ep = sample_episode(cfg, policy, lambda, seed.wrapping_add(m));
            (ep.capacity, ep.success, ep.realized_return)
        })
        .collect();
    let mut acc = MonteCarloAccumulator::default();
    for (c, s, r) in summaries {
        acc.push_summary(c, s, r);
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use noma_core::sim::monte_carlo;
    use noma_core::ScenarioParams;

    #[test]
    fn parallel_monte_carlo_matches_sequential() {
        let cfg = ScenarioParams::reference().validate().unwrap();
        let sol = solve(&Model::new(&cfg, ActionFilter::Full), 20.0);
        assert_eq!(
            par_monte_carlo(&cfg, &sol.policy, 20.0, 500, 3),
            monte_carlo(&cfg, &sol.policy, 20.0, 500, 3)
        );
    }

    #[test]
    fn default_grid_shape() {
        let cfg = ScenarioParams::reference().validate().unwrap();
        let grid = default_lambda_grid(&cfg, Some(3.25));
        assert_eq!(grid.len(), DEFAULT_GRID_POINTS + 2);
        assert_eq!(grid[0], 0.0);
        assert!((grid.last().unwrap() - 16384.0).abs() < 1e-6);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn placements_in_range_and_seeded() {
        for m in 0..50 {
            let p = Placement::draw(11, m);
            assert!(p.distance.iter().all(|d| (10.0..=100.0).contains(d)));
            assert_eq!(p, Placement::draw(11, m));
        }
        assert!(
            (Placement {
                distance: [10.0, 100.0]
            }
            .beta()[1]
                - 1e-7)
                .abs()
                < 1e-20
        );
    }

    #[test]
    fn single_placement_single_delta() {
        let cfg = ScenarioParams::placement_reference().validate().unwrap();
        let rows = delta_sweep(&cfg, &[0.1], &ActionFilter::ALL, 1, 5, 1e-4).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.feasible + r.infeasible == 1));
    }

    #[test]
    fn zero_multiplier_row_is_pure_capacity() {
        let cfg = ScenarioParams::reference().validate().unwrap();
        let rows = lambda_sweep(&cfg, &[0.0, 5.0], &[ActionFilter::Full]);
        assert!((rows[0].dual_value - rows[0].expected_capacity).abs() < 1e-9);
    }
}
