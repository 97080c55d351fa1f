//! Batch run of the zero-count diagnostics over a parameter grid, with a
//! machine-readable pass/fail report.

use pgss::analytics::{
    check_monotone_in_b, check_monotone_in_t, first_horizon_exceeding, fixed_point_gap_scan,
    fixed_point_lower_bound, tower_crosscheck, GapScan, LowerBoundReport, TowerCheck,
};
use pgss::ModelSpec;
use serde::Serialize;

use crate::error::{HarnessError, Result};

/// Initial rate choices relative to the fixed point `b* = 1/(1-γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateChoice {
    Fixed(f64),
    FixedPoint,
    MultipleOfFixedPoint(f64),
}

impl RateChoice {
    pub fn resolve(self, gamma: f64) -> f64 {
        let b_star = 1.0 / (1.0 - gamma);
        match self {
            Self::Fixed(b) => b,
            Self::FixedPoint => b_star,
            Self::MultipleOfFixedPoint(m) => m * b_star,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsSettings {
    pub gammas: Vec<f64>,
    pub b0s: Vec<RateChoice>,
    pub a0s: Vec<f64>,
    /// Horizon for the monotonicity and lower-bound checks.
    pub horizon: usize,
    /// Horizons at which `p_t(b)` is checked along the `b` grid.
    pub b_check_horizons: Vec<usize>,
    pub b_grid_points: usize,
    pub gap_points: usize,
    pub gap_upper: f64,
    /// Zero-probability levels whose first crossing is searched per cell.
    pub crossing_levels: Vec<f64>,
    pub crossing_t_max: usize,
    /// Model used for the Monte Carlo tower checks.
    pub tower_spec: (f64, f64, f64),
    pub tower_pairs: Vec<(usize, usize)>,
    pub tower_replicates: usize,
    pub tower_sigmas: f64,
    pub seed: u64,
}

impl Default for DiagnosticsSettings {
    fn default() -> Self {
        Self {
            gammas: vec![0.3, 0.5, 0.75, 0.9],
            b0s: vec![
                RateChoice::Fixed(0.5),
                RateChoice::FixedPoint,
                RateChoice::MultipleOfFixedPoint(2.0),
            ],
            a0s: vec![0.5, 1.0, 6.5],
            horizon: 200,
            b_check_horizons: vec![1, 2, 5, 20, 200],
            b_grid_points: 200,
            gap_points: 10_000,
            gap_upper: 1.0 - 1e-10,
            crossing_levels: vec![0.99, 1.0 - 1e-3],
            crossing_t_max: 50_000_000,
            tower_spec: (6.5, 1.2, 0.75),
            tower_pairs: vec![(5, 5), (10, 20), (50, 10)],
            tower_replicates: 100_000,
            tower_sigmas: 3.0,
            seed: 20_240_601,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crossing {
    pub level: f64,
    /// `None` if the level was not reached within `crossing_t_max`.
    pub first_t: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub gamma: f64,
    pub b0: f64,
    pub a0: f64,
    /// Zero probability nondecreasing in `t` up to rounding.
    pub monotone_in_t: bool,
    pub strictly_increasing: bool,
    pub worst_decrease: f64,
    pub zero_prob_at_horizon: f64,
    pub crossings: Vec<Crossing>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BGridCheck {
    pub t: usize,
    pub b_min: f64,
    pub b_max: f64,
    pub points: usize,
    pub holds: bool,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaReport {
    pub gamma: f64,
    pub b_star: f64,
    pub monotone_in_b: Vec<BGridCheck>,
    pub lower_bound: LowerBoundReport,
    /// `|p_1(b*) - γ^γ|`.
    pub p1_error: f64,
    pub gap_scan: GapScan,
    /// Largest first horizon with zero probability above 0.99 over this γ's
    /// cells; `None` if some cell never got there.
    pub worst_t_above_099: Option<usize>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TowerEntry {
    #[serde(flatten)]
    pub check: TowerCheck,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub settings: DiagnosticsSettings,
    pub gammas: Vec<GammaReport>,
    pub cells: Vec<CellReport>,
    pub tower: Vec<TowerEntry>,
    pub all_pass: bool,
}

impl DiagnosticsReport {
    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec_pretty(self)
            .map_err(|e| HarnessError::Input(format!("report encoding: {e}")))?;
        v.push(b'\n');
        Ok(v)
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for g in self.gammas.iter().filter(|g| !g.pass) {
            out.push(format!("gamma {}: fixed-point or b-monotonicity check", g.gamma));
        }
        for c in self.cells.iter().filter(|c| !c.pass) {
            out.push(format!("cell gamma {} b0 {} a0 {}", c.gamma, c.b0, c.a0));
        }
        for t in self.tower.iter().filter(|t| !t.pass) {
            out.push(format!("tower (t {}, t0 {})", t.check.t, t.check.t0));
        }
        out
    }
}

fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let ratio = (hi / lo).ln();
    let mut grid: Vec<f64> = (0..n).map(|i| lo * (ratio * i as f64 / (n - 1) as f64).exp()).collect();
    grid[n - 1] = hi;
    grid
}

fn gamma_report(gamma: f64, s: &DiagnosticsSettings) -> Result<GammaReport> {
    let b_star = 1.0 / (1.0 - gamma);
    let (b_min, b_max) = (0.05, 20.0 * b_star);
    let grid = geometric_grid(b_min, b_max, s.b_grid_points.max(2));
    let monotone_in_b = s
        .b_check_horizons
        .iter()
        .map(|&t| {
            let r = check_monotone_in_b(gamma, t, &grid)?;
            Ok(BGridCheck {
                t,
                b_min,
                b_max,
                points: grid.len(),
                holds: r.holds,
                violations: r.violations.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let lower_bound = fixed_point_lower_bound(gamma, s.horizon)?;
    let p1_error = (lower_bound.p1 - gamma.powf(gamma)).abs();
    let gap_scan = fixed_point_gap_scan(gamma, s.gap_points, s.gap_upper)?;
    let pass = monotone_in_b.iter().all(|c| c.holds) && lower_bound.holds && p1_error <= 1e-12 && gap_scan.holds;
    Ok(GammaReport {
        gamma,
        b_star,
        monotone_in_b,
        lower_bound,
        p1_error,
        gap_scan,
        worst_t_above_099: None,
        pass,
    })
}

fn cell_report(spec: &ModelSpec, s: &DiagnosticsSettings) -> Result<CellReport> {
    let mono = check_monotone_in_t(spec, s.horizon)?;
    let worst_decrease = mono
        .values
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(0.0f64, f64::max);
    let zero_prob_at_horizon = mono.values.last().map_or(f64::NAN, |p| p.powf(spec.a0()));
    let crossings = s
        .crossing_levels
        .iter()
        .map(|&level| {
            Ok(Crossing {
                level,
                first_t: first_horizon_exceeding(spec, level, s.crossing_t_max)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = mono.holds && crossings.iter().all(|c| c.first_t.is_some());
    Ok(CellReport {
        gamma: spec.gamma(),
        b0: spec.b0(),
        a0: spec.a0(),
        monotone_in_t: mono.holds,
        strictly_increasing: mono.strict,
        worst_decrease,
        zero_prob_at_horizon,
        crossings,
        pass,
    })
}

/// Runs every check. Failing checks are report entries, not errors; errors
/// are reserved for invalid settings.
pub fn run_diagnostics(settings: &DiagnosticsSettings) -> Result<DiagnosticsReport> {
    use rayon::prelude::*;

    let mut cells_in = Vec::new();
    for &g in &settings.gammas {
        for &b in &settings.b0s {
            for &a in &settings.a0s {
                cells_in.push(ModelSpec::new(a, b.resolve(g), g)?);
            }
        }
    }
    let cells = cells_in
        .par_iter()
        .map(|spec| cell_report(spec, settings))
        .collect::<Result<Vec<_>>>()?;
    let mut gammas = settings
        .gammas
        .iter()
        .map(|&g| gamma_report(g, settings))
        .collect::<Result<Vec<_>>>()?;
    for g in &mut gammas {
        let mut worst = Some(0);
        for c in cells.iter().filter(|c| c.gamma == g.gamma) {
            let t = c.crossings.iter().find(|x| x.level == 0.99).and_then(|x| x.first_t);
            worst = match (worst, t) {
                (Some(w), Some(t)) => Some(w.max(t)),
                _ => None,
            };
        }
        g.worst_t_above_099 = worst.filter(|&w| w > 0);
    }

    let (a0, b0, g) = settings.tower_spec;
    let tower_model = ModelSpec::new(a0, b0, g)?;
    let tower = settings
        .tower_pairs
        .iter()
        .enumerate()
        .map(|(i, &(t, t0))| {
            let check = tower_crosscheck(&tower_model, t, t0, settings.tower_replicates, settings.seed.wrapping_add(i as u64))?;
            let pass = check.within(settings.tower_sigmas);
            Ok(TowerEntry { check, pass })
        })
        .collect::<Result<Vec<_>>>()?;

    let all_pass = gammas.iter().all(|g| g.pass) && cells.iter().all(|c| c.pass) && tower.iter().all(|t| t.pass);
    Ok(DiagnosticsReport {
        settings: settings.clone(),
        gammas,
        cells,
        tower,
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> DiagnosticsSettings {
        DiagnosticsSettings {
            gammas: vec![0.5, 0.75],
            a0s: vec![1.0],
            gap_points: 500,
            crossing_levels: vec![0.99],
            tower_pairs: vec![(3, 4)],
            tower_replicates: 20_000,
            ..Default::default()
        }
    }

    #[test]
    fn quick_grid_passes() {
        let r = run_diagnostics(&quick()).unwrap();
        assert!(r.all_pass, "{:?}", r.failures());
        assert_eq!(r.cells.len(), 6);
        let g = r.gammas.iter().find(|g| g.gamma == 0.75).unwrap();
        assert!((g.lower_bound.bound - 0.421_875).abs() < 1e-15);
        assert!(g.worst_t_above_099.is_some());
        let json: serde_json::Value = serde_json::from_slice(&r.to_json().unwrap()).unwrap();
        assert_eq!(json["all_pass"], true);
    }

    #[test]
    fn grid_endpoints() {
        let g = geometric_grid(0.05, 80.0, 200);
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 0.05);
        assert_eq!(g[199], 80.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
