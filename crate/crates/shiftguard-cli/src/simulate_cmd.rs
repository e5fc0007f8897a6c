//! `simulate` / `compare`: batch studies over a (φ₁, δ, tuning) grid via the
//! simulation lab, with a printed low/median/high ratio summary for the
//! comparison study.

use std::path::PathBuf;

use shiftguard::simlab::{
    summarize_ratios, ComparisonRow, ExperimentGrid, MethodId, SimLab,
};
use shiftguard::{Error, Result};

/// Which study to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StudyChoice {
    /// Out-of-control ARL over the full grid.
    Arl1,
    /// Change-point accuracy replication.
    Accuracy,
    /// Best-tuning comparison ratios.
    Comparison,
    /// Comparison under mis-sized shifts.
    Robustness,
    /// Everything.
    All,
}

/// Flag set accepted by the subcommands.
pub struct SimulateArgs {
    /// Named grid ("desk").
    pub grid: String,
    /// Study selection.
    pub study: StudyChoice,
    /// Output directory.
    pub out: PathBuf,
    /// Repetitions-per-cell override.
    pub n_reps: Option<usize>,
    /// Calibration-repetitions override.
    pub calibration_reps: Option<usize>,
    /// φ₁ grid override.
    pub phi: Option<Vec<f64>>,
    /// δ grid override.
    pub delta: Option<Vec<f64>>,
    /// Window-size grid override.
    pub k: Option<Vec<usize>>,
    /// Ignore calibration caches in the output directory.
    pub fresh: bool,
}

/// Builds the grid from the named preset plus overrides.
pub fn build_grid(args: &SimulateArgs, seed: u64) -> Result<ExperimentGrid> {
    if args.grid != "desk" {
        return Err(Error::InvalidParameter(format!(
            "unknown grid \"{}\" (available: desk)",
            args.grid
        )));
    }
    let mut grid = ExperimentGrid::desk_default(seed);
    if let Some(n) = args.n_reps {
        grid.n_reps = n;
    }
    if let Some(n) = args.calibration_reps {
        grid.calibration_reps = n;
    }
    if let Some(phi) = &args.phi {
        grid.phi_values = phi.clone();
    }
    if let Some(delta) = &args.delta {
        grid.delta_values = delta.clone();
    }
    if let Some(k) = &args.k {
        grid.window_sizes = k.clone();
    }
    grid.validate()?;
    Ok(grid)
}

/// Runs the selected study and writes the manifest.
pub fn cmd_simulate(args: &SimulateArgs, seed: u64) -> Result<()> {
    let grid = build_grid(args, seed)?;
    let mut lab = SimLab::new(grid, &args.out, args.fresh)?;
    match args.study {
        StudyChoice::Arl1 => {
            lab.arl1_study()?;
        }
        StudyChoice::Accuracy => {
            lab.accuracy_study()?;
        }
        StudyChoice::Comparison => {
            let rows = lab.comparison_study()?;
            print_ratio_summary(&rows);
        }
        StudyChoice::Robustness => {
            lab.robustness_study()?;
        }
        StudyChoice::All => {
            lab.arl1_study()?;
            lab.accuracy_study()?;
            let rows = lab.comparison_study()?;
            lab.robustness_study()?;
            print_ratio_summary(&rows);
        }
    }
    lab.write_manifest()
}

/// Prints the comparison-table summary: per slack setting, the smallest,
/// median and largest ARL₁ ratio over the grid.
fn print_ratio_summary(rows: &[ComparisonRow]) {
    println!("setting,low,median,high");
    for setting in [MethodId::CusumS1, MethodId::CusumS2] {
        let ratios: Vec<f64> = rows
            .iter()
            .filter(|r| r.setting == setting && r.factor == 1.0)
            .map(|r| r.ratio)
            .collect();
        if let Ok(s) = summarize_ratios(&ratios) {
            println!("{setting},{:.2},{:.2},{:.2}", s.low, s.median, s.high);
        }
    }
}
