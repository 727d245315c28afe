//! Experiment configuration: a TOML file with nested sections, every
//! field optional with desk-scale defaults. Validation failures carry the
//! offending field or the parser's line/column anchor.

use anyhow::{bail, Context};
use mfg_core::basis::SpectralBasis;
use mfg_core::checks::SuiteConfig;
use mfg_core::forward::ForwardConfig;
use mfg_core::measurement::{EpsilonStencil, Scheme};
use mfg_core::mesh::SpaceGrid;
use mfg_core::running_cost::RunningCost;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub forward: Forward,
    #[serde(default)]
    pub probes: Probes,
    #[serde(default)]
    pub truth: Truth,
    #[serde(default)]
    pub measurement: Measurement,
    #[serde(default)]
    pub reconstruction: Reconstruction,
    #[serde(default)]
    pub linearize_check: LinearizeCheck,
    #[serde(default)]
    pub identity_check: IdentityCheck,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    pub points: usize,
    pub time_steps: usize,
    pub horizon: f64,
}

impl Default for Grids {
    fn default() -> Self {
        Self { points: 257, time_steps: 256, horizon: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Forward {
    pub terminal_cost: f64,
    pub damping: f64,
    pub picard_tol: f64,
    pub max_iters: usize,
    pub small_data_radius: f64,
    /// Amplitude of the cosine perturbation used by the `forward`
    /// subcommand's initial density.
    pub perturbation_amplitude: f64,
}

impl Default for Forward {
    fn default() -> Self {
        let f = ForwardConfig::default();
        Self {
            terminal_cost: f.terminal_cost,
            damping: f.damping,
            picard_tol: f.picard_tol,
            max_iters: f.max_iters,
            small_data_radius: f.small_data_radius,
            perturbation_amplitude: 0.05,
        }
    }
}

impl Forward {
    pub fn to_core(&self) -> ForwardConfig {
        ForwardConfig {
            terminal_cost: self.terminal_cost,
            damping: self.damping,
            picard_tol: self.picard_tol,
            max_iters: self.max_iters,
            small_data_radius: self.small_data_radius,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probes {
    pub mode_max: usize,
    pub couplings: Vec<f64>,
    pub grids: Vec<usize>,
    pub time_steps: usize,
}

impl Default for Probes {
    fn default() -> Self {
        Self {
            mode_max: 8,
            couplings: vec![0.5, 1.0, 2.0, 5.0],
            grids: vec![65, 129, 257],
            time_steps: 64,
        }
    }
}

/// Whitelisted analytic forms for coefficient fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoefficientSpec {
    Constant { value: f64 },
    Mode { index: usize, amplitude: f64 },
    CosineSum { terms: Vec<(usize, f64)> },
    Samples { values: Vec<f64> },
}

impl CoefficientSpec {
    pub fn build(&self, grid: &SpaceGrid, basis: &SpectralBasis) -> anyhow::Result<Vec<f64>> {
        match self {
            CoefficientSpec::Constant { value } => Ok(vec![*value; grid.len()]),
            CoefficientSpec::Mode { index, amplitude } => {
                if *index >= basis.count() {
                    bail!("truth coefficient mode {index} exceeds the basis truncation");
                }
                Ok(basis.values(*index).iter().map(|v| amplitude * v).collect())
            }
            CoefficientSpec::CosineSum { terms } => {
                let mut out = vec![0.0; grid.len()];
                for (index, amplitude) in terms {
                    if *index >= basis.count() {
                        bail!("truth coefficient mode {index} exceeds the basis truncation");
                    }
                    for (o, v) in out.iter_mut().zip(basis.values(*index)) {
                        *o += amplitude * v;
                    }
                }
                Ok(out)
            }
            CoefficientSpec::Samples { values } => {
                if values.len() != grid.len() {
                    bail!(
                        "sampled coefficient has {} values but the grid has {}",
                        values.len(),
                        grid.len()
                    );
                }
                Ok(values.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HigherCoefficient {
    pub order: usize,
    #[serde(flatten)]
    pub spec: CoefficientSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truth {
    pub c1: f64,
    #[serde(default)]
    pub higher: Vec<HigherCoefficient>,
}

impl Default for Truth {
    fn default() -> Self {
        Self {
            c1: 2.0,
            higher: vec![
                HigherCoefficient {
                    order: 2,
                    spec: CoefficientSpec::CosineSum { terms: vec![(1, 0.3), (3, 0.1)] },
                },
                HigherCoefficient {
                    order: 3,
                    spec: CoefficientSpec::Mode { index: 2, amplitude: 0.2 },
                },
            ],
        }
    }
}

impl Truth {
    pub fn build(&self, grid: &SpaceGrid, basis: &SpectralBasis) -> anyhow::Result<RunningCost> {
        let max_order = self.higher.iter().map(|h| h.order).max().unwrap_or(1);
        let mut higher = vec![vec![0.0; grid.len()]; max_order.saturating_sub(1)];
        for h in &self.higher {
            if h.order < 2 {
                bail!("truth.higher orders start at 2, got {}", h.order);
            }
            higher[h.order - 2] = h.spec.build(grid, basis)?;
        }
        Ok(RunningCost::with_higher(self.c1, higher))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Measurement {
    pub epsilons: Vec<f64>,
    pub scheme: String,
    pub noise_level: f64,
    pub seed: u64,
}

impl Default for Measurement {
    fn default() -> Self {
        Self { epsilons: vec![1e-2, 5e-3, 2.5e-3], scheme: "central".into(), noise_level: 0.0, seed: 1 }
    }
}

impl Measurement {
    pub fn stencil(&self) -> anyhow::Result<EpsilonStencil> {
        let scheme = match self.scheme.as_str() {
            "central" => Scheme::Central,
            "one-sided" => Scheme::OneSided,
            other => bail!("measurement.scheme must be 'central' or 'one-sided', got '{other}'"),
        };
        Ok(EpsilonStencil { epsilons: self.epsilons.clone(), scheme })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reconstruction {
    pub mode_cut: usize,
    pub taylor_order: usize,
    pub probe_modes: Vec<usize>,
    pub points: usize,
    pub time_steps: usize,
    pub horizon: f64,
}

impl Default for Reconstruction {
    fn default() -> Self {
        Self {
            mode_cut: 8,
            taylor_order: 3,
            probe_modes: vec![1, 2],
            points: 257,
            time_steps: 256,
            horizon: 0.25,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearizeCheck {
    pub points: usize,
    pub time_steps: usize,
    pub horizon: f64,
    pub c1: f64,
    pub f2_amplitude: f64,
    pub f3_amplitude: f64,
    pub refine: usize,
}

impl Default for LinearizeCheck {
    fn default() -> Self {
        let s = SuiteConfig::default();
        Self {
            points: s.lin_points,
            time_steps: s.lin_steps,
            horizon: s.lin_horizon,
            c1: s.lin_c1,
            f2_amplitude: s.lin_f2_amplitude,
            f3_amplitude: s.lin_f3_amplitude,
            refine: s.lin_refine,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityCheck {
    pub points: usize,
    pub time_steps: usize,
    pub horizon: f64,
}

impl Default for IdentityCheck {
    fn default() -> Self {
        let s = SuiteConfig::default();
        Self { points: s.identity_points, time_steps: s.identity_steps, horizon: s.identity_horizon }
    }
}

impl Config {
    pub fn load(path: Option<&std::path::Path>) -> anyhow::Result<Self> {
        let cfg: Config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read config file {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("invalid config {}", p.display()))?
            }
            None => Config::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.grids.points < 3 {
            bail!("grids.points must be at least 3, got {}", self.grids.points);
        }
        if self.grids.time_steps == 0 {
            bail!("grids.time_steps must be positive");
        }
        if !(self.grids.horizon > 0.0) {
            bail!("grids.horizon must be positive, got {}", self.grids.horizon);
        }
        if !(self.forward.damping > 0.0 && self.forward.damping <= 1.0) {
            bail!("forward.damping must lie in (0, 1], got {}", self.forward.damping);
        }
        if self.measurement.epsilons.is_empty() {
            bail!("measurement.epsilons must not be empty");
        }
        if self.measurement.epsilons.iter().any(|e| *e <= 0.0) {
            bail!("measurement.epsilons must be positive");
        }
        if self.reconstruction.probe_modes.iter().any(|m| *m == 0) {
            bail!("reconstruction.probe_modes must not contain the constant mode 0");
        }
        if !(1..=3).contains(&self.reconstruction.taylor_order) {
            bail!(
                "reconstruction.taylor_order must be 1, 2 or 3, got {}",
                self.reconstruction.taylor_order
            );
        }
        Ok(())
    }

    /// The verification-suite view of this configuration.
    pub fn suite(&self) -> SuiteConfig {
        SuiteConfig {
            probe_mode_max: self.probes.mode_max,
            couplings: self.probes.couplings.clone(),
            probe_grids: self.probes.grids.clone(),
            probe_steps: self.probes.time_steps,
            stationary_points: self.grids.points,
            stationary_steps: self.grids.time_steps,
            mass_points: self.grids.points,
            mass_steps: self.grids.time_steps,
            mass_amplitude: self.forward.perturbation_amplitude,
            lin_points: self.linearize_check.points,
            lin_steps: self.linearize_check.time_steps,
            lin_horizon: self.linearize_check.horizon,
            lin_epsilons: self.measurement.epsilons.clone(),
            lin_c1: self.linearize_check.c1,
            lin_f2_amplitude: self.linearize_check.f2_amplitude,
            lin_f3_amplitude: self.linearize_check.f3_amplitude,
            lin_refine: self.linearize_check.refine,
            identity_points: self.identity_check.points,
            identity_steps: self.identity_check.time_steps,
            identity_horizon: self.identity_check.horizon,
            inverse_points: self.reconstruction.points,
            inverse_steps: self.reconstruction.time_steps,
            inverse_horizon: self.reconstruction.horizon,
            inverse_mode_cut: self.reconstruction.mode_cut,
            inverse_c1: self.truth.c1,
            noise_level: if self.measurement.noise_level > 0.0 {
                self.measurement.noise_level
            } else {
                1e-4
            },
            noise_base_seed: self.measurement.seed,
            ..SuiteConfig::default()
        }
    }

    /// Stable FNV-1a hash of the resolved configuration for provenance.
    pub fn hash(&self) -> u64 {
        let text = toml::to_string(self).unwrap_or_default();
        let mut h: u64 = 0xcbf29ce484222325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mfg_core::basis::build_interval_basis;

    #[test]
    fn every_coefficient_kind_parses_and_builds() {
        let text = r#"
            [truth]
            c1 = 1.0
            [[truth.higher]]
            order = 2
            kind = "constant"
            value = 0.5
            [[truth.higher]]
            order = 3
            kind = "mode"
            index = 1
            amplitude = 0.2
        "#;
        let cfg: Config = toml::from_str(text).unwrap();
        let grid = SpaceGrid::interval(33).unwrap();
        let basis = build_interval_basis(&grid, 4).unwrap();
        let cost = cfg.truth.build(&grid, &basis).unwrap();
        assert_eq!(cost.order(), 3);
        assert!(cost.higher[0].iter().all(|v| (v - 0.5).abs() < 1e-15));

        let sum = r#"
            [truth]
            c1 = 2.0
            [[truth.higher]]
            order = 2
            kind = "cosine-sum"
            terms = [[1, 0.3], [2, -0.1]]
        "#;
        let cfg: Config = toml::from_str(sum).unwrap();
        let cost = cfg.truth.build(&grid, &basis).unwrap();
        let c = basis.project(&cost.higher[0]);
        assert!((c[1] - 0.3).abs() < 1e-12);
        assert!((c[2] + 0.1).abs() < 1e-12);

        let samples = format!(
            "[truth]\nc1 = 1.0\n[[truth.higher]]\norder = 2\nkind = \"samples\"\nvalues = [{}]",
            vec!["0.25"; 33].join(", ")
        );
        let cfg: Config = toml::from_str(&samples).unwrap();
        let cost = cfg.truth.build(&grid, &basis).unwrap();
        assert!(cost.higher[0].iter().all(|v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn sampled_array_must_match_the_grid() {
        let cfg: Config = toml::from_str(
            "[truth]\nc1 = 1.0\n[[truth.higher]]\norder = 2\nkind = \"samples\"\nvalues = [1.0, 2.0]",
        )
        .unwrap();
        let grid = SpaceGrid::interval(33).unwrap();
        let basis = build_interval_basis(&grid, 4).unwrap();
        assert!(cfg.truth.build(&grid, &basis).is_err());
    }

    #[test]
    fn validation_catches_bad_fields() {
        let mut cfg = Config::default();
        cfg.grids.points = 1;
        assert!(cfg.validate().is_err());

        let mut cfg = Config::default();
        cfg.forward.damping = 1.5;
        assert!(cfg.validate().is_err());

        let mut cfg = Config::default();
        cfg.reconstruction.probe_modes = vec![0];
        assert!(cfg.validate().is_err());

        let mut cfg = Config::default();
        cfg.measurement.epsilons = vec![-1e-2];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_sections_are_rejected() {
        let result: Result<Config, _> = toml::from_str("[nonsense]\nfoo = 1\n");
        assert!(result.is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = Config::default();
        let mut b = Config::default();
        assert_eq!(a.hash(), b.hash());
        b.truth.c1 = 3.0;
        assert_ne!(a.hash(), b.hash());
    }
}
