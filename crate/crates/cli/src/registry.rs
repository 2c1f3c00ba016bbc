//! Built-in market, simulation and SA/DP parameter tables.

use branchmc_core::{HestonParams, ResampleMode, StopPolicy};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
pub enum ParameterSet {
    #[serde(rename = "PS1")]
    #[value(name = "PS1", alias = "ps1")]
    Ps1,
    #[serde(rename = "PS2")]
    #[value(name = "PS2", alias = "ps2")]
    Ps2,
    #[serde(rename = "PS3")]
    #[value(name = "PS3", alias = "ps3")]
    Ps3,
}

/// Per-set simulation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationDefaults {
    pub substeps: usize,
    pub steps_per_year: usize,
    pub combined_r: f64,
    pub c_eff: f64,
    pub c_noneff: f64,
    pub epsilon: f64,
    #[serde(skip)]
    pub stop_policy: StopPolicy,
}

/// Which SA/DP column of the parameter table applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaColumn {
    Branching,
    Bootstrap,
}

impl SaColumn {
    pub fn for_mode(mode: &ResampleMode) -> Self {
        match mode {
            ResampleMode::Bootstrap => SaColumn::Bootstrap,
            _ => SaColumn::Branching,
        }
    }
}

/// Fallback for custom market parameters.
pub const CUSTOM_DEFAULTS: SimulationDefaults = SimulationDefaults {
    substeps: 6,
    steps_per_year: 50,
    combined_r: 1.05,
    c_eff: 1.05,
    c_noneff: 2.0,
    epsilon: 1e-5,
    stop_policy: StopPolicy::Kill,
};

impl ParameterSet {
    pub const ALL: [ParameterSet; 3] = [ParameterSet::Ps1, ParameterSet::Ps2, ParameterSet::Ps3];

    pub fn name(self) -> &'static str {
        match self {
            ParameterSet::Ps1 => "PS1",
            ParameterSet::Ps2 => "PS2",
            ParameterSet::Ps3 => "PS3",
        }
    }

    pub fn market(self) -> HestonParams {
        match self {
            ParameterSet::Ps1 => HestonParams::PS1,
            ParameterSet::Ps2 => HestonParams::PS2,
            ParameterSet::Ps3 => HestonParams::PS3,
        }
    }

    pub fn simulation(self) -> SimulationDefaults {
        match self {
            ParameterSet::Ps1 => SimulationDefaults {
                substeps: 2,
                steps_per_year: 50,
                combined_r: 1.05,
                c_eff: 1.055,
                c_noneff: 0.2,
                epsilon: 1e-10,
                stop_policy: StopPolicy::Freeze,
            },
            ParameterSet::Ps2 => SimulationDefaults {
                substeps: 6,
                steps_per_year: 50,
                combined_r: 1.05,
                c_eff: 1.05,
                c_noneff: 2.0,
                epsilon: 1e-5,
                stop_policy: StopPolicy::Kill,
            },
            ParameterSet::Ps3 => SimulationDefaults {
                substeps: 6,
                steps_per_year: 50,
                combined_r: 1.05,
                c_eff: 1.045,
                c_noneff: 1.5,
                epsilon: 1e-5,
                stop_policy: StopPolicy::Kill,
            },
        }
    }

    /// `(γ, χ)` for `per_variable³` basis functions; only PS2 and PS3 with
    /// 3 to 6 functions per variable are tabulated.
    pub fn sa_parameters(self, per_variable: usize, column: SaColumn) -> Option<(f64, f64)> {
        let row = match (self, per_variable) {
            (ParameterSet::Ps2, 3) => [(3.0, 0.05), (2.0, 0.05)],
            (ParameterSet::Ps2, 4) => [(2.0, 0.10), (1.0, 0.10)],
            (ParameterSet::Ps2, 5) => [(1.0, 0.05), (0.5, 0.05)],
            (ParameterSet::Ps2, 6) => [(0.5, 0.02), (0.25, 0.02)],
            (ParameterSet::Ps3, 3) => [(3.0, 0.05), (2.0, 0.10)],
            (ParameterSet::Ps3, 4) => [(2.0, 0.10), (1.0, 0.10)],
            (ParameterSet::Ps3, 5) => [(1.0, 0.10), (0.5, 0.10)],
            (ParameterSet::Ps3, 6) => [(0.8, 0.10), (0.5, 0.10)],
            _ => return None,
        };
        Some(match column {
            SaColumn::Branching => row[0],
            SaColumn::Bootstrap => row[1],
        })
    }

    pub fn stop_policy(self) -> StopPolicy {
        self.simulation().stop_policy
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulation_table_round_trips_through_toml() {
        let got = toml::to_string(&ParameterSet::Ps2.simulation()).unwrap();
        let expected =
            "substeps = 6\nsteps_per_year = 50\ncombined_r = 1.05\nc_eff = 1.05\nc_noneff = 2.0\nepsilon = 0.00001\n";
        assert_eq!(got, expected);
    }

    #[test]
    fn sa_table_lookups() {
        assert_eq!(ParameterSet::Ps2.sa_parameters(6, SaColumn::Branching), Some((0.5, 0.02)));
        assert_eq!(ParameterSet::Ps3.sa_parameters(3, SaColumn::Bootstrap), Some((2.0, 0.10)));
        assert_eq!(ParameterSet::Ps1.sa_parameters(5, SaColumn::Branching), None);
        assert_eq!(ParameterSet::Ps2.sa_parameters(7, SaColumn::Branching), None);
    }
}
