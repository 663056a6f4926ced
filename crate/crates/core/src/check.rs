//! Names of the runnable checks.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Check {
    SolitonResidual,
    HamiltonScalar,
    HamiltonTensor,
    FLambda,
    LaplacianTrace,
    Rigidity,
    TraceBounds,
    FlatnessHypotheses,
    CompactIntegral,
    EvolutionIdentities,
    ShapeOperator,
    GrowthBounds,
    LowerBound,
    Coarea,
    UpperVolume,
    LowerVolume,
    OmoriYau,
}

impl Check {
    /// Every check in dependency order.
    pub const ALL: [Check; 17] = [
        Check::SolitonResidual,
        Check::HamiltonScalar,
        Check::HamiltonTensor,
        Check::FLambda,
        Check::LaplacianTrace,
        Check::Rigidity,
        Check::TraceBounds,
        Check::FlatnessHypotheses,
        Check::CompactIntegral,
        Check::EvolutionIdentities,
        Check::ShapeOperator,
        Check::GrowthBounds,
        Check::LowerBound,
        Check::Coarea,
        Check::UpperVolume,
        Check::LowerVolume,
        Check::OmoriYau,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::SolitonResidual => "soliton_residual",
            Check::HamiltonScalar => "hamilton_scalar",
            Check::HamiltonTensor => "hamilton_tensor",
            Check::FLambda => "f_lambda",
            Check::LaplacianTrace => "laplacian_trace",
            Check::Rigidity => "rigidity",
            Check::TraceBounds => "trace_bounds",
            Check::FlatnessHypotheses => "flatness_hypotheses",
            Check::CompactIntegral => "compact_integral",
            Check::EvolutionIdentities => "evolution_identities",
            Check::ShapeOperator => "shape_operator",
            Check::GrowthBounds => "growth_bounds",
            Check::LowerBound => "lower_bound",
            Check::Coarea => "coarea",
            Check::UpperVolume => "upper_volume",
            Check::LowerVolume => "lower_volume",
            Check::OmoriYau => "omori_yau",
        }
    }

    /// Checks whose results this one consumes.
    pub fn prerequisites(self) -> &'static [Check] {
        match self {
            Check::OmoriYau => &[Check::LowerBound],
            _ => &[],
        }
    }

    /// Parses a comma-separated list; `all` selects every check.
    pub fn parse_list(text: &str) -> Result<Vec<Check>, Error> {
        let mut out = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if item == "all" {
                return Ok(Check::ALL.to_vec());
            }
            out.push(item.parse()?);
        }
        if out.is_empty() {
            return Err(Error::UnknownCheck(text.to_string()));
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        let alias = match s {
            "F_Lambda_check" | "f_lambda_check" => "f_lambda",
            "laplacian_trace_check" => "laplacian_trace",
            "rigidity_check" => "rigidity",
            "trace_bounds_check" => "trace_bounds",
            "compact_integral_identity" => "compact_integral",
            "shape_operator_eigen" => "shape_operator",
            "lower_bound_probe" => "lower_bound",
            "coarea_identity_check" => "coarea",
            "upper_volume_check" => "upper_volume",
            "lower_volume_check" => "lower_volume",
            "omori_yau_conditions" => "omori_yau",
            other => other,
        };
        Check::ALL
            .into_iter()
            .find(|c| c.name() == alias)
            .ok_or_else(|| Error::UnknownCheck(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for c in Check::ALL {
            assert_eq!(c.name().parse::<Check>().unwrap(), c);
        }
        assert_eq!("omori_yau_conditions".parse::<Check>().unwrap(), Check::OmoriYau);
    }

    #[test]
    fn lists_are_sorted_into_dependency_order() {
        let l = Check::parse_list("omori_yau, lower_bound,soliton_residual").unwrap();
        assert_eq!(l, vec![Check::SolitonResidual, Check::LowerBound, Check::OmoriYau]);
        assert_eq!(Check::parse_list("all").unwrap().len(), 17);
        assert!(Check::parse_list("bogus").is_err());
        assert!(Check::parse_list("").is_err());
    }
}
