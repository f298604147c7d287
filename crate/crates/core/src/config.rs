//! Sampling limits and the named dataset presets.

use core::fmt;
use core::str::FromStr;

use thiserror::Error;

/// Every limit the sampler and the auditor enforce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConstraintConfig {
    /// Variables available, `x_1..=x_nvar`.
    pub nvar: u32,
    /// `nprod` is drawn from `min_products..=max_products`.
    pub min_products: u32,
    pub max_products: u32,
    /// `nfac` is drawn from `min_factors..=max_factors`.
    pub min_factors: u32,
    pub max_factors: u32,
    /// Terms in a sampled factor.
    pub max_factor_terms: u32,
    /// Terms in a simplified product.
    pub max_product_terms: u32,
    /// Degree of any endpoint monomial.
    pub max_degree: u32,
    /// Degree of any factor term.
    pub max_factor_degree: u32,
    pub max_vars: u32,
    pub max_product_vars: u32,
    pub max_factor_vars: u32,
    /// Coefficient in the simplified endpoint.
    pub max_coeff: u64,
    /// Coefficient in a simplified product.
    pub max_product_coeff: u64,
    /// Coefficient in a sampled factor.
    pub max_factor_coeff: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{0} must be at least 1")]
    NotPositive(&'static str),
    #[error("{lower} must not exceed {upper}")]
    Inverted {
        lower: &'static str,
        upper: &'static str,
    },
    #[error("unknown preset `{0}`")]
    UnknownPreset(alloc::string::String),
}

impl ConstraintConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive: [(&'static str, u64); 15] = [
            ("nvar", self.nvar.into()),
            ("min_products", self.min_products.into()),
            ("maxP_P", self.max_products.into()),
            ("min_factors", self.min_factors.into()),
            ("maxf_P", self.max_factors.into()),
            ("maxT_f", self.max_factor_terms.into()),
            ("maxT_P", self.max_product_terms.into()),
            ("D_P", self.max_degree.into()),
            ("D_f", self.max_factor_degree.into()),
            ("V_P", self.max_vars.into()),
            ("V_prod", self.max_product_vars.into()),
            ("V_f", self.max_factor_vars.into()),
            ("C_P", self.max_coeff),
            ("C_prod", self.max_product_coeff),
            ("C_f", self.max_factor_coeff),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(ConfigError::NotPositive(name));
            }
        }
        let ordered: [(&'static str, u64, &'static str, u64); 8] = [
            ("min_products", self.min_products.into(), "maxP_P", self.max_products.into()),
            ("min_factors", self.min_factors.into(), "maxf_P", self.max_factors.into()),
            ("C_f", self.max_factor_coeff, "C_prod", self.max_product_coeff),
            ("C_prod", self.max_product_coeff, "C_P", self.max_coeff),
            ("D_f", self.max_factor_degree.into(), "D_P", self.max_degree.into()),
            ("maxT_f", self.max_factor_terms.into(), "maxT_P", self.max_product_terms.into()),
            ("V_f", self.max_factor_vars.into(), "V_prod", self.max_product_vars.into()),
            ("V_prod", self.max_product_vars.into(), "V_P", self.max_vars.into()),
        ];
        for (lower, a, upper, b) in ordered {
            if a > b {
                return Err(ConfigError::Inverted { lower, upper });
            }
        }
        Ok(())
    }

    /// Same limits over a different variable count; variable limits follow.
    pub fn with_nvar(self, nvar: u32) -> Self {
        ConstraintConfig {
            nvar,
            max_vars: nvar,
            max_product_vars: nvar,
            max_factor_vars: nvar,
            ..self
        }
    }
}

/// The named dataset configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Preset {
    SmallCoeff,
    MediumCoeff,
    LargeCoeff,
    NoBacktrack,
    MediumDegree,
    MediumTerms,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::SmallCoeff,
        Preset::MediumCoeff,
        Preset::LargeCoeff,
        Preset::NoBacktrack,
        Preset::MediumDegree,
        Preset::MediumTerms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::SmallCoeff => "small_coeff",
            Preset::MediumCoeff => "medium_coeff",
            Preset::LargeCoeff => "large_coeff",
            Preset::NoBacktrack => "no_backtrack",
            Preset::MediumDegree => "medium_degree",
            Preset::MediumTerms => "medium_terms",
        }
    }

    pub fn config(self, nvar: u32) -> ConstraintConfig {
        // Defaults: medium coefficients, degrees {6,3}, terms {8,3},
        // 3 products of up to 3 factors.
        let base = ConstraintConfig {
            nvar,
            min_products: 2,
            max_products: 3,
            min_factors: 2,
            max_factors: 3,
            max_factor_terms: 3,
            max_product_terms: 8,
            max_degree: 6,
            max_factor_degree: 3,
            max_vars: nvar,
            max_product_vars: nvar,
            max_factor_vars: nvar,
            max_coeff: 120,
            max_product_coeff: 40,
            max_factor_coeff: 8,
        };
        match self {
            Preset::MediumCoeff => base,
            Preset::SmallCoeff => ConstraintConfig {
                max_coeff: 60,
                max_product_coeff: 20,
                max_factor_coeff: 5,
                ..base
            },
            Preset::LargeCoeff => ConstraintConfig {
                max_coeff: 300,
                max_product_coeff: 100,
                max_factor_coeff: 10,
                ..base
            },
            Preset::MediumDegree => ConstraintConfig {
                max_degree: 12,
                max_factor_degree: 5,
                ..base
            },
            Preset::MediumTerms => ConstraintConfig {
                max_product_terms: 20,
                max_factor_terms: 4,
                max_products: 5,
                max_factors: 4,
                ..base
            },
            Preset::NoBacktrack => ConstraintConfig {
                max_coeff: 10125,
                max_product_coeff: 3375,
                max_factor_coeff: 5,
                max_degree: 9,
                max_factor_degree: 3,
                max_product_terms: 27,
                ..base
            },
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ConfigError::UnknownPreset(s.into()))
    }
}
