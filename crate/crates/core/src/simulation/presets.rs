use serde::{Deserialize, Serialize};

use super::dgp::{AlphaLaw, DgpSpec, Family, VarianceRule};
use crate::error::{Error, Result};
use crate::model::{KappaRule, LambdaMode};

/// A simulation design: data-generating process plus the shrinkage settings
/// the bootstrap runs with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub name: String,
    pub description: String,
    pub dgp: DgpSpec,
    pub lambda_mode: LambdaMode,
    pub kappa_rule: KappaRule,
}

fn additive(a: VarianceRule, g: VarianceRule, e: VarianceRule) -> DgpSpec {
    DgpSpec {
        family: Family::Additive,
        sigma_alpha2: a,
        sigma_gamma2: g,
        sigma_eps2: e,
        mu_alpha: 0.0,
        mu_gamma: 0.0,
        alpha_law: AlphaLaw::Lognormal,
        n: 50,
        t: 50,
    }
}

fn design(name: &str, description: &str, dgp: DgpSpec) -> Design {
    Design {
        name: name.into(),
        description: description.into(),
        dgp,
        lambda_mode: LambdaMode::Hat,
        kappa_rule: KappaRule::Log,
    }
}

fn shrunk(mut d: Design) -> Design {
    d.lambda_mode = LambdaMode::Thresholded;
    d.kappa_rule = KappaRule::SqrtHalfLog;
    d
}

/// Named designs. Sizes default to 50 x 50 and are usually overridden.
pub fn presets() -> Vec<Design> {
    use VarianceRule::{Fixed as F, PerCols, PerRows};
    vec![
        design("table1-design1", "additive, skewed row factor, all variances 1", additive(F(1.0), F(1.0), F(1.0))),
        design("table1-design2", "i.i.d. standard normal cells", additive(F(0.0), F(0.0), F(1.0))),
        design(
            "table1-design3",
            "drifting effects with variances 5/T and 5/N",
            additive(PerCols(5.0), PerRows(5.0), F(1.0)),
        ),
        design(
            "table1-design3-alt",
            "drifting effects with variances 1/T and 1/N",
            additive(PerCols(1.0), PerRows(1.0), F(1.0)),
        ),
        design("figure1", "additive with a weak column effect", additive(F(1.0), F(0.2), F(1.0))),
        design("table2-design1", "variances 0.5, 0.1, 0.5", additive(F(0.5), F(0.1), F(0.5))),
        design("table2-design1-alt", "standard deviations 1, 0.5, 1", additive(F(1.0), F(0.25), F(1.0))),
        design("table2-design2", "variances 0.5, 0.5, 1 (vary N at T = 20)", {
            let mut d = additive(F(0.5), F(0.5), F(1.0));
            d.t = 20;
            d
        }),
        shrunk(design(
            "table3-design1",
            "nonseparable product, factor means 1",
            DgpSpec::nonseparable([0.5, 0.5, 0.5], 1.0, 50, 50),
        )),
        shrunk(design(
            "table3-design2",
            "nonseparable product, factor means 0 (degenerate)",
            DgpSpec::nonseparable([0.5, 0.5, 0.1], 0.0, 50, 50),
        )),
    ]
}

pub fn preset(name: &str) -> Result<Design> {
    presets().into_iter().find(|d| d.name == name).ok_or_else(|| Error::UnknownDesign(name.into()))
}
