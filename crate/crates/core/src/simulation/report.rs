use serde::Serialize;

use super::dgp::DgpSpec;
use crate::error::{Error, Result};
use crate::inference::Method;
use crate::model::{KappaRule, LambdaMode};

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub two_sided: Estimate,
    pub left: Option<Estimate>,
    pub right: Option<Estimate>,
    /// Absolute c.d.f. error at each point of the report's grid.
    pub cdf_error: Vec<f64>,
}

/// Monte Carlo results for one design and panel size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub design: String,
    pub dgp: DgpSpec,
    pub n: usize,
    pub t: usize,
    pub sims: usize,
    pub replicates: usize,
    pub seed: u64,
    pub alpha: f64,
    pub lambda_mode: LambdaMode,
    pub kappa_rule: KappaRule,
    /// Mean of plug-in variance estimate over true variance of the mean.
    pub an_ratio: Estimate,
    /// Mean of bootstrap variance over true variance of the mean.
    pub bs_ratio: Estimate,
    pub methods: Vec<MethodSummary>,
    pub grid: Vec<f64>,
}

impl McReport {
    pub fn method(&self, m: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == m)
    }

    fn header(&self) -> Vec<String> {
        let mut h: Vec<String> =
            ["design", "n", "t", "sims", "reps", "seed", "alpha", "an", "an_se", "bs", "bs_se"].map(String::from).into();
        for m in &self.methods {
            let k = m.method.name();
            h.extend([format!("{k}_two"), format!("{k}_two_se"), format!("{k}_left"), format!("{k}_right")]);
        }
        h
    }

    fn row(&self) -> Vec<String> {
        let f = |x: f64| format!("{x:.6}");
        let mut r = vec![
            self.design.clone(),
            self.n.to_string(),
            self.t.to_string(),
            self.sims.to_string(),
            self.replicates.to_string(),
            self.seed.to_string(),
            self.alpha.to_string(),
            f(self.an_ratio.value),
            f(self.an_ratio.se),
            f(self.bs_ratio.value),
            f(self.bs_ratio.se),
        ];
        for m in &self.methods {
            let opt = |e: Option<Estimate>| e.map_or(String::new(), |e| f(e.value));
            r.extend([f(m.two_sided.value), f(m.two_sided.se), opt(m.left), opt(m.right)]);
        }
        r
    }

    /// One header line and one data row.
    pub fn to_csv(&self) -> Result<String> {
        reports_to_csv(std::slice::from_ref(self))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}

/// One row per report under the header of the first; all reports must list
/// the same methods.
pub fn reports_to_csv(reports: &[McReport]) -> Result<String> {
    let Some(first) = reports.first() else {
        return Ok(String::new());
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidConfig(e.to_string());
    w.write_record(first.header()).map_err(io)?;
    for r in reports {
        if r.header() != first.header() {
            return Err(Error::InvalidConfig("reports list different methods".into()));
        }
        w.write_record(r.row()).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
