use anyhow::{anyhow, bail};
use serde::Deserialize;

use fatou_core::numeric::Grid;
use fatou_core::series::XExp;

/// Options as read from a TOML file or the command line; flags win.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<String>,
    #[serde(rename = "N", alias = "n", default, deserialize_with = "int_or_string")]
    pub n: Option<String>,
    #[serde(rename = "M", alias = "m")]
    pub m: Option<u32>,
    pub tol: Option<f64>,
    pub digits: Option<usize>,
    pub grid: Option<String>,
    pub d: Option<f64>,
    pub output: Option<String>,
    pub summary: Option<String>,
    pub format: Option<String>,
    pub max_orbit: Option<usize>,
}

/// N may be written as `N = 4` or `N = "5/2"`.
fn int_or_string<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum IntOrString {
        Int(i64),
        Str(String),
    }
    Ok(Option::<IntOrString>::deserialize(d)?.map(|v| match v {
        IntOrString::Int(i) => i.to_string(),
        IntOrString::Str(s) => s,
    }))
}

impl FileConfig {
    pub fn overridden_by(self, o: FileConfig) -> FileConfig {
        FileConfig {
            input: o.input.or(self.input),
            n: o.n.or(self.n),
            m: o.m.or(self.m),
            tol: o.tol.or(self.tol),
            digits: o.digits.or(self.digits),
            grid: o.grid.or(self.grid),
            d: o.d.or(self.d),
            output: o.output.or(self.output),
            summary: o.summary.or(self.summary),
            format: o.format.or(self.format),
            max_orbit: o.max_orbit.or(self.max_orbit),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub input: Option<String>,
    pub n: XExp,
    pub m: u32,
    pub tol: f64,
    pub digits: usize,
    pub grid: Grid,
    pub d: f64,
    pub max_orbit: usize,
    pub output: Option<String>,
    pub summary: Option<String>,
    pub format: String,
}

impl RunConfig {
    pub fn resolve(c: FileConfig) -> anyhow::Result<RunConfig> {
        let n: XExp = match &c.n {
            Some(s) => s.trim().parse().map_err(|_| anyhow!("N must be an integer or p/q, got '{s}'"))?,
            None => XExp::from_integer(6),
        };
        let tol = c.tol.unwrap_or(1e-9);
        if !(tol > 0.0) {
            bail!("tol must be positive");
        }
        let digits = c.digits.unwrap_or(50);
        if !(10..=1000).contains(&digits) {
            bail!("digits must be in 10..=1000");
        }
        let grid: Grid = c.grid.as_deref().unwrap_or("1e-3:1e-1:20:geom").parse()?;
        let d = c.d.unwrap_or((-1f64).exp());
        if !(d > 0.0 && d < 1.0) {
            bail!("d must lie in (0, 1)");
        }
        let format = c.format.unwrap_or_else(|| "json".into());
        if !["json", "machine", "text"].contains(&format.as_str()) {
            bail!("format must be json, machine or text");
        }
        Ok(RunConfig {
            input: c.input,
            n,
            m: c.m.unwrap_or(6),
            tol,
            digits,
            grid,
            d,
            max_orbit: c.max_orbit.unwrap_or(200_000),
            output: c.output,
            summary: c.summary,
            format,
        })
    }
}
