//! Flag and config-file resolution.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use fused_strip::mpa::abcd_from_model;
use fused_strip::{ABCDParams, AwModel, DownRightPath, ModelParams};
use serde_json::{json, Value};

pub const DEFAULT_MODEL: ModelParams = ModelParams { spin: 1, q: 0.5, kappa: 0.5, aa: 3.0, bb: 3.2, cc: 0.05, dd: 0.1 };
pub const DEFAULT_WIDTH: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Options shared by all subcommands; every one may also come from `--config`.
#[derive(Args, Debug, Default, Clone)]
pub struct Common {
    /// Flat TOML file of `key = value` pairs named like the long flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub spin: Option<usize>,
    #[arg(long, global = true)]
    pub q: Option<f64>,
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    #[arg(long, global = true)]
    pub aa: Option<f64>,
    #[arg(long, global = true)]
    pub bb: Option<f64>,
    #[arg(long, global = true)]
    pub cc: Option<f64>,
    #[arg(long, global = true)]
    pub dd: Option<f64>,
    /// `A,B,C,D` in place of the boundary parameters.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub abcd: Option<String>,
    /// `zigzag`, `horizontal`, or a step string over `D`/`R` (or `0`/`1`).
    #[arg(long, global = true)]
    pub path: Option<String>,
    #[arg(long, global = true)]
    pub width: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long = "burn-in", global = true)]
    pub burn_in: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub rational: bool,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

/// Flat key-value configuration; dashes and underscores in keys are equivalent.
#[derive(Debug, Default)]
pub struct FileConfig(toml::Table);

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let raw: toml::Table = text.parse().with_context(|| format!("parsing {}", path.display()))?;
        let mut table = toml::Table::new();
        for (k, v) in raw {
            if v.is_table() || v.is_array() {
                bail!("config key `{k}`: nested values are not supported");
            }
            table.insert(k.replace('-', "_"), v);
        }
        Ok(FileConfig(table))
    }

    fn raw(&self, key: &str) -> Option<&toml::Value> {
        self.0.get(key)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(toml::Value::Float(x)) => Ok(Some(*x)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => bail!("config key `{key}`: expected a number, found {v}"),
        }
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(v) => bail!("config key `{key}`: expected a nonnegative integer, found {v}"),
        }
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        Ok(self.u64(key)?.map(|x| x as usize))
    }

    pub fn string(&self, key: &str) -> Result<Option<String>> {
        match self.raw(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(v @ (toml::Value::Integer(_) | toml::Value::Float(_))) => Ok(Some(v.to_string())),
            Some(v) => bail!("config key `{key}`: expected a string, found {v}"),
        }
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>> {
        match self.raw(key) {
            None => Ok(None),
            Some(toml::Value::Boolean(b)) => Ok(Some(*b)),
            Some(v) => bail!("config key `{key}`: expected a boolean, found {v}"),
        }
    }
}

/// A problem with the options rather than with the computation.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// The two ways of specifying a model.
#[derive(Clone, Copy, Debug)]
pub enum Params {
    Model(ModelParams),
    Aw(AwModel),
}

impl Params {
    pub fn model(&self) -> Result<ModelParams> {
        match self {
            Params::Model(p) => Ok(*p),
            Params::Aw(_) => {
                Err(UsageError("this command needs the boundary parameters --aa --bb --cc --dd, not --abcd".into()).into())
            }
        }
    }

    pub fn aw(&self) -> Result<AwModel> {
        match self {
            Params::Model(p) => Ok(AwModel { abcd: abcd_from_model(p)?, kappa: p.kappa, spin: p.spin }),
            Params::Aw(m) => Ok(*m),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Params::Model(p) => {
                let derived = abcd_from_model(p).ok().map(|a| json!({"A": a.a, "B": a.b, "C": a.c, "D": a.d}));
                json!({
                    "spin": p.spin, "q": p.q, "kappa": p.kappa,
                    "aa": p.aa, "bb": p.bb, "cc": p.cc, "dd": p.dd,
                    "abcd": derived,
                })
            }
            Params::Aw(m) => json!({
                "spin": m.spin, "q": m.abcd.q, "kappa": m.kappa,
                "abcd": {"A": m.abcd.a, "B": m.abcd.b, "C": m.abcd.c, "D": m.abcd.d},
            }),
        }
    }
}

/// Fully resolved options.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub params: Params,
    pub path: DownRightPath,
    pub path_spec: String,
    pub seed: u64,
    pub samples: Option<usize>,
    pub burn_in: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub rational: bool,
    pub tol: Option<f64>,
    pub file: std::sync::Arc<FileConfig>,
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| anyhow!("`{t}`: {e}")))
        .collect()
}

/// `lo:hi:count` or a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [lo, hi, count] => {
            let (lo, hi): (f64, f64) = (lo.trim().parse()?, hi.trim().parse()?);
            let count: usize = count.trim().parse()?;
            if count == 0 {
                bail!("grid `{s}` has no points");
            }
            if count == 1 {
                return Ok(vec![lo]);
            }
            Ok((0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect())
        }
        [_] => parse_list(s),
        _ => bail!("grid `{s}`: expected lo:hi:count or a list"),
    }
}

fn build_path(spec: &str, width: Option<usize>) -> Result<DownRightPath> {
    let path = match spec {
        "zigzag" => DownRightPath::zigzag(width.unwrap_or(DEFAULT_WIDTH)),
        "horizontal" => DownRightPath::horizontal(width.unwrap_or(DEFAULT_WIDTH)),
        steps => DownRightPath::parse(steps)?,
    };
    if path.width() == 0 {
        bail!("empty path");
    }
    if let Some(n) = width {
        if n != path.width() {
            bail!("--width {n} does not match path `{spec}` of width {}", path.width());
        }
    }
    Ok(path)
}

impl Common {
    pub fn resolve(&self) -> Result<Resolved> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let f = |flag: Option<f64>, key: &str| -> Result<Option<f64>> { Ok(flag.or(file.f64(key)?)) };
        let spin = self.spin.or(file.usize("spin")?).unwrap_or(DEFAULT_MODEL.spin);
        let q = f(self.q, "q")?.unwrap_or(DEFAULT_MODEL.q);
        let kappa = f(self.kappa, "kappa")?.unwrap_or(DEFAULT_MODEL.kappa);

        let flag_model = [self.aa, self.bb, self.cc, self.dd].iter().any(Option::is_some);
        let file_model = ["aa", "bb", "cc", "dd"].iter().any(|k| file.raw(k).is_some());
        let file_abcd = file.string("abcd")?;
        if self.abcd.is_some() && flag_model {
            bail!("give either --abcd or the boundary parameters, not both");
        }
        if !flag_model && self.abcd.is_none() && file_abcd.is_some() && file_model {
            bail!("config gives both abcd and boundary parameters");
        }
        let abcd_text = if flag_model { None } else { self.abcd.clone().or(file_abcd) };
        let params = match abcd_text {
            Some(text) => {
                let v = parse_list(&text).context("--abcd")?;
                let [a, b, c, d] = v.as_slice() else { bail!("--abcd needs four values A,B,C,D") };
                let abcd = ABCDParams::new(*a, *b, *c, *d, q);
                abcd.validate()?;
                Params::Aw(AwModel { abcd, kappa, spin })
            }
            None => Params::Model(ModelParams {
                    spin,
                    q,
                    kappa,
                    aa: self.aa.or(file.f64("aa")?).unwrap_or(DEFAULT_MODEL.aa),
                    bb: self.bb.or(file.f64("bb")?).unwrap_or(DEFAULT_MODEL.bb),
                    cc: self.cc.or(file.f64("cc")?).unwrap_or(DEFAULT_MODEL.cc),
                    dd: self.dd.or(file.f64("dd")?).unwrap_or(DEFAULT_MODEL.dd),
            }),
        };

        let width = self.width.or(file.usize("width")?);
        let path_spec = self.path.clone().or(file.string("path")?).unwrap_or_else(|| "zigzag".into());
        let path = build_path(&path_spec, width)?;
        let format = match self.format {
            Some(f) => f,
            None => match file.string("format")?.as_deref() {
                None | Some("csv") => Format::Csv,
                Some("json") => Format::Json,
                Some(other) => bail!("unknown format `{other}`"),
            },
        };
        Ok(Resolved {
            params,
            path,
            path_spec,
            seed: self.seed.or(file.u64("seed")?).unwrap_or(0),
            samples: self.samples.or(file.usize("samples")?),
            burn_in: self.burn_in.or(file.usize("burn_in")?),
            out: self.out.clone().or(file.string("out")?.map(PathBuf::from)),
            format,
            rational: self.rational || file.bool("rational")?.unwrap_or(false),
            tol: f(self.tol, "tol")?,
            file: std::sync::Arc::new(file),
        })
    }
}
