//! Flat key-value experiment configuration.
//!
//! One `key = value` assignment per line; `#` starts a comment. Every key is
//! optional and overrides the corresponding field of the subcommand's
//! preset. Momenta are single integers in one dimension (`1:0.5`) and
//! comma-separated pairs in two (`1,0:0.25`); the interaction list is a
//! bracketed, semicolon-separated array such as `[0:1.0; 1:0.5; -1:0.5]`.
//!
//! Parsing reports *every* problem in the file at once rather than stopping
//! at the first, so a bad config needs only one round trip to fix.

use gibbslab::classical::CovarianceKind;
use gibbslab::experiments::ExperimentConfig;

/// Parsed assignments; `None` means the key was absent and the preset value
/// stands.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub dim: Option<u8>,
    pub kappa: Option<f64>,
    pub cutoff: Option<f64>,
    pub interaction: Option<Vec<([i64; 2], f64)>>,
    pub t_grid: Option<Vec<f64>>,
    pub n_max: Option<u32>,
    pub tail_target: Option<f64>,
    pub samples: Option<usize>,
    pub batches: Option<usize>,
    pub seed: Option<u64>,
    pub covariance: Option<CovarianceKind>,
    pub renormalized: Option<bool>,
    pub nu: Option<f64>,
    pub coupling: Option<f64>,
    pub k_split: Option<f64>,
}

const KNOWN_KEYS: [&str; 15] = [
    "dim",
    "kappa",
    "cutoff",
    "w",
    "t_grid",
    "n_max",
    "tail_target",
    "samples",
    "batches",
    "seed",
    "covariance",
    "renormalized",
    "nu",
    "coupling",
    "k_split",
];

/// Parses the config text, returning either the overrides or the full list
/// of problems found.
pub fn parse_overrides(text: &str) -> Result<Overrides, Vec<String>> {
    let mut errors = Vec::new();
    let mut seen: Vec<String> = Vec::new();
    let mut pairs: Vec<(usize, String, String)> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some(eq) = line.find('=') else {
            errors.push(format!("line {line_no}: expected `key = value`, got `{line}`"));
            continue;
        };
        let key = line[..eq].trim().to_string();
        let value = line[eq + 1..].trim().to_string();
        if key.is_empty() || value.is_empty() {
            errors.push(format!("line {line_no}: empty key or value"));
            continue;
        }
        if !KNOWN_KEYS.contains(&key.as_str()) {
            errors.push(format!("line {line_no}: unknown key `{key}`"));
            continue;
        }
        if seen.contains(&key) {
            errors.push(format!("line {line_no}: duplicate key `{key}`"));
            continue;
        }
        seen.push(key.clone());
        pairs.push((line_no, key, value));
    }

    // The interaction momenta cannot be interpreted without the dimension,
    // so resolve `dim` first regardless of where it appears in the file.
    let mut dim = 1u8;
    for (line_no, key, value) in &pairs {
        if key == "dim" {
            match value.parse::<u8>() {
                Ok(d @ (1 | 2)) => dim = d,
                Ok(d) => errors.push(format!("line {line_no}: dim must be 1 or 2, got {d}")),
                Err(_) => errors.push(format!("line {line_no}: dim must be 1 or 2, got `{value}`")),
            }
        }
    }

    let mut out = Overrides {
        dim: Some(dim).filter(|_| seen.iter().any(|k| k == "dim")),
        ..Overrides::default()
    };

    for (line_no, key, value) in &pairs {
        let line_no = *line_no;
        match key.as_str() {
            "dim" => {}
            "kappa" => out.kappa = parse_num(line_no, key, value, &mut errors),
            "cutoff" => out.cutoff = parse_num(line_no, key, value, &mut errors),
            "nu" => out.nu = parse_num(line_no, key, value, &mut errors),
            "coupling" => out.coupling = parse_num(line_no, key, value, &mut errors),
            "k_split" => out.k_split = parse_num(line_no, key, value, &mut errors),
            "tail_target" => {
                out.tail_target = parse_num(line_no, key, value, &mut errors);
                if let Some(t) = out.tail_target {
                    if !(t > 0.0) {
                        errors.push(format!("line {line_no}: tail_target must be positive"));
                    }
                }
            }
            "n_max" => out.n_max = parse_num(line_no, key, value, &mut errors),
            "samples" => out.samples = parse_num(line_no, key, value, &mut errors),
            "batches" => out.batches = parse_num(line_no, key, value, &mut errors),
            "seed" => out.seed = parse_num(line_no, key, value, &mut errors),
            "renormalized" => match value.as_str() {
                "true" => out.renormalized = Some(true),
                "false" => out.renormalized = Some(false),
                other => errors.push(format!(
                    "line {line_no}: renormalized must be true or false, got `{other}`"
                )),
            },
            "covariance" => match value.to_ascii_lowercase().as_str() {
                "massive" => out.covariance = Some(CovarianceKind::Massive),
                "thermal" => out.covariance = Some(CovarianceKind::Thermal),
                other => errors.push(format!(
                    "line {line_no}: covariance must be `massive` or `thermal`, got `{other}`"
                )),
            },
            "t_grid" => {
                let mut grid = Vec::new();
                for part in value.split(',') {
                    match part.trim().parse::<f64>() {
                        Ok(t) if t > 0.0 => grid.push(t),
                        Ok(t) => errors.push(format!(
                            "line {line_no}: t_grid entries must be positive, got {t}"
                        )),
                        Err(_) => errors.push(format!(
                            "line {line_no}: t_grid entry `{}` is not a number",
                            part.trim()
                        )),
                    }
                }
                if grid.is_empty() {
                    errors.push(format!("line {line_no}: t_grid is empty"));
                } else {
                    out.t_grid = Some(grid);
                }
            }
            "w" => out.interaction = parse_interaction(line_no, value, dim, &mut errors),
            _ => unreachable!("key list already filtered"),
        }
    }

    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

fn parse_num<T: std::str::FromStr>(
    line_no: usize,
    key: &str,
    value: &str,
    errors: &mut Vec<String>,
) -> Option<T> {
    match value.parse::<T>() {
        Ok(v) => Some(v),
        Err(_) => {
            errors.push(format!("line {line_no}: {key} has invalid value `{value}`"));
            None
        }
    }
}

fn parse_interaction(
    line_no: usize,
    value: &str,
    dim: u8,
    errors: &mut Vec<String>,
) -> Option<Vec<([i64; 2], f64)>> {
    let inner = value
        .strip_prefix('[')
        .and_then(|rest| rest.strip_suffix(']'));
    let Some(inner) = inner else {
        errors.push(format!(
            "line {line_no}: w must be a bracketed list like [0:1.0; 1:0.5]"
        ));
        return None;
    };
    let mut entries: Vec<([i64; 2], f64)> = Vec::new();
    let before = errors.len();
    for piece in inner.split(';') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        let Some((mom, weight)) = piece.rsplit_once(':') else {
            errors.push(format!(
                "line {line_no}: w entry `{piece}` needs a momentum:weight pair"
            ));
            continue;
        };
        let comps: Vec<&str> = mom.split(',').map(str::trim).collect();
        if comps.len() != dim as usize {
            errors.push(format!(
                "line {line_no}: w momentum `{}` has {} component(s) but dim = {dim}",
                mom.trim(),
                comps.len()
            ));
            continue;
        }
        let mut k = [0i64; 2];
        let mut bad = false;
        for (slot, comp) in k.iter_mut().zip(&comps) {
            match comp.parse::<i64>() {
                Ok(v) => *slot = v,
                Err(_) => {
                    errors.push(format!(
                        "line {line_no}: w momentum component `{comp}` is not an integer"
                    ));
                    bad = true;
                }
            }
        }
        let wk = match weight.trim().parse::<f64>() {
            Ok(v) => v,
            Err(_) => {
                errors.push(format!(
                    "line {line_no}: w[{}] has invalid weight `{}`",
                    mom.trim(),
                    weight.trim()
                ));
                continue;
            }
        };
        if bad {
            continue;
        }
        if wk < 0.0 {
            errors.push(format!(
                "line {line_no}: w[{}] is negative ({wk}); interaction weights must be nonnegative",
                mom.trim()
            ));
            continue;
        }
        if entries.iter().any(|(prev, _)| *prev == k) {
            errors.push(format!(
                "line {line_no}: duplicate interaction momentum [{}]",
                mom.trim()
            ));
            continue;
        }
        entries.push((k, wk));
    }
    if errors.len() > before {
        None
    } else {
        Some(entries)
    }
}

/// Lays the parsed overrides over a preset.
pub fn apply_overrides(mut base: ExperimentConfig, o: &Overrides) -> ExperimentConfig {
    if let Some(v) = o.dim {
        base.dim = v;
    }
    if let Some(v) = o.kappa {
        base.kappa = v;
    }
    if let Some(v) = o.cutoff {
        base.cutoff = v;
    }
    if let Some(v) = &o.interaction {
        base.interaction = v.clone();
    }
    if let Some(v) = &o.t_grid {
        base.t_grid = v.clone();
    }
    if let Some(v) = o.n_max {
        base.n_max = Some(v);
    }
    if let Some(v) = o.tail_target {
        base.tail_target = v;
    }
    if let Some(v) = o.samples {
        base.samples = v;
    }
    if let Some(v) = o.batches {
        base.batches = v;
    }
    if let Some(v) = o.seed {
        base.seed = v;
    }
    if let Some(v) = o.covariance {
        base.covariance = v;
    }
    if let Some(v) = o.renormalized {
        base.renormalized = v;
    }
    if let Some(v) = o.nu {
        base.nu = v;
    }
    if let Some(v) = o.coupling {
        base.coupling = v;
    }
    if let Some(v) = o.k_split {
        base.k_split = v;
    }
    base
}
