//! Short command-line forms for bases and digit maps. Anything starting
//! with `{` is parsed as the JSON form used in config files.

use cantorlab_core::{BaseRule, DigitMap, DigitTable};

use crate::error::{LabError, LabResult};

fn num<T: std::str::FromStr>(flag: &str, s: &str) -> LabResult<T>
where
    T::Err: std::fmt::Display,
{
    s.trim()
        .parse()
        .map_err(|e| LabError::config(flag, format!("`{s}`: {e}")))
}

/// `2`, `constant:2`, `periodic:2,3`, `affine:1,2`, `factorial`, or JSON.
pub fn parse_base(s: &str) -> LabResult<BaseRule> {
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(|e| LabError::config("--base", e));
    }
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    match kind {
        "factorial" => Ok(BaseRule::Affine { c: 1, d: 2 }),
        "constant" => Ok(BaseRule::Constant {
            q: num("--base", arg)?,
        }),
        "periodic" => Ok(BaseRule::Periodic {
            pattern: arg
                .split(',')
                .map(|a| num("--base", a))
                .collect::<LabResult<_>>()?,
        }),
        "affine" => {
            let (c, d) = arg
                .split_once(',')
                .ok_or_else(|| LabError::config("--base", "affine needs `c,d`"))?;
            Ok(BaseRule::Affine {
                c: num("--base", c)?,
                d: num("--base", d)?,
            })
        }
        _ if arg.is_empty() => Ok(BaseRule::Constant {
            q: num("--base", kind)?,
        }),
        _ => Err(LabError::config(
            "--base",
            format!("unknown base form `{s}`"),
        )),
    }
}

/// `radical-inverse`, `polynomial:ALPHA`, `geometric:BETA`,
/// `symmetric-ternary`, `skewed-polyweight`, `zero`, or JSON.
pub fn parse_map(s: &str) -> LabResult<DigitMap> {
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(|e| LabError::config("--map", e));
    }
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    match kind {
        "radical-inverse" | "vdc" => Ok(DigitMap::RadicalInverse),
        "polynomial" => Ok(DigitMap::Polynomial {
            alpha: num("--map", arg)?,
            g: DigitTable::Identity,
        }),
        "geometric" => Ok(DigitMap::Geometric {
            beta: num("--map", arg)?,
            g: DigitTable::Identity,
        }),
        "symmetric-ternary" => Ok(DigitMap::SymmetricTernary),
        "skewed-polyweight" | "skewed" => Ok(DigitMap::SkewedPolyweight),
        "zero" => Ok(DigitMap::Zero),
        _ => Err(LabError::config("--map", format!("unknown map form `{s}`"))),
    }
}
