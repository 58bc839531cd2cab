//! Parsing of weight and sign specs, experiment configs, and the CSV/JSON
//! writers used by the command-line tool.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::dyadic::{DyadicTree, StepWeight, DEFAULT_DEPTH, MAX_DEPTH};
use crate::error::{Error, Result};
use crate::factory::WeightSpec;
use crate::operators::{SignPattern, SignPatternSpec};
use crate::verify::{standard_corpus, ExperimentConfig, SeriesPoint, SuiteOutput, Verdict, WeightTriple};

pub const MAX_DEPTH_VAR: &str = "DYADIC_MAX_DEPTH";

/// The depth cap: [`MAX_DEPTH`], lowered (never raised) by `DYADIC_MAX_DEPTH`.
pub fn max_depth() -> Result<u32> {
    match std::env::var(MAX_DEPTH_VAR) {
        Ok(text) => {
            let cap: u32 = text
                .trim()
                .parse()
                .map_err(|_| Error::Spec(format!("{MAX_DEPTH_VAR} must be a non-negative integer, got `{text}`")))?;
            Ok(cap.min(MAX_DEPTH))
        }
        Err(_) => Ok(MAX_DEPTH),
    }
}

pub fn check_depth(depth: u32) -> Result<()> {
    let max = max_depth()?;
    if depth == 0 || depth > max {
        return Err(Error::DepthOutOfRange { depth, max });
    }
    Ok(())
}

/// Parses a weight from the command line.
///
/// Accepted forms: a typed spec (`{"type":"power","depth":5,"alpha":0.5}`), a
/// bare leaf list (`{"depth":1,"leaves":[1,3]}`), `const1`/`const<c>` (needs a
/// depth, falling back to [`DEFAULT_DEPTH`]) and `@path` to read any of these from a file.
pub fn parse_weight(text: &str, depth: Option<u32>) -> Result<StepWeight> {
    let text = text.trim();
    if let Some(path) = text.strip_prefix('@') {
        return parse_weight(&fs::read_to_string(path)?, depth);
    }
    if let Some(value) = text.strip_prefix("const") {
        let value: f64 = value
            .parse()
            .map_err(|_| Error::Spec(format!("bad constant weight `{text}`")))?;
        let depth = depth.unwrap_or(DEFAULT_DEPTH);
        check_depth(depth)?;
        return StepWeight::constant(DyadicTree::new(depth)?, value);
    }
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Spec(format!("bad weight spec: {e}")))?;
    weight_from_value(&value, depth)
}

/// A weight from an already-parsed JSON value; strings go through [`parse_weight`].
pub fn weight_from_value(value: &Value, depth: Option<u32>) -> Result<StepWeight> {
    let spec = match value {
        Value::String(s) => return parse_weight(s, depth),
        Value::Object(map) if map.contains_key("type") => serde_json::from_value::<WeightSpec>(value.clone())
            .map_err(|e| Error::Spec(format!("bad weight spec: {e}")))?,
        Value::Object(_) => {
            #[derive(serde::Deserialize)]
            struct Bare {
                depth: u32,
                leaves: Vec<f64>,
            }
            let bare: Bare =
                serde_json::from_value(value.clone()).map_err(|e| Error::Spec(format!("bad weight spec: {e}")))?;
            WeightSpec::Leaves {
                depth: bare.depth,
                leaves: bare.leaves,
            }
        }
        _ => return Err(Error::Spec(format!("weight spec must be a JSON object, got {value}"))),
    };
    check_depth(spec.depth())?;
    if let Some(expected) = depth {
        if expected != spec.depth() {
            return Err(Error::DepthMismatch {
                expected,
                found: spec.depth(),
            });
        }
    }
    spec.build()
}

/// The leaf-level JSON spec of a weight; [`parse_weight`] rebuilds it bit for bit.
pub fn weight_to_json(w: &StepWeight) -> Result<String> {
    Ok(serde_json::to_string(&WeightSpec::from_weight(w))?)
}

/// `all+`, `all-`, or a JSON [`SignPatternSpec`].
pub fn parse_signs(text: &str, tree: DyadicTree) -> Result<SignPattern> {
    match text.trim() {
        "all+" => Ok(SignPattern::all_plus(tree)),
        "all-" => SignPattern::constant(tree, -1),
        json => {
            let spec: SignPatternSpec =
                serde_json::from_str(json).map_err(|e| Error::Spec(format!("bad sign spec: {e}")))?;
            SignPattern::from_spec(tree, &spec)
        }
    }
}

/// Reads and validates an [`ExperimentConfig`].
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    let config: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| Error::Spec(format!("bad config {}: {e}", path.display())))?;
    validate_config(&config)?;
    Ok(config)
}

pub fn validate_config(config: &ExperimentConfig) -> Result<()> {
    check_depth(config.depth)?;
    if !(config.epsilon > 0.0 && config.epsilon < 1.0) {
        return Err(Error::Spec(format!(
            "epsilon must lie in (0, 1), got {}",
            config.epsilon
        )));
    }
    if config.seeds.0 > config.seeds.1 {
        return Err(Error::Spec(format!(
            "empty seed range [{}, {}]",
            config.seeds.0, config.seeds.1
        )));
    }
    config.claims()?;
    config.tolerances()?;
    Ok(())
}

/// The standard corpus of a config followed by its named `weightSpecs` triples.
///
/// A named triple may omit any of `u`, `v`, `w`; missing ones are the unit weight.
pub fn build_corpus(config: &ExperimentConfig) -> Result<Vec<WeightTriple>> {
    let mut corpus = standard_corpus(
        config.depth,
        config.seeds.0..=config.seeds.1,
        config.epsilon,
        config.include_power,
        config.include_fixtures,
    )?;
    for (k, (name, specs)) in config.weight_specs.iter().enumerate() {
        if let Some(key) = specs.keys().find(|k| !matches!(k.as_str(), "u" | "v" | "w")) {
            return Err(Error::Spec(format!("triple `{name}` has unknown weight `{key}`")));
        }
        let w = match specs.get("w") {
            Some(spec) => weight_from_value(spec, None)?,
            None => StepWeight::ones(DyadicTree::new(config.depth)?),
        };
        let depth = Some(w.depth());
        let get = |key: &str| match specs.get(key) {
            Some(spec) => weight_from_value(spec, depth),
            None => Ok(StepWeight::ones(w.tree())),
        };
        corpus.push(WeightTriple::new(
            name.clone(),
            5000 + k as u64,
            get("u")?,
            get("v")?,
            w,
        )?);
    }
    Ok(corpus)
}

/// Creates `dir` if needed; its parent must already exist.
pub fn prepare_output_dir(dir: &Path) -> Result<()> {
    if let Some(parent) = dir.parent().filter(|p| !p.as_os_str().is_empty()) {
        if !parent.is_dir() {
            return Err(Error::Spec(format!(
                "output directory parent {} does not exist",
                parent.display()
            )));
        }
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct VerdictRow<'a> {
    claim_id: &'a str,
    seed: &'a str,
    depth: u32,
    lhs: f64,
    rhs: f64,
    slack: f64,
    pass: bool,
}

pub fn write_verdicts_csv(path: &Path, verdicts: &[Verdict]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    if verdicts.is_empty() {
        writer.write_record(["claimId", "seed", "depth", "lhs", "rhs", "slack", "pass"])?;
    }
    for v in verdicts {
        writer.serialize(VerdictRow {
            claim_id: &v.claim_id,
            seed: &v.seed,
            depth: v.depth,
            lhs: v.lhs,
            rhs: v.rhs,
            slack: v.slack,
            pass: v.pass,
        })?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// Decade of the relative slack `slack/max(|lhs|, |rhs|)`, clamped to `[-16, 2]`;
/// `None` for non-positive slack.
pub fn slack_decade(v: &Verdict) -> Option<i32> {
    let scale = v.lhs.abs().max(v.rhs.abs());
    let relative = if scale > 0.0 { v.slack / scale } else { v.slack };
    (relative > 0.0).then(|| (relative.log10().floor() as i32).clamp(-16, 2))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct HistogramRow<'a> {
    claim_id: &'a str,
    /// `le0` or the decade exponent.
    bin: String,
    count: usize,
}

/// Counts of verdicts per claim and relative-slack decade.
pub fn write_slack_histogram(path: &Path, verdicts: &[Verdict]) -> Result<()> {
    let mut counts: BTreeMap<(&str, Option<i32>), usize> = BTreeMap::new();
    for v in verdicts {
        *counts.entry((v.claim_id.as_str(), slack_decade(v))).or_default() += 1;
    }
    let mut writer = csv::Writer::from_path(path)?;
    if counts.is_empty() {
        writer.write_record(["claimId", "bin", "count"])?;
    }
    for ((claim_id, decade), count) in counts {
        writer.serialize(HistogramRow {
            claim_id,
            bin: decade.map_or_else(|| "le0".to_string(), |d| d.to_string()),
            count,
        })?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_series_csv(path: &Path, points: &[SeriesPoint]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    if points.is_empty() {
        writer.write_record(["seed", "depth", "x", "y", "ratio"])?;
    }
    for p in points {
        writer.serialize(p)?;
    }
    writer.flush()?;
    Ok(())
}

/// `verdicts.csv`, `verdicts.json`, `slack_histogram.csv` and one `series_<name>.csv` per series.
pub fn write_suite_output(dir: &Path, out: &SuiteOutput) -> Result<()> {
    write_verdicts_csv(&dir.join("verdicts.csv"), &out.verdicts)?;
    write_json(&dir.join("verdicts.json"), &out.verdicts)?;
    write_slack_histogram(&dir.join("slack_histogram.csv"), &out.verdicts)?;
    for (name, points) in &out.series {
        write_series_csv(&dir.join(format!("series_{name}.csv")), points)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_forms() {
        let w = parse_weight(r#"{"type":"leaves","depth":1,"leaves":[1,3]}"#, None).unwrap();
        assert_eq!(w.leaves(), &[1.0, 3.0]);
        let bare = parse_weight(r#"{"depth":1,"leaves":[1,3]}"#, None).unwrap();
        assert_eq!(bare, w);
        let c = parse_weight("const2.5", Some(3)).unwrap();
        assert_eq!(c.depth(), 3);
        assert!(c.leaves().iter().all(|&x| x == 2.5));
        assert_eq!(parse_weight("const1", None).unwrap().depth(), DEFAULT_DEPTH);
        assert!(matches!(parse_weight("nonsense", None), Err(Error::Spec(_))));
        assert!(matches!(
            parse_weight(r#"{"depth":1,"leaves":[1,0]}"#, None),
            Err(Error::NonPositiveLeaf { .. })
        ));
        assert!(matches!(
            parse_weight(r#"{"depth":2,"leaves":[1,1,1,1]}"#, Some(1)),
            Err(Error::DepthMismatch { .. })
        ));
        assert!(matches!(
            parse_weight("const1", Some(13)),
            Err(Error::DepthOutOfRange { .. })
        ));
    }

    #[test]
    fn printed_weights_reparse_bitwise() {
        let w = parse_weight(r#"{"type":"random","depth":6,"seed":9,"epsilon":0.7}"#, None).unwrap();
        let back = parse_weight(&weight_to_json(&w).unwrap(), None).unwrap();
        assert!(w
            .leaves()
            .iter()
            .zip(back.leaves())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn sign_forms() {
        let t = DyadicTree::new(2).unwrap();
        assert!(parse_signs("all+", t).unwrap().signs().iter().all(|&s| s == 1));
        assert!(parse_signs("all-", t).unwrap().signs().iter().all(|&s| s == -1));
        let s = parse_signs(r#"{"default":1,"overrides":{"1,1":-1}}"#, t).unwrap();
        assert_eq!(s.signs(), &[1, 1, -1]);
        assert!(parse_signs("maybe", t).is_err());
    }

    #[test]
    fn output_dir_needs_parent() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(prepare_output_dir(&tmp.path().join("out")).is_ok());
        assert!(matches!(
            prepare_output_dir(&tmp.path().join("missing/out")),
            Err(Error::Spec(_))
        ));
    }

    #[test]
    fn empty_verdicts_still_have_header() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("v.csv");
        write_verdicts_csv(&path, &[]).unwrap();
        assert_eq!(
            fs::read_to_string(path).unwrap().trim(),
            "claimId,seed,depth,lhs,rhs,slack,pass"
        );
    }
}
