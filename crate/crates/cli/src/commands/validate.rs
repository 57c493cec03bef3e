use std::collections::BTreeSet;
use std::path::PathBuf;

use palletmap_core::annotation::{parse_labels, AnnotationError, DatasetManifest, SplitFractions};
use serde::Serialize;

use crate::config::RunConfig;
use crate::errors::{read_text, usage};
use crate::inputs::print_json;
use crate::Outcome;

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long, env = "PALLETMAP_MANIFEST")]
    manifest: PathBuf,

    /// Expected train,val,test shares, e.g. `0.75,0.10,0.15`.
    #[arg(long, value_parser = parse_fractions)]
    fractions: Option<SplitFractions>,
}

fn parse_fractions(s: &str) -> Result<SplitFractions, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    let [train, val, test] = parts[..] else {
        return Err(format!("expected three comma-separated fractions, got {}", parts.len()));
    };
    SplitFractions::new(train, val, test).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
struct Finding {
    file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    line: Option<usize>,
    message: String,
}

#[derive(Debug, Serialize)]
struct SplitSizes {
    train: usize,
    val: usize,
    test: usize,
}

#[derive(Debug, Serialize)]
struct Report {
    manifest: String,
    images: usize,
    classes: Vec<String>,
    fractions: SplitFractions,
    split_sizes: SplitSizes,
    labels: usize,
    findings: Vec<Finding>,
    ok: bool,
}

pub fn run(args: Args, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let fractions = args.fractions.unwrap_or(cfg.split);
    fractions.validate().map_err(|e| usage(e.to_string()))?;
    let manifest_name = args.manifest.display().to_string();
    let text = read_text(&args.manifest)?;
    let mut findings = Vec::new();
    let manifest = match DatasetManifest::from_json(&text) {
        Ok(m) => m,
        Err(e) => {
            findings.push(finding(&manifest_name, e));
            let report = Report {
                manifest: manifest_name,
                images: 0,
                classes: vec![],
                fractions,
                split_sizes: SplitSizes { train: 0, val: 0, test: 0 },
                labels: 0,
                findings,
                ok: false,
            };
            print_json(&report)?;
            return Ok(Outcome::Findings);
        }
    };
    let base = args.manifest.parent().map(PathBuf::from).unwrap_or_default();
    let num_classes = manifest.num_classes();
    if num_classes == 0 {
        findings.push(Finding { file: manifest_name.clone(), line: None, message: "no classes listed".into() });
    }

    let mut seen = BTreeSet::new();
    let mut labels = 0;
    for entry in &manifest.images {
        if !seen.insert(entry.id.as_str()) {
            findings.push(Finding {
                file: manifest_name.clone(),
                line: None,
                message: format!("duplicate image id `{}`", entry.id),
            });
        }
        if entry.width == 0 || entry.height == 0 {
            findings.push(Finding {
                file: manifest_name.clone(),
                line: None,
                message: format!("image `{}` has size {}x{}", entry.id, entry.width, entry.height),
            });
            continue;
        }
        let path = base.join(&entry.labels);
        let file = path.display().to_string();
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                findings.push(Finding { file, line: None, message: format!("cannot read label file: {e}") });
                continue;
            }
        };
        // line by line so every bad line is reported, not just the first
        for (i, line) in text.lines().enumerate() {
            match parse_labels(line, entry.width as f64, entry.height as f64, num_classes) {
                Ok(gts) => labels += gts.len(),
                Err(e) => {
                    let mut f = finding(&file, e);
                    f.line = Some(i + 1);
                    findings.push(f);
                }
            }
        }
    }

    for (split, count, expected) in manifest.split_mismatches(&fractions) {
        findings.push(Finding {
            file: manifest_name.clone(),
            line: None,
            message: format!("{split:?} split has {count} images, expected about {expected:.1}").to_lowercase(),
        });
    }

    let [train, val, test] = manifest.split_sizes();
    let ok = findings.is_empty();
    print_json(&Report {
        manifest: manifest_name,
        images: manifest.images.len(),
        classes: manifest.classes.clone(),
        fractions,
        split_sizes: SplitSizes { train, val, test },
        labels,
        findings,
        ok,
    })?;
    Ok(if ok { Outcome::Clean } else { Outcome::Findings })
}

fn finding(file: &str, err: AnnotationError) -> Finding {
    let (line, message) = match err {
        AnnotationError::Parse { line, message } | AnnotationError::Validation { line, message } => {
            (Some(line), message)
        }
        other => (None, other.to_string()),
    };
    Finding { file: file.to_string(), line, message }
}
