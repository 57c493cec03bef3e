use super::{AnnotationError, ClassId, Detection, GroundTruth, NormalizedAnnotation};

const LABEL_FIELDS: [&str; 5] = ["class", "cx", "cy", "w", "h"];
const PREDICTION_FIELDS: [&str; 6] = ["class", "cx", "cy", "w", "h", "conf"];

struct RawLine {
    line: usize,
    annotation: NormalizedAnnotation,
    confidence: Option<f64>,
}

fn parse_lines(
    text: &str,
    fields: &[&str],
    num_classes: usize,
) -> Result<Vec<RawLine>, AnnotationError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() < fields.len() {
            return Err(AnnotationError::Parse {
                line,
                message: format!("missing field `{}`", fields[tokens.len()]),
            });
        }
        if tokens.len() > fields.len() {
            return Err(AnnotationError::Parse {
                line,
                message: format!("expected {} fields, found {}", fields.len(), tokens.len()),
            });
        }
        let class: u32 = tokens[0].parse().map_err(|_| AnnotationError::Parse {
            line,
            message: format!("field `class` is not a non-negative integer: {:?}", tokens[0]),
        })?;
        let mut values = [0.0f64; 5];
        for (slot, (name, tok)) in values
            .iter_mut()
            .zip(fields[1..].iter().zip(&tokens[1..]))
        {
            *slot = tok.parse().map_err(|_| AnnotationError::Parse {
                line,
                message: format!("field `{name}` is not a number: {tok:?}"),
            })?;
            if !slot.is_finite() {
                return Err(AnnotationError::Parse {
                    line,
                    message: format!("field `{name}` is not finite"),
                });
            }
        }
        if class as usize >= num_classes {
            return Err(AnnotationError::Validation {
                line,
                message: format!("class id {class} out of range for {num_classes} classes"),
            });
        }
        let annotation =
            NormalizedAnnotation::new(ClassId(class), values[0], values[1], values[2], values[3])
                .map_err(|e| AnnotationError::Validation {
                    line,
                    message: e.to_string(),
                })?;
        let confidence = if fields.len() == 6 {
            let conf = values[4];
            if !(0.0..=1.0).contains(&conf) {
                return Err(AnnotationError::Validation {
                    line,
                    message: format!("field `conf`={conf} is outside [0, 1]"),
                });
            }
            Some(conf)
        } else {
            None
        };
        out.push(RawLine {
            line,
            annotation,
            confidence,
        });
    }
    Ok(out)
}

/// Parses a label file into normalized annotations, in file order.
pub fn parse_label_annotations(
    text: &str,
    num_classes: usize,
) -> Result<Vec<NormalizedAnnotation>, AnnotationError> {
    Ok(parse_lines(text, &LABEL_FIELDS, num_classes)?
        .into_iter()
        .map(|r| r.annotation)
        .collect())
}

/// Parses a label file into pixel-space ground truth for an `img_w` x `img_h` image.
pub fn parse_labels(
    text: &str,
    img_w: f64,
    img_h: f64,
    num_classes: usize,
) -> Result<Vec<GroundTruth>, AnnotationError> {
    parse_lines(text, &LABEL_FIELDS, num_classes)?
        .into_iter()
        .map(|r| {
            let bbox = r
                .annotation
                .to_pixel_box(img_w, img_h)
                .map_err(|e| AnnotationError::Validation {
                    line: r.line,
                    message: e.to_string(),
                })?;
            Ok(GroundTruth::new(r.annotation.class_id, bbox))
        })
        .collect()
}

pub fn parse_predictions(
    text: &str,
    img_w: f64,
    img_h: f64,
    num_classes: usize,
) -> Result<Vec<Detection>, AnnotationError> {
    parse_lines(text, &PREDICTION_FIELDS, num_classes)?
        .into_iter()
        .map(|r| {
            let bbox = r
                .annotation
                .to_pixel_box(img_w, img_h)
                .map_err(|e| AnnotationError::Validation {
                    line: r.line,
                    message: e.to_string(),
                })?;
            Detection::new(r.annotation.class_id, bbox, r.confidence.unwrap_or(0.0))
        })
        .collect()
}

/// Fixed ten-decimal rendering with trailing zeros trimmed.
///
/// Ten decimals sit well inside half a lattice step, so re-parsing snaps
/// back to the same lattice point.
fn fmt_coord(v: f64) -> String {
    let s = format!("{v:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

pub fn format_label_line(a: &NormalizedAnnotation) -> String {
    format!(
        "{} {} {} {} {}",
        a.class_id,
        fmt_coord(a.cx()),
        fmt_coord(a.cy()),
        fmt_coord(a.w()),
        fmt_coord(a.h())
    )
}

/// One line per annotation, newline terminated.
pub fn format_labels(anns: &[NormalizedAnnotation]) -> String {
    anns.iter().map(|a| format_label_line(a) + "\n").collect()
}

pub fn format_prediction_line(
    det: &Detection,
    img_w: f64,
    img_h: f64,
) -> Result<String, AnnotationError> {
    let a = NormalizedAnnotation::from_pixel_box(det.class_id, &det.bbox, img_w, img_h)?;
    Ok(format!("{} {}", format_label_line(&a), det.confidence))
}

pub fn format_predictions(
    dets: &[Detection],
    img_w: f64,
    img_h: f64,
) -> Result<String, AnnotationError> {
    let mut out = String::new();
    for d in dets {
        out.push_str(&format_prediction_line(d, img_w, img_h)?);
        out.push('\n');
    }
    Ok(out)
}
