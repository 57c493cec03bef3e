//! The raw `S x S x (B * (5 + C))` detector output block.
//!
//! Each box slot holds `(x, y, w, h, objectness, p_0 .. p_{C-1})`. The box
//! fields are read as already-normalized image coordinates: no cell offset
//! or stride arithmetic is applied, because the output activation scheme is
//! a property of the network head and not of this layout.

use super::{AnnotationError, ClassId, Detection};
use crate::geometry::BoundingBox;

#[derive(Debug, Clone, PartialEq)]
pub struct GridPrediction {
    grid_size: usize,
    boxes_per_cell: usize,
    num_classes: usize,
    values: Vec<f64>,
}

impl GridPrediction {
    pub fn new(
        grid_size: usize,
        boxes_per_cell: usize,
        num_classes: usize,
        values: Vec<f64>,
    ) -> Result<Self, AnnotationError> {
        if grid_size == 0 || boxes_per_cell == 0 || num_classes == 0 {
            return Err(AnnotationError::Invalid(format!(
                "grid dimensions must be positive, got S={grid_size} B={boxes_per_cell} C={num_classes}"
            )));
        }
        let expected = grid_size * grid_size * boxes_per_cell * (5 + num_classes);
        if values.len() != expected {
            return Err(AnnotationError::Shape {
                expected,
                found: values.len(),
            });
        }
        let g = Self {
            grid_size,
            boxes_per_cell,
            num_classes,
            values,
        };
        for (slot, chunk) in g.slots().enumerate() {
            if let Some(bad) = chunk.iter().find(|v| !v.is_finite()) {
                return Err(AnnotationError::Invalid(format!("slot {slot}: non-finite value {bad}")));
            }
            if chunk[4..].iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(AnnotationError::Invalid(format!(
                    "slot {slot}: objectness and class probabilities must lie in [0, 1]"
                )));
            }
        }
        Ok(g)
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn boxes_per_cell(&self) -> usize {
        self.boxes_per_cell
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slot_len(&self) -> usize {
        5 + self.num_classes
    }

    /// Box slots in (row, col, slot) order.
    pub fn slots(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(5 + self.num_classes)
    }
}

/// Turns grid slots into detections with `objectness * max class prob >= conf_thresh`.
///
/// Ties for the best class go to the lowest class index. Slots whose box
/// collapses after clipping to the image are skipped.
pub fn decode_grid(
    grid: &GridPrediction,
    img_w: f64,
    img_h: f64,
    conf_thresh: f64,
) -> Result<Vec<Detection>, AnnotationError> {
    let mut out = Vec::new();
    for slot in grid.slots() {
        let (x, y, w, h, obj) = (slot[0], slot[1], slot[2], slot[3], slot[4]);
        let (class, prob) = slot[5..]
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best });
        let confidence = obj * prob;
        if confidence < conf_thresh {
            continue;
        }
        let raw = BoundingBox::new(
            (x - w / 2.0) * img_w,
            (y - h / 2.0) * img_h,
            (x + w / 2.0) * img_w,
            (y + h / 2.0) * img_h,
        );
        let Some(bbox) = raw.ok().and_then(|b| b.clip(img_w, img_h)) else {
            continue;
        };
        out.push(Detection::new(ClassId(class as u32), bbox, confidence)?);
    }
    Ok(out)
}

/// Reads the text form: a header `S B C` then the values, whitespace separated.
pub fn parse_grid(text: &str) -> Result<GridPrediction, AnnotationError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(AnnotationError::Parse {
        line: 1,
        message: "missing `S B C` header".into(),
    })?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<Result<_, _>>()
        .map_err(|_| AnnotationError::Parse {
            line: hline + 1,
            message: format!("header must be three non-negative integers, got {header:?}"),
        })?;
    if dims.len() != 3 {
        return Err(AnnotationError::Parse {
            line: hline + 1,
            message: format!("header must have 3 fields, found {}", dims.len()),
        });
    }
    let mut values = Vec::new();
    for (idx, line) in lines {
        for tok in line.split_whitespace() {
            values.push(tok.parse::<f64>().map_err(|_| AnnotationError::Parse {
                line: idx + 1,
                message: format!("not a number: {tok:?}"),
            })?);
        }
    }
    GridPrediction::new(dims[0], dims[1], dims[2], values)
}

/// Writes the header and then one box slot per line.
pub fn format_grid(grid: &GridPrediction) -> String {
    let mut out = format!("{} {} {}\n", grid.grid_size, grid.boxes_per_cell, grid.num_classes);
    for slot in grid.slots() {
        let line: Vec<String> = slot.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}
