//! Loader for the typeface-MNIST CSV layout: a header row, a font name
//! column, a label column, and one column per pixel named "1" through
//! "784".

use std::path::Path;

use ndarray::Array2;

use super::{ImageDataset, Subset};
use crate::error::{Error, Result};

/// Reads a TMNIST-style CSV into a dataset with pixels divided by 255.
///
/// `label_column` names the class column. `pixel_columns` selects and
/// orders the pixel columns; `None` uses the standard names `"1"` through
/// `"784"`. Any missing column, unparsable value, or out-of-range pixel is
/// reported with its row and column.
pub fn load_tmnist_csv(
    path: &Path,
    label_column: &str,
    pixel_columns: Option<&[String]>,
) -> Result<ImageDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;

    let headers = reader.headers()?.clone();
    let column_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| {
                Error::Data(format!(
                    "{} has no column named {name:?}",
                    path.display()
                ))
            })
    };

    let label_idx = column_index(label_column)?;
    let default_names: Vec<String>;
    let pixel_names: &[String] = match pixel_columns {
        Some(names) => names,
        None => {
            default_names = (1..=784).map(|i| i.to_string()).collect();
            &default_names
        }
    };
    let pixel_idx: Vec<usize> = pixel_names
        .iter()
        .map(|n| column_index(n))
        .collect::<Result<_>>()?;

    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for (row_number, record) in reader.records().enumerate() {
        let record = record?;
        let row = row_number + 1;
        let label_text = record.get(label_idx).unwrap_or("").trim();
        let label: u8 = label_text.parse().map_err(|_| {
            Error::Data(format!(
                "{} row {row}: label {label_text:?} is not an integer class",
                path.display()
            ))
        })?;
        labels.push(label);
        for (&idx, name) in pixel_idx.iter().zip(pixel_names) {
            let text = record.get(idx).unwrap_or("").trim();
            let value: f64 = text.parse().map_err(|_| {
                Error::Data(format!(
                    "{} row {row} column {name:?}: {text:?} is not a number",
                    path.display()
                ))
            })?;
            if !(0.0..=255.0).contains(&value) {
                return Err(Error::Data(format!(
                    "{} row {row} column {name:?}: pixel {value} outside [0, 255]",
                    path.display()
                )));
            }
            pixels.push(value / 255.0);
        }
    }

    if labels.is_empty() {
        return Err(Error::Data(format!(
            "{} contains no data rows",
            path.display()
        )));
    }
    let images = Array2::from_shape_vec((labels.len(), pixel_idx.len()), pixels)
        .expect("shape matches value count");
    ImageDataset::new("tmnist", Subset::Full, images, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_csv(dir: &Path, body: &str) -> std::path::PathBuf {
        let path = dir.join("data.csv");
        std::fs::write(&path, body).unwrap();
        path
    }

    fn small_header(pixels: usize) -> String {
        let mut h = String::from("names,labels");
        for i in 1..=pixels {
            h.push_str(&format!(",{i}"));
        }
        h.push('\n');
        h
    }

    #[test]
    fn parses_rows_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let mut csv = small_header(4);
        csv.push_str("FontA,2,0,128,255,51\n");
        csv.push_str("FontB,9,255,0,0,0\n");
        let path = write_csv(dir.path(), &csv);
        let names: Vec<String> = (1..=4).map(|i| i.to_string()).collect();
        let data = load_tmnist_csv(&path, "labels", Some(&names)).unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data.labels(), &[2, 9]);
        assert_eq!(data.image(0)[1], 128.0 / 255.0);
        assert_eq!(data.image(0)[2], 1.0);
        assert_eq!(data.image(1)[0], 1.0);
        assert_eq!(data.image(1)[3], 0.0);
    }

    #[test]
    fn bad_label_names_the_row() {
        let dir = tempfile::tempdir().unwrap();
        let mut csv = small_header(2);
        csv.push_str("FontA,3,0,0\n");
        csv.push_str("FontB,ten,0,0\n");
        let path = write_csv(dir.path(), &csv);
        let names: Vec<String> = (1..=2).map(|i| i.to_string()).collect();
        let err = load_tmnist_csv(&path, "labels", Some(&names)).unwrap_err();
        assert!(err.to_string().contains("row 2"), "message: {err}");
    }

    #[test]
    fn out_of_range_label_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut csv = small_header(2);
        csv.push_str("FontA,10,0,0\n");
        let path = write_csv(dir.path(), &csv);
        let names: Vec<String> = (1..=2).map(|i| i.to_string()).collect();
        assert!(matches!(
            load_tmnist_csv(&path, "labels", Some(&names)),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn out_of_range_pixel_names_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let mut csv = small_header(2);
        csv.push_str("FontA,1,0,300\n");
        let path = write_csv(dir.path(), &csv);
        let names: Vec<String> = (1..=2).map(|i| i.to_string()).collect();
        let err = load_tmnist_csv(&path, "labels", Some(&names)).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("row 1") && message.contains("\"2\""), "message: {message}");
    }

    #[test]
    fn missing_column_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let csv = format!("{}FontA,1,0,0\n", small_header(2));
        let path = write_csv(dir.path(), &csv);
        let err = load_tmnist_csv(&path, "label", None).unwrap_err();
        assert!(err.to_string().contains("label"), "message: {err}");
    }

    #[test]
    fn empty_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(dir.path(), &small_header(2));
        let names: Vec<String> = (1..=2).map(|i| i.to_string()).collect();
        assert!(matches!(
            load_tmnist_csv(&path, "labels", Some(&names)),
            Err(Error::Data(_))
        ));
    }
}
