//! File formats: headerless numeric CSV, the optdigits handwritten-digit
//! format, and SVG scatter plots.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::metrics::DistanceMatrix;

/// An 8x8 gray-scale digit with pixel values in 0..=16.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitImage {
    /// Row-major 8x8 grid.
    pub pixels: [u8; 64],
    /// Digit class 0..=9.
    pub label: u8,
}

/// Which half of the image plays the predictor role.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    UpperAsX,
    LowerAsX,
}

/// One image split into a 32-value predictor half and a 32-value response
/// half.
#[derive(Debug, Clone)]
pub struct HalfSplit {
    pub x: [f64; 32],
    pub y: [f64; 32],
    pub orientation: Orientation,
}

/// Loads optdigits ASCII records (65 comma-separated integers per line: 64
/// pixels then the label), keeping images whose label is in `classes`, in
/// file order. An empty `classes` keeps everything.
pub fn load_optdigits(path: &Path, classes: &[u8]) -> Result<Vec<DigitImage>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut images = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 65 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 65 comma-separated integers, got {}", fields.len()),
            });
        }
        let mut pixels = [0u8; 64];
        for (k, field) in fields[..64].iter().enumerate() {
            let value: i32 = field.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("pixel {k} is not an integer: '{field}'"),
            })?;
            if !(0..=16).contains(&value) {
                return Err(Error::Validation(format!(
                    "line {line_no}: pixel {k} value {value} outside [0,16]"
                )));
            }
            pixels[k] = value as u8;
        }
        let label: i32 = fields[64].parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("label is not an integer: '{}'", fields[64]),
        })?;
        if !(0..=9).contains(&label) {
            return Err(Error::Validation(format!(
                "line {line_no}: label {label} outside [0,9]"
            )));
        }
        let label = label as u8;
        if classes.is_empty() || classes.contains(&label) {
            images.push(DigitImage { pixels, label });
        }
    }
    Ok(images)
}

/// Splits an image into its 4x8 halves; `UpperAsX` takes rows 0-3 as the
/// predictors, `LowerAsX` swaps the roles.
pub fn split_halves(img: &DigitImage, orientation: Orientation) -> HalfSplit {
    let mut upper = [0f64; 32];
    let mut lower = [0f64; 32];
    for k in 0..32 {
        upper[k] = img.pixels[k] as f64;
        lower[k] = img.pixels[32 + k] as f64;
    }
    match orientation {
        Orientation::UpperAsX => HalfSplit {
            x: upper,
            y: lower,
            orientation,
        },
        Orientation::LowerAsX => HalfSplit {
            x: lower,
            y: upper,
            orientation,
        },
    }
}

/// Stacks the predictor halves and response halves of a digit set into two
/// `n x 32` matrices plus the label vector.
pub fn split_dataset(
    images: &[DigitImage],
    orientation: Orientation,
) -> (DMatrix<f64>, DMatrix<f64>, Vec<u8>) {
    let n = images.len();
    let mut x = DMatrix::zeros(n, 32);
    let mut y = DMatrix::zeros(n, 32);
    let mut labels = Vec::with_capacity(n);
    for (i, img) in images.iter().enumerate() {
        let split = split_halves(img, orientation);
        for k in 0..32 {
            x[(i, k)] = split.x[k];
            y[(i, k)] = split.y[k];
        }
        labels.push(img.label);
    }
    (x, y, labels)
}

/// Reads a headerless CSV of decimal values into a dense matrix. Rows must
/// all have the same length; an empty file is an error.
pub fn read_csv_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: idx + 1,
                    message: format!("not a number: '{}'", f.trim()),
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!(
                        "ragged row: {} values, expected {}",
                        row.len(),
                        first.len()
                    ),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput(path.display().to_string()));
    }
    let (n, p) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
}

/// Writes a matrix as headerless CSV with 17 significant digits, enough for
/// an exact f64 round trip.
pub fn write_csv_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut out = String::with_capacity(m.nrows() * m.ncols() * 26);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:.16e}", m[(i, j)]);
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a precomputed distance matrix, enforcing the type invariants within
/// 1e-9 and repairing them exactly (see [`DistanceMatrix::from_noisy`]).
pub fn read_distance_csv(path: &Path) -> Result<DistanceMatrix> {
    DistanceMatrix::from_noisy(read_csv_matrix(path)?)
}

const SVG_PALETTE: [&str; 3] = ["#e41a1c", "#4daf4a", "#377eb8"]; // red, green, blue

/// Writes a standalone SVG scatter plot of `points` (n x 2), one circle per
/// point, colored by label: distinct labels are sorted and assigned red,
/// green, blue, cycling. Axes are auto-scaled with a 5% margin; a degenerate
/// range falls back to a unit viewport.
pub fn emit_scatter_svg(points: &DMatrix<f64>, labels: &[i64], path: &Path) -> Result<()> {
    if points.ncols() != 2 {
        return Err(Error::Dimension(format!(
            "scatter plot needs an n x 2 matrix, got {} columns",
            points.ncols()
        )));
    }
    let n = points.nrows();
    if n == 0 {
        return Err(Error::Validation("scatter plot needs at least one point".into()));
    }
    if labels.len() != n {
        return Err(Error::Dimension(format!(
            "{} labels for {n} points",
            labels.len()
        )));
    }
    let mut distinct: Vec<i64> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let color_of = |label: i64| -> &str {
        let idx = distinct.iter().position(|&l| l == label).unwrap_or(0);
        SVG_PALETTE[idx % SVG_PALETTE.len()]
    };

    let (width, height) = (640.0_f64, 480.0_f64);
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        xmin = xmin.min(points[(i, 0)]);
        xmax = xmax.max(points[(i, 0)]);
        ymin = ymin.min(points[(i, 1)]);
        ymax = ymax.max(points[(i, 1)]);
    }
    let pad = |lo: &mut f64, hi: &mut f64| {
        let span = *hi - *lo;
        if span <= 0.0 {
            *lo -= 0.5;
            *hi += 0.5;
        } else {
            *lo -= 0.05 * span;
            *hi += 0.05 * span;
        }
    };
    pad(&mut xmin, &mut xmax);
    pad(&mut ymin, &mut ymax);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>"
    );
    for i in 0..n {
        let cx = (points[(i, 0)] - xmin) / (xmax - xmin) * width;
        let cy = height - (points[(i, 1)] - ymin) / (ymax - ymin) * height;
        let _ = writeln!(
            svg,
            "<circle cx=\"{cx:.3}\" cy=\"{cy:.3}\" r=\"2.5\" fill=\"{}\" fill-opacity=\"0.75\"/>",
            color_of(labels[i])
        );
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use std::path::PathBuf;

    fn temp_path(name: &str) -> PathBuf {
        std::env::temp_dir().join(format!("fsdr_{}_{}", std::process::id(), name))
    }

    #[test]
    fn optdigits_line_parsing_and_filter() {
        let path = temp_path("digits.tra");
        let mut all_zero = vec!["0"; 64].join(",");
        all_zero.push_str(",5");
        let mut other = vec!["3"; 64].join(",");
        other.push_str(",1");
        std::fs::write(&path, format!("{all_zero}\n{other}\n")).unwrap();
        let all = load_optdigits(&path, &[]).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].label, 5);
        assert!(all[0].pixels.iter().all(|&p| p == 0));
        let filtered = load_optdigits(&path, &[0, 8, 9]).unwrap();
        assert!(filtered.is_empty());
        let filtered = load_optdigits(&path, &[1]).unwrap();
        assert_eq!(filtered.len(), 1);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn optdigits_rejects_malformed() {
        let path = temp_path("digits_bad.tra");
        std::fs::write(&path, "1,2,3\n").unwrap();
        match load_optdigits(&path, &[]) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::write(&path, format!("{},9\n", vec!["17"; 64].join(","))).unwrap();
        assert!(matches!(
            load_optdigits(&path, &[]),
            Err(Error::Validation(_))
        ));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn halves_partition_and_swap() {
        let mut pixels = [0u8; 64];
        for k in 0..32 {
            pixels[k] = 1;
            pixels[32 + k] = 2;
        }
        let img = DigitImage { pixels, label: 3 };
        let upper = split_halves(&img, Orientation::UpperAsX);
        assert!(upper.x.iter().all(|&v| v == 1.0));
        assert!(upper.y.iter().all(|&v| v == 2.0));
        let lower = split_halves(&img, Orientation::LowerAsX);
        assert!(lower.x.iter().all(|&v| v == 2.0));
        assert!(lower.y.iter().all(|&v| v == 1.0));
        // recombination reproduces the original pixels
        let rebuilt: Vec<u8> = upper
            .x
            .iter()
            .chain(upper.y.iter())
            .map(|&v| v as u8)
            .collect();
        assert_eq!(rebuilt, img.pixels.to_vec());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut rng = crate::stream::substream(61, &[]);
        let m = DMatrix::from_fn(20, 5, |_, _| rng.random_range(-1e6..1e6_f64));
        let path = temp_path("roundtrip.csv");
        write_csv_matrix(&path, &m).unwrap();
        let back = read_csv_matrix(&path).unwrap();
        assert_eq!(m, back);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn csv_edge_cases() {
        let path = temp_path("one.csv");
        std::fs::write(&path, "3.5\n").unwrap();
        let m = read_csv_matrix(&path).unwrap();
        assert_eq!(m.nrows(), 1);
        assert_eq!(m[(0, 0)], 3.5);

        std::fs::write(&path, "").unwrap();
        assert!(matches!(read_csv_matrix(&path), Err(Error::EmptyInput(_))));

        std::fs::write(&path, "1,2\n3\n").unwrap();
        match read_csv_matrix(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected ragged-row error, got {other:?}"),
        }
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn svg_structure_and_determinism() {
        let pts = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 1.0, 2.0, 0.5]);
        let labels = [0_i64, 8, 9];
        let p1 = temp_path("scatter1.svg");
        let p2 = temp_path("scatter2.svg");
        emit_scatter_svg(&pts, &labels, &p1).unwrap();
        emit_scatter_svg(&pts, &labels, &p2).unwrap();
        let s1 = std::fs::read(&p1).unwrap();
        let s2 = std::fs::read(&p2).unwrap();
        assert_eq!(s1, s2, "byte-identical output for identical input");
        let text = String::from_utf8(s1).unwrap();
        assert_eq!(text.matches("<circle").count(), 3);
        assert!(text.contains("#e41a1c") && text.contains("#4daf4a") && text.contains("#377eb8"));
        std::fs::remove_file(&p1).ok();
        std::fs::remove_file(&p2).ok();
    }

    #[test]
    fn svg_degenerate_range() {
        let pts = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let path = temp_path("degenerate.svg");
        emit_scatter_svg(&pts, &[0, 0], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(!text.contains("NaN") && !text.contains("inf"));
        std::fs::remove_file(&path).ok();
    }
}
