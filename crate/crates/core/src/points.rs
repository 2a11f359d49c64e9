//! Point-cloud and distance-matrix input, and the metrics used to build the
//! neighbourhood graph.
//!
//! Points arrive as CSV or whitespace-delimited text, one point per row.
//! Explicit distances arrive as a lower-triangular matrix (row `i` lists
//! `d(i,0) .. d(i,i-1)`; line breaks are not significant).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("input contains no points")]
    Empty,
    #[error("row {row}: expected {expected} coordinates, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: cannot parse {token:?} as a number")]
    BadNumber { row: usize, token: String },
    #[error("row {row}: coordinate is NaN")]
    NanCoordinate { row: usize },
    #[error("row {row}: distance is NaN")]
    NanDistance { row: usize },
    #[error("row {row}: negative distance {value}")]
    NegativeDistance { row: usize, value: f64 },
    #[error("{count} distance values do not form a lower triangle n(n-1)/2")]
    BadTriangleCount { count: usize },
    #[error("too many vertices for 32-bit indices: {0}")]
    TooManyVertices(usize),
}

/// Metric used to evaluate pairwise distances of a point cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointMetric {
    Euclidean,
    Manhattan,
}

impl PointMetric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            PointMetric::Euclidean => {
                let mut acc = 0.0;
                for k in 0..a.len() {
                    let d = a[k] - b[k];
                    acc += d * d;
                }
                acc.sqrt()
            }
            PointMetric::Manhattan => {
                let mut acc = 0.0;
                for k in 0..a.len() {
                    acc += (a[k] - b[k]).abs();
                }
                acc
            }
        }
    }
}

/// Dense point cloud: `n` rows of `dimension` 64-bit coordinates.
#[derive(Debug, Clone)]
pub struct PointCloud {
    n: usize,
    dimension: usize,
    coords: Vec<f64>,
}

fn tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
}

impl PointCloud {
    /// Builds a cloud from parsed rows, naming the offending 1-based row on
    /// validation failure.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<PointCloud, InputError> {
        if rows.is_empty() {
            return Err(InputError::Empty);
        }
        if rows.len() > u32::MAX as usize {
            return Err(InputError::TooManyVertices(rows.len()));
        }
        let dimension = rows[0].len();
        if dimension == 0 {
            return Err(InputError::Empty);
        }
        let mut coords = Vec::with_capacity(rows.len() * dimension);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dimension {
                return Err(InputError::RaggedRow {
                    row: i + 1,
                    expected: dimension,
                    found: row.len(),
                });
            }
            if row.iter().any(|c| c.is_nan()) {
                return Err(InputError::NanCoordinate { row: i + 1 });
            }
            coords.extend_from_slice(row);
        }
        Ok(PointCloud {
            n: rows.len(),
            dimension,
            coords,
        })
    }

    /// Parses CSV or whitespace-delimited text; `has_header` skips the first
    /// line. Blank lines are ignored. Row numbers in errors are 1-based file
    /// line numbers.
    pub fn parse(text: &str, has_header: bool) -> Result<PointCloud, InputError> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut expected: Option<usize> = None;
        for (lineno, line) in text.lines().enumerate() {
            if has_header && lineno == 0 {
                continue;
            }
            let row_tokens: Vec<&str> = tokens(line).collect();
            if row_tokens.is_empty() {
                continue;
            }
            let row = lineno + 1;
            let mut values = Vec::with_capacity(row_tokens.len());
            for tok in row_tokens {
                let v: f64 = tok.parse().map_err(|_| InputError::BadNumber {
                    row,
                    token: tok.to_string(),
                })?;
                if v.is_nan() {
                    return Err(InputError::NanCoordinate { row });
                }
                values.push(v);
            }
            match expected {
                None => expected = Some(values.len()),
                Some(d) if d != values.len() => {
                    return Err(InputError::RaggedRow {
                        row,
                        expected: d,
                        found: values.len(),
                    })
                }
                _ => {}
            }
            rows.push(values);
        }
        PointCloud::from_rows(rows)
    }

    pub fn point_count(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dimension..(i + 1) * self.dimension]
    }
}

/// Explicit pairwise distances, stored as the strict lower triangle:
/// `d(i,j)` for `j < i` at index `i*(i-1)/2 + j`.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_values(values: Vec<f64>) -> Result<DistanceMatrix, InputError> {
        if values.is_empty() {
            return Err(InputError::Empty);
        }
        let m = values.len();
        // Solve n(n-1)/2 = m.
        let n = (1.0 + (1.0 + 8.0 * m as f64).sqrt()) / 2.0;
        let n = n.round() as usize;
        if n < 2 || n * (n - 1) / 2 != m {
            return Err(InputError::BadTriangleCount { count: m });
        }
        if n > u32::MAX as usize {
            return Err(InputError::TooManyVertices(n));
        }
        for (k, &v) in values.iter().enumerate() {
            let row = triangle_row(k);
            if v.is_nan() {
                return Err(InputError::NanDistance { row: row + 1 });
            }
            if v < 0.0 {
                return Err(InputError::NegativeDistance {
                    row: row + 1,
                    value: v,
                });
            }
        }
        Ok(DistanceMatrix { n, values })
    }

    /// Parses lower-triangular text; all tokens are concatenated, so line
    /// breaks are cosmetic. `has_header` skips the first line.
    pub fn parse(text: &str, has_header: bool) -> Result<DistanceMatrix, InputError> {
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if has_header && lineno == 0 {
                continue;
            }
            for tok in tokens(line) {
                let v: f64 = tok.parse().map_err(|_| InputError::BadNumber {
                    row: lineno + 1,
                    token: tok.to_string(),
                })?;
                if v.is_nan() {
                    return Err(InputError::NanDistance { row: lineno + 1 });
                }
                if v < 0.0 {
                    return Err(InputError::NegativeDistance {
                        row: lineno + 1,
                        value: v,
                    });
                }
                values.push(v);
            }
        }
        DistanceMatrix::from_values(values)
    }

    pub fn point_count(&self) -> usize {
        self.n
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i != j && i < self.n && j < self.n);
        let (hi, lo) = if i > j { (i, j) } else { (j, i) };
        self.values[hi * (hi - 1) / 2 + lo]
    }
}

/// Triangle row that flat index `k` belongs to (row `i` holds `i` values).
fn triangle_row(k: usize) -> usize {
    let mut row = 1;
    let mut start = 0;
    while start + row <= k {
        start += row;
        row += 1;
    }
    row
}

/// Source of pairwise distances for edge generation: a metric over a point
/// cloud, or an explicit matrix passed through untouched.
#[derive(Debug, Clone)]
pub enum EdgeSource {
    Points {
        cloud: PointCloud,
        metric: PointMetric,
    },
    Matrix(DistanceMatrix),
}

impl EdgeSource {
    pub fn vertex_count(&self) -> usize {
        match self {
            EdgeSource::Points { cloud, .. } => cloud.point_count(),
            EdgeSource::Matrix(m) => m.point_count(),
        }
    }

    pub fn pair_distance(&self, i: usize, j: usize) -> f64 {
        match self {
            EdgeSource::Points { cloud, metric } => {
                metric.distance(cloud.point(i), cloud.point(j))
            }
            EdgeSource::Matrix(m) => m.distance(i, j),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_csv_and_whitespace() {
        let cloud = PointCloud::parse("0,0\n3 4\n", false).unwrap();
        assert_eq!(cloud.point_count(), 2);
        assert_eq!(cloud.point(1), &[3.0, 4.0]);
    }

    #[test]
    fn header_flag_skips_first_line() {
        let cloud = PointCloud::parse("x,y\n1,2\n", true).unwrap();
        assert_eq!(cloud.point_count(), 1);
        assert!(PointCloud::parse("x,y\n1,2\n", false).is_err());
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(
            PointCloud::parse("", false),
            Err(InputError::Empty)
        ));
        assert!(matches!(
            PointCloud::parse("\n\n", false),
            Err(InputError::Empty)
        ));
    }

    #[test]
    fn nan_names_the_row() {
        let err = PointCloud::parse("0,0\n1,NaN\n", false).unwrap_err();
        match err {
            InputError::NanCoordinate { row } => assert_eq!(row, 2),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn ragged_row_is_rejected() {
        let err = PointCloud::parse("0,0\n1\n", false).unwrap_err();
        assert!(matches!(err, InputError::RaggedRow { row: 2, .. }));
    }

    #[test]
    fn metrics_match_hand_values() {
        let e = PointMetric::Euclidean.distance(&[0.0, 0.0], &[3.0, 4.0]);
        assert_eq!(e, 5.0);
        let m = PointMetric::Manhattan.distance(&[0.0, 0.0], &[3.0, 4.0]);
        assert_eq!(m, 7.0);
    }

    #[test]
    fn lower_triangle_parse_and_lookup() {
        // 3 points: d(1,0)=1, d(2,0)=2, d(2,1)=3
        let m = DistanceMatrix::parse("1\n2 3\n", false).unwrap();
        assert_eq!(m.point_count(), 3);
        assert_eq!(m.distance(0, 1), 1.0);
        assert_eq!(m.distance(2, 0), 2.0);
        assert_eq!(m.distance(1, 2), 3.0);
    }

    #[test]
    fn bad_triangle_count_is_rejected() {
        assert!(matches!(
            DistanceMatrix::parse("1 2\n", false),
            Err(InputError::BadTriangleCount { count: 2 })
        ));
    }

    #[test]
    fn negative_distance_is_rejected() {
        assert!(matches!(
            DistanceMatrix::parse("1\n-2 3\n", false),
            Err(InputError::NegativeDistance { row: 2, .. })
        ));
    }
}
