//! Plain-text formats for designs and sweep traces.
//!
//! A design file is comma-separated, one run per line, preceded by `#`
//! header lines:
//!
//! ```text
//! # slhd design
//! # sizes: 2,5,10
//! # dim: 3
//! # seed: 42
//! # slices: 1-2,3-7,8-17
//! 0.38235294117647056,0.7941176470588235,...
//! ```
//!
//! Values are written in shortest round-trip decimal form. In level mode the
//! header carries `# denominator: 2n` and each value is written as the odd
//! integer `2a - 1`, which keeps midpoint designs exact by construction.

use std::io::{BufRead, Write};

use ndarray::Array2;

use crate::decorrelate::SweepTrace;
use crate::error::{Error, Result};
use crate::types::{Design, SliceSizes};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValueFormat {
    #[default]
    Decimal,
    /// Odd integers over a `2n` denominator.
    Levels,
}

/// Writes `design` with its header. `seed` is recorded when given.
pub fn write_design(
    out: &mut impl Write,
    design: &Design,
    seed: Option<u64>,
    format: ValueFormat,
) -> Result<()> {
    let sizes = design.sizes();
    let n = sizes.total();
    let io = |e: std::io::Error| Error::InvalidArgument(format!("write failed: {e}"));

    let ranges: Vec<String> = (0..sizes.slices())
        .map(|j| {
            let rows = sizes.rows(j);
            format!("{}-{}", rows.start + 1, rows.end)
        })
        .collect();
    writeln!(out, "# slhd design").map_err(io)?;
    writeln!(out, "# sizes: {sizes}").map_err(io)?;
    writeln!(out, "# dim: {}", design.dim()).map_err(io)?;
    if let Some(seed) = seed {
        writeln!(out, "# seed: {seed}").map_err(io)?;
    }
    writeln!(out, "# slices: {}", ranges.join(",")).map_err(io)?;

    let levels = match format {
        ValueFormat::Decimal => None,
        ValueFormat::Levels => {
            writeln!(out, "# denominator: {}", 2 * n).map_err(io)?;
            Some(design.levels().ok_or_else(|| {
                Error::InvalidArgument("level format needs an exact midpoint design".into())
            })?)
        }
    };

    for (r, row) in design.rows().enumerate() {
        let line: Vec<String> = match &levels {
            Some(levels) => levels
                .row(r)
                .iter()
                .map(|a| (2 * a - 1).to_string())
                .collect(),
            None => row.iter().map(|x| x.to_string()).collect(),
        };
        writeln!(out, "{}", line.join(",")).map_err(io)?;
    }
    Ok(())
}

/// Parsed contents of a design file.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignFile {
    pub values: Array2<f64>,
    pub sizes: Option<SliceSizes>,
    pub seed: Option<u64>,
}

impl DesignFile {
    /// Attaches slice sizes, preferring `sizes` over the header's.
    pub fn into_design(self, sizes: Option<SliceSizes>) -> Result<Design> {
        let sizes = sizes
            .or(self.sizes)
            .ok_or_else(|| Error::Parse("no slice sizes given or recorded in the file".into()))?;
        Design::new(self.values, sizes)
    }
}

pub fn read_design(input: impl BufRead) -> Result<DesignFile> {
    let mut sizes = None;
    let mut seed = None;
    let mut denominator: Option<u64> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();

    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse(format!("read failed: {e}")))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            if let Some((key, value)) = header.split_once(':') {
                let value = value.trim();
                let bad = |what: &str| Error::Parse(format!("line {}: bad {what}", lineno + 1));
                match key.trim() {
                    "sizes" => sizes = Some(value.parse::<SliceSizes>()?),
                    "seed" => seed = Some(value.parse().map_err(|_| bad("seed"))?),
                    "denominator" => {
                        let d: u64 = value.parse().map_err(|_| bad("denominator"))?;
                        if d == 0 {
                            return Err(bad("denominator"));
                        }
                        denominator = Some(d);
                    }
                    _ => {}
                }
            }
            continue;
        }
        let row = line
            .split(',')
            .map(|field| {
                let field = field.trim();
                match denominator {
                    Some(d) => field
                        .parse::<u64>()
                        .map(|k| k as f64 / d as f64)
                        .map_err(|_| ()),
                    None => field.parse::<f64>().map_err(|_| ()),
                }
                .map_err(|_| Error::Parse(format!("line {}: bad value {field:?}", lineno + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse(format!(
                    "line {}: expected {} values, found {}",
                    lineno + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }
    let (n, p) = (rows.len(), rows[0].len());
    let values = Array2::from_shape_vec((n, p), rows.into_iter().flatten().collect())
        .map_err(|e| Error::Parse(e.to_string()))?;
    if let Some(d) = denominator {
        if d != 2 * n as u64 {
            return Err(Error::Parse(format!(
                "denominator {d} does not match {n} runs"
            )));
        }
    }
    Ok(DesignFile {
        values,
        sizes,
        seed,
    })
}

/// Writes a sweep trace as `iteration,whole,slice_1,...,slice_t`; undefined
/// entries are left empty.
pub fn write_trace(out: &mut impl Write, trace: &SweepTrace) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidArgument(format!("write failed: {e}"));
    let mut header = vec!["iteration".to_string(), "whole".to_string()];
    header.extend((1..=trace.per_slice.len()).map(|j| format!("slice_{j}")));
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    let cell = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for it in 0..trace.len() {
        let mut line = vec![it.to_string(), cell(trace.whole[it])];
        line.extend(trace.per_slice.iter().map(|s| cell(s[it])));
        writeln!(out, "{}", line.join(",")).map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::generate_sliced_lhd;
    use crate::types::RngStream;
    use proptest::prelude::*;

    #[test]
    fn single_run_file() {
        let sizes = SliceSizes::new(vec![1]).unwrap();
        let d = generate_sliced_lhd(&sizes, 1, &RngStream::new(0));
        let mut buf = Vec::new();
        write_design(&mut buf, &d, None, ValueFormat::Decimal).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data, vec!["0.5"]);
    }

    #[test]
    fn level_mode() {
        let sizes = SliceSizes::new(vec![2, 5, 10]).unwrap();
        let d = generate_sliced_lhd(&sizes, 2, &RngStream::new(4));
        let mut buf = Vec::new();
        write_design(&mut buf, &d, Some(4), ValueFormat::Levels).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("# denominator: 34"));
        assert!(text.contains("# slices: 1-2,3-7,8-17"));
        let parsed = read_design(buf.as_slice()).unwrap();
        assert_eq!(parsed.seed, Some(4));
        assert_eq!(parsed.into_design(None).unwrap(), d);
    }

    #[test]
    fn malformed_files() {
        assert!(read_design("# only a header\n".as_bytes()).is_err());
        assert!(read_design("0.1,0.2\n0.3\n".as_bytes()).is_err());
        assert!(read_design("0.1,abc\n".as_bytes()).is_err());
        assert!(read_design("# denominator: 0\n1\n".as_bytes()).is_err());
        assert!(read_design("# denominator: 6\n1\n".as_bytes()).is_err());
        let no_sizes = read_design("0.5\n".as_bytes()).unwrap();
        assert!(no_sizes.into_design(None).is_err());
    }

    #[test]
    fn trace_csv() {
        let trace = SweepTrace {
            whole: vec![Some(0.5), Some(0.25)],
            per_slice: vec![vec![Some(0.1), Some(0.2)], vec![None, None]],
        };
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "iteration,whole,slice_1,slice_2\n0,0.5,0.1,\n1,0.25,0.2,\n"
        );
    }

    proptest! {
        #[test]
        fn decimal_round_trip_is_lossless(
            v in prop::collection::vec(1usize..=12, 1..=5),
            dim in 1usize..=4,
            seed: u64,
        ) {
            let sizes = SliceSizes::new(v).unwrap();
            let d = generate_sliced_lhd(&sizes, dim, &RngStream::new(seed));
            let mut buf = Vec::new();
            write_design(&mut buf, &d, Some(seed), ValueFormat::Decimal).unwrap();
            let back = read_design(buf.as_slice()).unwrap().into_design(None).unwrap();
            prop_assert_eq!(back, d);
        }
    }
}
