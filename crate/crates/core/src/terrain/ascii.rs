//! ESRI ASCII grid reader and writer.
//!
//! Header lines `ncols`, `nrows`, `xllcorner`, `yllcorner`, `cellsize`,
//! `NODATA_value` (one `key value` pair per line, in that order), followed by
//! `nrows` rows of `ncols` space-separated heights with the first row at the
//! northern edge. ASCII, LF line endings. Heights are written with Rust's
//! shortest round-trip formatting, so save followed by load reproduces the
//! grid bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::DtmGrid;
use crate::error::{Error, Result};

pub fn save_dtm(dtm: &DtmGrid, path: impl AsRef<Path>) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    write_dtm(dtm, &mut file)?;
    file.flush()?;
    Ok(())
}

pub fn load_dtm(path: impl AsRef<Path>) -> Result<DtmGrid> {
    read_dtm(BufReader::new(File::open(path)?))
}

pub fn write_dtm(dtm: &DtmGrid, out: &mut impl Write) -> Result<()> {
    let (ox, oy) = dtm.origin();
    write!(out, "ncols {}\n", dtm.ncols())?;
    write!(out, "nrows {}\n", dtm.nrows())?;
    write!(out, "xllcorner {}\n", ox)?;
    write!(out, "yllcorner {}\n", oy)?;
    write!(out, "cellsize {}\n", dtm.cellsize())?;
    write!(out, "NODATA_value {}\n", dtm.nodata())?;
    let mut line = String::new();
    for r in (0..dtm.nrows()).rev() {
        line.clear();
        for c in 0..dtm.ncols() {
            if c > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{}", dtm.sample(r, c)));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn read_dtm(input: impl BufRead) -> Result<DtmGrid> {
    let mut lines = input.lines().enumerate();

    let mut header = |expected: &str| -> Result<(usize, String)> {
        loop {
            let (line_no, line_res) = lines.next().ok_or_else(|| Error::MalformedHeader {
                reason: format!("missing `{expected}` line"),
            })?;
            let line = line_res?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or_default();
            let value = parts.next().ok_or_else(|| Error::MalformedHeader {
                reason: format!("`{expected}` line has no value"),
            })?;
            if parts.next().is_some() {
                return Err(Error::MalformedHeader {
                    reason: format!("`{expected}` line has trailing tokens"),
                });
            }
            if !key.eq_ignore_ascii_case(expected) {
                return Err(Error::MalformedHeader {
                    reason: format!("expected `{expected}`, found `{key}` at line {}", line_no + 1),
                });
            }
            return Ok((line_no, value.to_string()));
        }
    };

    let parse_usize = |name: &str, v: &str| -> Result<usize> {
        v.parse::<usize>().map_err(|_| Error::MalformedHeader {
            reason: format!("cannot parse `{name}` value `{v}`"),
        })
    };
    let parse_f64 = |name: &str, v: &str| -> Result<f64> {
        v.parse::<f64>().map_err(|_| Error::MalformedHeader {
            reason: format!("cannot parse `{name}` value `{v}`"),
        })
    };

    let ncols = parse_usize("ncols", &header("ncols")?.1)?;
    let nrows = parse_usize("nrows", &header("nrows")?.1)?;
    let xllcorner = parse_f64("xllcorner", &header("xllcorner")?.1)?;
    let yllcorner = parse_f64("yllcorner", &header("yllcorner")?.1)?;
    let cellsize = parse_f64("cellsize", &header("cellsize")?.1)?;
    let nodata = parse_f64("NODATA_value", &header("NODATA_value")?.1)?;

    if ncols < 2 || nrows < 2 {
        return Err(Error::MalformedHeader {
            reason: format!("grid must be at least 2x2, got {ncols}x{nrows}"),
        });
    }
    if !(cellsize.is_finite() && cellsize > 0.0) {
        return Err(Error::MalformedHeader {
            reason: format!("cellsize must be positive, got {cellsize}"),
        });
    }

    let mut heights = vec![0.0_f64; ncols * nrows];
    let mut data_row = 0usize;
    for item in lines {
        let (line_no, line) = (item.0, item.1.map_err(Error::from)?);
        if line.trim().is_empty() {
            continue;
        }
        if data_row >= nrows {
            return Err(Error::MalformedRecord {
                line: line_no + 1,
                reason: format!("more than {nrows} data rows"),
            });
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != ncols {
            return Err(Error::RowLengthMismatch {
                row: data_row + 1,
                got: tokens.len(),
                expected: ncols,
            });
        }
        // First data row is the northern edge, i.e. the highest internal row.
        let r = nrows - 1 - data_row;
        for (c, tok) in tokens.iter().enumerate() {
            let h = tok.parse::<f64>().map_err(|_| Error::MalformedRecord {
                line: line_no + 1,
                reason: format!("cannot parse height `{tok}`"),
            })?;
            heights[r * ncols + c] = h;
        }
        data_row += 1;
    }
    if data_row != nrows {
        return Err(Error::MalformedRecord {
            line: 0,
            reason: format!("expected {nrows} data rows, found {data_row}"),
        });
    }

    DtmGrid::new(ncols, nrows, xllcorner, yllcorner, cellsize, nodata, heights)
}

#[cfg(test)]
mod tests {
    use super::super::{generate_fractal_terrain, DtmGrid, DEFAULT_NODATA};
    use super::*;

    fn round_trip(dtm: &DtmGrid) -> DtmGrid {
        let mut buf = Vec::new();
        write_dtm(dtm, &mut buf).unwrap();
        read_dtm(buf.as_slice()).unwrap()
    }

    #[test]
    fn three_by_three_round_trip() {
        let dtm = DtmGrid::new(
            3,
            3,
            -1.5,
            2.25,
            0.5,
            DEFAULT_NODATA,
            vec![0.0, 1.0, 2.0, 3.5, -4.25, 5.0, 6.0, 7.125, 1e-9],
        )
        .unwrap();
        assert_eq!(round_trip(&dtm), dtm);
    }

    #[test]
    fn fractal_round_trip_is_bit_exact() {
        let dtm = generate_fractal_terrain(41, 33, 21, 1.0, 77.7).unwrap();
        assert_eq!(round_trip(&dtm), dtm);
    }

    #[test]
    fn save_and_load_files() {
        let dtm = generate_fractal_terrain(5, 12, 9, 2.0, 10.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.asc");
        save_dtm(&dtm, &path).unwrap();
        assert_eq!(load_dtm(&path).unwrap(), dtm);
    }

    #[test]
    fn rows_are_written_north_first() {
        let dtm = DtmGrid::new(
            2,
            2,
            0.0,
            0.0,
            1.0,
            DEFAULT_NODATA,
            vec![1.0, 2.0, 3.0, 4.0], // south row (1 2), north row (3 4)
        )
        .unwrap();
        let mut buf = Vec::new();
        write_dtm(&dtm, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data: Vec<&str> = text.lines().skip(6).collect();
        assert_eq!(data, vec!["3 4", "1 2"]);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn zero_cellsize_is_malformed() {
        let text = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 0\nNODATA_value -9999\n1 2\n3 4\n";
        assert!(matches!(
            read_dtm(text.as_bytes()),
            Err(Error::MalformedHeader { .. })
        ));
    }

    #[test]
    fn header_errors() {
        let missing = "ncols 2\nnrows 2\n";
        assert!(matches!(
            read_dtm(missing.as_bytes()),
            Err(Error::MalformedHeader { .. })
        ));
        let wrong_key = "cols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n";
        assert!(matches!(
            read_dtm(wrong_key.as_bytes()),
            Err(Error::MalformedHeader { .. })
        ));
    }

    #[test]
    fn row_length_mismatch() {
        let text =
            "ncols 3\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n1 2 3\n4 5\n";
        assert!(matches!(
            read_dtm(text.as_bytes()),
            Err(Error::RowLengthMismatch {
                row: 2,
                got: 2,
                expected: 3
            })
        ));
    }

    #[test]
    fn missing_rows_detected() {
        let text = "ncols 2\nnrows 3\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n1 2\n3 4\n";
        assert!(matches!(
            read_dtm(text.as_bytes()),
            Err(Error::MalformedRecord { .. })
        ));
    }

    #[test]
    fn lab_scale_grid_extent() {
        // A 950 x 1150 grid at a 1 mm cell size covers 950 mm x 1150 mm.
        let dtm = DtmGrid::new(
            950,
            1150,
            0.0,
            0.0,
            1.0,
            DEFAULT_NODATA,
            vec![0.0; 950 * 1150],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_dtm(&dtm, &mut buf).unwrap();
        let loaded = read_dtm(buf.as_slice()).unwrap();
        assert_eq!(loaded.extent(), (950.0, 1150.0));
    }
}
