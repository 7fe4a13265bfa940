//! Plain-text dataset files.
//!
//! * graph: first line `N E`, then `E` lines `u v` with 0-based ids
//! * features: CSV, one row of comma-separated reals per node, no header
//! * labels: one non-negative integer per line
//! * splits: one of `train`, `valid`, `test`, `none` per line

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use super::{Dataset, Graph, Splits};
use crate::error::{Error, Result};
use crate::numfmt;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Non-blank lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_graph(path: &Path) -> Result<Graph> {
    let text = read(path)?;
    let mut lines = content_lines(&text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing header line \"N E\""))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [n, e] = fields.as_slice() else {
        return Err(parse_err(path, hline, "header must be \"N E\""));
    };
    let n: usize = n
        .parse()
        .map_err(|_| parse_err(path, hline, format!("bad node count {n:?}")))?;
    let e: usize = e
        .parse()
        .map_err(|_| parse_err(path, hline, format!("bad edge count {e:?}")))?;

    let mut edges = Vec::with_capacity(e);
    let mut last_line = hline;
    for (lineno, line) in lines {
        last_line = lineno;
        let mut it = line.split_whitespace();
        let (Some(u), Some(v), None) = (it.next(), it.next(), it.next()) else {
            return Err(parse_err(path, lineno, "edge line must be \"u v\""));
        };
        let id = |s: &str| -> Result<usize> {
            let x: usize = s
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad node id {s:?}")))?;
            if x >= n {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("node index {x} out of range for {n} nodes"),
                ));
            }
            Ok(x)
        };
        edges.push((id(u)?, id(v)?));
    }
    if edges.len() != e {
        return Err(parse_err(
            path,
            last_line,
            format!("header declares {e} edges but {} were listed", edges.len()),
        ));
    }
    Graph::from_edges(n, edges)
}

fn parse_features(path: &Path, num_nodes: usize) -> Result<Array2<f64>> {
    let text = read(path)?;
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0usize;
    let mut last_line = 0;
    for (lineno, line) in content_lines(&text) {
        last_line = lineno;
        let before = values.len();
        for field in line.split(',') {
            let field = field.trim();
            let x: f64 = field
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad real {field:?}")))?;
            values.push(x);
        }
        let w = values.len() - before;
        match width {
            None => width = Some(w),
            Some(expected) if expected != w => {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("row has {w} values, expected {expected}"),
                ))
            }
            _ => {}
        }
        rows += 1;
    }
    if rows != num_nodes {
        return Err(parse_err(
            path,
            last_line.max(1),
            format!("{rows} feature rows for {num_nodes} nodes"),
        ));
    }
    let width = width.unwrap_or(0);
    Array2::from_shape_vec((rows, width), values).map_err(|e| Error::shape(e.to_string()))
}

fn parse_labels(path: &Path, num_nodes: usize) -> Result<Vec<usize>> {
    let text = read(path)?;
    let mut labels = Vec::with_capacity(num_nodes);
    let mut last_line = 0;
    for (lineno, line) in content_lines(&text) {
        last_line = lineno;
        labels.push(
            line.parse()
                .map_err(|_| parse_err(path, lineno, format!("bad label {line:?}")))?,
        );
    }
    if labels.len() != num_nodes {
        return Err(parse_err(
            path,
            last_line.max(1),
            format!("{} labels for {num_nodes} nodes", labels.len()),
        ));
    }
    Ok(labels)
}

/// Reads the three dataset files. Features are returned as stored; the
/// encoder applies row normalization itself.
pub fn load_dataset(
    graph_path: impl AsRef<Path>,
    features_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<Dataset> {
    let graph = parse_graph(graph_path.as_ref())?;
    let n = graph.num_nodes();
    let features = parse_features(features_path.as_ref(), n)?;
    let labels = parse_labels(labels_path.as_ref(), n)?;
    Dataset::new(graph, features, labels)
}

pub fn load_splits(path: impl AsRef<Path>, num_nodes: usize) -> Result<Splits> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut splits = Splits::default();
    let mut count = 0usize;
    let mut last_line = 0;
    for (lineno, line) in content_lines(&text) {
        last_line = lineno;
        match line {
            "train" => splits.train.push(count),
            "valid" => splits.valid.push(count),
            "test" => splits.test.push(count),
            "none" => {}
            other => return Err(parse_err(path, lineno, format!("unknown split {other:?}"))),
        }
        count += 1;
    }
    if count != num_nodes {
        return Err(parse_err(
            path,
            last_line.max(1),
            format!("{count} split entries for {num_nodes} nodes"),
        ));
    }
    Ok(splits)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_graph(graph: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let run = |w: &mut BufWriter<fs::File>| -> std::io::Result<()> {
        writeln!(w, "{} {}", graph.num_nodes(), graph.num_edges())?;
        for (u, v) in graph.edges() {
            writeln!(w, "{u} {v}")?;
        }
        w.flush()
    };
    run(&mut w).map_err(|e| Error::io(path, e))
}

pub fn write_features(features: &Array2<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let run = |w: &mut BufWriter<fs::File>| -> std::io::Result<()> {
        for row in features.rows() {
            let line: Vec<String> = row.iter().map(|&x| numfmt::real(x)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()
    };
    run(&mut w).map_err(|e| Error::io(path, e))
}

pub fn write_labels(labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let run = |w: &mut BufWriter<fs::File>| -> std::io::Result<()> {
        for y in labels {
            writeln!(w, "{y}")?;
        }
        w.flush()
    };
    run(&mut w).map_err(|e| Error::io(path, e))
}

/// Writes `graph.txt`, `features.csv` and `labels.txt` into `dir`.
pub fn write_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_graph(&dataset.graph, dir.join("graph.txt"))?;
    write_features(&dataset.features, dir.join("features.csv"))?;
    write_labels(&dataset.labels, dir.join("labels.txt"))
}
