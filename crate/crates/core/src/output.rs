//! Machine-readable outputs: orbit dumps, moment reports and series scans.
//!
//! Every file starts with `#` comment lines carrying provenance. Floats in
//! CSV use 17 significant digits (`{:.16e}`), which round-trips exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::dirichlet::SeriesValue;
use crate::error::{Error, Result};
use crate::group::{hex_digest, SurfaceGroup, Word};
use crate::halfplane::{cosh_dist, dist};
use crate::orbit::{OrbitBall, OrbitRecord, ShellStat};
use crate::stats::MomentReport;
use crate::Point;

pub const ORBIT_COLUMNS: &str = "word,word_length,distance,cosh_distance,abelianization";
pub const SERIES_COLUMNS: &str =
    "n,re_s,im_s,epsilon,truncation_radius,re_value,im_value,tail_bound,stieltjes_agrees";

/// Traceability data stamped on every output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub group_fingerprint: String,
    pub version: String,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, group: &SurfaceGroup) -> Self {
        Self {
            config_hash: config_hash.into(),
            group_fingerprint: group.fingerprint(),
            version: crate::VERSION.to_string(),
        }
    }

    /// Hash of an arbitrary canonical config text.
    pub fn hash_text(text: &str) -> String {
        hex_digest(text.as_bytes())
    }

    pub fn header(&self) -> String {
        format!(
            "# version: {}\n# config_hash: {}\n# group: {}\n",
            self.version, self.config_hash, self.group_fingerprint
        )
    }
}

/// Wraps `data` as `{"provenance": ..., "data": ...}`.
pub fn json_with_provenance<T: Serialize>(prov: &Provenance, data: &T) -> Result<String> {
    #[derive(Serialize)]
    struct Wrapped<'a, T> {
        provenance: &'a Provenance,
        data: &'a T,
    }
    let mut s = serde_json::to_string_pretty(&Wrapped {
        provenance: prov,
        data,
    })?;
    s.push('\n');
    Ok(s)
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn fmt_point(p: &Point) -> String {
    format!("{} {}", fmt_f64(p.re), fmt_f64(p.im))
}

/// Orbit dump CSV. Shell statistics ride in the header so the stopping
/// audit can be replayed from the file.
pub fn write_orbit_dump(ball: &OrbitBall, prov: &Provenance) -> String {
    let mut out = String::from("# hyperlattice orbit dump\n");
    out.push_str(&prov.header());
    let _ = writeln!(out, "# z: {}", fmt_point(&ball.base_z));
    let _ = writeln!(out, "# w: {}", fmt_point(&ball.base_w));
    let _ = writeln!(out, "# radius: {}", fmt_f64(ball.radius));
    let _ = writeln!(out, "# stopping_margin: {}", fmt_f64(ball.stopping_margin));
    let _ = writeln!(out, "# explored: {}", ball.explored);
    for s in &ball.shell_stats {
        let _ = writeln!(
            out,
            "# shell: {} {} {} {}",
            s.word_length,
            s.admitted,
            s.expanded,
            fmt_f64(s.min_distance)
        );
    }
    out.push_str(ORBIT_COLUMNS);
    out.push('\n');
    for r in &ball.records {
        let abel: Vec<String> = r
            .element
            .abelianization
            .iter()
            .map(|k| k.to_string())
            .collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.element.word,
            r.element.word.len(),
            fmt_f64(r.distance),
            fmt_f64(r.cosh_distance),
            abel.join(";")
        );
    }
    out
}

fn dump_err(msg: impl Into<String>) -> Error {
    Error::Dump(msg.into())
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| dump_err(format!("bad number {s:?}")))
}

fn parse_point(s: &str) -> Result<Point> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(dump_err(format!("bad point {s:?}")));
    }
    Point::new(parse_f64(parts[0])?, parse_f64(parts[1])?)
}

/// Rebuilds a ball from a dump. Matrices are recomputed from the words;
/// stored distances and homology classes must agree with them.
pub fn read_orbit_dump(text: &str, group: &SurfaceGroup) -> Result<OrbitBall> {
    let mut header: BTreeMap<String, String> = BTreeMap::new();
    let mut shells = Vec::new();
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.next_if(|l| l.starts_with('#')) {
        let Some((key, value)) = line.trim_start_matches('#').split_once(':') else {
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if key == "shell" {
            let f: Vec<&str> = value.split_whitespace().collect();
            if f.len() != 4 {
                return Err(dump_err(format!("bad shell line {line:?}")));
            }
            let int = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| dump_err(format!("bad shell line {line:?}")))
            };
            shells.push(ShellStat {
                word_length: int(f[0])?,
                admitted: int(f[1])?,
                expanded: int(f[2])?,
                min_distance: parse_f64(f[3])?,
            });
        } else {
            header.insert(key.to_string(), value.to_string());
        }
    }
    let get = |k: &str| {
        header
            .get(k)
            .ok_or_else(|| dump_err(format!("missing header {k}")))
    };
    let z = parse_point(get("z")?)?;
    let w = parse_point(get("w")?)?;
    let radius = parse_f64(get("radius")?)?;
    let stopping_margin = parse_f64(get("stopping_margin")?)?;
    let explored = get("explored")?
        .parse()
        .map_err(|_| dump_err("bad explored count"))?;
    if lines.next() != Some(ORBIT_COLUMNS) {
        return Err(dump_err("missing column header"));
    }
    let mut records = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(dump_err(format!("expected 5 columns in {line:?}")));
        }
        let word = Word::parse(cols[0], group.genus())?;
        let element = group.element_from_canonical(word)?;
        if cols[1].parse::<usize>().ok() != Some(element.word.len()) {
            return Err(dump_err(format!("word length mismatch in {line:?}")));
        }
        let abel: Vec<i64> = if cols[4].is_empty() {
            Vec::new()
        } else {
            cols[4]
                .split(';')
                .map(|k| {
                    k.parse()
                        .map_err(|_| dump_err(format!("bad class in {line:?}")))
                })
                .collect::<Result<_>>()?
        };
        if abel != element.abelianization {
            return Err(dump_err(format!("homology class mismatch in {line:?}")));
        }
        let orbit_point = element.matrix.apply(&z);
        let distance = dist(&orbit_point, &w);
        let stored = parse_f64(cols[2])?;
        if (distance - stored).abs() > 1e-9 * (1.0 + stored) {
            return Err(dump_err(format!("distance mismatch in {line:?}")));
        }
        records.push(OrbitRecord {
            cosh_distance: cosh_dist(&orbit_point, &w),
            element,
            distance,
            orbit_point,
        });
    }
    Ok(OrbitBall {
        base_z: z,
        base_w: w,
        radius,
        records,
        shell_stats: shells,
        stopping_margin,
        explored,
    })
}

/// Moment reports as CSV, one row per radius.
pub fn moment_reports_csv(reports: &[MomentReport], prov: &Provenance) -> String {
    let n_max = reports.iter().map(|r| r.raw_sums.len()).max().unwrap_or(0);
    let mut out = String::from("# hyperlattice moment report\n");
    out.push_str(&prov.header());
    out.push_str("x,count,huber_ratio,norm_sq_estimate,ks");
    for n in 0..n_max {
        let _ = write!(out, ",S_{n}");
    }
    for n in 0..n_max {
        let _ = write!(out, ",M_{n}");
    }
    out.push('\n');
    for r in reports {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            fmt_f64(r.x),
            r.count,
            fmt_opt(r.huber_ratio),
            fmt_opt(r.norm_sq_estimate),
            fmt_opt(r.ks)
        );
        for n in 0..n_max {
            let _ = write!(out, ",{}", fmt_opt(r.raw_sums.get(n).copied()));
        }
        for n in 0..n_max {
            let _ = write!(out, ",{}", fmt_opt(r.studentized.get(n).copied()));
        }
        out.push('\n');
    }
    out
}

/// Series scan as CSV; `agrees[k]` is the two-algorithm check for row `k`.
pub fn series_csv(values: &[SeriesValue], agrees: &[bool], prov: &Provenance) -> String {
    let mut out = String::from("# hyperlattice series scan\n");
    out.push_str(&prov.header());
    out.push_str("# tail_bound is a heuristic from the leading counting asymptotic\n");
    out.push_str(SERIES_COLUMNS);
    out.push('\n');
    for (v, ok) in values.iter().zip(agrees) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            v.n,
            fmt_f64(v.s.re),
            fmt_f64(v.s.im),
            fmt_f64(v.epsilon),
            fmt_f64(v.truncation_radius),
            fmt_f64(v.value.re),
            fmt_f64(v.value.im),
            fmt_f64(v.tail_bound),
            ok
        );
    }
    out
}
