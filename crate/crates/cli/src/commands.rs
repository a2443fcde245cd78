use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use hyperlattice::dirichlet::{
    evaluate_data, evaluate_stieltjes, even_leading_coefficient_probe, huber_residue_probe,
    odd_probe, ResidueProbe, SeriesData, SeriesValue,
};
use hyperlattice::orbit::enumerate_ball;
use hyperlattice::output::{
    json_with_provenance, moment_reports_csv, read_orbit_dump, series_csv, write_orbit_dump,
    Provenance,
};
use hyperlattice::stats::estimate_norm_sq;
use hyperlattice::verify::{run, Fixture, CRITERIA};
use hyperlattice::{Complex, EnumerationOptions, MomentReport, OrbitBall, SurfaceGroup};
use serde::Serialize;

use crate::config::{Format, RunConfig};

/// Relative gap tolerated between the direct and summation-by-parts
/// series values, measured against `sum |terms|`.
const AGREEMENT_TOL: f64 = 1e-9;

/// A run that completed but did not meet its targets.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ProbeMiss(pub String);

/// Some acceptance criteria failed.
#[derive(Debug, thiserror::Error)]
#[error("{failed} of {total} acceptance criteria failed")]
pub struct VerifyFailed {
    pub failed: usize,
    pub total: usize,
}

struct Run {
    cfg: RunConfig,
    group: SurfaceGroup,
    prov: Provenance,
}

impl Run {
    fn new(cfg: RunConfig) -> Result<Self> {
        let group = SurfaceGroup::octagon(cfg.genus)?;
        let prov = Provenance::new(cfg.hash(), &group);
        fs::create_dir_all(&cfg.output_dir)
            .with_context(|| format!("creating {}", cfg.output_dir.display()))?;
        Ok(Self { cfg, group, prov })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.cfg.output_dir.join(name)
    }

    fn write(&self, name: &str, text: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    fn options(&self) -> EnumerationOptions {
        EnumerationOptions {
            element_cap: self.cfg.element_cap,
            paranoid: self.cfg.paranoid,
            ..EnumerationOptions::default()
        }
        .with_workers(self.cfg.workers)
        .with_margin_scale(self.cfg.margin_factor)
    }

    /// One enumeration at the largest radius, restricted to the others.
    fn balls(&self) -> Result<Vec<OrbitBall>> {
        let z = self.cfg.z_point()?;
        let w = self.cfg.w_point()?;
        let top = *self.cfg.radii.last().expect("validated non-empty");
        let ball = enumerate_ball(&self.group, &z, &w, top, &self.options())?;
        self.cfg
            .radii
            .iter()
            .map(|&x| Ok(ball.restrict(x)?))
            .collect()
    }

    /// Dumps from an earlier `enumerate` with the same config hash are
    /// reused; anything else is recomputed.
    fn balls_cached(&self) -> Result<Vec<OrbitBall>> {
        let mut out = Vec::with_capacity(self.cfg.radii.len());
        for &x in &self.cfg.radii {
            match fs::read_to_string(self.path(&orbit_file(x))) {
                Ok(text)
                    if text.contains(&format!("# config_hash: {}\n", self.prov.config_hash)) =>
                {
                    out.push(read_orbit_dump(&text, &self.group)?)
                }
                _ => return self.balls(),
            }
        }
        Ok(out)
    }
}

pub fn orbit_file(x: f64) -> String {
    format!("orbit_x{x}.csv")
}

fn say(line: impl AsRef<str>) -> Result<()> {
    writeln!(std::io::stdout().lock(), "{}", line.as_ref())?;
    Ok(())
}

pub fn enumerate(cfg: RunConfig) -> Result<()> {
    let run = Run::new(cfg)?;
    for ball in run.balls()? {
        ball.audit()?;
        let name = orbit_file(ball.radius);
        run.write(&name, &write_orbit_dump(&ball, &run.prov))?;
        let last = ball.shell_stats.last().expect("audited ball has shells");
        say(format!(
            "x={} count={} explored={} shells={} workers={} audit=ok (final shell length {} min distance {:.4} > {:.4}) -> {}",
            ball.radius,
            ball.count(),
            ball.explored,
            ball.shell_stats.len(),
            run.cfg.workers,
            last.word_length,
            last.min_distance,
            ball.radius + ball.stopping_margin,
            run.path(&name).display()
        ))?;
    }
    Ok(())
}

pub fn report(cfg: RunConfig) -> Result<Vec<MomentReport>> {
    let run = Run::new(cfg)?;
    let reports = reports_for(&run, &run.balls_cached()?)?;
    for r in &reports {
        let m = |n: usize| {
            r.studentized
                .get(n)
                .map_or("-".to_string(), |v| format!("{v:.4}"))
        };
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        say(format!(
            "x={} N={} huber={} norm_sq~{} M3={} M4={} ks={}",
            r.x,
            r.count,
            opt(r.huber_ratio),
            opt(r.norm_sq_estimate),
            m(3),
            m(4),
            opt(r.ks)
        ))?;
        if run.cfg.wants(Format::Json) {
            run.write(
                &format!("report_x{}.json", r.x),
                &json_with_provenance(&run.prov, r)?,
            )?;
        }
    }
    if run.cfg.wants(Format::Csv) {
        run.write("moments.csv", &moment_reports_csv(&reports, &run.prov))?;
    }
    Ok(reports)
}

fn reports_for(run: &Run, balls: &[OrbitBall]) -> Result<Vec<MomentReport>> {
    let f = run.cfg.form()?;
    balls
        .iter()
        .map(|b| {
            Ok(MomentReport::compute(
                b,
                &f,
                run.group.volume(),
                run.cfg.n_max,
            )?)
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct ProbeRecord {
    probe: String,
    tolerance: Option<f64>,
    passed: Option<bool>,
    result: ResidueProbe,
}

pub fn dirichlet(cfg: RunConfig) -> Result<()> {
    let run = Run::new(cfg)?;
    let d = &run.cfg.dirichlet;
    let vol = run.group.volume();
    let f = run.cfg.form()?;
    let balls = run.balls_cached()?;
    let data: Vec<SeriesData> = balls
        .iter()
        .map(|b| SeriesData::from_ball(b, &f))
        .collect::<hyperlattice::Result<_>>()?;

    let mut values: Vec<SeriesValue> = Vec::new();
    let mut agrees = Vec::new();
    for sd in &data {
        for &n in &d.n {
            for &re in &d.s {
                let s = Complex::new(re, d.im_s);
                let v = evaluate_data(sd, i64::from(n), s, d.epsilon, vol)?;
                let parts = evaluate_stieltjes(sd, i64::from(n), s, d.epsilon)?;
                let scale = absolute_sum(sd, n, re);
                agrees
                    .push((v.value - parts).norm() <= AGREEMENT_TOL * scale.max(f64::MIN_POSITIVE));
                values.push(v);
            }
        }
    }
    if run.cfg.wants(Format::Csv) {
        run.write("series.csv", &series_csv(&values, &agrees, &run.prov))?;
    }
    let disagreements = agrees.iter().filter(|ok| !**ok).count();
    say(format!(
        "series: {} values, {} two-algorithm disagreements",
        values.len(),
        disagreements
    ))?;

    let mut probes = Vec::new();
    if data.len() >= 3 {
        let huber = huber_residue_probe(&data, vol)?;
        probes.push(graded("huber_residue", huber, d.residue_tolerance));
        if d.n.contains(&2) {
            let norm_sq = match run.cfg.norm_sq {
                Some(v) => v,
                None => estimate_norm_sq(&reports_for(&run, &balls)?, vol)?,
            };
            let lead = even_leading_coefficient_probe(&data, norm_sq, vol, 1)?;
            probes.push(graded("even_leading_n2", lead, d.leading_tolerance));
        }
        for &n in d.n.iter().filter(|n| *n % 2 == 1) {
            probes.push(ProbeRecord {
                probe: format!("odd_n{n}"),
                tolerance: None,
                passed: None,
                result: odd_probe(&data, n)?,
            });
        }
    } else {
        say("probes skipped: they need at least three radii")?;
    }
    for p in &probes {
        let r = &p.result;
        say(format!(
            "probe {}: estimate {:.6} target {} -> {}",
            p.probe,
            r.leading_coefficient_estimate,
            r.target.map_or("none".into(), |t| format!("{t:.6}")),
            match p.passed {
                Some(true) => "pass",
                Some(false) => "MISS",
                None => "reported",
            }
        ))?;
    }
    if run.cfg.wants(Format::Json) {
        run.write("probes.json", &json_with_provenance(&run.prov, &probes)?)?;
    }
    if disagreements > 0 {
        return Err(ProbeMiss(format!(
            "{disagreements} series values failed the two-algorithm check"
        ))
        .into());
    }
    let missed: Vec<&str> = probes
        .iter()
        .filter(|p| p.passed == Some(false))
        .map(|p| p.probe.as_str())
        .collect();
    if !missed.is_empty() {
        return Err(ProbeMiss(format!("probes outside tolerance: {}", missed.join(", "))).into());
    }
    Ok(())
}

fn graded(name: &str, result: ResidueProbe, tolerance: f64) -> ProbeRecord {
    ProbeRecord {
        probe: name.to_string(),
        tolerance: Some(tolerance),
        passed: Some(result.passes(tolerance)),
        result,
    }
}

/// `sum |sym|^n cosh(r)^-Re(s)`, the natural scale for cancellation.
fn absolute_sum(d: &SeriesData, n: u32, re_s: f64) -> f64 {
    d.symbols
        .iter()
        .zip(&d.cosh_distances)
        .map(|(sym, c)| sym.abs().powi(n as i32) * c.powf(-re_s))
        .sum()
}

pub fn verify(workers: usize, only: &[u32]) -> Result<()> {
    let fx = Fixture::genus2(workers)?;
    let ids: Vec<u32> = if only.is_empty() {
        CRITERIA.iter().map(|(id, _)| *id).collect()
    } else {
        only.to_vec()
    };
    let mut failed = 0;
    for &id in &ids {
        let outcome = run(id, &fx);
        failed += usize::from(!outcome.passed);
        say(outcome.to_string())?;
    }
    say(format!(
        "{} of {} criteria passed",
        ids.len() - failed,
        ids.len()
    ))?;
    if failed > 0 {
        return Err(VerifyFailed {
            failed,
            total: ids.len(),
        }
        .into());
    }
    Ok(())
}

pub fn export_group(genus: usize, out: Option<&Path>) -> Result<()> {
    let group = SurfaceGroup::octagon(genus)?;
    let text = group.export();
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(format!("group_genus{genus}.json"));
            fs::write(&path, &text)?;
            say(format!(
                "fingerprint {} -> {}",
                group.fingerprint(),
                path.display()
            ))
        }
        None => say(text.trim_end()),
    }
}
