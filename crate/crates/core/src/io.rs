//! Plain tab-separated formats: probe tables in, region BED files,
//! probability tracks and parameter reports out.
//!
//! Probe intensities are written with the shortest representation that
//! parses back to the same `f64`. Derived quantities use nine significant
//! digits.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::model::{GlobalParams, ProbeTrack};
use crate::regions::{ProbabilityTrack, Region};
use crate::simulate::SyntheticDataset;

/// Significant digits used for derived numeric output.
pub const OUTPUT_DIGITS: usize = 9;

pub const REGION_HEADER: &str = "#chrom\tstart\tend\trank\tscore\tpeak_probability\tn_probes";
pub const TRACK_HEADER: &str = "#chrom\tposition\tp_peak\tp_hyb_peak\tenrichment";
pub const TRUTH_PROBE_HEADER: &str = "#chrom\tposition\tE\tH\tmu_i\tdelta_i";
pub const PARAM_COLUMNS: [&str; 11] =
    ["fit", "p0", "p1", "mu", "delta", "sigma2", "eta2", "xi2", "pi", "expected_peak_length", "lambda"];

/// `%g`-style formatting with `digits` significant digits.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if exp < -5 || exp >= digits as i32 {
        let m = trim_fraction(mantissa);
        let sign = if exp < 0 { "-" } else { "+" };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_fraction(&format!("{x:.decimals$}")).to_string()
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn data_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(Ok((i + 1, l))),
        Err(e) => Some(Err(Error::Io(e))),
    })
}

fn fields(line: &str) -> Vec<&str> {
    line.split('\t').map(str::trim).collect()
}

fn parse_f64(s: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| parse_err(line, format!("{what}: '{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("{what}: '{s}' is not finite")));
    }
    Ok(v)
}

fn parse_u64(s: &str, line: usize, what: &str) -> Result<u64> {
    s.parse().map_err(|_| parse_err(line, format!("{what}: '{s}' is not a non-negative integer")))
}

fn parse_usize(s: &str, line: usize, what: &str) -> Result<usize> {
    s.parse().map_err(|_| parse_err(line, format!("{what}: '{s}' is not a non-negative integer")))
}

/// Column counts declared by a probe-table header.
fn parse_probe_header(line: &str, line_no: usize) -> Result<(usize, usize)> {
    let cols = fields(line.trim_start_matches('#'));
    if cols.len() < 3 || cols[0] != "chrom" || cols[1] != "position" {
        return Err(parse_err(line_no, "header must start with 'chrom\\tposition' followed by t1..tn"));
    }
    let mut n_t = 0;
    let mut n_c = 0;
    for c in &cols[2..] {
        if n_c == 0 && *c == format!("t{}", n_t + 1) {
            n_t += 1;
        } else if *c == format!("c{}", n_c + 1) {
            n_c += 1;
        } else {
            return Err(parse_err(line_no, format!("unexpected column '{c}'")));
        }
    }
    if n_t == 0 {
        return Err(parse_err(line_no, "at least one treatment column (t1) is required"));
    }
    Ok((n_t, n_c))
}

struct Row {
    position: u64,
    values: Vec<f64>,
    line: usize,
}

/// Read a probe table. Rows are grouped by chromosome in order of first
/// appearance and sorted by position; a repeated `(chrom, position)` is an
/// error.
pub fn parse_probe_table<R: BufRead>(reader: R) -> Result<Vec<ProbeTrack>> {
    let mut lines = data_lines(reader);
    let (header_line, header) = lines.next().ok_or(Error::EmptyInput)??;
    let (n_t, n_c) = parse_probe_header(&header, header_line)?;
    let width = 2 + n_t + n_c;

    let mut order: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<Vec<Row>> = Vec::new();
    for item in lines {
        let (line, text) = item?;
        if text.starts_with('#') {
            continue;
        }
        let f = fields(&text);
        if f.len() != width {
            return Err(parse_err(line, format!("expected {width} fields, found {}", f.len())));
        }
        let position = parse_u64(f[1], line, "position")?;
        let values = f[2..]
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let name = if k < n_t { format!("t{}", k + 1) } else { format!("c{}", k - n_t + 1) };
                parse_f64(s, line, &name)
            })
            .collect::<Result<Vec<_>>>()?;
        let g = *index.entry(f[0].to_string()).or_insert_with(|| {
            order.push(f[0].to_string());
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(Row { position, values, line });
    }
    if groups.is_empty() {
        return Err(Error::EmptyInput);
    }

    order
        .into_iter()
        .zip(groups)
        .map(|(chrom, mut rows)| {
            rows.sort_by_key(|r| (r.position, r.line));
            if let Some(w) = rows.windows(2).find(|w| w[0].position == w[1].position) {
                return Err(parse_err(
                    w[1].line,
                    format!("duplicate probe {chrom}:{} (first seen on line {})", w[1].position, w[0].line),
                ));
            }
            let mut positions = Vec::with_capacity(rows.len());
            let mut treatment = Vec::with_capacity(rows.len() * n_t);
            let mut control = Vec::with_capacity(rows.len() * n_c);
            for r in rows {
                positions.push(r.position);
                treatment.extend_from_slice(&r.values[..n_t]);
                control.extend_from_slice(&r.values[n_t..]);
            }
            ProbeTrack::new(chrom, positions, n_t, treatment, n_c, control)
        })
        .collect()
}

pub fn write_probe_table<W: Write>(mut w: W, tracks: &[ProbeTrack]) -> Result<()> {
    let (n_t, n_c) = tracks.first().map(|t| (t.n_treatment(), t.n_control())).unwrap_or((1, 0));
    let mut header = String::from("chrom\tposition");
    for k in 1..=n_t {
        header.push_str(&format!("\tt{k}"));
    }
    for k in 1..=n_c {
        header.push_str(&format!("\tc{k}"));
    }
    writeln!(w, "{header}")?;
    for t in tracks {
        if t.n_treatment() != n_t || t.n_control() != n_c {
            return Err(Error::Shape("all chromosomes must share the array design".into()));
        }
        for (i, pos) in t.positions().iter().enumerate() {
            write!(w, "{}\t{pos}", t.chromosome_id)?;
            for v in t.treatment_row(i).iter().chain(t.control_row(i)) {
                write!(w, "\t{v}")?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

/// One row of a region BED file.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionRecord {
    pub chromosome_id: String,
    pub start: u64,
    pub end: u64,
    pub rank: usize,
    pub score: f64,
    pub peak_probability: f64,
    pub n_probes: usize,
}

impl From<(usize, &Region)> for RegionRecord {
    fn from((rank, r): (usize, &Region)) -> Self {
        Self {
            chromosome_id: r.chromosome_id.clone(),
            start: r.start,
            end: r.end,
            rank,
            score: r.score,
            peak_probability: r.peak_probability,
            n_probes: r.n_probes(),
        }
    }
}

fn write_region_rows<W: Write>(mut w: W, rows: impl IntoIterator<Item = RegionRecord>) -> Result<()> {
    writeln!(w, "{REGION_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.chromosome_id,
            r.start,
            r.end,
            r.rank,
            format_sig(r.score, OUTPUT_DIGITS),
            format_sig(r.peak_probability, OUTPUT_DIGITS),
            r.n_probes
        )?;
    }
    Ok(())
}

/// Write regions in the given order, ranked from 1.
pub fn write_region_bed<W: Write>(w: W, ranked: &[Region]) -> Result<()> {
    write_region_rows(w, ranked.iter().enumerate().map(|(k, r)| RegionRecord::from((k + 1, r))))
}

pub fn parse_region_bed<R: BufRead>(reader: R) -> Result<Vec<RegionRecord>> {
    let mut out = Vec::new();
    for item in data_lines(reader) {
        let (line, text) = item?;
        if text.starts_with('#') {
            continue;
        }
        let f = fields(&text);
        if f.len() != 7 {
            return Err(parse_err(line, format!("expected 7 fields, found {}", f.len())));
        }
        out.push(RegionRecord {
            chromosome_id: f[0].to_string(),
            start: parse_u64(f[1], line, "start")?,
            end: parse_u64(f[2], line, "end")?,
            rank: parse_usize(f[3], line, "rank")?,
            score: parse_f64(f[4], line, "score")?,
            peak_probability: parse_f64(f[5], line, "peak_probability")?,
            n_probes: parse_usize(f[6], line, "n_probes")?,
        });
    }
    Ok(out)
}

pub fn write_probability_track<W: Write>(mut w: W, tracks: &[ProbabilityTrack]) -> Result<()> {
    writeln!(w, "{TRACK_HEADER}")?;
    for t in tracks {
        t.validate()?;
        for i in 0..t.len() {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                t.chromosome_id,
                t.positions[i],
                format_sig(t.peak_prob[i], OUTPUT_DIGITS),
                format_sig(t.hyb_peak_prob[i], OUTPUT_DIGITS),
                format_sig(t.enrichment[i], OUTPUT_DIGITS)
            )?;
        }
    }
    Ok(())
}

/// Read a probability track, grouped by chromosome in order of first
/// appearance. Rows keep their file order within a chromosome.
pub fn parse_probability_track<R: BufRead>(reader: R) -> Result<Vec<ProbabilityTrack>> {
    let mut out: Vec<ProbabilityTrack> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for item in data_lines(reader) {
        let (line, text) = item?;
        if text.starts_with('#') {
            continue;
        }
        let f = fields(&text);
        if f.len() != 5 {
            return Err(parse_err(line, format!("expected 5 fields, found {}", f.len())));
        }
        let k = *index.entry(f[0].to_string()).or_insert_with(|| {
            out.push(ProbabilityTrack {
                chromosome_id: f[0].to_string(),
                positions: Vec::new(),
                peak_prob: Vec::new(),
                hyb_peak_prob: Vec::new(),
                enrichment: Vec::new(),
            });
            out.len() - 1
        });
        let t = &mut out[k];
        let pos = parse_u64(f[1], line, "position")?;
        if t.positions.last().is_some_and(|&p| p >= pos) {
            return Err(parse_err(line, format!("positions on {} must increase", f[0])));
        }
        t.positions.push(pos);
        t.peak_prob.push(parse_f64(f[2], line, "p_peak")?);
        t.hyb_peak_prob.push(parse_f64(f[3], line, "p_hyb_peak")?);
        t.enrichment.push(parse_f64(f[4], line, "enrichment")?);
    }
    Ok(out)
}

/// True peak regions in the region BED layout: genomic order for rank,
/// mean true `delta_i` for score, probability 1.
pub fn write_truth_regions<W: Write>(w: W, datasets: &[SyntheticDataset], probe_length: u64) -> Result<()> {
    let mut rows = Vec::new();
    for ds in datasets {
        let pos = ds.track.positions();
        for (s, e) in ds.true_regions() {
            let d = &ds.true_effects.delta_i[s..=e];
            rows.push(RegionRecord {
                chromosome_id: ds.track.chromosome_id.clone(),
                start: pos[s],
                end: pos[e] + probe_length,
                rank: rows.len() + 1,
                score: d.iter().sum::<f64>() / d.len() as f64,
                peak_probability: 1.0,
                n_probes: e - s + 1,
            });
        }
    }
    write_region_rows(w, rows)
}

pub fn write_truth_probes<W: Write>(mut w: W, datasets: &[SyntheticDataset]) -> Result<()> {
    writeln!(w, "{TRUTH_PROBE_HEADER}")?;
    for ds in datasets {
        for (i, pos) in ds.track.positions().iter().enumerate() {
            writeln!(
                w,
                "{}\t{pos}\t{}\t{}\t{}\t{}",
                ds.track.chromosome_id, ds.true_e[i], ds.true_h[i], ds.true_effects.mu_i[i], ds.true_effects.delta_i[i]
            )?;
        }
    }
    Ok(())
}

/// Per-probe ground truth as read back from a sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthProbe {
    pub chromosome_id: String,
    pub position: u64,
    pub e: u8,
    pub h: u8,
    pub mu_i: f64,
    pub delta_i: f64,
}

pub fn parse_truth_probes<R: BufRead>(reader: R) -> Result<Vec<TruthProbe>> {
    let bit = |s: &str, line: usize, what: &str| match s {
        "0" => Ok(0),
        "1" => Ok(1),
        _ => Err(parse_err(line, format!("{what}: '{s}' must be 0 or 1"))),
    };
    let mut out = Vec::new();
    for item in data_lines(reader) {
        let (line, text) = item?;
        if text.starts_with('#') {
            continue;
        }
        let f = fields(&text);
        if f.len() != 6 {
            return Err(parse_err(line, format!("expected 6 fields, found {}", f.len())));
        }
        out.push(TruthProbe {
            chromosome_id: f[0].to_string(),
            position: parse_u64(f[1], line, "position")?,
            e: bit(f[2], line, "E")?,
            h: bit(f[3], line, "H")?,
            mu_i: parse_f64(f[4], line, "mu_i")?,
            delta_i: parse_f64(f[5], line, "delta_i")?,
        });
    }
    Ok(out)
}

/// One row per fit: the Bernoulli rates, Gaussian globals, stationary peak
/// probability, expected peak length in bp, and the raw switching rate.
pub fn write_param_report<W: Write>(mut w: W, fits: &[(&str, GlobalParams)]) -> Result<()> {
    writeln!(w, "#{}", PARAM_COLUMNS.join("\t"))?;
    for (name, p) in fits {
        let values = [p.p0, p.p1, p.mu, p.delta, p.sigma2, p.eta2, p.xi2, p.pi1, p.expected_peak_length(), p.lambda];
        let cells: Vec<String> = values.iter().map(|v| format_sig(*v, OUTPUT_DIGITS)).collect();
        writeln!(w, "{name}\t{}", cells.join("\t"))?;
    }
    Ok(())
}

/// Parse a parameter report back into `(fit name, params)`. `tau2` is not
/// part of the report and comes back as `NaN`.
pub fn parse_param_report<R: BufRead>(reader: R) -> Result<Vec<(String, GlobalParams)>> {
    let mut out = Vec::new();
    for item in data_lines(reader) {
        let (line, text) = item?;
        if text.starts_with('#') {
            continue;
        }
        let f = fields(&text);
        if f.len() != PARAM_COLUMNS.len() {
            return Err(parse_err(line, format!("expected {} fields, found {}", PARAM_COLUMNS.len(), f.len())));
        }
        let v = |k: usize| parse_f64(f[k], line, PARAM_COLUMNS[k]);
        out.push((
            f[0].to_string(),
            GlobalParams {
                p0: v(1)?,
                p1: v(2)?,
                mu: v(3)?,
                delta: v(4)?,
                sigma2: v(5)?,
                tau2: f64::NAN,
                eta2: v(6)?,
                xi2: v(7)?,
                pi1: v(8)?,
                lambda: v(10)?,
            },
        ));
    }
    Ok(out)
}

/// Retained MCMC draws, one row per draw.
pub fn write_param_draws<W: Write>(mut w: W, draws: &[GlobalParams]) -> Result<()> {
    writeln!(w, "#draw\tmu\tdelta\tsigma2\ttau2\teta2\txi2\tp0\tp1\tpi1\tlambda")?;
    for (k, p) in draws.iter().enumerate() {
        let values = [p.mu, p.delta, p.sigma2, p.tau2, p.eta2, p.xi2, p.p0, p.p1, p.pi1, p.lambda];
        let cells: Vec<String> = values.iter().map(|v| format_sig(*v, OUTPUT_DIGITS)).collect();
        writeln!(w, "{k}\t{}", cells.join("\t"))?;
    }
    Ok(())
}
