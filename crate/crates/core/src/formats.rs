//! Text formats: sectioned `key = value` parameter files, sweep CSV with a
//! `#` metadata preamble, and the report, bench and freeze-out tables.
//!
//! Parameter files write floats in shortest round-trip form so that they
//! re-parse bit-identically. CSV tables write 9 significant digits.

use std::collections::BTreeMap;

use crate::circuits::{BenchSetup, ComparisonRow};
use crate::error::{parse_err, Error, Result};
use crate::extraction::ExtractionReport;
use crate::fitting::{FitResult, FreeParam, Param, TemperatureError};
use crate::library::{ReferenceLibrary, LIBRARY_VERSION};
use crate::model::{DeviceGeometry, ModelParams, Polarity};
use crate::physics::{ChannelDoping, DopantKind, FreezeoutPoint, MosStack};
use crate::sweep::{IvSweep, Origin};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub kind: String,
    pub name: Option<String>,
    pub line: usize,
    pub entries: Vec<Entry>,
}

/// A parsed parameter/config file. The only key allowed before the first
/// section header is `version`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub version: Option<String>,
    pub sections: Vec<Section>,
}

pub const SECTION_KINDS: [&str; 6] = ["model", "stack", "geometry", "circuit", "fit", "bench"];

pub fn parse_document(text: &str) -> Result<Document> {
    let mut doc = Document::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        if let Some(inner) = s.strip_prefix('[') {
            let inner = inner
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line, "section header is missing `]`"))?
                .trim();
            let mut parts = inner.splitn(2, char::is_whitespace);
            let kind = parts.next().unwrap_or_default().to_string();
            if !SECTION_KINDS.contains(&kind.as_str()) {
                return Err(parse_err(line, format!("unknown section kind `{kind}`")));
            }
            let name = parts.next().map(|n| n.trim().to_string()).filter(|n| !n.is_empty());
            if doc.sections.iter().any(|x| x.kind == kind && x.name == name) {
                return Err(parse_err(line, format!("duplicate section `{inner}`")));
            }
            doc.sections.push(Section { kind, name, line, entries: Vec::new() });
            continue;
        }
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| parse_err(line, format!("expected `key = value`, got `{s}`")))?;
        let (key, value) = (k.trim().to_string(), v.trim().to_string());
        if key.is_empty() {
            return Err(parse_err(line, "empty key"));
        }
        match doc.sections.last_mut() {
            None if key == "version" => doc.version = Some(value),
            None => return Err(parse_err(line, format!("key `{key}` outside any section"))),
            Some(sec) => {
                if sec.entries.iter().any(|e| e.key == key) {
                    return Err(parse_err(line, format!("duplicate key `{key}`")));
                }
                sec.entries.push(Entry { key, value, line });
            }
        }
    }
    Ok(doc)
}

impl Document {
    pub fn sections_of<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a Section> + 'a {
        self.sections.iter().filter(move |s| s.kind == kind)
    }

    /// The single section of `kind`, if present. More than one is an error.
    pub fn single<'a>(&'a self, kind: &'a str) -> Result<Option<&'a Section>> {
        let mut it = self.sections_of(kind);
        let first = it.next();
        if let Some(second) = it.next() {
            return Err(parse_err(second.line, format!("more than one [{kind}] section")));
        }
        Ok(first)
    }
}

impl Section {
    /// Reject keys outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for e in &self.entries {
            if !allowed.contains(&e.key.as_str()) {
                return Err(parse_err(e.line, format!("unknown key `{}` in [{}]", e.key, self.kind)));
            }
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn require(&self, key: &str) -> Result<&Entry> {
        self.get(key)
            .ok_or_else(|| parse_err(self.line, format!("[{}] is missing `{key}`", self.kind)))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let e = self.require(key)?;
        parse_f64(&e.value, e.line)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.get(key).map_or(Ok(default), |e| parse_f64(&e.value, e.line))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let e = self.require(key)?;
        e.value
            .parse()
            .map_err(|_| parse_err(e.line, format!("`{key}` must be a non-negative integer")))
    }

    pub fn list(&self, key: &str) -> Result<Vec<String>> {
        let e = self.require(key)?;
        Ok(split_list(&e.value))
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let e = self.require(key)?;
        split_list(&e.value).iter().map(|v| parse_f64(v, e.line)).collect()
    }

    fn name_or(&self, fallback: &str) -> String {
        self.name.clone().unwrap_or_else(|| fallback.to_string())
    }
}

fn split_list(v: &str) -> Vec<String> {
    v.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
}

fn parse_f64(v: &str, line: usize) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| parse_err(line, format!("`{v}` is not a number")))
}

/// Shortest string that parses back to the same `f64`.
pub fn fmt_exact(v: f64) -> String {
    format!("{v:e}")
}

/// 9 significant digits.
pub fn fmt9(v: f64) -> String {
    // Adding zero turns -0 into +0.
    let v = v + 0.0;
    if v.is_finite() {
        format!("{v:.8e}")
    } else {
        format!("{v}")
    }
}

fn fmt9_opt(v: Option<f64>) -> String {
    v.map(fmt9).unwrap_or_default()
}

const MODEL_KEYS: [&str; 12] = [
    "polarity", "vth0", "c_vth", "mu0", "alpha_ph", "mu_c", "n0", "ss_floor", "v_sat", "lambda_clm", "i_off_ref",
    "eta",
];

pub fn model_from_section(sec: &Section) -> Result<ModelParams> {
    sec.check_keys(&MODEL_KEYS)?;
    let pol = sec.require("polarity")?;
    let polarity: Polarity = pol.value.parse().map_err(|_| parse_err(pol.line, "polarity must be nmos or pmos"))?;
    let mut p = ModelParams {
        polarity,
        vth0: 0.0,
        c_vth: 0.0,
        mu0: 0.0,
        alpha_ph: 0.0,
        mu_c: 0.0,
        n0: 0.0,
        ss_floor: 0.0,
        v_sat: 0.0,
        lambda_clm: 0.0,
        i_off_ref: 0.0,
        eta: 0.0,
    };
    for param in Param::ALL {
        param.set(&mut p, sec.f64(param.name())?);
    }
    p.validate().map_err(|e| parse_err(sec.line, e.to_string()))?;
    Ok(p)
}

pub fn write_model(out: &mut String, name: &str, p: &ModelParams) {
    out.push_str(&format!("[model {name}]\npolarity = {}\n", p.polarity.as_str()));
    for param in Param::ALL {
        out.push_str(&format!("{} = {}\n", param.name(), fmt_exact(param.get(p))));
    }
}

const STACK_KEYS: [&str; 6] = ["v_fb", "c_ox", "n_dop", "e_ion", "kind", "g_d"];

pub fn stack_from_section(sec: &Section) -> Result<MosStack> {
    sec.check_keys(&STACK_KEYS)?;
    let k = sec.require("kind")?;
    let kind = match k.value.as_str() {
        "acceptor" => DopantKind::Acceptor,
        "donor" => DopantKind::Donor,
        _ => return Err(parse_err(k.line, "kind must be acceptor or donor")),
    };
    let s = MosStack {
        v_fb: sec.f64("v_fb")?,
        c_ox: sec.f64("c_ox")?,
        doping: ChannelDoping { n_dop: sec.f64("n_dop")?, e_ion: sec.f64("e_ion")?, kind, g_d: sec.f64("g_d")? },
    };
    s.validate().map_err(|e| parse_err(sec.line, e.to_string()))?;
    Ok(s)
}

pub fn write_stack(out: &mut String, name: &str, s: &MosStack) {
    let kind = match s.doping.kind {
        DopantKind::Acceptor => "acceptor",
        DopantKind::Donor => "donor",
    };
    out.push_str(&format!(
        "[stack {name}]\nv_fb = {}\nc_ox = {}\nn_dop = {}\ne_ion = {}\nkind = {kind}\ng_d = {}\n",
        fmt_exact(s.v_fb),
        fmt_exact(s.c_ox),
        fmt_exact(s.doping.n_dop),
        fmt_exact(s.doping.e_ion),
        fmt_exact(s.doping.g_d),
    ));
}

/// Every `[stack NAME]` section of a file, by name.
pub fn parse_stacks(text: &str) -> Result<BTreeMap<String, MosStack>> {
    let doc = parse_document(text)?;
    let mut out = BTreeMap::new();
    for sec in doc.sections_of("stack") {
        out.insert(sec.name_or("default"), stack_from_section(sec)?);
    }
    if out.is_empty() {
        return Err(parse_err(1, "no [stack] section"));
    }
    Ok(out)
}

const GEOMETRY_KEYS: [&str; 3] = ["w_um", "l_um", "cox_F_cm2"];

pub fn geometry_from_section(sec: &Section) -> Result<DeviceGeometry> {
    sec.check_keys(&GEOMETRY_KEYS)?;
    let g = DeviceGeometry { w: sec.f64("w_um")?, l: sec.f64("l_um")?, c_ox: sec.f64("cox_F_cm2")? };
    g.validate().map_err(|e| parse_err(sec.line, e.to_string()))?;
    Ok(g)
}

const CIRCUIT_KEYS: [&str; 7] = ["ro_stages", "dff_stages", "c_load_F", "f_clk_Hz", "c_switched_F", "w_n_um", "w_p_um"];

pub fn circuit_from_section(sec: &Section) -> Result<BenchSetup> {
    sec.check_keys(&CIRCUIT_KEYS)?;
    Ok(BenchSetup {
        ro_stages: sec.usize("ro_stages")?,
        dff_stages: sec.usize("dff_stages")?,
        c_load: sec.f64("c_load_F")?,
        f_clk: sec.f64("f_clk_Hz")?,
        c_switched: sec.f64("c_switched_F")?,
        w_n: sec.f64("w_n_um")?,
        w_p: sec.f64("w_p_um")?,
    })
}

pub fn write_library(lib: &ReferenceLibrary) -> String {
    let mut out = String::from("# cryomos reference parameter sets\n");
    out.push_str(&format!("version = {}\n\n", lib.version));
    let g = &lib.geometry;
    out.push_str(&format!(
        "[geometry]\nw_um = {}\nl_um = {}\ncox_F_cm2 = {}\n",
        fmt_exact(g.w),
        fmt_exact(g.l),
        fmt_exact(g.c_ox)
    ));
    for (name, p) in &lib.sets {
        out.push('\n');
        write_model(&mut out, name, p);
    }
    if let Some(b) = &lib.bench {
        out.push_str(&format!(
            "\n[circuit]\nro_stages = {}\ndff_stages = {}\nc_load_F = {}\nf_clk_Hz = {}\nc_switched_F = {}\nw_n_um = {}\nw_p_um = {}\n",
            b.ro_stages,
            b.dff_stages,
            fmt_exact(b.c_load),
            fmt_exact(b.f_clk),
            fmt_exact(b.c_switched),
            fmt_exact(b.w_n),
            fmt_exact(b.w_p),
        ));
    }
    out
}

pub fn parse_library(text: &str) -> Result<ReferenceLibrary> {
    let doc = parse_document(text)?;
    let version = doc.version.clone().ok_or_else(|| parse_err(1, "missing `version`"))?;
    if version != LIBRARY_VERSION {
        return Err(parse_err(1, format!("unsupported version `{version}`, expected `{LIBRARY_VERSION}`")));
    }
    for sec in &doc.sections {
        if !["model", "geometry", "circuit"].contains(&sec.kind.as_str()) {
            return Err(parse_err(sec.line, format!("[{}] is not allowed in a library file", sec.kind)));
        }
    }
    let geometry = geometry_from_section(doc.single("geometry")?.ok_or_else(|| parse_err(1, "missing [geometry]"))?)?;
    let mut sets = BTreeMap::new();
    for sec in doc.sections_of("model") {
        let name = sec.name.clone().ok_or_else(|| parse_err(sec.line, "[model] needs a name"))?;
        sets.insert(name, model_from_section(sec)?);
    }
    let bench = doc.single("circuit")?.map(circuit_from_section).transpose()?;
    Ok(ReferenceLibrary { version, geometry, sets, bench })
}

/// A fit job: the starting set, which parameters move, the sweep files and
/// the acceptance threshold on the mean relative error.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub name: String,
    pub initial: ModelParams,
    pub free: Vec<FreeParam>,
    pub sweeps: Vec<String>,
    pub threshold: f64,
    pub max_iter: Option<usize>,
    pub restarts: Option<usize>,
}

pub const DEFAULT_FIT_THRESHOLD: f64 = 0.06;

const FIT_KEYS: [&str; 5] = ["sweeps", "free", "threshold", "max_iter", "restarts"];

pub fn parse_fit_config(text: &str) -> Result<FitConfig> {
    let doc = parse_document(text)?;
    let fit = doc.single("fit")?.ok_or_else(|| parse_err(1, "missing [fit]"))?;
    fit.check_keys(&FIT_KEYS)?;
    let model = doc.single("model")?.ok_or_else(|| parse_err(1, "missing [model] with the starting set"))?;
    let initial = model_from_section(model)?;
    let free_entry = fit.require("free")?;
    let free = split_list(&free_entry.value)
        .iter()
        .map(|n| {
            let param: Param = n.parse().map_err(|_| parse_err(free_entry.line, format!("unknown parameter `{n}`")))?;
            Ok(FreeParam { param, bound: param.default_bound() })
        })
        .collect::<Result<Vec<_>>>()?;
    let opt_usize = |k: &str| fit.get(k).map(|_| fit.usize(k)).transpose();
    Ok(FitConfig {
        name: model.name_or("fit"),
        initial,
        free,
        sweeps: fit.list("sweeps")?,
        threshold: fit.f64_or("threshold", DEFAULT_FIT_THRESHOLD)?,
        max_iter: opt_usize("max_iter")?,
        restarts: opt_usize("restarts")?,
    })
}

/// Bench scenario: technologies and the (V_DD, T) grid, with optional
/// overrides of the library and its circuit constants.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub library: Option<String>,
    pub technologies: Vec<String>,
    pub vdd: Vec<f64>,
    pub t: Vec<f64>,
    pub circuit: Option<BenchSetup>,
}

const BENCH_KEYS: [&str; 4] = ["library", "technologies", "vdd_V", "T_K"];

pub fn parse_bench_config(text: &str) -> Result<BenchConfig> {
    let doc = parse_document(text)?;
    let b = doc.single("bench")?.ok_or_else(|| parse_err(1, "missing [bench]"))?;
    b.check_keys(&BENCH_KEYS)?;
    for sec in &doc.sections {
        if sec.kind != "bench" && sec.kind != "circuit" {
            return Err(parse_err(sec.line, format!("[{}] is not allowed in a bench file", sec.kind)));
        }
    }
    Ok(BenchConfig {
        library: b.get("library").map(|e| e.value.clone()),
        technologies: b.list("technologies")?,
        vdd: b.f64_list("vdd_V")?,
        t: b.f64_list("T_K")?,
        circuit: doc.single("circuit")?.map(circuit_from_section).transpose()?,
    })
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 output")
}

fn csv_err(e: csv::Error, offset: usize) -> Error {
    let line = e.position().map_or(offset, |p| p.line() as usize + offset);
    parse_err(line, e.to_string())
}

/// Records of a CSV body with `expected` as header. `offset` is the number
/// of lines before the header, for diagnostics.
fn read_table(body: &str, expected: &[&str], offset: usize) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let header = r.headers().map_err(|e| csv_err(e, offset))?.clone();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(parse_err(offset + 1, format!("expected header `{}`", expected.join(","))));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(e, offset))?;
        let line = rec.position().map_or(0, |p| p.line() as usize) + offset;
        rows.push((line, rec));
    }
    Ok(rows)
}

fn field_f64(rec: &csv::StringRecord, i: usize, line: usize) -> Result<f64> {
    parse_f64(rec.get(i).unwrap_or_default(), line)
}

fn field_opt(rec: &csv::StringRecord, i: usize, line: usize) -> Result<Option<f64>> {
    match rec.get(i).unwrap_or_default() {
        "" => Ok(None),
        v => parse_f64(v, line).map(Some),
    }
}

pub const SWEEP_HEADER: [&str; 2] = ["vgs_V", "ids_A"];

/// Signed presentation values under the metadata preamble.
pub fn write_sweep(s: &IvSweep) -> String {
    let mut out = format!(
        "# vds_V={}\n# T_K={}\n# W_um={}\n# L_um={}\n# cox_F_cm2={}\n# polarity={}\n",
        fmt9(s.signed_vds()),
        fmt9(s.t),
        fmt9(s.geom.w),
        fmt9(s.geom.l),
        fmt9(s.geom.c_ox),
        s.polarity.as_str()
    );
    match &s.origin {
        Origin::Measured => out.push_str("# origin=measured\n"),
        Origin::Synthetic(fp) => out.push_str(&format!("# origin=synthetic:{fp}\n")),
    }
    if let Some(d) = &s.device {
        out.push_str(&format!("# device={d}\n"));
    }
    let mut w = csv_writer();
    w.write_record(SWEEP_HEADER).expect("in-memory write");
    for (v, i) in s.to_signed() {
        w.write_record([fmt9(v), fmt9(i)]).expect("in-memory write");
    }
    out.push_str(&finish(w));
    out
}

pub fn parse_sweep(text: &str) -> Result<IvSweep> {
    let mut meta: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    let mut body_start = None;
    let mut offset = 0;
    for (i, raw) in text.lines().enumerate() {
        let s = raw.trim();
        if let Some(rest) = s.strip_prefix('#') {
            let (k, v) = rest
                .split_once('=')
                .ok_or_else(|| parse_err(i + 1, "metadata line must read `# key=value`"))?;
            let k = k.trim();
            if !["vds_V", "T_K", "W_um", "L_um", "cox_F_cm2", "polarity", "origin", "device"].contains(&k) {
                return Err(parse_err(i + 1, format!("unknown metadata key `{k}`")));
            }
            if meta.insert(k, (i + 1, v.trim())).is_some() {
                return Err(parse_err(i + 1, format!("duplicate metadata key `{k}`")));
            }
        } else if !s.is_empty() {
            body_start = Some(text.lines().skip(i).collect::<Vec<_>>().join("\n"));
            offset = i;
            break;
        }
    }
    let body = body_start.ok_or_else(|| parse_err(text.lines().count().max(1), "no data: missing `vgs_V,ids_A` header"))?;
    let num = |k: &str| -> Result<f64> {
        let &(line, v) = meta.get(k).ok_or_else(|| parse_err(1, format!("missing metadata `# {k}=`")))?;
        parse_f64(v, line)
    };
    let (vds, t) = (num("vds_V")?, num("T_K")?);
    let geom = DeviceGeometry { w: num("W_um")?, l: num("L_um")?, c_ox: num("cox_F_cm2")? };
    let &(pl, pv) = meta.get("polarity").ok_or_else(|| parse_err(1, "missing metadata `# polarity=`"))?;
    let polarity: Polarity = pv.parse().map_err(|_| parse_err(pl, "polarity must be nmos or pmos"))?;
    let origin = match meta.get("origin") {
        None => Origin::Measured,
        Some(&(_, "measured")) => Origin::Measured,
        Some(&(line, v)) => match v.strip_prefix("synthetic:") {
            Some(fp) => Origin::Synthetic(fp.to_string()),
            None => return Err(parse_err(line, format!("unknown origin `{v}`"))),
        },
    };
    let rows = read_table(&body, &SWEEP_HEADER, offset)?;
    let mut signed = Vec::with_capacity(rows.len());
    for (line, rec) in &rows {
        if rec.len() != 2 {
            return Err(parse_err(*line, "expected two columns"));
        }
        signed.push((field_f64(rec, 0, *line)?, field_f64(rec, 1, *line)?));
    }
    if signed.is_empty() {
        return Err(parse_err(offset + 1, "sweep has no data rows"));
    }
    let mut sweep = IvSweep::from_signed(vds, t, geom, polarity, &signed, origin)
        .map_err(|e| parse_err(offset + 1, e.to_string()))?;
    sweep.device = meta.get("device").map(|&(_, d)| d.to_string());
    Ok(sweep)
}

pub const REPORT_HEADER: [&str; 15] = [
    "device",
    "T_K",
    "vth_cc_V",
    "vth_y_V",
    "ss_mV_dec",
    "gm_max_S",
    "gm_max_vgs_V",
    "mu_cm2_Vs",
    "i_off_A",
    "v_ov_V",
    "ratio",
    "y_r2",
    "y_lo",
    "y_hi",
    "errors",
];

pub fn write_reports_csv(reports: &[ExtractionReport]) -> String {
    let mut w = csv_writer();
    w.write_record(REPORT_HEADER).expect("in-memory write");
    for r in reports {
        let (lo, hi) = r.y_window.map_or((String::new(), String::new()), |(a, b)| (a.to_string(), b.to_string()));
        w.write_record([
            r.device.clone(),
            fmt9(r.t),
            fmt9_opt(r.vth_cc),
            fmt9_opt(r.vth_y),
            fmt9_opt(r.ss_min),
            fmt9_opt(r.gm_max),
            fmt9_opt(r.gm_max_vgs),
            fmt9_opt(r.mu_ch),
            fmt9_opt(r.i_off),
            fmt9_opt(r.v_ov_at_ratio),
            fmt9(r.ratio),
            fmt9_opt(r.y_r2),
            lo,
            hi,
            r.errors.join(" | "),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

pub fn parse_reports_csv(text: &str) -> Result<Vec<ExtractionReport>> {
    let rows = read_table(text, &REPORT_HEADER, 0)?;
    rows.iter()
        .map(|(line, rec)| {
            let line = *line;
            let idx = |i: usize| -> Result<Option<usize>> {
                match rec.get(i).unwrap_or_default() {
                    "" => Ok(None),
                    v => v.parse().map(Some).map_err(|_| parse_err(line, "window bound must be an integer")),
                }
            };
            let y_window = match (idx(12)?, idx(13)?) {
                (Some(a), Some(b)) => Some((a, b)),
                (None, None) => None,
                _ => return Err(parse_err(line, "window needs both bounds")),
            };
            let errors = match rec.get(14).unwrap_or_default() {
                "" => Vec::new(),
                e => e.split(" | ").map(str::to_string).collect(),
            };
            Ok(ExtractionReport {
                device: rec.get(0).unwrap_or_default().to_string(),
                t: field_f64(rec, 1, line)?,
                vth_cc: field_opt(rec, 2, line)?,
                vth_y: field_opt(rec, 3, line)?,
                ss_min: field_opt(rec, 4, line)?,
                gm_max: field_opt(rec, 5, line)?,
                gm_max_vgs: field_opt(rec, 6, line)?,
                mu_ch: field_opt(rec, 7, line)?,
                i_off: field_opt(rec, 8, line)?,
                v_ov_at_ratio: field_opt(rec, 9, line)?,
                ratio: field_f64(rec, 10, line)?,
                y_r2: field_opt(rec, 11, line)?,
                y_window,
                errors,
            })
        })
        .collect()
}

pub const BENCH_HEADER: [&str; 7] = ["technology", "V_DD_V", "T_K", "f_RO_Hz", "dff_delay_s", "power_W", "status"];

pub fn write_bench_csv(rows: &[ComparisonRow]) -> String {
    let mut w = csv_writer();
    w.write_record(BENCH_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.technology.clone(),
            fmt9(r.vdd),
            fmt9(r.t),
            fmt9_opt(r.f_ro),
            fmt9_opt(r.dff_delay),
            fmt9(r.power),
            r.status.clone(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

pub fn parse_bench_csv(text: &str) -> Result<Vec<ComparisonRow>> {
    read_table(text, &BENCH_HEADER, 0)?
        .iter()
        .map(|(line, rec)| {
            Ok(ComparisonRow {
                technology: rec.get(0).unwrap_or_default().to_string(),
                vdd: field_f64(rec, 1, *line)?,
                t: field_f64(rec, 2, *line)?,
                f_ro: field_opt(rec, 3, *line)?,
                dff_delay: field_opt(rec, 4, *line)?,
                power: field_f64(rec, 5, *line)?,
                status: rec.get(6).unwrap_or_default().to_string(),
            })
        })
        .collect()
}

pub const FREEZEOUT_HEADER: [&str; 3] = ["T_K", "VTH_V", "dVTH_V"];

pub fn write_freezeout_csv(points: &[FreezeoutPoint]) -> String {
    let mut w = csv_writer();
    w.write_record(FREEZEOUT_HEADER).expect("in-memory write");
    for p in points {
        w.write_record([fmt9(p.t), fmt9(p.vth), fmt9(p.delta_vth)]).expect("in-memory write");
    }
    finish(w)
}

pub fn parse_freezeout_csv(text: &str) -> Result<Vec<FreezeoutPoint>> {
    read_table(text, &FREEZEOUT_HEADER, 0)?
        .iter()
        .map(|(line, rec)| {
            Ok(FreezeoutPoint {
                t: field_f64(rec, 0, *line)?,
                vth: field_f64(rec, 1, *line)?,
                delta_vth: field_f64(rec, 2, *line)?,
            })
        })
        .collect()
}

pub const ERROR_TABLE_HEADER: [&str; 5] = ["T_K", "points", "mean_rel_error", "linear", "saturation"];

pub fn write_error_table(rows: &[TemperatureError]) -> String {
    let mut w = csv_writer();
    w.write_record(ERROR_TABLE_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            fmt9(r.t),
            r.points.to_string(),
            fmt9(r.mean_rel_error),
            fmt9_opt(r.linear),
            fmt9_opt(r.saturation),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

/// Fitted set as a parameter file, with the fit summary as comments.
pub fn write_fit_result(name: &str, r: &FitResult) -> String {
    let mut out = format!(
        "# mean_rel_error = {}\n# iterations = {}\n# converged = {}\n",
        fmt9(r.mean_rel_error),
        r.iterations,
        r.converged
    );
    write_model(&mut out, name, &r.params);
    out
}

/// Every `[model NAME]` section of a file, by name.
pub fn parse_models(text: &str) -> Result<BTreeMap<String, ModelParams>> {
    let doc = parse_document(text)?;
    let mut out = BTreeMap::new();
    for sec in doc.sections_of("model") {
        out.insert(sec.name_or("model"), model_from_section(sec)?);
    }
    if out.is_empty() {
        return Err(parse_err(1, "no [model] section"));
    }
    Ok(out)
}
