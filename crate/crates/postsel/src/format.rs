//! JSON and CSV formats. Floats are written with 17 significant digits.

use std::io;

use postsel_core::channels::{Channel, HpMap, LinearMap};
use postsel_core::postselect::PostSelectionReport;
use postsel_core::qkd::{GeneralBound, KeyPenalty, SecurityParams, ToyMode, ToyReport};
use postsel_core::{DiamondResult, Ket, Operator, TauFamily, C64};
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::io::CliError;

/// Formats a float with 17 significant digits, `.` as decimal separator.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON with every float at 17 significant digits.
struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes to pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory serialization");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

/// Parses JSON, reporting the path of the first offending field.
pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::Input(format!("{} at `{}`", e.inner(), e.path())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorJson {
    pub rows: usize,
    pub cols: usize,
    pub dims: Vec<usize>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&Operator> for OperatorJson {
    fn from(op: &Operator) -> Self {
        let rows = (0..op.rows()).map(|i| op.row(i).to_vec()).collect::<Vec<_>>();
        Self {
            rows: op.rows(),
            cols: op.cols(),
            dims: op.dims().to_vec(),
            re: rows.iter().map(|r| r.iter().map(|z| z.re).collect()).collect(),
            im: rows.iter().map(|r| r.iter().map(|z| z.im).collect()).collect(),
        }
    }
}

impl TryFrom<&OperatorJson> for Operator {
    type Error = CliError;

    fn try_from(j: &OperatorJson) -> Result<Self, CliError> {
        let shape_ok = |m: &Vec<Vec<f64>>| m.len() == j.rows && m.iter().all(|r| r.len() == j.cols);
        if !shape_ok(&j.re) || !shape_ok(&j.im) {
            return Err(CliError::Input(format!(
                "operator arrays do not match the declared {}x{} shape",
                j.rows, j.cols
            )));
        }
        let data = j
            .re
            .iter()
            .zip(&j.im)
            .flat_map(|(r, i)| r.iter().zip(i).map(|(&a, &b)| C64::new(a, b)))
            .collect();
        let op = Operator::from_data(j.rows, j.cols, data)?;
        if j.rows == j.cols {
            Ok(op.with_dims(j.dims.clone())?)
        } else {
            Ok(op)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapJson {
    pub din: usize,
    pub dout: usize,
    pub choi: OperatorJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
}

impl MapJson {
    pub fn channel(c: &Channel) -> Self {
        Self {
            din: c.din(),
            dout: c.dout(),
            choi: c.choi().into(),
            kind: None,
        }
    }

    pub fn hp(m: &HpMap) -> Self {
        Self {
            din: m.din(),
            dout: m.dout(),
            choi: m.choi().into(),
            kind: Some("hp".into()),
        }
    }

    /// Reads either format; channels are validated as CPTP.
    pub fn to_hp(&self) -> Result<HpMap, CliError> {
        let choi = Operator::try_from(&self.choi)?;
        match self.kind.as_deref() {
            Some("hp") => Ok(HpMap::from_choi(self.din, self.dout, choi)?),
            None | Some("channel") => Ok(Channel::from_choi(self.din, self.dout, choi)?.to_hp()),
            Some(other) => Err(CliError::Input(format!("unknown map kind `{other}`"))),
        }
    }

    pub fn to_channel(&self) -> Result<Channel, CliError> {
        match self.kind.as_deref() {
            None | Some("channel") => Ok(Channel::from_choi(self.din, self.dout, Operator::try_from(&self.choi)?)?),
            Some(other) => Err(CliError::Input(format!("expected a channel, found kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KetJson {
    pub dims: Vec<usize>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&Ket> for KetJson {
    fn from(k: &Ket) -> Self {
        Self {
            dims: k.dims().to_vec(),
            re: k.amps().iter().map(|z| z.re).collect(),
            im: k.amps().iter().map(|z| z.im).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauJson {
    pub n: usize,
    pub d: usize,
    pub g: u128,
    pub tau_reduced: OperatorJson,
    pub eigs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_full: Option<OperatorJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_purification: Option<KetJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloJson {
    pub samples: usize,
    pub trace_distance: f64,
}

impl TauJson {
    pub fn new(t: &TauFamily, full: bool) -> Result<Self, CliError> {
        let mut eigs = t.tau_reduced.hermitian_eigenvalues();
        eigs.reverse();
        Ok(Self {
            n: t.n,
            d: t.d,
            g: t.g,
            tau_reduced: (&t.tau_reduced).into(),
            eigs,
            tau_full: full.then(|| (&t.tau_full).into()),
            tau_purification: full.then(|| (&t.tau_purification).into()),
            monte_carlo: None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiamondJson {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
    pub restarts: usize,
    pub iterations: usize,
}

impl From<&DiamondResult> for DiamondJson {
    fn from(r: &DiamondResult) -> Self {
        Self {
            value: r.value,
            lower: r.lower,
            upper: r.upper,
            gap: r.gap,
            restarts: r.restarts,
            iterations: r.iterations,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportJson {
    pub n: usize,
    pub d: usize,
    pub g: u128,
    pub lhs: DiamondJson,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    pub tau_trace_norm: f64,
}

impl From<&PostSelectionReport> for ReportJson {
    fn from(r: &PostSelectionReport) -> Self {
        Self {
            n: r.n,
            d: r.d,
            g: r.g,
            lhs: (&r.lhs).into(),
            rhs: r.rhs,
            slack: r.slack,
            holds: r.holds,
            tau_trace_norm: r.tau_trace_norm,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReduceJson {
    pub n: u64,
    pub d: u64,
    pub eps: f64,
    pub eps_bar: f64,
    pub log2_eps: f64,
    pub log2_eps_bar: f64,
    pub key_penalty_bits: f64,
    pub vacuous: bool,
}

impl From<&SecurityParams> for ReduceJson {
    fn from(p: &SecurityParams) -> Self {
        Self {
            n: p.n,
            d: p.d,
            eps: p.eps,
            eps_bar: p.eps_bar,
            log2_eps: p.log2_eps,
            log2_eps_bar: p.log2_eps_bar,
            key_penalty_bits: p.key_penalty_bits,
            vacuous: p.is_vacuous(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyJson {
    pub n: u64,
    pub d: u64,
    pub penalty_bits_exact: f64,
    pub penalty_bits_bound: f64,
}

impl PenaltyJson {
    pub fn new(n: u64, d: u64, p: &KeyPenalty) -> Self {
        Self {
            n,
            d,
            penalty_bits_exact: p.exact_bits,
            penalty_bits_bound: p.bound_bits,
        }
    }
}

/// One row of `qkd sweep`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub n: u64,
    pub bound: GeneralBound,
    pub penalty: KeyPenalty,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyJson {
    pub n: usize,
    pub d: usize,
    pub mode: String,
    pub collective: f64,
    pub collective_certified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixture: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixture_ok: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<u128>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_trace_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub postselection_rhs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_implied: Option<f64>,
    pub insecure: bool,
}

impl From<&ToyReport> for ToyJson {
    fn from(r: &ToyReport) -> Self {
        Self {
            n: r.n,
            d: r.d,
            mode: match r.mode {
                ToyMode::Collective => "collective",
                ToyMode::PostSelection => "postselection",
            }
            .into(),
            collective: r.collective,
            collective_certified: r.collective_certified,
            mixture: r.mixture,
            mixture_ok: r.mixture_ok,
            g: r.g,
            tau_trace_norm: r.tau_trace_norm,
            postselection_rhs: r.postselection_rhs,
            eps_implied: r.eps_implied,
            insecure: r.insecure,
        }
    }
}

/// Writes CSV rows with a header; floats use [`fmt_f64`].
pub fn to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of ASCII fields"))
}
