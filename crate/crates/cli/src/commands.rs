use std::fmt::Write as _;

use log::{debug, info};
use mtrd_core::asymptotics::{acceptance_threshold, rate_point, verify_conjecture, GapPoint};
use mtrd_core::berger_tung::{achievable_rate, conditional_structure, rho_tilde, tune_alphas};
use mtrd_core::centralized::r_centralized;
use mtrd_core::closed::{r_two_pairs, trusted_radius};
use mtrd_core::opt::SolverConfig;
use mtrd_core::{classify, gap_coefficient, Cover, Error, Topology};
use serde::Serialize;

use crate::model_file::Model;
use crate::render::{bits, num, opt_num, pairs_one_based, Render};

/// Share of sweep rows that must succeed for a zero exit.
pub const SWEEP_SUCCESS_SHARE: f64 = 0.8;

fn rows_to_text(m: &[Vec<f64>]) -> String {
    m.iter()
        .map(|r| r.iter().map(|v| format!("{v:>14.6e}")).collect::<String>())
        .collect::<Vec<_>>()
        .join("\n")
}

/// `r_C` for a cover that reduces to a single encoder, any `L`.
fn is_centralized(cover: &Cover) -> bool {
    cover.reduce().sets().len() == 1
}

fn topology_of(cover: &Cover) -> Option<Topology> {
    classify(cover).ok().map(|c| c.tag)
}

#[derive(Serialize)]
pub struct CoverInfo {
    pub name: String,
    pub sets: Cover,
    pub reduced: Cover,
    pub topology: Option<Topology>,
    pub uncovered_pairs: Vec<(usize, usize)>,
    pub predicted_coefficient: f64,
}

#[derive(Serialize)]
pub struct ValidateReport {
    pub model: String,
    #[serde(rename = "L")]
    pub l: usize,
    pub eigenvalues: Vec<f64>,
    pub trusted_radius: f64,
    pub precision: Vec<Vec<f64>>,
    pub covers: Vec<CoverInfo>,
}

pub fn validate(model: &Model) -> Result<ValidateReport, Error> {
    let mut covers = Vec::new();
    for (name, cover) in &model.covers {
        covers.push(CoverInfo {
            name: name.clone(),
            sets: cover.clone(),
            reduced: cover.reduce(),
            topology: topology_of(cover),
            uncovered_pairs: cover
                .uncovered_pairs()
                .into_iter()
                .map(|(i, j)| (i + 1, j + 1))
                .collect(),
            predicted_coefficient: gap_coefficient(&model.source, cover)?,
        });
    }
    Ok(ValidateReport {
        model: model.name.clone(),
        l: model.l(),
        eigenvalues: model.source.spectrum().to_vec(),
        trusted_radius: trusted_radius(&model.source),
        precision: model.source.theta().to_rows(),
        covers,
    })
}

impl Render for ValidateReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec!["cover", "sets", "reduced", "topology", "uncovered_pairs", "predicted_coefficient"]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.covers
            .iter()
            .map(|c| {
                vec![
                    c.name.clone(),
                    c.sets.to_string(),
                    c.reduced.to_string(),
                    c.topology.map(|t| t.name().to_string()).unwrap_or_default(),
                    c.uncovered_pairs
                        .iter()
                        .map(|(i, j)| format!("({i},{j})"))
                        .collect::<Vec<_>>()
                        .join(" "),
                    num(c.predicted_coefficient),
                ]
            })
            .collect()
    }

    fn text(&self) -> String {
        let mut s = String::new();
        let eig: Vec<String> = self.eigenvalues.iter().map(|v| num(*v)).collect();
        let _ = writeln!(s, "model {}  L = {}", self.model, self.l);
        let _ = writeln!(s, "eigenvalues: {}", eig.join(" "));
        let _ = writeln!(s, "trusted radius: {}", num(self.trusted_radius));
        let _ = writeln!(s, "precision matrix:\n{}", rows_to_text(&self.precision));
        for c in &self.covers {
            let topo = c.topology.map(|t| t.name()).unwrap_or("unclassified");
            let pairs: Vec<(usize, usize)> =
                c.uncovered_pairs.iter().map(|(i, j)| (i - 1, j - 1)).collect();
            let _ = writeln!(
                s,
                "cover {}: {} -> {}  [{}]  uncovered: {}  coefficient: {}",
                c.name,
                c.sets,
                c.reduced,
                topo,
                if pairs.is_empty() { "none".to_string() } else { pairs_one_based(&pairs) },
                num(c.predicted_coefficient)
            );
        }
        s
    }
}

#[derive(Serialize)]
pub struct RateRecord {
    pub model: String,
    pub cover: String,
    pub topology: Option<Topology>,
    pub d: f64,
    pub r_c_nats: f64,
    pub r_c_bits: f64,
    pub r_s_nats: f64,
    pub r_s_bits: f64,
    pub gap_nats: f64,
    pub gap_bits: f64,
}

fn point(model: &Model, cover: &Cover, d: f64, cfg: &SolverConfig) -> Result<GapPoint, Error> {
    if is_centralized(cover) {
        let r_c = r_centralized(&model.source, d)?.rate;
        return Ok(GapPoint { d, r_c, r_s: r_c, gap: 0.0 });
    }
    rate_point(&model.source, cover, d, cfg)
}

pub fn rate(model: &Model, cover_name: &str, cover: &Cover, d: f64, cfg: &SolverConfig) -> Result<RateRecord, Error> {
    let p = point(model, cover, d, cfg)?;
    Ok(RateRecord {
        model: model.name.clone(),
        cover: cover_name.to_string(),
        topology: topology_of(cover),
        d,
        r_c_nats: p.r_c,
        r_c_bits: bits(p.r_c),
        r_s_nats: p.r_s,
        r_s_bits: bits(p.r_s),
        gap_nats: p.gap,
        gap_bits: bits(p.gap),
    })
}

impl Render for RateRecord {
    fn csv_header(&self) -> Vec<&'static str> {
        vec![
            "model", "cover", "topology", "d", "r_c_nats", "r_c_bits", "r_s_nats", "r_s_bits",
            "gap_nats", "gap_bits",
        ]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        vec![vec![
            self.model.clone(),
            self.cover.clone(),
            self.topology.map(|t| t.name().to_string()).unwrap_or_default(),
            num(self.d),
            num(self.r_c_nats),
            num(self.r_c_bits),
            num(self.r_s_nats),
            num(self.r_s_bits),
            num(self.gap_nats),
            num(self.gap_bits),
        ]]
    }

    fn text(&self) -> String {
        format!(
            "{} / {} at d = {}\n  r_C  {:.9} nats  {:.9} bits\n  r_S  {:.9} nats  {:.9} bits\n  gap  {} nats  {} bits\n",
            self.model,
            self.cover,
            num(self.d),
            self.r_c_nats,
            self.r_c_bits,
            self.r_s_nats,
            self.r_s_bits,
            num(self.gap_nats),
            num(self.gap_bits)
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Unverifiable,
}

#[derive(Serialize)]
pub struct VerifyRecord {
    pub model: String,
    pub cover: String,
    pub topology: Option<Topology>,
    pub d_min: f64,
    pub d_grid: Vec<f64>,
    pub gaps: Vec<f64>,
    pub coeff_samples: Vec<f64>,
    pub coeff_extrapolated: Option<f64>,
    pub coeff_predicted: f64,
    pub rel_error: Option<f64>,
    pub threshold: Option<f64>,
    pub verdict: Verdict,
}

pub fn verify(model: &Model, cover_name: &str, cover: &Cover, d_min: f64, cfg: &SolverConfig) -> Result<VerifyRecord, Error> {
    if !(d_min > 0.0) || !d_min.is_finite() {
        return Err(Error::InvalidDistortion(d_min));
    }
    let topology = match classify(cover) {
        Ok(c) => c.tag,
        Err(_) => {
            info!("no solver for this cover; reporting the prediction only");
            return Ok(VerifyRecord {
                model: model.name.clone(),
                cover: cover_name.to_string(),
                topology: None,
                d_min,
                d_grid: Vec::new(),
                gaps: Vec::new(),
                coeff_samples: Vec::new(),
                coeff_extrapolated: None,
                coeff_predicted: gap_coefficient(&model.source, cover)?,
                rel_error: None,
                threshold: None,
                verdict: Verdict::Unverifiable,
            });
        }
    };
    let report = verify_conjecture(&model.source, &model.name, cover, d_min, cfg)?;
    let threshold = acceptance_threshold(topology, model.l());
    let verdict = if report.passes(threshold) { Verdict::Pass } else { Verdict::Fail };
    debug!("coefficient samples {:?}", report.coeff_samples);
    Ok(VerifyRecord {
        model: model.name.clone(),
        cover: cover_name.to_string(),
        topology: Some(topology),
        d_min,
        d_grid: report.d_grid,
        gaps: report.gaps,
        coeff_samples: report.coeff_samples,
        coeff_extrapolated: Some(report.coeff_extrapolated),
        coeff_predicted: report.coeff_predicted,
        rel_error: Some(report.rel_error),
        threshold: Some(threshold),
        verdict,
    })
}

impl Render for VerifyRecord {
    fn csv_header(&self) -> Vec<&'static str> {
        vec![
            "model", "cover", "topology", "d_min", "coeff_extrapolated", "coeff_predicted",
            "rel_error", "threshold", "verdict",
        ]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        vec![vec![
            self.model.clone(),
            self.cover.clone(),
            self.topology.map(|t| t.name().to_string()).unwrap_or_default(),
            num(self.d_min),
            opt_num(self.coeff_extrapolated),
            num(self.coeff_predicted),
            opt_num(self.rel_error),
            opt_num(self.threshold),
            verdict_name(self.verdict).to_string(),
        ]]
    }

    fn text(&self) -> String {
        let mut s = String::new();
        let topo = self.topology.map(|t| t.name()).unwrap_or("unclassified");
        let _ = writeln!(s, "{} / {} [{}]", self.model, self.cover, topo);
        for ((d, g), c) in self.d_grid.iter().zip(&self.gaps).zip(&self.coeff_samples) {
            let _ = writeln!(s, "  d = {:<12} gap = {:<24} gap/d^2 = {}", num(*d), num(*g), num(*c));
        }
        let _ = writeln!(s, "  predicted    {}", num(self.coeff_predicted));
        if let (Some(c), Some(e), Some(t)) = (self.coeff_extrapolated, self.rel_error, self.threshold) {
            let _ = writeln!(s, "  extrapolated {}", num(c));
            let _ = writeln!(s, "  rel_error    {}  (threshold {})", num(e), num(t));
        }
        let _ = writeln!(s, "  verdict      {}", verdict_name(self.verdict));
        s
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Unverifiable => "unverifiable",
    }
}

#[derive(Serialize)]
pub struct SweepRow {
    pub d: f64,
    pub r_c: Option<f64>,
    pub r_s: Option<f64>,
    pub gap: Option<f64>,
    pub gap_over_d2: Option<f64>,
    pub error: Option<String>,
}

#[derive(Serialize)]
pub struct SweepReport {
    pub model: String,
    pub cover: String,
    pub topology: Option<Topology>,
    pub rows: Vec<SweepRow>,
    /// Error of the first failing row, kept for the exit code.
    #[serde(skip)]
    pub first_error: Option<Error>,
}

impl SweepReport {
    pub fn succeeded(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_none()).count()
    }

    pub fn acceptable(&self) -> bool {
        self.succeeded() as f64 >= SWEEP_SUCCESS_SHARE * self.rows.len() as f64
    }
}

/// Geometric grid from `d_max` down to `d_min`, both included.
pub fn geometric_grid(d_max: f64, d_min: f64, points: usize) -> Result<Vec<f64>, Error> {
    if !(d_min > 0.0) || !d_max.is_finite() || d_max < d_min {
        return Err(Error::InvalidGrid(format!(
            "need 0 < d_min <= d_max, got d_min = {d_min}, d_max = {d_max}"
        )));
    }
    if points == 0 || (points == 1 && d_max != d_min) {
        return Err(Error::GridTooCoarse { needed: 2, got: points });
    }
    if points == 1 {
        return Ok(vec![d_max]);
    }
    let ratio = (d_min / d_max).ln() / (points - 1) as f64;
    let mut grid: Vec<f64> = (0..points).map(|k| d_max * (ratio * k as f64).exp()).collect();
    grid[points - 1] = d_min;
    Ok(grid)
}

pub fn sweep(
    model: &Model,
    cover_name: &str,
    cover: &Cover,
    grid: &[f64],
    cfg: &SolverConfig,
) -> SweepReport {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(grid.len()).max(1);
    let chunk = grid.len().div_ceil(workers);
    let results: Vec<Result<GapPoint, Error>> = std::thread::scope(|scope| {
        let handles: Vec<_> = grid
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|&d| point(model, cover, d, cfg)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let mut first_error = None;
    let rows = grid
        .iter()
        .zip(results)
        .map(|(&d, r)| match r {
            Ok(p) => SweepRow {
                d,
                r_c: Some(p.r_c),
                r_s: Some(p.r_s),
                gap: Some(p.gap),
                gap_over_d2: Some(p.gap / (d * d)),
                error: None,
            },
            Err(e) => {
                let msg = e.to_string();
                first_error.get_or_insert(e);
                SweepRow { d, r_c: None, r_s: None, gap: None, gap_over_d2: None, error: Some(msg) }
            }
        })
        .collect();
    SweepReport {
        model: model.name.clone(),
        cover: cover_name.to_string(),
        topology: topology_of(cover),
        rows,
        first_error,
    }
}

impl Render for SweepReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec!["d", "r_c", "r_s", "gap", "gap_over_d2", "error"]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    num(r.d),
                    opt_num(r.r_c),
                    opt_num(r.r_s),
                    opt_num(r.gap),
                    opt_num(r.gap_over_d2),
                    r.error.clone().unwrap_or_default(),
                ]
            })
            .collect()
    }

    fn text(&self) -> String {
        let mut s = String::new();
        let topo = self.topology.map(|t| t.name()).unwrap_or("unclassified");
        let _ = writeln!(s, "{} / {} [{}]", self.model, self.cover, topo);
        let _ = writeln!(s, "{:>14} {:>18} {:>18} {:>14} {:>14}", "d", "r_c", "r_s", "gap", "gap/d^2");
        for r in &self.rows {
            match &r.error {
                None => {
                    let _ = writeln!(
                        s,
                        "{:>14.6e} {:>18.12} {:>18.12} {:>14.6e} {:>14.6e}",
                        r.d,
                        r.r_c.unwrap_or(f64::NAN),
                        r.r_s.unwrap_or(f64::NAN),
                        r.gap.unwrap_or(f64::NAN),
                        r.gap_over_d2.unwrap_or(f64::NAN)
                    );
                }
                Some(e) => {
                    let _ = writeln!(s, "{:>14.6e}  error: {e}", r.d);
                }
            }
        }
        let _ = writeln!(s, "{} of {} points succeeded", self.succeeded(), self.rows.len());
        s
    }
}

#[derive(Serialize)]
pub struct BtRecord {
    pub model: String,
    pub topology: Topology,
    pub lambda: f64,
    pub d: f64,
    pub target: [f64; 3],
    pub alphas: [f64; 3],
    pub etas: [Option<f64>; 3],
    pub distortions: Vec<f64>,
    pub conditional_covariance: Vec<Vec<f64>>,
    pub structure_residual: f64,
    pub markov_residual: f64,
    pub rho_tilde: Option<f64>,
    pub rho_tilde_formula: Option<f64>,
    pub rate_nats: f64,
    pub rate_bits: f64,
    pub reference_nats: f64,
    pub rate_minus_reference: f64,
}

/// Tunes the test channels to the optimal per-source distortions of the
/// topology at average distortion `d` and checks the resulting structure.
/// The reference is `r_C(d)` for the triangle and the two-pairs closed form
/// otherwise.
pub fn bt_check(model: &Model, topology: Topology, lambda: f64, d: f64) -> Result<BtRecord, Error> {
    let src = &model.source;
    let (target, reference) = match topology {
        Topology::Triangle => {
            mtrd_core::closed::r_triangle(src, d)?;
            ([d; 3], r_centralized(src, d)?.rate)
        }
        Topology::TwoPairs => {
            let closed = r_two_pairs(src, d)?;
            let o = &closed.optimizer;
            ([o[0], o[1], o[2]], closed.rate)
        }
        other => return Err(Error::UnsupportedTopology(other.name().to_string())),
    };
    let spec = tune_alphas(src, topology, lambda, &target)?;
    let result = conditional_structure(src, &spec)?;
    let rate = achievable_rate(src, &result)?;
    let rho_tilde_formula = (topology == Topology::TwoPairs)
        .then(|| rho_tilde(src.theta().get(1, 2), result.distortions[1], result.distortions[2]));
    Ok(BtRecord {
        model: model.name.clone(),
        topology,
        lambda,
        d,
        target,
        alphas: spec.alphas,
        etas: spec.etas,
        distortions: result.distortions.clone(),
        conditional_covariance: result.cond_cov.to_rows(),
        structure_residual: result.structure_residual,
        markov_residual: result.markov_residual,
        rho_tilde: result.rho_tilde,
        rho_tilde_formula,
        rate_nats: rate,
        rate_bits: bits(rate),
        reference_nats: reference,
        rate_minus_reference: rate - reference,
    })
}

impl Render for BtRecord {
    fn csv_header(&self) -> Vec<&'static str> {
        vec![
            "model", "topology", "lambda", "d", "alpha1", "alpha2", "alpha3", "d1", "d2", "d3",
            "structure_residual", "markov_residual", "rho_tilde", "rho_tilde_formula", "rate_nats",
            "rate_bits", "reference_nats", "rate_minus_reference",
        ]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut row = vec![
            self.model.clone(),
            self.topology.name().to_string(),
            num(self.lambda),
            num(self.d),
        ];
        row.extend(self.alphas.iter().map(|a| num(*a)));
        row.extend(self.distortions.iter().map(|v| num(*v)));
        row.extend([
            num(self.structure_residual),
            num(self.markov_residual),
            opt_num(self.rho_tilde),
            opt_num(self.rho_tilde_formula),
            num(self.rate_nats),
            num(self.rate_bits),
            num(self.reference_nats),
            num(self.rate_minus_reference),
        ]);
        vec![row]
    }

    fn text(&self) -> String {
        let mut s = String::new();
        let join = |v: &[f64]| v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "{} [{}] lambda = {} d = {}", self.model, self.topology, self.lambda, num(self.d));
        let _ = writeln!(s, "  alphas            {}", join(&self.alphas));
        let _ = writeln!(s, "  target            {}", join(&self.target));
        let _ = writeln!(s, "  distortions       {}", join(&self.distortions));
        let _ = writeln!(s, "  conditional covariance:\n{}", rows_to_text(&self.conditional_covariance));
        let _ = writeln!(s, "  structure residual {}", num(self.structure_residual));
        let _ = writeln!(s, "  markov residual    {}", num(self.markov_residual));
        if let (Some(r), Some(f)) = (self.rho_tilde, self.rho_tilde_formula) {
            let _ = writeln!(s, "  rho_tilde          {}  (formula {})", num(r), num(f));
        }
        let _ = writeln!(s, "  rate               {:.12} nats  {:.12} bits", self.rate_nats, self.rate_bits);
        let _ = writeln!(s, "  reference          {:.12} nats", self.reference_nats);
        let _ = writeln!(s, "  rate - reference   {}", num(self.rate_minus_reference));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_geometric_and_exact_at_ends() {
        let g = geometric_grid(1e-1, 1e-3, 5).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], 1e-1);
        assert_eq!(g[4], 1e-3);
        for w in g.windows(2) {
            assert!((w[1] / w[0] - 10f64.powf(-0.5)).abs() < 1e-12);
        }
        assert_eq!(geometric_grid(0.5, 0.5, 1).unwrap(), vec![0.5]);
    }

    #[test]
    fn bad_grids_are_rejected() {
        assert!(matches!(geometric_grid(1e-3, 1e-1, 5), Err(Error::InvalidGrid(_))));
        assert!(matches!(geometric_grid(1e-1, 0.0, 5), Err(Error::InvalidGrid(_))));
        assert!(matches!(geometric_grid(1e-1, 1e-3, 1), Err(Error::GridTooCoarse { .. })));
    }
}
