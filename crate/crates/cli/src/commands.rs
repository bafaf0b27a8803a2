use std::fmt::Write as _;
use std::sync::Arc;

use lamshift::cocycle::group::boxes_needed;
use lamshift::cocycle::moments::mc_inverse_square;
use lamshift::cocycle::{group_kakutani, hopf_diagnostic, kakutani_sum, second_moment, SeedRecord, Window, DEFAULT_EPSILON};
use lamshift::factors::{finite_factor, sinai_factor, BlockCode, FactorWindow, FiniteSiteLaw, FiniteWindow, Flag};
use lamshift::maharam::probe::{essential_value_probe, probe_search, Cylinder};
use lamshift::maharam::product::product_criterion_with;
use lamshift::maharam::{maharam_orbit, ProductSpec, SkewState};
use lamshift::matching::{build_matching, equivariance_check, interior_unmatched, walk_tail, MarkLaw, MarkSequence};
use lamshift::measure::{ContinuousLadder, Family, GroupFamily, GroupLayout, Ladder};
use lamshift::stats::{chi2_pairs, derive_seed, ks_uniform, CounterRng};
use lamshift::{Error, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Command, ExperimentConfig};

pub struct Outcome {
    pub passed: bool,
    /// The run stopped at a configured resource cap.
    pub truncated: bool,
    pub result: Value,
    pub summary: String,
    /// (column header, rows) for the plot-ready CSV.
    pub csv: Option<String>,
}

impl Outcome {
    fn new(passed: bool, result: Value, summary: String) -> Self {
        Outcome { passed, truncated: false, result, summary, csv: None }
    }
}

fn ladder_arc(family: &Family) -> Result<Arc<dyn Ladder>> {
    match family {
        Family::Continuous(l) => Ok(Arc::new(l.clone())),
        Family::Countable(l) => Ok(Arc::new(l.clone())),
        other => Err(Error::NotLattice(format!("{} family has no lambda-lattice cocycle", other.kind()))),
    }
}

fn continuous(family: &Family) -> Result<&ContinuousLadder> {
    match family {
        Family::Continuous(l) => Ok(l),
        other => Err(Error::Parameter(format!("this command needs the continuous family, got {}", other.kind()))),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = &cfg.params;
    let seed = cfg.seed;
    let eps = p.epsilon.unwrap_or(DEFAULT_EPSILON);
    match cfg.command {
        Command::Kakutani => {
            if cfg.family.kind == "group" {
                let elements = p.elements.unwrap_or(100);
                let dim = cfg.family.dim.unwrap_or(1);
                let boxes = cfg.family.boxes.unwrap_or(boxes_needed(elements.saturating_sub(1)));
                let fam = GroupFamily::new(GroupLayout::new(dim, boxes)?, cfg.family.lambda)?;
                let rows: Vec<_> = (0..elements)
                    .map(|i| group_kakutani(&fam, fam.layout().element(i)))
                    .collect::<Result<_>>()?;
                let bad: Vec<u64> = rows.iter().filter(|r| !r.within_bound()).map(|r| r.n_g).collect();
                let summary = format!(
                    "group Kakutani sums for {elements} elements of Z^{dim}: {} within the ln ln bound, violations at n(g) = {:?}",
                    elements as usize - bad.len(),
                    bad
                );
                let mut csv = String::from("n_g,exact,tail_bound,bound\n");
                for r in &rows {
                    let _ = writeln!(csv, "{},{},{},{}", r.n_g, r.exact, r.tail_bound, r.bound);
                }
                let mut o = Outcome::new(bad.is_empty(), json!({ "elements": rows, "violations": bad }), summary);
                o.csv = Some(csv);
                return Ok(o);
            }
            let fam = cfg.family.build()?;
            let n = p.n_max.unwrap_or(100_000);
            let k = kakutani_sum(&fam, n)?;
            let passed = k.total().is_finite();
            let summary = format!("Kakutani sum to N = {n}: partial {:.12e} + tail {:.3e}", k.partial, k.tail_bound);
            Ok(Outcome::new(
                passed,
                json!({ "partial": k.partial, "tail_bound": k.tail_bound, "n_max": n, "passed": passed }),
                summary,
            ))
        }
        Command::SecondMoment => {
            let fam = cfg.family.build()?;
            let lad = ladder_arc(&fam)?;
            let n = p.n.unwrap_or(5);
            let s = second_moment(lad.as_ref(), n)?;
            let trials = p.trials.unwrap_or(0);
            let mut passed = s.within_bound();
            let mut mc = Value::Null;
            if trials > 0 {
                let (mean, se) = mc_inverse_square(Arc::clone(&lad), n, trials, seed, eps)?;
                let exact = s.exact_log().exp();
                let z = (mean - exact) / se;
                passed &= z.abs() <= 4.0;
                mc = json!({ "trials": trials, "mean": mean, "std_error": se, "z": z });
            }
            let summary = format!(
                "second moment at n = {n}: ln value in [{:.12}, {:.12}], bound {:.12}; {}",
                s.log_lower,
                s.log_upper,
                s.vw_bound_log,
                if passed { "within bound" } else { "check failed" }
            );
            Ok(Outcome::new(passed, json!({ "moment": to_value(&s), "monte_carlo": mc }), summary))
        }
        Command::Hopf => {
            let fam = cfg.family.build()?;
            let lad = ladder_arc(&fam)?;
            let n = p.n_max.unwrap_or(1000);
            let check = (p.check_from.unwrap_or((n / 10).max(1)), p.check_to.unwrap_or(n));
            let w = Window::for_shifts(lad, 1, n, eps, SeedRecord::new(seed, 0))?;
            let r = hopf_diagnostic(&w, n, check)?;
            let mut csv = String::from("n,exponent,partial_sum\n");
            for (i, (m, s)) in r.exponents.iter().zip(&r.partial_sums).enumerate() {
                let _ = writeln!(csv, "{},{},{}", i + 1, m, s);
            }
            let summary = format!(
                "Hopf partial sum S_{n} = {:.6}; (T^n)' >= 1/n on [{}, {}]: {}",
                r.partial_sums.last().copied().unwrap_or(0.0),
                r.check_from,
                r.check_to,
                match r.first_violation {
                    None => "held".to_string(),
                    Some(v) => format!("first violation at n = {v}"),
                }
            );
            let mut o = Outcome::new(r.held(), to_value(&r), summary);
            o.csv = Some(csv);
            Ok(o)
        }
        Command::MaharamOrbit => {
            let fam = cfg.family.build()?;
            let lad = ladder_arc(&fam)?;
            let steps = p.steps.unwrap_or(1000);
            let w = Window::for_shifts(lad, 1, steps, eps, SeedRecord::new(seed, 0))?;
            let trace = maharam_orbit(&SkewState::new(w, p.height.unwrap_or(0)), steps)?;
            let mut csv = String::from("step,exponent,height\n");
            for pt in &trace {
                let _ = writeln!(csv, "{},{},{}", pt.step, pt.exponent, pt.height);
            }
            let last = trace.last().expect("orbit has its start point");
            let summary = format!("Maharam orbit of {steps} steps ends at height {} (exponent {})", last.height, last.exponent);
            let mut o = Outcome::new(true, json!({ "steps": steps, "trace": trace }), summary);
            o.csv = Some(csv);
            Ok(o)
        }
        Command::ProductCriterion => {
            let fam = cfg.family.build()?;
            let lad = fam.require_ladder()?;
            let spec = ProductSpec::new(p.exponents.clone().unwrap_or_else(|| vec![1]), p.p.unwrap_or(1.1))?;
            let n = p.n_max.unwrap_or(1_000_000);
            let r = product_criterion_with(&spec, lad, n, p.tolerance.unwrap_or(1e-6))?;
            let summary = format!(
                "product criterion for exponents {:?}, p = {}: total {:.6e}, relative change N/10 -> N {:.2e} ({})",
                spec.exponents,
                spec.p,
                r.total(),
                r.relative_change,
                if r.converged { "converged" } else { "not stable" }
            );
            Ok(Outcome::new(r.converged, json!({ "spec": spec, "report": r }), summary))
        }
        Command::EssentialValue => {
            let fam = cfg.family.build()?;
            let lad = continuous(&fam)?;
            let cylinders = cylinders(cfg)?;
            let trials = p.trials.unwrap_or(10_000);
            let conf = p.confidence.unwrap_or(0.99);
            let cap = p.m_cap.unwrap_or(24);
            let start = p.m.unwrap_or(16);
            let mut searches = Vec::new();
            for (i, c) in cylinders.iter().enumerate() {
                searches.push(probe_search(lad, c, trials, start, cap, derive_seed(seed, i as u64), conf)?);
            }
            let cleared = searches.iter().all(|s| s.chosen.is_some());
            let exact = searches.iter().all(|s| s.steps.iter().all(|r| r.exponents_exact()));
            let mut summary = String::new();
            for (c, s) in cylinders.iter().zip(&searches) {
                let r = s.last();
                let _ = writeln!(
                    summary,
                    "cylinder depth {}: M = {}, estimate {:.4} [{:.4}, {:.4}], exact {:.4}{}",
                    c.depth(),
                    r.m,
                    r.estimate,
                    r.ci_low,
                    r.ci_high,
                    r.exact,
                    if s.chosen.is_some() { "" } else { " (cap reached before the estimate cleared 1/2)" }
                );
            }
            if !cleared {
                let _ = writeln!(summary, "the probe needs M above the cap {cap}; raise params.m_cap");
            }
            let mut o = Outcome::new(cleared && exact, json!({ "searches": searches, "cap": cap }), summary.trim_end().to_string());
            o.truncated = !cleared;
            Ok(o)
        }
        Command::PermV => {
            let fam = cfg.family.build()?;
            let lad = continuous(&fam)?;
            let c = cylinders(cfg)?.into_iter().next().unwrap_or_default();
            let m = p.m.unwrap_or(64);
            let r = essential_value_probe(lad, &c, m, p.trials.unwrap_or(1000), seed, p.confidence.unwrap_or(0.99))?;
            let summary = format!(
                "V with horizon M = {m}: defined on {} of {} trials, RN exponent 1 on {} of them",
                r.successes, r.trials, r.exponent_one
            );
            Ok(Outcome::new(r.exponents_exact(), to_value(&r), summary))
        }
        Command::Matching => {
            let delta = p.delta.unwrap_or(0.4);
            let amp = p.amp.unwrap_or(0.0);
            let d = p.d.unwrap_or(2);
            let len = p.length.unwrap_or(100_000);
            let windows = p.windows.unwrap_or(20);
            let k = p.buffer.unwrap_or(50);
            let law = if amp > 0.0 { MarkLaw::Oscillating { delta, amp } } else { MarkLaw::Constant(delta) };
            let bound = walk_tail(delta, d, k as u64)?;
            let per: Vec<(usize, usize, u64, u64, bool)> = (0..windows)
                .into_par_iter()
                .map(|i| {
                    let mut rng = CounterRng::for_stream(seed, i);
                    let seq = MarkSequence::sample(law.clone(), 0, len, &mut rng)?;
                    let g = build_matching(&seq, d)?;
                    let (dv, ov) = g.violations(&seq);
                    let (open, bs) = interior_unmatched(&seq, &g, k);
                    let eq = [1usize, 17].iter().all(|&off| equivariance_check(&seq, d, off, k).unwrap_or(false));
                    Ok((dv, ov, open, bs, eq))
                })
                .collect::<Result<_>>()?;
            let degree: usize = per.iter().map(|r| r.0).sum();
            let orient: usize = per.iter().map(|r| r.1).sum();
            let open: u64 = per.iter().map(|r| r.2).sum();
            let bs: u64 = per.iter().map(|r| r.3).sum();
            let equivariant = per.iter().all(|r| r.4);
            let frac = open as f64 / bs.max(1) as f64;
            let sigma = (bound * (1.0 - bound) / bs.max(1) as f64).sqrt();
            let passed = degree == 0 && orient == 0 && frac <= bound + 4.0 * sigma && equivariant;
            let mut rng = CounterRng::for_stream(seed, 0);
            let first = MarkSequence::sample(law.clone(), 0, len, &mut rng)?;
            let g = build_matching(&first, d)?;
            let mut csv = String::from("m,n\n");
            for (m, n) in &g.edges {
                let _ = writeln!(csv, "{m},{n}");
            }
            let summary = format!(
                "matching on {windows} windows of length {len}: {degree} degree and {orient} orientation violations, \
                 unmatched fraction {frac:.3e} vs walk bound {bound:.3e} at distance {k}, equivariant: {equivariant}"
            );
            let mut o = Outcome::new(
                passed,
                json!({
                    "degree_violations": degree, "orientation_violations": orient,
                    "interior_unmatched": open, "interior_b": bs, "fraction": frac,
                    "walk_bound": bound, "sigma": sigma, "distance": k, "equivariant": equivariant,
                }),
                summary,
            );
            o.csv = Some(csv);
            Ok(o)
        }
        Command::SinaiFactor => {
            let fam = cfg.family.build()?;
            let lad = continuous(&fam)?;
            let sites = p.length.unwrap_or(1_000_000);
            let bits = p.bits.unwrap_or(53);
            let alpha = p.alpha.unwrap_or(0.01);
            let mut rng = CounterRng::for_stream(seed, 0);
            let w = FactorWindow::sample(lad, 1, sites + 256, &mut rng);
            let mut out = sinai_factor(&w, lad.conditional(), bits)?;
            out.truncate(sites);
            let values: Vec<f64> = out.iter().filter_map(|o| o.value).collect();
            let flagged = out.len() - values.len();
            let pairs: Vec<(f64, f64)> = values.chunks_exact(2).map(|c| (c[0], c[1])).collect();
            let ks = ks_uniform(&values, alpha)?;
            let chi = chi2_pairs(&pairs, p.bins.unwrap_or(10), alpha)?;
            let mut csv = String::from("index,value,flag\n");
            for o in &out {
                let _ = writeln!(csv, "{},{},{}", o.index, o.value.map_or(String::new(), |v| v.to_string()), flag_name(o.flag));
            }
            let summary = format!(
                "Sinai factor on {sites} sites ({flagged} flagged): KS p = {:.4}, pair chi-square p = {:.4}",
                ks.p_value, chi.p_value
            );
            let mut o = Outcome::new(ks.passed && chi.passed, json!({ "sites": sites, "flagged": flagged, "ks": ks, "chi2": chi }), summary);
            o.csv = Some(csv);
            Ok(o)
        }
        Command::FiniteFactor => {
            let m = p.bits.unwrap_or(3);
            let code = BlockCode::new(m)?;
            let d = p.d.unwrap_or(code.d);
            let law = FiniteSiteLaw::new(m, p.extra.unwrap_or(2), p.delta.unwrap_or(0.4))?;
            let sites = p.length.unwrap_or(1_000_000);
            let mut rng = CounterRng::for_stream(seed, 0);
            let w = FiniteWindow::sample(&law, 0, sites, &mut rng);
            let f = finite_factor(&w, &code, d)?;
            let stats = bit_stats(&f.bits);
            let passed = stats.freq_z.abs() <= 4.0 && stats.lag1_z.abs() <= 4.0;
            let mut csv = String::from("index,bit,flag\n");
            for (i, b) in f.bits.iter().enumerate() {
                match b {
                    Some(b) => {
                        let _ = writeln!(csv, "{i},{b},defined");
                    }
                    None => {
                        let _ = writeln!(csv, "{i},,pending");
                    }
                }
            }
            let summary = format!(
                "finite factor on {sites} sites: {} bits, frequency z = {:.3}, lag-1 z = {:.3}, {} pending",
                stats.defined, stats.freq_z, stats.lag1_z, stats.pending
            );
            let mut o = Outcome::new(passed, json!({ "sites": sites, "code": code, "stats": stats, "discarded": f.discarded }), summary);
            o.csv = Some(csv);
            Ok(o)
        }
    }
}

fn flag_name(f: Flag) -> &'static str {
    match f {
        Flag::Defined => "defined",
        Flag::NoSpecial => "no-special",
        Flag::FarSpecial => "far-special",
    }
}

fn cylinders(cfg: &ExperimentConfig) -> Result<Vec<Cylinder>> {
    let Some(list) = &cfg.params.cylinders else {
        return Ok(vec![
            Cylinder::full(),
            Cylinder::new(vec![(0.0, 0.5), (0.25, 1.0)])?,
            Cylinder::new(vec![(0.5, 1.0), (0.0, 0.75), (0.125, 0.625)])?,
        ]);
    };
    list.iter()
        .map(|ivs| {
            let ivs = ivs
                .iter()
                .map(|[l, r]| Ok((l.value()?, r.value()?)))
                .collect::<anyhow::Result<Vec<_>>>()
                .map_err(|e| Error::Parameter(e.to_string()))?;
            Cylinder::new(ivs)
        })
        .collect()
}

#[derive(serde::Serialize)]
pub struct BitStats {
    pub defined: u64,
    pub pending: u64,
    pub ones: u64,
    pub freq_z: f64,
    pub lag1_corr: f64,
    pub lag1_z: f64,
}

/// Frequency and lag-1 correlation of the defined bits.
pub fn bit_stats(bits: &[Option<u8>]) -> BitStats {
    let defined = bits.iter().flatten().count() as u64;
    let ones = bits.iter().flatten().filter(|&&b| b == 1).count() as u64;
    let n = defined as f64;
    let freq_z = (ones as f64 - n / 2.0) / (n / 4.0).sqrt();
    let mean = ones as f64 / n;
    let var = mean * (1.0 - mean);
    let mut cov = 0.0;
    let mut pairs = 0u64;
    for w in bits.windows(2) {
        if let (Some(a), Some(b)) = (w[0], w[1]) {
            cov += (a as f64 - mean) * (b as f64 - mean);
            pairs += 1;
        }
    }
    let lag1_corr = cov / pairs.max(1) as f64 / var;
    BitStats { defined, pending: bits.len() as u64 - defined, ones, freq_z, lag1_corr, lag1_z: lag1_corr * (pairs as f64).sqrt() }
}
