use anyhow::{bail, Context, Result};

use grushin::gentrig::{eta_with, TrigParams};
use grushin::geoflow::{
    chart_upper, hamiltonian, is_riemannian, r_values, GeodesicPath, MultiIndex, SphericalPhi,
};
use grushin::jacobian::first_conjugate_time;
use grushin::synthesis::{
    base_case, classify_point, cut_locus_3d, cut_report, cut_y_offset, phi2_star, r_boundary, trace_e, BaseCase,
    EVariant, Excluded, LocusLabel, PointClass,
};
use grushin::verify::{run_suite, SUITES};

use crate::config::RunConfig;
use crate::output::{Cell, Table};

/// Rescalings larger than this are reported on stderr.
const NORMALIZE_WARN: f64 = 1e-9;

fn index(c: &RunConfig) -> Result<MultiIndex> {
    Ok(MultiIndex::new(c.alpha()?.to_vec())?)
}

fn numbered(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|k| format!("{prefix}{k}")).collect()
}

/// The geodesic described by `--phi` or `--covector`.
pub fn geodesic_path(c: &RunConfig, index: &MultiIndex) -> Result<GeodesicPath> {
    let base = c.base()?;
    match (&c.phi, &c.covector) {
        (Some(phi), _) => {
            if !is_riemannian(index, base) {
                bail!("spherical coordinates need a Riemannian base point; use --covector at {base:?}");
            }
            Ok(GeodesicPath::from_spherical(index, base, &SphericalPhi(phi.clone()))?)
        }
        (None, Some(p)) => {
            let h = hamiltonian(index, base, p)?;
            if !(h > 0.0 && h.is_finite()) {
                bail!("covector {p:?} has H = {h}; it cannot be normalized");
            }
            let scale = (2.0 * h).sqrt().recip();
            if (scale - 1.0).abs() > NORMALIZE_WARN {
                eprintln!("warning: covector rescaled by {scale} to H = 1/2");
            }
            let p: Vec<f64> = p.iter().map(|v| v * scale).collect();
            Ok(GeodesicPath::from_covector(index, base, &p)?)
        }
        (None, None) => bail!("either --phi or --covector is required"),
    }
}

pub fn trig(c: &RunConfig) -> Result<Table> {
    let (a, b) = match (c.a, c.b, &c.alpha) {
        (Some(a), Some(b), _) => (a, b),
        (None, None, Some(al)) if al.len() == 1 => (2.0 * al[0] as f64, 2.0),
        _ => bail!("trig needs either --a and --b, or a single --alpha"),
    };
    let p = TrigParams::new(a, b)?;
    let n = c.samples(1001)?;
    let mut t = Table::new(["x", "sin", "cos", "eta", "pythagorean_residual", "period"]);
    t.meta("a", a);
    t.meta("b", b);
    t.meta("half_period", p.half_period());
    for k in 0..n {
        let x = p.period() * k as f64 / (n - 1) as f64;
        let (s, co) = p.sin_cos(x);
        let res = s.abs().powf(a) + co.abs().powf(b) - 1.0;
        t.push(vec![x.into(), s.into(), co.into(), eta_with(&p, x).into(), res.into(), p.period().into()]);
    }
    Ok(t)
}

pub fn geodesic(c: &RunConfig) -> Result<Table> {
    let index = index(c)?;
    let path = geodesic_path(c, &index)?;
    let m = index.dim();
    let rep = cut_report(&path);
    let t_max = c.t_max.unwrap_or(if rep.tau.is_finite() { 1.5 * rep.tau } else { 10.0 });
    if !(t_max > 0.0) {
        bail!("--t-max must be positive");
    }
    let n = c.samples(201)?;
    let mut times: Vec<(f64, bool)> = (0..n).map(|k| (t_max * k as f64 / (n - 1) as f64, false)).collect();
    if rep.tau <= t_max {
        times.push((rep.tau, true));
        times.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let mut cols = vec!["t".to_string()];
    cols.extend(numbered("x", m));
    cols.extend(numbered("p", m));
    cols.push("H".into());
    cols.extend(numbered("R", m));
    cols.push("tau_marker".into());
    let mut t = Table::new(cols);
    t.meta("tau", rep.tau);
    t.meta("tau_argmin", rep.argmin.iter().map(|j| j + 1).collect::<Vec<_>>());
    t.meta("tau_is_cut_time", rep.n2_exact);
    t.meta("covector", path.p0());
    for (time, marker) in times {
        let s = path.state(time);
        let mut row: Vec<Cell> = vec![time.into()];
        row.extend(s.x.iter().map(|&v| Cell::from(v)));
        row.extend(s.p.iter().map(|&v| Cell::from(v)));
        row.push(hamiltonian(&index, &s.x, &s.p)?.into());
        row.extend(r_values(&index, &s.x, &s.p).into_iter().take(m).map(Cell::from));
        row.push(marker.into());
        t.push(row);
    }
    Ok(t)
}

/// Rows of the chart grid in row-major order; the last angle gets twice the
/// samples since its range is twice as long.
fn chart_grid(index: &MultiIndex, per_angle: usize) -> Vec<Vec<f64>> {
    let upper = chart_upper(index);
    let n = index.n();
    let counts: Vec<usize> = (0..n).map(|j| if j + 1 == n { 2 * per_angle } else { per_angle }).collect();
    let total: usize = counts.iter().product();
    (0..total)
        .map(|mut flat| {
            let mut phi = vec![0.0; n];
            for j in (0..n).rev() {
                let k = flat % counts[j];
                flat /= counts[j];
                phi[j] = if j + 1 == n {
                    upper[j] * k as f64 / counts[j] as f64
                } else {
                    upper[j] * (k as f64 + 0.5) / counts[j] as f64
                };
            }
            phi
        })
        .collect()
}

pub fn sphere(c: &RunConfig) -> Result<Table> {
    let index = index(c)?;
    let base = c.base()?;
    let time = c.t.context("--t is required")?;
    if !(time >= 0.0) {
        bail!("--t must be nonnegative");
    }
    let per = c.samples(24)?;
    let m = index.dim();
    let n = index.n();
    let mut cols = numbered("phi", n);
    cols.extend(numbered("x", m));
    cols.push("tau".into());
    cols.push("beyond_tau".into());
    let mut t = Table::new(cols);
    t.meta("t", time);
    for phi in chart_grid(&index, per) {
        let path = GeodesicPath::from_spherical(&index, base, &SphericalPhi(phi.clone()))?;
        let tau = cut_report(&path).tau;
        let mut row: Vec<Cell> = phi.iter().map(|&v| Cell::from(v)).collect();
        row.extend(path.point(time).into_iter().map(Cell::from));
        row.push(tau.into());
        row.push((time > tau).into());
        t.push(row);
    }
    Ok(t)
}

pub fn conjugate(c: &RunConfig) -> Result<Table> {
    let index = index(c)?;
    let path = geodesic_path(c, &index)?;
    let horizon = c.horizon.unwrap_or(4.0);
    if !(horizon > 0.0) {
        bail!("--horizon must be positive");
    }
    let rep = cut_report(&path);
    let con = first_conjugate_time(&path, horizon);
    let n = index.n();
    let mut cols = vec!["tau".to_string(), "t_con".into(), "t_con_index".into(), "conjugate_at_tau".into()];
    cols.extend(numbered("tau_", n));
    let mut t = Table::new(cols);
    t.meta("tau_is_cut_time", rep.n2_exact);
    t.meta("horizon_half_periods", horizon);
    let mut row: Vec<Cell> =
        vec![rep.tau.into(), con.t_con.into(), con.index.map(|j| j + 1).into(), rep.conjugate_at_tau.into()];
    for j in 0..n {
        row.push(rep.tau_per_index.iter().find(|e| e.0 == j).map(|e| e.1).into());
    }
    t.push(row);
    Ok(t)
}

fn label(l: LocusLabel) -> &'static str {
    match l {
        LocusLabel::ECurve => "E",
        LocusLabel::GCurve => "G",
        LocusLabel::Lambda2 => "Lambda2",
        LocusLabel::GammaPlus => "Gamma+",
        LocusLabel::GammaMinus => "Gamma-",
    }
}

fn case_name(c: BaseCase) -> &'static str {
    match c {
        BaseCase::Riemannian => "riemannian",
        BaseCase::XZero => "x0=0",
        BaseCase::YZero => "y0=0",
        BaseCase::Origin => "x0=y0=0",
    }
}

fn class_name(c: PointClass) -> &'static str {
    match c {
        PointClass::Type1Strict => "type1",
        PointClass::Type2Strict => "type2",
        PointClass::Boundary => "boundary",
    }
}

pub fn cut_locus(c: &RunConfig) -> Result<Table> {
    let ab = c.alpha3()?;
    let base = c.base()?;
    let samples = c.samples(400)?;
    let locus = cut_locus_3d(ab, base, samples)?;
    let offset = cut_y_offset(ab, base[1]);
    let mut t = Table::new([
        "kind",
        "label",
        "id",
        "param",
        "x",
        "y",
        "z",
        "closed",
        "simple",
        "variant",
        "axis",
        "value",
        "excluded",
        "band_center",
        "band_half_width",
        "cut_y_offset",
    ]);
    t.meta("case", case_name(locus.case));
    t.meta("point_type", locus.point_type.map(|p| class_name(p.classification)));
    t.meta("type_threshold", locus.point_type.map(|p| p.threshold));
    for (k, s) in locus.surfaces.iter().enumerate() {
        let (ex, center, half): (String, Option<f64>, Option<f64>) = match &s.excluded {
            Excluded::Nothing => ("nothing".into(), None, None),
            Excluded::InteriorOf(l) => (format!("interior:{}", label(*l)), None, None),
            Excluded::Band { center, half_width } => ("band".into(), Some(*center), Some(*half_width)),
        };
        t.push(vec![
            "surface".into(),
            Cell::Empty,
            k.into(),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            ["x", "y", "z"][s.axis].into(),
            s.value.into(),
            ex.into(),
            center.into(),
            half.into(),
            offset.into(),
        ]);
    }
    let mut lines: Vec<(&str, _)> = locus
        .polylines
        .iter()
        .map(|l| (if l.label == LocusLabel::ECurve { "restricted" } else { "" }, l.clone()))
        .collect();
    if locus.point_type.is_some_and(|p| p.is_type2()) {
        lines.push(("full-range", trace_e(ab, base, samples, EVariant::FullRange)?));
    }
    for (k, (variant, l)) in lines.iter().enumerate() {
        let simple = l.is_simple();
        for (param, p) in &l.samples {
            t.push(vec![
                "polyline".into(),
                label(l.label).into(),
                k.into(),
                (*param).into(),
                p[0].into(),
                p[1].into(),
                p[2].into(),
                l.closed.into(),
                simple.into(),
                (*variant).into(),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                offset.into(),
            ]);
        }
    }
    Ok(t)
}

pub fn classify(c: &RunConfig) -> Result<Table> {
    let ab = c.alpha3()?;
    let base = c.base()?;
    if base.len() != 3 {
        bail!("--base needs three coordinates, got {}", base.len());
    }
    let mut t = Table::new(["case", "class", "threshold", "abs_y0", "r", "phi2_star", "cut_y_offset"]);
    let case = base_case(base);
    if case == BaseCase::Riemannian {
        let pt = classify_point(ab, base)?;
        t.push(vec![
            case_name(case).into(),
            class_name(pt.classification).into(),
            pt.threshold.into(),
            base[1].abs().into(),
            r_boundary(ab, base)?.into(),
            phi2_star(ab, base)?.into(),
            cut_y_offset(ab, base[1]).into(),
        ]);
    } else {
        t.push(vec![
            case_name(case).into(),
            "singular".into(),
            Cell::Empty,
            base[1].abs().into(),
            Cell::Empty,
            Cell::Empty,
            cut_y_offset(ab, base[1]).into(),
        ]);
    }
    Ok(t)
}

/// The report and whether every suite passed.
pub fn verify(c: &RunConfig) -> Result<(Table, bool)> {
    let seed = c.seed();
    let ids: Vec<u8> = c.suite.clone().unwrap_or_else(|| SUITES.iter().map(|s| s.0).collect());
    let mut t = Table::new(["suite", "name", "metric", "value", "tolerance", "metric_passed", "suite_passed"]);
    t.meta("seed", seed);
    let mut all = true;
    for id in ids {
        let r = run_suite(id, seed)?;
        eprintln!(
            "{} suite {}: {} ({:.2}s, budget {:.0}s)",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.seconds,
            r.budget_seconds
        );
        all &= r.passed;
        for m in &r.metrics {
            t.push(vec![
                (r.id as usize).into(),
                r.name.clone().into(),
                m.name.clone().into(),
                m.value.into(),
                m.tolerance.into(),
                m.passed.into(),
                r.passed.into(),
            ]);
        }
    }
    Ok((t, all))
}

#[cfg(test)]
mod tests {
    use super::*;
    use grushin::geoflow::spherical_to_covector;

    #[test]
    fn chart_grid_covers_ranges() {
        let index = MultiIndex::new(vec![1, 2]).unwrap();
        let g = chart_grid(&index, 4);
        assert_eq!(g.len(), 4 * 8);
        let upper = chart_upper(&index);
        assert!(g.iter().all(|p| p[0] > 0.0 && p[0] < upper[0] && p[1] >= 0.0 && p[1] < upper[1]));
    }

    #[test]
    fn covector_is_normalized() {
        let c = RunConfig {
            alpha: Some(vec![1, 1]),
            base: Some(vec![1.0, 1.0, 0.0]),
            covector: Some(vec![2.0, 0.0, 0.0]),
            ..RunConfig::default()
        };
        let path = geodesic_path(&c, &index(&c).unwrap()).unwrap();
        assert_eq!(path.p0(), &[1.0, 0.0, 0.0]);
        let c = RunConfig { phi: Some(vec![1.0, 1.0]), covector: None, base: Some(vec![0.0, 1.0, 0.0]), ..c };
        assert!(geodesic_path(&c, &index(&c).unwrap()).is_err());
    }

    #[test]
    fn spherical_and_cartesian_agree() {
        let index = MultiIndex::new(vec![2, 1]).unwrap();
        let base = vec![0.8, -1.1, 0.2];
        let phi = vec![1.0, 4.0];
        let p = spherical_to_covector(&index, &base, &SphericalPhi(phi.clone())).unwrap();
        let a = RunConfig { alpha: Some(vec![2, 1]), base: Some(base.clone()), phi: Some(phi), ..RunConfig::default() };
        let b = RunConfig { phi: None, covector: Some(p), ..a.clone() };
        let (pa, pb) = (geodesic_path(&a, &index).unwrap(), geodesic_path(&b, &index).unwrap());
        let (xa, xb) = (pa.point(2.0), pb.point(2.0));
        assert!(xa.iter().zip(&xb).all(|(u, v)| (u - v).abs() < 1e-12));
    }
}
