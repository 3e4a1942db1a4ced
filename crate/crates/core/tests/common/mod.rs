//! Shared helpers for the integration suites: the fixed mixture test
//! matrix and a tail-aware total-mass quadrature.

use tailmix::dist::{BulkFamily, GpdParams};
use tailmix::mixture::{MixtureKind, MixtureSpec, TailFractionMode};
use tailmix::quad::{adaptive_simpson, integrate_with_breakpoints};

pub const P_GRID: [f64; 9] = [0.001, 0.01, 0.05, 0.1, 0.5, 0.9, 0.95, 0.99, 0.999];

/// The fixed matrix of mixture specs used by round-trip and normalization
/// checks: every kind, both tail-fraction modes, with and without the
/// continuity constraint.
pub fn mixture_matrix() -> Vec<(String, MixtureSpec)> {
    let mut specs: Vec<(String, MixtureSpec)> = Vec::new();
    let norm = BulkFamily::normal(0.0, 1.0).unwrap();

    for &xi in &[-0.3, 0.0, 0.2, 0.5] {
        for &(mode, tag) in &[
            (TailFractionMode::BulkBased, "bulk"),
            (TailFractionMode::Parameterized(0.08), "param"),
        ] {
            let spec = MixtureSpec::single_tail(
                MixtureKind::NormGpd,
                norm.clone(),
                GpdParams::new(1.2816, 0.8, xi).unwrap(),
                mode,
            )
            .unwrap();
            specs.push((format!("normGPD[{tag},xi={xi}]"), spec.clone()));
            specs.push((
                format!("normGPDcon[{tag},xi={xi}]"),
                spec.solve_continuity().unwrap(),
            ));
        }
    }

    let positive_bulks = [
        (
            "gammaGPD",
            MixtureKind::GammaGpd,
            BulkFamily::gamma(5.0, 1.0).unwrap(),
            7.0,
        ),
        (
            "weibullGPD",
            MixtureKind::WeibullGpd,
            BulkFamily::weibull(2.0, 5.0).unwrap(),
            6.5,
        ),
        (
            "lognormalGPD",
            MixtureKind::LognormalGpd,
            BulkFamily::log_normal(0.0, 0.5).unwrap(),
            1.8,
        ),
    ];
    for (name, kind, bulk, u) in positive_bulks {
        for &xi in &[0.0, 0.2] {
            let spec = MixtureSpec::single_tail(
                kind,
                bulk.clone(),
                GpdParams::new(u, 1.0, xi).unwrap(),
                TailFractionMode::BulkBased,
            )
            .unwrap();
            specs.push((format!("{name}[xi={xi}]"), spec.clone()));
            specs.push((format!("{name}con[xi={xi}]"), spec.solve_continuity().unwrap()));
        }
    }

    let kernel_pts = BulkFamily::normal(0.0, 1.0).unwrap().sample(60, 404).unwrap();
    let kernel = BulkFamily::kernel(kernel_pts, 0.35).unwrap();
    let spec = MixtureSpec::single_tail(
        MixtureKind::KernelGpd,
        kernel,
        GpdParams::new(1.1, 0.7, 0.15).unwrap(),
        TailFractionMode::Parameterized(0.1),
    )
    .unwrap();
    specs.push(("kernelGPD[param]".to_string(), spec.clone()));
    specs.push((
        "kernelGPDcon[param]".to_string(),
        spec.solve_continuity().unwrap(),
    ));

    for &xi in &[-0.2, 0.1, 0.4] {
        specs.push((
            format!("hybridGPD[xi={xi}]"),
            MixtureSpec::hybrid_pareto(0.5, 1.3, xi).unwrap(),
        ));
    }
    specs.push((
        "hybridGPDcon".to_string(),
        MixtureSpec::hybrid_pareto_con(0.0, 1.0, 1.0, 0.2).unwrap(),
    ));

    for &(lmode, umode, tag) in &[
        (
            TailFractionMode::BulkBased,
            TailFractionMode::BulkBased,
            "bulk",
        ),
        (
            TailFractionMode::Parameterized(0.06),
            TailFractionMode::Parameterized(0.09),
            "param",
        ),
    ] {
        let spec = MixtureSpec::gng(
            norm.clone(),
            GpdParams::new(-1.4, 0.9, 0.15).unwrap(),
            lmode,
            GpdParams::new(1.5, 0.8, 0.1).unwrap(),
            umode,
        )
        .unwrap();
        specs.push((format!("GNG[{tag}]"), spec.clone()));
        specs.push((format!("GNGcon[{tag}]"), spec.solve_continuity().unwrap()));
    }

    specs
}

/// Total mass of a mixture density by quadrature: a central region split at
/// the splice points plus substitution-mapped infinite tails, so heavy
/// tails integrate quickly without truncation error.
pub fn mixture_total_mass(spec: &MixtureSpec) -> f64 {
    let (support_lo, support_hi) = spec.support();
    let a = spec.quantile(0.01).unwrap();
    let b = spec.quantile(0.99).unwrap();

    let central = integrate_with_breakpoints(&|x| spec.pdf(x), a, b, &spec.breakpoints(), 1e-9);

    let lower = if support_lo.is_finite() {
        adaptive_simpson(&|x| spec.pdf(x), support_lo, a, 1e-9)
    } else {
        // x = a - s/(1-s), dx = -ds/(1-s)^2
        let f = |s: f64| {
            let om = 1.0 - s;
            spec.pdf(a - s / om) / (om * om)
        };
        adaptive_simpson(&f, 0.0, 1.0 - 1e-9, 1e-9)
    };

    let upper = if support_hi.is_finite() {
        adaptive_simpson(&|x| spec.pdf(x), b, support_hi, 1e-9)
    } else {
        // x = b + s/(1-s)
        let f = |s: f64| {
            let om = 1.0 - s;
            spec.pdf(b + s / om) / (om * om)
        };
        adaptive_simpson(&f, 0.0, 1.0 - 1e-9, 1e-9)
    };

    central + lower + upper
}
