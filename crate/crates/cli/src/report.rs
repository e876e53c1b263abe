//! Human-readable rendering of a pipeline verdict.

use std::fmt::Write as _;

use moment_core::PsdVerdict;

use crate::pipeline::{MarginalKind, Overall, PipelineVerdict};

pub fn render(verdict: &PipelineVerdict) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "momentctl {} (seed {})", verdict.command, verdict.seed);
    let _ = writeln!(out, "overall: {}", overall_line(verdict.overall));
    let _ = writeln!(out);

    let _ = writeln!(out, "per-index results");
    for index in &verdict.per_index {
        let _ = writeln!(
            out,
            "  {} (truncation order {})",
            index.variables, index.truncation_order
        );
        for entry in &index.psd {
            let _ = writeln!(
                out,
                "    psd[{} @ n={}]: {} (min eigenvalue {:.3e}, norm {:.3e})",
                entry.shift,
                entry.order,
                psd_word(entry.report.verdict),
                entry.report.min_eigenvalue,
                entry.report.matrix_norm,
            );
        }
        if let Some(flat) = &index.flatness {
            let _ = writeln!(
                out,
                "    flatness at n={}: rank {} vs {} ({})",
                flat.order,
                flat.rank_n,
                flat.rank_n_minus_1,
                if flat.is_flat { "flat" } else { "not flat" }
            );
        }
        match index.marginal_kind {
            MarginalKind::Extracted => {
                let atoms = index
                    .measure
                    .as_ref()
                    .and_then(|m| m.as_atomic().map(|a| a.len()))
                    .unwrap_or(0);
                let _ = writeln!(
                    out,
                    "    measure: {atoms} atoms via flat extension at n={}{}",
                    index.flat_order.unwrap_or(0),
                    match index.support_ok {
                        Some(true) => ", support constraints hold",
                        Some(false) => ", SUPPORT CONSTRAINTS VIOLATED",
                        None => "",
                    }
                );
            }
            MarginalKind::ClosedForm => {
                let _ = writeln!(out, "    measure: closed-form marginal of the source");
            }
            MarginalKind::Missing => {
                let _ = writeln!(out, "    measure: none");
            }
        }
    }

    if let Some(exactness) = &verdict.exactness {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "exact projective system: {} (max discrepancy {:.3e} over {} covering pairs, tolerance {:.1e})",
            if exactness.is_exact() { "yes" } else { "no" },
            exactness.max_discrepancy,
            exactness.pairs_checked.len(),
            exactness.tolerance,
        );
    }
    if let Some(discrepancy) = verdict.well_definedness_discrepancy {
        let _ = writeln!(
            out,
            "cylinder well-definedness audit: max dual-base discrepancy {:.3e} over {} trials",
            discrepancy,
            verdict.audit_trials.unwrap_or(0),
        );
    }
    if let Some(tightness) = &verdict.tightness {
        let _ = writeln!(
            out,
            "tightness (Prokhorov condition, product boxes): {:?} at epsilon {}",
            tightness.verdict, tightness.epsilon
        );
        for (index, mass) in &tightness.per_index_mass {
            let _ = writeln!(out, "    box mass on {index}: {mass:.6}");
        }
    }
    if let Some(split) = &verdict.split {
        let _ = writeln!(
            out,
            "variable split: Archimedean-bounded {}, Carleman-determinate {}, uncovered {}",
            split.archimedean, split.carleman, split.uncovered
        );
    }
    if !verdict.notes.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "notes");
        for note in &verdict.notes {
            let _ = writeln!(out, "  - {note}");
        }
    }
    out
}

fn overall_line(overall: Overall) -> &'static str {
    match overall {
        Overall::RepresentingMeasureConstructed => {
            "representing measure constructed (exact projective system + Prokhorov condition)"
        }
        Overall::ConditionsCertified => {
            "conditions certified (determinacy diagnostics + Prokhorov condition)"
        }
        Overall::NecessaryConditionFailed => {
            "necessary condition failed (a moment/localizing matrix is not PSD)"
        }
        Overall::Inconclusive => "inconclusive",
    }
}

fn psd_word(verdict: PsdVerdict) -> &'static str {
    match verdict {
        PsdVerdict::Psd => "psd",
        PsdVerdict::Marginal => "psd (marginal)",
        PsdVerdict::NotPsd => "NOT PSD",
    }
}
