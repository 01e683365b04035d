//! Human-readable summaries for standard output.

use std::fmt::Write;

use evacrec_core::recommender::{Objective, RankKey, RecommendationPlan, TimeObjective};

fn clock(seconds: u64) -> String {
    format!("{}m{:02}s", seconds / 60, seconds % 60)
}

pub fn objective(o: &Objective) -> String {
    format!(
        "uncovered weight {}, total time {} s, vehicles {}",
        o.uncovered_weight, o.total_time, o.vehicles_used
    )
}

pub fn key(k: RankKey, mode: TimeObjective) -> String {
    let time = match mode {
        TimeObjective::Sum => "total time",
        TimeObjective::Makespan => "makespan",
    };
    format!("uncovered weight {}, {time} {} s, vehicles {}", k.0, k.1, k.2)
}

/// Status line, one row per assignment and one line per shortfall.
pub fn plan(plan: &RecommendationPlan) -> String {
    let mut out = String::new();
    let status = serde_label(&plan.status);
    let solver = serde_label(&plan.solver);
    writeln!(out, "status: {status} ({solver} solver)").unwrap();
    writeln!(out, "objective: {}", objective(&plan.objective)).unwrap();
    if let Some(lb) = plan.lower_bound_s {
        writeln!(out, "time lower bound: {lb} s").unwrap();
    }
    if !plan.assignments.is_empty() {
        let w = plan
            .assignments
            .iter()
            .map(|a| (a.resource.as_str().len(), a.rescue_point.as_str().len(), a.shelter.as_str().len()))
            .fold((8, 12, 7), |m, x| (m.0.max(x.0), m.1.max(x.1), m.2.max(x.2)));
        writeln!(
            out,
            "{:<w0$}  {:<w1$}  {:<w2$}  {:>7}  {:>10}  {:>9}  {:>7}",
            "resource",
            "rescue point",
            "shelter",
            "to rp",
            "to shelter",
            "load (wc)",
            "ETA",
            w0 = w.0,
            w1 = w.1,
            w2 = w.2
        )
        .unwrap();
        for a in &plan.assignments {
            writeln!(
                out,
                "{:<w0$}  {:<w1$}  {:<w2$}  {:>7}  {:>10}  {:>9}  {:>7}",
                a.resource.as_str(),
                a.rescue_point.as_str(),
                a.shelter.as_str(),
                format!("{} s", a.t_to_rp),
                format!("{} s", a.t_rp_to_shelter),
                format!("{} ({})", a.evacuees_loaded, a.wheelchair_loaded),
                clock(a.trip_time()),
                w0 = w.0,
                w1 = w.1,
                w2 = w.2
            )
            .unwrap();
        }
    }
    for (rp, u) in &plan.uncovered {
        writeln!(
            out,
            "uncovered: {rp} has {} left ({} wheelchair)",
            u.evacuees_left, u.wheelchair_left
        )
        .unwrap();
    }
    out
}

fn serde_label<T: std::fmt::Debug>(v: &T) -> String {
    let mut s = String::new();
    for (i, c) in format!("{v:?}").chars().enumerate() {
        if c.is_uppercase() && i > 0 {
            s.push('_');
        }
        s.push(c.to_ascii_lowercase());
    }
    s
}
