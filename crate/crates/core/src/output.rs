//! CSV and edge-list writers.
//!
//! `slots.csv`: t, user, scheduled, alpha, rate_nats, rate_bps, dpp_weight,
//! F, esr_running_bps (one row per user per slot; alpha empty for users with
//! no capable AP).
//!
//! `summary.csv`: one row per run, with run-level means followed by
//! semicolon-joined per-user lists.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::SweepAxis;
use crate::error::Result;
use crate::scheduler::InterferenceGraph;
use crate::secrecy::rate_to_bits_per_second;
use crate::sim::{RunSummary, SlotRecord};

pub const SLOT_COLUMNS: [&str; 9] = [
    "t",
    "user",
    "scheduled",
    "alpha",
    "rate_nats",
    "rate_bps",
    "dpp_weight",
    "F",
    "esr_running_bps",
];

pub const SUMMARY_COLUMNS: [&str; 18] = [
    "algorithm",
    "seed",
    "rep",
    "sweep_axis",
    "sweep_value",
    "horizon",
    "num_users",
    "epsilon",
    "edges",
    "mean_esr_bps",
    "mean_rate_bps",
    "mean_schedule_fraction",
    "max_normalized_backlog",
    "mean_normalized_backlog",
    "esr_bps",
    "rate_bps",
    "schedule_fraction",
    "normalized_backlog",
];

#[derive(Serialize)]
struct SlotRow {
    t: usize,
    user: usize,
    scheduled: u8,
    alpha: Option<f64>,
    rate_nats: f64,
    rate_bps: f64,
    dpp_weight: f64,
    #[serde(rename = "F")]
    backlog: f64,
    esr_running_bps: f64,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    algorithm: &'a str,
    seed: u64,
    rep: u64,
    sweep_axis: &'a str,
    sweep_value: Option<f64>,
    horizon: usize,
    num_users: usize,
    epsilon: f64,
    edges: usize,
    mean_esr_bps: f64,
    mean_rate_bps: f64,
    mean_schedule_fraction: f64,
    max_normalized_backlog: f64,
    mean_normalized_backlog: f64,
    esr_bps: String,
    rate_bps: String,
    schedule_fraction: String,
    normalized_backlog: String,
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

pub fn write_slots<W: Write>(out: W, records: &[SlotRecord], bandwidth: f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(SLOT_COLUMNS)?;
    }
    for r in records {
        for j in 0..r.scheduled.len() {
            w.serialize(SlotRow {
                t: r.t,
                user: j,
                scheduled: r.scheduled[j] as u8,
                alpha: r.alpha[j],
                rate_nats: r.rate_nats[j],
                rate_bps: rate_to_bits_per_second(r.rate_nats[j], bandwidth),
                dpp_weight: r.dpp_weight[j],
                backlog: r.backlog[j],
                esr_running_bps: r.esr_running_bps[j],
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// A summary plus the sweep coordinate that produced it, if any.
pub struct SummaryEntry<'a> {
    pub summary: &'a RunSummary,
    pub sweep: Option<(SweepAxis, f64)>,
}

pub fn write_summaries<W: Write>(out: W, entries: &[SummaryEntry<'_>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if entries.is_empty() {
        w.write_record(SUMMARY_COLUMNS)?;
    }
    for e in entries {
        let s = e.summary;
        w.serialize(SummaryRow {
            algorithm: s.algorithm.tag(),
            seed: s.seed,
            rep: s.rep,
            sweep_axis: e.sweep.map_or("", |(a, _)| a.tag()),
            sweep_value: e.sweep.map(|(_, v)| v),
            horizon: s.horizon,
            num_users: s.num_users,
            epsilon: s.epsilon,
            edges: s.edges,
            mean_esr_bps: s.mean_esr_bps(),
            mean_rate_bps: s.mean_rate_bps(),
            mean_schedule_fraction: s.mean_schedule_fraction(),
            max_normalized_backlog: s.max_normalized_backlog(),
            mean_normalized_backlog: s.mean_normalized_backlog(),
            esr_bps: join(&s.esr_bps),
            rate_bps: join(&s.mean_rate_bps),
            schedule_fraction: join(&s.schedule_fraction),
            normalized_backlog: join(&s.normalized_backlog),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_slots_file(path: &Path, records: &[SlotRecord], bandwidth: f64) -> Result<()> {
    write_slots(BufWriter::new(File::create(path)?), records, bandwidth)
}

pub fn write_summary_file(path: &Path, entries: &[SummaryEntry<'_>]) -> Result<()> {
    write_summaries(BufWriter::new(File::create(path)?), entries)
}

pub fn write_graph_file(path: &Path, graph: &InterferenceGraph) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    graph.write_edge_list(&mut f)?;
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Algorithm;

    fn record() -> SlotRecord {
        SlotRecord {
            t: 3,
            scheduled: vec![true, false],
            alpha: vec![Some(0.5), None],
            rate_nats: vec![std::f64::consts::LN_2, 0.0],
            dpp_weight: vec![-0.69, 0.1],
            backlog: vec![0.0, 0.25],
            esr_running_bps: vec![1.5e7, 0.0],
        }
    }

    #[test]
    fn slot_rows_follow_the_schema() {
        let mut buf = Vec::new();
        write_slots(&mut buf, &[record()], 20e6).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SLOT_COLUMNS.join(","));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[0], "3");
        assert_eq!(first[2], "1");
        assert_eq!(first[3], "0.5");
        assert!((first[5].parse::<f64>().unwrap() - 2e7).abs() < 1e-3);
        let second: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(second[3], "");
        assert!(lines.next().is_none());
    }

    #[test]
    fn summary_rows_follow_the_schema() {
        let s = RunSummary {
            algorithm: Algorithm::PfAn,
            seed: 4,
            rep: 1,
            horizon: 10,
            num_users: 2,
            epsilon: 1e-6,
            edges: 1,
            esr_bps: vec![1.0, 3.0],
            mean_rate_bps: vec![2.0, 4.0],
            schedule_fraction: vec![0.5, 0.5],
            normalized_backlog: vec![0.0, 0.2],
        };
        let mut buf = Vec::new();
        write_summaries(
            &mut buf,
            &[SummaryEntry {
                summary: &s,
                sweep: Some((SweepAxis::Fov, 96.0)),
            }],
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SUMMARY_COLUMNS.join(","));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "pf-an");
        assert_eq!(row[3], "fov");
        assert_eq!(row[4], "96.0");
        assert_eq!(row[9], "2.0");
        assert_eq!(row[14], "1;3");
    }

    #[test]
    fn empty_outputs_still_have_headers() {
        let mut buf = Vec::new();
        write_slots(&mut buf, &[], 20e6).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim(), SLOT_COLUMNS.join(","));
    }
}
