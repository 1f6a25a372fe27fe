//! Single runs and sweeps. Sweep points run on a bounded pool of scoped
//! threads; results flow to one collector that orders them by index.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use log::{debug, info};

use crate::config::{Resolved, Scenario, ScenarioName, SweepAxis};
use crate::error::{HarnessError, Result};
use crate::scenarios;
use crate::summary::{RunSummary, Series, SweepPoint};

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub series: Series,
    /// Parseable scenario (or list of them, for a sweep) reproducing the run.
    pub resolved_config: serde_json::Value,
}

pub fn run_resolved(r: &Resolved) -> Result<(RunSummary, Series)> {
    let start = Instant::now();
    let (mut summary, series) = scenarios::run(r).map_err(|e| HarnessError::from_core(r.name.as_str(), e))?;
    summary.wall_time_s = start.elapsed().as_secs_f64();
    if let Some((key, f)) = summary.fidelity_out_of_range() {
        return Err(HarnessError::from_core(
            r.name.as_str(),
            engres_core::Error::Domain(format!("fidelity `{key}` = {f} outside [0, 1 + 1e-8]")),
        ));
    }
    debug!("{} finished in {:.3} s", r.name, summary.wall_time_s);
    Ok((summary, series))
}

/// Runs a scenario in memory; `workers` bounds sweep parallelism.
pub fn execute(s: &Scenario, workers: usize) -> Result<RunOutput> {
    if s.name != ScenarioName::Sweep {
        let r = s.resolve()?;
        info!("running {} ({} samples to t = {:e} s)", r.name, r.n_samples, r.t_end);
        let (summary, series) = run_resolved(&r)?;
        let resolved_config = serde_json::to_value(r.to_scenario()).expect("scenario serializes");
        return Ok(RunOutput {
            summary,
            series,
            resolved_config,
        });
    }
    let start = Instant::now();
    let points = s.sweep_points()?;
    let Some(SweepAxis(param, _)) = &s.sweep_axis else {
        unreachable!("validated sweep has an axis")
    };
    info!("sweeping {} over {} values with {} workers", param.as_str(), points.len(), workers.max(1));
    let results = parallel_map(&points, workers, |(_, r)| run_resolved(r));
    let mut done = Vec::with_capacity(points.len());
    for ((value, r), result) in points.iter().zip(results) {
        let (summary, _) = result?;
        done.push((*value, r, summary));
    }

    let first = &done[0];
    let mut summary = RunSummary::new(ScenarioName::Sweep, first.1.branch, &first.1.params, first.1.t_end, first.1.n_samples);
    summary.sweep_axis = Some(*param);
    let keys: BTreeSet<String> = done.iter().flat_map(|d| d.2.fidelities.keys().cloned()).collect();
    let mut columns = vec![
        "value".to_string(),
        "gamma".to_string(),
        "gamma_eng".to_string(),
        "rate_ratio".to_string(),
        "epsilon".to_string(),
        "epsilon_tilde".to_string(),
    ];
    columns.extend(keys.iter().map(|k| format!("fidelity_{k}")));
    let mut series = Series::new(ScenarioName::Sweep, &[]);
    series.columns = columns;
    for (value, r, point) in &done {
        let d = &point.derived;
        let mut row = vec![Some(*value), Some(r.params.gamma), d.gamma_eng, d.rate_ratio, d.epsilon, d.epsilon_tilde];
        row.extend(keys.iter().map(|k| point.fidelities.get(k).copied()));
        series.rows.push(row);
    }
    summary.points = done
        .iter()
        .map(|(value, _, point)| SweepPoint {
            value: *value,
            summary: point.clone(),
        })
        .collect();
    summary.wall_time_s = start.elapsed().as_secs_f64();
    let resolved_config =
        serde_json::to_value(done.iter().map(|d| d.1.to_scenario()).collect::<Vec<_>>()).expect("scenarios serialize");
    Ok(RunOutput {
        summary,
        series,
        resolved_config,
    })
}

/// Applies `f` to every item with at most `workers` threads and returns the
/// results in input order.
pub fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.clamp(1, items.len().max(1));
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            let f = &f;
            scope.spawn(move || loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= items.len() {
                    break;
                }
                if tx.send((k, f(&items[k]))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (k, r) in rx {
            slots[k] = Some(r);
        }
    });
    slots.into_iter().map(|r| r.expect("every index is produced once")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<u64> = (0..37).collect();
        for workers in [1, 3, 64] {
            let out = parallel_map(&items, workers, |x| x * x);
            assert_eq!(out, items.iter().map(|x| x * x).collect::<Vec<_>>());
        }
        assert!(parallel_map(&[] as &[u8], 4, |x| *x).is_empty());
    }
}
