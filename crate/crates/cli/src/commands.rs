use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use dtc_core::config::{AxisConfig, OutputFormat, RawValue, RunConfig};
use dtc_core::evolution::compile_step;
use dtc_core::model::{realization_rng, sample_realization};
use dtc_core::observables::{figure_bulk_qubit, period_trace};
use dtc_core::parallel::Execution;
use dtc_core::records::{self, cell_key, Metadata};
use dtc_core::scaling::{lifetime_scaling_campaign, ScalingFit};
use dtc_core::sweep::{run_campaign_streaming, InitialStates, ObservableId, SweepRecord};
use dtc_core::{Error, Result};

/// Pulse counts swept by `h2i` when the config has no `h2i_pulses` axis.
const H2I_PULSES: [f64; 4] = [0.0, 8.0, 64.0, 256.0];

pub struct Run {
    pub config: RunConfig,
    pub workers: Option<usize>,
    pub resume: bool,
}

impl Run {
    fn exec(&self) -> Execution {
        Execution::from_workers(self.workers)
    }

    fn metadata(&self, command: &str) -> Metadata {
        Metadata::new(command, &self.config, self.config.output.timestamp)
    }

    fn output_path(&self) -> Option<&Path> {
        self.config.output.path.as_deref()
    }
}

fn create(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn finish(mut w: Box<dyn Write>, path: Option<&Path>) -> Result<()> {
    w.flush()
        .map_err(|e| io_err(path.unwrap_or(Path::new("<stdout>")), e))
}

pub fn evolve(run: &Run) -> Result<()> {
    let cfg = &run.config;
    if cfg.has_explicit_axes() {
        return Err(Error::Config("evolve runs a single cell; remove [[axes]]".into()));
    }
    if run.resume {
        return Err(Error::Config("--resume applies to sweeps only".into()));
    }
    let spec = cfg.drive_spec();
    spec.validate()?;
    let initial = cfg.initial_states()?;
    if !matches!(initial, InitialStates::Fixed(_) | InitialStates::Random(1)) {
        return Err(Error::Config(
            "evolve needs one initial state: a bit string or \"random:1\"".into(),
        ));
    }
    let mut qubits = Vec::new();
    for obs in cfg.observable_ids()? {
        let ks = match obs {
            ObservableId::Z(k) | ObservableId::Lifetime(k) => vec![k],
            ObservableId::Fspt => vec![1, figure_bulk_qubit(spec.n_qubits)],
        };
        for k in ks {
            if !qubits.contains(&k) {
                qubits.push(k);
            }
        }
    }
    // Same stream as realization 0 of the first cell of a sweep with this seed.
    let mut rng = realization_rng(cfg.seed, 0, 0);
    let disorder = sample_realization(&spec.distribution, spec.n_qubits, &mut rng);
    if let InitialStates::Fixed(s) = &initial {
        if s.len() != spec.n_qubits {
            return Err(Error::Config(format!(
                "initial_state {s:?} has length {} but L = {}",
                s.len(),
                spec.n_qubits
            )));
        }
    }
    let state = initial.draw(spec.n_qubits, &mut rng).remove(0);
    let plan = compile_step(&spec, &disorder)?;
    let rows = period_trace(&state, &plan, &qubits, cfg.horizon)
        .map_err(|e| Error::Config(e.to_string()))?;
    let path = run.output_path();
    let mut w = create(path)?;
    match cfg.output.format {
        OutputFormat::Csv => records::write_trace_csv(&mut w, &rows)?,
        OutputFormat::Json => records::write_json(&mut w, &records::trace_json(&rows, &run.metadata("evolve")))?,
    }
    finish(w, path)
}

pub fn sweep(run: &Run) -> Result<()> {
    run_sweep(run, &run.config, "sweep")
}

pub fn h2i(run: &Run) -> Result<()> {
    let mut cfg = run.config.clone();
    let mut axes = cfg
        .axes
        .take()
        .unwrap_or_else(|| vec![AxisConfig::grid("epsilon", 0.0, 0.2, 21)]);
    if !axes.iter().any(|a| a.name == "h2i_pulses") {
        axes.insert(
            0,
            AxisConfig::list("h2i_pulses", H2I_PULSES.iter().map(|&n| RawValue::Number(n)).collect()),
        );
    }
    cfg.axes = Some(axes);
    run_sweep(run, &cfg, "h2i")
}

fn run_sweep(run: &Run, cfg: &RunConfig, command: &str) -> Result<()> {
    let campaign = cfg.campaign()?;
    let axes = campaign.axis_parameters();
    let path = run.output_path();
    let format = cfg.output.format;
    match format {
        OutputFormat::Json => {
            if run.resume {
                return Err(Error::Config("--resume needs CSV output".into()));
            }
            let mut all: Vec<SweepRecord> = Vec::new();
            run_campaign_streaming(&campaign, run.exec(), |_| false, |batch| {
                all.extend_from_slice(batch);
                Ok(())
            })?;
            let meta = Metadata::new(command, cfg, cfg.output.timestamp);
            let mut w = create(path)?;
            records::write_json(&mut w, &records::sweep_json(&axes, &all, &meta))?;
            finish(w, path)
        }
        OutputFormat::Csv => {
            let (mut w, done, header): (Box<dyn Write>, _, bool) = if run.resume {
                let p = path.ok_or_else(|| Error::Config("--resume needs --output".into()))?;
                let existing = p.exists() && std::fs::metadata(p).map(|m| m.len() > 0).unwrap_or(false);
                let done = if existing {
                    records::completed_cells(p, &axes, &campaign.observables)?
                } else {
                    Default::default()
                };
                let file = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(p)
                    .map_err(|e| io_err(p, e))?;
                (Box::new(BufWriter::new(file)), done, !existing)
            } else {
                (create(path)?, Default::default(), true)
            };
            if header {
                records::write_sweep_csv(&mut w, &axes, &[], true)?;
            }
            let sink_path: PathBuf = path.map(Path::to_path_buf).unwrap_or_else(|| "<stdout>".into());
            run_campaign_streaming(
                &campaign,
                run.exec(),
                |cell| done.contains(&cell_key(&cell.coordinates)),
                |batch| {
                    records::write_sweep_csv(&mut w, &axes, batch, false)?;
                    w.flush().map_err(|e| io_err(&sink_path, e))
                },
            )?;
            finish(w, path)
        }
    }
}

/// `points.csv` gets its fit written next to it as `points_fit.csv`.
fn fit_sidecar(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scaling");
    path.with_file_name(format!("{stem}_fit.csv"))
}

pub fn scaling(run: &Run, from_points: Option<&Path>) -> Result<()> {
    let cfg = &run.config;
    if run.resume {
        return Err(Error::Config("--resume applies to sweeps only".into()));
    }
    let source = from_points.map(Path::to_path_buf).or_else(|| cfg.scaling.points.clone());
    let points = match &source {
        Some(p) => {
            let f = File::open(p).map_err(|e| io_err(p, e))?;
            records::read_scaling_csv(f, p)?
        }
        None => lifetime_scaling_campaign(&cfg.scaling_campaign()?, run.exec())?,
    };
    for p in points.iter().filter(|p| p.n_censored > 0) {
        if p.censored() {
            eprintln!("dtc: L = {}: every run hit the horizon cap; excluded from the fit", p.n_qubits);
        } else {
            eprintln!(
                "dtc: L = {}: {} of {} runs hit the horizon cap; the mean is a lower bound",
                p.n_qubits, p.n_censored, p.n_samples
            );
        }
    }
    let fitted = ScalingFit::from_points(points.clone());
    let fit = fitted.as_ref().ok().map(|f| f.fit);
    let path = run.output_path();
    match cfg.output.format {
        OutputFormat::Json => {
            let mut w = create(path)?;
            records::write_json(&mut w, &records::scaling_json(&points, fit.as_ref(), &run.metadata("scaling")))?;
            finish(w, path)?;
        }
        OutputFormat::Csv => {
            let mut w = create(path)?;
            records::write_scaling_csv(&mut w, &points)?;
            finish(w, path)?;
            if let Some(fit) = &fit {
                match path {
                    Some(p) => {
                        let side = fit_sidecar(p);
                        let mut w = create(Some(&side))?;
                        records::write_fit_csv(&mut w, fit)?;
                        finish(w, Some(&side))?;
                    }
                    None => eprintln!(
                        "fit: prefactor {} rate {} r_squared {} ({} points)",
                        fit.prefactor, fit.rate, fit.r_squared, fit.n_points
                    ),
                }
            }
        }
    }
    if let Err(e) = fitted {
        eprintln!("dtc: no fit: {e}");
    }
    Ok(())
}
