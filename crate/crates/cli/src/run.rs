//! Scenario runners.

use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;

use nhdyn::classical::{
    fixed_points, gamma_offset, integrate, BlochFlow, BlochParams, FixedPointKind, OscillatorFlow,
    OscillatorVariant, PhaseFlow, PhasePoint,
};
use nhdyn::coherent::{glauber_state, su2_state, Frame};
use nhdyn::ode::uniform_grid;
use nhdyn::operator::{HamiltonianSpec, SpinQuantumNumber};
use nhdyn::oracle::oscillator_limit_cycle;
use nhdyn::quantum::{limit_cycle_husimi, propagate, HusimiGridSpec, QuantumTrajectory};
use nhdyn::state::QuantumState;
use nhdyn::verification::{
    collapse_and_revival, envelope, ridge_distance, run_criterion, CriterionResult,
};
use num_complex::Complex64 as C64;

use crate::config::{Scenario, ScenarioConfig};
use crate::output::{number, write_meta, Table};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("numerical error: {0}")]
    Numerical(#[from] nhdyn::Error),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        Self::Io(std::io::Error::other(e))
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    /// Engine warnings and diagnostics; also written to `meta.toml`.
    pub notes: Vec<String>,
    pub criteria: Vec<CriterionResult>,
}

impl RunReport {
    /// False only when a verification criterion failed.
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }
}

struct Run<'a> {
    config: &'a ScenarioConfig,
    report: RunReport,
}

pub fn run(config: &ScenarioConfig) -> Result<RunReport, RunError> {
    fs::create_dir_all(&config.out_dir)?;
    let mut run = Run {
        config,
        report: RunReport::default(),
    };
    match config.scenario {
        Scenario::DampedHo | Scenario::DrivenHo | Scenario::CatState => {
            let cat = config.scenario == Scenario::CatState;
            run.oscillator(config.beta, cat, "trajectory.csv")?;
        }
        Scenario::Revival => {
            let traj = run.oscillator(config.beta, false, "trajectory.csv")?;
            run.revival_envelope(&traj)?;
        }
        Scenario::Anharmonic => {
            for &beta in &config.betas {
                run.oscillator(beta, false, &format!("trajectory_beta_{beta}.csv"))?;
            }
        }
        Scenario::Bloch => run.bloch()?,
        Scenario::FixedPoints => run.fixed_points()?,
        Scenario::Husimi => run.husimi()?,
        Scenario::Verify => run.verify()?,
    }
    let meta = config.out_dir.join("meta.toml");
    write_meta(&meta, config, &run.report.notes)?;
    run.report.files.push(meta);
    Ok(run.report)
}

impl Run<'_> {
    fn grid(&self) -> Vec<f64> {
        uniform_grid(0.0, self.config.t_end, self.config.n_steps)
    }

    fn write(&mut self, table: &Table, name: &str) -> Result<(), RunError> {
        let path = self.config.out_dir.join(name);
        table.write(&path)?;
        self.report.files.push(path);
        Ok(())
    }

    fn warn(&mut self, file: &str, warnings: &[String]) {
        self.report
            .notes
            .extend(warnings.iter().map(|w| format!("warning ({file}): {w}")));
    }

    /// Quantum run from a coherent state (or the even cat built on it) with
    /// the classical trajectories of its components on the same grid.
    fn oscillator(
        &mut self,
        beta: f64,
        cat: bool,
        file: &str,
    ) -> Result<QuantumTrajectory, RunError> {
        let c = self.config;
        let spec = c.oscillator_spec(beta);
        let ham = HamiltonianSpec::Oscillator(spec);
        let frame = Frame::new(spec.m, spec.omega, spec.hbar)?;
        let grid = self.grid();
        let centers: &[(f64, f64, &str)] = if cat {
            &[(c.q0, c.p0, "_a"), (-c.q0, -c.p0, "_b")]
        } else {
            &[(c.q0, c.p0, "")]
        };
        let parts = centers
            .iter()
            .map(|&(q, p, _)| glauber_state(frame.alpha(q, p), c.dim))
            .collect::<Result<Vec<_>, _>>()?;
        let psi0 = if cat {
            let one = C64::new(1.0, 0.0);
            QuantumState::superpose(&[(one, &parts[0]), (one, &parts[1])])?.normalized()
        } else {
            parts[0].clone()
        };
        let traj = propagate(&ham, c.dim, &psi0, &grid, c.tol)?;
        self.warn(file, &traj.warnings);

        let mut table = Table::new();
        table.push("t", grid.clone());
        for name in ["q", "p", "H"] {
            table.push(name, traj.observable(name).unwrap_or_default().to_vec());
        }
        table.push("norm", traj.norms.clone());

        let flow = OscillatorFlow::new(&ham, OscillatorVariant::from_damping(&spec.damping))?;
        for &(q, p, suffix) in centers {
            let mut ct = integrate(&flow, &PhasePoint::flat(q, p), &grid, c.tol)?;
            ct.attach_norm(|x| flow.decay(x), gamma_offset(&spec), spec.hbar)?;
            table.push(format!("q_classical{suffix}"), ct.component(0));
            table.push(format!("p_classical{suffix}"), ct.component(1));
            table.push(
                format!("norm_classical{suffix}"),
                ct.norm_factor.unwrap_or_default(),
            );
        }
        if spec.drive.is_some() {
            if let Ok(cycle) = oscillator_limit_cycle(&spec) {
                let (q, p): (Vec<f64>, Vec<f64>) = grid.iter().map(|&t| cycle.point(t)).unzip();
                table.push("q_limit", q).push("p_limit", p);
            }
        }
        self.write(&table, file)?;
        Ok(traj)
    }

    /// Amplitude envelopes of the quantum and classical `q` over windows of
    /// one oscillation period.
    fn revival_envelope(&mut self, traj: &QuantumTrajectory) -> Result<(), RunError> {
        let c = self.config;
        let spec = c.oscillator_spec(c.beta);
        let flow = OscillatorFlow::new(
            &HamiltonianSpec::Oscillator(spec),
            OscillatorVariant::from_damping(&spec.damping),
        )?;
        let classical =
            integrate(&flow, &PhasePoint::flat(c.q0, c.p0), &traj.times, c.tol)?.component(0);
        let window = 2.0 * PI / c.omega;
        let quantum = envelope(
            &traj.times,
            traj.observable("q").unwrap_or_default(),
            window,
        );
        let classical = envelope(&traj.times, &classical, window);
        let mut table = Table::new();
        table
            .push("t", quantum.iter().map(|e| e.0).collect())
            .push("q_envelope", quantum.iter().map(|e| e.1).collect())
            .push(
                "q_classical_envelope",
                classical.iter().map(|e| e.1).collect(),
            );
        self.write(&table, "envelope.csv")?;
        if let Some((low, high)) = collapse_and_revival(&quantum) {
            self.report.notes.push(format!(
                "quantum envelope falls to {:.1}% of its initial value and recovers to {:.1}%",
                100.0 * low,
                100.0 * high
            ));
        }
        Ok(())
    }

    fn bloch(&mut self) -> Result<(), RunError> {
        let c = self.config;
        let l = SpinQuantumNumber::new(c.l)?;
        let spin = c
            .spin_spec()
            .map_err(|e| nhdyn::Error::Spec(e.to_string()))?;
        let grid = self.grid();
        let traj = propagate(
            &HamiltonianSpec::Spin(spin),
            l.dim(),
            &su2_state(c.theta0, c.phi0, l)?,
            &grid,
            c.tol,
        )?;
        self.warn("trajectory.csv", &traj.warnings);
        let mut ct = integrate(
            &BlochFlow(BlochParams::new(c.eps, c.v, c.g, c.gamma)),
            &PhasePoint::bloch(c.theta0, c.phi0),
            &grid,
            c.tol,
        )?;
        // Γ = 2γ(L_z + L) with L_z = 2L s_z.
        let big_l = l.value();
        ct.attach_norm(|s| 4.0 * c.gamma * big_l * s[2], 2.0 * c.gamma * big_l, 1.0)?;

        let mut table = Table::new();
        table.push("t", grid);
        for name in ["sx", "sy", "sz", "H"] {
            table.push(name, traj.observable(name).unwrap_or_default().to_vec());
        }
        table.push("norm", traj.norms.clone());
        for (k, name) in ["sx_classical", "sy_classical", "sz_classical"]
            .iter()
            .enumerate()
        {
            table.push(*name, ct.component(k));
        }
        table.push("norm_classical", ct.norm_factor.unwrap_or_default());
        self.write(&table, "trajectory.csv")
    }

    fn fixed_points(&mut self) -> Result<(), RunError> {
        let c = self.config;
        let path = c.out_dir.join("fixed_points.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record([
            "sx",
            "sy",
            "sz",
            "kind",
            "lambda1_re",
            "lambda1_im",
            "lambda2_re",
            "lambda2_im",
        ])?;
        for fp in fixed_points(c.eps, c.v, c.g, c.gamma) {
            let kind = match fp.kind {
                FixedPointKind::Sink => "sink",
                FixedPointKind::Source => "source",
                FixedPointKind::Saddle => "saddle",
                FixedPointKind::Center => "center",
                FixedPointKind::Degenerate => "degenerate",
            };
            let mut record: Vec<String> = fp.s.iter().map(|&x| number(x)).collect();
            record.push(kind.into());
            for ev in fp.eigenvalues {
                record.push(number(ev.re));
                record.push(number(ev.im));
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        self.report.files.push(path);
        Ok(())
    }

    /// Period-averaged Husimi density of the quantum limit cycle, its ridge,
    /// and a classical trajectory approaching the classical limit cycle.
    fn husimi(&mut self) -> Result<(), RunError> {
        let c = self.config;
        let spec = c.oscillator_spec(0.0);
        let cycle = oscillator_limit_cycle(&spec)?;
        let grid_spec = HusimiGridSpec {
            q_range: c.husimi_q,
            p_range: c.husimi_p,
            n_q: c.husimi_n_q,
            n_p: c.husimi_n_p,
            window: (0.0, 0.0),
        };
        let lch = limit_cycle_husimi(&spec, c.dim, &grid_spec, c.husimi_samples, c.tol)?;
        let field = &lch.field;

        let path = c.out_dir.join("husimi.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["q", "p", "value"])?;
        for (i, &q) in field.q.iter().enumerate() {
            for (j, &p) in field.p.iter().enumerate() {
                w.write_record([number(q), number(p), number(field.values[(i, j)])])?;
            }
        }
        w.flush()?;
        self.report.files.push(path);

        let mut ridge = Table::new();
        ridge
            .push("q", field.ridge.iter().map(|r| r.0).collect())
            .push("p", field.ridge.iter().map(|r| r.1).collect());
        self.write(&ridge, "ridge.csv")?;

        let (worst, cell) = ridge_distance(field, &cycle);
        self.report.notes.push(format!(
            "ridge lies within {worst:.4} of the classical limit cycle (grid cell diagonal {cell:.4})"
        ));
        self.report.notes.push(format!(
            "Floquet residual 1 - |<psi(2T)|psi(T)>|^2 = {:.3e}",
            lch.floquet_residual
        ));

        let ham = HamiltonianSpec::Oscillator(spec);
        let flow = OscillatorFlow::new(&ham, OscillatorVariant::from_damping(&spec.damping))?;
        let grid = self.grid();
        let mut ct = integrate(&flow, &PhasePoint::flat(c.q0, c.p0), &grid, c.tol)?;
        ct.attach_norm(|x| flow.decay(x), gamma_offset(&spec), spec.hbar)?;
        let (q_lim, p_lim): (Vec<f64>, Vec<f64>) = grid.iter().map(|&t| cycle.point(t)).unzip();
        let mut table = Table::new();
        table
            .push("t", grid)
            .push("q_classical", ct.component(0))
            .push("p_classical", ct.component(1))
            .push("norm_classical", ct.norm_factor.unwrap_or_default())
            .push("q_limit", q_lim)
            .push("p_limit", p_lim);
        self.write(&table, "trajectory.csv")
    }

    fn verify(&mut self) -> Result<(), RunError> {
        let path = self.config.out_dir.join("verify.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["id", "name", "passed", "value", "threshold", "detail"])?;
        for &id in &self.config.criteria {
            let r = run_criterion(id);
            w.write_record([
                r.id.to_string(),
                r.name.to_string(),
                r.passed.to_string(),
                number(r.value),
                number(r.threshold),
                r.detail.clone(),
            ])?;
            self.report.criteria.push(r);
        }
        w.flush()?;
        self.report.files.push(path);
        Ok(())
    }
}
