//! Scheduler that runs the party programs in BFS order over a globally
//! tracked state vector.
//!
//! The state lives on a list of registers: both ends of every resource pair
//! and, as parties finish, their target systems. Each party only touches its
//! own registers; outcomes reach children as explicit messages.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::protocol::program::{MeasurementProgram, Role};
use crate::protocol::transcript::{BasisHandle, Event, Payload, Transcript, TRANSCRIPT_SCHEMA_VERSION};
use crate::state::{fidelity_pure, PureState};
use crate::tensor::{self, C64};
use crate::tree::PartyId;

/// Measurements with at most this many outcomes are sampled from the full distribution.
const DIRECT_SAMPLING_LIMIT: usize = 64;
const MAX_REJECTION_TRIALS: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Outcomes drawn with their Born probabilities from a seeded generator.
    Sample(u64),
    /// Forced outcomes, one index per compression or measurement in schedule order.
    Branch(Vec<usize>),
    /// Every branch above the pruning threshold.
    EnumerateAll,
}

#[derive(Clone, Debug)]
pub struct SimOptions {
    /// Final states are compared against this state when given.
    pub target: Option<PureState>,
    /// Party whose Pauli correction is skipped (negative control).
    pub skip_correction: Option<PartyId>,
    pub prune_tol: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            target: None,
            skip_correction: None,
            prune_tol: 1e-12,
        }
    }
}

impl SimOptions {
    pub fn with_target(target: &PureState) -> Self {
        Self {
            target: Some(target.clone()),
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Reg {
    Resource { edge: usize, child_end: bool },
    Target(PartyId),
}

#[derive(Clone, Copy, Debug)]
enum Action {
    Relabel { v: PartyId, edge: usize },
    Correct { v: PartyId, edge: usize },
    Compress { v: PartyId, edge: usize },
    Measure { v: PartyId },
    Isometry { v: PartyId },
    Send { from: PartyId, to: PartyId, edge: usize },
}

impl Action {
    fn is_random(&self) -> bool {
        matches!(self, Action::Compress { .. } | Action::Measure { .. })
    }
}

#[derive(Clone)]
struct SimState {
    regs: Vec<Reg>,
    dims: Vec<usize>,
    amps: Vec<C64>,
}

/// State reshaped once as `rest x inputs`, reusable across outcomes.
struct Prepared {
    regs: Vec<Reg>,
    dims: Vec<usize>,
    mat: DMatrix<C64>,
}

impl SimState {
    fn initial(p: &MeasurementProgram) -> Self {
        let mut regs = Vec::new();
        let mut dims = Vec::new();
        let mut amps = vec![C64::new(1.0, 0.0)];
        for (e, &m) in p.resources().iter().enumerate() {
            regs.push(Reg::Resource { edge: e, child_end: false });
            regs.push(Reg::Resource { edge: e, child_end: true });
            dims.extend([m, m]);
            let amp = C64::new(1.0 / (m as f64).sqrt(), 0.0);
            let mut pair = vec![C64::new(0.0, 0.0); m * m];
            for k in 0..m {
                pair[k * m + k] = amp;
            }
            amps = tensor::kron(&amps, &pair);
        }
        Self { regs, dims, amps }
    }

    fn prepare(&self, inputs: &[Reg]) -> Result<Prepared> {
        let mut perm = Vec::with_capacity(self.regs.len());
        let mut regs = Vec::new();
        let mut dims = Vec::new();
        for (i, r) in self.regs.iter().enumerate() {
            if !inputs.contains(r) {
                perm.push(i);
                regs.push(*r);
                dims.push(self.dims[i]);
            }
        }
        let mut in_dim = 1;
        for r in inputs {
            let i = self
                .regs
                .iter()
                .position(|x| x == r)
                .ok_or_else(|| Error::MalformedProgram(format!("register {r:?} is not live")))?;
            perm.push(i);
            in_dim *= self.dims[i];
        }
        let data = tensor::permute(&self.amps, &self.dims, &perm);
        let rest = data.len() / in_dim;
        Ok(Prepared {
            regs,
            dims,
            mat: tensor::as_matrix(&data, rest, in_dim),
        })
    }
}

impl Prepared {
    /// Applies `op` (`out x in`) and appends `out` as a new register; returns the squared norm.
    fn apply(&self, op: &DMatrix<C64>, out: Reg) -> Result<(SimState, f64)> {
        if op.ncols() != self.mat.ncols() {
            return Err(Error::MalformedProgram(format!(
                "operator with {} columns on registers of dimension {}",
                op.ncols(),
                self.mat.ncols()
            )));
        }
        let new = &self.mat * op.transpose();
        let amps = tensor::to_row_major(&new);
        let nrm = amps.iter().map(|z| z.norm_sqr()).sum();
        let mut regs = self.regs.clone();
        regs.push(out);
        let mut dims = self.dims.clone();
        dims.push(op.nrows());
        Ok((SimState { regs, dims, amps }, nrm))
    }
}

fn normalize(mut s: SimState, nrm: f64) -> SimState {
    let inv = 1.0 / nrm.sqrt();
    for a in &mut s.amps {
        *a *= inv;
    }
    s
}

/// Outcomes fixed so far.
#[derive(Clone)]
struct Ctx {
    compress: Vec<Option<usize>>,
    measure: Vec<Option<usize>>,
    choices: Vec<(usize, f64)>,
}

struct Runner<'a> {
    p: &'a MeasurementProgram,
    actions: Vec<Action>,
    opts: &'a SimOptions,
}

fn build_schedule(p: &MeasurementProgram, skip: Option<PartyId>) -> Vec<Action> {
    let t = p.tree();
    let mut actions = Vec::new();
    for &v in t.bfs_order() {
        if let Some(e) = t.edge_to(v) {
            if p.is_padded(e.index()) {
                actions.push(Action::Relabel { v, edge: e.index() });
            }
            if skip != Some(v) {
                actions.push(Action::Correct { v, edge: e.index() });
            }
        }
        for &c in t.children(v) {
            let e = t.edge_to(c).expect("child edge").index();
            if p.is_padded(e) {
                actions.push(Action::Compress { v, edge: e });
            }
        }
        if p.role(v) == Role::Leaf {
            actions.push(Action::Isometry { v });
        } else {
            actions.push(Action::Measure { v });
        }
        for &c in t.children(v) {
            let e = t.edge_to(c).expect("child edge").index();
            actions.push(Action::Send { from: v, to: c, edge: e });
        }
    }
    actions
}

impl<'a> Runner<'a> {
    fn new(p: &'a MeasurementProgram, opts: &'a SimOptions) -> Self {
        Self {
            p,
            actions: build_schedule(p, opts.skip_correction),
            opts,
        }
    }

    fn empty_ctx(&self) -> Ctx {
        Ctx {
            compress: vec![None; self.p.resources().len()],
            measure: vec![None; self.p.tree().n()],
            choices: Vec::new(),
        }
    }

    fn child_slot(&self, v: PartyId) -> (PartyId, usize) {
        let t = self.p.tree();
        let parent = t.parent(v).expect("non-root");
        let slot = t.children(parent).iter().position(|&c| c == v).expect("child of parent");
        (parent, slot)
    }

    fn received(&self, v: PartyId, ctx: &Ctx) -> Result<(usize, usize)> {
        let (parent, slot) = self.child_slot(v);
        let o = ctx.measure[parent.0]
            .ok_or_else(|| Error::MalformedProgram(format!("{} acted before its parent", self.p.tree().name(v))))?;
        Ok(self.p.decode_outcome(parent, o)[slot])
    }

    fn incoming(edge: usize) -> Reg {
        Reg::Resource { edge, child_end: true }
    }

    fn measure_inputs(&self, v: PartyId) -> Vec<Reg> {
        let t = self.p.tree();
        let mut inputs = Vec::new();
        if let Some(e) = t.edge_to(v) {
            inputs.push(Self::incoming(e.index()));
        }
        for &c in t.children(v) {
            let e = t.edge_to(c).expect("child edge").index();
            inputs.push(Reg::Resource { edge: e, child_end: false });
        }
        inputs
    }

    /// Applies deterministic actions from `pos`; stops at the next random action or the end.
    fn advance(&self, mut pos: usize, mut state: SimState, ctx: &Ctx) -> Result<(usize, SimState)> {
        while let Some(&a) = self.actions.get(pos) {
            match a {
                Action::Relabel { edge, .. } => {
                    let j = ctx.compress[edge]
                        .ok_or_else(|| Error::MalformedProgram("relabel before compression".into()))?;
                    let reg = Self::incoming(edge);
                    let (s, _) = state.prepare(&[reg])?.apply(&self.p.relabel_operator(edge, j), reg)?;
                    state = s;
                }
                Action::Correct { v, edge } => {
                    let (x, z) = self.received(v, ctx)?;
                    let reg = Self::incoming(edge);
                    let op = self.p.correction_operator(v, x, z)?;
                    state = state.prepare(&[reg])?.apply(&op, reg)?.0;
                }
                Action::Isometry { v } => {
                    let e = self.p.tree().edge_to(v).expect("leaf has a parent").index();
                    let op = self.p.leaf_isometry(v);
                    state = state.prepare(&[Self::incoming(e)])?.apply(&op, Reg::Target(v))?.0;
                }
                Action::Send { .. } => {}
                Action::Compress { .. } | Action::Measure { .. } => return Ok((pos, state)),
            }
            pos += 1;
        }
        Ok((pos, state))
    }

    /// Inputs, output register, outcome count and operator family of a random action.
    fn random_step(&self, a: Action) -> (Vec<Reg>, Reg, usize) {
        match a {
            Action::Compress { edge, .. } => {
                let reg = Reg::Resource { edge, child_end: false };
                (vec![reg], reg, self.p.resources()[edge])
            }
            Action::Measure { v } => (self.measure_inputs(v), Reg::Target(v), self.p.outcome_count(v)),
            _ => unreachable!("deterministic action"),
        }
    }

    fn operator(&self, a: Action, o: usize) -> DMatrix<C64> {
        match a {
            Action::Compress { edge, .. } => self.p.compression_operator(edge, o),
            Action::Measure { v } => self.p.measurement_operator(v, o),
            _ => unreachable!("deterministic action"),
        }
    }

    fn record(a: Action, o: usize, prob: f64, ctx: &mut Ctx) {
        match a {
            Action::Compress { edge, .. } => ctx.compress[edge] = Some(o),
            Action::Measure { v } => ctx.measure[v.0] = Some(o),
            _ => unreachable!("deterministic action"),
        }
        ctx.choices.push((o, prob));
    }

    fn enumerate(&self, pos: usize, state: SimState, ctx: Ctx, prob: f64) -> Result<Vec<Transcript>> {
        let (pos, state) = self.advance(pos, state, &ctx)?;
        let Some(&a) = self.actions.get(pos) else {
            return Ok(vec![self.finish(state, &ctx, prob)?]);
        };
        let (inputs, out, count) = self.random_step(a);
        let prepared = state.prepare(&inputs)?;
        let branches: Vec<Vec<Transcript>> = (0..count)
            .into_par_iter()
            .map(|o| {
                let (next, nrm) = prepared.apply(&self.operator(a, o), out)?;
                let p = prob * nrm;
                if p < self.opts.prune_tol {
                    return Ok(Vec::new());
                }
                let mut c = ctx.clone();
                Self::record(a, o, nrm, &mut c);
                self.enumerate(pos + 1, normalize(next, nrm), c, p)
            })
            .collect::<Result<_>>()?;
        Ok(branches.into_iter().flatten().collect())
    }

    fn sample(&self, seed: u64) -> Result<Transcript> {
        let t = self.p.tree();
        let mut rngs: Vec<Option<ChaCha8Rng>> = vec![None; t.n()];
        let mut ctx = self.empty_ctx();
        let mut state = SimState::initial(self.p);
        let mut pos = 0;
        let mut prob = 1.0;
        loop {
            let (p, s) = self.advance(pos, state, &ctx)?;
            let Some(&a) = self.actions.get(p) else {
                return self.finish(s, &ctx, prob);
            };
            let v = match a {
                Action::Compress { v, .. } | Action::Measure { v } => v,
                _ => unreachable!("deterministic action"),
            };
            let rng = rngs[v.0].get_or_insert_with(|| {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                r.set_stream(t.label(v) as u64);
                r
            });
            let (o, next, nrm) = self.draw(a, &s, rng)?;
            Self::record(a, o, nrm, &mut ctx);
            prob *= nrm;
            state = normalize(next, nrm);
            pos = p + 1;
        }
    }

    fn draw(&self, a: Action, s: &SimState, rng: &mut ChaCha8Rng) -> Result<(usize, SimState, f64)> {
        let (inputs, out, count) = self.random_step(a);
        let prepared = s.prepare(&inputs)?;
        if let Action::Measure { v } = a {
            if count > DIRECT_SAMPLING_LIMIT && !self.p.is_perturbed(v) {
                // exact rejection sampling against a uniform proposal
                let bound = self.p.operator_norm_bound(v) * (1.0 + 1e-9);
                for _ in 0..MAX_REJECTION_TRIALS {
                    let o = rng.random_range(0..count);
                    let (next, nrm) = prepared.apply(&self.operator(a, o), out)?;
                    if rng.random::<f64>() * bound < nrm {
                        return Ok((o, next, nrm));
                    }
                }
            }
        }
        let all: Vec<(SimState, f64)> = (0..count)
            .into_par_iter()
            .map(|o| prepared.apply(&self.operator(a, o), out))
            .collect::<Result<_>>()?;
        let total: f64 = all.iter().map(|x| x.1).sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = count - 1;
        for (o, (_, nrm)) in all.iter().enumerate() {
            if u < *nrm {
                pick = o;
                break;
            }
            u -= nrm;
        }
        while all[pick].1 <= 0.0 && pick > 0 {
            pick -= 1;
        }
        let (next, nrm) = all.into_iter().nth(pick).expect("outcome exists");
        Ok((pick, next, nrm))
    }

    fn forced(&self, seq: &[usize]) -> Result<Transcript> {
        let mut ctx = self.empty_ctx();
        let mut state = SimState::initial(self.p);
        let mut pos = 0;
        let mut prob = 1.0;
        let mut it = seq.iter();
        loop {
            let (p, s) = self.advance(pos, state, &ctx)?;
            let Some(&a) = self.actions.get(p) else {
                if it.next().is_some() {
                    return Err(Error::MalformedProgram(format!(
                        "branch has {} outcomes but the protocol has {} random steps",
                        seq.len(),
                        ctx.choices.len()
                    )));
                }
                return self.finish(s, &ctx, prob);
            };
            let (inputs, out, count) = self.random_step(a);
            let &o = it.next().ok_or_else(|| {
                Error::MalformedProgram(format!("branch has only {} outcomes", seq.len()))
            })?;
            if o >= count {
                return Err(Error::OutOfRangeIndex { index: o, dim: count });
            }
            let (next, nrm) = s.prepare(&inputs)?.apply(&self.operator(a, o), out)?;
            prob *= nrm;
            if prob < self.opts.prune_tol {
                return Err(Error::ZeroProbabilityBranch(prob));
            }
            Self::record(a, o, nrm, &mut ctx);
            state = normalize(next, nrm);
            pos = p + 1;
        }
    }

    fn finish(&self, s: SimState, ctx: &Ctx, prob: f64) -> Result<Transcript> {
        let t = self.p.tree();
        let n = t.n();
        if s.regs.len() != n {
            return Err(Error::MalformedProgram(format!(
                "{} registers remain after the protocol, expected {n}",
                s.regs.len()
            )));
        }
        let perm: Vec<usize> = (0..n)
            .map(|k| {
                s.regs
                    .iter()
                    .position(|r| *r == Reg::Target(PartyId(k)))
                    .ok_or_else(|| Error::MalformedProgram(format!("party {} has no target register", t.name(PartyId(k)))))
            })
            .collect::<Result<_>>()?;
        let amps = tensor::permute(&s.amps, &s.dims, &perm);
        let final_state = PureState::from_unnormalized(t.dims().to_vec(), amps)?;
        let fidelity = match &self.opts.target {
            Some(target) => Some(fidelity_pure(target, &final_state)?),
            None => None,
        };
        Ok(Transcript {
            schema_version: TRANSCRIPT_SCHEMA_VERSION,
            events: self.events(ctx)?,
            outcomes: ctx.choices.iter().map(|c| c.0).collect(),
            probability: prob,
            fidelity,
            final_registers: t.names().to_vec(),
            final_state,
        })
    }

    fn events(&self, ctx: &Ctx) -> Result<Vec<Event>> {
        let t = self.p.tree();
        let name = |v: PartyId| t.name(v).to_string();
        let mut out = Vec::with_capacity(self.actions.len());
        let mut slot = ctx.choices.iter();
        for &a in &self.actions {
            let ev = match a {
                Action::Compress { v, edge } => Event::Compression {
                    vertex: name(v),
                    edge: edge + 1,
                    outcome: ctx.compress[edge].expect("recorded"),
                    probability: slot.next().expect("recorded").1,
                },
                Action::Measure { v } => Event::Measurement {
                    vertex: name(v),
                    outcome: self.p.decode_outcome(v, ctx.measure[v.0].expect("recorded")),
                    probability: slot.next().expect("recorded").1,
                },
                Action::Send { from, to, edge } => {
                    let (x, z) = self.received(to, ctx)?;
                    Event::Message {
                        from: name(from),
                        to: name(to),
                        edge: edge + 1,
                        payload: Payload {
                            x,
                            z,
                            shift: ctx.compress[edge],
                            basis: BasisHandle {
                                edge: edge + 1,
                                rank: self.p.ranks()[edge],
                            },
                        },
                    }
                }
                Action::Relabel { v, edge } => Event::Relabel {
                    vertex: name(v),
                    edge: edge + 1,
                    shift: ctx.compress[edge].expect("recorded"),
                },
                Action::Correct { v, edge } => {
                    let (x, z) = self.received(v, ctx)?;
                    Event::Correction {
                        vertex: name(v),
                        edge: edge + 1,
                        x,
                        z,
                    }
                }
                Action::Isometry { v } => Event::Isometry {
                    vertex: name(v),
                    edge: t.edge_to(v).expect("leaf has a parent").label,
                },
            };
            out.push(ev);
        }
        Ok(out)
    }
}

/// Runs the protocol from the tree resource state. Sample and branch modes
/// return one transcript; enumeration returns every surviving branch.
pub fn simulate(p: &MeasurementProgram, mode: &Mode, opts: &SimOptions) -> Result<Vec<Transcript>> {
    if let Some(target) = &opts.target {
        if target.dims() != p.target_dims() {
            return Err(Error::DimensionMismatch(format!(
                "target dims {:?} vs program dims {:?}",
                target.dims(),
                p.target_dims()
            )));
        }
    }
    let runner = Runner::new(p, opts);
    match mode {
        Mode::EnumerateAll => {
            let ctx = runner.empty_ctx();
            runner.enumerate(0, SimState::initial(p), ctx, 1.0)
        }
        Mode::Sample(seed) => Ok(vec![runner.sample(*seed)?]),
        Mode::Branch(seq) => Ok(vec![runner.forced(seq)?]),
    }
}

/// Number of random steps (compressions and measurements) one run makes.
pub fn random_step_count(p: &MeasurementProgram) -> usize {
    build_schedule(p, None).iter().filter(|a| a.is_random()).count()
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationSummary {
    pub branches: usize,
    pub probability_total: f64,
    pub min_fidelity: Option<f64>,
    /// `m_e` by edge index.
    pub resources: Vec<usize>,
    pub total_ebits: f64,
}

pub fn summarize(p: &MeasurementProgram, runs: &[Transcript]) -> SimulationSummary {
    let min_fidelity = runs
        .iter()
        .filter_map(|r| r.fidelity)
        .fold(None, |acc: Option<f64>, f| Some(acc.map_or(f, |a| a.min(f))));
    SimulationSummary {
        branches: runs.len(),
        probability_total: runs.iter().map(|r| r.probability).sum(),
        min_fidelity,
        resources: p.resources().to_vec(),
        total_ebits: p.resources().iter().map(|&m| (m as f64).log2()).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::decomposition::decompose;
    use crate::protocol::program::{build_program, ResourceConfig};
    use crate::state::{ghz_state, w_state, NamedState};
    use crate::tree::RootedTree;

    fn program(s: &PureState, t: &RootedTree) -> MeasurementProgram {
        let d = decompose(s, t, &Config::default()).unwrap();
        build_program(&d, &ResourceConfig::optimal(&d)).unwrap()
    }

    #[test]
    fn w4_line_enumeration_is_deterministic() {
        let t = RootedTree::line(&[2; 4]).unwrap();
        let w = w_state(4);
        let p = program(&w, &t);
        let runs = simulate(&p, &Mode::EnumerateAll, &SimOptions::with_target(&w)).unwrap();
        assert_eq!(runs.len(), 64);
        let sum = summarize(&p, &runs);
        assert!((sum.probability_total - 1.0).abs() < 1e-9);
        assert!(sum.min_fidelity.unwrap() > 1.0 - 1e-9);
        assert_eq!(sum.total_ebits, 3.0);
        for r in &runs {
            assert!((r.probability - 1.0 / 64.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_and_branch_agree() {
        let t = RootedTree::random(&[2; 5], 9).unwrap();
        let g = ghz_state(5);
        let p = program(&g, &t);
        let opts = SimOptions::with_target(&g);
        let a = simulate(&p, &Mode::Sample(3), &opts).unwrap().remove(0);
        let b = simulate(&p, &Mode::Branch(a.outcomes.clone()), &opts).unwrap().remove(0);
        assert_eq!(a.events, b.events);
        assert!((a.probability - b.probability).abs() < 1e-15);
        assert!(a.fidelity.unwrap() > 1.0 - 1e-9);
        let again = simulate(&p, &Mode::Sample(3), &opts).unwrap().remove(0);
        assert_eq!(a.outcomes, again.outcomes);
    }

    #[test]
    fn rejection_sampling_on_wide_star() {
        let dims = [2; 6];
        let t = RootedTree::star(&dims).unwrap();
        let w = w_state(6);
        let p = program(&w, &t);
        assert!(p.outcome_count(t.root()) > DIRECT_SAMPLING_LIMIT);
        let opts = SimOptions::with_target(&w);
        for seed in 0..5 {
            let r = simulate(&p, &Mode::Sample(seed), &opts).unwrap().remove(0);
            assert!(r.fidelity.unwrap() > 1.0 - 1e-9);
        }
    }

    #[test]
    fn branch_mode_errors() {
        let t = RootedTree::line(&[2; 3]).unwrap();
        let s = NamedState::Product.build(&[2; 3]).unwrap();
        let p = program(&s, &t);
        assert!(matches!(simulate(&p, &Mode::Branch(vec![0]), &SimOptions::default()), Err(Error::MalformedProgram(_))));
        assert!(matches!(simulate(&p, &Mode::Branch(vec![0, 1]), &SimOptions::default()), Err(Error::OutOfRangeIndex { .. })));
        assert!(simulate(&p, &Mode::Branch(vec![0, 0]), &SimOptions::default()).is_ok());
    }

    #[test]
    fn skipped_correction_breaks_some_branch() {
        let t = RootedTree::line(&[2; 4]).unwrap();
        let w = w_state(4);
        let p = program(&w, &t);
        for v in 1..4 {
            let opts = SimOptions {
                skip_correction: Some(PartyId(v)),
                ..SimOptions::with_target(&w)
            };
            let runs = simulate(&p, &Mode::EnumerateAll, &opts).unwrap();
            let worst = runs.iter().filter_map(|r| r.fidelity).fold(1.0, f64::min);
            assert!(worst < 1.0 - 1e-6, "skipping correction at {v} kept fidelity {worst}");
        }
    }

    #[test]
    fn padded_resources_still_construct_the_target() {
        let t = RootedTree::line(&[2; 4]).unwrap();
        let w = w_state(4);
        let d = decompose(&w, &t, &Config::default()).unwrap();
        let mut r = ResourceConfig::optimal(&d);
        r.set(1, 3).unwrap();
        r.set(3, 4).unwrap();
        let p = build_program(&d, &r).unwrap();
        let runs = simulate(&p, &Mode::EnumerateAll, &SimOptions::with_target(&w)).unwrap();
        assert_eq!(runs.len(), 64 * 3 * 4);
        let sum = summarize(&p, &runs);
        assert!((sum.probability_total - 1.0).abs() < 1e-9);
        assert!(sum.min_fidelity.unwrap() > 1.0 - 1e-9);
    }

    #[test]
    fn events_follow_the_schedule() {
        let t = RootedTree::from_edges(&[2; 4], &[(0, 1), (0, 2), (2, 3)], 0).unwrap();
        let w = w_state(4);
        let p = program(&w, &t);
        let r = simulate(&p, &Mode::Sample(5), &SimOptions::with_target(&w)).unwrap().remove(0);
        // every non-root party gets exactly one message, before any of its own events
        for v in 1..4 {
            let name = t.name(PartyId(v)).to_string();
            let first_msg = r.events.iter().position(|e| matches!(e, Event::Message { to, .. } if *to == name));
            let msgs = r.events.iter().filter(|e| matches!(e, Event::Message { to, .. } if *to == name)).count();
            let first_own = r.events.iter().position(|e| e.vertex() == name);
            assert_eq!(msgs, 1);
            assert!(first_msg.unwrap() < first_own.unwrap());
        }
        let json = r.to_json().unwrap();
        assert!(json.contains("\"event\": \"measurement\""));
    }
}
