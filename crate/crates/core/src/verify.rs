//! Battery of structural and numerical invariants over seeded random
//! instances, run by the `verify` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::approx::{approx_state, union_bound_check};
use crate::config::Config;
use crate::cost::normal::{normal_cdf, normal_quantile};
use crate::cost::spectrum::{spectrum_entropy, Spectrum};
use crate::cost::thresholds::{optimize_thresholds, threshold_objective, uniform_thresholds};
use crate::decomposition::{decompose, recompose};
use crate::error::Result;
use crate::mps::{decomposition_from_mps, mps_canonical_form};
use crate::protocol::{build_program, check_completeness, simulate, summarize, Mode, ResourceConfig, SimOptions};
use crate::state::{fidelity_pure, schmidt_wrt_edge, w_state, NamedState, PureState};
use crate::tensor::C64;
use crate::tree::{PartyId, RootedTree};

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    /// First failing case, or `None`.
    pub failure: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random instances per check.
    pub trials: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 1, trials: 50 }
    }
}

/// Random state on a random tree with `2..=max_n` parties of dimension `2..=max_d`.
pub fn random_instance(seed: u64, max_n: usize, max_d: usize) -> Result<(PureState, RootedTree)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_n);
    let dims: Vec<usize> = (0..n).map(|_| rng.random_range(2..=max_d)).collect();
    let t = RootedTree::random(&dims, rng.random())?;
    let s = NamedState::Random(rng.random()).build(&dims)?;
    Ok((s, t))
}

struct Runner {
    checks: Vec<CheckResult>,
}

impl Runner {
    fn run(&mut self, name: &'static str, cases: usize, mut case: impl FnMut(usize) -> Result<Option<String>>) {
        let mut failure = None;
        for i in 0..cases {
            match case(i) {
                Ok(None) => {}
                Ok(Some(msg)) => {
                    failure = Some(format!("case {i}: {msg}"));
                    break;
                }
                Err(e) => {
                    failure = Some(format!("case {i}: {e}"));
                    break;
                }
            }
        }
        self.checks.push(CheckResult { name, passed: failure.is_none(), cases, failure });
    }
}

fn fail_if(cond: bool, msg: impl FnOnce() -> String) -> Option<String> {
    cond.then(msg)
}

pub fn run_verification(opts: &VerifyOptions, cfg: &Config) -> VerifyReport {
    let mut r = Runner { checks: Vec::new() };
    let seed = opts.seed;
    let trials = opts.trials.max(1);
    let inst = |i: usize| random_instance(seed.wrapping_mul(1_000_003).wrapping_add(i as u64), 5, 3);

    r.run("bipartitions partition the vertex set", trials, |i| {
        let (_, t) = inst(i)?;
        for e in t.edges() {
            let (a, b) = t.bipartition(e)?;
            let mut all: Vec<usize> = a.iter().chain(&b).map(|p| p.0).collect();
            all.sort_unstable();
            if a.is_empty() || b.is_empty() || all != (0..t.n()).collect::<Vec<_>>() {
                return Ok(Some(format!("edge e{}", e.label)));
            }
        }
        let children: usize = t.bfs_order().iter().map(|&v| t.children(v).len()).sum();
        Ok(fail_if(children + 1 != t.n(), || "child count".into()))
    });

    r.run("relabeling from the same root is the identity", trials, |i| {
        let (_, t) = inst(i)?;
        Ok(fail_if(t.reroot(t.root())? != t, || "labels changed".into()))
    });

    r.run("Schmidt ranks do not depend on the root", trials, |i| {
        let (s, t) = inst(i)?;
        for v in 0..t.n() {
            let u = t.reroot(PartyId(v))?;
            for e in t.edges() {
                let f = u.find_edge(e.parent, e.child).expect("same undirected edge");
                let a = schmidt_wrt_edge(&s, &t, e, cfg)?.rank;
                let b = schmidt_wrt_edge(&s, &u, &f, cfg)?.rank;
                if a != b {
                    return Ok(Some(format!("edge e{} rank {a} vs {b} at root {v}", e.label)));
                }
            }
        }
        Ok(None)
    });

    r.run("complementary reduced states share their spectrum", trials, |i| {
        let (s, t) = inst(i)?;
        for e in t.edges() {
            let (a, b) = t.bipartition(e)?;
            let mut la: Vec<f64> = s.reduced_state(&a)?.eigenvalues().into_iter().filter(|&x| x > 1e-12).collect();
            let mut lb: Vec<f64> = s.reduced_state(&b)?.eigenvalues().into_iter().filter(|&x| x > 1e-12).collect();
            la.sort_by(f64::total_cmp);
            lb.sort_by(f64::total_cmp);
            if la.len() != lb.len() || la.iter().zip(&lb).any(|(x, y)| (x - y).abs() > 1e-9) {
                return Ok(Some(format!("edge e{}", e.label)));
            }
        }
        Ok(None)
    });

    r.run("decomposition round trip and orthogonality", trials, |i| {
        let (s, t) = inst(i)?;
        let d = decompose(&s, &t, cfg)?;
        let f = fidelity_pure(&recompose(&d)?, &s)?;
        let dev = d.max_orthogonality_deviation();
        Ok(fail_if(f < 1.0 - 1e-12 || dev > 1e-9, || format!("fidelity {f}, orthogonality {dev:e}")))
    });

    r.run("every branch reaches the target", trials, |i| {
        let (s, t) = inst(i)?;
        let d = decompose(&s, &t, cfg)?;
        let p = build_program(&d, &ResourceConfig::optimal(&d))?;
        let c = check_completeness(&p, cfg.completeness_tol);
        if !c.passes {
            return Ok(Some(format!("completeness {:e}", c.max_deviation)));
        }
        let opts = SimOptions { prune_tol: cfg.prune_tol, ..SimOptions::with_target(&s) };
        let runs = simulate(&p, &Mode::EnumerateAll, &opts)?;
        let sum = summarize(&p, &runs);
        let f = sum.min_fidelity.unwrap_or(0.0);
        Ok(fail_if(f < 1.0 - cfg.fidelity_tol || (sum.probability_total - 1.0).abs() > 1e-9, || {
            format!("min fidelity {f}, probability {}", sum.probability_total)
        }))
    });

    r.run("skipping a correction breaks some branch", trials.min(20), |i| {
        let (s, t) = inst(i)?;
        let d = decompose(&s, &t, cfg)?;
        let p = build_program(&d, &ResourceConfig::optimal(&d))?;
        let Some(v) = t.bfs_order()[1..].iter().copied().find(|&v| {
            let e = t.edge_to(v).expect("non-root").index();
            p.ranks()[e] > 1
        }) else {
            return Ok(None);
        };
        let opts = SimOptions { skip_correction: Some(v), ..SimOptions::with_target(&s) };
        let runs = simulate(&p, &Mode::EnumerateAll, &opts)?;
        let f = summarize(&p, &runs).min_fidelity.unwrap_or(1.0);
        Ok(fail_if(f > 1.0 - 1e-6, || format!("all branches exact without the correction at {}", t.name(v))))
    });

    r.run("programs exist exactly when resources cover the ranks", trials, |i| {
        let (s, t) = inst(i)?;
        let d = decompose(&s, &t, cfg)?;
        let ranks = d.ranks();
        for (k, &rk) in ranks.iter().enumerate() {
            for m in [rk.saturating_sub(1).max(1), rk, rk + 1] {
                let mut res = ResourceConfig::optimal(&d);
                res.set(k + 1, m)?;
                if build_program(&d, &res).is_ok() != (m >= rk) {
                    return Ok(Some(format!("edge e{} rank {rk} resource {m}", k + 1)));
                }
            }
        }
        Ok(None)
    });

    r.run("canonical-form programs agree with the generic ones", trials.min(20), |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37 + i as u64));
        let n = rng.random_range(2..=5);
        let dims: Vec<usize> = (0..n).map(|_| rng.random_range(2..=3)).collect();
        let t = RootedTree::line(&dims)?;
        let s = NamedState::Random(rng.random()).build(&dims)?;
        let opts = SimOptions::with_target(&s);
        for d in [decomposition_from_mps(&mps_canonical_form(&s, &t, cfg)?)?, decompose(&s, &t, cfg)?] {
            let p = build_program(&d, &ResourceConfig::optimal(&d))?;
            let f = summarize(&p, &simulate(&p, &Mode::EnumerateAll, &opts)?).min_fidelity.unwrap_or(0.0);
            if f < 1.0 - 1e-9 {
                return Ok(Some(format!("min fidelity {f}")));
            }
        }
        Ok(None)
    });

    r.run("spectrum entropy is nonincreasing in the smoothing", trials, |i| {
        let spec = random_spectrum(seed.wrapping_add(7 * i as u64), 3)?;
        let mut prev = f64::INFINITY;
        for k in 1..50 {
            let h = spectrum_entropy(&spec, 6, k as f64 / 50.0, cfg.type_class_cap)?;
            if h > prev + 1e-9 {
                return Ok(Some(format!("eps {} gives {h} > {prev}", k as f64 / 50.0)));
            }
            prev = h;
        }
        Ok(None)
    });

    r.run("normal quantile inverts the distribution function", 1, |_| {
        for k in 0..=2000 {
            let p = 1e-6 + (1.0 - 2e-6) * k as f64 / 2000.0;
            let back = normal_cdf(normal_quantile(p)?);
            if (back - p).abs() > 1e-9 {
                return Ok(Some(format!("p {p}: {back}")));
            }
        }
        Ok(None)
    });

    r.run("optimized thresholds beat the uniform split", trials, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x5151 + i as u64));
        let m = rng.random_range(1..=6);
        let specs: Vec<Spectrum> = (0..m).map(|_| random_spectrum(rng.random(), 4)).collect::<Result<_>>()?;
        let eps = rng.random_range(0.001..1.4);
        let opt = threshold_objective(&specs, &optimize_thresholds(&specs, eps)?)?;
        let uni = threshold_objective(&specs, &uniform_thresholds(m, eps))?;
        Ok(fail_if(opt > uni + 1e-9, || format!("{opt} > {uni}")))
    });

    r.run("approximate state stays within the threshold bound", trials.min(20), |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x77 + i as u64));
        let t = RootedTree::line(&[2; 4])?;
        let thr: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..0.6)).collect();
        let a = approx_state(&w_state(4), &t, 2, &thr, cfg)?;
        Ok(fail_if(a.achieved_distance > a.bound + 1e-9, || {
            format!("distance {} bound {}", a.achieved_distance, a.bound)
        }))
    });

    r.run("sequential projections obey the union bound", trials, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0xabc + i as u64));
        let d = rng.random_range(2..=16);
        let (rho, projs) = random_union_instance(&mut rng, d);
        let u = union_bound_check(&rho, &projs)?;
        Ok(fail_if(!u.holds, || format!("lhs {} rhs {}", u.lhs, u.rhs)))
    });

    let passed = r.checks.iter().all(|c| c.passed);
    VerifyReport { schema_version: crate::cost::bounds::REPORT_SCHEMA_VERSION, seed, checks: r.checks, passed }
}

/// Random spectrum with `1..=max_levels` eigenvalues.
pub fn random_spectrum(seed: u64, max_levels: usize) -> Result<Spectrum> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(1..=max_levels);
    let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    Spectrum::new(w.into_iter().map(|x| (x / total, 1)).collect())
}

/// A random density operator and a sequence of high-retention projectors on `C^d`.
pub fn random_union_instance(
    rng: &mut ChaCha8Rng,
    d: usize,
) -> (crate::state::DensityOperator, Vec<nalgebra::DMatrix<C64>>) {
    use nalgebra::DMatrix;
    use rand_distr::{Distribution, StandardNormal};
    let mut gauss = |r: usize, c: usize| {
        DMatrix::from_fn(r, c, |_, _| {
            C64::new(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng))
        })
    };
    let g = gauss(d, d);
    let m = &g * g.adjoint();
    let tr = m.trace();
    let rho = crate::state::DensityOperator::new(m / tr, vec![d]).expect("square");
    let k = 1 + (d % 4);
    let mut projs = Vec::with_capacity(k);
    for _ in 0..k {
        // orthonormal frame from a perturbed identity, keep all but one direction
        let a = DMatrix::<C64>::identity(d, d) + gauss(d, d) * C64::new(0.15, 0.0);
        let q = a.qr().q();
        let keep = d.saturating_sub(1).max(1);
        let basis = q.columns(0, keep).into_owned();
        projs.push(&basis * basis.adjoint());
    }
    (rho, projs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_battery_passes() {
        let rep = run_verification(&VerifyOptions { seed: 3, trials: 8 }, &Config::default());
        for c in &rep.checks {
            assert!(c.passed, "{}: {:?}", c.name, c.failure);
        }
        assert!(rep.passed);
    }

    #[test]
    fn instances_are_reproducible() {
        let (a, t) = random_instance(11, 5, 3).unwrap();
        let (b, u) = random_instance(11, 5, 3).unwrap();
        assert_eq!(t, u);
        assert_eq!(a.amplitudes(), b.amplitudes());
    }
}
