// Randomized identity checks shared by the `properties` and `acceptance`
// targets. Each property is a plain function that panics on failure.

use std::sync::Arc;

use hyperest::dg::{DgFunction, DgOperator, DgSpace};
use hyperest::flux::{flux_w, numerical_flux, FluxKind, FluxSpec};
use hyperest::legendre::legendre_eval;
use hyperest::mesh::{Grading, Mesh1D};
use hyperest::ode_recon::{
    divided_difference, hermite_interval, HermiteNode, ReconSpec, TemporalRecon,
};
use hyperest::quadrature::gauss_rule;
use hyperest::spacetime::{spatial_reconstruct, ResidualField, Sampling};
use hyperest::system::{Advection, Burgers, Euler, System};
use hyperest::time_integration::{evolve, DgRhs, Stepper, TimeGrid};
use proptest::prelude::*;

pub const CASES: u32 = 128;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(CASES)
}

/// Periodic mesh on `[0, 2]` from positive relative widths.
fn mesh_from(widths: &[f64]) -> Arc<Mesh1D> {
    let total: f64 = widths.iter().sum();
    let mut nodes = vec![0.0];
    let mut x = 0.0;
    for w in widths {
        x += 2.0 * w / total;
        nodes.push(x);
    }
    *nodes.last_mut().unwrap() = 2.0;
    Arc::new(Mesh1D::build((0.0, 2.0), widths.len(), Grading::Nodes(nodes)).unwrap())
}

fn kind_from(i: usize) -> FluxKind {
    [
        FluxKind::CentralW,
        FluxKind::Llf,
        FluxKind::RichtmyerVisc,
        FluxKind::RoeAvg,
        FluxKind::RoeChar,
    ][i % 5]
}

fn spec_from(kind: FluxKind, lambda: f64, mu: f64) -> FluxSpec {
    FluxSpec::new(kind).with_lambda(lambda).with_mu(mu)
}

/// `sum_k c_k t^k` and its derivatives.
fn poly_derivs(c: &[f64], t: f64, order: usize) -> Vec<f64> {
    (0..=order)
        .map(|j| {
            c.iter()
                .enumerate()
                .skip(j)
                .map(|(k, ck)| {
                    let falling: f64 = (0..j).map(|i| (k - i) as f64).product();
                    ck * falling * t.powi((k - j) as i32)
                })
                .sum()
        })
        .collect()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

proptest! {
    #![proptest_config(config())]

    /// The Hermite interpolant reproduces every prescribed value and
    /// derivative at its nodes.
    fn hermite_interpolation_conditions(
        gaps in prop::collection::vec(0.2f64..1.0, 1..4),
        mults in prop::collection::vec(1usize..4, 4),
        data in prop::collection::vec(-2.0f64..2.0, 16),
        tau in 0.01f64..1.0,
        t0 in -1.0f64..1.0,
    ) {
        let mut ts = vec![t0];
        for g in &gaps {
            ts.push(ts.last().unwrap() + g * tau);
        }
        let mut k = 0;
        let values: Vec<Vec<Vec<f64>>> = ts
            .iter()
            .enumerate()
            .map(|(i, _)| {
                (0..mults[i])
                    .map(|_| {
                        k += 1;
                        vec![data[k - 1]]
                    })
                    .collect()
            })
            .collect();
        let nodes: Vec<HermiteNode> = ts
            .iter()
            .zip(&values)
            .map(|(&t, v)| HermiteNode { t, derivs: v.iter().map(|d| d.as_slice()).collect() })
            .collect();
        let n = ts.len();
        let poly = hermite_interval(ts[n - 2], ts[n - 1], &nodes).unwrap();
        for (i, &t) in ts.iter().enumerate() {
            let got = poly.derivatives(t, mults[i] - 1);
            for (j, want) in values[i].iter().enumerate() {
                let scale = tau.powi(-(j as i32)) * (1.0 + want[0].abs());
                prop_assert!(
                    (got[j][0] - want[0]).abs() <= 1e-8 * scale.max(1.0),
                    "node {} derivative {}: {} vs {}", i, j, got[j][0], want[0]
                );
            }
        }
    }

    /// Trajectory reconstructions pass through the states and match `F` at
    /// every node where a slope is prescribed, for every supported `H(p, d, r)`.
    fn temporal_reconstruction_matches_nodes(
        p in 0usize..3,
        d in 0usize..2,
        r in -1i32..2,
        steps in 8usize..14,
        tau in 0.01f64..0.1,
        a in 0.1f64..2.0,
    ) {
        let rhs = move |t: f64, u: &[f64], out: &mut [f64]| {
            out[0] = -a * u[0] + t.sin();
            out[1] = u[0] - u[1] * u[1];
            Ok(())
        };
        let grid = TimeGrid::new(0.0, tau, steps);
        let traj = evolve(&rhs, &[1.0, 0.5], &grid, Stepper::Rk4Classic).unwrap();
        let spec = ReconSpec::new(p, d, r);
        let recon = TemporalRecon::new(&traj, spec, Some(&rhs), None).unwrap();
        let poly = recon.materialize().unwrap();
        for n in 0..steps {
            for node in [n, n + 1] {
                let t = grid.time(node);
                let piece = &poly.intervals[n];
                let v = piece.value(t);
                let dv = piece.derivative(t);
                let mut f = [0.0; 2];
                rhs(t, &traj.states[node], &mut f).unwrap();
                let slope_prescribed = node == n || r >= 0;
                for c in 0..2 {
                    prop_assert!((v[c] - traj.states[node][c]).abs() < 1e-11);
                    if slope_prescribed {
                        prop_assert!((dv[c] - f[c]).abs() < 1e-9 * (1.0 + f[c].abs()));
                    }
                }
            }
        }
    }

    /// Confluent divided differences obey the recursion for distinct end
    /// nodes and reduce to scaled derivatives on repeated nodes.
    fn divided_difference_recursion(
        c in prop::collection::vec(-1.0f64..1.0, 6),
        z in prop::collection::vec(-1.0f64..1.0, 3),
        mults in prop::collection::vec(1usize..3, 3),
    ) {
        let mut z = z;
        z.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assume!(z.windows(2).all(|w| w[1] - w[0] > 0.05));
        let entry = |t: f64, m: usize| (t, poly_derivs(&c, t, m - 1));
        let full: Vec<(f64, Vec<f64>)> = z.iter().zip(&mults).map(|(&t, &m)| entry(t, m)).collect();
        // Drop one copy of the first node, then one copy of the last.
        let mut without_first = full.clone();
        if mults[0] == 1 {
            without_first.remove(0);
        } else {
            without_first[0] = entry(z[0], mults[0] - 1);
        }
        let mut without_last = full.clone();
        let last = full.len() - 1;
        if mults[last] == 1 {
            without_last.remove(last);
        } else {
            without_last[last] = entry(z[last], mults[last] - 1);
        }
        let lhs = divided_difference(&full);
        let rhs = (divided_difference(&without_first) - divided_difference(&without_last)) / (z[last] - z[0]);
        prop_assert!((lhs - rhs).abs() < 1e-8 * (1.0 + lhs.abs()), "{} vs {}", lhs, rhs);

        for k in 0..3 {
            let dd = divided_difference(&[entry(z[1], k + 1)]);
            let want = poly_derivs(&c, z[1], k)[k] / factorial(k);
            prop_assert!((dd - want).abs() < 1e-12 * (1.0 + want.abs()));
        }
    }

    /// An n-point Gauss rule integrates polynomials of degree 2n - 1 exactly.
    fn gauss_exactness(
        n in 1usize..=20,
        c in prop::collection::vec(-1.0f64..1.0, 40),
        a in -3.0f64..3.0,
        len in 0.1f64..4.0,
    ) {
        let deg = 2 * n - 1;
        let b = a + len;
        let rule = gauss_rule(n).unwrap();
        let got = rule.integrate(a, b, |x| poly_derivs(&c[..=deg], x, 0)[0]);
        let want: f64 = c[..=deg]
            .iter()
            .enumerate()
            .map(|(k, ck)| ck * (b.powi(k as i32 + 1) - a.powi(k as i32 + 1)) / (k + 1) as f64)
            .sum();
        let scale: f64 = c[..=deg].iter().enumerate().map(|(k, ck)| ck.abs() * a.abs().max(b.abs()).powi(k as i32 + 1)).sum();
        prop_assert!((got - want).abs() <= 1e-12 * scale.max(1.0), "{} vs {}", got, want);
    }

    /// `G(a, a) = g(a)` for every flux kind on every built-in system.
    fn flux_consistency(
        kind in 0usize..5,
        lambda in 0.0f64..1.0,
        mu in 0.0f64..1.0,
        rho in 0.2f64..3.0,
        vel in -2.0f64..2.0,
        p in 0.2f64..3.0,
        s in -3.0f64..3.0,
    ) {
        let spec = spec_from(kind_from(kind), lambda, mu);
        let euler = Euler { gamma: 1.4 };
        let cases: Vec<(Box<dyn System>, Vec<f64>)> = vec![
            (Box::new(Advection { speed: 8.0 }), vec![s]),
            (Box::new(Advection { speed: -2.5 }), vec![s]),
            (Box::new(Burgers), vec![s]),
            (Box::new(euler), euler.from_primitive(rho, vel, p).to_vec()),
        ];
        for (sys, a) in cases {
            let m = sys.dim();
            let mut g = vec![0.0; m];
            let mut big_g = vec![0.0; m];
            sys.flux(&a, &mut g);
            numerical_flux(&*sys, &spec, &a, &a, 0.1, &mut big_g).unwrap();
            for c in 0..m {
                prop_assert!((g[c] - big_g[c]).abs() <= 1e-12 * (1.0 + g[c].abs()), "{}: {:?} vs {:?}", sys.name(), g, big_g);
            }
            let mut w = vec![0.0; m];
            flux_w(&*sys, &spec, &a, &a, 0.1, &mut w).unwrap();
            for c in 0..m {
                prop_assert!((w[c] - a[c]).abs() <= 1e-12 * (1.0 + a[c].abs()));
            }
        }
    }

    /// The DG operator is conservative: `∫ f(u) = 0` on a periodic mesh.
    fn operator_conserves(
        widths in prop::collection::vec(0.5f64..1.5, 4..10),
        q in 0usize..4,
        kind in 0usize..5,
        coeffs in prop::collection::vec(-0.3f64..0.3, 120),
        lambda in 0.0f64..0.5,
        mu in 0.0f64..1.0,
        euler in any::<bool>(),
    ) {
        let mesh = mesh_from(&widths);
        let sys: Box<dyn System> = if euler { Box::new(Euler { gamma: 1.4 }) } else { Box::new(Burgers) };
        let m = sys.dim();
        let space = DgSpace::new(mesh, q, m);
        let mut u = space.zeros();
        let mut i = 0;
        for cell in 0..widths.len() {
            for comp in 0..m {
                for k in 0..=q {
                    let base = if k == 0 { [1.0, 0.3, 2.5][comp] * space.mesh().width(cell).sqrt() } else { 0.0 };
                    let scale = space.mesh().width(cell).sqrt() * 0.2_f64.powi(k as i32);
                    u.coeffs_mut()[space.index(cell, comp, k)] = base + scale * coeffs[i % coeffs.len()];
                    i += 1;
                }
            }
        }
        let spec = spec_from(kind_from(kind), lambda, mu);
        let op = DgOperator::new(&*sys, spec, space.clone()).unwrap();
        let f = match op.apply(&u) {
            Ok(f) => f,
            Err(_) => return Ok(()),
        };
        let total = f.integral();
        let scale: f64 = f.coeffs().iter().map(|c| c.abs()).sum::<f64>().max(1.0);
        for (c, t) in total.iter().enumerate() {
            prop_assert!(t.abs() <= 1e-12 * scale, "component {}: {}", c, t);
        }
    }

    /// The spatial reconstruction keeps the moments of degree below `q`
    /// and takes the value `w(u⁻, u⁺)` from both sides of every interface.
    fn spatial_reconstruction_conditions(
        widths in prop::collection::vec(0.5f64..1.5, 3..9),
        q in 0usize..4,
        kind in 0usize..5,
        coeffs in prop::collection::vec(-1.0f64..1.0, 64),
        lambda in 0.0f64..0.3,
        burgers in any::<bool>(),
    ) {
        let mesh = mesh_from(&widths);
        let sys: Box<dyn System> = if burgers { Box::new(Burgers) } else { Box::new(Advection { speed: 3.0 }) };
        let space = DgSpace::new(mesh.clone(), q, 1);
        let coeffs: Vec<f64> = (0..space.len()).map(|i| coeffs[i % coeffs.len()]).collect();
        let u = space.function(coeffs);
        let spec = spec_from(kind_from(kind), lambda, 0.0);
        let ust = spatial_reconstruct(&u, &*sys, &spec).unwrap();
        prop_assert_eq!(ust.space().degree(), q + 1);

        // Moments against Legendre polynomials, by an independent quadrature.
        let rule = gauss_rule(q + 4).unwrap();
        for cell in 0..mesh.cells() {
            for k in 0..q {
                let mut moment = 0.0;
                let mut size = 0.0;
                for (xi, w) in rule.iter() {
                    let mut a = [0.0];
                    let mut b = [0.0];
                    ust.eval_cell(cell, xi, &mut a);
                    u.eval_cell(cell, xi, &mut b);
                    let pk = legendre_eval(k, xi).0;
                    moment += w * (a[0] - b[0]) * pk;
                    size += w * (a[0].abs() + b[0].abs());
                }
                prop_assert!(moment.abs() <= 1e-12 * size.max(1.0), "cell {} moment {}: {}", cell, k, moment);
            }
        }
        for i in 0..mesh.cells() {
            let (minus, plus, _) = u.traces(i);
            let mut w = [0.0];
            flux_w(&*sys, &spec, &minus, &plus, mesh.interface_width(i), &mut w).unwrap();
            let (rm, rp, _) = ust.traces(i);
            prop_assert!((rm[0] - w[0]).abs() < 1e-11 * (1.0 + w[0].abs()));
            prop_assert!((rp[0] - w[0]).abs() < 1e-11 * (1.0 + w[0].abs()));
        }
    }
}

/// A short Burgers run whose residual field the split test probes.
fn burgers_run(q: usize, kind: FluxKind) -> (Box<dyn System>, DgSpace, Vec<Vec<f64>>, f64) {
    let sys: Box<dyn System> = Box::new(Burgers);
    let cells = 12;
    let mesh = Arc::new(Mesh1D::uniform(0.0, 2.0, cells).unwrap());
    let space = DgSpace::new(mesh, q, 1);
    let tau = 0.004;
    let spec = FluxSpec::new(kind).with_lambda(tau / (2.0 / cells as f64));
    let op = DgOperator::new(&*sys, spec, space.clone()).unwrap();
    let u0 = space
        .project(q + 4, |x, out| {
            out[0] = 0.5 + 0.3 * (std::f64::consts::PI * x).sin()
        })
        .unwrap();
    let grid = TimeGrid::new(0.0, tau, 12);
    let traj = evolve(&DgRhs::new(&op), u0.coeffs(), &grid, Stepper::Rk3Ssp).unwrap();
    (sys, space, traj.states, tau)
}

proptest! {
    #![proptest_config(config())]

    /// `R^st = R^s + R^t` pointwise, and `R^st` agrees with difference
    /// quotients of the reconstruction itself.
    fn residual_split(
        q in 0usize..3,
        kind in prop::sample::select(vec![FluxKind::RichtmyerVisc, FluxKind::Llf, FluxKind::RoeChar]),
        t in 0.002f64..0.046,
        x in 0.0f64..2.0,
    ) {
        let (sys, space, states, tau) = burgers_run(q, kind);
        let h = space.mesh().h();
        let spec = FluxSpec::new(kind).with_lambda(tau / h);
        let op = DgOperator::new(&*sys, spec, space.clone()).unwrap();
        let rhs = DgRhs::new(&op);
        let grid = TimeGrid::new(0.0, tau, states.len() - 1);
        let traj = evolve(&rhs, &states[0], &grid, Stepper::Rk3Ssp).unwrap();
        let recon = TemporalRecon::new(&traj, ReconSpec::new(0, 0, 0), Some(&rhs), None).unwrap();
        let field = ResidualField::new(&recon, &op, Sampling::default());
        let sample = field.probe(t, x).unwrap();
        prop_assert!((sample.st[0] - sample.s[0] - sample.t[0]).abs() < 1e-10 * (1.0 + sample.st[0].abs()));

        // Stay clear of breakpoints so that one-sided limits coincide.
        let (cell, xi) = space.mesh().locate(x);
        prop_assume!(xi.abs() < 0.98);
        let theta = (t / tau).fract();
        prop_assume!(theta > 0.05 && theta < 0.95);
        let dt = 1e-5 * tau;
        let value = |s: f64| -> DgFunction { field.reconstruction_at(s).unwrap().0 };
        let (up, um, u0) = (value(t + dt), value(t - dt), value(t));
        let mut a = [0.0];
        let mut b = [0.0];
        up.eval_cell(cell, xi, &mut a);
        um.eval_cell(cell, xi, &mut b);
        let ut = (a[0] - b[0]) / (2.0 * dt);
        let mut v = [0.0];
        let mut vx = [0.0];
        u0.eval_cell(cell, xi, &mut v);
        u0.eval_dx_cell(cell, xi, &mut vx);
        let direct = ut + v[0] * vx[0];
        prop_assert!((sample.st[0] - direct).abs() < 1e-5 * (1.0 + direct.abs()), "{} vs {}", sample.st[0], direct);
    }
}

/// Every property, by name.
pub const PROPERTIES: &[(&str, fn())] = &[
    (
        "hermite_interpolation_conditions",
        hermite_interpolation_conditions,
    ),
    (
        "temporal_reconstruction_matches_nodes",
        temporal_reconstruction_matches_nodes,
    ),
    ("divided_difference_recursion", divided_difference_recursion),
    ("gauss_exactness", gauss_exactness),
    ("flux_consistency", flux_consistency),
    ("operator_conserves", operator_conserves),
    (
        "spatial_reconstruction_conditions",
        spatial_reconstruction_conditions,
    ),
    ("residual_split", residual_split),
];
