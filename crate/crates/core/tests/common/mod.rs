//! Strategies and property checks shared by the property suites and the
//! acceptance runner.
#![allow(dead_code)]

use domino_hydro::equilibrium::{hamiltonian, hessian_det, local_probs, solve_angles, spider_weights, Slope};
use domino_hydro::height::{phi_bruteforce_oracle, phi_from_profile, pyramid_oracle, rooted_pyramid, HeightField, Profile};
use domino_hydro::lattice::{parity_residue, Face, Rect};
use domino_hydro::pde::{grid_for, solve, PdeGrid, PdeParams};
use domino_hydro::height::SampleGrid;
use domino_hydro::shuffle::{evolve, evolve_coupled, evolve_with, OmegaSource};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub type Check = Result<(), TestCaseError>;

/// `c + r . x + a1 sin(k1 x + p1) + a2 sin(k2 y + p2)`, scaled so that
/// `|r1| + |a1 k1| + |r2| + |a2 k2| <= 2`, hence 2-Lipschitz in the sup norm.
#[derive(Debug, Clone, Copy)]
pub struct Wave {
    pub c: f64,
    pub r: [f64; 2],
    pub amp: [f64; 2],
    pub freq: [f64; 2],
    pub phase: [f64; 2],
}

impl Wave {
    pub fn profile(self) -> Profile {
        let Wave { c, r, amp, freq, phase } = self;
        Profile::certified("wave", move |x: f64, y: f64| {
            c + r[0] * x + r[1] * y + amp[0] * (freq[0] * x + phase[0]).sin() + amp[1] * (freq[1] * y + phase[1]).sin()
        })
    }

    pub fn shifted(self, dc: f64) -> Wave {
        Wave { c: self.c + dc, ..self }
    }
}

pub fn wave() -> impl Strategy<Value = Wave> {
    (
        -2.0f64..2.0,
        prop::array::uniform2(-2.0f64..2.0),
        prop::array::uniform2(0.0f64..2.0),
        prop::array::uniform2(0.5f64..6.0),
        prop::array::uniform2(0.0f64..6.3),
    )
        .prop_map(|(c, r, amp, freq, phase)| {
            let total = r[0].abs() + r[1].abs() + amp[0] * freq[0] + amp[1] * freq[1];
            let s = if total > 2.0 { 2.0 / total } else { 1.0 };
            Wave {
                c,
                r: [r[0] * s, r[1] * s],
                amp: [amp[0] * s, amp[1] * s],
                freq,
                phase,
            }
        })
}

/// A random admissible field on `Rect::centered(0, half)`: `phi_g^n` of a
/// random profile, optionally shuffled a few times.
#[derive(Debug, Clone, Copy)]
pub struct FieldSpec {
    pub wave: Wave,
    pub n: u32,
    pub seed: u64,
    pub a: f64,
    pub pre_steps: u64,
}

impl FieldSpec {
    pub fn build(&self, half: usize) -> HeightField {
        let window = Rect::centered(Face::ORIGIN, half + 2 * self.pre_steps as usize);
        let phi = phi_from_profile(&self.wave.profile(), self.n, window).unwrap();
        let (out, _) = evolve(&phi, &OmegaSource::new(self.seed, self.a), self.pre_steps).unwrap();
        out.restrict(Rect::centered(Face::ORIGIN, half)).unwrap()
    }
}

pub fn weight() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), 0.2f64..5.0]
}

pub fn field_spec() -> impl Strategy<Value = FieldSpec> {
    (wave(), prop::sample::select(vec![2u32, 4, 8, 16, 32]), any::<u64>(), weight(), 0u64..4).prop_map(
        |(wave, n, seed, a, pre_steps)| FieldSpec {
            wave,
            n,
            seed,
            a,
            pre_steps,
        },
    )
}

fn admissible(f: &HeightField) -> bool {
    match f.valid_rect() {
        Some(r) => f.restrict(r).map(|g| g.is_admissible()).unwrap_or(false),
        None => true,
    }
}

// ---- height functions ----

pub fn meet_join_closure(p: FieldSpec, q: FieldSpec) -> Check {
    let (f, g) = (p.build(4), q.build(4));
    let lo = f.meet(&g).unwrap();
    let hi = f.join(&g).unwrap();
    prop_assert!(lo.check_admissible().is_empty());
    prop_assert!(hi.check_admissible().is_empty());
    for ((x, y), (l, h)) in f.values().iter().zip(g.values()).zip(lo.values().iter().zip(hi.values())) {
        prop_assert_eq!(*l, (*x).min(*y));
        prop_assert_eq!(*h, (*x).max(*y));
    }
    Ok(())
}

pub fn residues_match(p: FieldSpec) -> Check {
    let f = p.build(6);
    let base = f.get(Face::ORIGIN).unwrap();
    for (x, h) in f.iter_valid() {
        prop_assert_eq!((h - base).rem_euclid(4) as u8, parity_residue(x), "face {:?}", x);
    }
    Ok(())
}

pub fn pyramid_is_minimal(p: FieldSpec) -> Check {
    let radius = 6;
    let v = pyramid_oracle(radius).unwrap();
    let f = p.build(radius);
    let base = f.get(Face::ORIGIN).unwrap();
    for (x, vx) in v.entries() {
        prop_assert!(f.get(x).unwrap() - base >= vx, "face {:?}", x);
    }
    Ok(())
}

pub fn sandwich(w: Wave, n: u32) -> Check {
    let g = w.profile();
    let phi = phi_from_profile(&g, n, Rect::centered(Face::ORIGIN, 12)).unwrap();
    prop_assert!(phi.is_admissible());
    let nf = n as f64;
    for (x, h) in phi.iter_valid() {
        let target = nf * g.eval(x.i as f64 / nf, x.j as f64 / nf);
        prop_assert!(target - 4.0 < h as f64 && h as f64 <= target + 1.0, "face {:?}: {} vs {}", x, h, target);
    }
    Ok(())
}

pub fn oracle_equivalence(w: Wave, n: u32) -> Check {
    let g = w.profile();
    let window = Rect::centered(Face::ORIGIN, 3);
    let fast = phi_from_profile(&g, n, window).unwrap();
    let slow = phi_bruteforce_oracle(&g, n, window).unwrap();
    for x in window.faces().filter(|x| x.l1() <= 3) {
        prop_assert_eq!(fast.get(x), slow.get(x), "face {:?}", x);
    }
    Ok(())
}

/// Every `PyramidTable` invariant for radii `1..=max_radius`.
pub fn pyramid_invariants(max_radius: usize) -> Result<(), String> {
    for radius in 1..=max_radius {
        let v = pyramid_oracle(radius).map_err(|e| e.to_string())?;
        if v.value(Face::ORIGIN) != Some(0) {
            return Err(format!("radius {radius}: v(0) != 0"));
        }
        if !v.field().is_admissible() {
            return Err(format!("radius {radius}: table not admissible"));
        }
        let mut count = 0;
        for (x, vx) in v.entries() {
            count += 1;
            let cone = -2 * x.linf() as i32;
            if v.value(-x) != Some(vx) {
                return Err(format!("radius {radius}: v{x:?} != v(-x)"));
            }
            if vx > cone + 1 {
                return Err(format!("radius {radius}: v{x:?} = {vx} above -2|x|+1"));
            }
            if (vx == cone) != x.is_even() {
                return Err(format!("radius {radius}: v{x:?} = {vx}, even = {}", x.is_even()));
            }
        }
        let r = radius as i64;
        if count != (2 * r * r + 2 * r + 1) as usize {
            return Err(format!("radius {radius}: {count} entries"));
        }
    }
    Ok(())
}

/// Residues of all fields on the 3x3 window around the origin that obey the
/// crossing rule and vanish at the origin, found by exhaustive search.
pub fn enumerated_residues() -> Vec<(Face, Vec<u8>)> {
    use domino_hydro::lattice::{allowed_differences, Dir};
    let window = Rect::centered(Face::ORIGIN, 1);
    let faces: Vec<Face> = window.faces().collect();
    let mut seen: Vec<Vec<u8>> = vec![Vec::new(); faces.len()];
    let mut values: Vec<Option<i32>> = vec![None; faces.len()];
    let origin = window.index(Face::ORIGIN).unwrap();
    values[origin] = Some(0);

    fn search(
        k: usize,
        faces: &[Face],
        window: &Rect,
        values: &mut Vec<Option<i32>>,
        seen: &mut Vec<Vec<u8>>,
        origin: usize,
    ) {
        if k == faces.len() {
            for (s, v) in seen.iter_mut().zip(values.iter()) {
                let r = v.unwrap().rem_euclid(4) as u8;
                if !s.contains(&r) {
                    s.push(r);
                }
            }
            return;
        }
        if k == origin {
            return search(k + 1, faces, window, values, seen, origin);
        }
        let x = faces[k];
        'candidates: for h in -12..=12 {
            for dir in Dir::ALL {
                let y = x.step(dir);
                if let Some(hy) = window.index(y).and_then(|i| values[i]) {
                    if !allowed_differences(y, dir.opposite()).contains(&(h - hy)) {
                        continue 'candidates;
                    }
                }
            }
            values[k] = Some(h);
            search(k + 1, faces, window, values, seen, origin);
            values[k] = None;
        }
    }

    search(0, &faces, &window, &mut values, &mut seen, origin);
    faces.into_iter().zip(seen).collect()
}

// ---- shuffling ----

/// Mod-4 conservation, drops in `{0, -4}`, vertical bound and
/// admissibility after every shuffle.
pub fn step_invariants(p: FieldSpec, seed: u64, a: f64, steps: u64) -> Check {
    let half = 4 + 2 * steps as usize;
    let phi = p.build(half);
    let mut prev = phi.clone();
    let mut failure = None;
    evolve_with(&phi, &OmegaSource::new(seed, a), steps, |t, f| {
        if failure.is_some() {
            return Ok(());
        }
        if !admissible(f) {
            failure = Some(format!("inadmissible after shuffle {t}"));
        }
        for (x, h) in f.iter_valid() {
            let (h0, hp) = (phi.get_raw(x).unwrap(), prev.get_raw(x).unwrap());
            let d = h - hp;
            if d != 0 && d != -4 {
                failure = Some(format!("face {x:?} changed by {d} in shuffle {t}"));
            }
            if (h - h0).rem_euclid(4) != 0 {
                failure = Some(format!("face {x:?} changed class in shuffle {t}"));
            }
            if !(h0 - 4 * t as i32 <= h && h <= h0) {
                failure = Some(format!("face {x:?} outside [phi - 4t, phi] at t = {t}"));
            }
        }
        prev = f.clone();
        Ok(())
    })
    .unwrap();
    match failure {
        Some(m) => Err(TestCaseError::fail(m)),
        None => Ok(()),
    }
}

pub fn vertical_shift(p: FieldSpec, k: i32, seed: u64, steps: u64) -> Check {
    let phi = p.build(3 + 2 * steps as usize);
    let out = evolve_coupled(&[phi.clone(), phi.add_constant(4 * k)], &OmegaSource::new(seed, p.a), steps).unwrap();
    for (x, h) in out[0].iter_valid() {
        prop_assert_eq!(out[1].get(x), Some(h + 4 * k));
    }
    Ok(())
}

pub fn semigroup(p: FieldSpec, seed: u64, s: u64, r: u64) -> Check {
    let phi = p.build(3 + 2 * (s + r) as usize);
    let omega = OmegaSource::new(seed, p.a);
    let (direct, _) = evolve(&phi, &omega, s + r).unwrap();
    let (mid, _) = evolve(&phi, &omega, s).unwrap();
    let (restarted, _) = evolve(&mid, &omega.shift_time(s), r).unwrap();
    prop_assert_eq!(direct.valid_rect(), restarted.valid_rect());
    for (x, h) in direct.iter_valid() {
        prop_assert_eq!(restarted.get(x), Some(h));
    }
    Ok(())
}

pub fn monotone_coupling(p: FieldSpec, q: FieldSpec, seed: u64, steps: u64) -> Check {
    let half = 3 + 2 * steps as usize;
    let (f, g) = (p.build(half), q.build(half));
    let lo = f.meet(&g).unwrap();
    let hi = f.join(&g).unwrap();
    let out = evolve_coupled(&[lo, hi], &OmegaSource::new(seed, p.a), steps).unwrap();
    for (x, h) in out[0].iter_valid() {
        prop_assert!(h <= out[1].get(x).unwrap(), "face {:?}", x);
    }
    Ok(())
}

/// Raises `phi` by a pyramid rooted at `root`; the two fields then agree
/// outside a neighbourhood of `root`.
pub fn bump_field(phi: &HeightField, root: Face, lift: i32) -> HeightField {
    let r = phi.rect();
    let reach = [r.origin, r.max_face()].iter().map(|c| (*c - root).linf()).max().unwrap() as usize;
    let pyramid = rooted_pyramid(root, reach).unwrap();
    let k = phi.get(root).unwrap() + 4 * lift;
    let raised = HeightField::from_fn(r, |x| pyramid.get(x).unwrap() + k);
    phi.join(&raised).unwrap()
}

/// Coupled runs from fields agreeing on `|x|_1 <= R` agree on `|x|_1 <= R - 2t`.
pub fn linear_propagation(p: FieldSpec, root: (i64, i64), lift: i32, seed: u64, steps: u64) -> Check {
    let half = 20 + 2 * steps as usize;
    let phi = p.build(half);
    let root = Face::new(root.0, root.1);
    let psi = bump_field(&phi, root, lift);
    let radius = phi
        .iter_valid()
        .filter(|(x, h)| psi.get(*x) != Some(*h))
        .map(|(x, _)| x.l1() - 1)
        .min()
        .unwrap_or(i64::MAX);
    prop_assume!(radius < i64::MAX);
    let out = evolve_coupled(&[phi, psi], &OmegaSource::new(seed, p.a), steps).unwrap();
    let reach = radius - 2 * steps as i64;
    prop_assume!(reach >= 2);
    for (x, h) in out[0].iter_valid() {
        if x.l1() <= reach {
            prop_assert_eq!(out[1].get(x), Some(h), "face {:?} with R = {}", x, radius);
        }
    }
    Ok(())
}

pub fn translation_covariance(p: FieldSpec, seed: u64, steps: u64) -> Check {
    let by = Face::new(2, 0);
    let phi = p.build(3 + 2 * steps as usize);
    let omega = OmegaSource::new(seed, p.a);
    let (plain, _) = evolve(&phi, &omega, steps).unwrap();
    let (moved, _) = evolve(&phi.translate(by), &omega.translate(by), steps).unwrap();
    let plain = plain.translate(by);
    prop_assert_eq!(plain.valid_rect(), moved.valid_rect());
    for (x, h) in plain.iter_valid() {
        prop_assert_eq!(moved.get(x), Some(h));
    }
    Ok(())
}

// ---- equilibrium ----

/// Interior grid points `(rho1, rho2) = (2 i / steps, 2 j / steps) (1 - 1e-3)` with `|rho|_1 < 2`.
pub fn interior_grid(steps: i32) -> Vec<Slope> {
    let mut out = Vec::new();
    for i in -steps..=steps {
        for j in -steps..=steps {
            let s = Slope::new(2.0 * i as f64 / steps as f64, 2.0 * j as f64 / steps as f64);
            if s.l1() < 2.0 - 1e-9 {
                out.push(s);
            }
        }
    }
    out
}

/// Worst errors of the closed forms over a grid: angle sum, weight residual,
/// slope round trip, `H - 4(pN + pS)`; also the largest Hessian determinant
/// and the worst relative mismatch against central differences of `H`.
#[derive(Debug, Default, Clone, Copy)]
pub struct EquilibriumErrors {
    pub angle_sum: f64,
    pub residual: f64,
    pub round_trip: f64,
    pub h_vs_probs: f64,
    pub max_hessdet: f64,
    pub hessdet_fd_rel: f64,
    pub points: usize,
}

pub fn equilibrium_errors(slopes: &[Slope], weights: &[f64]) -> EquilibriumErrors {
    let mut e = EquilibriumErrors {
        max_hessdet: f64::NEG_INFINITY,
        ..Default::default()
    };
    for &a in weights {
        for &rho in slopes {
            let g = solve_angles(rho, a).unwrap();
            e.angle_sum = e.angle_sum.max((g.sum() - std::f64::consts::PI).abs());
            e.residual = e.residual.max(g.weight_residual(a).abs());
            let back = g.slope();
            e.round_trip = e.round_trip.max((back.rho1 - rho.rho1).abs().max((back.rho2 - rho.rho2).abs()));
            let p = local_probs(&g);
            let h = hamiltonian(rho, a).unwrap();
            e.h_vs_probs = e.h_vs_probs.max((h - 4.0 * (p.p_n + p.p_s)).abs());
            let d = hessian_det(rho, a).unwrap();
            e.max_hessdet = e.max_hessdet.max(d);
            // finite differences need room inside U
            if rho.l1() < 2.0 - 0.05 {
                let fd = fd_hessian_det(rho, a);
                e.hessdet_fd_rel = e.hessdet_fd_rel.max(((fd - d) / d).abs());
            }
            e.points += 1;
        }
    }
    e
}

fn fd_hessian_det(rho: Slope, a: f64) -> f64 {
    let h = 1e-4;
    let f = |x: f64, y: f64| hamiltonian(Slope::new(x, y), a).unwrap();
    let (x, y) = (rho.rho1, rho.rho2);
    let hxx = (f(x + h, y) - 2.0 * f(x, y) + f(x - h, y)) / (h * h);
    let hyy = (f(x, y + h) - 2.0 * f(x, y) + f(x, y - h)) / (h * h);
    let hxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h);
    hxx * hyy - hxy * hxy
}

/// Relative error of `A C + B D = 1 / (a c + b d)` for the moved weights.
pub fn spider_identity_error(w: [f64; 4]) -> f64 {
    let [a, b, c, d] = w;
    let [ta, tb, tc, td] = spider_weights(a, b, c, d).unwrap();
    let lhs = ta * tc + tb * td;
    let rhs = 1.0 / (a * c + b * d);
    ((lhs - rhs) / rhs).abs()
}

// ---- PDE ----

/// Solutions from ordered data stay ordered, up to round-off: the scheme is
/// monotone in exact arithmetic but its flux is not evaluated monotonically
/// to the last bit.
pub fn comparison_principle(w: Wave, gap: Wave, t: f64) -> Check {
    let params = PdeParams::new(1.0 + gap.c.abs(), 1.0 / 16.0);
    let grid = grid_for(0.75, &[t], &params);
    let lower = w.profile();
    let upper = Profile::certified("upper", {
        let (u, v) = (w.profile(), gap.profile());
        move |x, y| u.eval(x, y).max(v.eval(x, y))
    });
    let a = solve(&lower, &params, grid, &[t]).unwrap();
    let b = solve(&upper, &params, grid, &[t]).unwrap();
    let valid = a[0].valid_nodes().unwrap();
    for f in valid.faces() {
        let (p, q) = (f.i as usize, f.j as usize);
        let (lo, hi) = (a[0].at(p, q).unwrap(), b[0].at(p, q).unwrap());
        prop_assert!(lo <= hi + 1e-12, "node ({}, {}): {} > {} by {:e}", p, q, lo, hi, lo - hi);
    }
    Ok(())
}

/// `max |u - (g - t H(rho))|` over the valid nodes for affine data.
pub fn affine_error(rho: [f64; 2], a: f64, t: f64) -> f64 {
    let params = PdeParams::new(a, 1.0 / 32.0);
    let grid = grid_for(1.0, &[t], &params);
    let g = Profile::affine(rho);
    let h = hamiltonian(Slope::new(rho[0], rho[1]), a).unwrap();
    let out = solve(&g, &params, grid, &[t]).unwrap();
    max_node_error(&out[0], |x, y| g.eval(x, y) - t * h)
}

fn max_node_error(u: &PdeGrid, exact: impl Fn(f64, f64) -> f64) -> f64 {
    let valid = u.valid_nodes().unwrap();
    valid
        .faces()
        .map(|f| {
            let (p, q) = (f.i as usize, f.j as usize);
            let [x, y] = u.grid().node(p, q);
            (u.at(p, q).unwrap() - exact(x, y)).abs()
        })
        .fold(0.0, f64::max)
}

/// `max |solve(g + c) - solve(g) - c|`.
pub fn constant_shift_error(w: Wave, c: f64, t: f64) -> f64 {
    let params = PdeParams::new(1.0, 1.0 / 16.0);
    let grid = grid_for(0.75, &[t], &params);
    let a = solve(&w.profile(), &params, grid, &[t]).unwrap();
    let b = solve(&w.shifted(c).profile(), &params, grid, &[t]).unwrap();
    let valid = a[0].valid_nodes().unwrap();
    valid
        .faces()
        .map(|f| (b[0].at(f.i as usize, f.j as usize).unwrap() - a[0].at(f.i as usize, f.j as usize).unwrap() - c).abs())
        .fold(0.0, f64::max)
}

/// Sup differences between the solutions at `dx` and `dx / 2` for
/// `dx = 1/32, 1/64`, on the nodes of the coarsest grid in `|x|_inf <= 1`.
pub fn refinement_differences(t: f64) -> [f64; 2] {
    let bump = Profile::certified("bump", |x: f64, y: f64| (-(x * x + y * y)).exp());
    let solutions: Vec<PdeGrid> = [32.0, 64.0, 128.0]
        .iter()
        .map(|&k| {
            let params = PdeParams::new(1.0, 1.0 / k);
            let grid = grid_for(1.0, &[t], &params);
            solve(&bump, &params, grid, &[t]).unwrap().remove(0)
        })
        .collect();
    let coarse = SampleGrid::centered(1.0, 1.0 / 32.0);
    let diff = |u: &PdeGrid, v: &PdeGrid| {
        let mut worst = 0.0f64;
        for q in 0..coarse.ny {
            for p in 0..coarse.nx {
                let [x, y] = coarse.node(p, q);
                worst = worst.max((u.sample(x, y).unwrap() - v.sample(x, y).unwrap()).abs());
            }
        }
        worst
    };
    [diff(&solutions[0], &solutions[1]), diff(&solutions[1], &solutions[2])]
}
