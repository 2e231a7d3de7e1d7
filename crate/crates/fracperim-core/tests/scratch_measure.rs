//! Temporary measurement harness: prints margin statistics for the
//! inequality suites before their tolerances are pinned. Delete me.

use std::sync::Arc;

use fracperim::ehrhard::{decreasing_rearrangement, symmetrize_direction, DirectionSpec};
use fracperim::gauss::{GridFunction, TensorGrid};
use fracperim::spectral::{analyze, fractional_seminorm, synthesize, HermiteBasis, HermiteSeries};
use fracperim::variational::{
    coarea_variation, frac_perimeter, PerimeterOptions, SetSpec,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn interval(lo: f64, hi: f64) -> SetSpec {
    let grid = Arc::new(TensorGrid::uniform(1, 256).unwrap());
    let ind = GridFunction::from_fn(&grid, |x| {
        if x[0] > lo && x[0] < hi {
            1.0
        } else {
            0.0
        }
    });
    SetSpec::indicator(ind).unwrap()
}

fn perim(set: &SetSpec) -> f64 {
    frac_perimeter(set, 0.25, &PerimeterOptions::default())
        .unwrap()
        .perimeter
}

#[test]
fn m1_interval_submodularity() {
    // P(A) + P(B) - P(A u B) - P(A n B) for overlapping node intervals.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut min_margin = f64::INFINITY;
    for _ in 0..60 {
        let a1 = rng.gen_range(-2.0..0.5);
        let a2 = a1 + rng.gen_range(0.3..2.0);
        let b1 = rng.gen_range(a1 - 1.0..a2);
        let b2 = b1 + rng.gen_range(0.3..2.0);
        let (pa, pb) = (perim(&interval(a1, a2)), perim(&interval(b1, b2)));
        let pu = perim(&interval(a1.min(b1), a2.max(b2)));
        let pi = if a2.min(b2) > a1.max(b1) {
            perim(&interval(a1.max(b1), a2.min(b2)))
        } else {
            0.0
        };
        let margin = pa + pb - pu - pi;
        min_margin = min_margin.min(margin);
    }
    panic!("m1 min submodularity margin {min_margin:e}");
}

#[test]
fn m1b_interval_submodularity_closed_form() {
    // Same experiment with exact interval coefficients at cap 4000:
    // a_n = (phi(lo) h_{n-1}(lo) - phi(hi) h_{n-1}(hi)) / sqrt(n).
    let s = 0.25;
    let d_s = fracperim::spectral::trace_constant(s).unwrap();
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let perim_cf = |lo: f64, hi: f64| -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let mut e = 0.0;
        for n in 1..=4000usize {
            let a = (phi(lo) * fracperim::gauss::hermite_orthonormal(n - 1, lo)
                - phi(hi) * fracperim::gauss::hermite_orthonormal(n - 1, hi))
                / (n as f64).sqrt();
            e += (n as f64).powf(s) * a * a;
        }
        (d_s * e).sqrt()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut min_margin = f64::INFINITY;
    let mut worst_pair = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..60 {
        let a1 = rng.gen_range(-2.0..0.5);
        let a2 = a1 + rng.gen_range(0.3..2.0);
        let b1 = rng.gen_range(a1 - 1.0..a2);
        let b2 = b1 + rng.gen_range(0.3..2.0);
        let (pa, pb) = (perim_cf(a1, a2), perim_cf(b1, b2));
        let pu = perim_cf(a1.min(b1), a2.max(b2));
        let pi = perim_cf(a1.max(b1), a2.min(b2));
        let margin = pa + pb - pu - pi;
        if margin < min_margin {
            min_margin = margin;
            worst_pair = (a1, a2, b1, b2);
        }
    }
    panic!("m1b min closed-form submodularity margin {min_margin:e} at {worst_pair:?}");
}

#[test]
fn m2_mixture_convexity() {
    // V(theta*u + (1-theta)*w) vs theta*V(u) + (1-theta)*V(w) for node
    // indicator pairs, levels divisible by 4.
    let grid = Arc::new(TensorGrid::uniform(1, 256).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..40 {
        let a1 = rng.gen_range(-2.0..0.5);
        let a2 = a1 + rng.gen_range(0.3..2.0);
        let b1 = rng.gen_range(a1 - 1.0..a2);
        let b2 = b1 + rng.gen_range(0.3..2.0);
        let u = GridFunction::from_fn(&grid, |x| f64::from(x[0] > a1 && x[0] < a2));
        let w = GridFunction::from_fn(&grid, |x| f64::from(x[0] > b1 && x[0] < b2));
        for theta in [0.25, 0.5, 0.75] {
            let mixv: Vec<f64> = u
                .values()
                .iter()
                .zip(w.values())
                .map(|(&x, &y)| theta * x + (1.0 - theta) * y)
                .collect();
            let mix = GridFunction::from_values(&grid, mixv).unwrap();
            let vm = coarea_variation(&mix, 0.25, 200, Some(120)).unwrap();
            let vu = coarea_variation(&u, 0.25, 200, Some(120)).unwrap();
            let vw = coarea_variation(&w, 0.25, 200, Some(120)).unwrap();
            let violation = vm - theta * vu - (1.0 - theta) * vw;
            worst = worst.max(violation);
        }
    }
    panic!("m2 worst convexity violation {worst:e}");
}

fn random_bandlimited(grid: &Arc<TensorGrid>, cap: usize, rng: &mut ChaCha8Rng) -> GridFunction {
    let basis = HermiteBasis::total_degree(grid.dim(), cap).unwrap();
    let coeffs: Vec<f64> = (0..basis.len())
        .map(|i| {
            let lambda = basis.eigenvalue(i) as f64;
            rng.gen_range(-1.0..1.0) / (1.0 + lambda)
        })
        .collect();
    let series = HermiteSeries::from_coeffs(&basis, coeffs).unwrap();
    synthesize(&series, grid).unwrap()
}

#[test]
fn m3_jensen_projection() {
    // V(cylindrical projection) vs V(u) in d = 2.
    let grid = Arc::new(TensorGrid::default_for_dim(2).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = f64::NEG_INFINITY;
    let mut min_gap = f64::INFINITY;
    for _ in 0..12 {
        let u = random_bandlimited(&grid, 6, &mut rng);
        let p = u.cylindrical_projection(1).unwrap();
        let vu = coarea_variation(&u, 0.25, 64, Some(40)).unwrap();
        let vp = coarea_variation(&p, 0.25, 64, Some(40)).unwrap();
        worst = worst.max(vp - vu);
        min_gap = min_gap.min(vu - vp);
    }
    panic!("m3 worst jensen violation {worst:e}, min gap {min_gap:e}");
}

#[test]
fn m3b_jensen_refinement() {
    // Same corpus as m3; does the violation shrink as the level grid
    // and degree cap refine?
    let grid = Arc::new(TensorGrid::default_for_dim(2).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut report = String::new();
    for k in 0..12 {
        let u = random_bandlimited(&grid, 6, &mut rng);
        let p = u.cylindrical_projection(1).unwrap();
        let mut gaps = Vec::new();
        for &(levels, cap) in &[(64usize, 40usize), (256, 40), (1024, 40), (256, 60)] {
            let vu = coarea_variation(&u, 0.25, levels, Some(cap)).unwrap();
            let vp = coarea_variation(&p, 0.25, levels, Some(cap)).unwrap();
            gaps.push(vu - vp);
        }
        report.push_str(&format!("fn {k}: gaps {gaps:?}\n"));
    }
    panic!("m3b refinement:\n{report}");
}

#[test]
fn m3c_jensen_product_rectangles() {
    // Closed-form corpus: u = indicator of A1 x A2, proj u = gamma(A2) chi_A1.
    // V(u) and V(proj u) both reduce to interval coefficient sums.
    let s = 0.25;
    let ds = fracperim::spectral::trace_constant(s).unwrap();
    let cap = 2000usize;
    let phi = fracperim::special::std_normal_pdf;
    let mass =
        |lo: f64, hi: f64| fracperim::special::std_normal_cdf(hi) - fracperim::special::std_normal_cdf(lo);
    let coeffs = |lo: f64, hi: f64| -> Vec<f64> {
        let mut a = vec![mass(lo, hi)];
        for n in 1..=cap {
            let h = |c: f64| fracperim::gauss::hermite_orthonormal(n - 1, c);
            a.push((phi(lo) * h(lo) - phi(hi) * h(hi)) / (n as f64).sqrt());
        }
        a
    };
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut min_gap = f64::INFINITY;
    let mut max_cap_shift = 0.0f64;
    for _ in 0..10 {
        let a1 = rng.gen_range(-1.5..0.5);
        let a2 = a1 + rng.gen_range(0.3..2.0);
        let b1 = rng.gen_range(-1.5..0.5);
        let b2 = b1 + rng.gen_range(0.3..2.0);
        let (a, b) = (coeffs(a1, a2), coeffs(b1, b2));
        // 1-d perimeter of A1 and 2-d perimeter of the rectangle.
        let p1: f64 = (ds
            * a.iter()
                .enumerate()
                .skip(1)
                .map(|(n, &c)| (n as f64).powf(s) * c * c)
                .sum::<f64>())
        .sqrt();
        let mut e2 = 0.0;
        let mut e2_half = 0.0; // same sum truncated at cap/2 per axis
        for (m, &am) in a.iter().enumerate() {
            for (n, &bn) in b.iter().enumerate() {
                if m + n == 0 {
                    continue;
                }
                let term = ((m + n) as f64).powf(s) * am * am * bn * bn;
                e2 += term;
                if m <= cap / 2 && n <= cap / 2 {
                    e2_half += term;
                }
            }
        }
        let p2 = (ds * e2).sqrt();
        let vproj = mass(b1, b2) * p1;
        min_gap = min_gap.min(p2 - vproj);
        max_cap_shift = max_cap_shift.max(((ds * e2_half).sqrt() - p2).abs());
    }
    panic!("m3c min gap {min_gap:e}, max truncation shift {max_cap_shift:e}");
}

#[test]
fn m4_symmetrisation_consistency() {
    // frac_perimeter(E) >= frac_perimeter(E*_h) for indicators in d = 2.
    let grid = Arc::new(TensorGrid::default_for_dim(2).unwrap());
    // Criterion-5 style: four energies nonincreasing under the
    // one-directional rearrangement, measured on smooth functions.
    let s = 0.25;
    let yg = fracperim::extension::YGrid::default_for_order(s).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut worst = [f64::NEG_INFINITY; 4];
    for k in 0..12 {
        let u = random_bandlimited(&grid, 5, &mut rng);
        let axis = DirectionSpec::axis(2, k % 2).unwrap();
        let sym = symmetrize_direction(&u, &axis).unwrap();
        let en = |f: &GridFunction| -> [f64; 4] {
            let c = analyze(f, 12).unwrap();
            let ext = fracperim::extension::minimize_extension(f, s, &yg).unwrap();
            [
                fracperim::extension::vertical_energy(&ext),
                fracperim::extension::horizontal_energy(&ext),
                fracperim::spectral::dirichlet_form(&c),
                fractional_seminorm(&c, s).unwrap(),
            ]
        };
        let (e0, e1) = (en(&u), en(&sym));
        for j in 0..4 {
            worst[j] = worst[j].max(e1[j] - e0[j]);
        }
    }
    panic!("m4 worst violations [J1, J2, dirichlet, seminorm] = {worst:?}");
}

#[test]
fn m6_planar_double_well_timing() {
    // Criterion-9 shape: d = 2, cap 16, 10 restarts.
    use fracperim::variational::{allen_cahn_1d, allen_cahn_nd, AllenCahnOptions};
    let t0 = std::time::Instant::now();
    let opts = AllenCahnOptions {
        restarts: 10,
        seed: 7,
        ..AllenCahnOptions::default()
    };
    let f = |v: f64| (1.0 - v * v) * (1.0 - v * v);
    let fp = |v: f64| -4.0 * v * (1.0 - v * v);
    let sol2 = allen_cahn_nd(&f, &fp, 0.0, 0.25, 2, 16, &opts).unwrap();
    let t1 = t0.elapsed();
    let sol1 = allen_cahn_1d(&f, &fp, 0.0, 0.25, 16, &opts).unwrap();
    let t2 = t0.elapsed();
    panic!(
        "m6 2d energy {:.10} conv {} resid {:e} dirres {:e}; 1d energy {:.10}; t2d {t1:?} total {t2:?}",
        sol2.solution.energy,
        sol2.solution.converged,
        sol2.solution.residual,
        sol2.direction_residual,
        sol1.energy,
    );
}

#[test]
fn m7_indicator_symmetrisation() {
    // Criterion-5 indicators: superlevel sets symmetrized, four energies.
    let s = 0.25;
    let grid = Arc::new(TensorGrid::default_for_dim(2).unwrap());
    let yg = fracperim::extension::YGrid::default_for_order(s).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst = [f64::NEG_INFINITY; 4];
    for k in 0..12 {
        let u = random_bandlimited(&grid, 5, &mut rng);
        let t = rng.gen_range(-0.3..0.3);
        let ind = GridFunction::from_values(
            &grid,
            u.values().iter().map(|&v| f64::from(v > t)).collect(),
        )
        .unwrap();
        let axis = DirectionSpec::axis(2, k % 2).unwrap();
        let sym = symmetrize_direction(&ind, &axis).unwrap();
        let en = |f: &GridFunction| -> [f64; 4] {
            let c = analyze(f, 12).unwrap();
            let ext = fracperim::extension::minimize_extension(f, s, &yg).unwrap();
            [
                fracperim::extension::vertical_energy(&ext),
                fracperim::extension::horizontal_energy(&ext),
                fracperim::spectral::dirichlet_form(&c),
                fractional_seminorm(&c, s).unwrap(),
            ]
        };
        let (e0, e1) = (en(&ind), en(&sym));
        for j in 0..4 {
            worst[j] = worst[j].max(e1[j] - e0[j]);
        }
    }
    panic!("m7 indicator worst violations [J1, J2, dirichlet, seminorm] = {worst:?}");
}

#[test]
fn m8_quadrant_witness() {
    // Quadrant indicator vs its global rearrangement: seminorm gap and the
    // combined tolerance scale.
    let s = 0.25;
    let grid = Arc::new(TensorGrid::default_for_dim(2).unwrap());
    let q = GridFunction::from_fn(&grid, |x| f64::from(x[0] > 0.0 && x[1] > 0.0));
    let su = decreasing_rearrangement(&q).unwrap();
    let su_grid = GridFunction::from_fn(&grid, |x| su.eval(x[0]));
    let a = analyze(&q, 40).unwrap();
    let b = analyze(&su_grid, 40).unwrap();
    let n0 = fractional_seminorm(&a, s).unwrap();
    let n1 = fractional_seminorm(&b, s).unwrap();
    // Closed-form cross-check of the two seminorms.
    let ds = fracperim::spectral::trace_constant(s).unwrap();
    let cap = 3000usize;
    let phi = fracperim::special::std_normal_pdf;
    let half: Vec<f64> = std::iter::once(0.5)
        .chain((1..=cap).map(|n| {
            phi(0.0) * fracperim::gauss::hermite_orthonormal(n - 1, 0.0) / (n as f64).sqrt()
        }))
        .collect();
    let mut e2 = 0.0;
    for (m, &am) in half.iter().enumerate() {
        for (n, &bn) in half.iter().enumerate() {
            if m + n > 0 && m + n <= cap {
                e2 += ((m + n) as f64).powf(s) * am * am * bn * bn;
            }
        }
    }
    let p_quad = (ds * e2).sqrt();
    let c = fracperim::special::std_normal_quantile(0.25).unwrap();
    let line: Vec<f64> = (1..=cap)
        .map(|n| -phi(c) * fracperim::gauss::hermite_orthonormal(n - 1, c) / (n as f64).sqrt())
        .collect();
    let e1: f64 = line
        .iter()
        .enumerate()
        .map(|(i, &v)| ((i + 1) as f64).powf(s) * v * v)
        .sum();
    let p_line = (ds * e1).sqrt();
    panic!(
        "m8 grid-route [q] {n0:.6} [S_q] {n1:.6} gap {:.6}; closed-form quadrant {p_quad:.6} halfline {p_line:.6} gap {:.6}",
        n0 - n1,
        p_quad - p_line
    );
}

#[test]
fn m9_trace_flux_accuracy() {
    // Flux of the minimized extension vs the spectral fractional power.
    let grid = Arc::new(TensorGrid::default_for_dim(1).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut report = String::new();
    for &s in &[0.25, 0.5, 0.75] {
        let yg = fracperim::extension::YGrid::default_for_order(s).unwrap();
        let ds = fracperim::spectral::trace_constant(s).unwrap();
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let u = random_bandlimited(&grid, 8, &mut rng);
            let ext = fracperim::extension::minimize_extension(&u, s, &yg).unwrap();
            let flux = fracperim::extension::trace_flux(&ext, s).unwrap();
            let c = analyze(&u, 8).unwrap();
            let fl = fracperim::spectral::frac_laplacian(&c, s).unwrap();
            let target = synthesize(&fl, &grid).unwrap();
            let mut num = 0.0;
            let mut den = 0.0;
            for (a, b) in flux.values().iter().zip(target.values()) {
                num += (a - ds * b) * (a - ds * b);
                den += (ds * b) * (ds * b);
            }
            worst = worst.max((num / den).sqrt());
        }
        report.push_str(&format!("s={s}: worst rel {worst:e}; "));
    }
    panic!("m9 {report}");
}

#[test]
fn m10_mode_checks() {
    // |alpha| = 1 mode at s = 0.5 on both routes, and the multiplier vs
    // integral fractional power over lambda <= 100.
    let s = 0.5;
    let grid = Arc::new(TensorGrid::default_for_dim(1).unwrap());
    let yg = fracperim::extension::YGrid::default_for_order(s).unwrap();
    let h1 = GridFunction::from_fn(&grid, |x| x[0]);
    let ext = fracperim::extension::minimize_extension(&h1, s, &yg).unwrap();
    let te = fracperim::extension::total_energy(&ext);
    let me = fracperim::extension::mode_energy(s, 1.0).unwrap();
    let ds = fracperim::spectral::trace_constant(s).unwrap();
    let spectral = ds * 1.0f64.powf(s);
    let mut worst = 0.0f64;
    for lam in 1..=100 {
        for k in 1..10 {
            let sv = 0.1 * k as f64;
            let a = (lam as f64).powf(sv);
            let b = fracperim::spectral::frac_laplacian_integral_multiplier(lam as f64, sv)
                .unwrap();
            worst = worst.max(((a - b) / a).abs());
        }
    }
    panic!(
        "m10 total_energy {te:.8} mode_energy {me:.8} d_s*1^s {spectral:.8}; integral worst rel {worst:e}"
    );
}

#[test]
fn m11_route_agreement_smooth() {
    // Spectral vs minimized-extension seminorm on smooth d <= 2 corpus.
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let mut report = String::new();
    for &(d, cap) in &[(1usize, 10usize), (2, 6)] {
        let grid = Arc::new(TensorGrid::default_for_dim(d).unwrap());
        let s = 0.25;
        let yg = fracperim::extension::YGrid::default_for_order(s).unwrap();
        let ds = fracperim::spectral::trace_constant(s).unwrap();
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let u = random_bandlimited(&grid, cap, &mut rng);
            let c = analyze(&u, cap).unwrap();
            let sn2 = fracperim::spectral::fractional_seminorm_squared(&c, s).unwrap();
            let ext = fracperim::extension::minimize_extension(&u, s, &yg).unwrap();
            let te = fracperim::extension::total_energy(&ext);
            worst = worst.max(((te - sn2) / sn2).abs());
        }
        report.push_str(&format!("d={d}: worst rel {worst:e}; "));
    }
    panic!("m11 {report}");
}

#[test]
fn m5_global_rearrangement() {
    // [S_u] vs [u] on band-limited d = 2 inputs; 1-d equality gap.
    let grid = Arc::new(TensorGrid::default_for_dim(2).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let u = random_bandlimited(&grid, 5, &mut rng);
        let su = decreasing_rearrangement(&u).unwrap();
        let su_grid = GridFunction::from_fn(&grid, |x| su.eval(x[0]));
        let a = analyze(&u, 40).unwrap();
        let b = analyze(&su_grid, 40).unwrap();
        let n0 = fractional_seminorm(&a, 0.25).unwrap();
        let n1 = fractional_seminorm(&b, 0.25).unwrap();
        worst = worst.max(n1 - n0);
    }
    // One-dimensional input: nonincreasing profile of x1 only.
    let one_d = GridFunction::from_fn(&grid, |x| (-x[0]).tanh());
    let su = decreasing_rearrangement(&one_d).unwrap();
    let su_grid = GridFunction::from_fn(&grid, |x| su.eval(x[0]));
    let a = analyze(&one_d, 40).unwrap();
    let b = analyze(&su_grid, 40).unwrap();
    let n0 = fractional_seminorm(&a, 0.25).unwrap();
    let n1 = fractional_seminorm(&b, 0.25).unwrap();
    panic!(
        "m5 worst rearrangement violation {worst:e}; 1d gap rel {:e}",
        (n1 - n0).abs() / n0
    );
}
