//! Acceptance run: fifteen numerical criteria at desk scale (n = 1, N = 64,
//! 64² z-grid, 64 t-points), one PASS/FAIL line each with the measured values
//! underneath. Runs single-threaded; exits nonzero if any criterion fails.

use std::fs;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use weylbench::derivation::{band_decompose, band_kernels, band_time, decay_report, heat_band, lemma37_shape, mauceri_constant, Side};
use weylbench::experiment::{self, ExperimentConfig, EXPERIMENTS};
use weylbench::fiber::{
    default_heisenberg_grid, fine_heisenberg_grid, heisenberg_panel, lambda_adapted_grid, lemma41_check, theorem110_experiment,
    theorem19_experiment, two_path_agreement, vector_field_fine_grid, vector_field_grid, vector_field_refinement, FiberOptions,
};
use weylbench::maximal::{ap_constant, m_s, pointwise_domination, power_weight, twisted_sharp, weight_refinement, weighted_ratio, GridOperator};
use weylbench::rbound::{
    counterexample_theorem16, derivative_halving, derivative_terms, heat_family, identity_residuals, prop42_identity,
    rademacher_estimate, riesz_commutator_growth, spectral_family, SignMode,
};
use weylbench::weyl::{
    band_limited_panel, default_context, default_grid, fine_grid, special_hermite_fn, twisted_convolve, Quadrature, TWO_PI,
};
use weylbench::{HermiteContext, OperatorMatrix, PhaseGrid, PhaseGridFunction, Result, WeylEngine, C64};

const SEED: u64 = 7;

struct Check {
    ok: bool,
    text: String,
}

fn check(ok: bool, text: impl Into<String>) -> Check {
    Check { ok, text: text.into() }
}

fn info(text: impl Into<String>) -> Check {
    check(true, format!("info: {}", text.into()))
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn relative_change(a: f64, b: f64) -> f64 {
    (b - a).abs() / a.abs().max(b.abs())
}

fn heat(ctx: &HermiteContext) -> OperatorMatrix {
    ctx.spectral_function(|e| (-e).exp(), 0.0).unwrap()
}

/// Hermite functions h_0..h_{n-1} at x by the three-term recurrence.
fn hermite_oracle(n: usize, x: f64) -> Vec<f64> {
    let mut h = vec![0.0; n];
    h[0] = std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp();
    if n > 1 {
        h[1] = 2f64.sqrt() * x * h[0];
    }
    for k in 2..n {
        h[k] = (2.0 / k as f64).sqrt() * x * h[k - 1] - ((k - 1) as f64 / k as f64).sqrt() * h[k - 2];
    }
    h
}

/// Annihilation matrix with A h_k = √(2k) h_{k−1}.
fn ladder_oracle(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |r, c| if c == r + 1 { (2.0 * c as f64).sqrt() } else { 0.0 })
}

fn plancherel() -> Result<Vec<Check>> {
    let ctx = default_context();
    let e = WeylEngine::new(&ctx, default_grid())?;
    let panel = band_limited_panel(&e, 101, 10, 8)?;
    let ratios = panel
        .iter()
        .map(|f| Ok(e.transform(f)?.hs_norm().powi(2) / (TWO_PI * f.l2_norm().powi(2))))
        .collect::<Result<Vec<f64>>>()?;
    let worst = max_of(ratios.iter().map(|r| (r - 1.0).abs()));
    Ok(vec![check(worst <= 1e-3, format!("max |‖W f‖²/(2π‖f‖²) − 1| over 10 functions = {worst:.3e} (≤ 1e-3)"))])
}

fn inversion() -> Result<Vec<Check>> {
    let ctx = default_context();
    let grid = default_grid();
    let e = WeylEngine::new(&ctx, grid)?;
    let mut worst: f64 = 0.0;
    for a in 0..=8 {
        for b in 0..=8 {
            let f = special_hermite_fn(&e, a, b)?;
            worst = worst.max(e.inverse(&e.transform(&f)?)?.relative_l2_error(&f)?);
        }
    }
    // Φ_{αβ}(z) = (2π)^{−1/2} ∫ e^{i(xξ + xy/2)} h_α(ξ + y) h_β(ξ) dξ by direct quadrature
    let (nq, lq) = (1600, 16.0);
    let dq = 2.0 * lq / nq as f64;
    let xis: Vec<f64> = (0..nq).map(|k| -lq + k as f64 * dq).collect();
    let base: Vec<Vec<f64>> = xis.iter().map(|&s| hermite_oracle(4, s)).collect();
    let mut oracle_err: f64 = 0.0;
    let xs = grid.coords();
    for (a, b) in [(0, 0), (1, 0), (0, 2), (3, 1)] {
        let f = special_hermite_fn(&e, a, b)?;
        for i in (0..grid.m_pts).step_by(3) {
            for j in (0..grid.m_pts).step_by(3) {
                let (x, y) = (xs[i], xs[j]);
                let mut acc = C64::new(0.0, 0.0);
                for (k, &s) in xis.iter().enumerate() {
                    acc += C64::from_polar(1.0, x * s + x * y / 2.0) * hermite_oracle(4, s + y)[a] * base[k][b];
                }
                let want = acc * dq / TWO_PI.sqrt();
                oracle_err = oracle_err.max((f.at(i, j) - want).norm());
            }
        }
    }
    Ok(vec![
        check(worst < 1e-3, format!("max relative L² error of inverse∘transform on Φ_αβ, α,β ≤ 8 = {worst:.3e} (< 1e-3)")),
        check(oracle_err < 1e-8, format!("Φ_αβ against direct ξ-quadrature for 4 index pairs: max error {oracle_err:.3e} (< 1e-8)")),
    ])
}

fn homomorphism() -> Result<Vec<Check>> {
    let ctx = default_context();
    let e = WeylEngine::new(&ctx, default_grid())?;
    let panel = band_limited_panel(&e, 303, 20, 4)?;
    let mut worst: f64 = 0.0;
    for pair in panel.chunks(2) {
        let lhs = e.transform(&twisted_convolve(&pair[0], &pair[1])?)?;
        let rhs = &e.transform(&pair[0])? * &e.transform(&pair[1])?;
        worst = worst.max((&lhs - &rhs).hs_norm() / rhs.hs_norm());
    }
    Ok(vec![check(worst < 1e-3, format!("max ‖W(f×g) − W(f)W(g)‖/‖W(f)W(g)‖ over 10 pairs = {worst:.3e} (< 1e-3)"))])
}

fn operator_identities() -> Result<Vec<Check>> {
    let ctx = default_context();
    let n = ctx.trunc();
    let a = ladder_oracle(n);
    let ad = a.transpose();
    let lib_a = ctx.annihilation(1)?;
    let ladder_gap = max_of((0..n).flat_map(|r| (0..n).map(move |c| (r, c))).map(|(r, c)| (lib_a.get(r, c).re - a[(r, c)]).abs()));

    // δ̄m = [A*, m], δm = [m, A] on m = H^{−1/2}, interior rows 1..N−2
    let e = |k: usize| (2 * k + 1) as f64;
    let diag = |f: &dyn Fn(f64) -> f64| DMatrix::from_fn(n, n, |r, c| if r == c { f(e(r)) } else { 0.0 });
    let inv_root = diag(&|v| v.powf(-0.5));
    let shifted = |d: f64| diag(&move |v: f64| if v + d > 0.0 { (v + d).powf(-0.5) } else { 0.0 });
    let interior = |m: &DMatrix<f64>| max_of((1..n - 2).flat_map(|r| (1..n - 2).map(move |c| (r, c))).map(|(r, c)| m[(r, c)].abs()));
    let delta_bar = &ad * &inv_root - &inv_root * &ad;
    let delta = &inv_root * &a - &a * &inv_root;
    let bar_gap = interior(&(&delta_bar - (shifted(-2.0) - &inv_root) * &ad));
    let corrected_gap = interior(&(&delta - (&inv_root - shifted(2.0)) * &a));
    let printed_gap = interior(&(&delta - (shifted(2.0) - &inv_root) * &a));

    let ids = identity_residuals(&ctx)?;
    let m = heat(&ctx);
    let mut prop = Vec::new();
    for l in [1.0, 4.0] {
        let r = prop42_identity(&ctx, &m, l)?;
        prop.push((l, r.expansion / r.lhs_scale, r.expansion_factorized / r.lhs_scale));
    }
    let worst_prop = max_of(prop.iter().flat_map(|p| [p.1, p.2]));
    let tol = 1e-10;
    Ok(vec![
        check(ladder_gap < 1e-14, format!("library A against √(2k) recurrence: {ladder_gap:.2e}")),
        check(ids.hermite_sum < tol, format!("H = ½(AA* + A*A): {:.2e}", ids.hermite_sum)),
        check(ids.ladder_commutator < tol, format!("[A*, A] = −2I: {:.2e}", ids.ladder_commutator)),
        check(
            ids.delta_bar_inv_root < tol && bar_gap < tol,
            format!("δ̄H^(−1/2) = ((H−2)^(−1/2) − H^(−1/2))A*: library {:.2e}, oracle {bar_gap:.2e}", ids.delta_bar_inv_root),
        ),
        check(
            ids.delta_inv_root < tol && corrected_gap < tol,
            format!("δH^(−1/2) = (H^(−1/2) − (H+2)^(−1/2))A with δm = [m, A]: library {:.2e}, oracle {corrected_gap:.2e}", ids.delta_inv_root),
        ),
        check(
            ids.delta_inv_root_printed_negated < tol && ids.delta_inv_root_printed > 0.1 && printed_gap > 0.1,
            format!(
                "((H+2)^(−1/2) − H^(−1/2))A is exactly −δH^(−1/2): gap {:.2e}; as an equality it fails by {:.3} (oracle max entry {printed_gap:.3})",
                ids.delta_inv_root_printed_negated, ids.delta_inv_root_printed
            ),
        ),
        check(ids.heat_band_forms < tol, format!("two closed forms of S_j, j ≤ 8: {:.2e}", ids.heat_band_forms)),
        check(worst_prop < tol, format!("four-term expansion of 4|λ|[m, ξ∂], m = e^(−H), λ ∈ {{1, 4}}: {worst_prop:.2e}")),
    ])
}

fn counterexample() -> Result<Vec<Check>> {
    let ctx = HermiteContext::new(1, 96, 16.0, 256)?;
    let alphas = [1, 2, 4, 8, 16, 32, 64];
    let beta = 2;
    let t = counterexample_theorem16(&ctx, &alphas, beta)?;

    // independent build of S = δ̄R W A* + δR W A, R = AH^{−1/2}, W = |h_β⟩⟨h_α|
    let n = ctx.trunc();
    let a = ladder_oracle(n);
    let ad = a.transpose();
    let inv_root = DMatrix::from_fn(n, n, |r, c| if r == c { ((2 * r + 1) as f64).powf(-0.5) } else { 0.0 });
    let r = &a * &inv_root;
    let dr = &r * &a - &a * &r;
    let dbr = &ad * &r - &r * &ad;
    let mut oracle = Vec::new();
    let mut worst_oracle: f64 = 0.0;
    let mut worst_lib: f64 = 0.0;
    for (row, &alpha) in t.rows.iter().zip(&alphas) {
        let mut w = DMatrix::<f64>::zeros(n, n);
        w[(beta, alpha)] = 1.0;
        let s = &dbr * &w * &ad + &dr * &w * &a;
        let direct = s.norm_squared();
        let al = alpha as f64;
        let closed = (2.0 * al + 2.0) * dr.column(beta).norm_squared() + 2.0 * al * dbr.column(beta).norm_squared();
        worst_oracle = worst_oracle.max((direct - closed).abs() / closed);
        worst_lib = worst_lib.max((row.direct / TWO_PI - closed).abs() / closed);
        oracle.push((al, direct.sqrt()));
    }
    let fit: Vec<(f64, f64)> = oracle.iter().copied().filter(|(a, _)| *a >= 8.0).collect();
    let (mx, my) = (
        fit.iter().map(|p| p.0.ln()).sum::<f64>() / fit.len() as f64,
        fit.iter().map(|p| p.1.ln()).sum::<f64>() / fit.len() as f64,
    );
    let oracle_slope = fit.iter().map(|p| (p.0.ln() - mx) * (p.1.ln() - my)).sum::<f64>()
        / fit.iter().map(|p| (p.0.ln() - mx).powi(2)).sum::<f64>();
    let slope = t.slope.unwrap_or(f64::NAN);
    let growth = t.growth_ratio.unwrap_or(f64::NAN);
    Ok(vec![
        check((t.f_norm - 1.0).abs() < 1e-12, format!("‖f‖₂ = {}", t.f_norm)),
        check(worst_oracle < 1e-8, format!("‖S‖²_HS against the closed form (dense oracle), α ≤ 64: {worst_oracle:.2e} (< 1e-8)")),
        check(worst_lib < 1e-8, format!("library ‖S‖²_HS/2π against the closed form: {worst_lib:.2e} (< 1e-8)")),
        check(
            (slope - 0.5).abs() <= 0.05 && (slope - oracle_slope).abs() < 1e-9,
            format!("log-log slope on α ∈ [8, 64] = {slope:.4} (oracle {oracle_slope:.4}; 0.5 ± 0.05)"),
        ),
        check((growth - 2.0).abs() <= 0.2, format!("‖S(64)‖/‖S(16)‖ = {growth:.4} (2 ± 10%)")),
    ])
}

fn mauceri() -> Result<Vec<Check>> {
    let ctx = default_context();
    let id = OperatorMatrix::identity(ctx.n(), ctx.trunc());
    // 2^{−k}·#{levels j < N : 2^{k−1} ≤ 2j+1 < 2^k} over blocks inside the truncation
    let mut oracle: f64 = 0.0;
    for k in 1..=16u32 {
        let levels: Vec<usize> = (0..).take_while(|&j| 2 * j + 1 < 1usize << k).filter(|&j| 2 * j + 1 >= 1usize << (k - 1)).collect();
        if levels.last().is_some_and(|&j| j < ctx.trunc()) {
            oracle = oracle.max(levels.len() as f64 / 2f64.powi(k as i32));
        }
    }
    let mut out = Vec::new();
    for side in [Side::Left, Side::Right] {
        let r0 = mauceri_constant(&ctx, &id, 0, side)?;
        out.push(check(r0.constant == 0.5 && oracle == 0.5, format!("{side:?}, l = 0: constant {} (enumeration {oracle})", r0.constant)));
        let r2 = mauceri_constant(&ctx, &id, 2, side)?;
        let higher: Vec<_> = r2.rows.iter().filter(|r| r.alpha.iter().sum::<usize>() + r.beta.iter().sum::<usize>() >= 1).collect();
        let all_zero = !higher.is_empty() && higher.iter().all(|r| r.sup == 0.0 && r.values.iter().all(|v| v.1 == 0.0));
        out.push(check(all_zero, format!("{side:?}: {} rows with 1 ≤ |α|+|β| ≤ 2 are exactly 0", higher.len())));
    }
    Ok(out)
}

fn envelopes() -> Result<Vec<Check>> {
    let ctx = default_context();
    let engine = WeylEngine::new(&ctx, default_grid())?;
    let pieces = band_decompose(&ctx, &heat(&ctx), 6)?;
    let kernels = band_kernels(&engine, &pieces)?;
    let offsets = ExperimentConfig::default().params.offsets;
    let reports = (1..=6).map(|j| decay_report(&kernels[j], j, &offsets)).collect::<Result<Vec<_>>>()?;
    let size: Vec<f64> = reports.iter().map(|r| r.size_ratio).collect();
    let smooth: Vec<f64> = reports.iter().map(|r| r.smoothness_ratio).collect();
    let mut out = Vec::new();
    for (name, v) in [("size |z|^(5/2)|k_j|/t^(1/4)", &size), ("twisted difference / envelope", &smooth)] {
        let med = median(v);
        let hi = max_of(v.iter().copied()) / med;
        let lo = med / v.iter().copied().fold(f64::INFINITY, f64::min);
        out.push(check(v.iter().all(|x| x.is_finite()) && hi < 3.0, format!("{name}: max/median {hi:.3} (< 3, no blow-up)")));
        out.push(info(format!("{name}: median/min {lo:.3}")));
    }
    // for smooth m, m S_j ≈ t_{j+1} m(H − n): the size statistic decays like t_{j+1}^{3/4}
    let steps: Vec<f64> = size.windows(2).map(|w| w[1] / w[0]).collect();
    let predicted = 2f64.powf(-0.75);
    let last = *steps.last().unwrap();
    out.push(check(
        (last / predicted - 1.0).abs() < 0.05,
        format!(
            "per-band size ratios {:?} approach 2^(−3/4) = {predicted:.4} (last within 5%)",
            steps.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>()
        ),
    ));
    Ok(out)
}

fn block_decrease() -> Result<Vec<Check>> {
    let ctx = default_context();
    let mut out = Vec::new();
    for band in 0..=5 {
        let reach = lemma37_shape(&ctx, band, 1, 0, None)?.rows.last().map(|r| r.x).unwrap_or(0.0);
        if reach < 8.0 {
            out.push(info(format!("band {band}: admissible x ends at {reach}, before the decay regime; not tested")));
            continue;
        }
        for (g, r) in [(0, 0), (1, 0), (0, 1)] {
            let t = lemma37_shape(&ctx, band, g, r, None)?;
            out.push(check(
                t.decrease >= 1e3,
                format!("band {band} (γ,ρ) = ({g},{r}): x ∈ [{}, {}], decrease {:.3e} (≥ 1e3)", t.rows[0].x, reach, t.decrease),
            ));
        }
        // (0,0) rows from the diagonal of S_j directly
        let t = lemma37_shape(&ctx, band, 0, 0, None)?;
        let s = heat_band(&ctx, band);
        let t1 = band_time(band + 1);
        let mut gap: f64 = 0.0;
        for row in &t.rows {
            let k = row.block as i32;
            let v: f64 = (0..ctx.trunc())
                .filter(|&l| (1usize << (k - 1)..1usize << k).contains(&(2 * l + 1)))
                .map(|l| s.get(l, l).norm_sqr())
                .sum();
            let normalized = v / (t1 * t1 * 2f64.powi(3 * k));
            if normalized > 0.0 {
                gap = gap.max((normalized - row.normalized).abs() / normalized);
            }
        }
        out.push(check(gap < 1e-12, format!("band {band}: (0,0) profile against the diagonal of S_j, {gap:.1e}")));
    }
    Ok(out)
}

fn sharp_maximal() -> Result<Vec<Check>> {
    // exhaustive oracle on an 8×8 grid: every dyadic square, every cell
    let grid = PhaseGrid::new(2.0, 8)?;
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let f = PhaseGridFunction::from_fn_indexed(grid, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let g = PhaseGridFunction::from_fn_indexed(grid, |_, _| C64::new(rng.random::<f64>() + 0.1, 0.0));
    let m = grid.m_pts;
    let h = grid.h();
    let xs = grid.coords();
    let mut sharp = vec![0.0f64; m * m];
    let mut max2 = vec![0.0f64; m * m];
    let mut side = 1;
    while side <= m {
        for i0 in (0..m).step_by(side) {
            for j0 in (0..m).step_by(side) {
                let u = C64::new(xs[i0] + side as f64 * h / 2.0, xs[j0] + side as f64 * h / 2.0);
                let cells: Vec<(usize, usize)> = (i0..i0 + side).flat_map(|i| (j0..j0 + side).map(move |j| (i, j))).collect();
                let tw: Vec<C64> = cells
                    .iter()
                    .map(|&(i, j)| f.at(i, j) * C64::from_polar(1.0, -0.5 * (C64::new(xs[i], xs[j]) * u.conj()).im))
                    .collect();
                let mean = tw.iter().sum::<C64>() / tw.len() as f64;
                let osc = tw.iter().map(|v| (v - mean).norm()).sum::<f64>() / tw.len() as f64;
                let avg2 = cells.iter().map(|&(i, j)| g.at(i, j).norm_sqr()).sum::<f64>() / cells.len() as f64;
                for &(i, j) in &cells {
                    sharp[i * m + j] = sharp[i * m + j].max(osc);
                    max2[i * m + j] = max2[i * m + j].max(avg2);
                }
            }
        }
        side *= 2;
    }
    let lib_sharp = twisted_sharp(&f);
    let lib_ms = m_s(&g, 2.0)?;
    let mut gap: f64 = 0.0;
    let mut ratio: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            gap = gap.max((lib_sharp.at(i, j).re - sharp[i * m + j]).abs());
            gap = gap.max((lib_ms.at(i, j).re - max2[i * m + j].sqrt()).abs());
            ratio = ratio.max(sharp[i * m + j] / max2[i * m + j].sqrt());
        }
    }
    let lib_ratio = pointwise_domination(&f, &g, 2.0)?;
    let mut out = vec![
        check(gap < 1e-12, format!("M♯ and M_2 against the exhaustive 8×8 definition: {gap:.1e} (< 1e-12)")),
        check((lib_ratio - ratio).abs() < 1e-12 * ratio, format!("domination statistic {lib_ratio:.6} against oracle {ratio:.6}")),
    ];

    let ctx = default_context();
    let mut cutoff = OperatorMatrix::zeros(ctx.n(), ctx.trunc());
    for level in 0..=8 {
        cutoff = &cutoff + &ctx.projection(level)?;
    }
    for (name, mult) in [("e^(−H)", heat(&ctx)), ("P_≤8", cutoff)] {
        let mut maxima = Vec::new();
        for grid in [default_grid(), PhaseGrid::new(12.0, 48)?] {
            let e = WeylEngine::new(&ctx, grid)?;
            let panel = band_limited_panel(&e, SEED, 4, 4)?;
            let mut worst: f64 = 0.0;
            for f in &panel {
                worst = worst.max(pointwise_domination(&e.apply_multiplier(&mult, f)?, f, 2.0)?);
            }
            maxima.push(worst);
        }
        let change = relative_change(maxima[0], maxima[1]);
        out.push(check(
            maxima.iter().all(|v| v.is_finite()) && change <= 0.5,
            format!("{name}: sup M♯(Tf)/M_2 f = {:.4} (m=64), {:.4} (m=48), change {change:.3} (≤ 0.5)", maxima[0], maxima[1]),
        ));
    }
    Ok(out)
}

fn ap_harness() -> Result<Vec<Check>> {
    let grid = default_grid();
    let one = PhaseGridFunction::from_fn(grid, |_, _| C64::new(1.0, 0.0));
    let ones = [1.5, 2.0, 3.0, 4.0].iter().map(|&p| ap_constant(&one, p)).collect::<Result<Vec<_>>>()?;
    let stable = weight_refinement(-1.0, 2.0, &[grid, PhaseGrid::new(12.0, 128)?])?;
    let divergent = weight_refinement(-3.0, 2.0, &[grid, PhaseGrid::new(12.0, 128)?])?;
    let (c0, c1) = (stable.constants[0].1, stable.constants[1].1);

    let ctx = default_context();
    let m = heat(&ctx);
    let mut maxima = Vec::new();
    for g in [grid, fine_grid()] {
        let e = WeylEngine::new(&ctx, g)?;
        let panel = band_limited_panel(&e, SEED, 20, 4)?;
        let w = power_weight(g, -1.0);
        let op = |f: &PhaseGridFunction| e.apply_multiplier(&m, f);
        maxima.push(weighted_ratio(&op, &panel, &w, 4.0)?.max);
    }
    let change = relative_change(maxima[0], maxima[1]);
    Ok(vec![
        check(ones.iter().all(|&v| v == 1.0), format!("A_p constant of w = 1 at p = 1.5, 2, 3, 4: {ones:?}")),
        check(
            relative_change(c0, c1) <= 0.2 && !stable.divergent,
            format!("|z+ε|^(−1), p = 2: A_2 {c0:.4} (m=64), {c1:.4} (m=128), change {:.3} (≤ 0.2)", relative_change(c0, c1)),
        ),
        check(
            divergent.divergent,
            format!("|z+ε|^(−3), p = 2: A_2 grows ×{:.2} under refinement, flagged divergent", divergent.growth),
        ),
        check(
            maxima.iter().all(|v| v.is_finite()) && change <= 0.3,
            format!("‖T f‖_{{4,w}}/‖f‖_{{4,w}}, 20 functions: max {:.5} (m=64), {:.5} (m=96), change {change:.3} (≤ 0.3)", maxima[0], maxima[1]),
        ),
    ])
}

fn lambda_derivative() -> Result<Vec<Check>> {
    let ctx = default_context();
    let family = heat_family(&ctx, &[1.0])?;
    let e = WeylEngine::new(&ctx, default_grid())?;
    let f = band_limited_panel(&e, SEED, 1, 4)?.remove(0);
    let terms = derivative_terms(&ctx, &family, 1.0, 1e-3, &f)?.report;
    let (a, b) = (terms.residual_m_first, terms.residual_grad_first);
    let halving = derivative_halving(&ctx, &family, 1.0, 0.1, &f)?;

    let dir = tempfile::tempdir()?;
    let mut config = ExperimentConfig::for_experiment("lemma24")?;
    config.output_dir = dir.path().to_path_buf();
    let run = experiment::run(&config)?;
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&run.files[0])?).unwrap();
    let recorded = report["result"]["winner"].clone();
    let expected = serde_json::to_value(terms.winner).unwrap();
    Ok(vec![
        check(
            (a < 1e-2) != (b < 1e-2),
            format!("h_fd = 1e-3: T_[m,ξ·∇] residual {a:.3e}, T_[ξ·∇,m] residual {b:.3e}; exactly one < 1e-2"),
        ),
        check(
            (3.5..=4.5).contains(&halving.ratio),
            format!(
                "halving h_fd {} → {}: residual {:.3e} → {:.3e}, ratio {:.3} (≈ 4)",
                halving.coarse.h_fd,
                halving.fine.h_fd,
                halving.coarse.residual_m_first.min(halving.coarse.residual_grad_first),
                halving.fine.residual_m_first.min(halving.fine.residual_grad_first),
                halving.ratio
            ),
        ),
        check(recorded == expected, format!("lemma24 report records winner {recorded}")),
    ])
}

fn gaussian(h: f64) -> Vec<f64> {
    let (width, center, half) = (0.3, 0.2, 8i32);
    (-half..=half)
        .map(|j| {
            let eta = j as f64 * h;
            (-(eta - center).powi(2) / (2.0 * width * width)).exp() / (width * TWO_PI.sqrt())
        })
        .collect()
}

fn fiber_identities() -> Result<Vec<Check>> {
    let ctx = default_context();
    let m = heat(&ctx);
    let mut out = Vec::new();

    let z = lambda_adapted_grid(default_grid(), 4.0);
    let panel = band_limited_panel(&WeylEngine::with_lambda(&ctx, z, 4.0, Quadrature::Adaptive)?, SEED, 4, 4)?;
    let two_path = max_of(panel.iter().map(|f| two_path_agreement(&ctx, 4.0, &m, f)).collect::<Result<Vec<_>>>()?);
    out.push(check(two_path < 1e-3, format!("λ = 4: conjugation route against direct λ-engine, {two_path:.2e} (< 1e-3)")));

    for l in [1.0, 4.0] {
        let engine = |g| WeylEngine::with_lambda(&ctx, g, l, Quadrature::Adaptive);
        let (cg, fg) = (vector_field_grid(l), vector_field_fine_grid(l));
        let (coarse, fine, ratios) =
            vector_field_refinement(&ctx, l, &special_hermite_fn(&engine(cg)?, 0, 0)?, &special_hermite_fn(&engine(fg)?, 0, 0)?)?;
        let names: Vec<&str> = coarse.rows.iter().map(|r| r.identity.as_str()).collect();
        out.push(check(
            coarse.max_derived() < 1e-2 && fine.max_derived() < 1e-2,
            format!("λ = {l}, Φ₀₀, {names:?}: max residual {:.3e} (h = {}) → {:.3e} (h = {})", coarse.max_derived(), coarse.h, fine.max_derived(), fine.h),
        ));
        out.push(check(
            ratios.iter().all(|r| (3.5..=4.5).contains(r)),
            format!("λ = {l}, Φ₀₀: refinement ratios {:?} (≈ 4)", ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()),
        ));
        let rc = band_limited_panel(&engine(cg)?, 3, 2, 2)?;
        let rf = band_limited_panel(&engine(fg)?, 3, 2, 2)?;
        for (k, (c, f)) in rc.iter().zip(&rf).enumerate() {
            let (c, f, ratios) = vector_field_refinement(&ctx, l, c, f)?;
            out.push(check(
                f.max_derived() < 1e-2 && ratios.iter().all(|r| (3.5..=4.5).contains(r)),
                format!(
                    "λ = {l}, random band-2 f{k}: {:.3e} → {:.3e} (refined < 1e-2), ratios within [3.5, 4.5]: {:?}",
                    c.max_derived(),
                    f.max_derived(),
                    ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()
                ),
            ));
        }
    }

    for l in [1.0, 4.0] {
        let z = lambda_adapted_grid(default_grid(), l);
        let panel = band_limited_panel(&WeylEngine::with_lambda(&ctx, z, l, Quadrature::Adaptive)?, SEED, 4, 4)?;
        let kernel = gaussian(z.h());
        let worst = max_of(panel.iter().map(|f| Ok(lemma41_check(&ctx, &kernel, l, f)?.residual)).collect::<Result<Vec<_>>>()?);
        out.push(check(worst < 1e-3, format!("λ = {l}: Gaussian y-convolution, fiber multiplier against modulate–convolve–modulate {worst:.2e} (< 1e-3)")));
    }
    Ok(out)
}

fn rbound() -> Result<Vec<Check>> {
    let ctx = default_context();
    let grid = default_grid();
    let e = WeylEngine::new(&ctx, grid)?;
    let m = heat(&ctx);
    let panel = band_limited_panel(&e, SEED, 8, 4)?;
    let mut out = Vec::new();

    let t_heat = |f: &PhaseGridFunction| e.apply_multiplier(&m, f);
    let singles: Vec<Vec<PhaseGridFunction>> = panel.iter().take(4).map(|f| vec![f.clone()]).collect();
    for p in [2.0, 3.0] {
        let r = rademacher_estimate(&[&t_heat as &GridOperator<'_>], &singles, p, SignMode::Exact)?;
        let gap = max_of(r.rows.iter().zip(&singles).map(|(row, fs)| {
            let want = t_heat(&fs[0]).unwrap().lp_norm(p) / fs[0].lp_norm(p);
            (row.rademacher - want).abs() / want
        }));
        out.push(check(gap < 1e-12, format!("singleton {{e^(−H)}}, p = {p}: estimate equals ‖Tf‖_p/‖f‖_p to {gap:.1e}")));
    }

    let id = |f: &PhaseGridFunction| Ok(f.clone());
    let twice = |f: &PhaseGridFunction| Ok(f.scale(C64::new(2.0, 0.0)));
    let degenerate = vec![vec![PhaseGridFunction::zeros(grid), panel[0].clone()]];
    let r = rademacher_estimate(&[&id as &GridOperator<'_>, &twice], &degenerate, 2.0, SignMode::Exact)?;
    out.push(check((r.constant - 2.0).abs() < 1e-12, format!("{{I, 2I}} on the tuple (0, f): {}", r.constant)));

    let (p0, p1) = (ctx.projection(0)?, ctx.projection(1)?);
    let t0 = |f: &PhaseGridFunction| e.apply_multiplier(&p0, f);
    let t1 = |f: &PhaseGridFunction| e.apply_multiplier(&p1, f);
    let tuples: Vec<Vec<PhaseGridFunction>> = panel.chunks(2).map(|c| c.to_vec()).collect();
    let r = rademacher_estimate(&[&t0 as &GridOperator<'_>, &t1], &tuples, 2.0, SignMode::Exact)?;
    out.push(check(r.constant <= 1.0 + 1e-3, format!("{{T_P0, T_P1}}, p = 2, exact signs: {:.6} (≤ 1 + 1e-3)", r.constant)));

    let g = riesz_commutator_growth(&e, &ctx, &[1, 2, 4, 8], 2)?;
    let increasing = g.rows.windows(2).all(|w| w[1].1 > w[0].1) && g.panel_constants.windows(2).all(|w| w[1] >= w[0]);
    out.push(check(
        g.monotone && increasing,
        format!(
            "[B, T_R] statistic on Φ̄_(α,2), α = 1, 2, 4, 8: {:?}; panel constants {:?}",
            g.rows.iter().map(|r| format!("{:.4}", r.1)).collect::<Vec<_>>(),
            g.panel_constants.iter().map(|c| format!("{c:.4}")).collect::<Vec<_>>()
        ),
    ));
    Ok(out)
}

fn heisenberg_theorems() -> Result<Vec<Check>> {
    let ctx = default_context();
    let lambdas = [1.0, -1.0, 4.0, -4.0];
    let opts = FiberOptions::default();
    let identity = spectral_family(&ctx, &[1.0], "identity", |_| 1.0, None)?;
    // the first two panel draws; the seeded panel is the same sequence on every grid
    let count = 2;
    let heat = heat_family(&ctx, &[1.0])?;
    let mut out = Vec::new();

    let panel = heisenberg_panel(&ctx, default_heisenberg_grid(), SEED, count, 4, &lambdas)?;
    let a = theorem19_experiment(&ctx, &identity, &panel, 2.0, opts)?.max;
    let b = theorem110_experiment(&ctx, &identity, &panel, 2.0, 64, opts)?.max;
    out.push(check(a <= 1.0 + 1e-3, format!("identity: ‖f‖₂/‖L^(1/2) f‖₂ max {a:.6} (≤ 1 + 1e-3)")));
    out.push(check(b <= 1.0 + 1e-3, format!("identity: ‖R T R f‖₂/‖f‖₂ max {b:.6} (≤ 1 + 1e-3)")));

    let mut t19 = Vec::new();
    let mut t110 = Vec::new();
    for grid in [default_heisenberg_grid(), fine_heisenberg_grid()] {
        let panel = heisenberg_panel(&ctx, grid, SEED, count, 4, &lambdas)?;
        t19.push(theorem19_experiment(&ctx, &heat, &panel, 2.0, opts)?.max);
        t110.push(theorem110_experiment(&ctx, &heat, &panel, 2.0, 64, opts)?.max);
    }
    for (name, v) in [("‖T_m f‖₂/‖L^(1/2) f‖₂", &t19), ("‖R T_m R f‖₂/‖f‖₂", &t110)] {
        let change = relative_change(v[0], v[1]);
        out.push(check(
            v.iter().all(|x| x.is_finite()) && change <= 0.3,
            format!("e^(−H): {name} max {:.5} (m=64), {:.5} (m=96), change {change:.2e} (≤ 0.3)", v[0], v[1]),
        ));
    }
    Ok(out)
}

fn determinism() -> Result<Vec<Check>> {
    let dir = tempfile::tempdir()?;
    let mut out = Vec::new();
    for (name, _) in EXPERIMENTS {
        let mut config = ExperimentConfig::for_experiment(name)?;
        config.output_dir = dir.path().to_path_buf();
        // byte-identity is a property of the code path, not of the problem size: one panel
        // function each, and a 32-point fiber box with 32 t-samples (λ = ±1, ±4 stay on the DFT lattice)
        config.panel.count = 1;
        config.grid.fiber_m_pts = 32;
        config.grid.fiber_companion_m_pts = 64;
        config.grid.t_pts = 32;
        if name == "vectorfields-23" {
            config.params.lambdas.truncate(1);
        }
        config.params.riesz_alphas.truncate(2);
        let start = Instant::now();
        let first = experiment::run(&config)?;
        let bytes: Vec<Vec<u8>> = first.files.iter().map(fs::read).collect::<std::io::Result<_>>()?;
        let second = experiment::run(&config)?;
        let again: Vec<Vec<u8>> = second.files.iter().map(fs::read).collect::<std::io::Result<_>>()?;
        out.push(check(first.files == second.files && bytes == again, format!("{name}: {} files byte-identical ({:.1} s for both runs)", bytes.len(), start.elapsed().as_secs_f64())));
    }
    Ok(out)
}

type Criterion = (u32, &'static str, fn() -> Result<Vec<Check>>);

const CRITERIA: [Criterion; 15] = [
    (1, "Plancherel at λ = 1", plancherel),
    (2, "inversion round trip", inversion),
    (3, "twisted convolution homomorphism", homomorphism),
    (4, "exact operator identities", operator_identities),
    (5, "Riesz commutator counterexample", counterexample),
    (6, "dyadic Hilbert–Schmidt checker oracle", mauceri),
    (7, "band kernel envelopes", envelopes),
    (8, "rapid decrease of band blocks", block_decrease),
    (9, "twisted sharp maximal function", sharp_maximal),
    (10, "A_p harness and weighted ratios", ap_harness),
    (11, "λ-derivative identity", lambda_derivative),
    (12, "scaling, vector fields, y-convolution", fiber_identities),
    (13, "R-bound estimator", rbound),
    (14, "Heisenberg-group norm ratios", heisenberg_theorems),
    (15, "determinism", determinism),
];

fn main() {
    // `cargo test` passes harness flags; `acceptance <n>...` runs a subset
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    rayon::ThreadPoolBuilder::new().num_threads(1).build_global().expect("single-threaded pool");
    let mut failed = Vec::new();
    for (id, title, run) in CRITERIA {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = run();
        let secs = start.elapsed().as_secs_f64();
        let (ok, lines) = match result {
            Ok(checks) => (checks.iter().all(|c| c.ok), checks),
            Err(e) => (false, vec![check(false, format!("error: {e}"))]),
        };
        let within_budget = secs < 60.0;
        let pass = ok && within_budget;
        println!("criterion {id:>2} {} {title} ({secs:.1} s)", if pass { "PASS" } else { "FAIL" });
        for c in &lines {
            println!("      {} {}", if c.ok { " " } else { "✗" }, c.text);
        }
        if !within_budget {
            println!("      ✗ exceeded the 60 s budget");
        }
        if !pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("all criteria passed");
    } else {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
