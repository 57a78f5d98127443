use super::*;
use crate::hermite::{HermiteContext, OperatorMatrix};
use crate::weyl::{band_limited_panel, default_context, default_grid, PhaseGrid, WeylEngine};
use crate::C64;

fn tiny_grid() -> PhaseGrid {
    PhaseGrid::new(2.0, 8).unwrap()
}

fn lcg_panel(count: usize, seed: u64) -> Vec<PhaseGridFunction> {
    let mut s = seed.wrapping_add(0x9e3779b97f4a7c15);
    let mut next = move || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    (0..count).map(|_| PhaseGridFunction::from_fn_indexed(tiny_grid(), |_, _| C64::new(next(), next()))).collect()
}

fn wide_context() -> HermiteContext {
    HermiteContext::new(1, 96, 16.0, 256).unwrap()
}

#[test]
fn singleton_scalar_family_is_exact() {
    let f = lcg_panel(3, 1);
    for c in [2.0, -2.0, 0.5] {
        let op = move |g: &PhaseGridFunction| Ok(g.scale(C64::new(c, 0.0)));
        let tuples: Vec<_> = f.iter().map(|g| vec![g.clone()]).collect();
        let r = rademacher_estimate(&[&op], &tuples, 2.0, SignMode::Exact).unwrap();
        assert_eq!(r.constant, c.abs());
        assert_eq!(r.square_function_constant, c.abs());
        assert_eq!(r.patterns, 2);
    }
}

#[test]
fn degenerate_tuple_isolates_member() {
    let f = lcg_panel(1, 2).remove(0);
    let one = |g: &PhaseGridFunction| Ok(g.clone());
    let two = |g: &PhaseGridFunction| Ok(g.scale(C64::new(2.0, 0.0)));
    let tuple = vec![vec![PhaseGridFunction::zeros(tiny_grid()), f]];
    let r = rademacher_estimate(&[&one, &two], &tuple, 2.0, SignMode::Exact).unwrap();
    assert_eq!(r.constant, 2.0);
    assert_eq!(r.patterns, 4);
}

#[test]
fn adding_a_member_with_zero_slot_keeps_the_constant() {
    let f = lcg_panel(2, 3);
    let half = |g: &PhaseGridFunction| Ok(g.map(|z| z * 0.5 + z.conj() * 0.25));
    let other = |g: &PhaseGridFunction| Ok(g.scale(C64::new(3.0, 1.0)));
    let one: Vec<_> = f.iter().map(|g| vec![g.clone()]).collect();
    let two: Vec<_> = f.iter().map(|g| vec![g.clone(), PhaseGridFunction::zeros(tiny_grid())]).collect();
    let a = rademacher_estimate(&[&half], &one, 3.0, SignMode::Exact).unwrap();
    let b = rademacher_estimate(&[&half, &other], &two, 3.0, SignMode::Exact).unwrap();
    assert!((a.constant - b.constant).abs() < 1e-15);
}

#[test]
fn mode_and_norm_errors() {
    let f = lcg_panel(13, 4);
    let id = |g: &PhaseGridFunction| Ok(g.clone());
    let members: Vec<&GridOperator<'_>> = (0..13).map(|_| &id as &GridOperator<'_>).collect();
    assert!(matches!(rademacher_estimate(&members, std::slice::from_ref(&f), 2.0, SignMode::Exact), Err(Error::Mode(_))));
    let few = SignMode::Sampled { seed: 1, draws: 100 };
    assert!(matches!(rademacher_estimate(&members, std::slice::from_ref(&f), 2.0, few), Err(Error::Mode(_))));
    let ok = SignMode::Sampled { seed: 1, draws: 512 };
    assert!(rademacher_estimate(&members, &[f], 2.0, ok).is_ok());
    let zero = vec![vec![PhaseGridFunction::zeros(tiny_grid())]];
    assert!(matches!(rademacher_estimate(&[&id], &zero, 2.0, SignMode::Exact), Err(Error::ZeroNorm(_))));
}

#[test]
fn sampled_mode_ignores_worker_count() {
    let f = lcg_panel(14, 5);
    let ops: Vec<Box<GridOperator<'static>>> = (0..14)
        .map(|k| {
            let c = C64::new(1.0 + 0.1 * k as f64, 0.05 * k as f64);
            Box::new(move |g: &PhaseGridFunction| Ok(g.scale(c))) as Box<_>
        })
        .collect();
    let members: Vec<&GridOperator<'_>> = ops.iter().map(|b| b.as_ref() as &GridOperator<'_>).collect();
    let mode = SignMode::Sampled { seed: 42, draws: 600 };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| rademacher_estimate(&members, std::slice::from_ref(&f), 1.5, mode).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.constant.to_bits(), b.constant.to_bits());
    assert_eq!(a.patterns, 600);
}

#[test]
fn orthogonal_projections_contract() {
    let ctx = default_context();
    let engine = WeylEngine::new(&ctx, default_grid()).unwrap();
    let (p0, p1) = (ctx.projection(0).unwrap(), ctx.projection(1).unwrap());
    let t0 = |f: &PhaseGridFunction| engine.apply_multiplier(&p0, f);
    let t1 = |f: &PhaseGridFunction| engine.apply_multiplier(&p1, f);
    let panel = band_limited_panel(&engine, 11, 6, 4).unwrap();
    let tuples: Vec<_> = panel.chunks(2).map(|c| c.to_vec()).collect();
    let r = rademacher_estimate(&[&t0, &t1], &tuples, 2.0, SignMode::Exact).unwrap();
    assert!(r.constant <= 1.0 + 1e-3, "{}", r.constant);
}

#[test]
fn riesz_matrix_entries() {
    let ctx = default_context();
    let r = riesz_matrix(&ctx).unwrap();
    for k in 1..64 {
        let want = (2.0 * k as f64).sqrt() / (2.0 * k as f64 + 1.0).sqrt();
        assert!((r.get(k - 1, k).re - want).abs() < 1e-15);
    }
    let mut off = r.clone();
    for k in 1..64 {
        off.entries_mut()[(k - 1, k)] = C64::new(0.0, 0.0);
    }
    assert_eq!(off.hs_norm(), 0.0);
    assert!(r.op_norm() <= 1.0);
}

#[test]
fn family_construction() {
    let ctx = default_context();
    let lams = [-2.0, -0.5, 1.0, 4.0];
    let one = spectral_family(&ctx, &lams, "one", |_| 1.0, None).unwrap();
    assert!(one.matrices().iter().all(|m| m.is_identity()));
    let riesz = riesz_family(&ctx, &lams).unwrap();
    assert!(riesz.matrices().windows(2).all(|w| w[0].entries() == w[1].entries()));
    assert!(matches!(heat_family(&ctx, &[1.0, 0.0]), Err(Error::Domain(_))));
    assert!(matches!(heat_family(&ctx, &[2.0, 1.0]), Err(Error::Domain(_))));
    let heat = heat_family(&ctx, &lams).unwrap();
    assert!((heat.matrices()[2].get(3, 3).re - (-7.0f64).exp()).abs() < 1e-16);
    // closed-form matrix derivative against a central difference
    let d = heat.matrix_derivative(-2.0).unwrap().unwrap();
    let fd = &heat.at(-2.0 + 1e-6).unwrap() - &heat.at(-2.0 - 1e-6).unwrap();
    assert!((&fd.scale_re(0.5e6) - &d).hs_norm() < 1e-6);
}

#[test]
fn overlap_is_orthogonal_near_one() {
    let ctx = default_context();
    let o = overlap_matrix(&ctx, 1.0).unwrap();
    let id = nalgebra::DMatrix::<f64>::identity(64, 64);
    assert!((&o - &id).amax() < 1e-10);
    let o = overlap_matrix(&ctx, 1.3).unwrap();
    let g = o.view((0, 0), (20, 64)) * o.view((0, 0), (20, 64)).transpose();
    assert!((g - nalgebra::DMatrix::<f64>::identity(20, 20)).amax() < 1e-8);
}

#[test]
fn operator_derivative_matches_ladder_algebra() {
    // d/dλ φ(H(λ)) seen in the λ-scaled basis is M' − [M, ξ∂]/(2λ)
    let ctx = default_context();
    let x = xi_grad_factorized(&ctx).unwrap();
    for (fam, lam) in [(heat_family(&ctx, &[1.0]).unwrap(), 1.0), (riesz_family(&ctx, &[0.7]).unwrap(), 0.7)] {
        let m = fam.at(lam).unwrap();
        let want = &fam.matrix_derivative(lam).unwrap().unwrap() - &m.commutator(&x).scale_re(0.5 / lam);
        let got = fixed_basis_derivative(&ctx, &fam, lam).unwrap();
        let idx: Vec<usize> = (0..24).collect();
        let err = (&got - &want).hs_norm_on(&idx, &idx);
        assert!(err < 1e-6 * want.hs_norm_on(&idx, &idx), "{} {err:e}", fam.tag());
    }
}

#[test]
fn constant_family_has_vanishing_terms() {
    let ctx = default_context();
    let engine = WeylEngine::new(&ctx, default_grid()).unwrap();
    let f = band_limited_panel(&engine, 1, 1, 4).unwrap().remove(0);
    let one = spectral_family(&ctx, &[1.0], "one", |_| 1.0, None).unwrap();
    let t = derivative_terms(&ctx, &one, 1.0, 1e-3, &f).unwrap();
    for g in [&t.lhs, &t.commutator_b, &t.xi_grad, &t.lambda_deriv] {
        assert_eq!(g.linf_norm(), 0.0);
    }
    assert!(matches!(derivative_terms(&ctx, &one, 1.0, 0.6, &f), Err(Error::FdStep(_))));
    assert!(matches!(derivative_terms(&ctx, &one, -1.0, 1e-3, &f), Err(Error::Domain(_))));
}

#[test]
fn heat_derivative_identity_selects_one_convention() {
    let ctx = default_context();
    let engine = WeylEngine::new(&ctx, default_grid()).unwrap();
    let f = band_limited_panel(&engine, 7, 1, 4).unwrap().remove(0);
    let heat = heat_family(&ctx, &[1.0]).unwrap();
    let r = derivative_terms(&ctx, &heat, 1.0, 1e-3, &f).unwrap().report;
    println!("{r:?}");
    assert_eq!(r.winner, Convention::MFirst);
    assert!(r.residual_m_first < 1e-2);
    assert!(r.residual_grad_first > 1e-1);
    let halving = derivative_halving(&ctx, &heat, 1.0, 0.1, &f).unwrap();
    println!("{halving:?}");
    assert!((3.0..=5.0).contains(&halving.ratio));
}

#[test]
fn ladder_identities_and_expansion() {
    let ctx = default_context();
    let heat = ctx.spectral_function(|t| (-t).exp(), 0.0).unwrap();
    let id = OperatorMatrix::identity(1, 64);
    let r = prop42_identity(&ctx, &heat, 1.0).unwrap();
    println!("{r:?}");
    assert!(r.ladder_commutator < 1e-12);
    assert!(r.xi_grad < 1e-10);
    assert!(r.expansion < 1e-10);
    assert!(r.expansion_factorized < 1e-12);
    let r4 = prop42_identity(&ctx, &heat, 4.0).unwrap();
    assert!(r4.ladder_commutator < 1e-12 && r4.expansion_factorized < 1e-11);
    let ri = prop42_identity(&ctx, &id, 1.0).unwrap();
    assert_eq!((ri.expansion_factorized, ri.lhs_scale), (0.0, 0.0));
    let deep = id.with_margin(15);
    assert!(matches!(prop42_identity(&ctx, &deep, 1.0), Err(Error::MarginExhausted { .. })));
}

#[test]
fn closed_form_identities() {
    let r = identity_residuals(&default_context()).unwrap();
    println!("{r:?}");
    assert!(r.hermite_sum < 1e-12 && r.ladder_commutator < 1e-12);
    assert!(r.delta_bar_inv_root < 1e-12 && r.delta_inv_root < 1e-12);
    assert!(r.delta_inv_root_printed_negated < 1e-12);
    assert!(r.delta_inv_root_printed > 1e-3);
    assert!(r.heat_band_forms < 1e-14);
}

#[test]
fn riesz_counterexample_growth() {
    let ctx = wide_context();
    let t = counterexample_theorem16(&ctx, &[1, 2, 4, 8, 16, 32, 64], 2).unwrap();
    for row in &t.rows {
        assert!(row.relative_difference < 1e-8, "{row:?}");
    }
    assert_eq!(t.f_norm, 1.0);
    let slope = t.slope.unwrap();
    assert!((slope - 0.5).abs() <= 0.05, "{slope}");
    let g = t.growth_ratio.unwrap();
    assert!((g - 2.0).abs() <= 0.2, "{g}");
    assert!(t.monotone);
    assert!(matches!(counterexample_theorem16(&ctx, &[94], 2), Err(Error::Truncation(_))));
    assert!(matches!(counterexample_theorem16(&ctx, &[4], 94), Err(Error::Truncation(_))));
}

#[test]
fn riesz_commutator_statistic_grows() {
    let ctx = default_context();
    let engine = WeylEngine::new(&ctx, default_grid()).unwrap();
    let g = riesz_commutator_growth(&engine, &ctx, &[1, 2, 4, 8], 2).unwrap();
    println!("{g:?}");
    assert!(g.monotone);
    assert!(g.panel_constants.windows(2).all(|w| w[1] >= w[0]));
}
