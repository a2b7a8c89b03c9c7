use ambipolicy::bounds::{unit_bounds, BoundsEntry, Scheme};
use ambipolicy::nuisance::PointNuisance;
use ambipolicy::optimize::{solve_quadrant, verify_solution};
use ambipolicy::scores::{orthogonal_bounds, orthogonal_score, plugin_score, Criterion, Observation, ScoreMode};
use ambipolicy::{empirical_objective, evaluate_policy, ObservationTable, OutcomeRange, Policy, PolicyClassSpec, Side};
use proptest::prelude::*;

const EPS: f64 = 1e-12;

/// Nuisances implied by a population of compliers, always-takers and
/// never-takers, so every identifying assumption holds. Also returns the
/// true CATE.
#[derive(Debug, Clone)]
struct Population {
    theta: PointNuisance,
    cate: f64,
    range: OutcomeRange,
}

fn population() -> impl Strategy<Value = Population> {
    (
        -2.0..2.0f64,
        0.1..3.0f64,
        0.02..1.0f64,
        0.0..1.0f64,
        prop::array::uniform6(0.0..1.0f64),
        0.05..0.95f64,
    )
        .prop_map(|(yl, width, c, a_share, u, zhat)| {
            let yu = yl + width;
            let a = (1.0 - c) * a_share;
            let n = 1.0 - c - a;
            let at = |s: f64| yl + s * width;
            let (mc0, mc1, ma0, ma1, mn0, mn1) = (at(u[0]), at(u[1]), at(u[2]), at(u[3]), at(u[4]), at(u[5]));
            let m11 = (c * mc1 + a * ma1) / (c + a);
            let m00 = (c * mc0 + n * mn0) / (c + n);
            let m11 = m11.clamp(yl, yu);
            let m00 = m00.clamp(yl, yu);
            let theta = PointNuisance::from_cells([[m00, mn0], [ma1, m11]], [a, c + a], zhat);
            let cate = c * (mc1 - mc0) + a * (ma1 - ma0) + n * (mn1 - mn0);
            Population { theta, cate, range: OutcomeRange::new(yl, yu).unwrap() }
        })
}

fn bounds(p: &Population, scheme: Scheme) -> BoundsEntry {
    unit_bounds(&p.theta, &scheme, &p.range).unwrap().0
}

fn observation() -> impl Strategy<Value = (f64, u8, u8)> {
    (0.0..1.0f64, 0..2u8, 0..2u8)
}

proptest! {
    #[test]
    fn cate_inside_sharp_set_and_sets_nest(p in population()) {
        let bp = bounds(&p, Scheme::BalkePearl);
        let manski = bounds(&p, Scheme::Manski);
        let mp = bounds(&p, Scheme::ManskiPepper { reversed: false });
        prop_assert!(bp.tau_low <= p.cate + EPS && p.cate <= bp.tau_high + EPS);
        prop_assert!(manski.tau_low <= bp.tau_low + EPS && bp.tau_high <= manski.tau_high + EPS);
        prop_assert!(mp.tau_low <= manski.tau_low + EPS && manski.tau_high <= mp.tau_high + EPS);
        for b in [bp, manski, mp] {
            prop_assert!(b.tau_low <= b.tau_high + EPS);
            let y = b.y.unwrap();
            prop_assert!(y.y0_low <= y.y0_high + EPS && y.y1_low <= y.y1_high + EPS);
        }
    }

    #[test]
    fn reversed_monotone_instrument_is_relabelling(p in population()) {
        let swapped = Population { theta: p.theta.swap_instrument(), ..p.clone() };
        let a = bounds(&p, Scheme::ManskiPepper { reversed: true });
        let b = bounds(&swapped, Scheme::ManskiPepper { reversed: false });
        prop_assert!((a.tau_low - b.tau_low).abs() <= EPS && (a.tau_high - b.tau_high).abs() <= EPS);
    }

    #[test]
    fn minimax_regret_score_lies_between_bounds(lo in -1.0..1.0f64, w in 0.0..1.0f64) {
        let b = BoundsEntry { y: None, tau_low: lo, tau_high: lo + w };
        let g = plugin_score(&b, &Criterion::MinimaxRegret, None).unwrap();
        prop_assert!(b.tau_low - EPS <= g && g <= b.tau_high + EPS);
    }

    #[test]
    fn hurwicz_impact_moves_with_optimism(lo in -1.0..1.0f64, w in 0.0..1.0f64, d1 in 0.0..1.0f64, d2 in 0.0..1.0f64) {
        let b = BoundsEntry { y: None, tau_low: lo, tau_high: lo + w };
        let (small, large) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let g = |delta| plugin_score(&b, &Criterion::HurwiczImpact { delta }, None).unwrap();
        prop_assert!(g(small) <= g(large) + EPS);
        prop_assert!((g(0.0) - b.tau_low).abs() <= EPS && (g(1.0) - b.tau_high).abs() <= EPS);
    }

    #[test]
    fn score_decomposition_reconstructs(p in population(), (u, d, z) in observation(), crit in 0..4usize) {
        let scheme = [Scheme::BalkePearl, Scheme::Manski, Scheme::ManskiPepper { reversed: false }][crit % 3];
        let criterion = [
            Criterion::MinimaxRegret,
            Criterion::MaximinWelfare,
            Criterion::MaximinImpact,
            Criterion::HurwiczWelfare { delta0: 0.3, delta1: 0.6 },
        ][crit].clone();
        let (entry, env) = unit_bounds(&p.theta, &scheme, &p.range).unwrap();
        let obs = Observation { y: p.range.y_low + u * p.range.width(), d, z };
        let orth = orthogonal_bounds(&obs, &p.theta, &entry, &env, &p.range, &scheme).unwrap();
        let s = orthogonal_score(&entry, &orth, &criterion, None).unwrap();
        prop_assert_eq!(s.gamma_plugin, plugin_score(&entry, &criterion, None).unwrap());
        for mode in [ScoreMode::PlugIn, ScoreMode::Orthogonal] {
            prop_assert!((s.reconstruct(mode) - s.gamma(mode)).abs() <= 1e-9);
        }
        prop_assert!((s.gamma_plugin + s.adjustment_total - s.gamma_orthogonal).abs() <= 1e-12);
    }

    #[test]
    fn objective_is_antisymmetric(gamma in prop::collection::vec(-1.0..1.0f64, 1..40), seed in any::<u64>()) {
        let a: Vec<u8> = (0..gamma.len()).map(|i| ((seed >> (i % 64)) & 1) as u8).collect();
        let flipped: Vec<u8> = a.iter().map(|v| 1 - v).collect();
        let (x, y) = (empirical_objective(&gamma, &a).unwrap(), empirical_objective(&gamma, &flipped).unwrap());
        prop_assert!((x + y).abs() <= 1e-12);
    }

    #[test]
    fn quadrant_solver_beats_any_quadrant(
        rows in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64, -1.0..1.0f64), 2..60),
        t in (0.0..1.0f64, 0.0..1.0f64),
        s in (any::<bool>(), any::<bool>()),
    ) {
        let x: Vec<f64> = rows.iter().flat_map(|r| [r.0, r.1]).collect();
        let gamma: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let table = ObservationTable::covariates_only(x, 2).unwrap();
        let best = solve_quadrant(&gamma, &table, &PolicyClassSpec::quadrant(0, 1)).unwrap();
        prop_assert!(verify_solution(&best, &gamma, &table));
        let side = |b: bool| if b { Side::Above } else { Side::AtMost };
        let other = Policy::quadrant([0, 1], [t.0, t.1], [side(s.0), side(s.1)]);
        let v = empirical_objective(&gamma, &evaluate_policy(&other, &table).unwrap()).unwrap();
        prop_assert!(v <= best.objective + 1e-12);
    }
}
