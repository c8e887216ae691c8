//! The synthetic families are only useful if their programs really
//! separate them; these checks pin that down independently of the oracle.

mod common;

use bpforge_core::dsl::{compile, evaluate_panel};
use bpforge_core::optimize::{optimize_params, OptBudget};
use bpforge_core::verify::score_program;
use common::{FAMILIES, SIZE};

#[test]
fn panels_are_nonblank_and_distinct() {
    for f in FAMILIES {
        let p = f.problem(1);
        let imgs: Vec<_> = p.positives().iter().chain(p.negatives()).map(|x| x.image().clone()).collect();
        for (i, a) in imgs.iter().enumerate() {
            assert_eq!((a.width(), a.height()), (SIZE, SIZE));
            assert!(a.foreground_count() > 0, "{} panel {i} blank", f.name);
        }
        for i in 0..12 {
            for j in i + 1..12 {
                assert!(imgs[i] != imgs[j], "{}: panels {i} and {j} identical", f.name);
            }
        }
    }
}

#[test]
fn every_family_program_fits_every_fold() {
    for f in FAMILIES {
        let program = compile(&f.program()).unwrap();
        let problem = f.problem(1);
        for k in 0..6 {
            let fold = problem.fold(k).unwrap();
            let fit = optimize_params(&program, &fold.train, OptBudget::default(), k as u64).unwrap();
            assert_eq!(fit.score, 1.0, "{} fold {k}: {:?}", f.name, fit.trace.evaluations);
            for ex in &fold.test {
                assert_eq!(evaluate_panel(&program, &ex.panel, &fit.bindings).unwrap(), ex.label, "{} fold {k}", f.name);
            }
        }
    }
}

#[test]
fn ambiguous_family_has_two_perfect_explanations() {
    let f = &FAMILIES[common::AMBIGUOUS];
    let problem = f.problem(1);
    let rival = compile(&common::family("line_length").program()).unwrap();
    let fit = optimize_params(&rival, &problem.examples(), OptBudget::default(), 0).unwrap();
    assert_eq!(score_program(&rival, &fit.bindings, &problem.examples()).unwrap(), 1.0);
}

#[test]
fn only_the_ambiguous_family_has_a_rival_explanation() {
    for (i, f) in FAMILIES.iter().enumerate() {
        let examples = f.problem(1).examples();
        for (j, g) in FAMILIES.iter().enumerate() {
            if i == j {
                continue;
            }
            let program = compile(&g.program()).unwrap();
            let best = (0..3)
                .map(|seed| optimize_params(&program, &examples, OptBudget::default(), seed).unwrap().score)
                .fold(0.0, f64::max);
            let rival = i == common::AMBIGUOUS && g.name == "line_length";
            assert_eq!(best == 1.0, rival, "{} program on {} panels scores {best}", g.name, f.name);
        }
    }
}
