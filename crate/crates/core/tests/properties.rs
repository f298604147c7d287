use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use polyproof_core::curriculum::{AttentionProgram, CurriculumGraph, CurriculumName, GatedRemainder, SchedulerState, Task};
use polyproof_core::eval::{calibration, equivalent, Judged, Verdict};
use polyproof_core::expr::{InitialPoly, Num, ProofState, SurfaceTerm};
use polyproof_core::proof::{generate_proof, next_step, Granularity, Next, Proof, StepKind};
use polyproof_core::sampler::{sample_record, SamplerStats};
use polyproof_core::space::dedup_filter;
use polyproof_core::text::{parse, serialize, Notation, NumberEncoding, TextFormat, TokenSeq, VarEncoding};
use polyproof_core::{PolyNF, Powers, Preset, VarId};
use proptest::prelude::*;

const P: u128 = (1 << 61) - 1;

fn formats() -> Vec<TextFormat> {
    let mut v = Vec::new();
    for notation in [Notation::Infix, Notation::Prefix] {
        for numbers in [NumberEncoding::Atomic, NumberEncoding::Digit] {
            for vars in [VarEncoding::Atomic, VarEncoding::Split] {
                v.push(TextFormat { notation, numbers, vars });
            }
        }
    }
    v
}

fn big_mod(n: &BigUint) -> u128 {
    (n % BigUint::from(P)).to_u128().unwrap()
}

fn num_mod(n: &Num) -> u128 {
    match n {
        Num::Lit(v) => big_mod(v),
        Num::Bracket(sum) => sum
            .iter()
            .map(|prod| prod.iter().fold(1u128, |acc, x| acc * big_mod(x) % P))
            .fold(0, |acc, x| (acc + x) % P),
    }
}

fn pow_mod(mut b: u128, mut e: u128) -> u128 {
    let mut r = 1;
    b %= P;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % P;
        }
        b = b * b % P;
        e >>= 1;
    }
    r
}

fn term_mod(t: &SurfaceTerm, point: &[u64]) -> u128 {
    let c = if t.coeff_shown { num_mod(&t.coeff) } else { 1 };
    t.powers.iter().fold(c, |acc, p| {
        let x = point[p.var.index() as usize - 1] as u128;
        let e = if p.exp_shown { num_mod(&p.exp) } else { 1 };
        acc * pow_mod(x, e) % P
    })
}

/// Value of a state as written, mod 2^61-1, without expanding anything.
fn state_mod(s: &ProofState, point: &[u64]) -> u128 {
    let factor = |f: &polyproof_core::Factor| f.terms.iter().fold(0, |acc, t| (acc + term_mod(t, point)) % P);
    match s {
        ProofState::Flat(f) => factor(f),
        ProofState::Sum(ps) => ps
            .iter()
            .map(|p| p.factors.iter().fold(1u128, |acc, f| acc * factor(f) % P))
            .fold(0, |acc, x| (acc + x) % P),
    }
}

fn nf_strategy(nvar: u32) -> impl Strategy<Value = PolyNF> {
    prop::collection::vec((0u32..4, 0u32..4, 1u32..=300), 0..=6).prop_map(move |terms| {
        PolyNF::from_terms(terms.into_iter().map(|(a, b, c)| {
            let mut pairs = vec![(VarId::new(1).unwrap(), a)];
            if nvar > 1 {
                pairs.push((VarId::new(2).unwrap(), b));
            }
            (Powers::from_pairs(pairs), BigUint::from(c))
        }))
    })
}

fn initial_strategy() -> impl Strategy<Value = InitialPoly> {
    (0usize..Preset::ALL.len(), 1u32..=2, any::<u64>(), 0u64..1000).prop_map(|(p, nvar, seed, index)| {
        sample_record(&Preset::ALL[p].config(nvar), seed, index, &mut SamplerStats::default()).unwrap()
    })
}

fn granularity_strategy() -> impl Strategy<Value = Granularity> {
    prop_oneof![Just(Granularity::Coarse), Just(Granularity::Fine)]
}

fn states(proof: &Proof) -> Vec<ProofState> {
    std::iter::once(proof.initial.state()).chain(proof.steps.iter().map(|s| s.after.clone())).collect()
}

fn judged_strategy() -> impl Strategy<Value = Vec<Judged>> {
    prop::collection::vec((any::<bool>(), prop::option::of(0.0f64..20.0)), 0..40).prop_map(|v| {
        v.into_iter()
            .map(|(ok, confidence)| Judged {
                verdict: if ok { Verdict::Equivalent } else { Verdict::Different },
                beam_correct: ok,
                exact: ok,
                confidence,
            })
            .collect()
    })
}

const FUZZ_VOCAB: &[&str] = &[
    "(", ")", "+", "*", "^", "x_1", "x_2", "x_", "_", "0", "1", "2", "9", "12", "INT", "END", "[", "]", "#", "$", "FAC",
];

#[derive(Debug, Clone)]
enum Edit {
    Delete(usize),
    Insert(usize, usize),
    Replace(usize, usize),
    Swap(usize, usize),
}

fn edit_strategy() -> impl Strategy<Value = Edit> {
    prop_oneof![
        any::<usize>().prop_map(Edit::Delete),
        (any::<usize>(), 0..FUZZ_VOCAB.len()).prop_map(|(i, t)| Edit::Insert(i, t)),
        (any::<usize>(), 0..FUZZ_VOCAB.len()).prop_map(|(i, t)| Edit::Replace(i, t)),
        (any::<usize>(), any::<usize>()).prop_map(|(i, j)| Edit::Swap(i, j)),
    ]
}

fn mutate(tokens: &[String], edits: &[Edit]) -> Vec<String> {
    let mut t = tokens.to_vec();
    for e in edits {
        if t.is_empty() {
            t.push("(".into());
            continue;
        }
        let n = t.len();
        match *e {
            Edit::Delete(i) => {
                t.remove(i % n);
            }
            Edit::Insert(i, v) => t.insert(i % (n + 1), FUZZ_VOCAB[v].into()),
            Edit::Replace(i, v) => t[i % n] = FUZZ_VOCAB[v].into(),
            Edit::Swap(i, j) => t.swap(i % n, j % n),
        }
    }
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ring_axioms(a in nf_strategy(2), b in nf_strategy(2), c in nf_strategy(1)) {
        prop_assert_eq!(a.add(&b), b.add(&a));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert_eq!(a.add(&PolyNF::zero()), a.clone());
        prop_assert_eq!(a.mul(&PolyNF::one()), a);
    }

    #[test]
    fn eval_is_multiplicative(a in nf_strategy(2), b in nf_strategy(2), pts in prop::collection::vec((0u64..=7, 0u64..=7), 5)) {
        for (x, y) in pts {
            let pt = [x, y];
            prop_assert_eq!(a.mul(&b).eval(&pt), a.eval(&pt) * b.eval(&pt));
            prop_assert_eq!(a.add(&b).eval(&pt), a.eval(&pt) + b.eval(&pt));
        }
    }

    #[test]
    fn monomials_strictly_decrease(a in nf_strategy(2), b in nf_strategy(2)) {
        let p = a.mul(&b).add(&a);
        let keys: Vec<(u32, u32, u32)> = p
            .monomials()
            .iter()
            .map(|m| {
                let e1 = m.powers.exponent(VarId::new(1).unwrap());
                let e2 = m.powers.exponent(VarId::new(2).unwrap());
                (e1 + e2, e1, e2)
            })
            .collect();
        for w in keys.windows(2) {
            prop_assert!(w[0] > w[1], "{:?} not above {:?}", w[0], w[1]);
        }
        prop_assert!(p.monomials().iter().all(|m| m.coeff > BigUint::from(0u32)));
    }

    #[test]
    fn canonical_key_is_injective(a in nf_strategy(2), b in nf_strategy(2)) {
        prop_assert_eq!(a.canonical_key() == b.canonical_key(), a == b);
    }

    #[test]
    fn round_trip_every_format(initial in initial_strategy(), g in granularity_strategy()) {
        let proof = generate_proof(&initial, g);
        for s in states(&proof) {
            for fmt in formats() {
                let tokens = serialize(&s, fmt);
                let back = parse(&tokens, fmt);
                prop_assert_eq!(back.as_ref(), Ok(&s), "{} in {:?}", tokens, fmt);
                let spaced = TokenSeq::from_text(&format!("  {}  ", tokens.tokens().join("   ")));
                prop_assert_eq!(&spaced, &tokens);
            }
        }
    }

    #[test]
    fn fuzzed_sequences_never_panic(
        initial in initial_strategy(),
        fmt_index in 0usize..8,
        edits in prop::collection::vec(edit_strategy(), 1..4),
    ) {
        let fmt = formats()[fmt_index];
        let tokens = serialize(&initial.state(), fmt);
        let mutated = TokenSeq::new(mutate(tokens.tokens(), &edits));
        if let Ok(s) = parse(&mutated, fmt) {
            let again = serialize(&s, fmt);
            prop_assert_eq!(parse(&again, fmt), Ok(s));
        }
    }

    #[test]
    fn steps_preserve_value(initial in initial_strategy(), g in granularity_strategy(), pts in prop::collection::vec((0u64..1_000_000, 0u64..1_000_000), 5)) {
        let proof = generate_proof(&initial, g);
        let all = states(&proof);
        for (x, y) in pts {
            let pt = [x, y];
            let v0 = state_mod(&all[0], &pt);
            for s in &all {
                prop_assert_eq!(state_mod(s, &pt), v0);
            }
            let endpoint = proof.endpoint.eval(&pt);
            prop_assert_eq!(big_mod(&endpoint), v0);
        }
        prop_assert!(proof.final_state().is_terminal());
        prop_assert_eq!(proof.final_state().to_nf(), proof.endpoint);
    }

    #[test]
    fn coarse_step_count(initial in initial_strategy()) {
        let proof = generate_proof(&initial, Granularity::Coarse);
        let unsimplified = initial
            .products
            .iter()
            .filter(|p| p.factors.iter().any(|f| !f.is_canonical()))
            .count();
        let multi = initial.products.iter().filter(|p| p.factors.len() >= 2).count();
        let sum = usize::from(initial.products.len() >= 2);
        prop_assert_eq!(proof.steps.len(), unsimplified + multi + sum);
    }

    #[test]
    fn fine_refines_coarse(initial in initial_strategy()) {
        let coarse = states(&generate_proof(&initial, Granularity::Coarse));
        let fine = states(&generate_proof(&initial, Granularity::Fine));
        for s in &coarse {
            prop_assert!(fine.contains(s), "coarse state missing from fine proof: {:?}", s);
        }
        prop_assert!(fine.len() >= coarse.len());
    }

    #[test]
    fn no_raw_rendering_after_fac(initial in initial_strategy(), g in granularity_strategy()) {
        let proof = generate_proof(&initial, g);
        let Some(last_fac) = proof.steps.iter().rposition(|s| s.kind == StepKind::Fac) else { return Ok(()) };
        let fmt = TextFormat { numbers: NumberEncoding::Atomic, ..TextFormat::default() };
        for step in &proof.steps[last_fac..] {
            let t = serialize(&step.after, fmt).into_inner();
            for w in t.windows(2) {
                prop_assert!(!(w[0] == "^" && w[1] == "1"), "^1 in {:?}", t);
            }
            for w in t.windows(3) {
                prop_assert!(!(w[0] != "^" && w[1] == "1" && w[2] == "*"), "unit coefficient in {:?}", t);
            }
            if t.len() >= 2 {
                prop_assert!(!(t[0] == "1" && t[1] == "*"), "unit coefficient in {:?}", t);
            }
        }
    }

    #[test]
    fn next_step_fold_is_the_proof(initial in initial_strategy(), g in granularity_strategy()) {
        let proof = generate_proof(&initial, g);
        let mut state = initial.state();
        let mut steps = Vec::new();
        loop {
            match next_step(&state, g).unwrap() {
                Next::Terminal => break,
                Next::Step(s) => {
                    state = s.after.clone();
                    steps.push(s);
                }
            }
        }
        prop_assert_eq!(steps, proof.steps.clone());
        prop_assert_eq!(generate_proof(&initial, g), proof);
    }

    #[test]
    fn raising_threshold_never_raises_sure_rate_or_recall(judged in judged_strategy(), t1 in 0.0f64..20.0, dt in 0.0f64..10.0) {
        let lo = calibration(&judged, t1);
        let hi = calibration(&judged, t1 + dt);
        prop_assert!(hi.sure_rate <= lo.sure_rate);
        prop_assert!(hi.recall <= lo.recall);
    }

    #[test]
    fn equivalence_relation(a in initial_strategy(), b in initial_strategy(), fmt_index in 0usize..8) {
        let fmt = formats()[fmt_index];
        let pa = generate_proof(&a, Granularity::Coarse);
        let mut seqs: Vec<TokenSeq> = states(&pa).iter().map(|s| serialize(s, fmt)).collect();
        seqs.push(serialize(&b.state(), fmt));
        for x in &seqs {
            prop_assert_eq!(equivalent(x, x, fmt), Verdict::Equivalent);
            for y in &seqs {
                prop_assert_eq!(equivalent(x, y, fmt), equivalent(y, x, fmt));
                for z in &seqs {
                    if equivalent(x, y, fmt) == Verdict::Equivalent && equivalent(y, z, fmt) == Verdict::Equivalent {
                        prop_assert_eq!(equivalent(x, z, fmt), Verdict::Equivalent);
                    }
                }
            }
        }
    }

    #[test]
    fn dedup_is_idempotent(keys in prop::collection::vec(0u8..20, 0..60), forbidden in prop::collection::btree_set(0u8..20, 0..10)) {
        let forbidden: BTreeSet<String> = forbidden.iter().map(|k| k.to_string()).collect();
        let items: Vec<String> = keys.iter().map(|k| k.to_string()).collect();
        let once: Vec<String> = dedup_filter(items, &forbidden, |s: &String| s.clone()).collect();
        let twice: Vec<String> = dedup_filter(once.clone(), &forbidden, |s: &String| s.clone()).collect();
        prop_assert!(once.iter().all(|k| !forbidden.contains(k)));
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn distributions_are_valid_and_gated(
        which in 0usize..3,
        updates in prop::collection::vec((0usize..5, 0.0f64..=1.0), 0..300),
    ) {
        let name = [CurriculumName::C, CurriculumName::C2, CurriculumName::C4][which];
        let graph = CurriculumGraph::named(name);
        let mut state = SchedulerState::new(graph.clone());
        state.decay = 0.9;
        let program = GatedRemainder::default();
        for (t, acc) in updates {
            let task = Task::ALL[t];
            if graph.index(task).is_some() {
                state.update_mastery(task, acc).unwrap();
            }
            let d = state.distribution(&program);
            prop_assert!(d.iter().all(|&p| p >= 0.0));
            prop_assert!((d.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            let att = program.attention(&graph, state.mastery());
            if att.iter().any(|&a| a > 0.0) {
                for (i, &p) in d.iter().enumerate() {
                    if graph.ancestors(i).iter().any(|&a| state.mastery()[a] <= program.threshold) {
                        prop_assert_eq!(p, 0.0);
                    }
                }
            }
        }
    }
}
