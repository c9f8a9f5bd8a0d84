//! Printing and reparsing is the identity, on the built-in models and on
//! five hundred generated ones.
//!
//! Position fields compare equal by construction, so plain `==` on the
//! surface syntax tree is equality modulo source locations. The generator
//! draws every production of the grammar, including expression shapes
//! that force the printer to parenthesize.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tamc::parse::{
    AssignDef, Decl, EdgeDef, LocDef, Name, Pos, SourceModel, SrcConstraint, SrcExpr, SyncDef,
    TemplateDef,
};
use tamc::query::render_query;
use tamc::ta::{CmpOp, LocationKind};
use tamc::{build_model, model_text, parse_model, parse_queries, print_model, queries_text,
    MODEL_NAMES};

struct Gen {
    rng: ChaCha8Rng,
    counter: usize,
}

impl Gen {
    fn new(seed: u64) -> Gen {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            counter: 0,
        }
    }

    /// A fresh identifier. The digit suffix keeps it unique and out of
    /// the reserved-word list.
    fn name(&mut self) -> Name {
        let letters = ["a", "b", "k", "m", "n", "p", "q", "r", "s", "t", "w", "x", "z"];
        let l = letters[self.rng.gen_range(0..letters.len())];
        self.counter += 1;
        Name {
            text: format!("{}{}", l, self.counter),
            pos: Pos::default(),
        }
    }

    fn names(&mut self, count: usize) -> Vec<Name> {
        (0..count).map(|_| self.name()).collect()
    }

    fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.rng.gen_range(0..xs.len())]
    }

    fn expr(&mut self, vocab: &[Name], depth: usize) -> SrcExpr {
        let roll = self.rng.gen_range(0..100);
        if depth == 0 || roll < 30 {
            if roll % 10 == 0 {
                SrcExpr::Num(self.rng.gen_range(-4..=-1))
            } else {
                SrcExpr::Num(self.rng.gen_range(0..=9))
            }
        } else if roll < 65 && !vocab.is_empty() {
            SrcExpr::Name(self.pick(vocab).clone())
        } else {
            let a = Box::new(self.expr(vocab, depth - 1));
            let b = Box::new(self.expr(vocab, depth - 1));
            match self.rng.gen_range(0..3) {
                0 => SrcExpr::Add(a, b),
                1 => SrcExpr::Sub(a, b),
                _ => SrcExpr::Mul(a, b),
            }
        }
    }

    fn constraint(&mut self, vocab: &[Name]) -> SrcConstraint {
        let op = match self.rng.gen_range(0..5) {
            0 => CmpOp::Lt,
            1 => CmpOp::Le,
            2 => CmpOp::Eq,
            3 => CmpOp::Ge,
            _ => CmpOp::Gt,
        };
        SrcConstraint {
            lhs: self.expr(vocab, 2),
            op,
            rhs: self.rng.gen_range(-9..=20),
            pos: Pos::default(),
        }
    }

    fn constraints(&mut self, vocab: &[Name], max: usize) -> Vec<SrcConstraint> {
        let k = self.rng.gen_range(0..=max);
        (0..k).map(|_| self.constraint(vocab)).collect()
    }

    fn model(&mut self) -> SourceModel {
        let mut decls = Vec::new();
        let mut vocab: Vec<Name> = Vec::new();
        let mut chans: Vec<Name> = Vec::new();
        for _ in 0..self.rng.gen_range(0..=2) {
            let count = self.rng.gen_range(1..=3);
            let names = self.names(count);
            vocab.extend(names.iter().cloned());
            decls.push(Decl::Clocks(names));
        }
        for _ in 0..self.rng.gen_range(0..=2) {
            let lo = self.rng.gen_range(-5..=5);
            let hi = lo + self.rng.gen_range(0..=10);
            let count = self.rng.gen_range(1..=2);
            let names = self.names(count);
            vocab.extend(names.iter().cloned());
            decls.push(Decl::Ints { lo, hi, names });
        }
        for _ in 0..self.rng.gen_range(0..=2) {
            let count = self.rng.gen_range(1..=3);
            let names = self.names(count);
            chans.extend(names.iter().cloned());
            decls.push(Decl::Chans {
                broadcast: self.rng.gen_bool(0.3),
                names,
            });
        }
        let mut templates = Vec::new();
        for _ in 0..self.rng.gen_range(1..=3) {
            let tname = self.name();
            let mut locations = Vec::new();
            for _ in 0..self.rng.gen_range(1..=4) {
                let kind = match self.rng.gen_range(0..10) {
                    0 => LocationKind::Urgent,
                    1 => LocationKind::Committed,
                    _ => LocationKind::Normal,
                };
                locations.push(LocDef {
                    kind,
                    name: self.name(),
                    invariant: self.constraints(&vocab, 2),
                });
            }
            let loc_names: Vec<Name> = locations.iter().map(|l| l.name.clone()).collect();
            let init = self.pick(&loc_names).clone();
            let mut edges = Vec::new();
            for _ in 0..self.rng.gen_range(0..=5) {
                let sync = if !chans.is_empty() && self.rng.gen_bool(0.5) {
                    Some(SyncDef {
                        channel: self.pick(&chans).clone(),
                        send: self.rng.gen_bool(0.5),
                    })
                } else {
                    None
                };
                let assigns = (0..self.rng.gen_range(0..=2))
                    .map(|_| AssignDef {
                        target: if vocab.is_empty() || self.rng.gen_bool(0.2) {
                            self.name()
                        } else {
                            self.pick(&vocab).clone()
                        },
                        value: self.expr(&vocab, 2),
                    })
                    .collect();
                edges.push(EdgeDef {
                    source: self.pick(&loc_names).clone(),
                    target: self.pick(&loc_names).clone(),
                    guard: self.constraints(&vocab, 3),
                    sync,
                    assigns,
                });
            }
            templates.push(TemplateDef {
                name: tname,
                locations,
                init,
                edges,
            });
        }
        let template_names: Vec<Name> = templates.iter().map(|t| t.name.clone()).collect();
        let system = (0..self.rng.gen_range(1..=4))
            .map(|_| self.pick(&template_names).clone())
            .collect();
        SourceModel {
            decls,
            templates,
            system,
        }
    }
}

#[test]
fn printing_and_reparsing_five_hundred_generated_models_is_lossless() {
    let mut g = Gen::new(2024);
    for round in 0..500 {
        let model = g.model();
        let text = print_model(&model);
        let reparsed = match parse_model(&text) {
            Ok(m) => m,
            Err(ds) => panic!(
                "round {}: printer emitted unparseable text: {}\n{}",
                round, ds[0], text
            ),
        };
        assert_eq!(reparsed, model, "round {}: reparse changed the tree\n{}", round, text);
        let reprinted = print_model(&reparsed);
        assert_eq!(reprinted, text, "round {}: printing is not a fixpoint", round);
    }
}

#[test]
fn corpus_sources_survive_a_parse_print_parse_trip() {
    for &name in &MODEL_NAMES {
        let text = model_text(name).unwrap();
        let first = parse_model(&text).unwrap();
        let printed = print_model(&first);
        let second = parse_model(&printed)
            .unwrap_or_else(|ds| panic!("{}: printed form fails to parse: {}", name, ds[0]));
        assert_eq!(second, first, "{}: reparse changed the tree", name);
        assert_eq!(print_model(&second), printed, "{}: printing is not a fixpoint", name);
    }
}

#[test]
fn corpus_queries_render_and_reparse_to_themselves() {
    for &name in &MODEL_NAMES {
        let net = build_model(name).unwrap();
        let queries = parse_queries(queries_text(name).unwrap(), &net.system).unwrap();
        assert!(!queries.is_empty());
        for q in &queries {
            let rendered = render_query(&net, q);
            let again = parse_queries(&rendered, &net.system).unwrap();
            assert_eq!(again.len(), 1);
            assert_eq!(
                render_query(&net, &again[0]),
                rendered,
                "{}: query rendering is not a fixpoint",
                name
            );
        }
    }
}
