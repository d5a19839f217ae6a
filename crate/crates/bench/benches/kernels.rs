use criterion::{black_box, criterion_group, criterion_main, Criterion};

use weylval::descriptor::OmegaDescriptor;
use weylval::eval::{Evaluator, DEFAULT_DEPTH};
use weylval::extension::{omega_to_z, resolve_gammas};
use weylval::parse::parse;
use weylval::shadow::shadow_eval;

fn worked() -> OmegaDescriptor {
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../descriptors/worked.json")).unwrap();
    OmegaDescriptor::from_json(&src).unwrap()
}

fn kernels(c: &mut Criterion) {
    let d = worked();
    let f = parse("x^3*y^6 - 3*x^2*y^4 + x*y^2 + y^3 - 7").unwrap();
    let g = parse("x^2*y^5 + 2*x*y - 1").unwrap();
    let ev = Evaluator::new(&d, DEFAULT_DEPTH).unwrap();
    let gammas = resolve_gammas(&d, Some(1)).unwrap();

    c.bench_function("weyl_times", |b| b.iter(|| black_box(&f).times(black_box(&g))));
    c.bench_function("eval", |b| b.iter(|| ev.eval(black_box(&f)).unwrap()));
    c.bench_function("shadow_eval", |b| b.iter(|| shadow_eval(&d, black_box(&f), DEFAULT_DEPTH).unwrap()));
    c.bench_function("omega_to_z", |b| b.iter(|| omega_to_z(&d, &gammas, 16).unwrap()));
}

criterion_group!(benches, kernels);
criterion_main!(benches);
