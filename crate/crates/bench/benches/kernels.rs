use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use supercrit::lp::{self, DyadicPartition};
use supercrit::pde::{self, Direction, PdeProblem, Source};
use supercrit::rng::stream;
use supercrit::sde::{CompensatorMode, SimConfig, Simulator};
use supercrit::{DriftField, Grid, JumpKernel, LevyModel, NonlocalOperator, SphericalMeasure};

fn model(alpha: f64, dim: usize) -> LevyModel {
    LevyModel::stable_like(alpha, SphericalMeasure::axes(dim, 1.0).unwrap()).unwrap()
}

fn kernel() -> JumpKernel {
    JumpKernel::space(|_, x: &[f64]| 1.5 + 0.3 * x[0].cos(), 1.2, 1.8, 1.0, 1.0).unwrap()
}

fn drift(dim: usize) -> DriftField {
    DriftField::from_fn(dim, |_, x: &[f64]| x.iter().map(|v| 0.2 * v.sin()).collect(), 1.0, f64::INFINITY, 0.4)
}

fn symbol(c: &mut Criterion) {
    let xis: Vec<Vec<f64>> = (0..64).map(|k| vec![2f64.powf(k as f64 / 8.0)]).collect();
    // fresh model per batch so the radial cache starts empty
    c.bench_function("symbol table 1d cold", |b| {
        b.iter_batched(|| model(0.5, 1), |m| black_box(m.symbol_table(&xis).unwrap()), BatchSize::SmallInput)
    });
    let warm = model(0.5, 1);
    warm.symbol_table(&xis).unwrap();
    c.bench_function("symbol table 1d warm", |b| b.iter(|| black_box(warm.symbol_table(&xis).unwrap())));
}

fn blocks(c: &mut Criterion) {
    for (dim, n) in [(1, 1024), (2, 64)] {
        let grid = Grid::periodic(dim, n).unwrap();
        let part = DyadicPartition::for_grid(grid).unwrap();
        let f = lp::random_field(grid, 0.5, &mut stream(1, 0));
        c.bench_function(&format!("lp blocks {dim}d n={n}"), |b| {
            b.iter(|| black_box(lp::blocks(&f, &part).unwrap()))
        });
    }
}

fn operator(c: &mut Criterion) {
    let grid = Grid::periodic(1, 256).unwrap();
    let op = NonlocalOperator::new(model(0.5, 1), kernel(), drift(1), grid).unwrap();
    let u = lp::random_field(grid, 1.0, &mut stream(2, 0));
    op.apply(&u, 0.0).unwrap();
    c.bench_function("operator apply 1d n=256", |b| b.iter(|| black_box(op.apply(&u, 0.0).unwrap())));
}

fn pde_solve(c: &mut Criterion) {
    let grid = Grid::periodic(1, 64).unwrap();
    let problem = PdeProblem::new(
        Direction::Forward,
        model(0.5, 1),
        kernel(),
        drift(1),
        Source::Constant(1.0),
        0.1,
        0.01,
        grid,
    );
    pde::solve(&problem).unwrap();
    c.bench_function("pde solve 10 steps n=64", |b| b.iter(|| black_box(pde::solve(&problem).unwrap())));
}

fn paths(c: &mut Criterion) {
    let cfg = SimConfig {
        x0: vec![0.0],
        horizon: 1.0,
        dt: 0.01,
        eps: 0.01,
        thinning_bound: 1.8,
        n_paths: 100,
        seed: 3,
        compensator: CompensatorMode::SymmetricZero,
    };
    let sim = Simulator::new(&model(0.5, 1), &kernel(), &drift(1), &cfg).unwrap();
    c.bench_function("sde one path", |b| {
        let mut i = 0u64;
        b.iter(|| {
            i += 1;
            let props = sim.proposals(&mut sim.path_stream(i));
            black_box(sim.terminal(&cfg.x0, &props).unwrap())
        })
    });
    c.bench_function("sde 100 paths parallel", |b| {
        b.iter(|| black_box(sim.map_paths(100, |_, p| sim.terminal(&cfg.x0, p)).unwrap()))
    });
}

criterion_group!(benches, symbol, blocks, operator, pde_solve, paths);
criterion_main!(benches);
