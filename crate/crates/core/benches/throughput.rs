//! Throughput of the grid-parallel inner loops. Built with the default
//! `parallel` feature each group also runs inside a single-thread pool for a
//! same-binary comparison; `cargo bench --no-default-features` measures the
//! fully sequential build.

use criterion::{criterion_group, criterion_main, Criterion};
use phasespace::density::{
    cohen_kernel_factorized, default_kernel_grids, density_factorized, density_wigner,
    CohenKernel,
};
use phasespace::dynamics::propagate_strided;
use phasespace::moments::table1;
use phasespace::states::{ho_eigenstate, momentum_transform, OscillatorParams};
use phasespace::{Grid1D, Potential};

fn bench_name(op: &str) -> String {
    #[cfg(feature = "parallel")]
    return format!("{op}/parallel");
    #[cfg(not(feature = "parallel"))]
    return format!("{op}/sequential");
}

/// Run `f` pinned to one rayon thread, for an in-binary sequential baseline.
#[cfg(feature = "parallel")]
fn single_threaded<T>(f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("pool")
        .install(f)
}

fn bench_transforms(c: &mut Criterion) {
    let params = OscillatorParams::natural();
    let grid = Grid1D::symmetric(14.0, 513).unwrap();
    let pgrid = Grid1D::symmetric(14.0, 241).unwrap();
    let psi = ho_eigenstate(3, &params, &grid, 0.0).unwrap();

    let mut group = c.benchmark_group("momentum_transform");
    group.bench_function(bench_name("513x241"), |b| {
        b.iter(|| momentum_transform(&psi, &pgrid).unwrap())
    });
    #[cfg(feature = "parallel")]
    group.bench_function("513x241/one_thread", |b| {
        b.iter(|| single_threaded(|| momentum_transform(&psi, &pgrid).unwrap()))
    });
    group.finish();

    let mut group = c.benchmark_group("density_wigner");
    group.bench_function(bench_name("513x241"), |b| {
        b.iter(|| density_wigner(&psi, &pgrid).unwrap())
    });
    #[cfg(feature = "parallel")]
    group.bench_function("513x241/one_thread", |b| {
        b.iter(|| single_threaded(|| density_wigner(&psi, &pgrid).unwrap()))
    });
    group.finish();

    let phi = momentum_transform(&psi, &pgrid).unwrap();
    let mut group = c.benchmark_group("density_factorized");
    group.bench_function(bench_name("513x241"), |b| {
        b.iter(|| density_factorized(&psi, &phi).unwrap())
    });
    group.finish();
}

fn bench_cohen(c: &mut Criterion) {
    let params = OscillatorParams::natural();
    let grid = Grid1D::symmetric(12.0, 513).unwrap();
    let psi = ho_eigenstate(0, &params, &grid, 0.0).unwrap();
    let (tg, ug) = default_kernel_grids(&params);
    let xgrid = Grid1D::symmetric(6.0, 101).unwrap();
    let pgrid = Grid1D::symmetric(6.0, 101).unwrap();

    let mut group = c.benchmark_group("cohen");
    group.sample_size(20);
    group.bench_function(bench_name("kernel_factorized"), |b| {
        b.iter(|| cohen_kernel_factorized(&psi, &tg, &ug, 1e-8).unwrap())
    });
    let kernel = CohenKernel::unity(tg, ug);
    group.bench_function(bench_name("distribution_unity"), |b| {
        b.iter(|| {
            phasespace::density::cohen_distribution(&psi, &kernel, &xgrid, &pgrid).unwrap()
        })
    });
    #[cfg(feature = "parallel")]
    group.bench_function("distribution_unity/one_thread", |b| {
        b.iter(|| {
            single_threaded(|| {
                phasespace::density::cohen_distribution(&psi, &kernel, &xgrid, &pgrid).unwrap()
            })
        })
    });
    group.finish();
}

fn bench_dynamics_and_table(c: &mut Criterion) {
    let params = OscillatorParams::natural();
    let grid = Grid1D::symmetric(10.235, 2048).unwrap();
    let packet = phasespace::states::gaussian_packet(
        1.0,
        0.0,
        std::f64::consts::FRAC_1_SQRT_2,
        &params,
        &grid,
    )
    .unwrap();
    let pot = Potential::Harmonic { mass: 1.0, omega: 1.0 };

    let mut group = c.benchmark_group("dynamics");
    group.sample_size(20);
    group.bench_function(bench_name("propagate_100_steps"), |b| {
        b.iter(|| propagate_strided(&packet, &pot, 1e-3, 100, 100).unwrap())
    });
    group.finish();

    let mut group = c.benchmark_group("moments");
    group.bench_function(bench_name("table_nmax_6"), |b| {
        b.iter(|| table1(6, &params).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_transforms, bench_cohen, bench_dynamics_and_table);
criterion_main!(benches);
