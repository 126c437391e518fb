use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hetshock::hj::{dp_step, max_dp_step, ValueField};
use hetshock::solver::{BoundaryMode, Bump, Grid1D, InitialData, SolutionField, Solver};
use hetshock::{build_flux, Exec, FluxFamily};
use std::hint::black_box;

const POLICIES: [(&str, Exec); 2] = [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)];

fn perturbed() -> InitialData {
    InitialData::PerturbedPhi {
        jump_at: 0.0,
        bump: Bump {
            center: -0.5,
            half_width: 0.4,
            amplitude: 0.3,
        },
    }
}

fn godunov_step(c: &mut Criterion) {
    let flux = build_flux(FluxFamily::convex_combination()).unwrap();
    let mut group = c.benchmark_group("godunov_step");
    for n in [2_000usize, 16_000] {
        let grid = Grid1D::new(-3.0, 5.0, n).unwrap();
        let field = SolutionField::from_data(&perturbed(), &flux, grid, BoundaryMode::FarField).unwrap();
        for (name, exec) in POLICIES {
            let mut solver = Solver::new(&flux, grid, 0.45).unwrap().with_exec(exec);
            let dt = solver.stable_dt(&field).unwrap();
            group.bench_with_input(BenchmarkId::new(name, n), &field, |b, f| {
                b.iter_batched_ref(
                    || f.clone(),
                    |f| solver.step(black_box(f), dt).unwrap(),
                    criterion::BatchSize::LargeInput,
                )
            });
        }
    }
    group.finish();
}

fn dp(c: &mut Criterion) {
    let flux = build_flux(FluxFamily::GaussianLwr).unwrap();
    let mut group = c.benchmark_group("dp_step");
    group.sample_size(20);
    for n in [500usize, 2_000] {
        let grid = Grid1D::new(-3.0, 1.0, n).unwrap();
        let data = InitialData::PerturbedPhi {
            jump_at: 0.0,
            bump: Bump {
                center: -1.5,
                half_width: 0.5,
                amplitude: 0.3,
            },
        };
        let field = SolutionField::from_data(&data, &flux, grid, BoundaryMode::FarField).unwrap();
        let v = ValueField::from_field(&field, (flux.u_minus(), flux.u_plus()));
        let dt = max_dp_step(&flux, &v);
        let reach = 1.5 * flux.speed_bound(-0.5, 1.5);
        for (name, exec) in POLICIES {
            group.bench_with_input(BenchmarkId::new(name, n), &v, |b, v| {
                b.iter(|| dp_step(&flux, black_box(v), dt, reach, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, godunov_step, dp);
criterion_main!(benches);
