use synsis::sim::SimConfig;
use synsis::sweep::{log_space, write_csv};
use synsis::{karate_club, run_sweep, Error, Graph, SweepGrid};

fn small_grid(seed: u64) -> SweepGrid {
    SweepGrid {
        delta_values: log_space(0.2, 3.0, 4).unwrap(),
        beta_values: log_space(0.05, 1.0, 4).unwrap(),
        sim: SimConfig::new(200.0, seed),
        runs_per_cell: 2,
        ..SweepGrid::default_grid(seed)
    }
}

#[test]
fn bound_is_monotone_across_the_grid() {
    let g = Graph::path(5).unwrap();
    let grid = small_grid(3);
    let cells = run_sweep(&g, &grid).unwrap();
    let nb = grid.beta_values.len();
    assert_eq!(cells.len(), grid.num_cells());
    for r in 0..grid.delta_values.len() {
        for c in 0..nb {
            let cell = &cells[r * nb + c];
            assert_eq!(cell.delta, grid.delta_values[r]);
            assert_eq!(cell.beta, grid.beta_values[c]);
            if c > 0 {
                assert!(cell.lambda_m >= cells[r * nb + c - 1].lambda_m - 1e-8);
            }
            if r > 0 {
                assert!(cell.lambda_m <= cells[(r - 1) * nb + c].lambda_m + 1e-8);
            }
        }
    }
}

#[test]
fn same_seed_gives_identical_csv() {
    let g = Graph::complete(4).unwrap();
    let csv = |seed| {
        let mut out = Vec::new();
        write_csv(&run_sweep(&g, &small_grid(seed)).unwrap(), &mut out).unwrap();
        out
    };
    assert_eq!(csv(9), csv(9));
}

#[test]
fn karate_cell_in_the_extinct_region() {
    let g = karate_club();
    let grid = SweepGrid {
        delta_values: vec![3.0],
        beta_values: vec![0.02],
        ..SweepGrid::default_grid(1)
    };
    let cells = run_sweep(&g, &grid).unwrap();
    assert_eq!(cells.len(), 1);
    let c = &cells[0];
    assert!(c.y_star < 1.0 && c.in_e);
    assert!(c.lambda_m < 0.0 && c.in_e_lower);
    assert!((c.rho_sis + 2.86548605).abs() < 1e-6);
}

#[test]
fn weakest_corner_of_the_default_grid() {
    let g = karate_club();
    let grid = SweepGrid {
        delta_values: vec![5.0],
        beta_values: vec![0.002],
        sim: SimConfig::new(500.0, 4),
        ..SweepGrid::default_grid(4)
    };
    let c = &run_sweep(&g, &grid).unwrap()[0];
    assert!(c.y_star < 1.0 && c.in_e && c.in_e_lower && c.in_e_sis);
}

#[test]
fn unresolved_bound_fails_the_cell_loudly() {
    // near-degenerate leading eigenvalues at beta = 1e-6 need far more than the default budget
    let g = karate_club();
    let grid = SweepGrid {
        delta_values: vec![3.0],
        beta_values: vec![1e-6],
        sim: SimConfig::new(10.0, 4),
        ..SweepGrid::default_grid(4)
    };
    match run_sweep(&g, &grid) {
        Err(Error::Cell {
            delta,
            beta,
            source,
        }) => {
            assert_eq!((delta, beta), (3.0, 1e-6));
            match *source {
                Error::NoConvergence {
                    estimate, residual, ..
                } => {
                    assert!((estimate + 3.0).abs() < 1e-4);
                    assert!(residual > 1e-9);
                }
                other => panic!("unexpected {other:?}"),
            }
        }
        other => panic!("unexpected {other:?}"),
    }
}
