use convtile::nlp::library::{library, Posynomial};
use convtile::nlp::{minimize, NlpOptions, NlpProblem};

fn grid_points(p: &Posynomial) -> usize {
    if p.dims() <= 2 {
        2001
    } else {
        201
    }
}

fn solve(p: &Posynomial, seed: u64) -> (f64, Vec<f64>) {
    let eval = |x: &[f64], g: &mut [f64]| p.eval(x, g);
    let problem = NlpProblem::new(p.bounds.clone(), p.constraints.len(), &eval);
    let opts = NlpOptions {
        seed,
        ..NlpOptions::default()
    };
    let r = minimize(&problem, &opts).unwrap();
    assert!(r.feasible, "{}: no feasible point", p.name);
    (r.f, r.x)
}

#[test]
fn posynomial_library_within_two_percent_of_grid() {
    let mut runs = 0;
    let mut good = 0;
    for p in library() {
        let grid = p.grid_optimum(grid_points(&p));
        for seed in 0..5 {
            let (f, x) = solve(&p, seed);
            // returned points are feasible to tolerance
            let mut g = vec![0.0; p.constraints.len()];
            p.eval(&x, &mut g);
            assert!(g.iter().all(|&v| v <= 1e-6), "{}: violation {g:?}", p.name);
            runs += 1;
            let gap = (f - grid) / grid;
            if gap <= 0.02 {
                good += 1;
            } else {
                eprintln!("{} seed {seed}: {f} vs grid {grid}", p.name);
            }
        }
    }
    assert!(good as f64 >= 0.95 * runs as f64, "{good}/{runs} within 2%");
}

#[test]
fn same_seed_same_answer() {
    for p in library() {
        assert_eq!(solve(&p, 3), solve(&p, 3));
    }
}
