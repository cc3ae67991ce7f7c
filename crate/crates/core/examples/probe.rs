use mmt_core::generators::{random_lp, LpSize};
use mmt_core::lp::{reference, solve_lp};
use std::time::Instant;

fn main() {
    for seed in 0..50u64 {
        let size = if seed % 5 == 4 { LpSize::Large } else { LpSize::Small };
        let lp = random_lp(seed, size).unwrap();
        let t = Instant::now();
        match solve_lp(&lp) {
            Ok(sol) => {
                let oracle = reference::best_vertex(&lp).unwrap();
                match oracle {
                    Some((ov, _)) => {
                        let err = (sol.objective - ov).abs();
                        if err > 1e-7 {
                            println!("seed {seed} {size:?}: solver {} oracle {} ERR {err:.2e} ({:?})", sol.objective, ov, t.elapsed());
                        } else {
                            println!("seed {seed} {size:?}: ok err {err:.1e} ({:?})", t.elapsed());
                        }
                    }
                    None => println!("seed {seed}: oracle found no vertex"),
                }
            }
            Err(e) => println!("seed {seed} {size:?}: SOLVER ERROR {e}"),
        }
    }
}
