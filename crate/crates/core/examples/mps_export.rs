//! Hand an assembled problem to an external solver: write MPS, read it back,
//! and check the model survived.
//!
//! ```bash
//! cargo run --example mps_export -- out.mps
//! ```

use cddr::hydro::{self, DefaultShape};
use cddr::lp::mps::{parse_mps, write_mps};
use cddr::lp::{solve, SolverOptions};
use cddr::reformulate::build_lp;

fn main() -> cddr::Result<()> {
    let (params, model) = hydro::default_instance(&DefaultShape {
        regions: 1,
        stages: 3,
        support: 2,
        seed: 1,
        relaxed: true,
    });
    let spec = hydro::generate(&params, &model)?.with_memory(2)?;
    let asm = build_lp(&spec)?;
    let text = write_mps(asm.lp(), &asm.names())?;

    let path = std::env::args().nth(1).unwrap_or_else(|| "hydro.mps".into());
    std::fs::write(&path, &text)?;
    println!("wrote {path}: {} rows, {} columns, {} nonzeros", asm.lp().n_rows(), asm.lp().n_cols(), asm.lp().nnz());

    let (back, names) = parse_mps(&std::fs::read_to_string(&path)?)?;
    assert_eq!(&back, asm.lp());
    println!("round trip exact; first columns {:?}", &names.cols[..3]);

    let r = solve(&back, &SolverOptions::default())?;
    println!("reference solver on the parsed model: {:?}, objective {:.6}", r.status, r.objective);
    Ok(())
}
