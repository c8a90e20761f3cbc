//! Find the widest kernels that still leave every point of the expertise
//! range covered by some teacher at a given β floor.
//!
//! cargo run --example calibrate_widths

use multiteacher::teachers::{calibrate_widths, make_teacher_grid, min_coverage_beta};

fn main() -> multiteacher::Result<()> {
    for (g_dim, m) in [(1, 4), (1, 8), (2, 4), (2, 9)] {
        let template = make_teacher_grid(m, g_dim, 1.0, &vec![1.0; 2 * g_dim])?;
        println!("g_dim {g_dim}, {m} teachers");
        for floor in [0.2, 0.5, 0.8] {
            let cal = calibrate_widths(&template, floor, 41)?;
            let wider = template.with_uniform_width(cal.width * 1.01);
            println!(
                "  floor {floor}: width {:>8.4}  coverage {:.4}  (1% wider: {:.4})",
                cal.width,
                cal.coverage,
                min_coverage_beta(&wider, 41)?
            );
        }
    }
    Ok(())
}
