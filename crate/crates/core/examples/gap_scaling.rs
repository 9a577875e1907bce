//! Spectral gap of the clock Hamiltonian of an idle qubit versus the number
//! of time points.

use clockqmc::cli::gap_scan;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (rows, slope) = gap_scan(4, 64)?;
    for (t, gap) in &rows {
        println!("T={t:>3}  gap={gap:.6}  gap*T^2={:.3}", gap * (*t as f64).powi(2));
    }
    println!("log-log slope {slope:.3}");
    Ok(())
}
