//! The simulate, suggest, modify, re-simulate cycle through the persistent
//! workbench, ending with a comparison report.
//!
//! ```text
//! cargo run --example feedback_loop -- [edges.txt] [store-dir]
//! ```
//! Without arguments a synthetic preferential-attachment graph is used and
//! the run store goes to a temporary directory.

use infmax::graph::Directedness;
use infmax::seeds::{AlgorithmName, AlgorithmSpec};
use infmax::workbench::{RunRequest, SeedSource, Workbench};
use rand::{Rng, SeedableRng};

fn synthetic_edges(n: u32) -> Vec<u8> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut ends = vec![0u32, 1];
    let mut out = String::from("0 1\n");
    for v in 2..n {
        for _ in 0..2 {
            let u = ends[rng.random_range(0..ends.len())];
            out.push_str(&format!("{u} {v}\n"));
            ends.extend([u, v]);
        }
    }
    out.into_bytes()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let edges = args.next();
    let scratch = tempfile::tempdir()?;
    let root = args
        .next()
        .map_or_else(|| scratch.path().to_path_buf(), Into::into);
    let wb = Workbench::open(&root, 4)?;

    let manifest = match &edges {
        Some(path) => wb.ingest_file(path.as_ref(), Directedness::UndirectedAsBidirectional)?,
        None => wb.ingest_dataset(
            "synthetic",
            &synthetic_edges(1500),
            Directedness::UndirectedAsBidirectional,
        )?,
    };
    println!(
        "graph {}: {} vertices, {} arcs",
        manifest.graph_ref, manifest.node_count, manifest.arc_count
    );

    let mut req = RunRequest::new(
        &manifest.graph_ref,
        SeedSource::Algorithm(AlgorithmSpec {
            name: AlgorithmName::Sdisc,
            k: 40,
            rng_seed: 0,
        }),
    );
    req.runs = 200;
    req.master_seed = 11;
    let base = wb.create_run(&req)?;

    let payload = wb.suggestion(&base.run_id, 5, None)?;
    for (out, inn) in payload
        .suggestion
        .removals
        .iter()
        .zip(&payload.suggestion.promotions)
    {
        println!(
            "swap out v{} (degree {}, cell {:?}) for v{} (degree {}, cell {:?})",
            out.vertex, out.degree, out.cell, inn.vertex, inn.degree, inn.cell
        );
    }
    match wb.accept_all(&base.run_id, 5)? {
        Some(child) => print!(
            "{}",
            wb.compare(&base.run_id, &child.run_id, None)?.to_text()
        ),
        None => println!("nothing to swap"),
    }
    println!("run store at {}", root.display());
    Ok(())
}
