//! Generates each graph family and prints it in the graph text format.

use dynbhs::harness::{generate_graph, GraphKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kinds = [
        (GraphKind::Ring { n: 4 }, Some(2)),
        (GraphKind::Star { n: 5 }, Some(0)),
        (GraphKind::Grid { a: 2, b: 3 }, None),
        (GraphKind::RandomConnected { n: 8, m: 12, seed: 7 }, Some(5)),
        (GraphKind::CliqueChain { p: 3 }, None),
    ];
    for (kind, bh) in kinds {
        let f = generate_graph(&kind, bh)?;
        println!("# {kind:?}\n{}", f.to_text());
    }
    match generate_graph(&GraphKind::RandomConnected { n: 5, m: 11, seed: 0 }, None) {
        Err(e) => println!("# rejected: {e}"),
        Ok(_) => unreachable!("too many edges for 5 nodes"),
    }
    Ok(())
}
