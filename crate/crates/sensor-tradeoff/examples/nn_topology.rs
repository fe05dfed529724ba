//! Layouts, conflict graphs, and activity-pattern enumeration.
//!
//! Two sensors conflict when either is the nearest neighbor of the other, so
//! the conflict graph is symmetric even though "nearest neighbor of" is not.
//! Carrier sensing then permits exactly the independent sets of that graph as
//! simultaneous-transmission patterns.

use sensor_tradeoff::topology::{build_nn_graph, enumerate_states, SensorLayout};

fn main() -> sensor_tradeoff::Result<()> {
    // Four sensors on a line with one stretched gap. Sensor 3 is closest to
    // sensor 4, but sensor 4's nearest neighbor is sensor 3 as well, while
    // sensor 3's is sensor 2: the mutual rule keeps both edges.
    let layout = SensorLayout::new(vec![[0.0, 0.0], [1.0, 0.0], [2.1, 0.0], [3.4, 0.0]])?;
    let graph = build_nn_graph(&layout)?;

    println!("sensor positions:");
    for (i, p) in layout.points().iter().enumerate() {
        println!("  n{}  ({:>4.1}, {:>4.1})", i + 1, p[0], p[1]);
    }

    println!("\nconflict edges (1-based):");
    for &(a, b) in graph.edges() {
        println!(
            "  n{} -- n{}   distance {:.3}",
            a + 1,
            b + 1,
            layout.distance(a, b)
        );
    }
    println!("forest: {}", graph.is_forest());

    let states = enumerate_states(&graph)?;
    println!("\n{} admissible activity patterns:", states.len());
    for state in &states {
        println!("  {}  {}", state.bit_string(), state.label());
    }

    // An edgeless graph admits every subset; a path graph thins that out.
    let line = SensorLayout::line(5)?;
    let path = build_nn_graph(&line)?;
    println!(
        "\n5 sensors: 2^5 = 32 subsets, path graph admits {}",
        enumerate_states(&path)?.len()
    );
    Ok(())
}
