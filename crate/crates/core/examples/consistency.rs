//! Consistency of the best-aligned group across topics, and per-topic
//! significance.

use opinion_align::metrics::{consistency, significance, ScoreMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let groups = vec![
        "Liberal".to_string(),
        "Moderate".to_string(),
        "Conservative".to_string(),
    ];
    let topics = vec![
        "guns".to_string(),
        "economy".to_string(),
        "science".to_string(),
        "family".to_string(),
    ];
    // scores[group][topic]
    let rows = vec![
        vec![0.82, 0.85, 0.88, 0.80],
        vec![0.84, 0.86, 0.83, 0.84],
        vec![0.78, 0.80, 0.79, 0.86],
    ];
    let c = consistency(&ScoreMatrix::from_rows(groups, topics, rows.clone()))?;
    println!("C = {:.4}, overall best group {}", c.score, c.best_group);
    for t in &c.per_topic {
        println!("  {:<8} best {:<12} alpha {:?}", t.topic, t.group, t.alpha);
    }
    let column: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    println!("alpha on guns = {:.4}", significance(&column)?);
    Ok(())
}
