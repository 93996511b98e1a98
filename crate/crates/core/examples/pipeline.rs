//! Ratings panel and climate data aggregated to the annual activity series.

use std::path::Path;

use migcopula::header::Header;
use migcopula::pipeline::{aggregate, ingest_climate, ingest_ratings, AggregateOptions, ClimateSchema, RatingSchema};

fn main() -> migcopula::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures");
    let panel = ingest_ratings(&dir.join("ratings_panel.csv"), &RatingSchema::default())?;
    let climate = ingest_climate(&dir.join("climate_panel.csv"), &ClimateSchema::default())?;
    let series = aggregate(&panel, Some(&climate), &AggregateOptions::default())?;
    println!(
        "{} records, {} downgrades, {} upgrades",
        panel.records.len(),
        panel.downgrades(),
        panel.upgrades()
    );
    series.write_csv(std::io::stdout().lock(), &Header::new())?;
    Ok(())
}
