//! Imports a JSON Lines file of labeled stance examples, skips duplicates,
//! rejects a malformed file as a whole and exports by origin.
//!
//! ```text
//! cargo run --example labeled_data
//! ```

use deliberate::domain::StanceLabel;
use deliberate::stance::{render_labeled, LabeledExample, Origin, OriginFilter};
use deliberate::store::Store;

fn main() -> deliberate::Result<()> {
    let q = "Should voting be mandatory?";
    let examples = vec![
        LabeledExample::new(q, "Yes, turnout would rise.", StanceLabel::InFavor, Origin::Manual)?,
        LabeledExample::new(q, "No, forcing people is wrong.", StanceLabel::Against, Origin::Manual)?,
        LabeledExample::new(q, "It strengthens legitimacy.", StanceLabel::InFavor, Origin::Synthetic)?,
        LabeledExample::new(q, "Fines would hit the poor.", StanceLabel::Against, Origin::Synthetic)?,
    ];
    let file = render_labeled(&examples);
    print!("file:\n{file}");

    let dir = tempfile::tempdir()?;
    let store = Store::open(dir.path())?;
    println!("first import:  {:?}", store.ingest_labeled_file(&file)?);
    println!("second import: {:?}", store.ingest_labeled_file(&file)?);

    let broken = format!("{file}{{\"question\": \"q\"}}\n");
    match store.ingest_labeled_file(&broken) {
        Ok(r) => println!("unexpected success: {r:?}"),
        Err(e) => println!("broken file rejected: {e}"),
    }

    let synthetic = store.export_labeled(OriginFilter::Only(Origin::Synthetic))?;
    print!("synthetic only:\n{synthetic}");
    println!("round trip exact: {}", store.export_labeled(OriginFilter::All)? == file);
    Ok(())
}
