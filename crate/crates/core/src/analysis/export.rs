//! Pair-tagged embedding rows for an external 2-D projection.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::embed::Embeddings;
use super::AnalysisError;
use crate::vocab::LwPair;

/// Writes CSV with header `tag,pair,token_id,v0,...`. Each pair gives an
/// `lw` and a `bare` row; then up to `background_k` `background` rows drawn
/// without replacement from ids outside every pair. An empty pair list
/// yields the header alone. Returns the number of data rows.
pub fn export_projection_inputs(
    emb: &Embeddings,
    pairs: &[LwPair],
    background_k: usize,
    seed: u64,
    out: impl Write,
) -> Result<usize, AnalysisError> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| AnalysisError::Malformed(format!("writing projection rows: {e}"));
    let mut header = vec!["tag".to_string(), "pair".into(), "token_id".into()];
    header.extend((0..emb.cols()).map(|i| format!("v{i}")));
    w.write_record(&header).map_err(csv_err)?;

    let write_row = |w: &mut csv::Writer<_>, tag: &str, pair: Option<usize>, id: u32| {
        let row = emb
            .row(id)
            .ok_or(AnalysisError::IdOutOfRange { id, rows: emb.rows() })?;
        let mut rec = vec![
            tag.to_string(),
            pair.map_or_else(String::new, |p| p.to_string()),
            id.to_string(),
        ];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(csv_err)
    };

    let mut rows = 0;
    if !pairs.is_empty() {
        for (i, p) in pairs.iter().enumerate() {
            write_row(&mut w, "lw", Some(i), p.lw_id)?;
            write_row(&mut w, "bare", Some(i), p.bare_id)?;
            rows += 2;
        }
        let members: std::collections::HashSet<u32> =
            pairs.iter().flat_map(|p| [p.lw_id, p.bare_id]).collect();
        let pool: Vec<u32> = (0..emb.rows() as u32).filter(|i| !members.contains(i)).collect();
        let k = background_k.min(pool.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = rand::seq::index::sample(&mut rng, pool.len(), k).into_vec();
        picked.sort_unstable();
        for i in picked {
            write_row(&mut w, "background", None, pool[i])?;
            rows += 1;
        }
    }
    w.flush()
        .map_err(|e| AnalysisError::Malformed(format!("writing projection rows: {e}")))?;
    Ok(rows)
}
