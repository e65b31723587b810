use serde::{Deserialize, Serialize};

use crate::learn::GbdtModel;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Importance {
    pub feature: String,
    pub index: usize,
    /// Internal nodes testing this feature across the ensemble.
    pub splits: u64,
}

/// Features ranked by split count, most used first; ties keep column order.
/// Missing names fall back to `feature_<index>`.
pub fn feature_importance(model: &GbdtModel, names: &[String]) -> Vec<Importance> {
    let mut ranked: Vec<Importance> = model
        .split_counts
        .iter()
        .enumerate()
        .map(|(index, &splits)| Importance {
            feature: names.get(index).cloned().unwrap_or_else(|| format!("feature_{index}")),
            index,
            splits,
        })
        .collect();
    ranked.sort_by(|a, b| b.splits.cmp(&a.splits).then(a.index.cmp(&b.index)));
    ranked
}

/// 1-based rank of the first entry satisfying `pred`.
pub fn best_rank<F: Fn(&Importance) -> bool>(ranked: &[Importance], pred: F) -> Option<usize> {
    ranked.iter().position(pred).map(|p| p + 1)
}
