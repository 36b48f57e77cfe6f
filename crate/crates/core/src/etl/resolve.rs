use super::EtlError;
use crate::kg::{KnowledgeGraph, NodeId, PlaceLevel};

/// Maps an official place code to its node.
///
/// Municipalities use 7-digit codes; a 6-digit code resolves when exactly
/// one registered municipality code starts with it. States use the two-letter
/// UF code and the country uses `BR`.
pub fn resolve_place_code(graph: &KnowledgeGraph, code: &str, level: PlaceLevel) -> Result<NodeId, EtlError> {
    let code = code.trim();
    let unknown = || EtlError::UnknownCode {
        code: code.to_string(),
        level,
    };
    let at_level = |id: &&NodeId| graph.level_of(id) == Some(level);
    let exact = |c: &str| -> Result<NodeId, EtlError> {
        let hits: Vec<NodeId> = graph.nodes_with_code(c).filter(at_level).cloned().collect();
        match hits.len() {
            0 => Err(unknown()),
            1 => Ok(hits.into_iter().next().unwrap()),
            _ => Err(EtlError::AmbiguousCode {
                code: code.to_string(),
                candidates: hits,
            }),
        }
    };
    match level {
        PlaceLevel::Country | PlaceLevel::State => exact(&code.to_ascii_uppercase()),
        PlaceLevel::Municipality => {
            if !code.bytes().all(|b| b.is_ascii_digit()) {
                return Err(unknown());
            }
            match code.len() {
                7 => exact(code),
                6 => {
                    let hits: Vec<NodeId> = graph
                        .codes_with_prefix(code)
                        .filter(|(c, id)| c.len() == 7 && at_level(id))
                        .map(|(_, id)| id.clone())
                        .collect();
                    match hits.len() {
                        0 => Err(unknown()),
                        1 => Ok(hits.into_iter().next().unwrap()),
                        _ => Err(EtlError::AmbiguousCode {
                            code: code.to_string(),
                            candidates: hits,
                        }),
                    }
                }
                _ => Err(unknown()),
            }
        }
    }
}
