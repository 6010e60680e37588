use serde::{Deserialize, Serialize};

use crate::ratio::{serde_rational, serde_rational_vec, Rational};

/// One piece of an assembled packing-dimension family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "part", rename_all = "snake_case")]
pub enum FamilyPart {
    /// The whole space `K`.
    Whole,
    /// A family over the full space with targets `A ∩ [0, β_0]`.
    Base {
        #[serde(with = "serde_rational")]
        beta: Rational,
        #[serde(with = "serde_rational_vec")]
        targets: Vec<Rational>,
    },
    /// `K_0 ∪ C` for `C` in a family inside `B(y0, 2^{-radius_level})` with
    /// targets `A ∩ [0, β_n]`.
    Layer {
        n: u32,
        radius_level: u32,
        #[serde(with = "serde_rational")]
        beta: Rational,
        #[serde(with = "serde_rational_vec")]
        targets: Vec<Rational>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyDescription {
    #[serde(with = "serde_rational")]
    pub top: Rational,
    /// Dimension of the compact set `K_0 ∋ y0` joined to every layer member.
    #[serde(default, with = "crate::ratio::serde_rational_opt")]
    pub k0_dim: Option<Rational>,
    pub parts: Vec<FamilyPart>,
}

impl FamilyDescription {
    /// Every dimension value some part can realise.
    pub fn realised(&self) -> Vec<Rational> {
        let mut out: Vec<Rational> = self
            .parts
            .iter()
            .flat_map(|p| match p {
                FamilyPart::Whole => vec![self.top],
                FamilyPart::Base { targets, .. } => targets.clone(),
                // dim(K_0 ∪ C) = max(β_0, dim C)
                FamilyPart::Layer { targets, .. } => targets
                    .iter()
                    .map(|t| self.k0_dim.map_or(*t, |b| b.max(*t)))
                    .collect(),
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

/// Splits the target set `a ⊂ [0, top]` into the base family, the whole
/// space, and `layers` nested layers around the origin, with
/// `β_n = top − (top − β_0)/(n + 1)`.
pub fn packing_family_assembly(a: &[Rational], top: Rational, layers: u32) -> FamilyDescription {
    let mut a: Vec<Rational> = a.iter().copied().filter(|v| *v >= Rational::from_integer(0) && *v <= top).collect();
    a.sort();
    a.dedup();
    let empty = FamilyDescription { top, k0_dim: None, parts: Vec::new() };
    let Some(&beta0) = a.iter().find(|v| **v < top) else {
        return if a.is_empty() {
            empty
        } else {
            FamilyDescription { top, k0_dim: None, parts: vec![FamilyPart::Whole] }
        };
    };
    let upto = |b: Rational| a.iter().copied().filter(|v| *v <= b).collect::<Vec<_>>();
    let mut parts = vec![
        FamilyPart::Base { beta: beta0, targets: upto(beta0) },
        FamilyPart::Whole,
    ];
    for n in 1..=layers {
        let beta = top - (top - beta0) / Rational::from_integer(n as i64 + 1);
        parts.push(FamilyPart::Layer { n, radius_level: n, beta, targets: upto(beta) });
    }
    FamilyDescription { top, k0_dim: Some(beta0), parts }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q)
    }

    #[test]
    fn degenerate_cases() {
        assert!(packing_family_assembly(&[], r(1, 1), 3).parts.is_empty());
        let whole = packing_family_assembly(&[r(1, 1)], r(1, 1), 3);
        assert_eq!(whole.parts, vec![FamilyPart::Whole]);
    }

    #[test]
    fn two_values() {
        let f = packing_family_assembly(&[r(1, 4), r(1, 1)], r(1, 1), 3);
        assert_eq!(f.parts.len(), 5);
        assert_eq!(f.realised(), vec![r(1, 4), r(1, 1)]);
    }
}
