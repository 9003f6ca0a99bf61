//! The shield artifact: per-cell allowed-action masks over a grid on `T`,
//! queried from `T` directly or from `S` through the transform.

pub(crate) mod io;
mod tree;

pub use io::{FileHeader, SHIELD_MAGIC, TREE_MAGIC, VERSION};
pub use tree::{DecisionTree, Node};

use std::path::Path;

use crate::error::{GridError, ShieldError, TransformError};
use crate::grid::GridSpec;
use crate::synthesis::SafeSet;
use crate::transform::Transform;

/// Most permissive strategy `sigma: G -> P(Act)` as bitmasks in row-major
/// cell order. Bit `a` of a mask allows action `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct Strategy {
    grid: GridSpec,
    masks: Vec<u8>,
    actions: Vec<String>,
    transform: Transform,
}

impl Strategy {
    pub fn new(grid: GridSpec, masks: Vec<u8>, actions: Vec<String>, transform: Transform) -> Result<Self, ShieldError> {
        if actions.len() > 8 {
            return Err(ShieldError::TooManyActions(actions.len()));
        }
        if masks.len() != grid.cell_count() {
            return Err(ShieldError::Corrupt(format!(
                "{} masks for {} cells",
                masks.len(),
                grid.cell_count()
            )));
        }
        let valid = if actions.len() == 8 { u8::MAX } else { (1u8 << actions.len()) - 1 };
        if masks.iter().any(|m| m & !valid != 0) {
            return Err(ShieldError::Corrupt("mask names an action that does not exist".into()));
        }
        if !grid.bounds().approx_eq(transform.codomain(), 1e-9) {
            return Err(ShieldError::Corrupt("grid box differs from the transform codomain".into()));
        }
        Ok(Self { grid, masks, actions, transform })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn masks(&self) -> &[u8] {
        &self.masks
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    pub fn controllable(&self) -> SafeSet {
        SafeSet::from_bits(self.masks.iter().map(|&m| m != 0).collect())
    }

    pub fn controllable_count(&self) -> usize {
        self.masks.iter().filter(|&&m| m != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.controllable_count() == 0
    }

    /// `sigma(t) = sigma^G([t])` for a point `t` of `T`.
    pub fn allowed_in_t(&self, t: &[f64]) -> Result<u8, ShieldError> {
        let c = self.grid.linear_cell_of(t).ok_or(if t.len() < self.grid.dim() {
            GridError::DimensionMismatch { expected: self.grid.dim(), got: t.len() }
        } else {
            GridError::OutOfBounds
        })?;
        Ok(self.masks[c])
    }

    /// `sigma(s) = sigma^G([f(s)])` for a state `s` of `S`. Only the leading
    /// coordinates the transform reads are used, so full model states (e.g.
    /// the cart-pole's four components) can be passed directly.
    pub fn allowed_in_s(&self, s: &[f64]) -> Result<u8, ShieldError> {
        let d = self.transform.dim();
        if s.len() < d {
            return Err(GridError::DimensionMismatch { expected: d, got: s.len() }.into());
        }
        if !self.transform.domain().contains(&s[..d]) {
            return Err(GridError::OutOfBounds.into());
        }
        let mut t = [0.0f64; 8];
        if !self.transform.forward_into(s, &mut t) {
            return Err(TransformError::Undefined.into());
        }
        self.allowed_in_t(&t[..self.transform.codomain().dim()])
    }

    /// `proposed` if the shield allows it in `s`, otherwise the lowest
    /// allowed action.
    pub fn filter(&self, s: &[f64], proposed: usize) -> Result<usize, ShieldError> {
        filter_mask(self.allowed_in_s(s)?, proposed)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(64 + self.masks.len());
        io::write_header(&mut buf, SHIELD_MAGIC, &self.header());
        buf.extend_from_slice(&self.masks);
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ShieldError> {
        let mut r = io::Reader::new(bytes);
        let h = io::read_header(&mut r, SHIELD_MAGIC)?;
        let body = r.rest();
        if body.len() != h.grid.cell_count() {
            return Err(ShieldError::Corrupt(format!(
                "body holds {} masks, grid has {} cells",
                body.len(),
                h.grid.cell_count()
            )));
        }
        Self::new(h.grid, body.to_vec(), h.actions, h.transform)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ShieldError> {
        let bytes = std::fs::read(path.as_ref())
            .map_err(|e| ShieldError::Corrupt(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_bytes(&bytes)
    }

    pub fn header(&self) -> FileHeader {
        FileHeader { grid: self.grid.clone(), actions: self.actions.clone(), transform: self.transform.clone() }
    }
}

/// Apply the filtering rule to an allowed-action mask.
pub fn filter_mask(mask: u8, proposed: usize) -> Result<usize, ShieldError> {
    if mask == 0 {
        return Err(ShieldError::Uncontrollable);
    }
    if proposed < 8 && mask & (1 << proposed) != 0 {
        Ok(proposed)
    } else {
        Ok(mask.trailing_zeros() as usize)
    }
}

/// Indices of the actions in `mask`.
pub fn mask_actions(mask: u8) -> impl Iterator<Item = usize> {
    (0..8).filter(move |a| mask & (1 << a) != 0)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::models::{BouncingBall, ControlModel, Oscillator};
    use crate::synthesis::{compute_transitions, fixpoint, initial_safe, most_permissive, SamplingConfig};
    use std::f64::consts::PI;

    pub(crate) fn polar_shield() -> Strategy {
        let m = Oscillator::default();
        let t = Transform::polar_transform(m.bounds(), 2.0).unwrap();
        let g = GridSpec::uniform(&[(-PI, PI), (0.0, 2.0)], &[4, 4]).unwrap();
        let tt = compute_transitions(&m, &t, &g, &SamplingConfig::default()).unwrap();
        let (fp, _) = fixpoint(&tt, &initial_safe(&g, &t, &m.safety_region()));
        let names = m.actions().iter().map(|s| s.to_string()).collect();
        Strategy::new(g, most_permissive(&tt, &fp), names, t).unwrap()
    }

    #[test]
    fn polar_shield_queries() {
        let st = polar_shield();
        assert_eq!(st.controllable_count(), 12);
        assert_eq!(st.allowed_in_t(&[0.0, 1.2]).unwrap(), 1);
        assert_eq!(st.allowed_in_t(&[0.0, 0.2]).unwrap(), 0);
        assert_eq!(st.allowed_in_t(&[0.0, 2.0]), Err(ShieldError::Grid(GridError::OutOfBounds)));
        // (0, 1.2) in S has angle pi/2 and radius 1.2
        assert_eq!(st.allowed_in_s(&[0.0, 1.2]).unwrap(), 1);
        assert_eq!(st.allowed_in_s(&[0.1, 0.1]).unwrap(), 0);
        assert_eq!(st.allowed_in_s(&[0.0, 0.0]), Err(ShieldError::Transform(TransformError::Undefined)));
        assert_eq!(st.filter(&[0.0, 1.2], 0).unwrap(), 0);
        assert_eq!(st.filter(&[0.1, 0.1], 0), Err(ShieldError::Uncontrollable));
    }

    #[test]
    fn filter_rule() {
        assert_eq!(filter_mask(0b101, 2).unwrap(), 2);
        assert_eq!(filter_mask(0b100, 0).unwrap(), 2);
        assert_eq!(filter_mask(0b110, 0).unwrap(), 1);
        assert_eq!(filter_mask(0, 0), Err(ShieldError::Uncontrollable));
        assert_eq!(mask_actions(0b101).collect::<Vec<_>>(), vec![0, 2]);
    }

    #[test]
    fn identity_queries_agree() {
        let m = BouncingBall::default();
        let t = Transform::identity_transform(m.bounds());
        let g = GridSpec::uniform(&[(-13.0, 13.0), (0.0, 8.0)], &[26, 8]).unwrap();
        let masks = (0..g.cell_count()).map(|c| (c % 4) as u8).collect();
        let st = Strategy::new(g, masks, vec!["nohit".into(), "hit".into()], t).unwrap();
        for s in [[0.3, 1.0], [-12.9, 7.9], [5.5, 0.0]] {
            assert_eq!(st.allowed_in_s(&s), st.allowed_in_t(&s));
        }
    }

    #[test]
    fn energy_queries_go_through_the_transform() {
        let m = BouncingBall::default();
        let t = Transform::energy_transform(m.bounds(), 1.0, 9.81, 100.0).unwrap();
        let g = GridSpec::uniform(&[(0.0, 100.0), (-13.0, 13.0)], &[26, 25]).unwrap();
        let masks = (0..g.cell_count()).map(|c| (c % 3) as u8).collect();
        let st = Strategy::new(g, masks, vec!["nohit".into(), "hit".into()], t).unwrap();
        assert_eq!(st.allowed_in_s(&[0.0, 5.0]).unwrap(), st.allowed_in_t(&[49.05, 0.0]).unwrap());
        assert_eq!(st.allowed_in_s(&[0.0, 9.0]), Err(ShieldError::Grid(GridError::OutOfBounds)));
    }

    #[test]
    fn constructor_validates() {
        let st = polar_shield();
        let g = st.grid().clone();
        let t = st.transform().clone();
        assert!(matches!(
            Strategy::new(g.clone(), vec![0; 3], vec!["a".into()], t.clone()),
            Err(ShieldError::Corrupt(_))
        ));
        assert!(matches!(
            Strategy::new(g.clone(), vec![2; 16], vec!["a".into()], t.clone()),
            Err(ShieldError::Corrupt(_))
        ));
        let names = (0..9).map(|i| i.to_string()).collect();
        assert_eq!(Strategy::new(g, vec![0; 16], names, t), Err(ShieldError::TooManyActions(9)));
    }

    #[test]
    fn save_load_round_trip() {
        let st = polar_shield();
        let bytes = st.to_bytes();
        let back = Strategy::from_bytes(&bytes).unwrap();
        assert_eq!(back, st);
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(&bytes[..4], b"SHLD");
    }

    #[test]
    fn load_rejects_bad_files() {
        let st = polar_shield();
        let mut bytes = st.to_bytes();
        bytes[0] = b'X';
        assert_eq!(Strategy::from_bytes(&bytes), Err(ShieldError::VersionMismatch));
        let mut bytes = st.to_bytes();
        bytes[4] = 99;
        assert_eq!(Strategy::from_bytes(&bytes), Err(ShieldError::VersionMismatch));
        let mut bytes = st.to_bytes();
        bytes.pop();
        assert!(matches!(Strategy::from_bytes(&bytes), Err(ShieldError::Corrupt(_))));
        let mut bytes = st.to_bytes();
        bytes.push(0);
        assert!(matches!(Strategy::from_bytes(&bytes), Err(ShieldError::Corrupt(_))));
        assert!(matches!(Strategy::from_bytes(&bytes[..10]), Err(ShieldError::Corrupt(_))));
    }
}
