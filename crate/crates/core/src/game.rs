//! Finite strategic games over enumerable joint-action spaces.
//!
//! Profiles are indexed in mixed radix with player 0 as the least
//! significant digit, so profile `(a_0, a_1, ..., a_{n-1})` has index
//! `a_0 + m_0 * (a_1 + m_1 * (a_2 + ...))`. Every dense table over the
//! state space in this crate uses that index.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of joint profiles an exhaustive operation may visit.
pub const DEFAULT_PROFILE_CAP: usize = 1 << 20;

/// Default tolerance for argmax ties in best responses.
pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-9;

/// A joint action assignment, one action index per player.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionProfile(Vec<usize>);

impl ActionProfile {
    pub fn new(actions: Vec<usize>) -> Self {
        ActionProfile(actions)
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }

    /// Copy of `self` with player `i` switched to `action`.
    pub fn with(&self, i: usize, action: usize) -> ActionProfile {
        let mut v = self.0.clone();
        v[i] = action;
        ActionProfile(v)
    }
}

impl Deref for ActionProfile {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for ActionProfile {
    fn from(v: Vec<usize>) -> Self {
        ActionProfile(v)
    }
}

impl From<&[usize]> for ActionProfile {
    fn from(v: &[usize]) -> Self {
        ActionProfile(v.to_vec())
    }
}

impl fmt::Display for ActionProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, a) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// Number of coordinates in which two profiles differ.
pub fn hamming_distance(x: &[usize], y: &[usize]) -> usize {
    x.iter().zip(y).filter(|(a, b)| a != b).count()
}

/// Mixed-radix bijection between profiles and `0..len`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileSpace {
    sizes: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl ProfileSpace {
    pub fn new(sizes: &[usize]) -> Result<Self> {
        Self::with_cap(sizes, usize::MAX)
    }

    /// Builds the space, failing with a capacity error when it has more than `cap` profiles.
    pub fn with_cap(sizes: &[usize], cap: usize) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::arg("a game needs at least one player"));
        }
        if let Some(i) = sizes.iter().position(|&m| m == 0) {
            return Err(Error::arg(format!("player {i} has an empty action set")));
        }
        let size = profile_count(sizes);
        if size > cap as u128 {
            return Err(Error::Capacity { size, cap });
        }
        let mut strides = Vec::with_capacity(sizes.len());
        let mut acc = 1usize;
        for &m in sizes {
            strides.push(acc);
            acc *= m;
        }
        Ok(ProfileSpace {
            sizes: sizes.to_vec(),
            strides,
            len: acc,
        })
    }

    pub fn players(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn stride(&self, player: usize) -> usize {
        self.strides[player]
    }

    pub fn index(&self, actions: &[usize]) -> usize {
        actions
            .iter()
            .zip(&self.strides)
            .map(|(a, s)| a * s)
            .sum()
    }

    /// Action of `player` in the profile with the given index.
    pub fn action_of(&self, index: usize, player: usize) -> usize {
        (index / self.strides[player]) % self.sizes[player]
    }

    pub fn decode_into(&self, mut index: usize, out: &mut Vec<usize>) {
        out.clear();
        for &m in &self.sizes {
            out.push(index % m);
            index /= m;
        }
    }

    pub fn profile(&self, index: usize) -> ActionProfile {
        let mut v = Vec::with_capacity(self.sizes.len());
        self.decode_into(index, &mut v);
        ActionProfile(v)
    }

    /// Index of the profile obtained by switching `player` to `action`.
    pub fn switch(&self, index: usize, player: usize, action: usize) -> usize {
        let current = self.action_of(index, player);
        index - current * self.strides[player] + action * self.strides[player]
    }

    /// If `x` and `y` differ in exactly one coordinate, returns that player.
    pub fn deviating_player(&self, x: usize, y: usize) -> Option<usize> {
        if x == y {
            return None;
        }
        let mut found = None;
        for p in 0..self.sizes.len() {
            if self.action_of(x, p) != self.action_of(y, p) {
                if found.is_some() {
                    return None;
                }
                found = Some(p);
            }
        }
        found
    }

    pub fn validate(&self, actions: &[usize]) -> Result<()> {
        if actions.len() != self.sizes.len() {
            return Err(Error::arg(format!(
                "profile has {} entries, game has {} players",
                actions.len(),
                self.sizes.len()
            )));
        }
        for (i, (&a, &m)) in actions.iter().zip(&self.sizes).enumerate() {
            if a >= m {
                return Err(Error::arg(format!(
                    "action {a} of player {i} is out of range 0..{m}"
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn profile_count(sizes: &[usize]) -> u128 {
    sizes
        .iter()
        .fold(1u128, |acc, &m| acc.saturating_mul(m as u128))
}

/// A finite game in strategic form.
///
/// `payoff` and `potential_value` are unchecked oracles; callers that take
/// profiles from outside go through [`utility`] which validates indices.
pub trait Game {
    fn action_sizes(&self) -> &[usize];

    fn payoff(&self, player: usize, actions: &[usize]) -> f64;

    /// Potential function, when the game carries one.
    fn potential_value(&self, _actions: &[usize]) -> Option<f64> {
        None
    }

    fn has_potential(&self) -> bool {
        false
    }

    fn players(&self) -> usize {
        self.action_sizes().len()
    }
}

impl<G: Game + ?Sized> Game for &G {
    fn action_sizes(&self) -> &[usize] {
        (**self).action_sizes()
    }
    fn payoff(&self, player: usize, actions: &[usize]) -> f64 {
        (**self).payoff(player, actions)
    }
    fn potential_value(&self, actions: &[usize]) -> Option<f64> {
        (**self).potential_value(actions)
    }
    fn has_potential(&self) -> bool {
        (**self).has_potential()
    }
}

fn check_profile<G: Game + ?Sized>(game: &G, a: &[usize]) -> Result<()> {
    let sizes = game.action_sizes();
    if a.len() != sizes.len() {
        return Err(Error::arg(format!(
            "profile has {} entries, game has {} players",
            a.len(),
            sizes.len()
        )));
    }
    for (i, (&x, &m)) in a.iter().zip(sizes).enumerate() {
        if x >= m {
            return Err(Error::arg(format!(
                "action {x} of player {i} is out of range 0..{m}"
            )));
        }
    }
    Ok(())
}

fn check_player<G: Game + ?Sized>(game: &G, i: usize) -> Result<()> {
    if i >= game.players() {
        return Err(Error::arg(format!(
            "player {i} out of range 0..{}",
            game.players()
        )));
    }
    Ok(())
}

/// `U_i(a)` with index validation.
pub fn utility<G: Game + ?Sized>(game: &G, i: usize, a: &[usize]) -> Result<f64> {
    check_player(game, i)?;
    check_profile(game, a)?;
    Ok(game.payoff(i, a))
}

/// Utilities of every action of player `i` against `a_{-i}`.
pub(crate) fn action_utilities<G: Game + ?Sized>(game: &G, i: usize, a: &[usize]) -> Vec<f64> {
    let mut scratch = a.to_vec();
    (0..game.action_sizes()[i])
        .map(|alpha| {
            scratch[i] = alpha;
            game.payoff(i, &scratch)
        })
        .collect()
}

pub(crate) fn argmax_set(values: &[f64], tol: f64) -> Vec<usize> {
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .enumerate()
        .filter(|(_, &u)| u >= best - tol)
        .map(|(k, _)| k)
        .collect()
}

/// `B_i(a_{-i})`: every action of player `i` attaining the maximal utility
/// against the other players' actions in `a`, within `tol`.
pub fn best_response_set<G: Game + ?Sized>(
    game: &G,
    i: usize,
    a: &[usize],
    tol: f64,
) -> Result<Vec<usize>> {
    check_player(game, i)?;
    check_profile(game, a)?;
    Ok(argmax_set(&action_utilities(game, i, a), tol))
}

pub(crate) fn is_nash_unchecked<G: Game + ?Sized>(game: &G, a: &[usize], tol: f64) -> bool {
    let mut scratch = a.to_vec();
    for i in 0..game.players() {
        let current = game.payoff(i, a);
        for alpha in 0..game.action_sizes()[i] {
            if alpha == a[i] {
                continue;
            }
            scratch[i] = alpha;
            let u = game.payoff(i, &scratch);
            if u > current + tol {
                return false;
            }
        }
        scratch[i] = a[i];
    }
    true
}

pub fn is_nash<G: Game + ?Sized>(game: &G, a: &[usize], tol: f64) -> Result<bool> {
    check_profile(game, a)?;
    Ok(is_nash_unchecked(game, a, tol))
}

/// The set of pure Nash equilibria, kept sorted by profile index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NashSet {
    indices: Vec<usize>,
    members: Vec<ActionProfile>,
}

impl NashSet {
    pub fn from_indices(space: &ProfileSpace, mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        let members = indices.iter().map(|&k| space.profile(k)).collect();
        NashSet { indices, members }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn members(&self) -> &[ActionProfile] {
        &self.members
    }

    pub fn contains_index(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn contains(&self, a: &[usize]) -> bool {
        self.members.iter().any(|m| m.actions() == a)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Exhaustive pure-NE enumeration.
pub fn enumerate_nash<G: Game + ?Sized>(game: &G, cap: usize, tol: f64) -> Result<NashSet> {
    let space = ProfileSpace::with_cap(game.action_sizes(), cap)?;
    let mut buf = Vec::new();
    let mut found = Vec::new();
    for k in 0..space.len() {
        space.decode_into(k, &mut buf);
        if is_nash_unchecked(game, &buf, tol) {
            found.push(k);
        }
    }
    Ok(NashSet::from_indices(&space, found))
}

/// A unilateral deviation along which utility and potential differences disagree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PotentialViolation {
    pub player: usize,
    pub profile: ActionProfile,
    pub deviation: usize,
    pub utility_gap: f64,
    pub potential_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PotentialCheck {
    pub holds: bool,
    pub witness: Option<PotentialViolation>,
}

/// Exhaustively checks the exact-potential identity on every unilateral deviation.
pub fn verify_potential<G: Game + ?Sized>(game: &G, tol: f64, cap: usize) -> Result<PotentialCheck> {
    if !game.has_potential() {
        return Err(Error::Precondition("game has no potential function".into()));
    }
    let space = ProfileSpace::with_cap(game.action_sizes(), cap)?;
    let mut a = Vec::new();
    for k in 0..space.len() {
        space.decode_into(k, &mut a);
        let phi_a = game.potential_value(&a).unwrap_or(f64::NAN);
        for i in 0..space.players() {
            let u_a = game.payoff(i, &a);
            let mut b = a.clone();
            // each unordered pair once: only deviations to larger actions
            for alt in (a[i] + 1)..space.sizes()[i] {
                b[i] = alt;
                let du = u_a - game.payoff(i, &b);
                let dphi = phi_a - game.potential_value(&b).unwrap_or(f64::NAN);
                if !((du - dphi).abs() <= tol) {
                    return Ok(PotentialCheck {
                        holds: false,
                        witness: Some(PotentialViolation {
                            player: i,
                            profile: ActionProfile(a.clone()),
                            deviation: alt,
                            utility_gap: du,
                            potential_gap: dphi,
                        }),
                    });
                }
            }
        }
    }
    Ok(PotentialCheck {
        holds: true,
        witness: None,
    })
}

/// Without `player`: every profile at Hamming distance one from `a`.
/// With `player = Some(i)`: every profile that agrees with `a` off coordinate `i`,
/// `a` itself included.
pub fn neighborhood<G: Game + ?Sized>(
    game: &G,
    a: &[usize],
    player: Option<usize>,
) -> Result<Vec<ActionProfile>> {
    check_profile(game, a)?;
    let sizes = game.action_sizes();
    let mut out = Vec::new();
    match player {
        Some(i) => {
            check_player(game, i)?;
            for alpha in 0..sizes[i] {
                let mut b = a.to_vec();
                b[i] = alpha;
                out.push(ActionProfile(b));
            }
        }
        None => {
            for (i, &m) in sizes.iter().enumerate() {
                for alpha in (0..m).filter(|&x| x != a[i]) {
                    let mut b = a.to_vec();
                    b[i] = alpha;
                    out.push(ActionProfile(b));
                }
            }
        }
    }
    Ok(out)
}

/// Profiles with no Hamming-1 neighbor of strictly higher potential.
pub fn potential_local_maxima<G: Game + ?Sized>(game: &G, cap: usize) -> Result<BTreeSet<usize>> {
    if !game.has_potential() {
        return Err(Error::Precondition("game has no potential function".into()));
    }
    let space = ProfileSpace::with_cap(game.action_sizes(), cap)?;
    let mut a = Vec::new();
    let mut out = BTreeSet::new();
    for k in 0..space.len() {
        space.decode_into(k, &mut a);
        let phi = game.potential_value(&a).unwrap();
        let mut is_max = true;
        'outer: for i in 0..space.players() {
            for alpha in 0..space.sizes()[i] {
                let j = space.switch(k, i, alpha);
                if j != k {
                    let b = space.profile(j);
                    if game.potential_value(&b).unwrap() > phi {
                        is_max = false;
                        break 'outer;
                    }
                }
            }
        }
        if is_max {
            out.insert(k);
        }
    }
    Ok(out)
}

/// A game stored as dense tables over the profile index.
#[derive(Clone, Debug, PartialEq)]
pub struct TableGame {
    sizes: Vec<usize>,
    /// `utilities[k][i]` is `U_i` at profile index `k`.
    utilities: Vec<Vec<f64>>,
    potential: Option<Vec<f64>>,
    strides: Vec<usize>,
}

impl TableGame {
    pub fn new(sizes: Vec<usize>, utilities: Vec<Vec<f64>>, potential: Option<Vec<f64>>) -> Result<Self> {
        let space = ProfileSpace::new(&sizes)?;
        if utilities.len() != space.len() {
            return Err(Error::arg(format!(
                "utility table has {} rows, expected {}",
                utilities.len(),
                space.len()
            )));
        }
        if let Some(k) = utilities.iter().position(|row| row.len() != sizes.len()) {
            return Err(Error::arg(format!(
                "utility row {k} has {} entries, expected {}",
                utilities[k].len(),
                sizes.len()
            )));
        }
        if let Some(p) = &potential {
            if p.len() != space.len() {
                return Err(Error::arg(format!(
                    "potential table has {} entries, expected {}",
                    p.len(),
                    space.len()
                )));
            }
        }
        let strides = space.strides.clone();
        Ok(TableGame {
            sizes,
            utilities,
            potential,
            strides,
        })
    }

    /// Identical-interest game: every player's utility equals the potential.
    pub fn identical_interest(sizes: Vec<usize>, potential: Vec<f64>) -> Result<Self> {
        let n = sizes.len();
        let utilities = potential.iter().map(|&p| vec![p; n]).collect();
        TableGame::new(sizes, utilities, Some(potential))
    }

    /// Tabulates any game by exhaustive enumeration.
    pub fn tabulate<G: Game + ?Sized>(game: &G, cap: usize) -> Result<Self> {
        let space = ProfileSpace::with_cap(game.action_sizes(), cap)?;
        let n = space.players();
        let mut a = Vec::new();
        let mut utilities = Vec::with_capacity(space.len());
        let mut potential = game.has_potential().then(|| Vec::with_capacity(space.len()));
        for k in 0..space.len() {
            space.decode_into(k, &mut a);
            utilities.push((0..n).map(|i| game.payoff(i, &a)).collect());
            if let Some(p) = potential.as_mut() {
                p.push(game.potential_value(&a).unwrap_or(f64::NAN));
            }
        }
        TableGame::new(space.sizes.clone(), utilities, potential)
    }

    pub fn space(&self) -> ProfileSpace {
        ProfileSpace::new(&self.sizes).expect("validated at construction")
    }

    pub fn utility_at(&self, index: usize, player: usize) -> f64 {
        self.utilities[index][player]
    }

    pub fn potential_at(&self, index: usize) -> Option<f64> {
        self.potential.as_ref().map(|p| p[index])
    }

    pub fn potential_table(&self) -> Option<&[f64]> {
        self.potential.as_deref()
    }

    pub fn with_potential(mut self, potential: Vec<f64>) -> Result<Self> {
        if potential.len() != self.utilities.len() {
            return Err(Error::arg("potential table has the wrong length"));
        }
        self.potential = Some(potential);
        Ok(self)
    }

    fn idx(&self, a: &[usize]) -> usize {
        a.iter().zip(&self.strides).map(|(x, s)| x * s).sum()
    }
}

impl Game for TableGame {
    fn action_sizes(&self) -> &[usize] {
        &self.sizes
    }

    fn payoff(&self, player: usize, actions: &[usize]) -> f64 {
        self.utilities[self.idx(actions)][player]
    }

    fn potential_value(&self, actions: &[usize]) -> Option<f64> {
        self.potential.as_ref().map(|p| p[self.idx(actions)])
    }

    fn has_potential(&self) -> bool {
        self.potential.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{g2, g3};

    #[test]
    fn utility_reads_back_fixture_values() {
        assert_eq!(utility(&g2(), 0, &[1, 1]).unwrap(), 4.0);
        assert_eq!(utility(&g3(), 0, &[2]).unwrap(), 3.0);
        let g = g2();
        assert_eq!(utility(&g, 1, &[0, 1]).unwrap(), utility(&g, 1, &[0, 1]).unwrap());
    }

    #[test]
    fn utility_rejects_bad_indices() {
        assert!(matches!(utility(&g2(), 2, &[0, 0]), Err(Error::Argument(_))));
        assert!(matches!(utility(&g2(), 0, &[0, 2]), Err(Error::Argument(_))));
        assert!(matches!(utility(&g2(), 0, &[0]), Err(Error::Argument(_))));
    }

    #[test]
    fn best_responses() {
        let g = g2();
        assert_eq!(best_response_set(&g, 0, &[0, 1], DEFAULT_TIE_TOLERANCE).unwrap(), vec![1]);
        assert_eq!(best_response_set(&g3(), 0, &[0], DEFAULT_TIE_TOLERANCE).unwrap(), vec![2]);
        let single = TableGame::identical_interest(vec![1, 2], vec![0.0, 1.0]).unwrap();
        assert_eq!(best_response_set(&single, 0, &[0, 1], DEFAULT_TIE_TOLERANCE).unwrap(), vec![0]);
        let tie = TableGame::identical_interest(vec![3], vec![1.0, 2.0, 2.0]).unwrap();
        assert_eq!(best_response_set(&tie, 0, &[0], DEFAULT_TIE_TOLERANCE).unwrap(), vec![1, 2]);
    }

    #[test]
    fn nash_checks() {
        let g = g2();
        assert!(is_nash(&g, &[1, 1], DEFAULT_TIE_TOLERANCE).unwrap());
        assert!(!is_nash(&g, &[0, 1], DEFAULT_TIE_TOLERANCE).unwrap());
        assert!(is_nash(&g3(), &[2], DEFAULT_TIE_TOLERANCE).unwrap());
        let ne = enumerate_nash(&g, DEFAULT_PROFILE_CAP, DEFAULT_TIE_TOLERANCE).unwrap();
        assert_eq!(ne.members(), &[ActionProfile::new(vec![1, 1])]);
        let ne3 = enumerate_nash(&g3(), DEFAULT_PROFILE_CAP, DEFAULT_TIE_TOLERANCE).unwrap();
        assert_eq!(ne3.members(), &[ActionProfile::new(vec![2])]);
    }

    #[test]
    fn enumeration_respects_cap() {
        let g = g2();
        assert!(matches!(
            enumerate_nash(&g, 3, DEFAULT_TIE_TOLERANCE),
            Err(Error::Capacity { size: 4, cap: 3 })
        ));
    }

    #[test]
    fn potential_verification() {
        let g = g2();
        assert!(verify_potential(&g, 0.0, DEFAULT_PROFILE_CAP).unwrap().holds);
        let mut phi = g.potential_table().unwrap().to_vec();
        phi[3] += 1.0;
        let bad = TableGame::new(
            vec![2, 2],
            vec![vec![0.0; 2], vec![1.0; 2], vec![2.0; 2], vec![4.0; 2]],
            Some(phi),
        )
        .unwrap();
        let check = verify_potential(&bad, 1e-12, DEFAULT_PROFILE_CAP).unwrap();
        assert!(!check.holds);
        let w = check.witness.unwrap();
        assert!(w.profile.actions() == [1, 0] || w.profile.actions() == [0, 1]);
        let no_phi = TableGame::new(vec![1], vec![vec![0.0]], None).unwrap();
        assert!(matches!(
            verify_potential(&no_phi, 0.0, DEFAULT_PROFILE_CAP),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn neighborhoods() {
        let n = neighborhood(&g2(), &[0, 0], None).unwrap();
        assert_eq!(n, vec![ActionProfile::new(vec![1, 0]), ActionProfile::new(vec![0, 1])]);
        let n = neighborhood(&g3(), &[0], Some(0)).unwrap();
        assert_eq!(n.len(), 3);
        assert_eq!(hamming_distance(&[0, 0], &[1, 1]), 2);
    }

    #[test]
    fn mixed_radix_indexing() {
        let s = ProfileSpace::new(&[2, 3, 2]).unwrap();
        assert_eq!(s.len(), 12);
        for k in 0..s.len() {
            let p = s.profile(k);
            assert_eq!(s.index(&p), k);
        }
        assert_eq!(s.index(&[1, 0, 0]), 1);
        assert_eq!(s.index(&[0, 1, 0]), 2);
        assert_eq!(s.switch(s.index(&[1, 2, 1]), 1, 0), s.index(&[1, 0, 1]));
        assert_eq!(s.deviating_player(s.index(&[1, 2, 1]), s.index(&[1, 0, 1])), Some(1));
        assert_eq!(s.deviating_player(s.index(&[1, 2, 1]), s.index(&[0, 0, 1])), None);
    }
}
