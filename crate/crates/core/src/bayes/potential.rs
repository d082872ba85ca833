use crate::model::{advance, Assignment, Factor, VarId};

/// A non-negative table over a list of variables, indexed mixed-radix with
/// the first scope variable most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    scope: Vec<VarId>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

fn strides(cards: &[usize]) -> Vec<usize> {
    let mut s = vec![1; cards.len()];
    for i in (0..cards.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * cards[i + 1];
    }
    s
}

impl Potential {
    pub fn new(scope: Vec<VarId>, cards: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(scope.len(), cards.len());
        debug_assert_eq!(cards.iter().product::<usize>(), values.len());
        Potential {
            scope,
            cards,
            values,
        }
    }

    pub fn unit() -> Self {
        Potential::new(Vec::new(), Vec::new(), vec![1.0])
    }

    /// CPT as a potential over parents followed by the child.
    pub fn from_cpt(f: &Factor, child_card: usize, parent_cards: &[usize]) -> Self {
        let mut cards = parent_cards.to_vec();
        cards.push(child_card);
        Potential::new(f.scope(), cards, f.values().to_vec())
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.scope.contains(&v)
    }

    /// Value at `digits`, given in scope order.
    pub fn get(&self, digits: &[usize]) -> f64 {
        let s = strides(&self.cards);
        self.values[digits.iter().zip(&s).map(|(d, s)| d * s).sum::<usize>()]
    }

    pub fn product(&self, other: &Potential) -> Potential {
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        for (&v, &c) in other.scope.iter().zip(&other.cards) {
            if !scope.contains(&v) {
                scope.push(v);
                cards.push(c);
            }
        }
        let stride_in = |p: &Potential| -> Vec<usize> {
            let s = strides(&p.cards);
            scope
                .iter()
                .map(|v| p.scope.iter().position(|w| w == v).map_or(0, |k| s[k]))
                .collect()
        };
        let (sa, sb) = (stride_in(self), stride_in(other));
        let total: usize = cards.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut digits = vec![0; scope.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        loop {
            values.push(self.values[ia] * other.values[ib]);
            // odometer step with incremental index updates
            let mut k = digits.len();
            loop {
                if k == 0 {
                    return Potential::new(scope, cards, values);
                }
                k -= 1;
                digits[k] += 1;
                ia += sa[k];
                ib += sb[k];
                if digits[k] < cards[k] {
                    break;
                }
                ia -= sa[k] * cards[k];
                ib -= sb[k] * cards[k];
                digits[k] = 0;
            }
        }
    }

    /// Marginalizes `v` away. A no-op when `v` is not in scope.
    pub fn sum_out(&self, v: VarId) -> Potential {
        let Some(k) = self.scope.iter().position(|&w| w == v) else {
            return self.clone();
        };
        let outer: usize = self.cards[..k].iter().product();
        let card = self.cards[k];
        let inner: usize = self.cards[k + 1..].iter().product();
        let mut values = vec![0.0; outer * inner];
        for o in 0..outer {
            for c in 0..card {
                let base = (o * card + c) * inner;
                for i in 0..inner {
                    values[o * inner + i] += self.values[base + i];
                }
            }
        }
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(k);
        cards.remove(k);
        Potential::new(scope, cards, values)
    }

    /// Restricts to the slice consistent with `evidence`, dropping the
    /// observed variables from the scope.
    pub fn reduce(&self, evidence: &Assignment) -> Potential {
        if !self.scope.iter().any(|&v| evidence.get(v).is_some()) {
            return self.clone();
        }
        let keep: Vec<usize> = (0..self.scope.len())
            .filter(|&k| evidence.get(self.scope[k]).is_none())
            .collect();
        let s = strides(&self.cards);
        let fixed: usize = (0..self.scope.len())
            .filter_map(|k| evidence.get(self.scope[k]).map(|x| x * s[k]))
            .sum();
        let cards: Vec<usize> = keep.iter().map(|&k| self.cards[k]).collect();
        let mut values = Vec::with_capacity(cards.iter().product());
        let mut digits = vec![0; keep.len()];
        loop {
            let idx = fixed + keep.iter().zip(&digits).map(|(&k, d)| d * s[k]).sum::<usize>();
            values.push(self.values[idx]);
            if !advance(&mut digits, &cards) {
                break;
            }
        }
        Potential::new(keep.iter().map(|&k| self.scope[k]).collect(), cards, values)
    }

    /// Same table with the scope permuted to `order` (a permutation of the
    /// current scope).
    pub fn reorder(&self, order: &[VarId]) -> Potential {
        let s = strides(&self.cards);
        let pos: Vec<usize> = order
            .iter()
            .map(|v| self.scope.iter().position(|w| w == v).expect("same scope"))
            .collect();
        let cards: Vec<usize> = pos.iter().map(|&k| self.cards[k]).collect();
        let mut values = Vec::with_capacity(self.values.len());
        let mut digits = vec![0; order.len()];
        loop {
            values.push(self.values[pos.iter().zip(&digits).map(|(&k, d)| d * s[k]).sum::<usize>()]);
            if !advance(&mut digits, &cards) {
                break;
            }
        }
        Potential::new(order.to_vec(), cards, values)
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }
}
