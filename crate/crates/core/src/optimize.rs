//! Outcome optimization: the forward sweep and an exhaustive oracle.

use crate::error::{Error, Result};
use crate::model::{advance, Assignment, UcpNet};
use crate::validation::is_valid_ucp;

/// Largest number of completions [`brute_force_optimize`] will enumerate.
pub const ENUMERATION_LIMIT: u128 = 1 << 22;

fn check_evidence(net: &UcpNet, evidence: &Assignment) -> Result<()> {
    evidence.check(net.variables())
}

/// Optimal completion of `evidence`. The net must pass [`is_valid_ucp`];
/// otherwise the sweep carries no optimality guarantee and is refused.
pub fn forward_sweep(net: &UcpNet, evidence: &Assignment) -> Result<Assignment> {
    check_evidence(net, evidence)?;
    let report = is_valid_ucp(net)?;
    if !report.valid() {
        let summary = report
            .render(net.variables())
            .lines()
            .nth(1)
            .unwrap_or("")
            .trim()
            .to_string();
        return Err(Error::ValidityRequired(summary));
    }
    forward_sweep_unchecked(net, evidence)
}

/// The sweep without the validity check. Still requires an acyclic net.
/// Each free variable takes its best value given its parents, in
/// topological order; ties go to the first declared value.
pub fn forward_sweep_unchecked(net: &UcpNet, evidence: &Assignment) -> Result<Assignment> {
    check_evidence(net, evidence)?;
    let order = net
        .topological_order()
        .ok_or_else(|| Error::ValidityRequired("net has a directed cycle".into()))?;
    let mut outcome = vec![0; net.len()];
    for (v, x) in evidence.bound() {
        outcome[v] = x;
    }
    for v in order {
        if evidence.get(v).is_some() {
            continue;
        }
        let f = net.factor(v);
        let row = f.row(f.row_of(&outcome));
        let mut best = 0;
        for (x, &val) in row.iter().enumerate().skip(1) {
            if val > row[best] {
                best = x;
            }
        }
        outcome[v] = best;
    }
    Ok(Assignment::complete(outcome))
}

/// Enumerates every completion of `evidence` and returns the first one, in
/// canonical outcome order, with maximal utility.
pub fn brute_force_optimize(net: &UcpNet, evidence: &Assignment) -> Result<Assignment> {
    check_evidence(net, evidence)?;
    let vars = net.variables();
    let free: Vec<usize> = (0..net.len()).filter(|&v| evidence.get(v).is_none()).collect();
    let size = vars.joint_size(&free);
    if size > ENUMERATION_LIMIT {
        return Err(Error::SizeLimit {
            what: "completion set".into(),
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    let sizes: Vec<usize> = free.iter().map(|&v| vars.domain_size(v)).collect();
    let mut outcome = vec![0; net.len()];
    for (v, x) in evidence.bound() {
        outcome[v] = x;
    }
    let mut digits = vec![0; free.len()];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        for (k, &v) in free.iter().enumerate() {
            outcome[v] = digits[k];
        }
        let u = net.utility(&outcome);
        if best.as_ref().is_none_or(|(b, _)| u > *b) {
            best = Some((u, outcome.clone()));
        }
        if !advance(&mut digits, &sizes) {
            break;
        }
    }
    Ok(Assignment::complete(best.expect("at least one completion").1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Factor, VariableTable};

    fn chain() -> UcpNet {
        let vars = VariableTable::binary(2);
        let f0 = Factor::new(&vars, 0, vec![], vec![1.0, 5.0]).unwrap();
        let f1 = Factor::new(&vars, 1, vec![0], vec![0.0, 1.0, 2.0, 0.5]).unwrap();
        UcpNet::new(vars, vec![f0, f1]).unwrap()
    }

    #[test]
    fn full_evidence_is_returned_unchanged() {
        let net = chain();
        let e = Assignment::complete(vec![0, 0]);
        assert_eq!(forward_sweep(&net, &e).unwrap(), e);
        assert_eq!(brute_force_optimize(&net, &e).unwrap(), e);
    }

    #[test]
    fn sweep_matches_enumeration() {
        let net = chain();
        let e = Assignment::empty(2);
        let s = forward_sweep(&net, &e).unwrap();
        assert_eq!(s, Assignment::complete(vec![1, 0]));
        assert_eq!(s, brute_force_optimize(&net, &e).unwrap());
        let e = Assignment::from_pairs(2, [(0, 0)]);
        assert_eq!(forward_sweep(&net, &e).unwrap(), Assignment::complete(vec![0, 1]));
    }

    #[test]
    fn invalid_net_is_refused_unless_forced() {
        let vars = VariableTable::binary(2);
        let f0 = Factor::new(&vars, 0, vec![], vec![1.0, 0.0]).unwrap();
        let f1 = Factor::new(&vars, 1, vec![0], vec![0.0, 0.0, 5.0, 5.0]).unwrap();
        let net = UcpNet::new(vars, vec![f0, f1]).unwrap();
        let e = Assignment::empty(2);
        assert!(matches!(
            forward_sweep(&net, &e),
            Err(Error::ValidityRequired(_))
        ));
        assert_eq!(
            forward_sweep_unchecked(&net, &e).unwrap(),
            Assignment::complete(vec![0, 0])
        );
        assert_eq!(
            brute_force_optimize(&net, &e).unwrap(),
            Assignment::complete(vec![1, 0])
        );
    }

    #[test]
    fn illegal_evidence_is_rejected() {
        let net = chain();
        let e = Assignment::from_pairs(2, [(0, 7)]);
        assert!(matches!(
            forward_sweep(&net, &e),
            Err(Error::InvalidAssignment(_))
        ));
        assert!(brute_force_optimize(&net, &Assignment::empty(3)).is_err());
    }

    #[test]
    fn single_free_binary_variable() {
        let net = chain();
        let e = Assignment::from_pairs(2, [(0, 1)]);
        assert_eq!(
            brute_force_optimize(&net, &e).unwrap(),
            Assignment::complete(vec![1, 0])
        );
    }
}
