//! Pattern selection advice.

use serde::{Deserialize, Serialize};

use crate::dispatch::Pattern;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecisionAnswers {
    pub needs_upgradeability: bool,
    pub extensive_features_or_large_code: bool,
    pub frequent_upgrades: bool,
    pub modularity_priority: bool,
}

impl DecisionAnswers {
    /// All 16 answer combinations.
    pub fn all() -> impl Iterator<Item = DecisionAnswers> {
        (0u8..16).map(|bits| DecisionAnswers {
            needs_upgradeability: bits & 1 != 0,
            extensive_features_or_large_code: bits & 2 != 0,
            frequent_upgrades: bits & 4 != 0,
            modularity_priority: bits & 8 != 0,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recommendation {
    pub pattern: Pattern,
    pub rationale: Vec<String>,
    pub cautions: Vec<String>,
}

fn clauses(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn decide(answers: &DecisionAnswers) -> Recommendation {
    if !answers.needs_upgradeability {
        return Recommendation {
            pattern: Pattern::Classic,
            rationale: clauses(&[
                "functional: no upgrade path is required",
                "non-functional: simplest development model, plain inheritance and library imports",
                "non-functional: cheapest deployment and no delegation overhead per call",
            ]),
            cautions: clauses(&[
                "a later upgrade means redeploying and migrating all stored data",
                "users must be told the new contract address after every redeploy",
            ]),
        };
    }
    if answers.extensive_features_or_large_code || answers.modularity_priority {
        let mut rationale = vec![
            "functional: logic is split into facets that can be added, replaced or removed independently".to_string(),
            "non-functional: modular code keeps each facet small and quick to compile".to_string(),
        ];
        if answers.extensive_features_or_large_code {
            rationale.push(
                "functional: large code bases fit across facets without hitting contract size limits".to_string(),
            );
        }
        if answers.frequent_upgrades {
            rationale.push("non-functional: each upgrade redeploys only the facets that changed".to_string());
        }
        return Recommendation {
            pattern: Pattern::Diamond,
            rationale,
            cautions: clauses(&[
                "initial deployment costs more than a proxy",
                "each call pays a selector lookup on top of the delegation",
                "requires solid knowledge of storage layout and facet library management",
            ]),
        };
    }
    let mut rationale = vec![
        "functional: state stays in the proxy, so upgrades need no data migration".to_string(),
        "non-functional: code size is limited, one implementation contract suffices".to_string(),
        "non-functional: integrates with standard upgradeable contract libraries".to_string(),
    ];
    let mut cautions = vec!["new implementations must keep the storage layout compatible".to_string()];
    if answers.frequent_upgrades {
        rationale.push(
            "non-functional: each upgrade is a single implementation deployment plus a pointer write".to_string(),
        );
        cautions.push("less modular than a diamond if the feature set keeps growing".to_string());
    } else {
        rationale.push("functional: upgrades are expected to be infrequent".to_string());
    }
    Recommendation { pattern: Pattern::Proxy, rationale, cautions }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_upgradeability_is_classic() {
        assert_eq!(decide(&DecisionAnswers::default()).pattern, Pattern::Classic);
    }

    #[test]
    fn extensive_is_diamond() {
        let a = DecisionAnswers {
            needs_upgradeability: true,
            extensive_features_or_large_code: true,
            ..Default::default()
        };
        assert_eq!(decide(&a).pattern, Pattern::Diamond);
        let a = DecisionAnswers { needs_upgradeability: true, modularity_priority: true, ..Default::default() };
        assert_eq!(decide(&a).pattern, Pattern::Diamond);
    }

    #[test]
    fn limited_is_proxy() {
        let a = DecisionAnswers { needs_upgradeability: true, ..Default::default() };
        assert_eq!(decide(&a).pattern, Pattern::Proxy);
        let a = DecisionAnswers { needs_upgradeability: true, frequent_upgrades: true, ..Default::default() };
        assert_eq!(decide(&a).pattern, Pattern::Proxy);
    }

    #[test]
    fn answers_enumerate_sixteen_combinations() {
        let all: Vec<_> = DecisionAnswers::all().collect();
        assert_eq!(all.len(), 16);
        for (i, a) in all.iter().enumerate() {
            assert!(all[i + 1..].iter().all(|b| b != a));
        }
    }
}
