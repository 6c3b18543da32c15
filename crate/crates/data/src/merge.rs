use std::collections::HashSet;

use crate::{DataError, DatasetSplit, LabeledPost, Result, SplitName};

/// Concatenates two splits, `a` then `b`, preserving order. If any id of `b`
/// collides with `a`, every id of `b` is prefixed with `<tag>:` before
/// merging; a collision that survives namespacing is an integrity error.
pub fn merge_splits(a: &DatasetSplit, b: &DatasetSplit, tag: &str) -> Result<DatasetSplit> {
    let a_ids: HashSet<&str> = a.ids().collect();
    let collides = b.ids().any(|id| a_ids.contains(id));

    let mut posts: Vec<LabeledPost> = a.posts().to_vec();
    for post in b {
        let id = if collides {
            format!("{tag}:{}", post.id)
        } else {
            post.id.clone()
        };
        if collides && a_ids.contains(id.as_str()) {
            return Err(DataError::NamespaceCollision {
                id,
                tag: tag.to_string(),
            });
        }
        posts.push(LabeledPost::new(id, post.text.clone(), post.label));
    }
    DatasetSplit::new(SplitName::Custom, posts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{compute_stats, Label};

    fn split(name: SplitName, rows: &[(&str, &str, Label)]) -> DatasetSplit {
        DatasetSplit::new(
            name,
            rows.iter()
                .map(|(id, text, label)| LabeledPost::new(*id, *text, *label))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn merge_is_order_preserving_and_stats_additive() {
        let a = split(
            SplitName::Train,
            &[("1", "alpha beta", Label::Real), ("2", "gamma", Label::Fake)],
        );
        let b = split(SplitName::External, &[("3", "delta eps", Label::Fake)]);
        let merged = merge_splits(&a, &b, "ext").unwrap();
        assert_eq!(
            merged.ids().collect::<Vec<_>>(),
            vec!["1", "2", "3"]
        );
        let sa = compute_stats(&a);
        let sb = compute_stats(&b);
        let sm = compute_stats(&merged);
        assert_eq!(sm.n_total, sa.n_total + sb.n_total);
        assert_eq!(sm.n_fake, sa.n_fake + sb.n_fake);
        assert_eq!(sm.n_real, sa.n_real + sb.n_real);
    }

    #[test]
    fn merge_with_empty_is_identity_on_posts() {
        let a = split(SplitName::Train, &[("1", "alpha", Label::Real)]);
        let merged = merge_splits(&a, &DatasetSplit::empty(SplitName::External), "ext").unwrap();
        assert_eq!(merged.posts(), a.posts());
    }

    #[test]
    fn colliding_ids_get_namespaced() {
        let a = split(SplitName::Train, &[("5", "alpha", Label::Real)]);
        let b = split(SplitName::External, &[("5", "beta", Label::Fake)]);
        let merged = merge_splits(&a, &b, "ext").unwrap();
        assert_eq!(merged.ids().collect::<Vec<_>>(), vec!["5", "ext:5"]);
    }
}
