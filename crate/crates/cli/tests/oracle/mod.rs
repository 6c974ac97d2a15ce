//! Reference implementations used only by tests. None of them call into the
//! library code paths they check.

#![allow(dead_code)]

use std::collections::HashMap;

/// Edit distance straight from its recursive definition, no memo.
pub fn edit_distance_recursive(a: &[char], b: &[char]) -> usize {
    match (a.split_last(), b.split_last()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => {
            let sub = edit_distance_recursive(ra, rb) + usize::from(x != y);
            let del = edit_distance_recursive(ra, b) + 1;
            let ins = edit_distance_recursive(a, rb) + 1;
            sub.min(del).min(ins)
        }
    }
}

/// Same recursion over prefix lengths, memoized in a full table so that
/// length-7 words stay tractable.
pub fn edit_distance_memo(a: &[char], b: &[char]) -> usize {
    fn go(a: &[char], b: &[char], i: usize, j: usize, memo: &mut [Option<usize>], w: usize) -> usize {
        if i == 0 {
            return j;
        }
        if j == 0 {
            return i;
        }
        if let Some(v) = memo[i * w + j] {
            return v;
        }
        let sub = go(a, b, i - 1, j - 1, memo, w) + usize::from(a[i - 1] != b[j - 1]);
        let del = go(a, b, i - 1, j, memo, w) + 1;
        let ins = go(a, b, i, j - 1, memo, w) + 1;
        let v = sub.min(del).min(ins);
        memo[i * w + j] = Some(v);
        v
    }
    let w = b.len() + 1;
    let mut memo = vec![None; (a.len() + 1) * w];
    go(a, b, a.len(), b.len(), &mut memo, w)
}

pub fn normalized_recursive(a: &str, b: &str) -> f64 {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    edit_distance_recursive(&a, &b) as f64 / a.len().max(b.len()) as f64
}

/// Exact sum of non-negative doubles that are integer multiples of 2^-64,
/// held as a 64.64 fixed-point integer.
#[derive(Default)]
pub struct FixedSum(u128);

impl FixedSum {
    const SCALE: f64 = 18446744073709551616.0; // 2^64

    pub fn add(&mut self, x: f64) {
        assert!(x >= 0.0);
        let scaled = x * Self::SCALE;
        assert_eq!(scaled.fract(), 0.0, "{x} is not a multiple of 2^-64");
        self.0 += scaled as u128;
    }

    /// The exact sum rounded once to the nearest double.
    pub fn value(&self) -> f64 {
        self.0 as f64 / Self::SCALE
    }
}

/// Minimal Newick reader: `tree := subtree ';'`,
/// `subtree := ( '(' subtree (',' subtree)* ')' )? label? (':' number)?`,
/// labels optionally single-quoted with `''` as an escaped quote.
#[derive(Debug, Clone, PartialEq)]
pub struct NewickNode {
    pub name: Option<String>,
    pub length: Option<f64>,
    pub children: Vec<NewickNode>,
}

pub fn parse_newick(text: &str) -> Result<NewickNode, String> {
    let chars: Vec<char> = text.trim().chars().collect();
    let mut pos = 0;
    let node = parse_subtree(&chars, &mut pos)?;
    if chars.get(pos) != Some(&';') {
        return Err(format!("expected ';' at {pos}"));
    }
    if pos + 1 != chars.len() {
        return Err("trailing text after ';'".into());
    }
    Ok(node)
}

fn parse_subtree(c: &[char], pos: &mut usize) -> Result<NewickNode, String> {
    let mut children = Vec::new();
    if c.get(*pos) == Some(&'(') {
        *pos += 1;
        loop {
            children.push(parse_subtree(c, pos)?);
            match c.get(*pos) {
                Some(',') => *pos += 1,
                Some(')') => {
                    *pos += 1;
                    break;
                }
                other => return Err(format!("unexpected {other:?} at {pos}")),
            }
        }
    }
    let name = parse_label(c, pos)?;
    let length = if c.get(*pos) == Some(&':') {
        *pos += 1;
        let start = *pos;
        while *pos < c.len() && (c[*pos].is_ascii_digit() || "+-.eE".contains(c[*pos])) {
            *pos += 1;
        }
        let text: String = c[start..*pos].iter().collect();
        Some(text.parse::<f64>().map_err(|_| format!("bad length {text:?}"))?)
    } else {
        None
    };
    Ok(NewickNode {
        name,
        length,
        children,
    })
}

fn parse_label(c: &[char], pos: &mut usize) -> Result<Option<String>, String> {
    if c.get(*pos) == Some(&'\'') {
        *pos += 1;
        let mut out = String::new();
        loop {
            match c.get(*pos) {
                None => return Err("unterminated quote".into()),
                Some('\'') if c.get(*pos + 1) == Some(&'\'') => {
                    out.push('\'');
                    *pos += 2;
                }
                Some('\'') => {
                    *pos += 1;
                    return Ok(Some(out));
                }
                Some(&ch) => {
                    out.push(ch);
                    *pos += 1;
                }
            }
        }
    }
    let start = *pos;
    while *pos < c.len() && !"(),:;'".contains(c[*pos]) && !c[*pos].is_whitespace() {
        *pos += 1;
    }
    Ok((*pos > start).then(|| c[start..*pos].iter().collect()))
}

/// Leaf-to-leaf path lengths of a parsed tree, keyed by sorted name pair.
pub fn newick_distances(root: &NewickNode) -> HashMap<(String, String), f64> {
    // (name, depth below root) for every leaf
    fn leaves(node: &NewickNode, depth: f64, path: &mut Vec<usize>, out: &mut Vec<(String, f64, Vec<usize>)>) {
        let depth = depth + node.length.unwrap_or(0.0);
        if node.children.is_empty() {
            out.push((node.name.clone().unwrap_or_default(), depth, path.clone()));
            return;
        }
        for (k, child) in node.children.iter().enumerate() {
            path.push(k);
            leaves(child, depth, path, out);
            path.pop();
        }
    }
    fn depth_of(root: &NewickNode, path: &[usize]) -> f64 {
        let mut node = root;
        let mut depth = 0.0;
        for &k in path {
            node = &node.children[k];
            depth += node.length.unwrap_or(0.0);
        }
        depth
    }
    let mut all = Vec::new();
    leaves(root, -root.length.unwrap_or(0.0), &mut Vec::new(), &mut all);
    let mut out = HashMap::new();
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            let common = all[i].2.iter().zip(&all[j].2).take_while(|(x, y)| x == y).count();
            let lca = depth_of(root, &all[i].2[..common]);
            let d = (all[i].1 - lca) + (all[j].1 - lca);
            let (a, b) = (all[i].0.clone(), all[j].0.clone());
            let key = if a < b { (a, b) } else { (b, a) };
            out.insert(key, d);
        }
    }
    out
}

/// Random ultrametric matrix: merge two random clusters at a time at strictly
/// increasing heights; leaves in different clusters get twice the merge
/// height as their distance.
pub fn random_ultrametric(n: usize, rng: &mut impl rand::Rng) -> Vec<f64> {
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut d = vec![0.0; n * n];
    let mut height = 0.0;
    while clusters.len() > 1 {
        height += rng.random_range(0.01..1.0);
        let i = rng.random_range(0..clusters.len());
        let a = clusters.swap_remove(i);
        let j = rng.random_range(0..clusters.len());
        let b = clusters.swap_remove(j);
        for &x in &a {
            for &y in &b {
                d[x * n + y] = 2.0 * height;
                d[y * n + x] = 2.0 * height;
            }
        }
        clusters.push([a, b].concat());
    }
    d
}
