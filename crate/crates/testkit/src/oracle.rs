use std::collections::HashMap;

/// Edit distance by top-down recursion over every choice at every cell,
/// memoized on `(i, j)`.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(
        a: &[T],
        b: &[T],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&d) = memo.get(&(i, j)) {
            return d;
        }
        let diag = go(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]);
        let del = go(a, b, i + 1, j, memo) + 1;
        let ins = go(a, b, i, j + 1, memo) + 1;
        let d = diag.min(del).min(ins);
        memo.insert((i, j), d);
        d
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

/// Minimum cost over every alignment path, enumerated without memoization.
/// Exponential; keep inputs to a handful of tokens.
pub fn edit_distance_enumerated<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => {
            let diag = edit_distance_enumerated(ra, rb) + usize::from(x != y);
            let del = edit_distance_enumerated(ra, b) + 1;
            let ins = edit_distance_enumerated(a, rb) + 1;
            diag.min(del).min(ins)
        }
    }
}

fn grams(tokens: &[String], n: usize) -> Vec<String> {
    if tokens.len() < n {
        return Vec::new();
    }
    (0..=tokens.len() - n)
        .map(|i| tokens[i..i + n].join("\u{1}"))
        .collect()
}

fn occurrences(list: &[String], g: &str) -> f64 {
    list.iter().filter(|x| *x == g).count() as f64
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        1.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// SARI by enumerating every n-gram of the source, hypothesis and
/// references and counting each one with a linear scan.
///
/// Returns `(add, keep, delete, score)`.
pub fn sari(
    src: &[String],
    hyp: &[String],
    refs: &[Vec<String>],
    max_order: usize,
) -> (f64, f64, f64, f64) {
    let r = refs.len() as f64;
    let (mut add, mut keep, mut del) = (0.0, 0.0, 0.0);
    for n in 1..=max_order {
        let s_grams = grams(src, n);
        let c_grams = grams(hyp, n);
        let r_grams: Vec<String> = refs.iter().flat_map(|x| grams(x, n)).collect();
        let mut universe: Vec<String> = Vec::new();
        for g in s_grams.iter().chain(&c_grams).chain(&r_grams) {
            if !universe.contains(g) {
                universe.push(g.clone());
            }
        }

        let (mut kp, mut kr, mut dp, mut dr) = (vec![], vec![], vec![], vec![]);
        let (mut add_sys, mut add_ref, mut add_good) = (0.0, 0.0, 0.0);
        for g in &universe {
            let s = occurrences(&s_grams, g) * r;
            let c = occurrences(&c_grams, g) * r;
            let rr = occurrences(&r_grams, g);

            let keep_sys = s.min(c);
            let keep_ref = s.min(rr);
            let good = keep_sys.min(keep_ref);
            if keep_sys > 0.0 {
                kp.push(good / keep_sys);
            }
            if keep_ref > 0.0 {
                kr.push(good / keep_ref);
            }

            let del_sys = (s - c).max(0.0);
            let del_ref = (s - rr).max(0.0);
            let good = del_sys.min(del_ref);
            if del_sys > 0.0 {
                dp.push(good / del_sys);
            }
            if del_ref > 0.0 {
                dr.push(good / del_ref);
            }

            if s == 0.0 {
                let in_sys = c > 0.0;
                let in_ref = rr > 0.0;
                add_sys += f64::from(u8::from(in_sys));
                add_ref += f64::from(u8::from(in_ref));
                add_good += f64::from(u8::from(in_sys && in_ref));
            }
        }
        keep += f1(mean(&kp), mean(&kr));
        del += f1(mean(&dp), mean(&dr));
        let ap = if add_sys == 0.0 {
            1.0
        } else {
            add_good / add_sys
        };
        let ar = if add_ref == 0.0 {
            1.0
        } else {
            add_good / add_ref
        };
        add += f1(ap, ar);
    }
    let m = max_order as f64;
    let (add, keep, del) = (add / m, keep / m, del / m);
    (add, keep, del, (add + keep + del) / 3.0)
}

/// Splits a string into one token per character.
pub fn chars(s: &str) -> Vec<String> {
    s.chars().map(String::from).collect()
}
