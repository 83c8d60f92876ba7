use super::HarnessError;
use num_bigint::BigUint;
use num_traits::One;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationOutcome {
    pub valid: bool,
    pub witness: String,
}

impl ValidationOutcome {
    fn invalid(witness: String) -> Self {
        Self { valid: false, witness }
    }
}

/// Accepts `factors` as a factorization of `n` iff every factor lies
/// strictly between 1 and `n` and their product is `n`. Uses `|factors|`
/// big-integer multiplications.
pub fn validate_shor_factors(n: &BigUint, factors: &[BigUint]) -> ValidationOutcome {
    let one = BigUint::one();
    if *n < BigUint::from(2u8) {
        return ValidationOutcome::invalid(format!("N = {n} must be at least 2"));
    }
    if factors.is_empty() {
        return ValidationOutcome::invalid("no factors given".into());
    }
    let mut product = BigUint::one();
    for f in factors {
        if *f <= one || f >= n {
            return ValidationOutcome::invalid(format!("factor {f} not strictly between 1 and N = {n}"));
        }
        product *= f;
    }
    if product != *n {
        return ValidationOutcome::invalid(format!("product {product} ≠ {n}"));
    }
    let list: Vec<String> = factors.iter().map(ToString::to_string).collect();
    ValidationOutcome {
        valid: true,
        witness: format!("{} = {n}", list.join(" × ")),
    }
}

/// Checks a search result by evaluating `predicate` on `items[index]`
/// exactly once.
pub fn validate_grover<T>(
    items: &[T],
    index: usize,
    mut predicate: impl FnMut(&T) -> bool,
) -> Result<ValidationOutcome, HarnessError> {
    let item = items.get(index).ok_or(HarnessError::IndexOutOfRange {
        index,
        len: items.len(),
    })?;
    Ok(if predicate(item) {
        ValidationOutcome {
            valid: true,
            witness: format!("item {index} satisfies the predicate"),
        }
    } else {
        ValidationOutcome::invalid(format!("item {index} does not satisfy the predicate"))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn fifteen() {
        let n = BigUint::from(15u8);
        assert!(validate_shor_factors(&n, &big(&[3, 5])).valid);
        let bad = validate_shor_factors(&n, &big(&[2, 7]));
        assert_eq!((bad.valid, bad.witness.as_str()), (false, "product 14 ≠ 15"));
        let trivial = validate_shor_factors(&n, &big(&[1, 15]));
        assert!(!trivial.valid && trivial.witness.contains("factor 1 not strictly between 1 and N"));
    }

    #[test]
    fn rsa_scale_product() {
        let p: BigUint = "32317006071311007300714876688669951960444102669715484032130345427524655138867890893197201411522913463688717960921898019494119559150490921095088152386448283120630877367300996091750197750389652106796057638384067568276792218642619756161838094775989"
            .parse()
            .unwrap();
        let q = BigUint::from(1_000_000_007u64);
        let n = &p * &q;
        assert!(validate_shor_factors(&n, &[p.clone(), q.clone()]).valid);
        assert!(!validate_shor_factors(&n, &[p, q + 1u8]).valid);
    }

    #[test]
    fn grover_single_evaluation() {
        let items: Vec<u32> = (0..16).map(|i| if i == 7 { 99 } else { i }).collect();
        let mut calls = 0;
        assert!(validate_grover(&items, 7, |v| {
            calls += 1;
            *v == 99
        })
        .unwrap()
        .valid);
        assert_eq!(calls, 1);
        assert!(!validate_grover(&items, 3, |v| *v == 99).unwrap().valid);
        assert!(validate_grover(&items, 16, |_| true).is_err());
    }
}
