#![no_main]

use libfuzzer_sys::fuzz_target;
use lispray::expr::Expr;

// First byte picks the variable count, the rest is the expression.
fuzz_target!(|data: &[u8]| {
    let Some((&n, rest)) = data.split_first() else { return };
    let nvars = (n % 4) as usize;
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let Ok(e) = Expr::parse(text, nvars) else { return };
    assert!(e.arity() <= nvars);
    let u = [0.5, -1.25, 2.0, 0.75];
    let _ = e.eval(&u[..nvars]);
    for var in 0..nvars {
        let _ = e.derivative(var).eval(&u[..nvars]);
    }
    // the printed form parses back to the same tree
    let again = Expr::parse(&e.to_string(), nvars).expect("display output parses");
    assert_eq!(again.to_string(), e.to_string());
});
