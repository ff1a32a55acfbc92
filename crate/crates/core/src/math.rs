//! Float math shim: std intrinsics when available, libm otherwise.

#![allow(dead_code)]

macro_rules! shim {
    ($name:ident, $std_call:ident, $libm_call:ident) => {
        #[inline(always)]
        pub fn $name(x: f64) -> f64 {
            #[cfg(feature = "std")]
            {
                x.$std_call()
            }
            #[cfg(not(feature = "std"))]
            {
                libm::$libm_call(x)
            }
        }
    };
}

shim!(sin, sin, sin);
shim!(cos, cos, cos);
shim!(tan, tan, tan);
shim!(asin, asin, asin);
shim!(atan, atan, atan);
shim!(sinh, sinh, sinh);
shim!(ln, ln, log);
shim!(exp, exp, exp);
shim!(sqrt, sqrt, sqrt);
shim!(floor, floor, floor);
shim!(ceil, ceil, ceil);
shim!(round, round, round);
shim!(abs, abs, fabs);

/// Fused multiply-add; correctly rounded in both backends, so results are
/// bit-identical regardless of feature selection.
#[inline(always)]
pub fn fma(a: f64, b: f64, c: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        a.mul_add(b, c)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::fma(a, b, c)
    }
}
