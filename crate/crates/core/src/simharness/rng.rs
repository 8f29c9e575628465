//! Deterministic random generation for the simulation harness.
//!
//! The stream generator is xoshiro256++ (shift/rotate arithmetic only), and
//! per-replication substreams are derived with the splitmix64 avalanche
//! `mix64(base_seed, stream)`, so replication r of a run is reproducible in
//! isolation and results do not depend on evaluation order.
//!
//! Sampling is inverse-CDF for uniforms, normals, and exponentials
//! (bit-reproducible across platforms); general gamma shapes use
//! Marsaglia-Tsang with these primitives, and Student t combines a normal
//! with a gamma-based chi-square.

use crate::statdist;

/// splitmix64-style avalanche combining a base seed with a stream index.
pub fn mix64(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// xoshiro256++ stream generator.
#[derive(Debug, Clone)]
pub struct Xoshiro256PlusPlus {
    s: [u64; 4],
}

impl Xoshiro256PlusPlus {
    /// Expands a 64-bit seed into the full state via splitmix64.
    pub fn from_seed(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Xoshiro256PlusPlus { s }
    }

    #[cfg(test)]
    fn from_raw_state(s: [u64; 4]) -> Self {
        Xoshiro256PlusPlus { s }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[0]
            .wrapping_add(self.s[3])
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform draw strictly inside (0, 1): 53 mantissa bits, offset half a step.
    #[inline]
    pub fn uniform_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal via the inverse CDF.
    #[inline]
    pub fn normal(&mut self) -> f64 {
        statdist::quantile_raw(self.uniform_open01())
    }

    /// Exponential(1) via the inverse CDF.
    #[inline]
    pub fn exponential(&mut self) -> f64 {
        -self.uniform_open01().ln()
    }

    /// Gamma(shape, scale). Shape 1 is the exponential inverse-CDF path;
    /// other shapes use Marsaglia-Tsang (with the boost for shape < 1).
    pub fn gamma(&mut self, shape: f64, scale: f64) -> f64 {
        debug_assert!(shape > 0.0 && scale > 0.0);
        if shape == 1.0 {
            return scale * self.exponential();
        }
        if shape < 1.0 {
            let boost = self.uniform_open01().powf(1.0 / shape);
            return self.gamma(shape + 1.0, scale) * boost;
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.normal();
            let v = (1.0 + c * x) * (1.0 + c * x) * (1.0 + c * x);
            if v <= 0.0 {
                continue;
            }
            let u = self.uniform_open01();
            if u < 1.0 - 0.0331 * x * x * x * x {
                return d * v * scale;
            }
            if u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
                return d * v * scale;
            }
        }
    }

    /// Student t with `df` degrees of freedom: normal over the square root
    /// of a chi-square (gamma(df/2, 2)) divided by df.
    pub fn student_t(&mut self, df: f64) -> f64 {
        debug_assert!(df > 0.0);
        let z = self.normal();
        let chi2 = self.gamma(df / 2.0, 2.0);
        z / (chi2 / df).sqrt()
    }
}
