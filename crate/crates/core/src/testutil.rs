//! Small deterministic generator for test-side Monte-Carlo oracles.
//!
//! Deliberately separate from `simharness::rng`: oracle draws must not share
//! code with the machinery they check. Uniforms come from xorshift64*,
//! normals from the polar (Marsaglia) method, so none of the erf/quantile
//! paths under test are involved.

pub(crate) struct OracleRng(pub u64);

impl OracleRng {
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }

    pub fn normal_pair(&mut self) -> (f64, f64) {
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                return (u * f, v * f);
            }
        }
    }

    pub fn normal(&mut self) -> f64 {
        self.normal_pair().0
    }
}
