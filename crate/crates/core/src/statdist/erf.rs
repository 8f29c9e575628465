//! Error function and complementary error function.
//!
//! Rational-approximation evaluation following the classic FDLIBM
//! `s_erf.c` scheme (four approximation regions plus tail cutoffs), which
//! keeps the relative error below about 1 ulp across the whole range. The
//! only consumer in this crate is the standard-normal CDF, which needs
//! `erfc` accurate in the far tail.

const ERX: f64 = 8.450_629_115_104_675_292_97e-1;

// |x| < 0.84375
const PP0: f64 = 1.283_791_670_955_125_585_61e-1;
const PP1: f64 = -3.250_421_072_470_014_993_70e-1;
const PP2: f64 = -2.848_174_957_559_851_047_66e-2;
const PP3: f64 = -5.770_270_296_489_441_591_57e-3;
const PP4: f64 = -2.376_301_665_665_016_260_84e-5;
const QQ1: f64 = 3.979_172_239_591_553_528_19e-1;
const QQ2: f64 = 6.502_224_998_876_729_444_85e-2;
const QQ3: f64 = 5.081_306_281_875_765_627_76e-3;
const QQ4: f64 = 1.324_947_380_043_216_445_26e-4;
const QQ5: f64 = -3.960_228_278_775_368_123_20e-6;

// 0.84375 <= |x| < 1.25
const PA0: f64 = -2.362_118_560_752_659_440_77e-3;
const PA1: f64 = 4.148_561_186_837_483_316_66e-1;
const PA2: f64 = -3.722_078_760_357_013_238_47e-1;
const PA3: f64 = 3.183_466_199_011_617_536_74e-1;
const PA4: f64 = -1.108_946_942_823_966_774_76e-1;
const PA5: f64 = 3.547_830_432_561_823_593_71e-2;
const PA6: f64 = -2.166_375_594_868_790_843_00e-3;
const QA1: f64 = 1.064_208_804_008_442_282_86e-1;
const QA2: f64 = 5.403_979_177_021_710_489_37e-1;
const QA3: f64 = 7.182_865_441_419_626_628_68e-2;
const QA4: f64 = 1.261_712_198_087_616_421_12e-1;
const QA5: f64 = 1.363_708_391_202_905_073_62e-2;
const QA6: f64 = 1.198_449_984_679_910_741_70e-2;

// 1.25 <= |x| < 1/0.35
const RA0: f64 = -9.864_944_034_847_148_227_05e-3;
const RA1: f64 = -6.938_585_727_071_817_643_72e-1;
const RA2: f64 = -1.055_862_622_532_329_098_14e1;
const RA3: f64 = -6.237_533_245_032_600_603_96e1;
const RA4: f64 = -1.623_966_694_625_734_703_55e2;
const RA5: f64 = -1.846_050_929_067_110_359_94e2;
const RA6: f64 = -8.128_743_550_630_659_342_46e1;
const RA7: f64 = -9.814_329_344_169_145_485_92;
const SA1: f64 = 1.965_127_166_743_925_712_92e1;
const SA2: f64 = 1.376_577_541_435_190_426_00e2;
const SA3: f64 = 4.345_658_774_752_292_288_21e2;
const SA4: f64 = 6.453_872_717_332_678_803_36e2;
const SA5: f64 = 4.290_081_400_275_678_333_86e2;
const SA6: f64 = 1.086_350_055_417_794_351_34e2;
const SA7: f64 = 6.570_249_770_319_281_701_35;
const SA8: f64 = -6.042_441_521_485_809_874_38e-2;

// 1/0.35 <= |x| < 28
const RB0: f64 = -9.864_942_924_700_099_285_97e-3;
const RB1: f64 = -7.992_832_376_805_230_065_74e-1;
const RB2: f64 = -1.775_795_491_775_475_198_89e1;
const RB3: f64 = -1.606_363_848_558_219_160_62e2;
const RB4: f64 = -6.375_664_433_683_896_277_22e2;
const RB5: f64 = -1.025_095_131_611_077_249_54e3;
const RB6: f64 = -4.835_191_916_086_513_970_19e2;
const SB1: f64 = 3.033_806_074_348_245_829_24e1;
const SB2: f64 = 3.257_925_129_965_739_188_26e2;
const SB3: f64 = 1.536_729_586_084_436_959_94e3;
const SB4: f64 = 3.199_858_219_508_595_539_08e3;
const SB5: f64 = 2.553_050_406_433_164_425_83e3;
const SB6: f64 = 4.745_285_412_069_553_672_15e2;
const SB7: f64 = -2.244_095_244_658_581_833_62e1;

const TINY: f64 = 1.387_778_780_781_445_675_5e-17; // 2^-56
const SMALL: f64 = 3.725_290_298_461_914_062_5e-9; // 2^-28
const EFX: f64 = 1.283_791_670_955_125_863_16e-1;
const EFX8: f64 = 1.027_033_336_764_100_690_53;

/// Drops the low 32 mantissa bits so that `z * z` is exact.
#[inline]
fn trunc_lo(x: f64) -> f64 {
    f64::from_bits(x.to_bits() & 0xffff_ffff_0000_0000)
}

#[inline]
fn rational_small(z: f64) -> f64 {
    let r = PP0 + z * (PP1 + z * (PP2 + z * (PP3 + z * PP4)));
    let s = 1.0 + z * (QQ1 + z * (QQ2 + z * (QQ3 + z * (QQ4 + z * QQ5))));
    r / s
}

#[inline]
fn erf_mid(ax: f64) -> f64 {
    let s = ax - 1.0;
    let p = PA0 + s * (PA1 + s * (PA2 + s * (PA3 + s * (PA4 + s * (PA5 + s * PA6)))));
    let q = 1.0 + s * (QA1 + s * (QA2 + s * (QA3 + s * (QA4 + s * (QA5 + s * QA6)))));
    ERX + p / q
}

/// Shared tail kernel: `erfc(ax) * ax * exp(ax^2)` style factor for `ax >= 1.25`.
#[inline]
fn erfc_tail(ax: f64) -> f64 {
    let s = 1.0 / (ax * ax);
    let (r, q) = if ax < 1.0 / 0.35 {
        (
            RA0 + s * (RA1 + s * (RA2 + s * (RA3 + s * (RA4 + s * (RA5 + s * (RA6 + s * RA7)))))),
            1.0 + s
                * (SA1
                    + s * (SA2
                        + s * (SA3 + s * (SA4 + s * (SA5 + s * (SA6 + s * (SA7 + s * SA8))))))),
        )
    } else {
        (
            RB0 + s * (RB1 + s * (RB2 + s * (RB3 + s * (RB4 + s * (RB5 + s * RB6))))),
            1.0 + s * (SB1 + s * (SB2 + s * (SB3 + s * (SB4 + s * (SB5 + s * (SB6 + s * SB7)))))),
        )
    };
    let z = trunc_lo(ax);
    let e = (-z * z - 0.5625).exp() * ((z - ax) * (z + ax) + r / q).exp();
    e / ax
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return -1.0;
    }
    let ax = x.abs();
    let v = if ax < 0.84375 {
        if ax < SMALL {
            if ax < 1e-300 {
                0.125 * (8.0 * ax + EFX8 * ax)
            } else {
                ax + EFX * ax
            }
        } else {
            ax + ax * rational_small(ax * ax)
        }
    } else if ax < 1.25 {
        erf_mid(ax)
    } else if ax >= 6.0 {
        1.0
    } else {
        1.0 - erfc_tail(ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// Complementary error function, accurate in the far tail.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return 2.0;
    }
    let sign = x < 0.0;
    let ax = x.abs();
    if ax < 0.84375 {
        let temp = if ax < TINY {
            ax
        } else {
            let y = rational_small(ax * ax);
            if ax < 0.25 {
                ax + ax * y
            } else {
                0.5 + (ax * y + (ax - 0.5))
            }
        };
        return if sign { 1.0 + temp } else { 1.0 - temp };
    }
    if ax < 1.25 {
        let e = erf_mid(ax);
        return if sign { 1.0 + e } else { 1.0 - e };
    }
    if ax < 28.0 {
        if sign && ax > 6.0 {
            return 2.0;
        }
        let r = erfc_tail(ax);
        return if sign { 2.0 - r } else { r };
    }
    if sign {
        2.0
    } else {
        0.0
    }
}
