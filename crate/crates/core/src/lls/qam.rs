//! Gray-mapped square QAM with unit average energy and max-log LLRs.

use nalgebra::Complex;

use super::amc::Modulation;

/// Square constellation built from two Gray-labelled PAM axes. The first
/// half of a symbol's bits selects the in-phase level, the second half the
/// quadrature level, most significant bit first.
#[derive(Debug, Clone)]
pub struct Constellation {
    bits: usize,
    /// Axis amplitudes indexed by Gray label.
    levels: Vec<f64>,
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

impl Constellation {
    pub fn new(modulation: Modulation) -> Self {
        let bits = modulation.bits_per_symbol();
        let per_axis = 1usize << (bits / 2);
        let m = (per_axis * per_axis) as f64;
        let scale = (2.0 * (m - 1.0) / 3.0).sqrt().recip();
        let mut levels = vec![0.0; per_axis];
        for idx in 0..per_axis {
            levels[gray(idx)] = (2.0 * idx as f64 - (per_axis as f64 - 1.0)) * scale;
        }
        Self { bits, levels }
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits
    }

    /// Squared minimum distance over average energy.
    pub fn min_distance_sq(&self) -> f64 {
        let m = (self.levels.len() * self.levels.len()) as f64;
        6.0 / (m - 1.0)
    }

    fn axis_label(bits: &[u8]) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn point(&self, bits: &[u8]) -> Complex<f64> {
        let h = self.bits / 2;
        Complex::new(self.levels[Self::axis_label(&bits[..h])], self.levels[Self::axis_label(&bits[h..self.bits])])
    }

    /// Maps `bits` (length a multiple of the symbol size) to symbols.
    pub fn modulate(&self, bits: &[u8]) -> Vec<Complex<f64>> {
        assert_eq!(bits.len() % self.bits, 0, "bit count is not a whole number of symbols");
        bits.chunks(self.bits).map(|c| self.point(c)).collect()
    }

    /// Max-log LLRs `ln P(b=0)/P(b=1)` for unbiased observations `y = s + n`
    /// with `n ~ CN(0, noise_var)`.
    pub fn llrs(&self, y: &[Complex<f64>], noise_var: f64) -> Vec<f64> {
        let h = self.bits / 2;
        let nv = noise_var.max(1e-300);
        let mut out = Vec::with_capacity(y.len() * self.bits);
        for s in y {
            self.axis_llrs(s.re, h, nv, &mut out);
            self.axis_llrs(s.im, h, nv, &mut out);
        }
        out
    }

    fn axis_llrs(&self, y: f64, h: usize, nv: f64, out: &mut Vec<f64>) {
        for j in 0..h {
            let shift = h - 1 - j;
            let mut d0 = f64::INFINITY;
            let mut d1 = f64::INFINITY;
            for (label, a) in self.levels.iter().enumerate() {
                let d = (y - a) * (y - a);
                if (label >> shift) & 1 == 0 {
                    d0 = d0.min(d);
                } else {
                    d1 = d1.min(d);
                }
            }
            out.push((d1 - d0) / nv);
        }
    }
}
