//! Dormand-Prince 5(4) explicit embedded pair with FSAL. The system is
//! autonomous, so the stage nodes never appear.

use crate::dynamics::{RateVectors, RhsEvaluator};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order weights minus fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

pub(crate) struct Dopri5 {
    k: [Vec<f64>; 7],
    ytmp: Vec<f64>,
    rates: RateVectors,
    /// `k[0]` holds `F(y)` for the current `y`.
    fsal: bool,
}

impl Dopri5 {
    pub(crate) fn new(n: usize) -> Self {
        Dopri5 {
            k: std::array::from_fn(|_| vec![0.0; n + 1]),
            ytmp: vec![0.0; n + 1],
            rates: RateVectors::zeros(n),
            fsal: false,
        }
    }

    pub(crate) fn invalidate(&mut self) {
        self.fsal = false;
    }

    /// Moves the last stage into the first slot after an accepted step
    /// whose end point was not modified.
    pub(crate) fn accept_unmodified(&mut self) {
        self.k.swap(0, 6);
        self.fsal = true;
    }

    pub(crate) fn attempt(
        &mut self,
        eval: &RhsEvaluator,
        y: &[f64],
        h: f64,
        y_new: &mut [f64],
        err: &mut [f64],
    ) {
        let Dopri5 { k, ytmp, rates, fsal } = self;
        if !*fsal {
            eval.rhs_into(y, rates, &mut k[0]);
            *fsal = true;
        }
        let n = y.len();
        macro_rules! stage {
            ($dst:expr, $($c:expr => $src:expr),+) => {{
                for i in 0..n {
                    ytmp[i] = y[i] + h * (0.0 $(+ $c * k[$src][i])+);
                }
                let (_, tail) = k.split_at_mut($dst);
                eval.rhs_into(ytmp, rates, &mut tail[0]);
            }};
        }
        stage!(1, A21 => 0);
        stage!(2, A31 => 0, A32 => 1);
        stage!(3, A41 => 0, A42 => 1, A43 => 2);
        stage!(4, A51 => 0, A52 => 1, A53 => 2, A54 => 3);
        stage!(5, A61 => 0, A62 => 1, A63 => 2, A64 => 3, A65 => 4);
        for i in 0..n {
            y_new[i] = y[i] + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
        }
        eval.rhs_into(y_new, rates, &mut k[6]);
        for i in 0..n {
            err[i] = h
                * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
        }
    }
}
