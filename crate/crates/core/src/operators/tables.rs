//! Embedded boundary-closure data for the diagonal-norm upwind operators.
//!
//! Every operator is stored through its decomposition
//! `H D± = Q + B/2 ± S`, where `Q` is skew-symmetric, `B = e_N e_Nᵀ - e_1 e_1ᵀ`
//! and `S = -Δᵀ C Δ` is a negative semidefinite dissipation built from the
//! undivided difference `Δ` of degree `order/2 + 1`. Values are for unit grid
//! spacing; the right boundary is the mirror image of the left one.
#![allow(clippy::excessive_precision, clippy::unreadable_literal)]

/// One row of the closure table.
pub(crate) struct Closure {
    pub order: usize,
    /// Interior coefficients `a_1..a_w` of the skew part (`a_{-k} = -a_k`).
    pub central: &'static [f64],
    /// Interior weight of `C` in the dissipation.
    pub dissipation: f64,
    /// Relative weights of the first entries of `C` near each boundary.
    pub dissipation_boundary: &'static [f64],
    /// Boundary weights `h_1..h_r` of the diagonal norm.
    pub norm: &'static [f64],
    /// Upper triangle of the `r × r` boundary block of `Q`, row-major.
    pub skew_block: &'static [f64],
}

impl Closure {
    /// Number of rows in each boundary block.
    pub fn block_rows(&self) -> usize {
        self.norm.len()
    }

    /// Half width of the interior stencil of the skew part.
    pub fn half_width(&self) -> usize {
        self.central.len()
    }

    /// Degree of the undivided difference used by the dissipation.
    pub fn difference_degree(&self) -> usize {
        self.order / 2 + 1
    }
}

pub(crate) fn closure(order: usize) -> Option<&'static Closure> {
    match order {
        2 => Some(&ORDER_2),
        4 => Some(&ORDER_4),
        6 => Some(&ORDER_6),
        8 => Some(&ORDER_8),
        _ => None,
    }
}

pub(crate) const ORDER_2: Closure = Closure {
    order: 2,
    central: &[1.0, -1.0 / 4.0],
    dissipation: 1.0 / 4.0,
    dissipation_boundary: &[],
    norm: &[1.0 / 4.0, 5.0 / 4.0],
    skew_block: &[3.0 / 4.0],
};

pub(crate) const ORDER_4: Closure = Closure {
    order: 4,
    central: &[7.0 / 8.0, -1.0 / 4.0, 1.0 / 24.0],
    dissipation: 1.0 / 24.0,
    dissipation_boundary: &[1.0 / 2.0],
    norm: &[49.0 / 144.0, 61.0 / 48.0, 41.0 / 48.0, 149.0 / 144.0],
    skew_block: &[187.0 / 288.0, -5.0 / 36.0, -1.0 / 96.0, 23.0 / 32.0, -1.0 / 9.0, 227.0 / 288.0],
};

pub(crate) const ORDER_6: Closure = Closure {
    order: 6,
    central: &[13.0 / 15.0, -4.0 / 15.0, 1.0 / 15.0, -1.0 / 120.0],
    dissipation: 1.0 / 120.0,
    dissipation_boundary: &[1.0 / 2.0],
    norm: &[13613.0 / 43200.0, 12049.0 / 8640.0, 535.0 / 864.0, 1079.0 / 864.0, 7841.0 / 8640.0, 43837.0 / 43200.0],
    skew_block: &[
        8170799.0 / 12656250.0,
        -41133919.0 / 810000000.0,
        -6265663.0 / 45000000.0,
        26997331.0 / 810000000.0,
        4493693.0 / 405000000.0,
        11146837.0 / 27000000.0,
        54503581.0 / 162000000.0,
        -2106307.0 / 27000000.0,
        -6934223.0 / 270000000.0,
        17396761.0 / 40500000.0,
        -4815473.0 / 54000000.0,
        4053011.0 / 135000000.0,
        59890511.0 / 81000000.0,
        -138483919.0 / 810000000.0,
        254333.0 / 312500.0,
    ],
};

pub(crate) const ORDER_8: Closure = Closure {
    order: 8,
    central: &[7.0 / 8.0, -2.0 / 7.0, 29.0 / 336.0, -1.0 / 56.0, 1.0 / 560.0],
    dissipation: 1.0 / 560.0,
    dissipation_boundary: &[1.0 / 2.0],
    norm: &[
        7489399.0 / 25401600.0,
        5537831.0 / 3628800.0,
        103373.0 / 403200.0,
        261259.0 / 145152.0,
        298231.0 / 725760.0,
        515917.0 / 403200.0,
        3349159.0 / 3628800.0,
        25639991.0 / 25401600.0,
    ],
    skew_block: &[
        107944329361.0 / 176400000000.0,
        31753706693.0 / 105840000000.0,
        -968602107551.0 / 952560000000.0,
        28329213211.0 / 26460000000.0,
        -10681391561.0 / 15120000000.0,
        29337061747.0 / 97200000000.0,
        -6469760401.0 / 105840000000.0,
        -35968597909.0 / 37800000000.0,
        16740367069.0 / 3780000000.0,
        -152498655593.0 / 27216000000.0,
        159152934337.0 / 37800000000.0,
        -3421787123.0 / 1890000000.0,
        805288137307.0 / 2381400000000.0,
        -40958591057.0 / 7560000000.0,
        168322659899.0 / 15120000000.0,
        -2804806447.0 / 280000000.0,
        4664752031.0 / 1050000000.0,
        -13964479951.0 / 17640000000.0,
        -9063809821.0 / 1008000000.0,
        12498328477.0 / 1080000000.0,
        -11912173859.0 / 2126250000.0,
        53661965201.0 / 52920000000.0,
        -11247388699.0 / 2160000000.0,
        10761401411.0 / 3024000000.0,
        -693008005573.0 / 952560000000.0,
        -4042737.0 / 12500000.0,
        263427.0 / 2500000.0,
        39113081.0 / 50000000.0,
    ],
};
