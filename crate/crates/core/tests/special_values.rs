#![allow(clippy::approx_constant)]
use approx::assert_relative_eq;
use mimicry::mathcore::special::{
    digamma, ln_gamma, regularized_incomplete_gamma, regularized_upper_incomplete_gamma, trigamma,
};

// Reference values computed with mpmath at 40 digits.
const GAMMA_FAMILY: [[f64; 4]; 25] = [
    [
        0.05,
        2.9688792010517306,
        -20.497844991299868,
        401.53235734211506,
    ],
    [
        0.1,
        2.252712651734206,
        -10.423754940411076,
        101.43329915079275,
    ],
    [
        0.25,
        1.2880225246980774,
        -4.2274535333762655,
        17.19732915450711,
    ],
    [
        0.5,
        0.5723649429247001,
        -1.9635100260214235,
        4.934802200544679,
    ],
    [
        0.75,
        0.20328095143129538,
        -1.0858608797864722,
        2.5418796476716063,
    ],
    [1.0, 0.0, -0.5772156649015329, 1.6449340668482264],
    [
        1.5,
        -0.12078223763524522,
        0.03648997397857652,
        0.9348022005446793,
    ],
    [2.0, 0.0, 0.42278433509846713, 0.6449340668482264],
    [
        2.5,
        0.2846828704729192,
        0.7031566406452432,
        0.49035775610023485,
    ],
    [
        3.0,
        0.6931471805599453,
        0.9227843350984671,
        0.39493406684822646,
    ],
    [
        3.7,
        1.428072326665388,
        1.1671535393615113,
        0.3100378576700383,
    ],
    [
        4.5,
        2.4537365708424423,
        1.388870926359529,
        0.24872510303901038,
    ],
    [
        5.0,
        3.1780538303479458,
        1.5061176684318005,
        0.22132295573711533,
    ],
    [
        6.25,
        5.219603986990229,
        1.750453526883736,
        0.17347923315893218,
    ],
    [
        7.0,
        6.579251212010101,
        1.8727843350984672,
        0.15354517795933756,
    ],
    [
        8.5,
        9.549267257300997,
        2.08009081757942,
        0.12483811891892602,
    ],
    [
        10.0,
        12.801827480081469,
        2.251752589066721,
        0.10516633568168575,
    ],
    [
        12.5,
        18.734347511936445,
        2.4851956512749123,
        0.08328522460157838,
    ],
    [
        15.0,
        25.19122118273868,
        2.6743466616607936,
        0.0689382278476838,
    ],
    [
        20.0,
        39.339884187199495,
        2.970523992242149,
        0.05127082293520312,
    ],
    [
        25.0,
        54.78472939811232,
        3.198742512851974,
        0.04081066325722558,
    ],
    [
        33.3,
        82.60372358165495,
        3.490467238520243,
        0.030485444095338887,
    ],
    [
        50.0,
        144.5657439463449,
        3.901989673427892,
        0.020201333226697125,
    ],
    [
        75.0,
        247.57291409618688,
        4.310806632318181,
        0.01342261726990576,
    ],
    [
        100.0,
        359.1342053695754,
        4.600161852738087,
        0.010050166663333571,
    ],
];

// (s, x, P(s, x), Q(s, x))
const INCOMPLETE: [[f64; 4]; 25] = [
    [0.5, 0.1, 0.345279153981423, 0.654720846018577],
    [0.5, 2.0, 0.9544997361036416, 0.04550026389635842],
    [1.0, 0.5, 0.3934693402873666, 0.6065306597126334],
    [1.5, 1.5, 0.608374823728911, 0.39162517627108895],
    [2.0, 0.3, 0.03693631311376677, 0.9630636868862332],
    [2.0, 5.0, 0.9595723180054871, 0.040427681994512805],
    [2.5, 2.5, 0.5841198130044921, 0.41588018699550794],
    [3.0, 1.0, 0.08030139707139419, 0.9196986029286058],
    [3.0, 9.0, 0.9937678048936227, 0.006232195106377317],
    [4.5, 3.0, 0.2600817079053463, 0.7399182920946537],
    [5.0, 5.0, 0.5595067149347875, 0.4404932850652124],
    [7.5, 2.0, 0.002262655847083079, 0.9977373441529169],
    [10.0, 12.0, 0.7576078383294876, 0.24239216167051233],
    [10.0, 4.0, 0.008132242796933864, 0.9918677572030662],
    [15.0, 15.0, 0.5343462910559904, 0.46565370894400965],
    [20.0, 25.0, 0.8664251659143496, 0.1335748340856504],
    [30.0, 28.0, 0.3773896943143976, 0.6226103056856024],
    [50.0, 45.0, 0.24680203440017026, 0.7531979655998298],
    [0.25, 0.01, 0.34818645276048404, 0.6518135472395159],
    [1.0, 30.0, 0.9999999999999064, 9.357622968840175e-14],
    [2.5, 0.001, 9.50853459860795e-09, 0.9999999904914654],
    [8.0, 20.0, 0.9992214099174926, 0.000778590082507363],
    [100.0, 95.0, 0.3173568111698, 0.6826431888302],
    [0.75, 3.5, 0.9829740981576005, 0.017025901842399476],
    [12.0, 6.0, 0.0200919635394448, 0.9799080364605552],
];

#[test]
fn gamma_family_matches_reference() {
    for [x, lg, dg, tg] in GAMMA_FAMILY {
        assert_relative_eq!(ln_gamma(x), lg, epsilon = 1e-13, max_relative = 1e-12);
        assert_relative_eq!(digamma(x), dg, epsilon = 1e-13, max_relative = 1e-12);
        assert_relative_eq!(trigamma(x), tg, epsilon = 1e-13, max_relative = 1e-12);
    }
}

#[test]
fn incomplete_gamma_matches_reference() {
    for [s, x, p, q] in INCOMPLETE {
        assert_relative_eq!(
            regularized_incomplete_gamma(s, x),
            p,
            epsilon = 1e-14,
            max_relative = 1e-10
        );
        assert_relative_eq!(
            regularized_upper_incomplete_gamma(s, x),
            q,
            epsilon = 1e-14,
            max_relative = 1e-10
        );
    }
}
