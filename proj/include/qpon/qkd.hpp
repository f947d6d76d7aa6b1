#pragma once

#include <string>

namespace qpon {

/// Intensities and protocol constants of a vacuum+weak decoy-state BB84 run.
struct DecoyParams {
    double mu = 0.5;   // signal mean photon number
    double nu = 0.1;   // decoy mean photon number, 0 < nu < mu, nu < 1
    double p_signal = 0.9;
    double p_decoy = 0.05;
    double p_vacuum = 0.05;
    double sifting_q = 0.9;  // basis-match fraction (biased bases)
    double f_ec = 1.16;      // error-correction inefficiency
    double clock_rate_hz = 1e9;
};

/// Effective channel feeding the key-rate engine. `eta` is the end-to-end
/// transmittance including receiver optics and detector efficiency.
struct ChannelParams {
    double eta = 1e-3;
    double y0 = 1e-5;     // background yield per gate
    double e_det = 0.015; // misalignment/intrinsic error fraction
    static constexpr double e0 = 0.5;  // background error fraction
};

enum class NoKeyReason { None, ZeroEta, NoSinglePhotonYield, RateNonPositive };

struct KeyRateReport {
    double q_mu = 0.0;
    double e_mu = 0.0;
    double q_nu = 0.0;
    double e_nu = 0.0;
    double y1_lower = 0.0;
    double e1_upper = 0.5;
    double q1_lower = 0.0;
    double skr_bps = 0.0;
    double qber_percent = 0.0;
    NoKeyReason reason = NoKeyReason::None;
};

const char* to_string(NoKeyReason reason);

/// Binary entropy; h2(0) == h2(1) == 0. Throws outside [0, 1].
double h2(double x);

struct GainQber {
    double gain;
    double qber;
};

/// Detection gain and error rate of a Poissonian source with mean photon
/// number m over a channel with transmittance eta and background yield y0:
///   Q = 1 - (1 - Y0) e^(-eta m)         (exact Poisson mixture)
///   E Q = e0 Y0 + e_det (1 - e^(-eta m))
GainQber gain_and_qber(double mean_photon_number, const ChannelParams& ch);

/// Vacuum+weak decoy lower bound on the single-photon yield, clamped to [0, 1].
double y1_lower_bound(double q_mu, double q_nu, double y0, double mu, double nu);

/// Companion upper bound on the single-photon error rate, clamped to [0, 0.5].
/// Requires y1_lower > 0.
double e1_upper_bound(double e_nu, double q_nu, double y0, double nu, double y1_lower);

/// Asymptotic secure key rate:
///   R = q p_signal clock [ Q1 (1 - h2(e1)) - f_ec Q_mu h2(E_mu) ], clamped at 0.
KeyRateReport secure_key_rate(const DecoyParams& d, const ChannelParams& ch);

/// Re-derives the rate from an observed (sampled) signal gain and error rate,
/// keeping the decoy statistics at their analytic values. Used by the
/// per-block emulation.
KeyRateReport key_rate_from_observed(const DecoyParams& d, const ChannelParams& ch,
                                     double observed_q_mu, double observed_e_mu);

}  // namespace qpon
