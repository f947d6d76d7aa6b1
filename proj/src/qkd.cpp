#include "qpon/qkd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qpon {

const char* to_string(NoKeyReason reason) {
    switch (reason) {
        case NoKeyReason::None: return "ok";
        case NoKeyReason::ZeroEta: return "zero-transmittance";
        case NoKeyReason::NoSinglePhotonYield: return "no-single-photon-yield";
        case NoKeyReason::RateNonPositive: return "rate-non-positive";
    }
    return "unknown";
}

double h2(double x) {
    if (x < 0.0 || x > 1.0) throw std::domain_error("h2 argument outside [0, 1]");
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

GainQber gain_and_qber(double mean_photon_number, const ChannelParams& ch) {
    if (mean_photon_number < 0.0) throw std::domain_error("mean photon number must be >= 0");
    const double transmitted = -std::expm1(-ch.eta * mean_photon_number);  // 1 - e^(-eta m)
    const double gain = 1.0 - (1.0 - ch.y0) * (1.0 - transmitted);
    const double error_weight = ChannelParams::e0 * ch.y0 + ch.e_det * transmitted;
    const double qber = gain > 0.0 ? error_weight / gain : ChannelParams::e0;
    return {gain, std::clamp(qber, 0.0, ChannelParams::e0)};
}

double y1_lower_bound(double q_mu, double q_nu, double y0, double mu, double nu) {
    if (!(nu < mu)) throw std::invalid_argument("decoy bound requires nu < mu");
    const double denom = mu * nu - nu * nu;
    if (denom <= 0.0) throw std::invalid_argument("degenerate intensities");
    const double bound = (mu / denom) * (q_nu * std::exp(nu) -
                                         q_mu * std::exp(mu) * (nu * nu) / (mu * mu) -
                                         ((mu * mu - nu * nu) / (mu * mu)) * y0);
    return std::clamp(bound, 0.0, 1.0);
}

double e1_upper_bound(double e_nu, double q_nu, double y0, double nu, double y1_lower) {
    if (y1_lower <= 0.0) throw std::invalid_argument("e1 bound requires y1_lower > 0");
    const double numerator = e_nu * q_nu * std::exp(nu) - ChannelParams::e0 * y0;
    return std::clamp(numerator / (y1_lower * nu), 0.0, 0.5);
}

namespace {

KeyRateReport assemble_rate(const DecoyParams& d, const ChannelParams& ch, double q_mu,
                            double e_mu) {
    KeyRateReport r;
    r.q_mu = q_mu;
    r.e_mu = e_mu;
    const auto nu_ge = gain_and_qber(d.nu, ch);
    r.q_nu = nu_ge.gain;
    r.e_nu = nu_ge.qber;
    r.qber_percent = 100.0 * r.e_mu;

    if (ch.eta <= 0.0) {
        r.reason = NoKeyReason::ZeroEta;
        return r;
    }
    r.y1_lower = y1_lower_bound(r.q_mu, r.q_nu, ch.y0, d.mu, d.nu);
    if (r.y1_lower <= 0.0) {
        r.reason = NoKeyReason::NoSinglePhotonYield;
        return r;
    }
    r.e1_upper = e1_upper_bound(r.e_nu, r.q_nu, ch.y0, d.nu, r.y1_lower);
    r.q1_lower = r.y1_lower * d.mu * std::exp(-d.mu);

    const double per_pulse =
        r.q1_lower * (1.0 - h2(r.e1_upper)) - d.f_ec * r.q_mu * h2(std::min(r.e_mu, 0.5));
    const double rate = d.sifting_q * d.p_signal * d.clock_rate_hz * per_pulse;
    if (rate <= 0.0) {
        r.reason = NoKeyReason::RateNonPositive;
        return r;
    }
    r.skr_bps = rate;
    return r;
}

}  // namespace

KeyRateReport secure_key_rate(const DecoyParams& d, const ChannelParams& ch) {
    const auto mu_ge = gain_and_qber(d.mu, ch);
    return assemble_rate(d, ch, mu_ge.gain, mu_ge.qber);
}

KeyRateReport key_rate_from_observed(const DecoyParams& d, const ChannelParams& ch,
                                     double observed_q_mu, double observed_e_mu) {
    return assemble_rate(d, ch, std::clamp(observed_q_mu, 0.0, 1.0),
                         std::clamp(observed_e_mu, 0.0, 0.5));
}

}  // namespace qpon
