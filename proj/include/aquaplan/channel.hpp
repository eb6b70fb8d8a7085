#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "aquaplan/errors.hpp"

namespace aquaplan::channel {

/// How the path loss enters the detection kernel.
enum class AttenuationScale { db, linear };

inline AttenuationScale parse_scale(std::string_view s)
{
    if (s == "db")
        return AttenuationScale::db;
    if (s == "linear")
        return AttenuationScale::linear;
    throw DomainError("attenuation_scale must be 'db' or 'linear', got '" + std::string(s) + "'");
}

inline std::string_view to_string(AttenuationScale s)
{
    return s == AttenuationScale::db ? "db" : "linear";
}

/// Acoustic path constants. Distances are meters, frequency kHz.
struct ChannelParams {
    double a0_db = 0.0;     ///< reference attenuation
    double zeta = 1.5;      ///< spreading factor: 1 cylindrical, 2 spherical
    double freq_khz = 10.0; ///< carrier frequency

    void validate() const
    {
        detail::require(std::isfinite(freq_khz) && freq_khz > 0.0, "channel: freq_khz must be > 0");
        detail::require(zeta >= 1.0 && zeta <= 2.0, "channel: zeta must lie in [1, 2]");
        detail::require(std::isfinite(a0_db) && a0_db >= 0.0, "channel: a0_db must be >= 0");
    }
};

/// Thorp's seawater absorption coefficient in dB/km, f in kHz.
inline double thorp_absorption(double freq_khz)
{
    if (!(freq_khz > 0.0) || !std::isfinite(freq_khz))
        throw DomainError("thorp_absorption: frequency must be a positive finite kHz value");
    const double f2 = freq_khz * freq_khz;
    return 0.11 * f2 / (1.0 + f2) + 44.0 * f2 / (4100.0 + f2) + 2.75e-4 * f2 + 0.003;
}

/// Urick path loss A0 * a(f)^d * d^zeta expressed in dB:
/// a0 + 10 zeta log10(d) + alpha(f) d/1000.
inline double attenuation_db(const ChannelParams& params, double distance_m)
{
    params.validate();
    if (!(distance_m > 0.0) || !std::isfinite(distance_m))
        throw DomainError("attenuation_db: distance must be a positive finite number of meters");
    return params.a0_db + 10.0 * params.zeta * std::log10(distance_m) +
           thorp_absorption(params.freq_khz) * (distance_m / 1000.0);
}

/// The path loss on the requested scale; linear is 10^(dB/10).
inline double attenuation(const ChannelParams& params, double distance_m, AttenuationScale scale)
{
    const double db = attenuation_db(params, distance_m);
    return scale == AttenuationScale::db ? db : std::pow(10.0, db / 10.0);
}

} // namespace aquaplan::channel
