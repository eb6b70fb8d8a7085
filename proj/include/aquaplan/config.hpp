#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

namespace aquaplan::config {

/// Bad flags, unreadable config files, malformed values. The CLI maps it to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Key {
    const char* name; ///< "section.key"
    const char* value;
    const char* doc;
};

/// Every recognised key with its default. Sections are module names.
inline const std::vector<Key>& schema()
{
    static const std::vector<Key> keys{
        {"channel.a0_db", "0", "reference loss a0 in dB"},
        {"channel.zeta", "1.5", "spreading factor"},
        {"channel.freq_khz", "10", "carrier frequency in kHz"},
        {"channel.scale", "db", "attenuation scale: db or linear"},
        {"channel.max_distance_m", "5000", "largest distance in the channel sweep"},
        {"channel.points", "100", "distances in the channel sweep"},

        {"sensing.k", "2", "active sensors K"},
        {"sensing.spacing_m", "5", "spacing between consecutive sensors"},
        {"sensing.boundary_m", "5", "reference boundary distance"},
        {"sensing.efficiency", "0.9", "per-sensor detection efficiency"},
        {"sensing.gamma_wake", "0.9", "wake-up probability"},
        {"sensing.gamma_cap", "1", "ceiling on the wake-up probability"},
        {"sensing.delta", "0.6", "detection kernel decay"},
        {"sensing.k_min", "1", "smallest count searched by P1"},
        {"sensing.k_max", "50", "largest count searched by P1"},
        {"sensing.d_min", "1", "nearest sensor distance for P1 layouts"},
        {"sensing.d_max", "10", "farthest sensor distance for P1 layouts"},

        {"aoi.lambda", "0.8", "arrival rate"},
        {"aoi.mu", "1", "service rate"},
        {"aoi.M", "5", "AoI threshold"},
        {"aoi.detect_k", "1", "sensor index k used by r"},
        {"aoi.detect_distance_m", "1000", "distance of that sensor"},
        {"aoi.points", "100", "rates in the aoi sweep"},

        {"surrogate.kind", "gp", "gp or mlp"},
        {"surrogate.noise_ratio", "1e-6", "GP noise variance relative to the target variance"},
        {"surrogate.mlp_epochs", "200", "MLP training epochs per fit"},

        {"acquisition.kind", "aei", "ei or aei"},
        {"acquisition.omega", "0.1", "recalibration gain"},
        {"acquisition.gate_ratio", "0.05", "discrepancy gate relative to the initial threshold"},

        {"optimizer.n_init", "10", "initial design size"},
        {"optimizer.batch", "100", "candidates per iteration"},
        {"optimizer.iters", "40", "BO iterations"},
        {"optimizer.lambda_min", "0.05", "lower rate bound"},
        {"optimizer.lambda_max", "0.95", "upper rate bound"},
        {"optimizer.k_min", "1", "smallest sensor count in placement"},
        {"optimizer.k_max", "50", "largest sensor count in placement"},
        {"optimizer.spacing_min", "1", "smallest spacing in placement"},
        {"optimizer.spacing_max", "10", "largest spacing in placement"},
        {"optimizer.drift", "false", "re-evaluate the incumbent periodically"},
        {"optimizer.drift_period", "5", "iterations between re-evaluations"},
        {"optimizer.drift_tolerance", "0.05", "relative change that resets the threshold"},
        {"optimizer.compare_seeds", "10", "seeds in the acquisition comparison"},
        {"optimizer.mesh", "100", "mesh points per axis for the acquisition surface"},
        {"optimizer.grid", "50", "grid points per axis for the exhaustive placement search"},

        {"simkit.mode", "delay", "delay or aoi"},
        {"simkit.subnets", "3", "subnets S"},
        {"simkit.nodes_per_subnet", "50", "nodes per subnet"},
        {"simkit.sound_speed_mps", "1500", "speed of sound"},
        {"simkit.horizon", "2000", "simulated time for the delay comparison"},
        {"simkit.wake_period", "1", "duty-cycle length"},
        {"simkit.fixed_k", "2", "sensors in the fixed baseline"},
        {"simkit.fixed_spacing_m", "5", "spacing in the fixed baseline"},
        {"simkit.strategies", "optimized,random,fixed", "comma-separated strategies"},
        {"simkit.aoi_departures", "100000", "post-warm-up departures for the AoI simulation"},
        {"simkit.path_points", "2000", "sawtooth vertices written by the AoI simulation"},

        {"cli.seed", "1", "master seed"},
    };
    return keys;
}

/// Resolved configuration: every schema key mapped to its text value.
class RunConfig {
public:
    RunConfig()
    {
        for (const auto& k : schema())
            values_[k.name] = k.value;
    }

    static bool known(const std::string& key) { return defaults().count(key) != 0; }

    void set(const std::string& key, std::string value)
    {
        if (!known(key))
            throw UsageError("unknown config key '" + key + "'");
        values_[key] = std::move(value);
    }

    const std::string& text(const std::string& key) const
    {
        const auto it = values_.find(key);
        if (it == values_.end())
            throw UsageError("unknown config key '" + key + "'");
        return it->second;
    }

    double real(const std::string& key) const
    {
        const auto& s = text(key);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
            throw UsageError("config key '" + key + "' expects a number, got '" + s + "'");
        return v;
    }

    std::uint64_t count(const std::string& key) const
    {
        const auto& s = text(key);
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec == std::errc{} && ptr == s.data() + s.size())
            return v;
        // Accept integral values written in floating-point form, e.g. 1e5.
        const double d = real(key);
        if (d < 0.0 || d != std::floor(d) || d > 1.8e19)
            throw UsageError("config key '" + key + "' expects a nonnegative integer, got '" + s + "'");
        return static_cast<std::uint64_t>(d);
    }

    bool flag(const std::string& key) const
    {
        const auto& s = text(key);
        if (s == "true" || s == "1" || s == "yes" || s == "on")
            return true;
        if (s == "false" || s == "0" || s == "no" || s == "off")
            return false;
        throw UsageError("config key '" + key + "' expects true or false, got '" + s + "'");
    }

    std::vector<std::string> list(const std::string& key) const
    {
        std::vector<std::string> out;
        std::string_view s = text(key);
        while (!s.empty()) {
            const auto comma = s.find(',');
            auto item = s.substr(0, comma);
            while (!item.empty() && item.front() == ' ')
                item.remove_prefix(1);
            while (!item.empty() && item.back() == ' ')
                item.remove_suffix(1);
            if (!item.empty())
                out.emplace_back(item);
            if (comma == std::string_view::npos)
                break;
            s.remove_prefix(comma + 1);
        }
        return out;
    }

    const std::map<std::string, std::string>& values() const { return values_; }

    /// Reads an INI file ([section] then key = value) over the current values.
    void load_ini(const std::string& path)
    {
        boost::property_tree::ptree tree;
        try {
            boost::property_tree::ini_parser::read_ini(path, tree);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw UsageError("cannot read config '" + path + "': " + e.message());
        }
        for (const auto& [section, body] : tree) {
            if (body.empty())
                throw UsageError("config '" + path + "': key '" + section + "' is outside any section");
            for (const auto& [key, value] : body)
                set(section + "." + key, value.data());
        }
    }

    /// {"section": {"key": "value"}}
    nlohmann::json to_json() const
    {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [k, v] : values_) {
            const auto dot = k.find('.');
            j[k.substr(0, dot)][k.substr(dot + 1)] = v;
        }
        return j;
    }

    static RunConfig from_json(const nlohmann::json& j)
    {
        RunConfig c;
        if (!j.is_object())
            throw UsageError("manifest config must be an object");
        for (const auto& [section, body] : j.items()) {
            if (!body.is_object())
                throw UsageError("manifest config section '" + section + "' must be an object");
            for (const auto& [key, value] : body.items()) {
                if (!value.is_string())
                    throw UsageError("manifest config value '" + section + "." + key + "' must be a string");
                c.set(section + "." + key, value.get<std::string>());
            }
        }
        return c;
    }

private:
    static const std::map<std::string, std::string>& defaults()
    {
        static const auto m = [] {
            std::map<std::string, std::string> d;
            for (const auto& k : schema())
                d[k.name] = k.value;
            return d;
        }();
        return m;
    }

    std::map<std::string, std::string> values_;
};

} // namespace aquaplan::config
