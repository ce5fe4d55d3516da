#include "satrach/channel.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace satrach {

int TdlProfile::max_delay() const {
    int m = 0;
    for (const auto& t : taps) m = std::max(m, t.delay_samples);
    return m;
}

void TdlProfile::validate(int n_cs, int tau_e_max) const {
    if (taps.empty()) throw std::invalid_argument("tdl profile: no taps");
    double total = 0.0;
    int prev = -1;
    for (const auto& t : taps) {
        if (t.delay_samples <= prev)
            throw std::invalid_argument("tdl profile: tap delays must be strictly increasing");
        if (t.power < 0.0) throw std::invalid_argument("tdl profile: negative tap power");
        prev = t.delay_samples;
        total += t.power;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("tdl profile: tap powers must sum to 1");
    if (max_delay() + 2 * tau_e_max >= n_cs)
        throw std::invalid_argument(
            "tdl profile: delay spread plus timing-error budget exceeds the cyclic shift zone");
}

TdlProfile TdlProfile::nlos_default() {
    return TdlProfile{"nlos", {{0, 0.65}, {1, 0.25}, {2, 0.10}}, false};
}

TdlProfile TdlProfile::los_default() {
    return TdlProfile{"los", {{0, 0.90}, {1, 0.07}, {2, 0.03}}, true};
}

// key = value lines: name, los, delays (comma list, samples), powers (comma
// list, linear). '#' starts a comment.
TdlProfile TdlProfile::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open channel profile: " + path);

    TdlProfile p;
    p.taps.clear();
    std::vector<int> delays;
    std::vector<double> powers;

    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "name") {
            p.name = val;
        } else if (key == "los") {
            p.los = (val == "true" || val == "1" || val == "yes");
        } else if (key == "delays" || key == "powers") {
            std::stringstream ss(val);
            std::string item;
            while (std::getline(ss, item, ',')) {
                if (key == "delays")
                    delays.push_back(std::stoi(item));
                else
                    powers.push_back(std::stod(item));
            }
        } else {
            throw std::runtime_error("channel profile: unknown key '" + key + "' in " + path);
        }
    }
    if (delays.size() != powers.size() || delays.empty())
        throw std::runtime_error("channel profile: delays/powers missing or mismatched in " + path);
    for (std::size_t i = 0; i < delays.size(); ++i) p.taps.push_back({delays[i], powers[i]});
    return p;
}

TdlProfile TdlProfile::resolve(const std::string& name_or_path) {
    if (name_or_path == "nlos") return nlos_default();
    if (name_or_path == "los") return los_default();
    return from_file(name_or_path);
}

ChannelRealization sample_channel(const TdlProfile& profile, int n_ant, Rng& rng) {
    if (n_ant < 1) throw std::invalid_argument("sample_channel: n_ant must be >= 1");
    ChannelRealization ch;
    ch.delays.reserve(profile.taps.size());
    for (const auto& t : profile.taps) ch.delays.push_back(t.delay_samples);
    ch.gains.assign(n_ant, {});
    for (int j = 0; j < n_ant; ++j) {
        auto& row = ch.gains[j];
        row.reserve(profile.taps.size());
        for (std::size_t l = 0; l < profile.taps.size(); ++l) {
            const double p = profile.taps[l].power;
            if (profile.los && l == 0) {
                // Deterministic magnitude, uniform phase.
                const double phi = 6.283185307179586 * rng.uniform();
                row.emplace_back(std::sqrt(p) * std::cos(phi), std::sqrt(p) * std::sin(phi));
            } else {
                row.push_back(rng.complex_gaussian(p));
            }
        }
    }
    return ch;
}

int sample_timing_residual(int tau_e_max, Rng& rng) {
    if (tau_e_max < 0) throw std::invalid_argument("tau_e_max must be >= 0");
    if (tau_e_max == 0) return 0;
    return static_cast<int>(rng.uniform_int(-tau_e_max, tau_e_max));
}

double sample_propagation_delay(const GeometryModel& g, Rng& rng) {
    if (g.owd_max_ms < g.owd_min_ms)
        throw std::invalid_argument("geometry: owd_max_ms < owd_min_ms");
    return rng.uniform(g.owd_min_ms, g.owd_max_ms);
}

}  // namespace satrach
