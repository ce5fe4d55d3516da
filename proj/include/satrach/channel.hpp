#pragma once

#include <complex>
#include <string>
#include <vector>

#include "satrach/rng.hpp"

namespace satrach {

struct TdlTap {
    int delay_samples = 0;
    double power = 1.0;  // linear fraction of total average power
};

// Tapped-delay-line profile. `los` marks the first tap as deterministic
// magnitude (Rician-style); all other taps are Rayleigh.
struct TdlProfile {
    std::string name = "nlos";
    std::vector<TdlTap> taps = {{0, 0.65}, {1, 0.25}, {2, 0.10}};
    bool los = false;

    int max_delay() const;

    // Throws if powers do not sum to 1, delays are not strictly increasing,
    // or the delay spread plus the two-sided timing-error budget does not fit
    // inside one cyclic-shift zone.
    void validate(int n_cs, int tau_e_max) const;

    static TdlProfile nlos_default();
    static TdlProfile los_default();
    static TdlProfile from_file(const std::string& path);
    // "nlos" / "los" by role, anything else is treated as a file path.
    static TdlProfile resolve(const std::string& name_or_path);
};

// One multipath draw. Tap delays are shared across antennas; gains are
// independent per antenna.
struct ChannelRealization {
    std::vector<std::vector<std::complex<double>>> gains;  // n_ant x L
    std::vector<int> delays;                               // L
};

ChannelRealization sample_channel(const TdlProfile& profile, int n_ant, Rng& rng);

// Uniform signed integer in [-tau_e_max, tau_e_max].
int sample_timing_residual(int tau_e_max, Rng& rng);

struct GeometryModel {
    double owd_min_ms = 2.0;
    double owd_max_ms = 6.44;
};

// One-way propagation delay in ms, fixed per user for a whole procedure.
double sample_propagation_delay(const GeometryModel& g, Rng& rng);

}  // namespace satrach
