#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "turbsim/atmosphere.hpp"

namespace turbsim::config {

/// Flat key=value configuration with [section] headers flattened into
/// "section.key".  Values are untyped strings until queried.  Lines starting
/// with '#' are comments.
class RunConfig {
public:
    static RunConfig parse_text(const std::string& text);
    static RunConfig load(const std::string& path);

    bool has(const std::string& key) const { return kv_.count(key) != 0; }
    std::string get(const std::string& key, const std::string& fallback = "") const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    uint64_t get_u64(const std::string& key, uint64_t fallback) const;
    void set(const std::string& key, const std::string& value) { kv_[key] = value; }

    /// Canonical text form (sorted keys) and its FNV-1a hash, embedded into
    /// every output so verify can refuse mismatched inputs.
    std::string canonical_text() const;
    std::string hash_hex() const;

    /// Optical section -> OpticalConfig.  Recognized keys (units in meters):
    /// optics.wavelength, optics.aperture, optics.path_length, optics.cn2,
    /// optics.profile = constant|hufnagel_valley|slcd, optics.wave =
    /// plane|spherical, grid.n, grid.dx.
    atmosphere::OpticalConfig optical() const;

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

}  // namespace turbsim::config
