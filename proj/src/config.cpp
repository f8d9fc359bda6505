#include "turbsim/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "turbsim/rng.hpp"

namespace turbsim::config {

namespace {

std::string trim(const std::string& s) {
    const size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig RunConfig::parse_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key=value, got: " + line);
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!section.empty()) key = section + "." + key;
        cfg.kv_[key] = value;
    }
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_text(ss.str());
}

std::string RunConfig::get(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (...) {
        throw std::invalid_argument("config: key '" + key + "' is not a number: " + it->second);
    }
}

int RunConfig::get_int(const std::string& key, int fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    return static_cast<int>(std::stol(it->second));
}

uint64_t RunConfig::get_u64(const std::string& key, uint64_t fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    return std::stoull(it->second);
}

std::string RunConfig::canonical_text() const {
    std::string out;
    for (const auto& [k, v] : kv_) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

std::string RunConfig::hash_hex() const {
    const uint64_t h = RandomStream::fnv1a(canonical_text());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

atmosphere::OpticalConfig RunConfig::optical() const {
    atmosphere::OpticalConfig cfg;
    cfg.wavelength = get_double("optics.wavelength", cfg.wavelength);
    cfg.aperture_diameter = get_double("optics.aperture", cfg.aperture_diameter);
    cfg.path_length = get_double("optics.path_length", cfg.path_length);
    const std::string profile = get("optics.profile", "constant");
    if (profile == "constant") {
        cfg.profile = atmosphere::Cn2Profile::constant(get_double("optics.cn2", 1e-15));
    } else if (profile == "hufnagel_valley") {
        cfg.profile = atmosphere::Cn2Profile::hufnagel_valley(
            get_double("optics.hv_a", 1.7e-14), get_double("optics.hv_v", 21.0));
    } else if (profile == "slcd") {
        cfg.profile = atmosphere::Cn2Profile::slcd();
    } else {
        throw std::invalid_argument("config: unknown optics.profile: " + profile);
    }
    const std::string wave = get("optics.wave", "spherical");
    cfg.wave_kind = wave == "plane" ? atmosphere::OpticalConfig::WaveKind::Plane
                                    : atmosphere::OpticalConfig::WaveKind::Spherical;
    cfg.grid_n = get_int("grid.n", cfg.grid_n);
    cfg.grid_dx = get_double("grid.dx", cfg.grid_dx);
    return cfg;
}

}  // namespace turbsim::config
