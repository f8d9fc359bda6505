#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "turbsim/grid.hpp"

namespace turbsim::io {

/// Binary array container ("TSIM"): magic, format version u16, dtype tag,
/// dimension count, little-endian u64 dimensions, float64 payload, trailing
/// length-prefixed UTF-8 key=value metadata block.  Bit-exact round trips.
struct ArrayContainer {
    std::vector<uint64_t> dims;
    std::vector<double> data;
    std::map<std::string, std::string> metadata;

    static constexpr uint16_t kFormatVersion = 1;

    uint64_t element_count() const {
        uint64_t n = 1;
        for (uint64_t d : dims) n *= d;
        return n;
    }
};

void write_array(const std::string& path, const ArrayContainer& arr);
ArrayContainer read_array(const std::string& path);

ArrayContainer from_image(const Image& im);
Image to_image(const ArrayContainer& arr);

/// 16-bit binary PGM (P5), values scaled from [lo, hi] (hi <= lo = auto range).
void write_pgm16(const std::string& path, const Image& im, double lo = 0.0, double hi = -1.0);

/// RFC-4180-subset CSV with '.' decimals: header row then one row per index.
void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

}  // namespace turbsim::io
