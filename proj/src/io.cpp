#include "turbsim/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace turbsim::io {

namespace {

constexpr char kMagic[4] = {'T', 'S', 'I', 'M'};
constexpr uint8_t kDtypeF64 = 1;

template <typename T>
void put_le(std::string& out, T v) {
    for (size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const char* p) {
    T v = 0;
    for (size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<T>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}

void put_f64(std::string& out, double d) {
    uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_le(out, bits);
}

double get_f64(const char* p) {
    const uint64_t bits = get_le<uint64_t>(p);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

}  // namespace

void write_array(const std::string& path, const ArrayContainer& arr) {
    if (arr.data.size() != arr.element_count())
        throw std::invalid_argument("write_array: payload length must equal product(dims)");
    std::string buf;
    buf.append(kMagic, 4);
    put_le<uint16_t>(buf, ArrayContainer::kFormatVersion);
    buf.push_back(static_cast<char>(kDtypeF64));
    buf.push_back(static_cast<char>(arr.dims.size()));
    for (uint64_t d : arr.dims) put_le<uint64_t>(buf, d);
    for (double v : arr.data) put_f64(buf, v);
    std::string meta;
    for (const auto& [k, v] : arr.metadata) {
        meta += k;
        meta += '=';
        meta += v;
        meta += '\n';
    }
    put_le<uint32_t>(buf, static_cast<uint32_t>(meta.size()));
    buf += meta;

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_array: cannot open " + path);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) throw std::runtime_error("write_array: write failed for " + path);
}

ArrayContainer read_array(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_array: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (buf.size() < 8 || std::memcmp(buf.data(), kMagic, 4) != 0)
        throw std::runtime_error("read_array: bad magic in " + path);
    size_t off = 4;
    const uint16_t version = get_le<uint16_t>(buf.data() + off);
    off += 2;
    if (version > ArrayContainer::kFormatVersion)
        throw std::runtime_error("read_array: unsupported format version");
    const uint8_t dtype = static_cast<uint8_t>(buf[off++]);
    if (dtype != kDtypeF64) throw std::runtime_error("read_array: unsupported dtype");
    const uint8_t ndim = static_cast<uint8_t>(buf[off++]);
    ArrayContainer arr;
    for (int i = 0; i < ndim; ++i) {
        arr.dims.push_back(get_le<uint64_t>(buf.data() + off));
        off += 8;
    }
    const uint64_t count = arr.element_count();
    if (off + count * 8 + 4 > buf.size()) throw std::runtime_error("read_array: truncated payload");
    arr.data.resize(count);
    for (uint64_t i = 0; i < count; ++i) {
        arr.data[i] = get_f64(buf.data() + off);
        off += 8;
    }
    const uint32_t meta_len = get_le<uint32_t>(buf.data() + off);
    off += 4;
    if (off + meta_len > buf.size()) throw std::runtime_error("read_array: truncated metadata");
    std::istringstream meta(buf.substr(off, meta_len));
    std::string line;
    while (std::getline(meta, line)) {
        const size_t eq = line.find('=');
        if (eq != std::string::npos) arr.metadata[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return arr;
}

ArrayContainer from_image(const Image& im) {
    ArrayContainer arr;
    arr.dims = {static_cast<uint64_t>(im.height()), static_cast<uint64_t>(im.width())};
    arr.data.assign(im.data(), im.data() + im.size());
    return arr;
}

Image to_image(const ArrayContainer& arr) {
    if (arr.dims.size() != 2) throw std::runtime_error("to_image: expected a 2-D array");
    Image im(static_cast<int>(arr.dims[0]), static_cast<int>(arr.dims[1]));
    std::copy(arr.data.begin(), arr.data.end(), im.data());
    return im;
}

void write_pgm16(const std::string& path, const Image& im, double lo, double hi) {
    if (hi <= lo) {
        lo = im.data()[0];
        hi = im.data()[0];
        for (size_t i = 0; i < im.size(); ++i) {
            lo = std::min(lo, im.data()[i]);
            hi = std::max(hi, im.data()[i]);
        }
        if (hi <= lo) hi = lo + 1.0;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_pgm16: cannot open " + path);
    f << "P5\n" << im.width() << " " << im.height() << "\n65535\n";
    const double scale = 65535.0 / (hi - lo);
    for (int r = 0; r < im.height(); ++r)
        for (int c = 0; c < im.width(); ++c) {
            double v = (im(r, c) - lo) * scale;
            v = std::clamp(v, 0.0, 65535.0);
            const uint16_t q = static_cast<uint16_t>(std::lround(v));
            f.put(static_cast<char>(q >> 8));  // big-endian per the format
            f.put(static_cast<char>(q & 0xff));
        }
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_csv: cannot open " + path);
    for (size_t i = 0; i < columns.size(); ++i) f << (i ? "," : "") << columns[i];
    f << "\r\n";
    f.precision(12);
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << row[i];
        f << "\r\n";
    }
}

}  // namespace turbsim::io
