#include "turbsim/serialize.hpp"

#include <filesystem>
#include <sstream>

namespace turbsim::serialize {

namespace {

std::string join_doubles(const std::vector<double>& v) {
    std::ostringstream os;
    os.precision(17);
    for (size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
    return os.str();
}

std::vector<double> split_doubles(const std::string& s) {
    std::istringstream is(s);
    std::vector<double> out;
    double v;
    while (is >> v) out.push_back(v);
    return out;
}

}  // namespace

void save_basis(const std::string& path, const psfbasis::PsfBasis& basis) {
    io::ArrayContainer arr;
    const int k = basis.kernel_size;
    arr.dims = {static_cast<uint64_t>(1 + basis.n_components), static_cast<uint64_t>(k),
                static_cast<uint64_t>(k)};
    arr.data.reserve(arr.element_count());
    arr.data.insert(arr.data.end(), basis.mean.data(), basis.mean.data() + k * k);
    for (const auto& comp : basis.components)
        arr.data.insert(arr.data.end(), comp.data(), comp.data() + k * k);
    arr.metadata["kind"] = "psf_basis";
    arr.metadata["version"] = "1";
    arr.metadata["sigma"] = join_doubles(basis.sigma);
    arr.metadata["n_modes"] = std::to_string(basis.n_modes);
    arr.metadata["dr0_min"] = std::to_string(basis.dr0_min);
    arr.metadata["dr0_max"] = std::to_string(basis.dr0_max);
    arr.metadata["sample_count"] = std::to_string(basis.sample_count);
    io::write_array(path, arr);
}

psfbasis::PsfBasis load_basis(const std::string& path) {
    const io::ArrayContainer arr = io::read_array(path);
    if (arr.metadata.count("kind") == 0 || arr.metadata.at("kind") != "psf_basis")
        throw std::runtime_error("load_basis: not a psf_basis container: " + path);
    psfbasis::PsfBasis basis;
    const int k = static_cast<int>(arr.dims[1]);
    basis.kernel_size = k;
    basis.n_components = static_cast<int>(arr.dims[0]) - 1;
    basis.mean = Image(k, k);
    std::copy(arr.data.begin(), arr.data.begin() + k * k, basis.mean.data());
    basis.components.resize(basis.n_components);
    for (int m = 0; m < basis.n_components; ++m) {
        basis.components[m] = Image(k, k);
        std::copy(arr.data.begin() + static_cast<long>(1 + m) * k * k,
                  arr.data.begin() + static_cast<long>(2 + m) * k * k,
                  basis.components[m].data());
    }
    basis.sigma = split_doubles(arr.metadata.at("sigma"));
    basis.n_modes = std::stoi(arr.metadata.at("n_modes"));
    basis.dr0_min = std::stod(arr.metadata.at("dr0_min"));
    basis.dr0_max = std::stod(arr.metadata.at("dr0_max"));
    basis.sample_count = std::stoi(arr.metadata.at("sample_count"));
    return basis;
}

void save_p2s(const std::string& path, const psfbasis::P2SModel& model) {
    io::ArrayContainer arr;
    std::vector<double>& d = arr.data;
    for (size_t l = 0; l < model.w.size(); ++l) {
        d.insert(d.end(), model.w[l].begin(), model.w[l].end());
        d.insert(d.end(), model.b[l].begin(), model.b[l].end());
    }
    d.insert(d.end(), model.in_mu.begin(), model.in_mu.end());
    d.insert(d.end(), model.in_sd.begin(), model.in_sd.end());
    d.insert(d.end(), model.out_mu.begin(), model.out_mu.end());
    d.insert(d.end(), model.out_sd.begin(), model.out_sd.end());
    arr.dims = {d.size()};
    arr.metadata["kind"] = "p2s_model";
    arr.metadata["version"] = "1";
    arr.metadata["in_dim"] = std::to_string(model.in_dim);
    arr.metadata["out_dim"] = std::to_string(model.out_dim);
    arr.metadata["hidden1"] = std::to_string(model.widths[0]);
    arr.metadata["hidden2"] = std::to_string(model.widths[1]);
    arr.metadata["tanh"] = model.tanh_hidden ? "1" : "0";
    arr.metadata["validation_rel_error"] = std::to_string(model.validation_rel_error);
    io::write_array(path, arr);
}

psfbasis::P2SModel load_p2s(const std::string& path) {
    const io::ArrayContainer arr = io::read_array(path);
    if (arr.metadata.count("kind") == 0 || arr.metadata.at("kind") != "p2s_model")
        throw std::runtime_error("load_p2s: not a p2s_model container: " + path);
    psfbasis::P2SModel model;
    model.in_dim = std::stoi(arr.metadata.at("in_dim"));
    model.out_dim = std::stoi(arr.metadata.at("out_dim"));
    model.widths = {std::stoi(arr.metadata.at("hidden1")), std::stoi(arr.metadata.at("hidden2"))};
    model.tanh_hidden = arr.metadata.at("tanh") == "1";
    model.validation_rel_error = std::stod(arr.metadata.at("validation_rel_error"));
    const std::vector<int> sizes = {model.in_dim, model.widths[0], model.widths[1], model.out_dim};
    size_t off = 0;
    auto take = [&](size_t count) {
        std::vector<double> out(arr.data.begin() + off, arr.data.begin() + off + count);
        off += count;
        return out;
    };
    model.w.resize(3);
    model.b.resize(3);
    for (int l = 0; l < 3; ++l) {
        model.w[l] = take(static_cast<size_t>(sizes[l + 1]) * sizes[l]);
        model.b[l] = take(sizes[l + 1]);
    }
    model.in_mu = take(model.in_dim);
    model.in_sd = take(model.in_dim);
    model.out_mu = take(model.out_dim);
    model.out_sd = take(model.out_dim);
    return model;
}

void save_kernel(const std::string& path, const zfield::CorrelationKernel& kernel) {
    io::ArrayContainer arr;
    arr.dims = {static_cast<uint64_t>(kernel.n_radial()), static_cast<uint64_t>(kernel.n_angular())};
    arr.data = kernel.values();
    arr.metadata["kind"] = "correlation_kernel";
    arr.metadata["version"] = "1";
    arr.metadata["mode"] = std::to_string(kernel.mode());
    std::ostringstream os;
    os.precision(17);
    os << kernel.s_max();
    arr.metadata["s_max"] = os.str();
    io::write_array(path, arr);
}

zfield::CorrelationKernel load_kernel(const std::string& path) {
    const io::ArrayContainer arr = io::read_array(path);
    if (arr.metadata.count("kind") == 0 || arr.metadata.at("kind") != "correlation_kernel")
        throw std::runtime_error("load_kernel: not a kernel container: " + path);
    return zfield::CorrelationKernel::from_table(
        std::stoi(arr.metadata.at("mode")), std::stod(arr.metadata.at("s_max")),
        static_cast<int>(arr.dims[0]), static_cast<int>(arr.dims[1]), arr.data);
}

zfield::CorrelationKernel cached_kernel(const std::string& dir, int mode, double s_max,
                                        int n_radial, int n_angular,
                                        const zfield::CorrOptions& opt) {
    std::filesystem::create_directories(dir);
    std::ostringstream name;
    name << "kernel_m" << mode << "_s" << s_max << "_r" << n_radial << "_a" << n_angular << "_q"
         << (opt.method == zfield::QuadratureMethod::GridFft ? opt.grid_n : -opt.tensor_radial)
         << ".tsim";
    const std::string path = dir + "/" + name.str();
    if (std::filesystem::exists(path)) return load_kernel(path);
    zfield::CorrelationKernel k =
        mode <= 3 ? zfield::CorrelationKernel::tilt(mode, s_max, n_radial)
                  : zfield::CorrelationKernel::from_quadrature(mode, s_max, n_radial, n_angular, opt);
    save_kernel(path, k);
    return k;
}

}  // namespace turbsim::serialize
