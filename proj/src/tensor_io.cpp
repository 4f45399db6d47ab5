#include "fbev/tensor_io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fbev {

static constexpr char kMagic[4] = {'F', 'B', 'V', 'T'};
static constexpr uint16_t kVersion = 1;

size_t dtype_size(Dtype d) {
    switch (d) {
        case Dtype::F32: return 4;
        case Dtype::F64: return 8;
        case Dtype::U8: return 1;
        case Dtype::U16: return 2;
        case Dtype::I32: return 4;
    }
    throw DataError("unknown dtype code");
}

size_t Tensor::element_count() const {
    size_t n = 1;
    for (uint32_t d : dims) n *= d;
    return dims.empty() ? 0 : n;
}

void Tensor::validate() const {
    if (dims.empty() || dims.size() > 255) throw DataError("tensor: bad rank");
    if (raw.size() != element_count() * dtype_size(dtype))
        throw DataError("tensor: payload length does not match dims");
}

template <typename T>
static std::vector<T> reinterpret_payload(const Tensor& t) {
    std::vector<T> out(t.element_count());
    std::memcpy(out.data(), t.raw.data(), t.raw.size());
    return out;
}

std::vector<double> Tensor::as_f64() const {
    validate();
    switch (dtype) {
        case Dtype::F64: return reinterpret_payload<double>(*this);
        case Dtype::F32: {
            auto v = reinterpret_payload<float>(*this);
            return {v.begin(), v.end()};
        }
        case Dtype::U8: return {raw.begin(), raw.end()};
        case Dtype::U16: {
            auto v = reinterpret_payload<uint16_t>(*this);
            return {v.begin(), v.end()};
        }
        case Dtype::I32: {
            auto v = reinterpret_payload<int32_t>(*this);
            return {v.begin(), v.end()};
        }
    }
    throw DataError("unknown dtype code");
}

std::vector<int32_t> Tensor::as_i32() const {
    validate();
    switch (dtype) {
        case Dtype::I32: return reinterpret_payload<int32_t>(*this);
        case Dtype::U8: return {raw.begin(), raw.end()};
        case Dtype::U16: {
            auto v = reinterpret_payload<uint16_t>(*this);
            return {v.begin(), v.end()};
        }
        default: throw DataError("tensor: not an integer dtype");
    }
}

template <typename T>
static Tensor build(Dtype dt, std::vector<uint32_t> dims, const T* data, size_t n) {
    Tensor t;
    t.dtype = dt;
    t.dims = std::move(dims);
    t.raw.resize(n * sizeof(T));
    std::memcpy(t.raw.data(), data, t.raw.size());
    t.validate();
    return t;
}

Tensor tensor_f64(std::vector<uint32_t> dims, const std::vector<double>& v) {
    return build(Dtype::F64, std::move(dims), v.data(), v.size());
}
Tensor tensor_f32(std::vector<uint32_t> dims, const std::vector<double>& v) {
    std::vector<float> f(v.begin(), v.end());
    return build(Dtype::F32, std::move(dims), f.data(), f.size());
}
Tensor tensor_i32(std::vector<uint32_t> dims, const std::vector<int32_t>& v) {
    return build(Dtype::I32, std::move(dims), v.data(), v.size());
}
Tensor tensor_u8(std::vector<uint32_t> dims, const std::vector<uint8_t>& v) {
    return build(Dtype::U8, std::move(dims), v.data(), v.size());
}
Tensor tensor_u16(std::vector<uint32_t> dims, const std::vector<uint16_t>& v) {
    return build(Dtype::U16, std::move(dims), v.data(), v.size());
}

Tensor tensor_from_grid(const Grid& g) {
    std::vector<double> v(static_cast<size_t>(g.size()));
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j)
            v[static_cast<size_t>(i * g.cols() + j)] = g(i, j);
    return tensor_f64({static_cast<uint32_t>(g.rows()), static_cast<uint32_t>(g.cols())}, v);
}

Tensor tensor_from_grid(const GridI& g) {
    std::vector<int32_t> v(static_cast<size_t>(g.size()));
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j)
            v[static_cast<size_t>(i * g.cols() + j)] = g(i, j);
    return tensor_i32({static_cast<uint32_t>(g.rows()), static_cast<uint32_t>(g.cols())}, v);
}

Tensor tensor_from_channels(const ChannelGrid& channels) {
    if (channels.empty()) throw DataError("tensor_from_channels: empty");
    const auto nx = channels[0].rows();
    const auto ny = channels[0].cols();
    std::vector<double> v;
    v.reserve(channels.size() * static_cast<size_t>(nx * ny));
    for (const auto& g : channels)
        for (Eigen::Index i = 0; i < nx; ++i)
            for (Eigen::Index j = 0; j < ny; ++j) v.push_back(g(i, j));
    return tensor_f64({static_cast<uint32_t>(channels.size()), static_cast<uint32_t>(nx),
                       static_cast<uint32_t>(ny)},
                      v);
}

Tensor tensor_from_stack(const CameraStack& stack) {
    if (stack.empty() || stack[0].empty()) throw DataError("tensor_from_stack: empty");
    const auto nx = stack[0][0].rows();
    const auto ny = stack[0][0].cols();
    std::vector<double> v;
    for (const auto& cam : stack)
        for (const auto& g : cam)
            for (Eigen::Index i = 0; i < nx; ++i)
                for (Eigen::Index j = 0; j < ny; ++j) v.push_back(g(i, j));
    return tensor_f64({static_cast<uint32_t>(stack.size()), static_cast<uint32_t>(stack[0].size()),
                       static_cast<uint32_t>(nx), static_cast<uint32_t>(ny)},
                      v);
}

Grid grid_from_tensor(const Tensor& t) {
    if (t.dims.size() != 2) throw DataError("grid_from_tensor: rank must be 2");
    const auto v = t.as_f64();
    Grid g(t.dims[0], t.dims[1]);
    for (uint32_t i = 0; i < t.dims[0]; ++i)
        for (uint32_t j = 0; j < t.dims[1]; ++j) g(i, j) = v[static_cast<size_t>(i) * t.dims[1] + j];
    return g;
}

GridI grid_i_from_tensor(const Tensor& t) {
    if (t.dims.size() != 2) throw DataError("grid_i_from_tensor: rank must be 2");
    const auto v = t.as_i32();
    GridI g(t.dims[0], t.dims[1]);
    for (uint32_t i = 0; i < t.dims[0]; ++i)
        for (uint32_t j = 0; j < t.dims[1]; ++j) g(i, j) = v[static_cast<size_t>(i) * t.dims[1] + j];
    return g;
}

ChannelGrid channels_from_tensor(const Tensor& t) {
    if (t.dims.size() != 3) throw DataError("channels_from_tensor: rank must be 3");
    const auto v = t.as_f64();
    ChannelGrid out;
    const size_t plane = static_cast<size_t>(t.dims[1]) * t.dims[2];
    for (uint32_t c = 0; c < t.dims[0]; ++c) {
        Grid g(t.dims[1], t.dims[2]);
        for (uint32_t i = 0; i < t.dims[1]; ++i)
            for (uint32_t j = 0; j < t.dims[2]; ++j)
                g(i, j) = v[c * plane + static_cast<size_t>(i) * t.dims[2] + j];
        out.push_back(std::move(g));
    }
    return out;
}

CameraStack stack_from_tensor(const Tensor& t) {
    if (t.dims.size() != 4) throw DataError("stack_from_tensor: rank must be 4");
    const auto v = t.as_f64();
    CameraStack out;
    const size_t plane = static_cast<size_t>(t.dims[2]) * t.dims[3];
    const size_t cam_sz = plane * t.dims[1];
    for (uint32_t k = 0; k < t.dims[0]; ++k) {
        ChannelGrid cam;
        for (uint32_t c = 0; c < t.dims[1]; ++c) {
            Grid g(t.dims[2], t.dims[3]);
            for (uint32_t i = 0; i < t.dims[2]; ++i)
                for (uint32_t j = 0; j < t.dims[3]; ++j)
                    g(i, j) = v[k * cam_sz + c * plane + static_cast<size_t>(i) * t.dims[3] + j];
            cam.push_back(std::move(g));
        }
        out.push_back(std::move(cam));
    }
    return out;
}

void atomic_write(const std::string& path, const std::string& data) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw DataError("cannot open for writing: " + tmp);
        os.write(data.data(), static_cast<std::streamsize>(data.size()));
        if (!os) throw DataError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw DataError("rename failed: " + path);
}

void save_tensor(const std::string& path, const Tensor& t) {
    t.validate();
    std::string buf;
    buf.append(kMagic, 4);
    auto put_u16 = [&](uint16_t v) {
        buf.push_back(static_cast<char>(v & 0xff));
        buf.push_back(static_cast<char>(v >> 8));
    };
    auto put_u32 = [&](uint32_t v) {
        for (int b = 0; b < 4; ++b) buf.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
    };
    put_u16(kVersion);
    buf.push_back(static_cast<char>(t.dtype));
    buf.push_back(static_cast<char>(t.dims.size()));
    for (uint32_t d : t.dims) put_u32(d);
    buf.append(reinterpret_cast<const char*>(t.raw.data()), t.raw.size());
    atomic_write(path, buf);
}

Tensor load_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open tensor file: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("bad tensor magic in " + path);
    uint8_t hdr[4];
    is.read(reinterpret_cast<char*>(hdr), 4);
    if (!is) throw DataError("truncated tensor header in " + path);
    const uint16_t version = static_cast<uint16_t>(hdr[0] | (hdr[1] << 8));
    if (version != kVersion) throw DataError("unsupported tensor version in " + path);
    Tensor t;
    t.dtype = static_cast<Dtype>(hdr[2]);
    dtype_size(t.dtype);  // rejects unknown codes
    const int rank = hdr[3];
    for (int i = 0; i < rank; ++i) {
        uint8_t d[4];
        is.read(reinterpret_cast<char*>(d), 4);
        if (!is) throw DataError("truncated dims in " + path);
        t.dims.push_back(static_cast<uint32_t>(d[0]) | (static_cast<uint32_t>(d[1]) << 8) |
                         (static_cast<uint32_t>(d[2]) << 16) | (static_cast<uint32_t>(d[3]) << 24));
    }
    t.raw.resize(t.element_count() * dtype_size(t.dtype));
    is.read(reinterpret_cast<char*>(t.raw.data()), static_cast<std::streamsize>(t.raw.size()));
    if (!is) throw DataError("truncated tensor payload in " + path);
    t.validate();
    return t;
}

void write_pgm(const std::string& path, const Grid& values) {
    std::ostringstream os;
    os << "P5\n" << values.cols() << " " << values.rows() << "\n255\n";
    std::string buf = os.str();
    for (Eigen::Index i = 0; i < values.rows(); ++i)
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            const double v = std::clamp(values(i, j), 0.0, 1.0);
            buf.push_back(static_cast<char>(std::lround(v * 255.0)));
        }
    atomic_write(path, buf);
}

void write_ppm_semantic(const std::string& path, const GridI& classes) {
    static constexpr uint8_t palette[kNumClasses][3] = {
        {0, 0, 0},       // invalid: black
        {60, 100, 220},  // vehicles: blue
        {220, 50, 50},   // markings: red
        {240, 170, 70},  // street: orange
        {150, 110, 190}, // background: purple
    };
    std::ostringstream os;
    os << "P6\n" << classes.cols() << " " << classes.rows() << "\n255\n";
    std::string buf = os.str();
    for (Eigen::Index i = 0; i < classes.rows(); ++i)
        for (Eigen::Index j = 0; j < classes.cols(); ++j) {
            const int c = classes(i, j);
            if (c < 0 || c >= kNumClasses) throw DataError("write_ppm_semantic: bad class id");
            buf.push_back(static_cast<char>(palette[c][0]));
            buf.push_back(static_cast<char>(palette[c][1]));
            buf.push_back(static_cast<char>(palette[c][2]));
        }
    atomic_write(path, buf);
}

}  // namespace fbev
