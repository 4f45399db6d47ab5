#pragma once

#include "fbev/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fbev {

/// Binary tensor container: magic "FBVT", version u16, dtype u8, rank u8,
/// dims u32 each, payload row-major. All fields little-endian.
enum class Dtype : uint8_t { F32 = 0, F64 = 1, U8 = 2, U16 = 3, I32 = 4 };

size_t dtype_size(Dtype d);

struct Tensor {
    Dtype dtype = Dtype::F64;
    std::vector<uint32_t> dims;
    std::vector<uint8_t> raw;  // payload bytes, row-major

    size_t element_count() const;
    void validate() const;

    std::vector<double> as_f64() const;   // converts any dtype
    std::vector<int32_t> as_i32() const;  // integer dtypes only
};

Tensor tensor_f64(std::vector<uint32_t> dims, const std::vector<double>& values);
Tensor tensor_f32(std::vector<uint32_t> dims, const std::vector<double>& values);
Tensor tensor_i32(std::vector<uint32_t> dims, const std::vector<int32_t>& values);
Tensor tensor_u8(std::vector<uint32_t> dims, const std::vector<uint8_t>& values);
Tensor tensor_u16(std::vector<uint32_t> dims, const std::vector<uint16_t>& values);

// Grid payloads are stored (nx, ny) row-major; channel stacks (C, nx, ny).
Tensor tensor_from_grid(const Grid& g);
Tensor tensor_from_grid(const GridI& g);
Tensor tensor_from_channels(const ChannelGrid& channels);
Tensor tensor_from_stack(const CameraStack& stack);  // rank 4 (K, C, nx, ny)

Grid grid_from_tensor(const Tensor& t);
GridI grid_i_from_tensor(const Tensor& t);
ChannelGrid channels_from_tensor(const Tensor& t);
CameraStack stack_from_tensor(const Tensor& t);

/// Atomic save (temp file + rename).
void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

/// 8-bit grayscale PGM of values in [0, 1].
void write_pgm(const std::string& path, const Grid& values);

/// Indexed PPM with the fixed five-class palette (invalid=black,
/// vehicles=blue, markings=red, street=orange, background=purple).
void write_ppm_semantic(const std::string& path, const GridI& classes);

void atomic_write(const std::string& path, const std::string& data);

}  // namespace fbev
