#pragma once

// On-disk snapshot format. A checkpoint is a flat list of named float32
// tensors: 'TPCK' magic, u16 format version, u32 tensor count, then per
// tensor a u16-length UTF-8 name, u8 rank, u32 dims, and the raw values in
// row-major order, all little-endian. Values round-trip bit-exactly.
//
// Names under "meta/" are reserved: strings and scalars describing the
// stored model ride along as small tensors so a checkpoint fully describes
// how to rebuild and feed the network it contains.

#include <string>
#include <vector>

#include "twopath/network.hpp"
#include "twopath/tensor.hpp"

namespace twopath {

struct NamedTensor {
    std::string name;
    Tensor<float> data;
};

void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_tensors(const std::string& path);

// meta payload helpers: strings are stored as one float per code unit
NamedTensor meta_string(const std::string& name, const std::string& value);
std::string meta_string_value(const NamedTensor& t);
NamedTensor meta_scalar(const std::string& name, double value);
double meta_scalar_value(const NamedTensor& t);

// whole-network save/load, including batchnorm running statistics and the
// input normalization / preprocessing description
void save_network(const std::string& path, Network<float>& net);
Network<float> load_network(const std::string& path);

}  // namespace twopath
