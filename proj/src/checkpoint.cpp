#include "twopath/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace twopath {

namespace {

constexpr char kMagic[4] = {'T', 'P', 'C', 'K'};
constexpr uint16_t kVersion = 1;

void put_u16(std::ostream& os, uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                                static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& os, uint32_t v) {
    const unsigned char b[4] = {
        static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>((v >> 8) & 0xff),
        static_cast<unsigned char>((v >> 16) & 0xff), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ostream& os, float f) {
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(os, bits);
}

uint16_t get_u16(std::istream& is, const std::string& path) {
    unsigned char b[2];
    if (!is.read(reinterpret_cast<char*>(b), 2))
        throw std::runtime_error("checkpoint truncated: " + path);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

uint32_t get_u32(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw std::runtime_error("checkpoint truncated: " + path);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

float get_f32(std::istream& is, const std::string& path) {
    const uint32_t bits = get_u32(is, path);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

}  // namespace

void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    os.write(kMagic, 4);
    put_u16(os, kVersion);
    put_u32(os, static_cast<uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        if (t.name.empty() || t.name.size() > std::numeric_limits<uint16_t>::max())
            throw std::runtime_error("bad tensor name length: " + t.name);
        if (t.data.shape.empty() || t.data.shape.size() > 8)
            throw std::runtime_error("bad tensor rank: " + t.name);
        put_u16(os, static_cast<uint16_t>(t.name.size()));
        os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        os.put(static_cast<char>(t.data.shape.size()));
        for (int d : t.data.shape) put_u32(os, static_cast<uint32_t>(d));
        for (float v : t.data.data) put_f32(os, v);
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<NamedTensor> load_tensors(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    const uint16_t version = get_u16(is, path);
    if (version != kVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) +
                                 ": " + path);
    const uint32_t count = get_u32(is, path);
    std::vector<NamedTensor> out;
    out.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        const uint16_t name_len = get_u16(is, path);
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len))
            throw std::runtime_error("checkpoint truncated: " + path);
        const int rank = is.get();
        if (rank <= 0 || rank > 8)
            throw std::runtime_error("bad tensor rank in checkpoint: " + path);
        std::vector<int> shape(rank);
        for (auto& d : shape) {
            const uint32_t v = get_u32(is, path);
            if (v == 0 || v > (1u << 28))
                throw std::runtime_error("bad tensor dim in checkpoint: " + path);
            d = static_cast<int>(v);
        }
        Tensor<float> t(shape);
        for (auto& v : t.data) v = get_f32(is, path);
        out.push_back({std::move(name), std::move(t)});
    }
    return out;
}

NamedTensor meta_string(const std::string& name, const std::string& value) {
    if (value.empty()) throw std::runtime_error("meta string must not be empty: " + name);
    Tensor<float> t({static_cast<int>(value.size())});
    for (size_t i = 0; i < value.size(); ++i) {
        const int c = static_cast<unsigned char>(value[i]);
        if (c <= 0 || c > 127)
            throw std::runtime_error("meta string must be printable ASCII: " + name);
        t.data[i] = static_cast<float>(c);
    }
    return {name, std::move(t)};
}

std::string meta_string_value(const NamedTensor& t) {
    std::string s;
    s.reserve(t.data.data.size());
    for (float v : t.data.data) {
        const int c = static_cast<int>(v);
        if (c <= 0 || c > 127 || static_cast<float>(c) != v)
            throw std::runtime_error("malformed meta string: " + t.name);
        s.push_back(static_cast<char>(c));
    }
    return s;
}

NamedTensor meta_scalar(const std::string& name, double value) {
    Tensor<float> t({1});
    t.data[0] = static_cast<float>(value);
    return {name, std::move(t)};
}

double meta_scalar_value(const NamedTensor& t) {
    if (t.data.data.size() != 1) throw std::runtime_error("meta scalar is not scalar: " + t.name);
    return static_cast<double>(t.data.data[0]);
}

namespace {

std::vector<NamedTensor> network_meta(const NetworkSpec& s) {
    std::vector<NamedTensor> out;
    out.push_back(meta_string("meta/model", "pathway-network"));
    out.push_back(meta_string("meta/kind", s.kind));
    out.push_back(meta_scalar("meta/input_channels", s.input_channels));
    out.push_back(meta_scalar("meta/input_hw", s.input_hw));
    Tensor<float> st({static_cast<int>(s.stages.size()), 2});
    for (size_t i = 0; i < s.stages.size(); ++i) {
        st.at2(static_cast<int>(i), 0) = static_cast<float>(s.stages[i].filters);
        st.at2(static_cast<int>(i), 1) = static_cast<float>(s.stages[i].ksize);
    }
    out.push_back({"meta/stages", std::move(st)});
    out.push_back(meta_scalar("meta/fc_width", s.fc_width));
    out.push_back(meta_scalar("meta/num_classes", s.num_classes));
    Tensor<float> mean({s.input_channels}), stdev({s.input_channels});
    for (int c = 0; c < s.input_channels; ++c) {
        mean.data[c] =
            c < static_cast<int>(s.input_mean.size()) ? static_cast<float>(s.input_mean[c]) : 0.0f;
        stdev.data[c] =
            c < static_cast<int>(s.input_std.size()) ? static_cast<float>(s.input_std[c]) : 1.0f;
    }
    out.push_back({"meta/input_mean", std::move(mean)});
    out.push_back({"meta/input_std", std::move(stdev)});
    out.push_back(meta_string("meta/preproc_kind", s.preproc.kind));
    out.push_back(meta_scalar("meta/preproc_sigma", s.preproc.sigma));
    out.push_back(meta_scalar("meta/preproc_threshold", s.preproc.threshold));
    return out;
}

const NamedTensor& find_tensor(const std::vector<NamedTensor>& ts, const std::string& name,
                               const std::string& path) {
    for (const auto& t : ts)
        if (t.name == name) return t;
    throw std::runtime_error("checkpoint is missing tensor '" + name + "': " + path);
}

}  // namespace

void save_network(const std::string& path, Network<float>& net) {
    std::vector<NamedTensor> ts = network_meta(net.spec);
    for (auto* p : net.parameters()) ts.push_back({p->name, p->value});
    for (size_t i = 0; i < net.stages.size(); ++i) {
        const std::string base = "stage" + std::to_string(i) + ".bn.";
        ts.push_back({base + "running_mean", net.stages[i].bn.running_mean});
        ts.push_back({base + "running_var", net.stages[i].bn.running_var});
    }
    save_tensors(path, ts);
}

Network<float> load_network(const std::string& path) {
    auto ts = load_tensors(path);
    const auto model = meta_string_value(find_tensor(ts, "meta/model", path));
    if (model != "pathway-network")
        throw std::runtime_error("checkpoint holds a different model kind (" + model +
                                 "): " + path);
    NetworkSpec s;
    s.kind = meta_string_value(find_tensor(ts, "meta/kind", path));
    s.input_channels = static_cast<int>(meta_scalar_value(find_tensor(ts, "meta/input_channels", path)));
    s.input_hw = static_cast<int>(meta_scalar_value(find_tensor(ts, "meta/input_hw", path)));
    const auto& st = find_tensor(ts, "meta/stages", path).data;
    if (st.shape.size() != 2 || st.shape[1] != 2)
        throw std::runtime_error("malformed stage table: " + path);
    for (int i = 0; i < st.shape[0]; ++i)
        s.stages.push_back({static_cast<int>(st.data[2 * i]), static_cast<int>(st.data[2 * i + 1])});
    s.fc_width = static_cast<int>(meta_scalar_value(find_tensor(ts, "meta/fc_width", path)));
    s.num_classes = static_cast<int>(meta_scalar_value(find_tensor(ts, "meta/num_classes", path)));
    for (float v : find_tensor(ts, "meta/input_mean", path).data.data)
        s.input_mean.push_back(static_cast<double>(v));
    for (float v : find_tensor(ts, "meta/input_std", path).data.data)
        s.input_std.push_back(static_cast<double>(v));
    s.preproc.kind = meta_string_value(find_tensor(ts, "meta/preproc_kind", path));
    s.preproc.sigma = meta_scalar_value(find_tensor(ts, "meta/preproc_sigma", path));
    s.preproc.threshold = meta_scalar_value(find_tensor(ts, "meta/preproc_threshold", path));

    Network<float> net(s);
    std::unordered_map<std::string, const NamedTensor*> by_name;
    for (const auto& t : ts)
        if (t.name.rfind("meta/", 0) != 0) by_name[t.name] = &t;

    size_t consumed = 0;
    auto take = [&](const std::string& name, Tensor<float>& dst) {
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw std::runtime_error("checkpoint is missing tensor '" + name + "': " + path);
        if (!(it->second->data.shape == dst.shape))
            throw std::runtime_error("checkpoint tensor '" + name + "' has shape " +
                                     it->second->data.shape_str() + ", expected " +
                                     dst.shape_str() + ": " + path);
        dst = it->second->data;
        ++consumed;
    };
    for (auto* p : net.parameters()) take(p->name, p->value);
    for (size_t i = 0; i < net.stages.size(); ++i) {
        const std::string base = "stage" + std::to_string(i) + ".bn.";
        take(base + "running_mean", net.stages[i].bn.running_mean);
        take(base + "running_var", net.stages[i].bn.running_var);
    }
    if (consumed != by_name.size())
        throw std::runtime_error("checkpoint holds unexpected extra tensors: " + path);
    return net;
}

}  // namespace twopath
