// Checkpoint container: bit-exact round trips, rejection of malformed files,
// and full network save/load identity including batch-norm running state.

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "twopath/checkpoint.hpp"
#include "twopath/network.hpp"

using namespace twopath;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const char* name) {
    return (fs::temp_directory_path() / name).string();
}

std::vector<unsigned char> slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is.good());
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(is), {});
}

NetworkSpec tiny_fine_spec() {
    NetworkSpec spec;
    spec.kind = "fine";
    spec.input_channels = 3;
    spec.stages = {{4, 3}, {4, 3}};
    spec.fc_width = 8;
    spec.num_classes = 3;
    spec.input_mean = {0.49, 0.48, 0.44};
    spec.input_std = {0.2, 0.21, 0.22};
    return spec;
}

}  // namespace

TEST_CASE("tensor round trip is bit exact, including awkward floats") {
    std::vector<NamedTensor> ts;
    Tensor<float> a({2, 3});
    a.data = {0.0f, -0.0f, 1.0f, std::nextafter(1.0f, 2.0f), 3.14159265f, -1e-38f};
    Tensor<float> b({4});
    b.data = {1e38f, -1e38f, 1.1754944e-38f, 42.0f};
    ts.push_back({"alpha", a});
    ts.push_back({"beta/gamma", b});

    const auto path = temp_path("tpck_roundtrip.bin");
    save_tensors(path, ts);
    const auto back = load_tensors(path);

    REQUIRE(back.size() == 2);
    CHECK(back[0].name == "alpha");
    CHECK(back[0].data.shape == std::vector<int>{2, 3});
    CHECK(std::memcmp(back[0].data.ptr(), a.ptr(), a.data.size() * sizeof(float)) == 0);
    CHECK(back[1].name == "beta/gamma");
    CHECK(std::memcmp(back[1].data.ptr(), b.ptr(), b.data.size() * sizeof(float)) == 0);

    // a second save of the loaded tensors produces an identical file
    const auto path2 = temp_path("tpck_roundtrip2.bin");
    save_tensors(path2, back);
    CHECK(slurp(path) == slurp(path2));
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("file layout starts with magic, version, count") {
    std::vector<NamedTensor> ts;
    Tensor<float> a({1});
    a.data = {7.0f};
    ts.push_back({"x", a});
    const auto path = temp_path("tpck_layout.bin");
    save_tensors(path, ts);
    const auto bytes = slurp(path);
    REQUIRE(bytes.size() >= 10);
    CHECK(bytes[0] == 'T');
    CHECK(bytes[1] == 'P');
    CHECK(bytes[2] == 'C');
    CHECK(bytes[3] == 'K');
    CHECK(bytes[4] == 1);  // version 1, little endian u16
    CHECK(bytes[5] == 0);
    CHECK(bytes[6] == 1);  // count 1, little endian u32
    CHECK(bytes[7] == 0);
    CHECK(bytes[8] == 0);
    CHECK(bytes[9] == 0);
    std::remove(path.c_str());
}

TEST_CASE("malformed files are rejected with context") {
    const auto path = temp_path("tpck_bad.bin");

    {  // wrong magic
        std::ofstream os(path, std::ios::binary);
        os << "JUNKJUNKJUNK";
    }
    CHECK_THROWS(load_tensors(path));

    {  // good magic, truncated body
        std::vector<NamedTensor> ts;
        Tensor<float> a({8});
        for (int i = 0; i < 8; ++i) a.data[i] = static_cast<float>(i);
        ts.push_back({"t", a});
        save_tensors(path, ts);
        auto bytes = slurp(path);
        bytes.resize(bytes.size() - 5);
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os.write(reinterpret_cast<const char*>(bytes.data()),
                 static_cast<std::streamsize>(bytes.size()));
    }
    CHECK_THROWS(load_tensors(path));

    CHECK_THROWS(load_tensors(temp_path("tpck_missing_file.bin")));
    std::remove(path.c_str());
}

TEST_CASE("string and scalar metadata helpers invert each other") {
    const auto enc = meta_string("meta/kind", "coarse");
    CHECK(meta_string_value(enc) == "coarse");
    const auto sc = meta_scalar("meta/fc_width", 96.0);
    CHECK(meta_scalar_value(sc) == doctest::Approx(96.0));
    CHECK_THROWS(meta_string("meta/bad", std::string(1, '\x80')));  // non-ASCII
    CHECK_THROWS(meta_string("meta/bad", ""));                      // empty
}

TEST_CASE("network save/load reproduces parameters, stats, and behaviour") {
    const auto spec = tiny_fine_spec();
    Network<float> net(spec);
    net.he_init(1234);

    // push the running statistics away from their fresh values
    Rng rng(99);
    Tensor<float> x({4, 3, 32, 32});
    for (auto& v : x.data) v = rng.uniform01f();
    (void)net.forward_logits(x, true);

    const auto path = temp_path("tpck_net.bin");
    save_network(path, net);
    auto loaded = load_network(path);

    CHECK(loaded.spec.kind == "fine");
    CHECK(loaded.spec.stages.size() == 2);
    CHECK(loaded.spec.fc_width == 8);
    // the constructor canonicalizes spec scalars to float precision, so the
    // load is an exact identity on the live network's spec
    CHECK(loaded.spec.input_mean == net.spec.input_mean);
    CHECK(loaded.spec.input_std == net.spec.input_std);
    CHECK(loaded.spec.preproc.sigma == net.spec.preproc.sigma);

    auto ps = net.parameters();
    auto qs = loaded.parameters();
    REQUIRE(ps.size() == qs.size());
    for (size_t i = 0; i < ps.size(); ++i) {
        CHECK(ps[i]->name == qs[i]->name);
        REQUIRE(ps[i]->value.shape == qs[i]->value.shape);
        CHECK(std::memcmp(ps[i]->value.ptr(), qs[i]->value.ptr(),
                          ps[i]->value.data.size() * sizeof(float)) == 0);
    }

    // identical eval-mode outputs, which also exercises the running stats
    auto y0 = net.forward_logits(x, false);
    auto y1 = loaded.forward_logits(x, false);
    CHECK(std::memcmp(y0.ptr(), y1.ptr(), y0.data.size() * sizeof(float)) == 0);

    // a re-save of the loaded network is byte-identical
    const auto path2 = temp_path("tpck_net2.bin");
    save_network(path2, loaded);
    CHECK(slurp(path) == slurp(path2));

    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("loading rejects a file with a missing tensor") {
    const auto spec = tiny_fine_spec();
    Network<float> net(spec);
    net.he_init(5);
    const auto path = temp_path("tpck_net_missing.bin");
    save_network(path, net);
    auto ts = load_tensors(path);
    // drop one parameter tensor and rewrite
    std::vector<NamedTensor> reduced;
    for (auto& nt : ts)
        if (nt.name != "stage1.conv.weight") reduced.push_back(std::move(nt));
    save_tensors(path, reduced);
    CHECK_THROWS(load_network(path));
    std::remove(path.c_str());
}
