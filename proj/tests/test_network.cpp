#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <memory>
#include <random>

#include "support/synthetic_dataset.hpp"
#include "vistra/error.hpp"
#include "vistra/nn/layers.hpp"
#include "vistra/nn/network.hpp"

using namespace vistra;
using namespace vistra::nn;

namespace {

Network small_net(std::uint32_t seed = 42) {
    Network net;
    net.add(std::make_unique<Dense>("hidden", 4, 3));
    net.add(std::make_unique<ActivationLayer>("hidden_act", Activation::Tanh));
    net.add(std::make_unique<Dense>("output", 3, 2));
    net.add(std::make_unique<ActivationLayer>("output_act", Activation::Softmax));
    std::mt19937 rng(seed);
    for (int i = 0; i < net.layer_count(); ++i)
        net.layer(i)->init_weights(rng, "glorot_uniform");
    return net;
}

Tensor random_input(int n, int width, std::uint32_t seed) {
    Tensor x({n, width});
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    for (auto& v : x.data) v = dist(rng);
    return x;
}

}  // namespace

TEST_CASE("network lookup by name and index") {
    Network net = small_net();
    CHECK(net.layer_count() == 4);
    CHECK(net.index_of("hidden") == 0);
    CHECK(net.index_of("output") == 2);
    CHECK(net.index_of("missing") == -1);
    CHECK(net.find("output_act") == net.layer(3));
    CHECK(net.find("missing") == nullptr);
}

TEST_CASE("forward_to truncates the stack at the requested layer") {
    Network net = small_net();
    const Tensor x = random_input(3, 4, 1);

    // Running layer-by-layer in inference mode must match forward_to.
    Tensor manual = x;
    for (int i = 0; i <= 1; ++i) manual = net.layer(i)->forward(manual, false);
    const Tensor got = net.forward_to(x, 1);
    CHECK(got.shape == manual.shape);
    CHECK(got.data == manual.data);

    // Truncating at the last layer equals the full inference pass.
    const Tensor full = net.forward(x, false);
    const Tensor upto_last = net.forward_to(x, net.layer_count() - 1);
    CHECK(upto_last.data == full.data);
}

TEST_CASE("params respects trainable_only and zero_grads clears accumulators") {
    Network net = small_net();
    CHECK(net.params(false).size() == 4);  // two Dense layers x (W, b)
    net.find("hidden")->set_trainable(false);
    CHECK(net.params(true).size() == 2);
    CHECK(net.params(false).size() == 4);

    const Tensor x = random_input(2, 4, 2);
    net.forward(x, true);
    // Non-uniform upstream gradient; a constant one is annihilated by the
    // softmax Jacobian and would leave every parameter gradient at zero.
    Tensor dy({2, 2});
    dy.data = {1.0f, -0.25f, 0.5f, 2.0f};
    net.backward(dy);
    auto* out = dynamic_cast<Dense*>(net.find("output"));
    REQUIRE(out != nullptr);
    bool any_nonzero = false;
    for (auto v : out->dweight.data) any_nonzero |= (v != 0.0f);
    CHECK(any_nonzero);
    net.zero_grads();
    for (auto v : out->dweight.data) CHECK(v == 0.0f);
}

TEST_CASE("parameter counts split into total and trainable") {
    Network net = small_net();
    const std::int64_t hidden = 4 * 3 + 3, output = 3 * 2 + 2;
    CHECK(net.param_count_total() == hidden + output);
    CHECK(net.param_count_trainable() == hidden + output);
    net.find("hidden")->set_trainable(false);
    CHECK(net.param_count_total() == hidden + output);
    CHECK(net.param_count_trainable() == output);
}

TEST_CASE("weight snapshot and restore round-trip bit-exactly") {
    Network net = small_net(7);
    const Tensor x = random_input(2, 4, 3);
    const Tensor before = net.forward(x, false);

    WeightMap snap = net.weight_snapshot();
    CHECK(snap.count("hidden/weight") == 1);
    CHECK(snap.count("output/bias") == 1);

    // Perturb everything, then restore.
    for (auto& p : net.params(false)) p.value->fill(0.123f);
    const Tensor perturbed = net.forward(x, false);
    CHECK(perturbed.data != before.data);

    net.restore_weights(snap);
    const Tensor after = net.forward(x, false);
    CHECK(after.data == before.data);
}

TEST_CASE("restore_weights validates names and shapes") {
    Network net = small_net();
    WeightMap snap = net.weight_snapshot();
    snap["hidden/weight"] = Tensor({2, 2});
    CHECK_THROWS_AS(net.restore_weights(snap), ModelError);
}

TEST_CASE("weight files round-trip through disk") {
    const std::string dir = testsupport::unique_temp_dir("weights");
    const std::string path = dir + "/net.wts";

    Network net = small_net(11);
    // Include a BatchNorm so non-trainable buffers are exercised as well.
    Network full;
    full.add(std::make_unique<Dense>("d", 4, 4));
    full.add(std::make_unique<BatchNorm>("bn", 4));
    std::mt19937 rng(5);
    full.layer(0)->init_weights(rng, "he_normal");
    const Tensor x = random_input(6, 4, 9);
    full.forward(x, true);  // move the running statistics off their defaults

    full.save_weights(path);
    REQUIRE(std::filesystem::exists(path));

    Network reloaded;
    reloaded.add(std::make_unique<Dense>("d", 4, 4));
    reloaded.add(std::make_unique<BatchNorm>("bn", 4));
    reloaded.load_weights(path);

    const Tensor a = full.forward(x, false);
    const Tensor b = reloaded.forward(x, false);
    CHECK(a.data == b.data);

    auto* bn_src = dynamic_cast<BatchNorm*>(full.find("bn"));
    auto* bn_dst = dynamic_cast<BatchNorm*>(reloaded.find("bn"));
    REQUIRE(bn_src != nullptr);
    REQUIRE(bn_dst != nullptr);
    CHECK(bn_src->running_mean.data == bn_dst->running_mean.data);
    CHECK(bn_src->running_var.data == bn_dst->running_var.data);

    testsupport::remove_tree(dir);
}

TEST_CASE("loading a corrupt weight file reports a model error") {
    const std::string dir = testsupport::unique_temp_dir("badweights");
    const std::string path = dir + "/broken.wts";
    {
        std::ofstream out(path, std::ios::binary);
        out << "not a weight file";
    }
    Network net = small_net();
    CHECK_THROWS_AS(net.load_weights(path), ModelError);
    CHECK_THROWS_AS(net.load_weights(dir + "/missing.wts"), ModelError);
    testsupport::remove_tree(dir);
}

TEST_CASE("training forward differs from inference when dropout is active") {
    Network net;
    net.add(std::make_unique<Dense>("d", 8, 8));
    net.add(std::make_unique<Dropout>("do", 0.5, 77));
    std::mt19937 rng(3);
    net.layer(0)->init_weights(rng, "glorot_uniform");

    const Tensor x = random_input(4, 8, 4);
    const Tensor eval1 = net.forward(x, false);
    const Tensor eval2 = net.forward(x, false);
    CHECK(eval1.data == eval2.data);  // inference is deterministic
    const Tensor train = net.forward(x, true);
    CHECK(train.data != eval1.data);  // dropout only bites in training
}
