#include <doctest.h>

#include <cmath>
#include <set>

#include "vistra/backbone.hpp"
#include "vistra/error.hpp"
#include "vistra/model.hpp"
#include "vistra/nn/layers.hpp"

using namespace vistra;

namespace {

TaskSpec multiclass_task(int k) {
    TaskSpec t;
    t.num_classes = k;
    t.mode = "multiclass";
    t.output_units = k;
    t.output_activation = "softmax";
    t.loss_name = "categorical_crossentropy";
    for (int i = 0; i < k; ++i) t.class_index["c" + std::to_string(i)] = i;
    return t;
}

TaskSpec binary_task() {
    TaskSpec t;
    t.num_classes = 2;
    t.mode = "binary";
    t.output_units = 1;
    t.output_activation = "sigmoid";
    t.loss_name = "binary_crossentropy";
    t.class_index = {{"neg", 0}, {"pos", 1}};
    return t;
}

Tensor random_images(int n, int h, int w, std::uint32_t seed) {
    Tensor x({n, h, w, 3});
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> dist(0.0f, 1.0f);
    for (auto& v : x.data) v = dist(rng);
    return x;
}

}  // namespace

TEST_CASE("build_head expands hidden widths into dense/activation pairs") {
    HeadSpec spec;
    spec.dense_layers = {144, 89, 55};
    const auto rows = build_head(multiclass_task(3), spec);

    // dense_0, act_0, dense_1, act_1, dense_2, act_2, output, output_activation
    REQUIRE(rows.size() == 8);
    CHECK(rows[0].kind == "dense");
    CHECK(rows[0].units == 144);
    CHECK(rows[1].kind == "activation");
    CHECK(rows[1].activation == "elu");
    CHECK(rows[4].units == 55);
    CHECK(rows[6].name == "output");
    CHECK(rows[6].units == 3);  // task units, not a configured width
    CHECK(rows[7].name == "output_activation");
    CHECK(rows[7].activation == "softmax");
}

TEST_CASE("an empty head is just the task output layer") {
    HeadSpec spec;
    const auto rows = build_head(binary_task(), spec);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].name == "output");
    CHECK(rows[0].units == 1);
    CHECK(rows[1].activation == "sigmoid");
}

TEST_CASE("regularization modes inject dropout and batch-norm layers") {
    HeadSpec spec;
    spec.dense_layers = {32};
    spec.batch_norm = true;
    spec.regularization = "Dropout+L2";
    spec.dropout_rate = 0.25;
    spec.l2_strength = 0.01;

    const auto rows = build_head(multiclass_task(4), spec);
    // dense_0, batchnorm_0, act_0, dropout_0, output, output_activation
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].kind == "dense");
    CHECK(rows[0].l2 == 0.01);
    CHECK(rows[1].kind == "batchnorm");
    CHECK(rows[2].kind == "activation");
    CHECK(rows[3].kind == "dropout");
    CHECK(rows[3].dropout_rate == 0.25);
    // No dropout after the output layer.
    CHECK(rows[4].kind == "dense");
    CHECK(rows[5].kind == "activation");

    // L2-only mode keeps the penalty but drops the dropout layers.
    spec.regularization = "L2";
    const auto l2_only = build_head(multiclass_task(4), spec);
    for (const auto& r : l2_only) CHECK(r.kind != "dropout");

    // Dropout-only mode zeroes the penalty.
    spec.regularization = "Dropout";
    for (const auto& r : build_head(multiclass_task(4), spec))
        if (r.kind == "dense") CHECK(r.l2 == 0.0);

    // rate 0 suppresses dropout layers even in Dropout mode.
    spec.dropout_rate = 0.0;
    for (const auto& r : build_head(multiclass_task(4), spec)) CHECK(r.kind != "dropout");
}

TEST_CASE("head validation rejects bad values") {
    HeadSpec spec;
    spec.dense_layers = {0};
    CHECK_THROWS_AS(build_head(binary_task(), spec), ModelError);
    spec.dense_layers = {-5};
    CHECK_THROWS_AS(build_head(binary_task(), spec), ModelError);

    spec.dense_layers = {16};
    spec.regularization = "ridge";
    CHECK_THROWS_WITH_AS(build_head(binary_task(), spec), doctest::Contains("ridge"),
                         ModelError);

    spec = HeadSpec{};
    spec.dropout_rate = 1.5;
    spec.regularization = "Dropout";
    CHECK_THROWS_AS(build_head(binary_task(), spec), ModelError);

    spec = HeadSpec{};
    spec.bridge = "Attention";
    CHECK_THROWS_AS(build_head(binary_task(), spec), ModelError);
}

TEST_CASE("assemble stacks backbone, bridge, and head with working shapes") {
    const BackboneHandle bb = get_backbone("TinyNet", "none");
    HeadSpec spec;
    spec.dense_layers = {16};
    BuiltModel model = assemble(bb, multiclass_task(3), spec, 42);

    CHECK(model.image_size == std::pair<int, int>{32, 32});
    CHECK(model.backbone_layer_count == 6);  // 4 convs + 2 pools
    CHECK(model.bridge_index == 6);
    CHECK(model.net.layer(model.bridge_index)->name() == "flatten");
    CHECK(model.is_backbone_layer(5));
    CHECK_FALSE(model.is_backbone_layer(6));

    // 32x32 through two 2x pools -> 8x8x24 -> flatten width 1536.
    const Tensor x = random_images(2, 32, 32, 1);
    const Tensor y = model.net.forward(x, false);
    REQUIRE(y.shape == std::vector<int>{2, 3});
    for (int r = 0; r < 2; ++r) {
        double row = 0;
        for (int c = 0; c < 3; ++c) row += y[y.idx2(r, c)];
        CHECK(row == doctest::Approx(1.0).epsilon(1e-6));
    }

    // The shapes table mirrors the stack, batch dim as -1.
    REQUIRE(model.shapes.size() == 6 + 1 + 4);  // backbone + bridge + (dense,act,output,act)
    CHECK(model.shapes[0].name == "block1_conv1");
    CHECK(model.shapes[0].output_shape == std::vector<int>{-1, 32, 32, 12});
    CHECK(model.shapes[6].name == "flatten");
    CHECK(model.shapes[6].output_shape == std::vector<int>{-1, 8 * 8 * 24});
    CHECK(model.shapes.back().output_shape == std::vector<int>{-1, 3});
}

TEST_CASE("binary heads end in a single sigmoid unit") {
    const BackboneHandle bb = get_backbone("TinyNet", "none");
    BuiltModel model = assemble(bb, binary_task(), HeadSpec{}, 7);
    const Tensor y = model.net.forward(random_images(3, 32, 32, 2), false);
    REQUIRE(y.shape == std::vector<int>{3, 1});
    for (std::int64_t i = 0; i < y.size(); ++i) {
        CHECK(y[i] > 0.0f);
        CHECK(y[i] < 1.0f);
    }
}

TEST_CASE("global average pooling bridge collapses to channel width") {
    const BackboneHandle bb = get_backbone("TinyNet", "none");
    HeadSpec spec;
    spec.bridge = "GlobalAveragePooling";
    BuiltModel model = assemble(bb, multiclass_task(3), spec, 1);
    CHECK(model.net.layer(model.bridge_index)->name() == "global_average_pooling");
    CHECK(model.shapes[model.bridge_index].output_shape == std::vector<int>{-1, 24});
}

TEST_CASE("a custom image size propagates through the shape table") {
    const BackboneHandle bb = get_backbone("TinyNet", "none");
    BuiltModel model = assemble(bb, multiclass_task(3), HeadSpec{}, 1,
                                std::pair<int, int>{64, 48});
    CHECK(model.image_size == std::pair<int, int>{64, 48});
    CHECK(model.shapes[0].output_shape == std::vector<int>{-1, 64, 48, 12});
    // two pools: 64x48 -> 16x12, flatten = 16*12*24.
    CHECK(model.shapes[model.bridge_index].output_shape ==
          std::vector<int>{-1, 16 * 12 * 24});

    // Sizes that collapse to zero spatial extent are rejected up front.
    CHECK_THROWS_AS(assemble(bb, multiclass_task(3), HeadSpec{}, 1, std::pair<int, int>{2, 2}),
                    ModelError);
}

TEST_CASE("assembly is deterministic in the seed") {
    const BackboneHandle bb = get_backbone("TinyNet", "none");
    HeadSpec spec;
    spec.dense_layers = {8};
    BuiltModel a = assemble(bb, binary_task(), spec, 5);
    BuiltModel b = assemble(bb, binary_task(), spec, 5);
    BuiltModel c = assemble(bb, binary_task(), spec, 6);

    const Tensor x = random_images(2, 32, 32, 3);
    CHECK(a.net.forward(x, false).data == b.net.forward(x, false).data);
    CHECK(a.net.forward(x, false).data != c.net.forward(x, false).data);
}

TEST_CASE("freeze policy: backbone frozen, requested blocks and head trainable") {
    const BackboneHandle bb = get_backbone("TinyNet", "none");
    HeadSpec spec;
    spec.dense_layers = {8};
    BuiltModel model = assemble(bb, multiclass_task(3), spec, 1);

    apply_freeze_policy(model, {"cblock2"}, std::nullopt);
    auto mask = model.trainability_mask();
    CHECK_FALSE(mask.at("block1_conv1"));
    CHECK_FALSE(mask.at("block1_conv2"));
    CHECK(mask.at("block2_conv1"));
    CHECK(mask.at("block2_conv2"));
    CHECK(mask.at("dense_1"));
    CHECK(mask.at("output"));

    // No unfreeze: the whole backbone is frozen.
    apply_freeze_policy(model, {}, std::nullopt);
    mask = model.trainability_mask();
    for (const auto& [name, trainable] : mask)
        CHECK(trainable == (name.rfind("block", 0) != 0));
}

TEST_CASE("freeze_up_to freezes positionally but unfrozen blocks win") {
    const BackboneHandle bb = get_backbone("TinyNet", "none");
    BuiltModel model = assemble(bb, multiclass_task(3), HeadSpec{}, 1);

    // Freeze everything before the bridge; cblock1 explicitly unfrozen.
    apply_freeze_policy(model, {"cblock1"}, std::optional<std::string>{"flatten"});
    auto mask = model.trainability_mask();
    CHECK(mask.at("block1_conv1"));
    CHECK(mask.at("block1_conv2"));
    CHECK_FALSE(mask.at("block2_conv1"));
    CHECK_FALSE(mask.at("block2_conv2"));
    CHECK(mask.at("output"));

    CHECK_THROWS_WITH_AS(apply_freeze_policy(model, {}, std::optional<std::string>{"not_a_layer"}),
                         doctest::Contains("not_a_layer"), ModelError);
    CHECK_THROWS_WITH_AS(apply_freeze_policy(model, {"cblock7"}, std::nullopt),
                         doctest::Contains("cblock7"), BackboneError);
}

TEST_CASE("parameter_counts partitions the total exactly") {
    const BackboneHandle bb = get_backbone("TinyNet", "none");
    HeadSpec spec;
    spec.dense_layers = {16};
    BuiltModel model = assemble(bb, multiclass_task(3), spec, 1);

    const std::int64_t flat = 8 * 8 * 24;
    const std::int64_t head = (flat * 16 + 16) + (16 * 3 + 3);

    apply_freeze_policy(model, {}, std::nullopt);
    auto [trainable, frozen] = parameter_counts(model);
    CHECK(trainable == head);
    CHECK(frozen == 9468);
    CHECK(trainable + frozen == model.net.param_count_total());

    apply_freeze_policy(model, {"cblock2"}, std::nullopt);
    std::tie(trainable, frozen) = parameter_counts(model);
    CHECK(frozen == 336 + 1308);  // block1 convs only
    CHECK(trainable + frozen == model.net.param_count_total());
}

TEST_CASE("summary renders one row per layer plus the totals") {
    const BackboneHandle bb = get_backbone("TinyNet", "none");
    HeadSpec spec;
    spec.dense_layers = {16};
    BuiltModel model = assemble(bb, multiclass_task(3), spec, 1);
    apply_freeze_policy(model, {}, std::nullopt);

    const std::string text = summary(model);
    CHECK(text.find("block1_conv1") != std::string::npos);
    CHECK(text.find("flatten") != std::string::npos);
    CHECK(text.find("output") != std::string::npos);
    CHECK(text.find("Conv2D") != std::string::npos);
    CHECK(text.find("9468") != std::string::npos);              // frozen total
    CHECK(text.find("(None, 8, 8, 24)") != std::string::npos);  // a shape cell
}

TEST_CASE("dropout layers in the head replay deterministically per seed") {
    const BackboneHandle bb = get_backbone("TinyNet", "none");
    HeadSpec spec;
    spec.dense_layers = {16};
    spec.regularization = "Dropout";
    spec.dropout_rate = 0.5;

    BuiltModel a = assemble(bb, multiclass_task(3), spec, 11);
    BuiltModel b = assemble(bb, multiclass_task(3), spec, 11);
    const Tensor x = random_images(2, 32, 32, 9);
    // Training forwards consume dropout masks; same seed, same masks.
    CHECK(a.net.forward(x, true).data == b.net.forward(x, true).data);
    CHECK(a.net.forward(x, true).data == b.net.forward(x, true).data);
}
