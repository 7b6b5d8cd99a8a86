#include "vistra/inference.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <tuple>

#include "vistra/error.hpp"
#include "vistra/image_io.hpp"
#include "vistra/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vistra {

double prediction_variance(const std::vector<double>& probs) {
    if (probs.empty()) throw EvalError("prediction_variance: empty probability vector");
    double sum = 0.0;
    for (double p : probs) {
        if (p < -1e-9)
            throw EvalError("prediction_variance: negative probability " + std::to_string(p));
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-3)
        throw EvalError("prediction_variance: probabilities sum to " + std::to_string(sum) +
                        ", expected 1 within 1e-3");
    const double mean = sum / static_cast<double>(probs.size());
    double var = 0.0;
    for (double p : probs) var += (p - mean) * (p - mean);
    return var / static_cast<double>(probs.size());
}

namespace {

std::vector<std::string> id_to_label(const TaskSpec& task) {
    std::vector<std::string> labels(static_cast<std::size_t>(task.num_classes));
    for (const auto& [label, id] : task.class_index)
        labels[static_cast<std::size_t>(id)] = label;
    return labels;
}

// Probability vector for one output row: binary scalars expand to (1-p, p).
std::vector<double> probability_vector(const Tensor& out, int row, const TaskSpec& task) {
    if (task.mode == "binary") {
        const double p = out[out.size() == out.dim(0) ? row : out.idx2(row, 0)];
        return {1.0 - p, p};
    }
    std::vector<double> probs(static_cast<std::size_t>(task.num_classes));
    for (int j = 0; j < task.num_classes; ++j)
        probs[static_cast<std::size_t>(j)] = out[out.idx2(row, j)];
    return probs;
}

}  // namespace

FolderPredictions model_predict(BuiltModel& model, const std::string& folder,
                                const std::string& sort_by, bool keep_thumbnails) {
    if (sort_by != "none" && sort_by != "confidence" && sort_by != "variance")
        throw EvalError("unknown sort_by '" + sort_by + "' (valid: none, confidence, variance)");
    if (!fs::is_directory(folder))
        throw DataError("prediction folder '" + folder + "' does not exist");

    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(folder))
        if (entry.is_regular_file() && has_image_extension(entry.path().filename().string()))
            files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw DataError("prediction folder '" + folder + "' contains no image files");

    const auto labels = id_to_label(model.task);
    const int h = model.image_size.first, w = model.image_size.second;

    FolderPredictions result;
    constexpr std::size_t kChunk = 32;
    std::vector<std::pair<std::string, Image>> pending;
    auto flush = [&]() {
        if (pending.empty()) return;
        const int n = static_cast<int>(pending.size());
        Tensor batch({n, h, w, 3});
        for (int i = 0; i < n; ++i)
            std::copy(pending[static_cast<std::size_t>(i)].second.rgb.begin(),
                      pending[static_cast<std::size_t>(i)].second.rgb.end(),
                      batch.data.begin() + batch.idx4(i, 0, 0, 0));
        if (model.backbone.preprocess) model.backbone.preprocess(batch);
        const Tensor out = model.net.forward(batch, /*training=*/false);
        for (int i = 0; i < n; ++i) {
            PredictionRecord record;
            record.path = pending[static_cast<std::size_t>(i)].first;
            record.probabilities = probability_vector(out, i, model.task);
            const auto best = std::max_element(record.probabilities.begin(),
                                               record.probabilities.end());
            record.predicted_label = labels[static_cast<std::size_t>(
                std::distance(record.probabilities.begin(), best))];
            record.confidence = *best;
            record.variance = prediction_variance(record.probabilities);
            if (keep_thumbnails)
                record.thumbnail = pending[static_cast<std::size_t>(i)].second;
            result.records.push_back(std::move(record));
        }
        pending.clear();
    };

    for (const auto& path : files) {
        try {
            pending.emplace_back(path, resize_image(decode_image(path), h, w));
        } catch (const Error& e) {
            result.skipped.push_back(path + ": " + e.what());
            std::cerr << "warning: skipping " << path << ": " << e.what() << "\n";
            continue;
        }
        if (pending.size() >= kChunk) flush();
    }
    flush();

    if (result.records.empty())
        throw DataError("prediction folder '" + folder + "' contains no decodable images");

    if (sort_by == "variance")
        std::sort(result.records.begin(), result.records.end(),
                  [](const PredictionRecord& a, const PredictionRecord& b) {
                      return std::tie(a.variance, a.path) < std::tie(b.variance, b.path);
                  });
    else if (sort_by == "confidence")
        std::sort(result.records.begin(), result.records.end(),
                  [](const PredictionRecord& a, const PredictionRecord& b) {
                      return std::tie(a.confidence, a.path) < std::tie(b.confidence, b.path);
                  });
    return result;
}

void write_predictions_csv(const FolderPredictions& predictions, std::ostream& out) {
    auto csv_field = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string quoted = "\"";
        for (char c : s) {
            if (c == '"') quoted += '"';
            quoted += c;
        }
        return quoted + "\"";
    };
    out << "path,predicted_label,confidence,variance\n";
    out.precision(12);
    for (const auto& r : predictions.records)
        out << csv_field(r.path) << ',' << csv_field(r.predicted_label) << ',' << r.confidence
            << ',' << r.variance << '\n';
}

FeatureSplit model_feature_extract(BuiltModel& model, const DatasetBundle& data,
                                   std::optional<int> layer_index,
                                   const std::optional<std::string>& layer_name) {
    if (layer_index.has_value() == layer_name.has_value())
        throw ModelError(
            "feature extraction needs exactly one selector: layer_index or layer_name");
    int index;
    if (layer_index) {
        index = *layer_index;
        if (index < 0 || index >= model.net.layer_count())
            throw ModelError("layer_index " + std::to_string(index) + " out of range [0, " +
                             std::to_string(model.net.layer_count()) + ")");
    } else {
        index = model.net.index_of(*layer_name);
        if (index < 0) throw ModelError("unknown layer '" + *layer_name + "'");
    }

    FeatureSplit out;
    out.layer_index = index;
    out.layer_name = model.net.layer(index)->name();

    // Per-sample width of the selected layer's (possibly 4-D) output.
    const auto& shape = model.shapes[static_cast<std::size_t>(index)].output_shape;
    std::int64_t width = 1;
    for (std::size_t d = 1; d < shape.size(); ++d) width *= shape[d];
    out.width = static_cast<int>(width);

    for (const auto& split : data.split_names()) {
        const auto& files = data.split_index(split);
        Tensor matrix({static_cast<int>(files.size()), out.width});
        int row = 0;
        for (const auto& positions : data.batch_positions(split)) {
            const Batch batch = data.load_batch(split, positions, /*augment=*/false);
            const Tensor features = model.net.forward_to(batch.images, index);
            std::copy(features.data.begin(), features.data.end(),
                      matrix.data.begin() + matrix.idx2(row, 0));
            row += static_cast<int>(positions.size());
        }
        out.features[split] = std::move(matrix);
        auto& label_list = out.labels[split];
        label_list.reserve(files.size());
        for (const auto& file : files) label_list.push_back(file.label);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Model file

namespace {

constexpr char kModelMagic[4] = {'V', 'S', 'M', 'D'};
constexpr std::uint32_t kModelVersion = 1;

json model_descriptor(BuiltModel& model) {
    json doc;
    doc["backbone"] = model.backbone.name;
    doc["weight_source"] = model.backbone.weight_source;
    doc["image_size"] = {model.image_size.first, model.image_size.second};
    doc["task"] = {{"mode", model.task.mode},
                   {"num_classes", model.task.num_classes},
                   {"output_units", model.task.output_units},
                   {"output_activation", model.task.output_activation},
                   {"loss_name", model.task.loss_name},
                   {"class_index", model.task.class_index}};
    doc["head"] = {{"dense_layers", model.head.dense_layers},
                   {"dense_activations", model.head.dense_activations},
                   {"initializer", model.head.initializer},
                   {"batch_norm", model.head.batch_norm},
                   {"regularization", model.head.regularization},
                   {"l2_strength", model.head.l2_strength},
                   {"dropout_rate", model.head.dropout_rate},
                   {"bridge", model.head.bridge}};
    doc["trainable"] = model.trainability_mask();
    return doc;
}

}  // namespace

void save_model(BuiltModel& model, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ExportError("cannot open model file '" + path + "' for writing");
    f.write(kModelMagic, 4);
    f.write(reinterpret_cast<const char*>(&kModelVersion), 4);
    const std::string descriptor = model_descriptor(model).dump();
    const std::uint32_t len = static_cast<std::uint32_t>(descriptor.size());
    f.write(reinterpret_cast<const char*>(&len), 4);
    f.write(descriptor.data(), len);
    nn::write_weight_block(f, model.net.weight_snapshot());
    if (!f) throw ExportError("failed writing model file '" + path + "'");
}

BuiltModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ExportError("cannot open model file '" + path + "'");
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kModelMagic, 4) != 0)
        throw ExportError("'" + path + "' is not a model file");
    std::uint32_t version = 0, len = 0;
    f.read(reinterpret_cast<char*>(&version), 4);
    if (version != kModelVersion)
        throw ExportError("unsupported model file version " + std::to_string(version));
    f.read(reinterpret_cast<char*>(&len), 4);
    std::string text(len, '\0');
    f.read(text.data(), len);
    if (!f) throw ExportError("truncated model file '" + path + "'");

    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ExportError("model file '" + path + "' has a corrupt descriptor: " + e.what());
    }

    TaskSpec task;
    HeadSpec head;
    std::pair<int, int> image_size;
    std::string backbone_name;
    std::map<std::string, bool> trainable;
    try {
        backbone_name = doc.at("backbone").get<std::string>();
        image_size = {doc.at("image_size")[0].get<int>(), doc.at("image_size")[1].get<int>()};
        const auto& t = doc.at("task");
        task.mode = t.at("mode").get<std::string>();
        task.num_classes = t.at("num_classes").get<int>();
        task.output_units = t.at("output_units").get<int>();
        task.output_activation = t.at("output_activation").get<std::string>();
        task.loss_name = t.at("loss_name").get<std::string>();
        task.class_index = t.at("class_index").get<std::map<std::string, int>>();
        const auto& h = doc.at("head");
        head.dense_layers = h.at("dense_layers").get<std::vector<int>>();
        head.dense_activations = h.at("dense_activations").get<std::string>();
        head.initializer = h.at("initializer").get<std::string>();
        head.batch_norm = h.at("batch_norm").get<bool>();
        head.regularization = h.at("regularization").get<std::string>();
        head.l2_strength = h.at("l2_strength").get<double>();
        head.dropout_rate = h.at("dropout_rate").get<double>();
        head.bridge = h.at("bridge").get<std::string>();
        trainable = doc.at("trainable").get<std::map<std::string, bool>>();
    } catch (const json::exception& e) {
        throw ExportError("model file '" + path + "' has a corrupt descriptor: " + e.what());
    }

    // Weights come from the file, so the backbone materializes as "none" and
    // is then overwritten; the preprocessing transform depends only on the
    // architecture.
    BuiltModel model = assemble(get_backbone(backbone_name, "none"), task, head, /*seed=*/0,
                                image_size);
    model.net.restore_weights(nn::read_weight_block(f));
    for (int i = 0; i < model.net.layer_count(); ++i) {
        auto it = trainable.find(model.net.layer(i)->name());
        if (it != trainable.end()) model.net.layer(i)->set_trainable(it->second);
    }
    return model;
}

// ---------------------------------------------------------------------------
// Export

namespace {

std::string random_run_id(std::uint64_t seed) {
    static std::atomic<std::uint64_t> counter{0};
    static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";
    const auto now = static_cast<std::uint64_t>(
        std::chrono::system_clock::now().time_since_epoch().count());
    const std::uint64_t entropy =
        splitmix64(static_cast<std::uint64_t>(std::random_device{}()) ^ now ^ ++counter);
    std::mt19937_64 rng(derive_seed(seed, "export") ^ entropy);
    std::uniform_int_distribution<std::size_t> pick(0, sizeof(alphabet) - 2);
    std::string id;
    for (int i = 0; i < 8; ++i) id += alphabet[pick(rng)];
    return id;
}

void copy_file_into(const std::string& src, const fs::path& dst) {
    std::error_code ec;
    fs::copy_file(src, dst, fs::copy_options::overwrite_existing, ec);
    if (ec)
        throw ExportError("failed to copy artifact '" + src + "' to '" + dst.string() +
                          "': " + ec.message());
}

}  // namespace

std::string export_all(const ResultsBundle& results, const std::string& base_path,
                       bool export_model, bool additive, std::uint64_t seed, BuiltModel* model,
                       const RunIdGenerator& id_gen) {
    if (export_model && !model)
        throw ExportError("export_model requires the live model to serialize");

    std::error_code ec;
    fs::create_directories(base_path, ec);
    if (!fs::is_directory(base_path))
        throw ExportError("export base path '" + base_path + "' is not writable");

    fs::path run_dir;
    if (additive) {
        constexpr int kMaxAttempts = 16;
        int attempt = 0;
        for (; attempt < kMaxAttempts; ++attempt) {
            const std::string id = id_gen ? id_gen() : random_run_id(seed);
            const fs::path candidate = fs::path(base_path) / id;
            if (fs::exists(candidate)) continue;
            run_dir = candidate;
            break;
        }
        if (run_dir.empty())
            throw ExportError("could not find an unused export directory name after " +
                              std::to_string(kMaxAttempts) + " attempts under '" + base_path +
                              "'");
    } else {
        run_dir = fs::path(base_path) / "latest";
        fs::remove_all(run_dir, ec);
    }
    fs::create_directories(run_dir, ec);
    if (!fs::is_directory(run_dir))
        throw ExportError("cannot create export directory '" + run_dir.string() + "'");

    // Relative-path artifact listing rebuilt as files land in the run dir.
    std::vector<std::string> manifest_names;
    json doc = results_to_json(results);
    doc["artifacts"] = json::object();

    nn::write_weight_map((run_dir / results.best_weights_filename).string(),
                         results.best_weights);
    doc["artifacts"]["weights"] = {results.best_weights_filename};
    manifest_names.push_back(results.best_weights_filename);

    auto plots_it = results.artifacts.find("plots");
    if (plots_it != results.artifacts.end() && !plots_it->second.empty()) {
        fs::create_directories(run_dir / "plots", ec);
        std::vector<std::string> plot_names;
        for (const auto& src : plots_it->second) {
            const std::string rel = "plots/" + fs::path(src).filename().string();
            copy_file_into(src, run_dir / rel);
            plot_names.push_back(rel);
            manifest_names.push_back(rel);
        }
        doc["artifacts"]["plots"] = plot_names;
    }

    if (export_model) {
        save_model(*model, (run_dir / "model.bin").string());
        doc["artifacts"]["model"] = {"model.bin"};
        manifest_names.push_back("model.bin");
    }

    {
        std::ofstream out(run_dir / "results.json", std::ios::trunc);
        if (!out) throw ExportError("cannot write results.json under '" + run_dir.string() + "'");
        out << doc.dump(2) << "\n";
    }
    manifest_names.push_back("results.json");

    json manifest;
    manifest["run_dir"] = run_dir.filename().string();
    manifest["files"] = json::array();
    for (const auto& name : manifest_names) {
        const auto size = fs::file_size(run_dir / name, ec);
        if (ec || size == 0)
            throw ExportError("export artifact '" + name + "' is missing or empty");
        manifest["files"].push_back({{"name", name}, {"bytes", size}});
    }
    std::ofstream mf(run_dir / "manifest.json", std::ios::trunc);
    if (!mf) throw ExportError("cannot write manifest.json under '" + run_dir.string() + "'");
    mf << manifest.dump(2) << "\n";

    return run_dir.string();
}

}  // namespace vistra
