#include "vistra/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <set>

#include "vistra/error.hpp"
#include "vistra/evaluation.hpp"
#include "vistra/nn/loss.hpp"
#include "vistra/nn/optimizer.hpp"
#include "vistra/rng.hpp"

namespace fs = std::filesystem;

namespace vistra {

std::vector<std::string> TrainingHistory::metric_names() const {
    std::vector<std::string> names = {"loss"};
    std::set<std::string> seen = {"loss"};
    for (const auto& record : records)
        for (const auto& [key, value] : record.metrics) {
            if (key.rfind("val_", 0) == 0) continue;
            if (seen.insert(key).second) names.push_back(key);
        }
    return names;
}

int compute_patience(double fraction, int epochs) {
    if (fraction < 0.0 || fraction > 1.0)
        throw TrainError("early_stop fraction must lie in [0,1], got " + std::to_string(fraction));
    if (fraction == 0.0) return epochs;
    const int patience = static_cast<int>(std::llround(fraction * epochs));
    return std::max(1, patience);
}

CheckpointStore::CheckpointStore(std::string dir, std::string monitor, bool save_files)
    : dir_(std::move(dir)), monitor_(std::move(monitor)), save_files_(save_files) {
    if (monitor_.empty()) throw TrainError("monitored metric name must not be empty");
    direction_ = monitor_.find("loss") != std::string::npos ? "min" : "max";
    if (save_files_) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec || !fs::is_directory(dir_))
            throw TrainError("checkpoint directory '" + dir_ + "' is not writable: " +
                             (ec ? ec.message() : "not a directory"));
    }
}

double CheckpointStore::best_value() const {
    if (!has_best()) throw TrainError("checkpoint store holds no best value yet");
    return best_value_;
}

const nn::WeightMap& CheckpointStore::best_weights() const {
    if (!has_best()) throw TrainError("checkpoint store holds no best weights yet");
    return best_weights_;
}

bool CheckpointStore::offer(int epoch, double value, nn::Network& net) {
    const bool improved =
        !has_best() || (direction_ == "min" ? value < best_value_ : value > best_value_);
    if (!improved) return false;
    best_value_ = value;
    best_epoch_ = epoch;
    best_weights_ = net.weight_snapshot();
    if (save_files_) {
        const std::string file =
            (fs::path(dir_) / ("weights_best_" + monitor_ + "_" + std::to_string(epoch) + ".wts"))
                .string();
        nn::write_weight_map(file, best_weights_);
        best_file_ = file;
    }
    return true;
}

void CheckpointStore::restore_best(nn::Network& net) const {
    if (!has_best())
        throw TrainError("cannot restore best weights: no checkpoint was recorded for '" +
                         monitor_ + "'");
    net.restore_weights(best_weights_);
}

namespace {

// Per-class-id loss weights from the train split counts (identity when class
// weighting is off).
std::vector<double> class_id_weights(const DatasetBundle& data, bool enabled) {
    const auto& task = data.task();
    std::vector<double> weights(static_cast<std::size_t>(task.num_classes), 1.0);
    if (!enabled) return weights;
    std::vector<std::string> id_to_label(static_cast<std::size_t>(task.num_classes));
    for (const auto& [label, id] : task.class_index)
        id_to_label[static_cast<std::size_t>(id)] = label;
    std::map<std::string, std::int64_t> counts;
    for (const auto& file : data.split_index("train"))
        ++counts[id_to_label[static_cast<std::size_t>(file.label)]];
    const auto by_label = compute_class_weights(counts);
    for (const auto& [label, w] : by_label)
        weights[static_cast<std::size_t>(task.class_index.at(label))] = w;
    return weights;
}

std::vector<float> batch_sample_weights(const Tensor& labels, const TaskSpec& task,
                                        const std::vector<double>& id_weights) {
    const auto ids = label_ids(labels, task);
    std::vector<float> out(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
        out[i] = static_cast<float>(id_weights[static_cast<std::size_t>(ids[i])]);
    return out;
}

// Adds the L2 kernel penalties (2*lambda*w) into the dense gradients and
// returns the penalty term lambda*sum(w^2) for loss reporting.
double apply_l2(BuiltModel& model) {
    double penalty = 0.0;
    for (int i = 0; i < model.net.layer_count(); ++i) {
        auto* dense = dynamic_cast<nn::Dense*>(model.net.layer(i));
        if (!dense || !dense->trainable() || dense->l2_strength() <= 0.0) continue;
        const float lambda = static_cast<float>(dense->l2_strength());
        for (std::int64_t j = 0; j < dense->weight.size(); ++j) {
            const float w = dense->weight.data[static_cast<std::size_t>(j)];
            dense->dweight.data[static_cast<std::size_t>(j)] += 2.0f * lambda * w;
            penalty += static_cast<double>(lambda) * w * w;
        }
    }
    return penalty;
}

void check_metrics_computable(const ExperimentConfig& config, const TaskSpec& task) {
    for (const auto& name : config.training.metrics) normalize_metric(name, task);
    std::string base = config.saving.save_best_weights;
    if (base.rfind("val_", 0) == 0) base = base.substr(4);
    if (base != "loss" &&
        std::find(config.training.metrics.begin(), config.training.metrics.end(), base) ==
            config.training.metrics.end())
        throw TrainError("monitored metric '" + config.saving.save_best_weights +
                         "' is neither 'loss' nor one of the configured training metrics");
}

MetricRecord validation_record(BuiltModel& model, const DatasetBundle& data,
                               const std::vector<std::string>& metric_names, int epoch,
                               const ValEvaluator& val_override) {
    if (val_override) return val_override(model, epoch);
    return evaluate_split(model, data, "val", metric_names).metrics;
}

// One full phase of epochs ("warm" or "main"); checkpointing and early
// stopping apply only when a store is given (main phase).
TrainingHistory run_phase(BuiltModel& model, DatasetBundle& data, const ExperimentConfig& config,
                          const std::vector<CallbackHook>& callbacks, CheckpointStore* store,
                          std::uint64_t seed, const std::string& phase, int epochs,
                          const ValEvaluator& val_override) {
    check_metrics_computable(config, data.task());
    const auto& task = data.task();

    auto optimizer = nn::build_optimizer(config.training.optimizer_name,
                                         config.training.learning_rate,
                                         config.training.add_optimizer_params);
    const auto id_weights = class_id_weights(data, config.training.class_weights);
    std::vector<MetricComputer> computers;
    for (const auto& name : config.training.metrics)
        computers.push_back(normalize_metric(name, task));

    auto shuffle_rng = make_rng(seed, "shuffle/" + phase);
    auto augment_rng = make_rng(seed, "augmentation/" + phase);
    const bool augment = !data.plan().identity();
    const int patience = store ? compute_patience(config.training.early_stop,
                                                  config.training.epochs)
                               : 0;

    TrainingHistory history;
    int non_improving = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();

        double weighted_loss_sum = 0.0;  // sum over samples of w_i * l_i (+ penalty share)
        std::int64_t seen = 0;
        std::vector<int> epoch_true, epoch_pred;
        for (const auto& positions : data.batch_positions("train", &shuffle_rng)) {
            const Batch batch = data.load_batch("train", positions, augment, &augment_rng);
            const Tensor probs = model.net.forward(batch.images, /*training=*/true);

            const auto sample_weights = batch_sample_weights(batch.labels, task, id_weights);
            auto loss = nn::compute_loss(task.loss_name, probs, batch.labels, sample_weights);

            model.net.zero_grads();
            model.net.backward(loss.dprobs);
            const double penalty = apply_l2(model);
            optimizer->step(model.net.params(/*trainable_only=*/true));

            const auto n = static_cast<double>(positions.size());
            weighted_loss_sum += (loss.loss + penalty) * n;
            seen += static_cast<std::int64_t>(positions.size());
            const auto t = label_ids(batch.labels, task);
            const auto p = argmax_labels(probs, task);
            epoch_true.insert(epoch_true.end(), t.begin(), t.end());
            epoch_pred.insert(epoch_pred.end(), p.begin(), p.end());
        }

        EpochRecord record;
        record.epoch = epoch;
        record.phase = phase;
        record.metrics["loss"] = weighted_loss_sum / static_cast<double>(seen);
        const auto train_confusion = confusion(epoch_true, epoch_pred, task.num_classes);
        for (const auto& computer : computers)
            record.metrics[computer.name()] = computer.from_confusion(train_confusion);

        const MetricRecord val =
            validation_record(model, data, config.training.metrics, epoch, val_override);
        for (const auto& [key, value] : val) record.metrics["val_" + key] = value;

        record.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        history.records.push_back(record);

        for (const auto& callback : callbacks)
            if (callback.fn) callback.fn(epoch, record.metrics);

        if (store) {
            auto it = record.metrics.find(store->monitor());
            if (it == record.metrics.end())
                throw TrainError("monitored metric '" + store->monitor() +
                                 "' missing from the epoch record");
            const bool improved = store->offer(epoch, it->second, model.net);
            non_improving = improved ? 0 : non_improving + 1;
            if (non_improving >= patience) break;
        }
    }
    return history;
}

}  // namespace

TrainingHistory warm_pretrain(BuiltModel& model, DatasetBundle& data,
                              const ExperimentConfig& config, int epochs, std::uint64_t seed,
                              const std::vector<CallbackHook>& callbacks,
                              const ValEvaluator& val_override) {
    if (epochs < 0) throw TrainError("warm_pretrain_epochs must be >= 0");
    if (epochs == 0) return {};

    // Freeze the whole backbone for the warm phase; restore the configured
    // mask afterwards no matter how the phase ends.
    std::vector<bool> saved_mask;
    for (int i = 0; i < model.backbone_layer_count; ++i) {
        saved_mask.push_back(model.net.layer(i)->trainable());
        model.net.layer(i)->set_trainable(false);
    }
    TrainingHistory history;
    try {
        history = run_phase(model, data, config, callbacks, nullptr, seed, "warm", epochs,
                            val_override);
    } catch (...) {
        for (int i = 0; i < model.backbone_layer_count; ++i)
            model.net.layer(i)->set_trainable(saved_mask[static_cast<std::size_t>(i)]);
        throw;
    }
    for (int i = 0; i < model.backbone_layer_count; ++i)
        model.net.layer(i)->set_trainable(saved_mask[static_cast<std::size_t>(i)]);
    return history;
}

TrainingHistory train(BuiltModel& model, DatasetBundle& data, const ExperimentConfig& config,
                      const std::vector<CallbackHook>& callbacks, CheckpointStore& store,
                      std::uint64_t seed, const ValEvaluator& val_override) {
    return run_phase(model, data, config, callbacks, &store, seed, "main",
                     config.training.epochs, val_override);
}

}  // namespace vistra
