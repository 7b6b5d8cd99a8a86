#include "vistra/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "vistra/error.hpp"
#include "vistra/nn/loss.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vistra {

Tensor predict_split(BuiltModel& model, const DatasetBundle& data, const std::string& split) {
    const auto& files = data.split_index(split);
    const int n = static_cast<int>(files.size());
    const int width = model.task.output_units;
    Tensor probs({n, width});
    int row = 0;
    for (const auto& positions : data.batch_positions(split)) {
        const Batch batch = data.load_batch(split, positions, /*augment=*/false);
        const Tensor out = model.net.forward(batch.images, /*training=*/false);
        std::copy(out.data.begin(), out.data.end(),
                  probs.data.begin() + probs.idx2(row, 0));
        row += static_cast<int>(positions.size());
    }
    return probs;
}

SplitEvaluation evaluate_split(BuiltModel& model, const DatasetBundle& data,
                               const std::string& split,
                               const std::vector<std::string>& metric_names) {
    const auto& task = model.task;
    const auto& files = data.split_index(split);

    const Tensor probs = predict_split(model, data, split);
    std::vector<int> y_true;
    y_true.reserve(files.size());
    for (const auto& file : files) y_true.push_back(file.label);
    const Tensor labels = data.encode_labels(y_true);

    SplitEvaluation result;
    // Validation/test losses are never class-weighted.
    result.metrics["loss"] = nn::compute_loss(task.loss_name, probs, labels, {}).loss;
    result.confusion = confusion(y_true, argmax_labels(probs, task), task.num_classes);
    for (const auto& name : metric_names) {
        const auto computer = normalize_metric(name, task);
        result.metrics[computer.name()] = computer.from_confusion(result.confusion);
    }
    return result;
}

EvaluationReport auto_evaluate(BuiltModel& model, const CheckpointStore& store,
                               const DatasetBundle& data, bool auto_mode,
                               const std::vector<std::string>& metric_names) {
    if (auto_mode) {
        if (!store.has_best())
            throw EvalError("auto_mode evaluation requires a recorded checkpoint for '" +
                            store.monitor() + "', but none exists");
        store.restore_best(model.net);
    }
    EvaluationReport report;
    report.class_index = model.task.class_index;
    for (const std::string split : {"val", "test", "external_test"}) {
        if (!data.has_split(split)) continue;
        auto evaluation = evaluate_split(model, data, split, metric_names);
        report.metrics[split] = std::move(evaluation.metrics);
        report.confusions[split] = std::move(evaluation.confusion);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Plot rendering

namespace {

constexpr int kPlotW = 800, kPlotH = 600;
constexpr int kMarginL = 80, kMarginR = 30, kMarginT = 50, kMarginB = 60;
const cv::Scalar kTrainColor(180, 119, 31);  // BGR
const cv::Scalar kValColor(14, 127, 255);
const cv::Scalar kGrid(220, 220, 220);
const cv::Scalar kBlack(0, 0, 0);

std::string format_value(double v) {
    std::ostringstream out;
    out.precision(4);
    out << v;
    return out.str();
}

struct Axes {
    cv::Mat canvas;
    double x0, x1, y0, y1;
    int px(double x) const {
        const double t = x1 > x0 ? (x - x0) / (x1 - x0) : 0.5;
        return kMarginL + static_cast<int>(std::lround(t * (kPlotW - kMarginL - kMarginR)));
    }
    int py(double y) const {
        const double t = y1 > y0 ? (y - y0) / (y1 - y0) : 0.5;
        return kPlotH - kMarginB -
               static_cast<int>(std::lround(t * (kPlotH - kMarginT - kMarginB)));
    }
};

Axes make_axes(const std::string& title, double x0, double x1, double y0, double y1) {
    if (y1 <= y0) {
        const double pad = std::abs(y0) > 0 ? std::abs(y0) * 0.1 : 0.5;
        y0 -= pad;
        y1 = y0 + 2 * pad;
    } else {
        const double pad = (y1 - y0) * 0.08;
        y0 -= pad;
        y1 += pad;
    }
    Axes ax{cv::Mat(kPlotH, kPlotW, CV_8UC3, cv::Scalar(255, 255, 255)), x0, x1, y0, y1};
    // y grid lines + labels
    for (int i = 0; i <= 5; ++i) {
        const double y = ax.y0 + (ax.y1 - ax.y0) * i / 5.0;
        cv::line(ax.canvas, {kMarginL, ax.py(y)}, {kPlotW - kMarginR, ax.py(y)}, kGrid, 1);
        cv::putText(ax.canvas, format_value(y), {8, ax.py(y) + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.4,
                    kBlack, 1, cv::LINE_AA);
    }
    // x ticks at integer epochs
    const int epochs = static_cast<int>(x1 - x0) + 1;
    const int step = std::max(1, epochs / 10);
    for (int e = 0; e <= static_cast<int>(x1); e += step) {
        cv::line(ax.canvas, {ax.px(e), kPlotH - kMarginB}, {ax.px(e), kPlotH - kMarginB + 5},
                 kBlack, 1);
        cv::putText(ax.canvas, std::to_string(e), {ax.px(e) - 6, kPlotH - kMarginB + 22},
                    cv::FONT_HERSHEY_SIMPLEX, 0.4, kBlack, 1, cv::LINE_AA);
    }
    cv::rectangle(ax.canvas, {kMarginL, kMarginT}, {kPlotW - kMarginR, kPlotH - kMarginB},
                  kBlack, 1);
    cv::putText(ax.canvas, title, {kMarginL, kMarginT - 16}, cv::FONT_HERSHEY_SIMPLEX, 0.7,
                kBlack, 1, cv::LINE_AA);
    cv::putText(ax.canvas, "epoch", {kPlotW / 2 - 24, kPlotH - 14}, cv::FONT_HERSHEY_SIMPLEX,
                0.45, kBlack, 1, cv::LINE_AA);
    return ax;
}

void draw_series(Axes& ax, const std::vector<std::pair<int, double>>& points,
                 const cv::Scalar& color) {
    for (std::size_t i = 0; i + 1 < points.size(); ++i)
        cv::line(ax.canvas, {ax.px(points[i].first), ax.py(points[i].second)},
                 {ax.px(points[i + 1].first), ax.py(points[i + 1].second)}, color, 2,
                 cv::LINE_AA);
    for (const auto& [x, y] : points)
        cv::circle(ax.canvas, {ax.px(x), ax.py(y)}, 3, color, cv::FILLED, cv::LINE_AA);
}

void draw_phase_separator(Axes& ax, int warm_epochs) {
    if (warm_epochs <= 0) return;
    const double x = warm_epochs - 0.5;
    for (int y = kMarginT; y < kPlotH - kMarginB; y += 10)
        cv::line(ax.canvas, {ax.px(x), y}, {ax.px(x), std::min(y + 5, kPlotH - kMarginB)},
                 cv::Scalar(120, 120, 120), 1);
    cv::putText(ax.canvas, "warm | main", {ax.px(x) - 48, kMarginT + 16},
                cv::FONT_HERSHEY_SIMPLEX, 0.4, cv::Scalar(120, 120, 120), 1, cv::LINE_AA);
}

void draw_legend(Axes& ax) {
    const int x = kPlotW - kMarginR - 130, y = kMarginT + 18;
    cv::line(ax.canvas, {x, y - 4}, {x + 24, y - 4}, kTrainColor, 2);
    cv::putText(ax.canvas, "train", {x + 30, y}, cv::FONT_HERSHEY_SIMPLEX, 0.45, kBlack, 1,
                cv::LINE_AA);
    cv::line(ax.canvas, {x, y + 16}, {x + 24, y + 16}, kValColor, 2);
    cv::putText(ax.canvas, "val", {x + 30, y + 20}, cv::FONT_HERSHEY_SIMPLEX, 0.45, kBlack, 1,
                cv::LINE_AA);
}

// (global epoch, value) points for one metric key across warm+main records.
std::vector<std::pair<int, double>> series_points(const TrainingHistory& history,
                                                  const std::string& key) {
    std::vector<std::pair<int, double>> points;
    for (std::size_t i = 0; i < history.records.size(); ++i) {
        auto it = history.records[i].metrics.find(key);
        if (it != history.records[i].metrics.end())
            points.emplace_back(static_cast<int>(i), it->second);
    }
    return points;
}

void write_canvas(const cv::Mat& canvas, const std::string& path) {
    if (!cv::imwrite(path, canvas)) throw EvalError("failed to write plot file '" + path + "'");
}

int warm_epoch_count(const TrainingHistory& history) {
    int n = 0;
    for (const auto& record : history.records)
        if (record.phase == "warm") ++n;
    return n;
}

}  // namespace

std::vector<std::string> render_curves(const TrainingHistory& history, const std::string& out_dir,
                                       bool min_max_plot) {
    if (history.empty()) throw EvalError("cannot render curves from an empty history");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir))
        throw EvalError("plot directory '" + out_dir + "' is not writable");

    const auto metric_names = history.metric_names();
    const int warm = warm_epoch_count(history);
    const double x1 = static_cast<double>(history.records.size() - 1);

    std::vector<std::string> written;
    for (const auto& metric : metric_names) {
        const auto train_pts = series_points(history, metric);
        const auto val_pts = series_points(history, "val_" + metric);
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& [x, y] : train_pts) lo = std::min(lo, y), hi = std::max(hi, y);
        for (const auto& [x, y] : val_pts) lo = std::min(lo, y), hi = std::max(hi, y);
        if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;

        Axes ax = make_axes(metric, 0.0, std::max(x1, 1.0), lo, hi);
        draw_phase_separator(ax, warm);
        draw_series(ax, train_pts, kTrainColor);
        draw_series(ax, val_pts, kValColor);
        draw_legend(ax);
        const std::string path = (fs::path(out_dir) / ("curve_" + metric + ".png")).string();
        write_canvas(ax.canvas, path);
        written.push_back(path);
    }

    if (min_max_plot) {
        // Validation-series extrema, one band per metric.
        const int band = 150;
        const int height = kMarginT + band * static_cast<int>(metric_names.size()) + 30;
        cv::Mat canvas(height, kPlotW, CV_8UC3, cv::Scalar(255, 255, 255));
        cv::putText(canvas, "validation extrema", {kMarginL, 30}, cv::FONT_HERSHEY_SIMPLEX, 0.7,
                    kBlack, 1, cv::LINE_AA);
        int top = kMarginT;
        for (const auto& metric : metric_names) {
            const auto pts = series_points(history, "val_" + metric);
            cv::rectangle(canvas, {kMarginL, top + 10}, {kPlotW - kMarginR, top + band - 30},
                          kGrid, 1);
            if (!pts.empty()) {
                auto min_it = std::min_element(pts.begin(), pts.end(),
                                               [](auto& a, auto& b) { return a.second < b.second; });
                auto max_it = std::max_element(pts.begin(), pts.end(),
                                               [](auto& a, auto& b) { return a.second < b.second; });
                const double lo = min_it->second, hi = max_it->second;
                const double span = hi > lo ? hi - lo : 1.0;
                auto px = [&](int e) {
                    return kMarginL + 10 +
                           static_cast<int>((kPlotW - kMarginL - kMarginR - 20) *
                                            (pts.size() > 1
                                                 ? static_cast<double>(e) /
                                                       static_cast<double>(pts.size() - 1)
                                                 : 0.5));
                };
                auto py = [&](double v) {
                    return top + band - 40 -
                           static_cast<int>((band - 60) * (v - lo + 0.05 * span) / (1.1 * span));
                };
                for (std::size_t i = 0; i + 1 < pts.size(); ++i)
                    cv::line(canvas, {px(pts[i].first), py(pts[i].second)},
                             {px(pts[i + 1].first), py(pts[i + 1].second)}, kValColor, 2,
                             cv::LINE_AA);
                cv::circle(canvas, {px(min_it->first), py(lo)}, 5, cv::Scalar(60, 160, 60), 2,
                           cv::LINE_AA);
                cv::circle(canvas, {px(max_it->first), py(hi)}, 5, cv::Scalar(60, 60, 200), 2,
                           cv::LINE_AA);
                cv::putText(canvas,
                            "val_" + metric + "  min " + format_value(lo) + " @ epoch " +
                                std::to_string(min_it->first) + "   max " + format_value(hi) +
                                " @ epoch " + std::to_string(max_it->first),
                            {kMarginL, top + band - 12}, cv::FONT_HERSHEY_SIMPLEX, 0.45, kBlack,
                            1, cv::LINE_AA);
            } else {
                cv::putText(canvas, "val_" + metric + "  (no data)", {kMarginL, top + band - 12},
                            cv::FONT_HERSHEY_SIMPLEX, 0.45, kBlack, 1, cv::LINE_AA);
            }
            top += band;
        }
        const std::string path = (fs::path(out_dir) / "minmax.png").string();
        write_canvas(canvas, path);
        written.push_back(path);
    }
    return written;
}

std::vector<std::string> render_confusions(const EvaluationReport& report,
                                           const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir))
        throw EvalError("plot directory '" + out_dir + "' is not writable");

    // id -> label text for the axes
    std::vector<std::string> labels(report.class_index.size());
    for (const auto& [label, id] : report.class_index)
        labels[static_cast<std::size_t>(id)] = label;

    std::vector<std::string> written;
    for (const auto& [split, matrix] : report.confusions) {
        const int k = static_cast<int>(matrix.size());
        const int cell = std::max(40, std::min(120, 480 / std::max(1, k)));
        const int grid = cell * k;
        const int ml = 110, mt = 70;
        cv::Mat canvas(mt + grid + 40, ml + grid + 30, CV_8UC3, cv::Scalar(255, 255, 255));
        cv::putText(canvas, "confusion: " + split, {ml, 30}, cv::FONT_HERSHEY_SIMPLEX, 0.7,
                    kBlack, 1, cv::LINE_AA);

        std::int64_t max_count = 1;
        for (const auto& row : matrix)
            for (auto v : row) max_count = std::max(max_count, v);
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) {
                const auto count = matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                const double t = static_cast<double>(count) / static_cast<double>(max_count);
                // light -> saturated blue fill
                const auto fill = cv::Scalar(255 - 175 * t, 255 - 136 * t, 255 - 224 * t);
                const cv::Rect rect(ml + j * cell, mt + i * cell, cell, cell);
                cv::rectangle(canvas, rect, fill, cv::FILLED);
                cv::rectangle(canvas, rect, kGrid, 1);
                cv::putText(canvas, std::to_string(count),
                            {ml + j * cell + cell / 2 - 8, mt + i * cell + cell / 2 + 5},
                            cv::FONT_HERSHEY_SIMPLEX, 0.45, t > 0.55 ? cv::Scalar(255, 255, 255)
                                                                     : kBlack,
                            1, cv::LINE_AA);
            }
            const std::string name =
                static_cast<std::size_t>(i) < labels.size() ? labels[static_cast<std::size_t>(i)]
                                                            : std::to_string(i);
            cv::putText(canvas, name, {8, mt + i * cell + cell / 2 + 5},
                        cv::FONT_HERSHEY_SIMPLEX, 0.4, kBlack, 1, cv::LINE_AA);
            cv::putText(canvas, name, {ml + i * cell + 4, mt + grid + 22},
                        cv::FONT_HERSHEY_SIMPLEX, 0.4, kBlack, 1, cv::LINE_AA);
        }
        cv::putText(canvas, "predicted", {ml + grid / 2 - 36, mt - 12},
                    cv::FONT_HERSHEY_SIMPLEX, 0.45, kBlack, 1, cv::LINE_AA);

        const std::string path = (fs::path(out_dir) / ("confusion_" + split + ".png")).string();
        write_canvas(canvas, path);
        written.push_back(path);
    }
    return written;
}

// ---------------------------------------------------------------------------
// Results bundle

ResultsBundle build_results(const ExperimentConfig& config, const TrainingHistory& history,
                            const EvaluationReport& report, const CheckpointStore& store,
                            const std::vector<std::string>& plot_paths) {
    if (!store.has_best())
        throw EvalError("cannot assemble results: training recorded no checkpoint");

    ResultsBundle bundle;
    bundle.config_snapshot = snapshot(config);
    bundle.history = history;
    bundle.report = report;
    bundle.monitor = store.monitor();
    bundle.best_epoch = store.best_epoch();
    bundle.best_value = store.best_value();
    bundle.best_weights = store.best_weights();
    bundle.best_weights_filename =
        "weights_best_" + store.monitor() + "_" + std::to_string(store.best_epoch()) + ".wts";

    for (const auto& record : history.records)
        if (record.phase == "main" && record.epoch == store.best_epoch())
            bundle.best_epoch_record = record.metrics;

    bundle.artifacts["plots"] = plot_paths;
    if (!store.best_file().empty()) bundle.artifacts["weights"] = {store.best_file()};

    for (const auto& [kind, paths] : bundle.artifacts)
        for (const auto& path : paths)
            if (!fs::exists(path))
                throw EvalError("results bundle references missing " + kind + " artifact '" +
                                path + "'");
    return bundle;
}

json results_to_json(const ResultsBundle& bundle) {
    json doc;
    doc["schema_version"] = 1;
    doc["config"] = bundle.config_snapshot;
    doc["class_index"] = bundle.report.class_index;

    doc["history"] = json::array();
    for (const auto& record : bundle.history.records) {
        json r;
        r["epoch"] = record.epoch;
        r["phase"] = record.phase;
        r["seconds"] = record.seconds;
        r["metrics"] = record.metrics;
        doc["history"].push_back(std::move(r));
    }

    doc["evaluation"]["metrics"] = bundle.report.metrics;
    auto& confusions = doc["evaluation"]["confusion"];
    confusions = json::object();
    for (const auto& [split, matrix] : bundle.report.confusions) confusions[split] = matrix;

    doc["best"] = {{"monitor", bundle.monitor},
                   {"epoch", bundle.best_epoch},
                   {"value", bundle.best_value},
                   {"record", bundle.best_epoch_record},
                   {"weights_file", bundle.best_weights_filename}};
    doc["artifacts"] = bundle.artifacts;
    return doc;
}

ResultsBundle results_from_json(const json& doc) {
    ResultsBundle bundle;
    try {
        bundle.config_snapshot = doc.at("config");
        bundle.report.class_index =
            doc.at("class_index").get<std::map<std::string, int>>();
        for (const auto& r : doc.at("history")) {
            EpochRecord record;
            record.epoch = r.at("epoch").get<int>();
            record.phase = r.at("phase").get<std::string>();
            record.seconds = r.at("seconds").get<double>();
            record.metrics = r.at("metrics").get<MetricRecord>();
            bundle.history.records.push_back(std::move(record));
        }
        bundle.report.metrics =
            doc.at("evaluation").at("metrics").get<std::map<std::string, MetricRecord>>();
        bundle.report.confusions = doc.at("evaluation")
                                       .at("confusion")
                                       .get<std::map<std::string, ConfusionMatrix>>();
        const auto& best = doc.at("best");
        bundle.monitor = best.at("monitor").get<std::string>();
        bundle.best_epoch = best.at("epoch").get<int>();
        bundle.best_value = best.at("value").get<double>();
        bundle.best_epoch_record = best.at("record").get<MetricRecord>();
        bundle.best_weights_filename = best.at("weights_file").get<std::string>();
        bundle.artifacts =
            doc.at("artifacts").get<std::map<std::string, std::vector<std::string>>>();
    } catch (const json::exception& e) {
        throw EvalError(std::string("malformed results document: ") + e.what());
    }
    return bundle;
}

}  // namespace vistra
