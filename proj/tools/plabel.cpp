// plabel: command-line driver for the experiments, metrics and plotting.
//
// Exit codes: 0 success, 1 computation or I/O failure, 2 usage/config error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

#include "plabel/error.hpp"
#include "plabel/experiments.hpp"
#include "plabel/format.hpp"
#include "plabel/io.hpp"
#include "plabel/metrics.hpp"
#include "plabel/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace plabel;

namespace {

constexpr const char* kVersion = "1.0.0";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string out = "plabel_out";
    std::string config_path;
    std::optional<std::size_t> reps;
    std::string lambda_grid;
    bool quiet = false;
    bool parallel = false;
};

Globals g;

void log(const std::string& msg) {
    if (!g.quiet) std::cerr << msg << '\n';
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Loads --config. A manifest written by a previous run is accepted too; its
// embedded config is used after checking the stored hash.
json load_config(const std::string& command) {
    if (g.config_path.empty()) return json::object();
    if (!fs::exists(g.config_path)) throw UsageError("config file not found: " + g.config_path);
    json doc;
    try {
        doc = json::parse(read_text_file(g.config_path));
    } catch (const json::exception& e) {
        throw UsageError("config is not valid JSON: " + std::string(e.what()));
    }
    if (!doc.is_object()) throw UsageError("config must be a JSON object");
    if (doc.contains("config_hash")) {
        if (doc.value("command", "") != command)
            throw UsageError("manifest is for '" + doc.value("command", "?") + "', not '" + command + "'");
        json cfg = doc.at("config");
        if (hex(fnv1a(cfg.dump())) != doc.at("config_hash").get<std::string>())
            throw UsageError("manifest config does not match its hash");
        return cfg;
    }
    return doc;
}

void reject_unknown(const json& cfg, const std::set<std::string>& allowed) {
    for (auto it = cfg.begin(); it != cfg.end(); ++it)
        if (!allowed.count(it.key())) throw UsageError("unknown config key '" + it.key() + "'");
}

template <typename T>
void take(const json& cfg, const char* key, T& into) {
    if (!cfg.contains(key)) return;
    try {
        into = cfg.at(key).get<T>();
    } catch (const json::exception&) {
        throw UsageError(std::string("config key '") + key + "' has the wrong type");
    }
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(parse_double(item, 0));
        } catch (const plabel::ParseError&) {
            throw UsageError("bad --lambda-grid entry '" + item + "'");
        }
        if (!(out.back() >= 0.0)) throw UsageError("lambda values must be non-negative");
    }
    if (out.empty()) throw UsageError("--lambda-grid is empty");
    return out;
}

fs::path prepare_out() {
    const fs::path out = g.out;
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) throw IoError("cannot create output directory " + out.string());
    return out;
}

void write_manifest(const fs::path& out, const std::string& command, const json& cfg,
                    const std::vector<std::string>& outputs) {
    json m;
    m["command"] = command;
    m["config"] = cfg;
    m["config_hash"] = hex(fnv1a(cfg.dump()));
    m["seed"] = cfg.value("seed", json(nullptr));
    m["outputs"] = outputs;
    m["versions"] = {{"plabel", kVersion}, {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                                         std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                                         std::to_string(EIGEN_MINOR_VERSION)}};
    write_text_file(out / "manifest.json", m.dump(2) + "\n");
}

// ---------------------------------------------------------------- experiment1

std::vector<std::size_t> range(std::size_t lo, std::size_t hi, std::size_t step) {
    std::vector<std::size_t> v;
    for (std::size_t x = lo; x <= hi; x += step) v.push_back(x);
    return v;
}

std::vector<LineSeries> to_lines(const SweepResult& r) {
    std::vector<LineSeries> lines;
    for (const auto& s : r.series) lines.push_back({std::string(to_string(s.strategy)), r.axis, s.mean});
    return lines;
}

int cmd_experiment1() {
    json cfg = load_config("experiment1");
    reject_unknown(cfg, {"seed", "reps", "n_values", "majority", "minority_values", "test_counts", "strategies",
                         "epochs", "learning_rate", "lambda_grid", "folds", "cv_min_n", "fallback_lambda",
                         "standardize", "parallel", "example_n"});
    SweepConfig sc;
    std::vector<std::size_t> n_values = range(2, 60, 2), minority = range(1, 10, 1);
    std::size_t majority = 10, example_n = 60;
    std::vector<std::string> strategies;
    for (auto s : sc.strategies) strategies.emplace_back(to_string(s));
    std::uint64_t seed = sc.seed.value;

    take(cfg, "seed", seed);
    take(cfg, "reps", sc.reps);
    take(cfg, "n_values", n_values);
    take(cfg, "majority", majority);
    take(cfg, "minority_values", minority);
    take(cfg, "test_counts", sc.test_counts);
    take(cfg, "strategies", strategies);
    take(cfg, "epochs", sc.classifier.epochs);
    take(cfg, "learning_rate", sc.classifier.learning_rate);
    take(cfg, "lambda_grid", sc.lambda_grid);
    take(cfg, "folds", sc.folds);
    take(cfg, "cv_min_n", sc.cv_min_n);
    take(cfg, "fallback_lambda", sc.fallback_lambda);
    take(cfg, "standardize", sc.standardize);
    take(cfg, "example_n", example_n);
    bool parallel = cfg.value("parallel", false);
    if (g.seed) seed = *g.seed;
    if (g.reps) sc.reps = *g.reps;
    if (!g.lambda_grid.empty()) sc.lambda_grid = parse_grid(g.lambda_grid);
    if (g.parallel) parallel = true;

    sc.seed = Seed{seed};
    sc.policy = parallel ? ExecPolicy::parallel : ExecPolicy::serial;
    sc.strategies.clear();
    for (const auto& s : strategies) sc.strategies.push_back(parse_sweep_strategy(s));
    sc.classifier.validate();

    json resolved = {{"seed", seed},
                     {"reps", sc.reps},
                     {"n_values", n_values},
                     {"majority", majority},
                     {"minority_values", minority},
                     {"test_counts", sc.test_counts},
                     {"strategies", strategies},
                     {"epochs", sc.classifier.epochs},
                     {"learning_rate", sc.classifier.learning_rate},
                     {"lambda_grid", sc.lambda_grid},
                     {"folds", sc.folds},
                     {"cv_min_n", sc.cv_min_n},
                     {"fallback_lambda", sc.fallback_lambda},
                     {"standardize", sc.standardize},
                     {"parallel", parallel},
                     {"example_n", example_n}};

    const fs::path out = prepare_out();
    const MixtureSpec spec = experiment1_mixture();

    log("accuracy vs n: " + std::to_string(n_values.size()) + " sizes x " + std::to_string(sc.reps) + " reps");
    const SweepResult acc = run_accuracy_vs_n(spec, n_values, sc);
    write_text_file(out / "accuracy_vs_n.csv", sweep_csv(acc));
    write_text_file(out / "accuracy_vs_n.svg",
                    svg_line_plot(to_lines(acc), "Accuracy vs training size", "training instances", "accuracy"));

    log("ECE vs imbalance: " + std::to_string(minority.size()) + " ratios x " + std::to_string(sc.reps) + " reps");
    const SweepResult ece = run_imbalance_vs_ece(spec, majority, minority, sc);
    write_text_file(out / "ece_vs_imbalance.csv", sweep_csv(ece));
    write_text_file(out / "ece_vs_imbalance.svg",
                    svg_line_plot(to_lines(ece), "Calibration vs class imbalance", "minority / majority", "ECE"));

    // two example models for the boundary command: hard vs correct soft labels
    std::vector<std::string> outputs{"accuracy_vs_n.csv", "accuracy_vs_n.svg", "ece_vs_imbalance.csv",
                                     "ece_vs_imbalance.svg"};
    if (example_n > 0) {
        if (example_n % 2) throw UsageError("example_n must be even");
        const std::size_t counts[2] = {example_n / 2, example_n / 2};
        Dataset train_set = sample_mixture(spec, counts, derive_seed(sc.seed, {7}));
        std::vector<ClassDistribution> post;
        for (const auto& x : train_set.features()) post.push_back(true_posterior(spec, x.values()));
        train_set = train_set.with_soft_labels(std::move(post));
        const auto net = NetworkSpec::logistic(2);
        for (auto [name, strategy] : {std::pair{"hard", LabelStrategy::hard},
                                      std::pair{"prob", LabelStrategy::probabilistic}}) {
            TrainConfig tc = sc.classifier;
            tc.seed = derive_seed(sc.seed, {8});
            tc.label_strategy = strategy;
            const auto trained = train(net, train_set, tc);
            const std::string file = std::string("example_model_") + name + ".json";
            write_text_file(out / file, to_json(net, trained.params).dump(2) + "\n");
            outputs.push_back(file);
        }
        write_dataset_csv(train_set, out / "example_train.csv");
        outputs.push_back("example_train.csv");
    }
    write_manifest(out, "experiment1", resolved, outputs);

    if (!g.quiet) {
        std::cout << "n      ";
        for (const auto& s : acc.series) std::printf("%16s", std::string(to_string(s.strategy)).c_str());
        std::cout << '\n';
        for (std::size_t a = 0; a < acc.axis.size(); ++a) {
            std::printf("%-7g", acc.axis[a]);
            for (const auto& s : acc.series) std::printf("%16.4f", s.mean[a]);
            std::cout << '\n';
        }
    }
    log("wrote " + out.string());
    return 0;
}

// -------------------------------------------------------------------- distill

int cmd_distill() {
    json cfg = load_config("distill");
    reject_unknown(cfg, {"seed", "n_images", "train_fraction", "height", "width", "offset_std", "noise_std",
                         "class0_prior", "epochs", "learning_rate", "batch_size", "epsilon", "lambda_grid", "folds",
                         "parallel"});
    DistillConfig dc;
    std::uint64_t seed = dc.seed.value;
    take(cfg, "seed", seed);
    take(cfg, "n_images", dc.n_images);
    take(cfg, "train_fraction", dc.train_fraction);
    take(cfg, "height", dc.images.height);
    take(cfg, "width", dc.images.width);
    take(cfg, "offset_std", dc.images.offset_std);
    take(cfg, "noise_std", dc.images.noise_std);
    take(cfg, "class0_prior", dc.images.class0_prior);
    take(cfg, "epochs", dc.cnn.epochs);
    take(cfg, "learning_rate", dc.cnn.learning_rate);
    take(cfg, "batch_size", dc.cnn.batch_size);
    take(cfg, "epsilon", dc.cnn.epsilon_smoothing);
    take(cfg, "lambda_grid", dc.lambda_grid);
    take(cfg, "folds", dc.folds);
    bool parallel = cfg.value("parallel", false);
    if (g.seed) seed = *g.seed;
    if (!g.lambda_grid.empty()) dc.lambda_grid = parse_grid(g.lambda_grid);
    if (g.parallel) parallel = true;
    if (g.reps) throw UsageError("--reps does not apply to distill");
    dc.seed = Seed{seed};
    dc.policy = parallel ? ExecPolicy::parallel : ExecPolicy::serial;
    if (dc.images.height != 32 || dc.images.width != 32) {
        // scale the default region layout with the image
        const std::size_t h = dc.images.height, w = dc.images.width;
        dc.images.rois = {{h / 8, w / 8, h / 4, w / 4}, {h / 8, w * 5 / 8, h / 4, w / 4},
                          {h * 5 / 8, w * 3 / 8, h / 4, w / 4}};
    }
    dc.images.validate();
    dc.cnn.validate();

    json resolved = {{"seed", seed},
                     {"n_images", dc.n_images},
                     {"train_fraction", dc.train_fraction},
                     {"height", dc.images.height},
                     {"width", dc.images.width},
                     {"offset_std", dc.images.offset_std},
                     {"noise_std", dc.images.noise_std},
                     {"class0_prior", dc.images.class0_prior},
                     {"epochs", dc.cnn.epochs},
                     {"learning_rate", dc.cnn.learning_rate},
                     {"batch_size", dc.cnn.batch_size},
                     {"epsilon", dc.cnn.epsilon_smoothing},
                     {"lambda_grid", dc.lambda_grid},
                     {"folds", dc.folds},
                     {"parallel", parallel}};

    const fs::path out = prepare_out();
    log("distillation: " + std::to_string(dc.n_images) + " images, " + std::to_string(dc.cnn.epochs) + " epochs");
    const DistillationResult r = run_distillation_experiment(dc);

    std::vector<std::string> outputs{"distill_table.csv", "distill_table.txt", "feature_model.json",
                                     "lambda_search.csv"};
    write_text_file(out / "distill_table.csv", distillation_table_csv(r));
    write_text_file(out / "distill_table.txt", distillation_table_text(r));
    write_text_file(out / "feature_model.json", to_json(r.feature_model).dump(2) + "\n");
    std::ostringstream ls;
    ls << "lambda,mean_accuracy,chosen\n";
    for (std::size_t i = 0; i < r.lambda_search.candidates.size(); ++i)
        ls << format_number(r.lambda_search.candidates[i]) << ',' << format_number(r.lambda_search.mean_accuracy[i])
           << ',' << (r.lambda_search.candidates[i] == r.lambda_search.chosen ? 1 : 0) << '\n';
    write_text_file(out / "lambda_search.csv", ls.str());

    for (const auto& s : r.strategies) {
        write_text_file(out / ("model_" + s.name + ".json"), to_json(r.spec, s.params).dump() + "\n");
        write_text_file(out / ("reliability_" + s.name + ".csv"), reliability_csv(s.metrics.reliability_rows));
        std::vector<double> conf, acc, diag{0.0, 1.0};
        for (const auto& row : s.metrics.reliability_rows)
            if (row.count > 0) {
                conf.push_back(row.mean_confidence);
                acc.push_back(row.empirical_accuracy);
            }
        const std::vector<LineSeries> lines{{"perfect calibration", diag, diag}, {s.name, conf, acc}};
        write_text_file(out / ("reliability_" + s.name + ".svg"),
                        svg_line_plot(lines, "Reliability (" + s.name + ")", "mean predicted probability",
                                      "empirical positive rate"));
        std::ostringstream trace;
        trace << "epoch,loss\n";
        for (std::size_t e = 0; e < s.loss_trace.size(); ++e) trace << e << ',' << format_number(s.loss_trace[e]) << '\n';
        write_text_file(out / ("loss_" + s.name + ".csv"), trace.str());
        for (const char* f : {"model_", "reliability_", "loss_"}) {
            const std::string base = std::string(f) + s.name;
            outputs.push_back(base + (f[0] == 'm' ? ".json" : ".csv"));
        }
        outputs.push_back("reliability_" + s.name + ".svg");
    }
    write_manifest(out, "distill", resolved, outputs);
    if (!g.quiet) std::cout << distillation_table_text(r) << "chosen lambda: " << r.lambda_search.chosen << '\n';
    log("wrote " + out.string());
    return 0;
}

// ------------------------------------------------------------------- evaluate

int cmd_evaluate(const std::string& input_flag) {
    json cfg = load_config("evaluate");
    reject_unknown(cfg, {"input", "bins", "groups"});
    std::string input;
    std::size_t bins = 10, groups = 10;
    take(cfg, "input", input);
    take(cfg, "bins", bins);
    take(cfg, "groups", groups);
    if (!input_flag.empty()) input = input_flag;
    if (input.empty()) throw UsageError("evaluate needs a predictions CSV");
    if (g.seed || g.reps || !g.lambda_grid.empty()) throw UsageError("--seed/--reps/--lambda-grid do not apply to evaluate");

    const CsvTable t = read_csv(input);
    const auto sc = t.column("score"), lc = t.column("label");
    if (!sc || !lc) throw plabel::ParseError("expected 'score' and 'label' columns", 1);
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const double s = parse_double(t.rows[r][*sc], t.lines[r]);
        const long long y = parse_int(t.rows[r][*lc], t.lines[r]);
        if (y != 0 && y != 1) throw plabel::ParseError("label must be 0 or 1", t.lines[r]);
        if (!(s >= 0.0 && s <= 1.0)) throw plabel::ParseError("score outside [0,1]", t.lines[r]);
        scores.push_back(s);
        labels.push_back(static_cast<int>(y));
    }
    if (scores.empty()) throw plabel::ParseError("no data rows", 1);
    const MetricsReport rep = evaluate_scores(scores, labels, bins, groups);
    if (!rep.auc) std::cerr << "warning: only one class present; AUC is undefined\n";

    json resolved = {{"input", input}, {"bins", bins}, {"groups", groups}};
    const fs::path out = prepare_out();
    write_text_file(out / "metrics.csv", metrics_csv(rep));
    write_text_file(out / "metrics.json", to_json(rep).dump(2) + "\n");
    write_text_file(out / "reliability.csv", reliability_csv(rep.reliability_rows));
    write_manifest(out, "evaluate", resolved, {"metrics.csv", "metrics.json", "reliability.csv"});

    std::cout << "accuracy " << format_number(rep.accuracy) << '\n'
              << "auc      " << (rep.auc ? format_number(*rep.auc) : "undefined") << '\n'
              << "ece      " << format_number(rep.ece) << '\n'
              << "hl       " << format_number(rep.hl_statistic) << '\n'
              << "n        " << rep.n << '\n';
    return 0;
}

// ------------------------------------------------------------------- boundary

int cmd_boundary(const std::string& model_flag) {
    json cfg = load_config("boundary");
    reject_unknown(cfg, {"model", "x_range", "y_range", "nx", "ny", "scatter"});
    std::string model_path, scatter;
    std::vector<double> xr{0.0, 9.0}, yr{0.0, 7.0};
    std::size_t nx = 91, ny = 71;
    take(cfg, "model", model_path);
    take(cfg, "x_range", xr);
    take(cfg, "y_range", yr);
    take(cfg, "nx", nx);
    take(cfg, "ny", ny);
    take(cfg, "scatter", scatter);
    if (!model_flag.empty()) model_path = model_flag;
    if (model_path.empty()) throw UsageError("boundary needs a model JSON");
    if (xr.size() != 2 || yr.size() != 2) throw UsageError("ranges need two values");
    if (g.seed || g.reps || !g.lambda_grid.empty()) throw UsageError("--seed/--reps/--lambda-grid do not apply to boundary");

    json doc;
    try {
        doc = json::parse(read_text_file(model_path));
    } catch (const json::exception& e) {
        throw UsageError("model file is not valid JSON: " + std::string(e.what()));
    }
    const auto [spec, params] = model_from_json(doc);
    Evaluator ev(spec);
    const auto grid = decision_boundary_grid(
        [&](std::span<const double> z) { return ev.forward(params, z)[1]; }, spec.input_shape().size(),
        {xr[0], xr[1]}, {yr[0], yr[1]}, nx, ny);

    std::vector<ScatterPoint> points;
    if (!scatter.empty()) {
        const Dataset d = read_dataset_csv(scatter);
        if (d.has_images() || d.features().front().size() != 2) throw UsageError("scatter data must be 2-D features");
        for (std::size_t i = 0; i < d.size(); ++i)
            points.push_back({d.features()[i][0], d.features()[i][1], static_cast<int>(d.hard_labels()[i])});
    }

    json resolved = {{"model", model_path}, {"x_range", xr}, {"y_range", yr}, {"nx", nx}, {"ny", ny}, {"scatter", scatter}};
    const fs::path out = prepare_out();
    write_text_file(out / "boundary.csv", boundary_csv(grid));
    write_text_file(out / "boundary.svg", svg_boundary_plot(grid, points, "Decision boundary: " + fs::path(model_path).stem().string()));
    write_manifest(out, "boundary", resolved, {"boundary.csv", "boundary.svg"});
    log("wrote " + out.string());
    return 0;
}

// ------------------------------------------------------------------ cv-lambda

int cmd_cv_lambda(const std::string& data_flag) {
    json cfg = load_config("cv-lambda");
    reject_unknown(cfg, {"data", "seed", "lambda_grid", "folds", "epochs", "learning_rate", "batch_size", "parallel"});
    std::string data;
    TrainConfig tc = SweepConfig::default_classifier_config();
    std::vector<double> grid = default_lambda_grid();
    std::size_t folds = 5;
    std::uint64_t seed = 20190901;
    take(cfg, "data", data);
    take(cfg, "seed", seed);
    take(cfg, "lambda_grid", grid);
    take(cfg, "folds", folds);
    take(cfg, "epochs", tc.epochs);
    take(cfg, "learning_rate", tc.learning_rate);
    take(cfg, "batch_size", tc.batch_size);
    bool parallel = cfg.value("parallel", false);
    if (!data_flag.empty()) data = data_flag;
    if (data.empty()) throw UsageError("cv-lambda needs a dataset CSV with soft-label columns");
    if (g.seed) seed = *g.seed;
    if (!g.lambda_grid.empty()) grid = parse_grid(g.lambda_grid);
    if (g.parallel) parallel = true;
    if (g.reps) throw UsageError("--reps does not apply to cv-lambda");
    tc.seed = Seed{seed};
    tc.validate();

    const Dataset d = read_dataset_csv(data);
    if (!d.has_soft_labels()) throw UsageError("dataset has no p0..p{K-1} soft-label columns");
    if (d.has_images()) throw UsageError("cv-lambda works on feature datasets");
    const auto net = NetworkSpec(Shape{d.features().front().size(), 1, 1},
                                 d.num_classes() == 2
                                     ? std::vector<LayerSpec>{DenseLayer{1}, ActivationLayer{Activation::sigmoid}}
                                     : std::vector<LayerSpec>{DenseLayer{d.num_classes()},
                                                              ActivationLayer{Activation::softmax}});
    const auto search = cross_validate_lambda(net, d, grid, folds, tc,
                                              parallel ? ExecPolicy::parallel : ExecPolicy::serial);

    json resolved = {{"data", data},       {"seed", seed},     {"lambda_grid", grid},
                     {"folds", folds},     {"epochs", tc.epochs}, {"learning_rate", tc.learning_rate},
                     {"batch_size", tc.batch_size}, {"parallel", parallel}};
    const fs::path out = prepare_out();
    std::ostringstream ls;
    ls << "lambda,mean_accuracy,chosen\n";
    for (std::size_t i = 0; i < search.candidates.size(); ++i)
        ls << format_number(search.candidates[i]) << ',' << format_number(search.mean_accuracy[i]) << ','
           << (search.candidates[i] == search.chosen ? 1 : 0) << '\n';
    write_text_file(out / "lambda_search.csv", ls.str());
    write_manifest(out, "cv-lambda", resolved, {"lambda_search.csv"});
    std::cout << "chosen lambda " << format_number(search.chosen) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Probabilistic-label training experiments and calibration metrics"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", kVersion);

    app.add_option("--seed", g.seed, "master seed");
    app.add_option("--out", g.out, "output directory")->capture_default_str();
    app.add_option("--config", g.config_path, "JSON config or a manifest from an earlier run");
    app.add_option("--reps", g.reps, "repetitions per sweep point")->check(CLI::PositiveNumber);
    app.add_option("--lambda-grid", g.lambda_grid, "comma-separated lambda candidates");
    app.add_flag("--quiet", g.quiet, "suppress progress output");
    app.add_flag("--parallel", g.parallel, "run repetitions / samples on OpenMP threads");

    std::string eval_input, model_file, cv_data;
    auto* e1 = app.add_subcommand("experiment1", "Gaussian-mixture sweeps: accuracy vs n, ECE vs imbalance");
    auto* di = app.add_subcommand("distill", "synthetic-image distillation with four label strategies");
    auto* ev = app.add_subcommand("evaluate", "metrics for a score,label CSV");
    ev->add_option("predictions", eval_input, "CSV with score,label columns");
    auto* bd = app.add_subcommand("boundary", "decision-boundary grid of a 2-D model");
    bd->add_option("model", model_file, "model JSON");
    auto* cv = app.add_subcommand("cv-lambda", "cross-validate lambda on a feature dataset with soft labels");
    cv->add_option("data", cv_data, "dataset CSV (z0.., hard_label, p0..)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (e1->parsed()) return cmd_experiment1();
        if (di->parsed()) return cmd_distill();
        if (ev->parsed()) return cmd_evaluate(eval_input);
        if (bd->parsed()) return cmd_boundary(model_file);
        if (cv->parsed()) return cmd_cv_lambda(cv_data);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const plabel::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const ArgumentError& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
