// Command-line front end: chord generation, feature extraction, training,
// evaluation, full experiments, similarity export.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "audiodict/chordgen.hpp"
#include "audiodict/dataset.hpp"
#include "audiodict/harness.hpp"
#include "audiodict/matrix_io.hpp"
#include "audiodict/model_archive.hpp"

using namespace audiodict;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

std::vector<double> parse_doubles(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

std::vector<int> parse_ints(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

// Grid file keys: grid.lambda, grid.gamma1, grid.gamma2, grid.kprime as comma
// lists; grid.csvm either a comma list or log:<lo>:<hi>:<n>.
void apply_grid_config(SearchGrid& grid, const std::map<std::string, std::string>& cfg) {
    if (auto it = cfg.find("grid.lambda"); it != cfg.end()) grid.lambdas = parse_doubles(it->second);
    if (auto it = cfg.find("grid.gamma1"); it != cfg.end()) grid.gamma1s = parse_doubles(it->second);
    if (auto it = cfg.find("grid.gamma2"); it != cfg.end()) grid.gamma2s = parse_doubles(it->second);
    if (auto it = cfg.find("grid.kprime"); it != cfg.end()) grid.kprimes = parse_ints(it->second);
    if (auto it = cfg.find("grid.csvm"); it != cfg.end()) {
        const std::string& v = it->second;
        if (v.rfind("log:", 0) == 0) {
            std::stringstream ss(v.substr(4));
            std::string lo, hi, n;
            std::getline(ss, lo, ':');
            std::getline(ss, hi, ':');
            std::getline(ss, n, ':');
            grid.c_svms = log_spaced(std::stod(lo), std::stod(hi), std::stoi(n));
        } else {
            grid.c_svms = parse_doubles(v);
        }
    }
}

void apply_hp_config(Hyperparams& hp, int& grid_iterations,
                     const std::map<std::string, std::string>& cfg) {
    if (auto it = cfg.find("dl.iterations"); it != cfg.end()) hp.iterations = std::stoi(it->second);
    if (auto it = cfg.find("dl.grid_iterations"); it != cfg.end()) grid_iterations = std::stoi(it->second);
    if (auto it = cfg.find("dl.eta0"); it != cfg.end()) hp.eta0 = std::stod(it->second);
    if (auto it = cfg.find("dl.alpha"); it != cfg.end()) hp.alpha = std::stod(it->second);
    if (auto it = cfg.find("dl.coding_tol"); it != cfg.end()) hp.coding_tol = std::stod(it->second);
    if (auto it = cfg.find("dl.coding_max_iter"); it != cfg.end()) hp.coding_max_iter = std::stoi(it->second);
    if (auto it = cfg.find("dl.max_backtracks"); it != cfg.end()) hp.max_backtracks = std::stoi(it->second);
}

SplitProtocol protocol_by_name(const std::string& name, std::uint64_t seed) {
    if (name == "casr") return SplitProtocol::casr(seed);
    if (name == "chord") return SplitProtocol::chord(seed);
    throw InvalidParam("unknown protocol: " + name);
}

// Feature files: .csv carries labels inline; anything else is the binary
// matrix format with labels in a sibling file.
std::pair<Eigen::MatrixXd, std::vector<int>> load_features(const std::string& path,
                                                           const std::string& labels_path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
        return read_features_csv(path);
    }
    Eigen::MatrixXd m = read_matrix(path);
    std::string lp = labels_path.empty() ? path + ".labels" : labels_path;
    std::vector<int> labels = read_labels(lp);
    if (static_cast<Eigen::Index>(labels.size()) != m.cols()) {
        throw DimensionMismatch("label count does not match feature columns");
    }
    return {std::move(m), std::move(labels)};
}

int classify_exception() {
    try {
        throw;
    } catch (const NonFiniteObjective&) {
        return kExitNumeric;
    } catch (const InvalidParam&) {
        return kExitUsage;
    } catch (const Error&) {
        return kExitData;
    } catch (const std::exception&) {
        return kExitData;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Class-based dictionary learning for audio classification"};
    app.require_subcommand(1);

    // gen-chords
    auto* gen = app.add_subcommand("gen-chords", "Synthesize the tertian chord dataset");
    std::string gen_out;
    int gen_per_class = 154;
    std::uint64_t gen_seed = 0;
    int gen_threads = 0;
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--per-class", gen_per_class, "Clips per chord type");
    gen->add_option("--seed", gen_seed, "Generation seed");
    gen->add_option("--threads", gen_threads, "Worker threads (0 = all cores)");

    // features
    auto* feat = app.add_subcommand("features", "Extract features from a WAV directory tree");
    std::string feat_in, feat_kind = "spectrogram_pool", feat_out, feat_labels;
    int feat_threads = 0;
    feat->add_option("--in", feat_in, "Directory with one subdirectory per class")->required();
    feat->add_option("--kind", feat_kind, "spectrogram_pool | chroma | interp_psd");
    feat->add_option("--out", feat_out, "Output file (.csv inline labels, else binary matrix)")
        ->required();
    feat->add_option("--labels-out", feat_labels, "Labels file (binary output only)");
    feat->add_option("--threads", feat_threads, "Worker threads (0 = all cores)");

    // train
    auto* train = app.add_subcommand("train", "Model selection plus final training");
    std::string train_features, train_labels, train_grid, train_protocol = "chord";
    std::string train_model_out, train_method = "dictionary_learning";
    std::string train_kind = "spectrogram_pool", train_kernel = "linear";
    std::uint64_t train_seed = 0;
    int train_threads = 0;
    train->add_option("--features", train_features, "Feature file from the features command")
        ->required();
    train->add_option("--labels", train_labels, "Labels file (defaults to <features>.labels)");
    train->add_option("--grid", train_grid, "Grid config file (key = value)");
    train->add_option("--protocol", train_protocol, "casr | chord (validation resamples)");
    train->add_option("--model", train_model_out, "Output model path")->required();
    train->add_option("--method", train_method, "dictionary_learning | baseline");
    train->add_option("--kernel", train_kernel, "Baseline kernel: linear | polynomial");
    train->add_option("--kind", train_kind, "Feature kind tag stored in the model");
    train->add_option("--seed", train_seed, "Seed");
    train->add_option("--threads", train_threads, "Worker threads (0 = all cores)");

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a model on a feature file");
    std::string eval_model, eval_features, eval_labels, eval_report;
    int eval_threads = 0;
    eval->add_option("--model", eval_model, "Model archive")->required();
    eval->add_option("--features", eval_features, "Feature file")->required();
    eval->add_option("--labels", eval_labels, "Labels file (defaults to <features>.labels)");
    eval->add_option("--report", eval_report, "Output JSON report")->required();
    eval->add_option("--threads", eval_threads, "Worker threads (0 = all cores)");

    // experiment
    auto* exp = app.add_subcommand("experiment", "Run a full split/grid-search experiment");
    std::string exp_config, exp_report_flag;
    exp->add_option("--config", exp_config, "Experiment config file")->required();
    exp->add_option("--report", exp_report_flag, "Report path (overrides the config)");

    // similarity
    auto* sim = app.add_subcommand("similarity", "Export the dictionary similarity matrix");
    std::string sim_model, sim_out;
    sim->add_option("--model", sim_model, "Model archive")->required();
    sim->add_option("--out", sim_out, "Output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*gen) {
            auto ds = generate_dataset(gen_seed, gen_per_class, default_roots(),
                                       builtin_instruments(), gen_threads);
            write_chord_dataset(ds, gen_out);
            std::cout << "wrote " << ds.clips.size() << " clips to " << gen_out << "\n";
        } else if (*feat) {
            auto data = ingest_wav_dir(feat_in);
            auto set = extract_features(data, feature_kind_from_string(feat_kind), feat_threads);
            const bool csv =
                feat_out.size() >= 4 && feat_out.substr(feat_out.size() - 4) == ".csv";
            if (csv) {
                write_features_csv(feat_out, set.features, set.labels);
            } else {
                write_matrix(feat_out, set.features);
                write_labels(feat_labels.empty() ? feat_out + ".labels" : feat_labels, set.labels);
            }
            std::cout << "extracted " << set.features.cols() << " x " << set.features.rows()
                      << " " << feat_kind << " features\n";
        } else if (*train) {
            auto [features, labels] = load_features(train_features, train_labels);
            FeatureSet set;
            set.features = std::move(features);
            set.labels = std::move(labels);
            set.kind = feature_kind_from_string(train_kind);
            const int num_classes = 1 + *std::max_element(set.labels.begin(), set.labels.end());
            for (int c = 0; c < num_classes; ++c) {
                set.class_names.push_back("class_" + std::to_string(c));
            }

            ExperimentConfig cfg;
            cfg.method = method_from_string(train_method);
            cfg.feature_kind = set.kind;
            cfg.protocol = protocol_by_name(train_protocol, train_seed);
            cfg.seed = train_seed;
            cfg.threads = train_threads;
            if (train_kernel == "polynomial") {
                cfg.baseline_kernel.type = KernelSpec::Type::polynomial;
            }
            if (!train_grid.empty()) {
                auto file_cfg = read_config_file(train_grid);
                apply_grid_config(cfg.grid, file_cfg);
                apply_hp_config(cfg.base_hp, cfg.grid_iterations, file_cfg);
            }
            GridChoice choice;
            ModelArchive model = train_model(set, cfg, &choice);
            save_model(model, train_model_out);
            std::cout << "validation accuracy " << choice.validation_accuracy
                      << "; model saved to " << train_model_out << "\n";
        } else if (*eval) {
            ModelArchive model = load_model(eval_model);
            auto [features, labels] = load_features(eval_features, eval_labels);
            auto preds = predict(model, features, eval_threads);
            int hits = 0;
            const int num_classes = model.svm.num_classes();
            Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(num_classes, num_classes);
            for (std::size_t i = 0; i < preds.size(); ++i) {
                hits += preds[i] == labels[i] ? 1 : 0;
                if (labels[i] >= 0 && labels[i] < num_classes) confusion(labels[i], preds[i])++;
            }
            nlohmann::json j;
            j["accuracy"] = static_cast<double>(hits) / static_cast<double>(preds.size());
            j["num_samples"] = preds.size();
            j["predictions"] = preds;
            std::vector<std::vector<int>> cm;
            for (int r = 0; r < num_classes; ++r) {
                cm.emplace_back(confusion.row(r).begin(), confusion.row(r).end());
            }
            j["confusion_matrix"] = cm;
            std::ofstream f(eval_report);
            if (!f) throw IoError("cannot write " + eval_report);
            f << j.dump(2) << "\n";
            std::cout << "accuracy " << j["accuracy"] << " on " << preds.size() << " samples\n";
        } else if (*exp) {
            auto cfg_map = read_config_file(exp_config);
            auto get = [&](const std::string& key, const std::string& fallback) {
                auto it = cfg_map.find(key);
                return it == cfg_map.end() ? fallback : it->second;
            };

            ExperimentConfig cfg;
            cfg.method = method_from_string(get("method", "dictionary_learning"));
            cfg.feature_kind = feature_kind_from_string(get("feature.kind", "spectrogram_pool"));
            cfg.seed = std::stoull(get("seed", "0"));
            cfg.threads = std::stoi(get("threads", "0"));
            cfg.protocol = protocol_by_name(get("protocol", "chord"), cfg.seed);
            if (cfg_map.count("protocol.splits")) {
                cfg.protocol.num_splits = std::stoi(cfg_map.at("protocol.splits"));
            }
            if (cfg_map.count("protocol.train_fraction")) {
                cfg.protocol.train_fraction = std::stod(cfg_map.at("protocol.train_fraction"));
            }
            if (cfg_map.count("protocol.resamples")) {
                cfg.protocol.validation_resamples = std::stoi(cfg_map.at("protocol.resamples"));
            }
            if (get("baseline.kernel", "linear") == "polynomial") {
                cfg.baseline_kernel.type = KernelSpec::Type::polynomial;
            }
            if (cfg_map.count("baseline.degree")) {
                cfg.baseline_kernel.degree = std::stoi(cfg_map.at("baseline.degree"));
            }
            apply_grid_config(cfg.grid, cfg_map);
            apply_hp_config(cfg.base_hp, cfg.grid_iterations, cfg_map);

            FeatureSet set;
            if (cfg_map.count("data.features")) {
                auto [features, labels] =
                    load_features(cfg_map.at("data.features"), get("data.labels", ""));
                set.features = std::move(features);
                set.labels = std::move(labels);
                set.kind = cfg.feature_kind;
                const int num_classes =
                    1 + *std::max_element(set.labels.begin(), set.labels.end());
                for (int c = 0; c < num_classes; ++c) {
                    set.class_names.push_back("class_" + std::to_string(c));
                }
            } else if (cfg_map.count("data.dir")) {
                auto data = ingest_wav_dir(cfg_map.at("data.dir"));
                set = extract_features(data, cfg.feature_kind, cfg.threads);
            } else {
                throw InvalidParam("config needs data.dir or data.features");
            }

            auto report = run_experiment(set, cfg);
            const std::string out =
                !exp_report_flag.empty() ? exp_report_flag : get("report", "report.json");
            write_report(out, report);
            std::cout << "mean accuracy " << report.mean_accuracy << " +/- "
                      << report.std_accuracy << " over " << report.per_split_accuracy.size()
                      << " splits; report written to " << out << "\n";
        } else if (*sim) {
            ModelArchive model = load_model(sim_model);
            export_similarity(model, sim_out);
            std::cout << "similarity matrix written to " << sim_out << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return classify_exception();
    }
    return 0;
}
