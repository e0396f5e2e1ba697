#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "audiodict/harness.hpp"
#include "audiodict/matrix_io.hpp"
#include "audiodict/rng.hpp"
#include "audiodict/wav.hpp"
#include "oracles.hpp"

using namespace audiodict;

namespace {

// Two classes on orthogonal 1-D subspaces; trivially separable end to end.
FeatureSet toy_subspace_set(Rng& rng, int per_class) {
    FeatureSet set;
    set.kind = FeatureKind::spectrogram_pool;
    set.class_names = {"axis_x", "axis_y"};
    set.features.resize(2, 2 * per_class);
    for (int i = 0; i < per_class; ++i) {
        set.features.col(i) = Eigen::Vector2d(rng.uniform(0.5, 1.5), 0.0);
        set.features.col(per_class + i) = Eigen::Vector2d(0.0, rng.uniform(0.5, 1.5));
    }
    set.labels.assign(static_cast<std::size_t>(per_class), 0);
    set.labels.insert(set.labels.end(), static_cast<std::size_t>(per_class), 1);
    return set;
}

ExperimentConfig toy_config(std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.method = Method::dictionary_learning;
    cfg.protocol = SplitProtocol{3, 0.75, 2, seed};
    cfg.grid.lambdas = {0.05};
    cfg.grid.gamma1s = {0.1};
    cfg.grid.gamma2s = {0.1};
    cfg.grid.kprimes = {1};
    cfg.grid.c_svms = {1.0, 10.0};
    cfg.base_hp.iterations = 25;
    cfg.base_hp.kprime = 1;
    cfg.grid_iterations = 10;
    cfg.seed = seed;
    cfg.threads = 2;
    return cfg;
}

}  // namespace

TEST_CASE("protocol presets match the published settings") {
    auto casr = SplitProtocol::casr(1);
    CHECK(casr.num_splits == 20);
    CHECK(casr.train_fraction == doctest::Approx(0.8));
    CHECK(casr.validation_resamples == 5);
    auto chord = SplitProtocol::chord(1);
    CHECK(chord.num_splits == 10);
    CHECK(chord.train_fraction == doctest::Approx(2.0 / 3.0));
    CHECK(chord.validation_resamples == 2);
}

TEST_CASE("default search grid spans 810 configurations") {
    SearchGrid grid;
    CHECK(grid.lambdas.size() * grid.gamma1s.size() * grid.gamma2s.size() * grid.kprimes.size() *
              grid.c_svms.size() ==
          810);
    CHECK(grid.c_svms.front() == doctest::Approx(0.001));
    CHECK(grid.c_svms.back() == doctest::Approx(100.0));
    // log spacing: constant ratio
    for (std::size_t i = 1; i < grid.c_svms.size(); ++i) {
        CHECK(grid.c_svms[i] / grid.c_svms[i - 1] ==
              doctest::Approx(grid.c_svms[1] / grid.c_svms[0]).epsilon(1e-9));
    }
}

TEST_CASE("stratified splits follow the rounding rule") {
    SUBCASE("chord preset on 154 per class") {
        std::vector<int> labels;
        for (int c = 0; c < 14; ++c)
            for (int i = 0; i < 154; ++i) labels.push_back(c);
        auto splits = make_splits(labels, SplitProtocol::chord(3));
        REQUIRE(splits.size() == 10);
        for (const auto& split : splits) {
            std::vector<int> train_counts(14, 0), test_counts(14, 0);
            for (int i : split.train) train_counts[static_cast<std::size_t>(labels[i])]++;
            for (int i : split.test) test_counts[static_cast<std::size_t>(labels[i])]++;
            for (int c = 0; c < 14; ++c) {
                CHECK(train_counts[c] == 103);  // round(2/3 * 154)
                CHECK(test_counts[c] == 51);
            }
        }
    }
    SUBCASE("casr preset on 8 per class") {
        std::vector<int> labels;
        for (int c = 0; c < 10; ++c)
            for (int i = 0; i < 8; ++i) labels.push_back(c);
        auto splits = make_splits(labels, SplitProtocol::casr(3));
        REQUIRE(splits.size() == 20);
        for (const auto& split : splits) {
            std::vector<int> train_counts(10, 0);
            for (int i : split.train) train_counts[static_cast<std::size_t>(labels[i])]++;
            for (int c = 0; c < 10; ++c) CHECK(train_counts[c] == 6);  // round(0.8 * 8)
        }
    }
    SUBCASE("train and test partition the data") {
        std::vector<int> labels = {0, 0, 0, 1, 1, 1, 1, 2, 2};
        auto splits = make_splits(labels, SplitProtocol{5, 0.5, 1, 7});
        for (const auto& split : splits) {
            std::set<int> all(split.train.begin(), split.train.end());
            for (int i : split.test) {
                CHECK(all.count(i) == 0);
                all.insert(i);
            }
            CHECK(all.size() == labels.size());
        }
        // distinct draws differ
        CHECK(splits[0].train != splits[1].train);
        // deterministic
        auto again = make_splits(labels, SplitProtocol{5, 0.5, 1, 7});
        CHECK(splits[0].train == again[0].train);
        CHECK(splits[4].test == again[4].test);
    }
    SUBCASE("tiny classes are rejected") {
        std::vector<int> labels = {0, 0, 1};
        CHECK_THROWS_AS(make_splits(labels, SplitProtocol{2, 0.5, 1, 1}), ClassTooSmall);
    }
}

TEST_CASE("grid search returns a singleton grid untouched") {
    Rng rng(5);
    FeatureSet set = toy_subspace_set(rng, 8);
    SearchGrid grid;
    grid.lambdas = {0.07};
    grid.gamma1s = {0.2};
    grid.gamma2s = {0.15};
    grid.kprimes = {1};
    grid.c_svms = {3.0};
    Hyperparams hp;
    hp.iterations = 5;
    auto choice = grid_search(set.features, set.labels, grid, hp, 2, 11, 2);
    CHECK(choice.hp.lambda == 0.07);
    CHECK(choice.hp.gamma1 == 0.2);
    CHECK(choice.hp.gamma2 == 0.15);
    CHECK(choice.hp.kprime == 1);
    CHECK(choice.c_svm == 3.0);
}

TEST_CASE("grid search tie-break prefers the smallest configuration") {
    Rng rng(6);
    FeatureSet set = toy_subspace_set(rng, 10);  // separable: every config ties at 1.0
    SearchGrid grid;
    grid.lambdas = {0.1, 0.05};
    grid.gamma1s = {0.3, 0.1};
    grid.gamma2s = {0.2, 0.1};
    grid.kprimes = {1};
    grid.c_svms = {10.0, 1.0};
    Hyperparams hp;
    hp.iterations = 8;
    auto choice = grid_search(normalize_columns(set.features), set.labels, grid, hp, 2, 4, 2);
    CHECK(choice.validation_accuracy == 1.0);
    CHECK(choice.hp.lambda == 0.05);
    CHECK(choice.hp.gamma1 == 0.1);
    CHECK(choice.hp.gamma2 == 0.1);
    CHECK(choice.c_svm == 1.0);
}

TEST_CASE("failing grid configurations score zero instead of aborting") {
    Rng rng(8);
    FeatureSet set = toy_subspace_set(rng, 3);  // halves have 1-2 samples per class
    SearchGrid grid;
    grid.lambdas = {0.05};
    grid.gamma1s = {0.1};
    grid.gamma2s = {0.1};
    grid.kprimes = {1, 50};  // K'=50 cannot be initialized from 2 samples
    grid.c_svms = {1.0};
    Hyperparams hp;
    hp.iterations = 4;
    auto choice = grid_search(set.features, set.labels, grid, hp, 1, 2, 1);
    CHECK(choice.hp.kprime == 1);
}

TEST_CASE("the toy subspace experiment is solved perfectly") {
    Rng rng(12);
    FeatureSet set = toy_subspace_set(rng, 10);
    auto report = run_experiment(set, toy_config(21));
    CHECK(report.mean_accuracy == 1.0);
    CHECK(report.per_split_accuracy.size() == 3);
    CHECK(report.confusion(0, 1) == 0);
    CHECK(report.confusion(1, 0) == 0);

    double mean = 0.0;
    for (double a : report.per_split_accuracy) mean += a;
    mean /= static_cast<double>(report.per_split_accuracy.size());
    CHECK(report.mean_accuracy == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("experiments are reproducible and leak-free") {
    Rng rng(14);
    FeatureSet set = toy_subspace_set(rng, 8);
    auto cfg = toy_config(33);

    auto r1 = run_experiment(set, cfg);
    auto r2 = run_experiment(set, cfg);
    CHECK(report_to_json(r1, false) == report_to_json(r2, false));

    // Corrupt one split's test samples at a time; that split's model selection
    // must not notice because it only ever sees training data. (A sample that
    // is test in one split is train in another, so splits are checked
    // one by one.)
    SplitProtocol protocol = cfg.protocol;
    protocol.seed = cfg.seed;
    auto splits = make_splits(set.labels, protocol);
    Rng noise(99);
    for (std::size_t s = 0; s < splits.size(); ++s) {
        FeatureSet garbled = set;
        for (int i : splits[s].test) {
            garbled.features(0, i) = noise.uniform(-5, 5);
            garbled.features(1, i) = noise.uniform(-5, 5);
        }
        auto r3 = run_experiment(garbled, cfg);
        REQUIRE(r3.splits.size() == r1.splits.size());
        CHECK(r1.splits[s].hp.lambda == r3.splits[s].hp.lambda);
        CHECK(r1.splits[s].hp.gamma1 == r3.splits[s].hp.gamma1);
        CHECK(r1.splits[s].hp.gamma2 == r3.splits[s].hp.gamma2);
        CHECK(r1.splits[s].hp.kprime == r3.splits[s].hp.kprime);
        CHECK(r1.splits[s].c_svm == r3.splits[s].c_svm);
        CHECK(r1.splits[s].validation_accuracy == r3.splits[s].validation_accuracy);
    }
}

TEST_CASE("baseline experiments standardize and classify") {
    Rng rng(25);
    FeatureSet set = toy_subspace_set(rng, 10);
    ExperimentConfig cfg = toy_config(5);
    cfg.method = Method::baseline;
    cfg.baseline_kernel.type = KernelSpec::Type::linear;
    auto report = run_experiment(set, cfg);
    CHECK(report.mean_accuracy == 1.0);
    CHECK(report.method == "baseline");
    CHECK(report.kernel == "linear");
}

TEST_CASE("trained models survive a save/load round trip bit for bit") {
    namespace fs = std::filesystem;
    Rng rng(31);
    FeatureSet set = toy_subspace_set(rng, 10);
    auto cfg = toy_config(77);
    GridChoice choice;
    ModelArchive model = train_model(set, cfg, &choice);
    CHECK(model.dictionary.num_classes() == 2);

    const auto path = (fs::temp_directory_path() / "audiodict_model_test.bin").string();
    save_model(model, path);
    ModelArchive loaded = load_model(path);

    Eigen::MatrixXd probes(2, 100);
    Rng prng(55);
    for (int i = 0; i < 100; ++i) {
        probes.col(i) = Eigen::Vector2d(prng.uniform(0, 2), prng.uniform(0, 2));
    }
    const Eigen::MatrixXd d1 = decision_matrix(model, probes);
    const Eigen::MatrixXd d2 = decision_matrix(loaded, probes);
    CHECK(d1 == d2);
    CHECK(predict(model, probes) == predict(loaded, probes));

    SUBCASE("truncated archives are rejected") {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        const auto cut = (fs::temp_directory_path() / "audiodict_model_cut.bin").string();
        std::ofstream out(cut, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
        out.close();
        CHECK_THROWS_AS(load_model(cut), CorruptArchive);
        fs::remove(cut);
    }
    SUBCASE("future versions are rejected") {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        bytes[8] = 9;  // bump the little-endian version field
        const auto bad = (fs::temp_directory_path() / "audiodict_model_bad.bin").string();
        std::ofstream out(bad, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        CHECK_THROWS_AS(load_model(bad), VersionMismatch);
        fs::remove(bad);
    }
    fs::remove(path);
}

TEST_CASE("similarity export writes a labeled symmetric matrix") {
    namespace fs = std::filesystem;
    Rng rng(41);
    FeatureSet set = toy_subspace_set(rng, 10);
    ModelArchive model = train_model(set, toy_config(13));
    const auto path = (fs::temp_directory_path() / "audiodict_sim_test.csv").string();
    export_similarity(model, path);

    std::ifstream f(path);
    std::string header;
    REQUIRE(std::getline(f, header));
    CHECK(header == "class,axis_x,axis_y");
    std::string row0, row1;
    REQUIRE(std::getline(f, row0));
    REQUIRE(std::getline(f, row1));
    CHECK(row0.rfind("axis_x,", 0) == 0);
    // parse and check symmetry / nonnegativity
    auto parse = [](const std::string& line) {
        std::vector<double> vals;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');  // name
        while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
        return vals;
    };
    auto v0 = parse(row0), v1 = parse(row1);
    REQUIRE(v0.size() == 2);
    REQUIRE(v1.size() == 2);
    CHECK(v0[1] == doctest::Approx(v1[0]).epsilon(1e-15));
    for (double v : {v0[0], v0[1], v1[0], v1[1]}) CHECK(v >= 0.0);
    fs::remove(path);
}

TEST_CASE("matrix and CSV round trips") {
    namespace fs = std::filesystem;
    Rng rng(61);
    Eigen::MatrixXd m(3, 5);
    for (Eigen::Index c = 0; c < 5; ++c)
        for (Eigen::Index r = 0; r < 3; ++r) m(r, c) = rng.uniform(-10, 10);

    const auto bin = (fs::temp_directory_path() / "audiodict_mat.bin").string();
    write_matrix(bin, m);
    CHECK(read_matrix(bin) == m);

    std::vector<int> labels = {0, 1, 2, 1, 0};
    const auto csv = (fs::temp_directory_path() / "audiodict_feat.csv").string();
    write_features_csv(csv, m, labels);
    auto [m2, labels2] = read_features_csv(csv);
    CHECK(m2 == m);
    CHECK(labels2 == labels);

    const auto lab = (fs::temp_directory_path() / "audiodict_labels.txt").string();
    write_labels(lab, labels);
    CHECK(read_labels(lab) == labels);

    SUBCASE("corrupt matrix files are detected") {
        std::ofstream out(bin, std::ios::binary);
        out.write("JUNKJUNK", 8);
        out.close();
        CHECK_THROWS_AS(read_matrix(bin), CorruptFile);
    }
    fs::remove(bin);
    fs::remove(csv);
    fs::remove(lab);
}

TEST_CASE("wav directory ingestion orders classes lexicographically") {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "audiodict_ingest_test";
    fs::remove_all(root);
    fs::create_directories(root / "beta");
    fs::create_directories(root / "alpha");

    Signal s;
    s.sample_rate = 8000;
    s.samples.assign(800, 0.25);
    write_wav((root / "alpha" / "a1.wav").string(), s);
    write_wav((root / "alpha" / "a2.wav").string(), s);
    write_wav((root / "beta" / "b1.wav").string(), s);

    auto data = ingest_wav_dir(root.string());
    REQUIRE(data.class_names.size() == 2);
    CHECK(data.class_names[0] == "alpha");
    CHECK(data.class_names[1] == "beta");
    CHECK(data.labels == std::vector<int>{0, 0, 1});
    CHECK(data.signals[0].sample_rate == 8000);

    SUBCASE("empty class directories are an error") {
        fs::create_directories(root / "gamma");
        CHECK_THROWS_AS(ingest_wav_dir(root.string()), EmptyClassDir);
    }
    fs::remove_all(root);
}

TEST_CASE("standardization handles constant dimensions") {
    Eigen::MatrixXd X(2, 4);
    X << 1, 1, 1, 1, 0, 2, 4, 6;
    auto [mean, dev] = standardize_stats(X);
    CHECK(mean[0] == 1.0);
    CHECK(dev[0] == 1.0);  // constant row keeps unit scale
    auto Z = apply_standardization(X, mean, dev);
    CHECK(Z.row(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(Z.row(1).mean() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("config files parse flat key = value lines") {
    namespace fs = std::filesystem;
    const auto path = (fs::temp_directory_path() / "audiodict_config_test.cfg").string();
    std::ofstream f(path);
    f << "# comment line\n"
      << "method = dictionary_learning\n"
      << "grid.lambda = 0.1,0.3   # trailing comment\n"
      << "seed=42\n"
      << "\n"
      << "threads = 2\n";
    f.close();
    auto cfg = read_config_file(path);
    CHECK(cfg.at("method") == "dictionary_learning");
    CHECK(cfg.at("grid.lambda") == "0.1,0.3");
    CHECK(cfg.at("seed") == "42");
    CHECK(cfg.at("threads") == "2");
    CHECK(cfg.size() == 4);
    fs::remove(path);
}

TEST_CASE("fit report CSV has one row per iteration") {
    namespace fs = std::filesystem;
    FitReport report;
    for (int t = 0; t < 3; ++t) {
        FitIteration it;
        it.after_step = {1.0 * t, 2.0, 0.5, 0.1, 0.0, 3.6 + t};
        it.backtracks = t;
        report.trace.push_back(it);
    }
    const auto path = (fs::temp_directory_path() / "audiodict_fit_report.csv").string();
    write_fit_report_csv(path, report);
    std::ifstream f(path);
    std::string line;
    int rows = 0;
    std::getline(f, line);
    CHECK(line == "iteration,j1,j2,j3,j4,j5,total,backtracks");
    while (std::getline(f, line)) ++rows;
    CHECK(rows == 3);
    fs::remove(path);
}
