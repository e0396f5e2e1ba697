#include "audiodict/model_archive.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "audiodict/sparse_coding.hpp"

namespace audiodict {

namespace {

constexpr char kModelMagic[8] = {'A', 'D', 'L', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint32_t kModelVersion = 1;

struct Writer {
    std::ofstream f;
    explicit Writer(const std::string& path) : f(path, std::ios::binary) {
        if (!f) throw IoError("cannot open for writing: " + path);
    }
    template <typename T>
    void pod(const T& v) {
        f.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    void matrix(const Eigen::MatrixXd& m) {
        pod<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
        pod<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
        f.write(reinterpret_cast<const char*>(m.data()),
                static_cast<std::streamsize>(sizeof(double) * m.size()));
    }
    void vec(const Eigen::VectorXd& v) {
        pod<std::uint64_t>(static_cast<std::uint64_t>(v.size()));
        f.write(reinterpret_cast<const char*>(v.data()),
                static_cast<std::streamsize>(sizeof(double) * v.size()));
    }
    void str(const std::string& s) {
        pod<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        f.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
};

struct Reader {
    std::ifstream f;
    std::string path;
    explicit Reader(const std::string& p) : f(p, std::ios::binary), path(p) {
        if (!f) throw IoError("cannot open: " + p);
    }
    template <typename T>
    T pod() {
        T v;
        f.read(reinterpret_cast<char*>(&v), sizeof(T));
        if (!f) throw CorruptArchive("truncated archive: " + path);
        return v;
    }
    Eigen::MatrixXd matrix() {
        const auto rows = pod<std::uint64_t>();
        const auto cols = pod<std::uint64_t>();
        if (rows > (1ULL << 32) || cols > (1ULL << 32)) {
            throw CorruptArchive("absurd matrix shape in " + path);
        }
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        f.read(reinterpret_cast<char*>(m.data()),
               static_cast<std::streamsize>(sizeof(double) * m.size()));
        if (!f) throw CorruptArchive("truncated archive: " + path);
        return m;
    }
    Eigen::VectorXd vec() {
        const auto n = pod<std::uint64_t>();
        if (n > (1ULL << 32)) throw CorruptArchive("absurd vector length in " + path);
        Eigen::VectorXd v(static_cast<Eigen::Index>(n));
        f.read(reinterpret_cast<char*>(v.data()),
               static_cast<std::streamsize>(sizeof(double) * v.size()));
        if (!f) throw CorruptArchive("truncated archive: " + path);
        return v;
    }
    std::string str() {
        const auto n = pod<std::uint32_t>();
        if (n > (1U << 20)) throw CorruptArchive("absurd string length in " + path);
        std::string s(n, '\0');
        f.read(s.data(), n);
        if (!f) throw CorruptArchive("truncated archive: " + path);
        return s;
    }
};

}  // namespace

std::string to_string(Method m) {
    return m == Method::dictionary_learning ? "dictionary_learning" : "baseline";
}

Method method_from_string(const std::string& name) {
    if (name == "dictionary_learning") return Method::dictionary_learning;
    if (name == "baseline") return Method::baseline;
    throw InvalidParam("unknown method: " + name);
}

void save_model(const ModelArchive& model, const std::string& path) {
    Writer w(path);
    w.f.write(kModelMagic, sizeof(kModelMagic));
    w.pod<std::uint32_t>(kModelVersion);
    w.pod<std::uint8_t>(model.method == Method::dictionary_learning ? 0 : 1);
    w.pod<std::uint8_t>(static_cast<std::uint8_t>(model.feature_kind));
    w.pod<std::uint8_t>(model.standardized ? 1 : 0);

    w.pod<double>(model.hp.lambda);
    w.pod<double>(model.hp.gamma1);
    w.pod<double>(model.hp.gamma2);
    w.pod<double>(model.hp.eta0);
    w.pod<double>(model.hp.alpha);
    w.pod<double>(model.hp.coding_tol);
    w.pod<std::int32_t>(model.hp.kprime);
    w.pod<std::int32_t>(model.hp.iterations);
    w.pod<std::int32_t>(model.hp.coding_max_iter);
    w.pod<std::int32_t>(model.hp.max_backtracks);
    w.pod<double>(model.c_svm);

    w.pod<std::uint32_t>(static_cast<std::uint32_t>(model.class_names.size()));
    for (const auto& name : model.class_names) w.str(name);

    w.pod<std::int32_t>(model.dictionary.num_classes());
    if (model.dictionary.num_classes() > 0) w.matrix(model.dictionary.atoms());

    w.pod<std::uint32_t>(static_cast<std::uint32_t>(model.svm.machines.size()));
    w.pod<std::uint64_t>(static_cast<std::uint64_t>(model.svm.input_dim));
    for (const auto& m : model.svm.machines) {
        w.pod<std::uint8_t>(m.kernel.type == KernelSpec::Type::linear ? 0 : 1);
        w.pod<std::int32_t>(m.kernel.degree);
        w.pod<double>(m.kernel.coef0);
        w.pod<double>(m.c_svm);
        w.pod<double>(m.bias);
        w.pod<std::uint64_t>(static_cast<std::uint64_t>(m.input_dim));
        w.pod<std::uint8_t>(m.converged ? 1 : 0);
        w.pod<std::int64_t>(m.iterations);
        w.matrix(m.support_vectors);
        w.vec(m.coefs);
    }

    if (model.standardized) {
        w.vec(model.feat_mean);
        w.vec(model.feat_std);
    }
    if (!w.f) throw IoError("write failed: " + path);
}

ModelArchive load_model(const std::string& path) {
    Reader r(path);
    char magic[8];
    r.f.read(magic, sizeof(magic));
    if (!r.f || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
        throw CorruptArchive("bad model magic: " + path);
    }
    const auto version = r.pod<std::uint32_t>();
    if (version != kModelVersion) {
        throw VersionMismatch("model version " + std::to_string(version) + " not supported");
    }

    ModelArchive model;
    model.version = version;
    model.method = r.pod<std::uint8_t>() == 0 ? Method::dictionary_learning : Method::baseline;
    model.feature_kind = static_cast<FeatureKind>(r.pod<std::uint8_t>());
    model.standardized = r.pod<std::uint8_t>() != 0;

    model.hp.lambda = r.pod<double>();
    model.hp.gamma1 = r.pod<double>();
    model.hp.gamma2 = r.pod<double>();
    model.hp.eta0 = r.pod<double>();
    model.hp.alpha = r.pod<double>();
    model.hp.coding_tol = r.pod<double>();
    model.hp.kprime = r.pod<std::int32_t>();
    model.hp.iterations = r.pod<std::int32_t>();
    model.hp.coding_max_iter = r.pod<std::int32_t>();
    model.hp.max_backtracks = r.pod<std::int32_t>();
    model.c_svm = r.pod<double>();

    const auto n_names = r.pod<std::uint32_t>();
    model.class_names.reserve(n_names);
    for (std::uint32_t i = 0; i < n_names; ++i) model.class_names.push_back(r.str());

    const auto dict_classes = r.pod<std::int32_t>();
    if (dict_classes > 0) {
        model.dictionary = GlobalDictionary(r.matrix(), dict_classes);
    }

    const auto n_machines = r.pod<std::uint32_t>();
    model.svm.input_dim = static_cast<Eigen::Index>(r.pod<std::uint64_t>());
    model.svm.machines.reserve(n_machines);
    for (std::uint32_t i = 0; i < n_machines; ++i) {
        BinarySvm m;
        m.kernel.type = r.pod<std::uint8_t>() == 0 ? KernelSpec::Type::linear
                                                   : KernelSpec::Type::polynomial;
        m.kernel.degree = r.pod<std::int32_t>();
        m.kernel.coef0 = r.pod<double>();
        m.c_svm = r.pod<double>();
        m.bias = r.pod<double>();
        m.input_dim = static_cast<Eigen::Index>(r.pod<std::uint64_t>());
        m.converged = r.pod<std::uint8_t>() != 0;
        m.iterations = r.pod<std::int64_t>();
        m.support_vectors = r.matrix();
        m.coefs = r.vec();
        if (m.support_vectors.cols() != m.coefs.size()) {
            throw CorruptArchive("inconsistent support vectors in " + path);
        }
        if (m.kernel.type == KernelSpec::Type::linear) {
            // Same expression as training, so reloaded predictions match bit
            // for bit.
            m.linear_weights = m.support_vectors * m.coefs;
            if (m.coefs.size() == 0) m.linear_weights = Eigen::VectorXd::Zero(m.input_dim);
        }
        model.svm.machines.push_back(std::move(m));
    }

    if (model.standardized) {
        model.feat_mean = r.vec();
        model.feat_std = r.vec();
    }
    return model;
}

Eigen::MatrixXd encode_features(const ModelArchive& model, const Eigen::MatrixXd& X,
                                int threads) {
    if (model.method == Method::dictionary_learning) {
        Eigen::MatrixXd Xn = X;
        for (Eigen::Index n = 0; n < Xn.cols(); ++n) {
            const double norm = Xn.col(n).norm();
            if (norm > 0.0) Xn.col(n) /= norm;
        }
        CodingParams params;
        params.lambda = model.hp.lambda;
        params.tol = model.hp.coding_tol;
        params.max_iter = model.hp.coding_max_iter;
        return lasso_code_matrix(Xn, model.dictionary, params, threads);
    }
    Eigen::MatrixXd out = X;
    if (model.standardized) {
        for (Eigen::Index n = 0; n < out.cols(); ++n) {
            out.col(n) = (out.col(n) - model.feat_mean).cwiseQuotient(model.feat_std);
        }
    }
    return out;
}

Eigen::MatrixXd decision_matrix(const ModelArchive& model, const Eigen::MatrixXd& X,
                                int threads) {
    const Eigen::MatrixXd codes = encode_features(model, X, threads);
    Eigen::MatrixXd decisions(model.svm.num_classes(), codes.cols());
    for (Eigen::Index n = 0; n < codes.cols(); ++n) {
        decisions.col(n) = model.svm.decision_values(codes.col(n));
    }
    return decisions;
}

std::vector<int> predict(const ModelArchive& model, const Eigen::MatrixXd& X, int threads) {
    const Eigen::MatrixXd codes = encode_features(model, X, threads);
    return ova_predict_batch(model.svm, codes);
}

void export_similarity(const ModelArchive& model, const std::string& path) {
    if (model.dictionary.num_classes() == 0) {
        throw InvalidParam("model has no dictionary to compare");
    }
    const Eigen::MatrixXd sim = dictionary_similarity(model.dictionary);
    std::vector<std::string> names = model.class_names;
    if (names.size() != static_cast<std::size_t>(sim.rows())) {
        names.clear();
        for (Eigen::Index c = 0; c < sim.rows(); ++c) names.push_back("class_" + std::to_string(c));
    }
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << "class";
    for (const auto& name : names) f << ',' << name;
    f << '\n';
    char buf[40];
    for (Eigen::Index r = 0; r < sim.rows(); ++r) {
        f << names[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < sim.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), ",%.17g", sim(r, c));
            f << buf;
        }
        f << '\n';
    }
    if (!f) throw IoError("write failed: " + path);
}

}  // namespace audiodict
