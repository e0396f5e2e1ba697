#include <doctest.h>

#include <cmath>

#include "audiodict/dictionary.hpp"
#include "audiodict/rng.hpp"
#include "audiodict/svm.hpp"
#include "oracles.hpp"

using namespace audiodict;

namespace {

Hyperparams small_hp() {
    Hyperparams hp;
    hp.lambda = 0.1;
    hp.gamma1 = 0.1;
    hp.gamma2 = 0.1;
    return hp;
}

struct RandomInstance {
    GlobalDictionary dict;
    Eigen::MatrixXd X;
    Eigen::MatrixXd codes;
    std::vector<int> labels;
    Hyperparams hp;
};

RandomInstance random_instance(Rng& rng, int m, int classes, int kprime, int n) {
    RandomInstance inst;
    Eigen::MatrixXd atoms(m, classes * kprime);
    for (Eigen::Index j = 0; j < atoms.cols(); ++j) {
        for (Eigen::Index i = 0; i < m; ++i) atoms(i, j) = rng.uniform(-1.0, 1.0);
        atoms.col(j) *= rng.uniform(0.4, 1.0) / atoms.col(j).norm();
    }
    inst.dict = GlobalDictionary(std::move(atoms), classes);
    inst.X.resize(m, n);
    inst.codes.resize(classes * kprime, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        for (Eigen::Index i = 0; i < m; ++i) inst.X(i, c) = rng.uniform(-1.0, 1.0);
        for (Eigen::Index i = 0; i < inst.codes.rows(); ++i) {
            inst.codes(i, c) = rng.uniform() < 0.5 ? 0.0 : rng.uniform(-1.0, 1.0);
        }
        inst.labels.push_back(static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(classes))));
    }
    const double grid_vals[3] = {0.1, 0.2, 0.3};
    inst.hp = small_hp();
    inst.hp.lambda = grid_vals[rng.uniform_int(3)];
    inst.hp.gamma1 = grid_vals[rng.uniform_int(3)];
    inst.hp.gamma2 = grid_vals[rng.uniform_int(3)];
    return inst;
}

// Central finite differences of the objective with respect to D_p.
Eigen::MatrixXd fd_gradient(const RandomInstance& inst, int p, double step) {
    const Eigen::Index block = inst.dict.atoms_per_class();
    const Eigen::Index off = static_cast<Eigen::Index>(p) * block;
    Eigen::MatrixXd grad(inst.dict.feature_dim(), block);
    for (Eigen::Index k = 0; k < block; ++k) {
        for (Eigen::Index i = 0; i < inst.dict.feature_dim(); ++i) {
            GlobalDictionary plus = inst.dict;
            GlobalDictionary minus = inst.dict;
            plus.atoms()(i, off + k) += step;
            minus.atoms()(i, off + k) -= step;
            const double fp = objective(plus, inst.codes, inst.X, inst.labels, inst.hp).total;
            const double fm = objective(minus, inst.codes, inst.X, inst.labels, inst.hp).total;
            grad(i, k) = (fp - fm) / (2.0 * step);
        }
    }
    return grad;
}

}  // namespace

TEST_CASE("objective on hand-computed instances") {
    Hyperparams hp = small_hp();

    SUBCASE("unexplained unit sample") {
        GlobalDictionary dict(Eigen::Vector2d(1, 0), 1);
        Eigen::MatrixXd X = Eigen::Vector2d(1, 0);
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(1, 1);
        auto o = objective(dict, A, X, {0}, hp);
        CHECK(o.j1 == 1.0);
        CHECK(o.j2 == 1.0);
        CHECK(o.j3 == 0.0);
        CHECK(o.j4 == 0.0);
        CHECK(o.j5 == 0.0);
        CHECK(o.total == 2.0);
    }
    SUBCASE("perfect reconstruction leaves only the sparsity term") {
        GlobalDictionary dict(Eigen::Vector2d(0.6, 0.8), 1);
        Eigen::MatrixXd X = Eigen::Vector2d(0.6, 0.8);
        Eigen::MatrixXd A = Eigen::MatrixXd::Ones(1, 1);
        auto o = objective(dict, A, X, {0}, hp);
        CHECK(o.total == doctest::Approx(0.1).epsilon(1e-12));
    }
    SUBCASE("aligned class dictionaries pay the orthogonality price") {
        Eigen::MatrixXd atoms(2, 2);
        atoms.col(0) = Eigen::Vector2d(1, 0);
        atoms.col(1) = Eigen::Vector2d(1, 0);
        GlobalDictionary dict(atoms, 2);
        Eigen::MatrixXd X(2, 0);
        Eigen::MatrixXd A(2, 0);
        hp.gamma2 = 0.3;
        auto o = objective(dict, A, X, {}, hp);
        CHECK(o.j5 == 2.0);  // both ordered pairs
        CHECK(o.total == doctest::Approx(0.6).epsilon(1e-12));
    }
}

TEST_CASE("objective reduces to a doubled Lasso for one class") {
    Rng rng(17);
    for (int rep = 0; rep < 5; ++rep) {
        Eigen::MatrixXd atoms(3, 2);
        for (Eigen::Index j = 0; j < 2; ++j)
            for (Eigen::Index i = 0; i < 3; ++i) atoms(i, j) = rng.uniform(-1, 1) * 0.5;
        GlobalDictionary dict(atoms, 1);
        Eigen::MatrixXd X(3, 1);
        for (Eigen::Index i = 0; i < 3; ++i) X(i, 0) = rng.uniform(-1, 1);
        Eigen::MatrixXd A(2, 1);
        A << rng.uniform(-1, 1), rng.uniform(-1, 1);
        Hyperparams hp = small_hp();
        hp.gamma1 = 0.0;
        hp.gamma2 = 0.0;
        auto o = objective(dict, A, X, {0}, hp);
        const double expect = 2.0 * (X.col(0) - atoms * A.col(0)).squaredNorm() +
                              hp.lambda * A.col(0).lpNorm<1>();
        CHECK(o.total == doctest::Approx(expect).epsilon(1e-12));
        CHECK(o.j1 == doctest::Approx(o.j2).epsilon(1e-12));
    }
}

TEST_CASE("J5 vanishes exactly for orthogonal class dictionaries") {
    Eigen::MatrixXd atoms = Eigen::MatrixXd::Identity(4, 4);
    GlobalDictionary ortho(atoms, 2);
    Eigen::MatrixXd X(4, 0);
    Eigen::MatrixXd A(4, 0);
    auto o = objective(ortho, A, X, {}, small_hp());
    CHECK(o.j5 == 0.0);

    atoms(0, 2) = 0.4;  // introduce cross-class overlap
    GlobalDictionary oblique(atoms, 2);
    auto o2 = objective(oblique, A, X, {}, small_hp());
    CHECK(o2.j5 > 0.0);
}

TEST_CASE("gradient of J5 on aligned single-atom dictionaries") {
    Eigen::MatrixXd atoms(2, 2);
    atoms.col(0) = Eigen::Vector2d(1, 0);
    atoms.col(1) = Eigen::Vector2d(1, 0);
    GlobalDictionary dict(atoms, 2);
    Eigen::MatrixXd X(2, 0);
    Eigen::MatrixXd A(2, 0);
    Hyperparams hp = small_hp();
    hp.gamma2 = 1.0;
    auto g = grad_dictionary(0, dict, A, X, {}, hp);
    CHECK(g.rows() == 2);
    CHECK(g.cols() == 1);
    CHECK(g(0, 0) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(g(1, 0) == 0.0);

    SUBCASE("orthogonal atoms have zero gradient") {
        atoms.col(1) = Eigen::Vector2d(0, 1);
        GlobalDictionary ortho(atoms, 2);
        auto g2 = grad_dictionary(0, ortho, A, X, {}, hp);
        CHECK(g2.norm() == 0.0);
    }
}

TEST_CASE("gradient matches finite differences on a random instance") {
    Rng rng(123);
    RandomInstance inst = random_instance(rng, 8, 3, 4, 10);
    GradientWorkspace ws;
    ws.prepare(inst.dict, inst.codes, inst.X);
    for (int p = 0; p < 3; ++p) {
        Eigen::MatrixXd analytic =
            grad_dictionary(p, inst.dict, inst.codes, inst.X, inst.labels, inst.hp, ws);
        Eigen::MatrixXd numeric = fd_gradient(inst, p, 1e-6);
        const double rel = (analytic - numeric).norm() / (numeric.norm() + 1e-30);
        CHECK(rel < 1e-5);
    }
}

TEST_CASE("prox normalization only touches oversized atoms") {
    Eigen::MatrixXd atoms(2, 3);
    atoms.col(0) = Eigen::Vector2d(2, 0);
    atoms.col(1) = Eigen::Vector2d(0.5, 0);
    atoms.col(2) = Eigen::Vector2d(0, 0);
    auto out = prox_normalize(GlobalDictionary(atoms, 3));
    CHECK(out.atoms().col(0).isApprox(Eigen::Vector2d(1, 0)));
    CHECK(out.atoms().col(1) == Eigen::Vector2d(0.5, 0));
    CHECK(out.atoms().col(2) == Eigen::Vector2d(0, 0));
    CHECK(out.max_atom_norm() <= 1.0 + 1e-10);
}

TEST_CASE("ksvd recovers a repeated sample as the atom") {
    Eigen::VectorXd u(3);
    u << 0.6, 0.0, 0.8;
    Eigen::MatrixXd X(3, 4);
    for (int n = 0; n < 4; ++n) X.col(n) = u;
    auto dict = ksvd_init(X, {0, 0, 0, 0}, 1, 10, 7);
    CHECK(dict.num_classes() == 1);
    CHECK(dict.atoms().col(0).isApprox(u, 1e-10));  // sign fixed to positive lead
}

TEST_CASE("ksvd spans an exact low-dimensional subspace") {
    Rng rng(31);
    Eigen::VectorXd b1 = Eigen::VectorXd::Zero(5);
    Eigen::VectorXd b2 = Eigen::VectorXd::Zero(5);
    b1[0] = 1.0;
    b2[2] = 1.0;
    Eigen::MatrixXd X(5, 8);
    for (int n = 0; n < 8; ++n) X.col(n) = rng.uniform(-1, 1) * b1 + rng.uniform(-1, 1) * b2;
    auto dict = ksvd_init(X, std::vector<int>(8, 0), 2, 10, 3);

    // Project every sample onto the atom span; residual should vanish.
    Eigen::MatrixXd D = dict.atoms();
    Eigen::MatrixXd proj = D * (D.transpose() * D).ldlt().solve(D.transpose() * X);
    CHECK((X - proj).norm() <= 1e-6);

    for (Eigen::Index k = 0; k < dict.total_atoms(); ++k) {
        CHECK(dict.atoms().col(k).norm() == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("ksvd needs enough samples per class") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(3, 3);
    CHECK_THROWS_AS(ksvd_init(X, {0, 0, 1}, 2, 5, 1), InsufficientSamples);
}

TEST_CASE("fit leaves the dictionary untouched on all-zero data") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(3, 6);
    std::vector<int> y = {0, 0, 0, 1, 1, 1};
    Eigen::MatrixXd atoms(3, 2);
    atoms.col(0) = Eigen::Vector3d(1, 0, 0);
    atoms.col(1) = Eigen::Vector3d(0, 1, 0);
    GlobalDictionary init(atoms, 2);
    Hyperparams hp = small_hp();
    hp.gamma2 = 0.0;  // with orthogonality off, every gradient vanishes
    hp.iterations = 5;
    hp.kprime = 1;
    auto res = fit(X, y, hp, init, 99);
    CHECK(res.codes.isZero(0.0));
    CHECK(res.dictionary.atoms() == init.atoms());
    for (const auto& it : res.report.trace) CHECK(!it.step_accepted);
}

TEST_CASE("fit recovers orthogonal one-dimensional class subspaces") {
    Rng rng(2024);
    const int per_class = 12;
    Eigen::MatrixXd X(2, 2 * per_class);
    std::vector<int> y;
    for (int n = 0; n < per_class; ++n) {
        X.col(n) = Eigen::Vector2d(rng.uniform(0.5, 1.5), 0.0);
        y.push_back(0);
    }
    for (int n = 0; n < per_class; ++n) {
        X.col(per_class + n) = Eigen::Vector2d(0.0, rng.uniform(0.5, 1.5));
        y.push_back(1);
    }
    Hyperparams hp;
    hp.lambda = 0.05;
    hp.gamma1 = 0.1;
    hp.gamma2 = 0.1;
    hp.kprime = 1;
    hp.iterations = 50;
    auto res = fit(X, y, hp, std::nullopt, 5);

    const double cos0 = std::abs(res.dictionary.atoms()(0, 0)) / res.dictionary.atoms().col(0).norm();
    const double cos1 = std::abs(res.dictionary.atoms()(1, 1)) / res.dictionary.atoms().col(1).norm();
    CHECK(cos0 > 0.9);
    CHECK(cos1 > 0.9);
    CHECK(res.dictionary.max_atom_norm() <= 1.0 + 1e-10);
}

TEST_CASE("fit trace is monotone at fixed codes and end to end") {
    Rng rng(55);
    RandomInstance inst = random_instance(rng, 6, 2, 2, 12);
    std::vector<int> y;
    for (int n = 0; n < 12; ++n) y.push_back(n % 2);
    Hyperparams hp = small_hp();
    hp.kprime = 2;
    hp.iterations = 20;
    auto res = fit(inst.X, y, hp, std::nullopt, 3);

    double prev = std::numeric_limits<double>::infinity();
    for (const auto& it : res.report.trace) {
        CHECK(it.after_coding.total <= prev * (1 + 1e-10) + 1e-15);
        if (it.step_accepted) {
            CHECK(it.after_step.total < it.after_coding.total);
        } else {
            CHECK(it.after_step.total == it.after_coding.total);
        }
        prev = it.after_step.total;
    }
}

TEST_CASE("fit is deterministic for a fixed seed") {
    Rng rng(91);
    RandomInstance inst = random_instance(rng, 5, 2, 2, 10);
    std::vector<int> y;
    for (int n = 0; n < 10; ++n) y.push_back(n % 2);
    Hyperparams hp = small_hp();
    hp.kprime = 2;
    hp.iterations = 8;
    auto a = fit(inst.X, y, hp, std::nullopt, 42, 2);
    auto b = fit(inst.X, y, hp, std::nullopt, 42, 1);
    CHECK(a.dictionary.atoms() == b.dictionary.atoms());
    CHECK(a.codes == b.codes);
    REQUIRE(a.report.trace.size() == b.report.trace.size());
    for (std::size_t t = 0; t < a.report.trace.size(); ++t) {
        CHECK(a.report.trace[t].after_step.total == b.report.trace[t].after_step.total);
        CHECK(a.report.trace[t].backtracks == b.report.trace[t].backtracks);
    }
}

TEST_CASE("fit rejects degenerate inputs") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(3, 4);
    Hyperparams hp = small_hp();
    hp.kprime = 1;
    CHECK_THROWS_AS(fit(X, {0, 0, 2, 2}, hp, std::nullopt, 1), InsufficientSamples);
    CHECK_THROWS_AS(fit(Eigen::MatrixXd(3, 0), {}, hp, std::nullopt, 1), InsufficientSamples);
}

TEST_CASE("fit aborts on a non-finite objective") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Constant(2, 4, 1e200);
    Hyperparams hp = small_hp();
    hp.kprime = 1;
    CHECK_THROWS_AS(fit(X, {0, 0, 1, 1}, hp, std::nullopt, 1), NonFiniteObjective);
}

TEST_CASE("dictionary similarity structure") {
    SUBCASE("identical single atoms") {
        Eigen::MatrixXd atoms(2, 2);
        atoms.col(0) = Eigen::Vector2d(1, 0);
        atoms.col(1) = Eigen::Vector2d(1, 0);
        auto sim = dictionary_similarity(GlobalDictionary(atoms, 2));
        CHECK(sim(0, 1) == doctest::Approx(1.0));
        CHECK(sim == sim.transpose().eval());
    }
    SUBCASE("orthogonal single atoms") {
        Eigen::MatrixXd atoms = Eigen::MatrixXd::Identity(2, 2);
        auto sim = dictionary_similarity(GlobalDictionary(atoms, 2));
        CHECK(sim(0, 1) == 0.0);
        CHECK(sim(1, 0) == 0.0);
    }
    SUBCASE("diagonal is sqrt(K') for orthonormal atoms") {
        Eigen::MatrixXd atoms = Eigen::MatrixXd::Identity(6, 6);
        auto sim = dictionary_similarity(GlobalDictionary(atoms, 2));
        CHECK(sim(0, 0) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
        CHECK(sim(1, 1) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
    }
}
