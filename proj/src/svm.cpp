#include "audiodict/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace audiodict {

namespace {

constexpr double kTau = 1e-12;
constexpr long kMaxSmoIterations = 10000000;

double int_pow(double base, int exp) {
    double out = 1.0;
    for (int i = 0; i < exp; ++i) out *= base;
    return out;
}

}  // namespace

double KernelSpec::eval(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    const double dot = u.dot(v);
    if (type == Type::linear) return dot;
    return int_pow(dot + coef0, degree);
}

double BinarySvm::decision(const Eigen::VectorXd& a) const {
    if (a.size() != input_dim) throw DimensionMismatch("code dimension mismatch");
    if (kernel.type == KernelSpec::Type::linear) return linear_weights.dot(a) + bias;
    double sum = bias;
    for (Eigen::Index i = 0; i < support_vectors.cols(); ++i) {
        sum += coefs[i] * kernel.eval(support_vectors.col(i), a);
    }
    return sum;
}

BinarySvm svm_train_binary(const Eigen::MatrixXd& X, const std::vector<int>& y, double c_svm,
                           const KernelSpec& kernel, double tol) {
    const Eigen::Index n = X.cols();
    if (static_cast<Eigen::Index>(y.size()) != n) throw DimensionMismatch("label count mismatch");
    if (c_svm <= 0.0) throw InvalidParam("C_svm must be positive");
    if (tol <= 0.0) throw InvalidParam("tol must be positive");
    bool has_pos = false, has_neg = false;
    for (int v : y) {
        if (v == 1) has_pos = true;
        else if (v == -1) has_neg = true;
        else throw InvalidParam("binary labels must be -1 or +1");
    }
    if (!has_pos || !has_neg) throw SingleClassInput("need samples of both signs");

    // Q_ij = y_i y_j k(x_i, x_j), computed once; training sets here are small.
    Eigen::MatrixXd Q(n, n);
    {
        Eigen::MatrixXd gram = X.transpose() * X;
        if (kernel.type == KernelSpec::Type::polynomial) {
            gram = (gram.array() + kernel.coef0)
                       .unaryExpr([&](double v) { return int_pow(v, kernel.degree); })
                       .matrix();
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                Q(i, j) = y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)] * gram(i, j);
            }
        }
    }

    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd g = Eigen::VectorXd::Constant(n, -1.0);  // gradient of the dual

    long iter = 0;
    bool converged = false;
    while (iter < kMaxSmoIterations) {
        // Maximal violating pair.
        double m_up = -std::numeric_limits<double>::infinity();
        double m_low = std::numeric_limits<double>::infinity();
        Eigen::Index i = -1, j = -1;
        for (Eigen::Index t = 0; t < n; ++t) {
            const int yt = y[static_cast<std::size_t>(t)];
            const double val = -yt * g[t];
            const bool in_up = (yt == 1 && alpha[t] < c_svm) || (yt == -1 && alpha[t] > 0.0);
            const bool in_low = (yt == 1 && alpha[t] > 0.0) || (yt == -1 && alpha[t] < c_svm);
            if (in_up && val > m_up) {
                m_up = val;
                i = t;
            }
            if (in_low && val < m_low) {
                m_low = val;
                j = t;
            }
        }
        if (i < 0 || j < 0 || m_up - m_low <= tol) {
            converged = true;
            break;
        }
        ++iter;

        const double old_ai = alpha[i], old_aj = alpha[j];
        const int yi = y[static_cast<std::size_t>(i)], yj = y[static_cast<std::size_t>(j)];
        if (yi != yj) {
            double quad = Q(i, i) + Q(j, j) + 2.0 * Q(i, j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (-g[i] - g[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else {
                if (alpha[i] < 0.0) {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
            }
            if (diff > 0.0) {
                if (alpha[i] > c_svm) {
                    alpha[i] = c_svm;
                    alpha[j] = c_svm - diff;
                }
            } else {
                if (alpha[j] > c_svm) {
                    alpha[j] = c_svm;
                    alpha[i] = c_svm + diff;
                }
            }
        } else {
            double quad = Q(i, i) + Q(j, j) - 2.0 * Q(i, j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (g[i] - g[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > c_svm) {
                if (alpha[i] > c_svm) {
                    alpha[i] = c_svm;
                    alpha[j] = sum - c_svm;
                }
            } else {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
            }
            if (sum > c_svm) {
                if (alpha[j] > c_svm) {
                    alpha[j] = c_svm;
                    alpha[i] = sum - c_svm;
                }
            } else {
                if (alpha[i] < 0.0) {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }
        g += Q.col(i) * (alpha[i] - old_ai) + Q.col(j) * (alpha[j] - old_aj);
    }

    // Bias from the free support vectors, midpoint of the bounds otherwise.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    int n_free = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        const int yt = y[static_cast<std::size_t>(t)];
        const double yg = yt * g[t];
        if (alpha[t] >= c_svm) {
            if (yt == -1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (alpha[t] <= 0.0) {
            if (yt == 1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    const double rho = n_free > 0 ? sum_free / n_free : (ub + lb) / 2.0;

    BinarySvm model;
    model.kernel = kernel;
    model.c_svm = c_svm;
    model.bias = -rho;
    model.input_dim = X.rows();
    model.converged = converged;
    model.iterations = iter;

    std::vector<Eigen::Index> sv;
    for (Eigen::Index t = 0; t < n; ++t) {
        if (alpha[t] > 0.0) sv.push_back(t);
    }
    model.support_vectors.resize(X.rows(), static_cast<Eigen::Index>(sv.size()));
    model.coefs.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t s = 0; s < sv.size(); ++s) {
        model.support_vectors.col(static_cast<Eigen::Index>(s)) = X.col(sv[s]);
        model.coefs[static_cast<Eigen::Index>(s)] =
            alpha[sv[s]] * y[static_cast<std::size_t>(sv[s])];
    }
    if (kernel.type == KernelSpec::Type::linear) {
        model.linear_weights = model.support_vectors * model.coefs;
        if (sv.empty()) model.linear_weights = Eigen::VectorXd::Zero(X.rows());
    }
    return model;
}

Eigen::VectorXd OvaSvmModel::decision_values(const Eigen::VectorXd& a) const {
    Eigen::VectorXd out(num_classes());
    for (int c = 0; c < num_classes(); ++c) out[c] = machines[static_cast<std::size_t>(c)].decision(a);
    return out;
}

OvaSvmModel ova_train(const Eigen::MatrixXd& X, const std::vector<int>& y, double c_svm,
                      const KernelSpec& kernel, double tol) {
    const Eigen::Index n = X.cols();
    if (static_cast<Eigen::Index>(y.size()) != n) throw DimensionMismatch("label count mismatch");
    if (n < 1) throw MissingClass("no training samples");
    const int num_classes = 1 + *std::max_element(y.begin(), y.end());
    if (*std::min_element(y.begin(), y.end()) < 0) throw LabelOutOfRange("negative label");
    if (num_classes < 2) throw MissingClass("one-against-all needs at least two classes");
    std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
    for (int v : y) counts[static_cast<std::size_t>(v)]++;
    for (int c = 0; c < num_classes; ++c) {
        if (counts[static_cast<std::size_t>(c)] == 0) {
            throw MissingClass("class " + std::to_string(c) + " has no samples");
        }
    }

    OvaSvmModel model;
    model.input_dim = X.rows();
    model.machines.reserve(static_cast<std::size_t>(num_classes));
    std::vector<int> binary(y.size());
    for (int c = 0; c < num_classes; ++c) {
        for (std::size_t t = 0; t < y.size(); ++t) binary[t] = y[t] == c ? 1 : -1;
        model.machines.push_back(svm_train_binary(X, binary, c_svm, kernel, tol));
    }
    return model;
}

int ova_predict(const OvaSvmModel& model, const Eigen::VectorXd& a) {
    if (model.machines.empty()) throw InvalidParam("empty model");
    if (a.size() != model.input_dim) throw DimensionMismatch("code dimension mismatch");
    int best = 0;
    double best_val = model.machines[0].decision(a);
    for (int c = 1; c < model.num_classes(); ++c) {
        const double v = model.machines[static_cast<std::size_t>(c)].decision(a);
        if (v > best_val) {
            best_val = v;
            best = c;
        }
    }
    return best;
}

std::vector<int> ova_predict_batch(const OvaSvmModel& model, const Eigen::MatrixXd& A) {
    std::vector<int> out(static_cast<std::size_t>(A.cols()));
    for (Eigen::Index n = 0; n < A.cols(); ++n) {
        out[static_cast<std::size_t>(n)] = ova_predict(model, A.col(n));
    }
    return out;
}

}  // namespace audiodict
