#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "loadtrack/error.hpp"

namespace loadtrack {

enum class BoosterKind : std::uint8_t { linear, linear_interactions, tree };

inline const char* to_string(BoosterKind k) {
    switch (k) {
        case BoosterKind::linear: return "linear";
        case BoosterKind::linear_interactions: return "linear_interactions";
        case BoosterKind::tree: return "tree";
    }
    return "?";
}

inline BoosterKind parse_booster(const std::string& s) {
    if (s == "linear") return BoosterKind::linear;
    if (s == "linear_interactions") return BoosterKind::linear_interactions;
    if (s == "tree") return BoosterKind::tree;
    fail(ErrorCode::invalid_config, "unknown booster kind: '" + s + "'");
}

struct BoostSpec {
    BoosterKind booster = BoosterKind::linear;
    int rounds = 300;
    double learning_rate = 0.1;
    int max_depth = 4;        // tree booster only
    double l2 = 1.0;
    int min_samples_leaf = 20;  // tree booster only
    std::uint64_t seed = 0;

    void validate() const {
        if (rounds < 1) fail(ErrorCode::invalid_config, "boost spec: rounds must be >= 1");
        if (!(learning_rate > 0.0) || learning_rate > 1.0)
            fail(ErrorCode::invalid_config, "boost spec: learning_rate must be in (0, 1]");
        if (l2 < 0.0) fail(ErrorCode::invalid_config, "boost spec: l2 must be >= 0");
        if (booster == BoosterKind::tree) {
            if (max_depth < 1) fail(ErrorCode::invalid_config, "boost spec: depth must be >= 1");
            if (min_samples_leaf < 1)
                fail(ErrorCode::invalid_config, "boost spec: min_samples_leaf must be >= 1");
        }
    }
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf weight
    double gain = 0.0;   // split gain, zero on leaves
};

struct RegressionTree {
    std::vector<TreeNode> nodes;

    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        int i = 0;
        while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
            const TreeNode& n = nodes[static_cast<std::size_t>(i)];
            i = x[n.feature] < n.threshold ? n.left : n.right;
        }
        return nodes[static_cast<std::size_t>(i)].value;
    }
};

// Additive squared-error ensemble F_m = F_{m-1} + eta * f_m, where each f_m
// fits the current residuals: a ridge-penalized linear model for the linear
// boosters, a depth-limited regression tree for the tree booster.
struct BoostFit {
    BoostSpec spec;
    double base_score = 0.0;
    bool constant_model = false;

    // linear boosters: accumulated coefficients, canonical prediction path
    Eigen::VectorXd coef;
    double intercept = 0.0;  // includes base_score

    // tree booster
    std::vector<RegressionTree> trees;

    std::vector<double> round_losses;  // training MSE after each round
    std::vector<std::string> warnings;

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const {
        Eigen::VectorXd out = Eigen::VectorXd::Constant(X.rows(), base_score);
        if (constant_model) return out;
        if (spec.booster == BoosterKind::tree) {
            for (const RegressionTree& tree : trees)
                for (long i = 0; i < X.rows(); ++i)
                    out[i] += spec.learning_rate * tree.predict_row(X.row(i));
        } else {
            out = Eigen::VectorXd::Constant(X.rows(), intercept);
            out.noalias() += X * coef;
        }
        return out;
    }

    // |coefficient| for linear boosters, total split gain for trees.
    std::vector<double> feature_importance(long n_features) const {
        std::vector<double> imp(static_cast<std::size_t>(n_features), 0.0);
        if (constant_model) return imp;
        if (spec.booster == BoosterKind::tree) {
            for (const RegressionTree& tree : trees)
                for (const TreeNode& n : tree.nodes)
                    if (n.feature >= 0) imp[static_cast<std::size_t>(n.feature)] += n.gain;
        } else {
            for (long c = 0; c < coef.size(); ++c)
                imp[static_cast<std::size_t>(c)] = std::abs(coef[c]);
        }
        return imp;
    }
};

namespace detail {

inline constexpr double kMinSplitGain = 1e-12;

struct TreeBuilder {
    const Eigen::MatrixXd& X;
    const BoostSpec& spec;
    std::vector<std::vector<int>> sorted_idx;  // per feature, rows sorted by value

    explicit TreeBuilder(const Eigen::MatrixXd& x, const BoostSpec& s) : X(x), spec(s) {
        const long p = X.cols();
        const long n = X.rows();
        sorted_idx.resize(static_cast<std::size_t>(p));
        for (long f = 0; f < p; ++f) {
            auto& idx = sorted_idx[static_cast<std::size_t>(f)];
            idx.resize(static_cast<std::size_t>(n));
            std::iota(idx.begin(), idx.end(), 0);
            std::stable_sort(idx.begin(), idx.end(),
                             [&](int a, int b) { return X(a, f) < X(b, f); });
        }
    }

    // Grows one depth-limited tree on residuals r; also deposits the trained
    // tree's per-sample output into `out` (leaf assignment is a byproduct of
    // training, so no traversal is needed here). The split gain uses the
    // usual regularized reduction G_L^2/(n_L+l2) + G_R^2/(n_R+l2) - G^2/(n+l2).
    RegressionTree grow(const Eigen::VectorXd& r, std::vector<double>& out) {
        const long n = X.rows();
        const long p = X.cols();
        RegressionTree tree;

        struct NodeStats {
            double grad_sum = 0.0;
            long count = 0;
            // best candidate split
            double best_gain = 0.0;
            int best_feature = -1;
            double best_threshold = 0.0;
            bool splittable = false;
        };

        std::vector<int> node_of(static_cast<std::size_t>(n), 0);
        tree.nodes.push_back({});
        std::vector<int> active = {0};
        std::vector<NodeStats> stats(1);
        stats[0].grad_sum = r.sum();
        stats[0].count = n;

        for (int depth = 0; depth < spec.max_depth && !active.empty(); ++depth) {
            for (int id : active) {
                auto& st = stats[static_cast<std::size_t>(id)];
                st.best_gain = kMinSplitGain;
                st.best_feature = -1;
                st.splittable = st.count >= 2 * spec.min_samples_leaf;
            }

            // running per-node accumulators for the current feature sweep
            std::vector<double> run_grad(stats.size());
            std::vector<long> run_count(stats.size());
            std::vector<double> last_value(stats.size());

            for (long f = 0; f < p; ++f) {
                for (int id : active) {
                    run_grad[static_cast<std::size_t>(id)] = 0.0;
                    run_count[static_cast<std::size_t>(id)] = 0;
                }
                for (int row : sorted_idx[static_cast<std::size_t>(f)]) {
                    const int id = node_of[static_cast<std::size_t>(row)];
                    if (id < 0) continue;
                    auto& st = stats[static_cast<std::size_t>(id)];
                    if (!st.splittable) continue;
                    const double v = X(row, f);
                    const long nl = run_count[static_cast<std::size_t>(id)];
                    if (nl > 0 && v > last_value[static_cast<std::size_t>(id)]) {
                        const long nr = st.count - nl;
                        if (nl >= spec.min_samples_leaf && nr >= spec.min_samples_leaf) {
                            const double gl = run_grad[static_cast<std::size_t>(id)];
                            const double gr = st.grad_sum - gl;
                            const double gain =
                                gl * gl / (static_cast<double>(nl) + spec.l2) +
                                gr * gr / (static_cast<double>(nr) + spec.l2) -
                                st.grad_sum * st.grad_sum /
                                    (static_cast<double>(st.count) + spec.l2);
                            if (gain > st.best_gain) {
                                st.best_gain = gain;
                                st.best_feature = static_cast<int>(f);
                                st.best_threshold =
                                    0.5 * (last_value[static_cast<std::size_t>(id)] + v);
                            }
                        }
                    }
                    run_grad[static_cast<std::size_t>(id)] += r[row];
                    run_count[static_cast<std::size_t>(id)] += 1;
                    last_value[static_cast<std::size_t>(id)] = v;
                }
            }

            // realize the chosen splits and push children to the next level
            std::vector<int> next_active;
            for (int id : active) {
                const auto st = stats[static_cast<std::size_t>(id)];
                if (st.best_feature < 0) continue;
                const int left = static_cast<int>(tree.nodes.size());
                {
                    TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
                    node.feature = st.best_feature;
                    node.threshold = st.best_threshold;
                    node.gain = st.best_gain;
                    node.left = left;
                    node.right = left + 1;
                }
                tree.nodes.push_back({});
                tree.nodes.push_back({});
                stats.push_back({});
                stats.push_back({});
                next_active.push_back(left);
                next_active.push_back(left + 1);
            }
            if (next_active.empty()) break;
            run_grad.resize(stats.size());
            run_count.resize(stats.size());
            last_value.resize(stats.size());

            for (long row = 0; row < n; ++row) {
                int& id = node_of[static_cast<std::size_t>(row)];
                const TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
                if (node.feature < 0) continue;
                id = X(row, node.feature) < node.threshold ? node.left : node.right;
                auto& st = stats[static_cast<std::size_t>(id)];
                st.grad_sum += r[row];
                st.count += 1;
            }
            active = std::move(next_active);
        }

        // leaf weights: ridge-shrunk residual means
        for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
            TreeNode& node = tree.nodes[id];
            if (node.feature >= 0) continue;
            const auto& st = stats[id];
            node.value = st.grad_sum / (static_cast<double>(st.count) + spec.l2);
        }
        for (long row = 0; row < n; ++row)
            out[static_cast<std::size_t>(row)] =
                tree.nodes[static_cast<std::size_t>(node_of[static_cast<std::size_t>(row)])].value;
        return tree;
    }
};

}  // namespace detail

// X must already carry any interaction expansion; the linear and
// linear_interactions boosters differ only in the design they receive.
inline BoostFit fit_boosted(const BoostSpec& spec, const Eigen::MatrixXd& X,
                            const Eigen::VectorXd& y) {
    spec.validate();
    if (X.rows() != y.size()) fail(ErrorCode::data_error, "fit_boosted: X/y row mismatch");
    if (X.rows() == 0) fail(ErrorCode::data_error, "fit_boosted: empty training data");
    if (!X.allFinite() || !y.allFinite())
        fail(ErrorCode::data_error, "fit_boosted: non-finite values in training data");

    BoostFit fit;
    fit.spec = spec;
    fit.base_score = y.mean();

    const double var = (y.array() - fit.base_score).square().sum();
    if (var == 0.0) {
        fit.constant_model = true;
        fit.intercept = fit.base_score;
        fit.coef = Eigen::VectorXd::Zero(X.cols());
        fit.warnings.push_back("degenerate target with zero variance; fitted constant model");
        return fit;
    }

    const long n = X.rows();
    Eigen::VectorXd pred = Eigen::VectorXd::Constant(n, fit.base_score);
    fit.round_losses.reserve(static_cast<std::size_t>(spec.rounds));

    if (spec.booster == BoosterKind::tree) {
        detail::TreeBuilder builder(X, spec);
        std::vector<double> tree_out(static_cast<std::size_t>(n));
        for (int m = 0; m < spec.rounds; ++m) {
            const Eigen::VectorXd r = y - pred;
            fit.trees.push_back(builder.grow(r, tree_out));
            for (long i = 0; i < n; ++i)
                pred[i] += spec.learning_rate * tree_out[static_cast<std::size_t>(i)];
            fit.round_losses.push_back((y - pred).squaredNorm() / static_cast<double>(n));
        }
    } else {
        // augmented design [1 | X]; intercept direction is unpenalized
        Eigen::MatrixXd Z(n, X.cols() + 1);
        Z.col(0).setOnes();
        Z.rightCols(X.cols()) = X;
        Eigen::MatrixXd A = Z.transpose() * Z;
        for (long c = 1; c < A.cols(); ++c) A(c, c) += spec.l2;
        Eigen::LDLT<Eigen::MatrixXd> solver(A);
        if (solver.info() != Eigen::Success)
            fail(ErrorCode::data_error, "fit_boosted: ridge system factorization failed");

        Eigen::VectorXd acc = Eigen::VectorXd::Zero(Z.cols());
        for (int m = 0; m < spec.rounds; ++m) {
            const Eigen::VectorXd b = Z.transpose() * (y - pred);
            const Eigen::VectorXd w = solver.solve(b);
            pred.noalias() += spec.learning_rate * (Z * w);
            acc += spec.learning_rate * w;
            fit.round_losses.push_back((y - pred).squaredNorm() / static_cast<double>(n));
        }
        fit.intercept = fit.base_score + acc[0];
        fit.coef = acc.tail(X.cols());
    }
    return fit;
}

}  // namespace loadtrack
