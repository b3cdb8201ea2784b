#include "chda/proxy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "chda/errors.hpp"
#include "chda/parallel.hpp"

namespace chda::proxy {
namespace {

struct SplitResult {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

/// Best SSE-reducing split over the candidate features for the samples in
/// idx. Deterministic: features scanned in the given order, strictly-better
/// gains win.
SplitResult best_split(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const std::vector<int>& idx, const std::vector<int>& features,
                       int min_leaf, double leaf_reg) {
    const int n = static_cast<int>(idx.size());
    SplitResult best;

    std::vector<std::pair<double, double>> xy(idx.size());
    for (int f : features) {
        for (int s = 0; s < n; ++s) xy[s] = {X(idx[s], f), y[idx[s]]};
        std::sort(xy.begin(), xy.end());
        if (xy.front().first == xy.back().first) continue;

        double suml = 0.0;
        double sumr = 0.0;
        for (int s = 0; s < n; ++s) sumr += xy[s].second;
        const double total = sumr;

        for (int s = 0; s < n - 1; ++s) {
            suml += xy[s].second;
            sumr = total - suml;
            if (xy[s].first == xy[s + 1].first) continue;
            const int nl = s + 1;
            const int nr = n - nl;
            if (nl < min_leaf || nr < min_leaf) continue;
            const double gain = suml * suml / (nl + leaf_reg) + sumr * sumr / (nr + leaf_reg) -
                                total * total / (n + leaf_reg);
            if (gain > best.gain) {
                best.gain = gain;
                best.feature = f;
                best.threshold = 0.5 * (xy[s].first + xy[s + 1].first);
            }
        }
    }
    return best;
}

struct TreeBuilder {
    const Eigen::MatrixXd& X;
    const Eigen::VectorXd& y;
    int min_leaf;
    int max_depth;  // -1 = unlimited
    int mtry;       // 0 = all features
    double leaf_reg;  // 0 for plain leaf means
    RngStream* rng = nullptr;

    Tree tree;

    int build(std::vector<int>& idx, int depth) {
        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        double sum = 0.0;
        for (int s : idx) sum += y[s];
        tree.nodes[node_id].value = sum / (static_cast<double>(idx.size()) + leaf_reg);

        const bool depth_cap = max_depth >= 0 && depth >= max_depth;
        if (depth_cap || static_cast<int>(idx.size()) < 2 * min_leaf) return node_id;

        std::vector<int> features;
        const int n_features = static_cast<int>(X.cols());
        if (mtry <= 0 || mtry >= n_features) {
            features.resize(n_features);
            std::iota(features.begin(), features.end(), 0);
        } else {
            // Partial Fisher-Yates over feature indices.
            features.resize(n_features);
            std::iota(features.begin(), features.end(), 0);
            for (int k = 0; k < mtry; ++k) {
                const auto pick = k + static_cast<int>(rng->below(n_features - k));
                std::swap(features[k], features[pick]);
            }
            features.resize(mtry);
            std::sort(features.begin(), features.end());
        }

        const SplitResult split = best_split(X, y, idx, features, min_leaf, leaf_reg);
        if (split.feature < 0 || split.gain <= 1e-12) return node_id;

        std::vector<int> left, right;
        left.reserve(idx.size());
        right.reserve(idx.size());
        for (int s : idx)
            (X(s, split.feature) <= split.threshold ? left : right).push_back(s);
        if (left.empty() || right.empty()) return node_id;

        tree.nodes[node_id].feature = split.feature;
        tree.nodes[node_id].threshold = split.threshold;
        idx.clear();
        idx.shrink_to_fit();
        tree.nodes[node_id].left = build(left, depth + 1);
        tree.nodes[node_id].right = build(right, depth + 1);
        return node_id;
    }
};

Tree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<int> idx,
              int min_leaf, int max_depth, int mtry, double leaf_reg, RngStream* rng) {
    TreeBuilder builder{X, y, min_leaf, max_depth, mtry, leaf_reg, rng, {}};
    builder.build(idx, 0);
    return std::move(builder.tree);
}

/// Level-order tree growth over presorted feature arrays: one pass per
/// (level, feature) finds every active node's best split simultaneously.
/// Same split semantics as the recursive builder (features ascending,
/// strictly-better gain wins); much faster when all features are scanned.
Tree fit_tree_levelwise(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const std::vector<std::vector<int>>& sorted_by_feature, int min_leaf,
                        int max_depth, double leaf_reg) {
    const int n = static_cast<int>(X.rows());
    const int n_features = static_cast<int>(X.cols());

    Tree tree;
    std::vector<int> node_of(static_cast<std::size_t>(n), 0);
    tree.nodes.emplace_back();

    struct NodeStat {
        int node_index = -1;  // index into tree.nodes
        int count = 0;
        double sum = 0.0;
        int best_feature = -1;
        double best_threshold = 0.0;
        double best_gain = 0.0;
    };
    struct Running {
        int cnt = 0;
        double sum = 0.0;
        double last_x = 0.0;
        bool open = false;
    };

    std::vector<NodeStat> level(1);
    level[0].node_index = 0;
    level[0].count = n;
    level[0].sum = y.sum();
    tree.nodes[0].value = level[0].sum / (n + leaf_reg);
    std::vector<int> slot_of_node = {0};

    for (int depth = 0; max_depth < 0 || depth < max_depth; ++depth) {
        const auto n_active = level.size();
        if (n_active == 0) break;

        std::vector<Running> run(n_active);
        for (int f = 0; f < n_features; ++f) {
            for (auto& r : run) r = Running{};
            for (int s : sorted_by_feature[static_cast<std::size_t>(f)]) {
                const int node = node_of[static_cast<std::size_t>(s)];
                if (node < 0) continue;
                const int slot = slot_of_node[static_cast<std::size_t>(node)];
                if (slot < 0) continue;
                Running& r = run[static_cast<std::size_t>(slot)];
                NodeStat& st = level[static_cast<std::size_t>(slot)];
                const double x = X(s, f);
                if (r.open && x > r.last_x && r.cnt >= min_leaf &&
                    st.count - r.cnt >= min_leaf) {
                    const double sumr = st.sum - r.sum;
                    const double gain = r.sum * r.sum / (r.cnt + leaf_reg) +
                                        sumr * sumr / (st.count - r.cnt + leaf_reg) -
                                        st.sum * st.sum / (st.count + leaf_reg);
                    if (gain > st.best_gain) {
                        st.best_gain = gain;
                        st.best_feature = f;
                        st.best_threshold = 0.5 * (r.last_x + x);
                    }
                }
                r.cnt += 1;
                r.sum += y[s];
                r.last_x = x;
                r.open = true;
            }
        }

        // Materialize splits and re-slot samples for the next level.
        std::vector<NodeStat> next;
        std::vector<int> next_slot(tree.nodes.size() + 2 * n_active, -1);
        bool any_split = false;
        for (auto& st : level) {
            if (st.best_feature < 0 || st.best_gain <= 1e-12) continue;
            any_split = true;
            auto& nd = tree.nodes[static_cast<std::size_t>(st.node_index)];
            nd.feature = st.best_feature;
            nd.threshold = st.best_threshold;
            nd.left = static_cast<int>(tree.nodes.size());
            nd.right = nd.left + 1;
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            NodeStat l, r;
            l.node_index = tree.nodes[static_cast<std::size_t>(st.node_index)].left;
            r.node_index = tree.nodes[static_cast<std::size_t>(st.node_index)].right;
            next.push_back(l);
            next.push_back(r);
        }
        if (!any_split) break;

        next_slot.assign(tree.nodes.size(), -1);
        for (std::size_t k = 0; k < next.size(); ++k)
            next_slot[static_cast<std::size_t>(next[k].node_index)] = static_cast<int>(k);

        for (int s = 0; s < n; ++s) {
            int node = node_of[static_cast<std::size_t>(s)];
            if (node < 0) continue;
            const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
            if (nd.feature < 0) {
                node_of[static_cast<std::size_t>(s)] = -1;  // settled in a leaf
                continue;
            }
            node = X(s, nd.feature) <= nd.threshold ? nd.left : nd.right;
            node_of[static_cast<std::size_t>(s)] = node;
            const int slot = next_slot[static_cast<std::size_t>(node)];
            next[static_cast<std::size_t>(slot)].count += 1;
            next[static_cast<std::size_t>(slot)].sum += y[s];
        }
        for (const auto& st : next)
            tree.nodes[static_cast<std::size_t>(st.node_index)].value =
                st.sum / (st.count + leaf_reg);

        slot_of_node = std::move(next_slot);
        level = std::move(next);
    }
    return tree;
}

std::vector<std::vector<int>> presort_features(const Eigen::MatrixXd& X) {
    std::vector<std::vector<int>> sorted(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index f = 0; f < X.cols(); ++f) {
        auto& order = sorted[static_cast<std::size_t>(f)];
        order.resize(static_cast<std::size_t>(X.rows()));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return X(a, f) < X(b, f); });
    }
    return sorted;
}

}  // namespace

std::string kind_name(Kind k) {
    switch (k) {
        case Kind::Linear: return "linear";
        case Kind::RandomForest: return "random-forest";
        case Kind::GradientBoosting: return "gradient-boosted-trees";
    }
    return "?";
}

Kind kind_from_name(const std::string& name) {
    if (name == "linear") return Kind::Linear;
    if (name == "random-forest" || name == "rf") return Kind::RandomForest;
    if (name == "gradient-boosted-trees" || name == "gbt") return Kind::GradientBoosting;
    throw std::invalid_argument("unknown proxy kind: " + name);
}

double Tree::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    int node = 0;
    while (nodes[node].feature >= 0)
        node = x[nodes[node].feature] <= nodes[node].threshold ? nodes[node].left
                                                               : nodes[node].right;
    return nodes[node].value;
}

ProxyModel ProxyModel::fit(const FitConfig& cfg, const Eigen::MatrixXd& X,
                           const Eigen::MatrixXd& D, RngStream& rng) {
    if (X.rows() != D.rows()) throw std::invalid_argument("proxy fit: row mismatch");
    if (X.rows() < 10) throw std::invalid_argument("proxy fit: need at least 10 rows");

    const auto start = std::chrono::steady_clock::now();
    const auto n = X.rows();
    const auto n_out = D.cols();

    ProxyModel m;
    m.kind_ = cfg.kind;
    m.n_features_ = static_cast<std::size_t>(X.cols());
    m.n_outputs_ = static_cast<std::size_t>(n_out);

    // Seeded shuffle, first 80% train / last 20% validation.
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    RngStream split_stream = rng.fork("split");
    m.split_seed_ = split_stream.stream_id();
    for (int k = static_cast<int>(n) - 1; k > 0; --k)
        std::swap(order[k], order[split_stream.below(static_cast<std::uint64_t>(k + 1))]);
    const auto n_val = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(
                                                     std::lround(cfg.validation_fraction * n)));
    const auto n_train = n - n_val;
    if (n_train < 2) throw std::invalid_argument("proxy fit: split leaves too few train rows");
    m.train_rows_.assign(order.begin(), order.begin() + n_train);
    m.validation_rows_.assign(order.begin() + n_train, order.end());

    Eigen::MatrixXd Xt(n_train, X.cols()), Xv(n_val, X.cols());
    Eigen::MatrixXd Dt(n_train, n_out), Dv(n_val, n_out);
    for (Eigen::Index r = 0; r < n_train; ++r) {
        Xt.row(r) = X.row(order[r]);
        Dt.row(r) = D.row(order[r]);
    }
    for (Eigen::Index r = 0; r < n_val; ++r) {
        Xv.row(r) = X.row(order[n_train + r]);
        Dv.row(r) = D.row(order[n_train + r]);
    }

    if (cfg.kind == Kind::Linear) {
        m.x_mean_ = Xt.colwise().mean();
        m.y_mean_ = Dt.colwise().mean();
        Eigen::MatrixXd Xc = Xt.rowwise() - m.x_mean_.transpose();
        Eigen::MatrixXd Dc = Dt.rowwise() - m.y_mean_.transpose();
        if (Xc.cols() <= Xc.rows()) {
            // Primal ridge normal equations.
            Eigen::MatrixXd G = Xc.transpose() * Xc;
            G.diagonal().array() += cfg.ridge_lambda;
            m.weights_ = G.ldlt().solve(Xc.transpose() * Dc);
        } else {
            // Underdetermined: dual form W = Xc^T (Xc Xc^T + lambda I)^-1 Dc,
            // identical to the primal solution for lambda > 0.
            Eigen::MatrixXd G = Xc * Xc.transpose();
            G.diagonal().array() += cfg.ridge_lambda;
            m.weights_ = Xc.transpose() * G.ldlt().solve(Dc);
        }
    } else {
        m.trees_.resize(static_cast<std::size_t>(n_out));
        m.target_lo_.resize(n_out);
        m.target_hi_.resize(n_out);
        m.gbt_base_.resize(n_out);
        m.gbt_lr_ = cfg.gbt.learning_rate;

        std::vector<RngStream> output_streams;
        output_streams.reserve(static_cast<std::size_t>(n_out));
        RngStream tree_rng = rng.fork("trees");
        for (Eigen::Index out = 0; out < n_out; ++out)
            output_streams.push_back(tree_rng.fork(static_cast<std::uint64_t>(out)));

        std::optional<std::vector<std::vector<int>>> presorted_storage;
        if (cfg.kind == Kind::GradientBoosting) presorted_storage = presort_features(Xt);
        const auto* presorted = presorted_storage ? &*presorted_storage : nullptr;

        parallel_for(static_cast<std::size_t>(n_out), [&](std::size_t out) {
            const Eigen::VectorXd y = Dt.col(static_cast<Eigen::Index>(out));
            m.target_lo_[static_cast<Eigen::Index>(out)] = y.minCoeff();
            m.target_hi_[static_cast<Eigen::Index>(out)] = y.maxCoeff();
            RngStream stream = output_streams[out];
            auto& forest = m.trees_[out];

            if (cfg.kind == Kind::RandomForest) {
                const int mtry = cfg.forest.mtry > 0
                                     ? cfg.forest.mtry
                                     : static_cast<int>(std::floor(std::sqrt(X.cols())));
                for (int t = 0; t < cfg.forest.n_trees; ++t) {
                    RngStream ts = stream.fork(static_cast<std::uint64_t>(t));
                    std::vector<int> idx(static_cast<std::size_t>(n_train));
                    if (cfg.forest.bootstrap) {
                        for (auto& s : idx)
                            s = static_cast<int>(ts.below(static_cast<std::uint64_t>(n_train)));
                    } else {
                        std::iota(idx.begin(), idx.end(), 0);
                    }
                    forest.push_back(fit_tree(Xt, y, std::move(idx), cfg.forest.min_leaf,
                                              cfg.forest.max_depth, mtry, 0.0, &ts));
                }
            } else {
                m.gbt_base_[static_cast<Eigen::Index>(out)] = y.mean();
                Eigen::VectorXd residual =
                    y.array() - m.gbt_base_[static_cast<Eigen::Index>(out)];
                for (int round = 0; round < cfg.gbt.n_rounds; ++round) {
                    Tree tree = fit_tree_levelwise(Xt, residual, *presorted, cfg.gbt.min_leaf,
                                                   cfg.gbt.max_depth, cfg.gbt.reg_lambda);
                    for (Eigen::Index r = 0; r < n_train; ++r)
                        residual[r] -= cfg.gbt.learning_rate * tree.predict(Xt.row(r));
                    forest.push_back(std::move(tree));
                    if (residual.cwiseAbs().maxCoeff() < 1e-14) break;
                }
            }
        });
    }

    // Validation RMSE per output from the held-out 20%.
    m.report_.rmse_per_output.assign(static_cast<std::size_t>(n_out), 0.0);
    double total_sq = 0.0;
    for (Eigen::Index r = 0; r < n_val; ++r) {
        const Eigen::VectorXd pred = m.predict(Xv.row(r).transpose());
        for (Eigen::Index out = 0; out < n_out; ++out) {
            const double e = pred[out] - Dv(r, out);
            m.report_.rmse_per_output[static_cast<std::size_t>(out)] += e * e;
            total_sq += e * e;
        }
    }
    for (auto& v : m.report_.rmse_per_output) v = std::sqrt(v / static_cast<double>(n_val));
    m.report_.rmse_total = std::sqrt(total_sq / static_cast<double>(n_val * n_out));
    m.report_.fit_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (m.report_.fit_seconds <= 0.0) m.report_.fit_seconds = 1e-9;
    return m;
}

Eigen::VectorXd ProxyModel::predict(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    if (static_cast<std::size_t>(z.size()) != n_features_)
        throw std::invalid_argument("proxy predict: feature-count mismatch");
    const auto n_out = static_cast<Eigen::Index>(n_outputs_);
    Eigen::VectorXd out(n_out);
    if (kind_ == Kind::Linear) {
        out = y_mean_ + weights_.transpose() * (z - x_mean_);
        return out;
    }
    for (Eigen::Index o = 0; o < n_out; ++o) {
        const auto& forest = trees_[static_cast<std::size_t>(o)];
        double v = 0.0;
        if (kind_ == Kind::RandomForest) {
            for (const auto& t : forest) v += t.predict(z);
            v /= static_cast<double>(forest.size());
        } else {
            v = gbt_base_[o];
            for (const auto& t : forest) v += gbt_lr_ * t.predict(z);
        }
        out[o] = std::clamp(v, target_lo_[o], target_hi_[o]);
    }
    return out;
}

Eigen::VectorXd ProxyModel::predict(const LogPermField& z) const {
    return predict(Eigen::Map<const Eigen::VectorXd>(z.values.data(),
                                                     static_cast<Eigen::Index>(z.values.size())));
}

Eigen::MatrixXd ProxyModel::predict_batch(const Eigen::MatrixXd& Z) const {
    Eigen::MatrixXd out(Z.rows(), static_cast<Eigen::Index>(n_outputs_));
    for (Eigen::Index r = 0; r < Z.rows(); ++r) out.row(r) = predict(Z.row(r).transpose());
    return out;
}

namespace {

constexpr char kProxyMagic[4] = {'C', 'H', 'M', 'L'};

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}
void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}
void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}
std::uint32_t get_u32(std::istream& in) {
    char b[4];
    in.read(b, 4);
    if (in.gcount() != 4) throw TruncatedError("truncated proxy file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
}
std::uint64_t get_u64(std::istream& in) {
    char b[8];
    in.read(b, 8);
    if (in.gcount() != 8) throw TruncatedError("truncated proxy file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
}
double get_f64(std::istream& in) {
    const std::uint64_t bits = get_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}
void put_vec(std::ostream& out, const Eigen::VectorXd& v) {
    put_u64(out, static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index c = 0; c < v.size(); ++c) put_f64(out, v[c]);
}
Eigen::VectorXd get_vec(std::istream& in) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(get_u64(in)));
    for (Eigen::Index c = 0; c < v.size(); ++c) v[c] = get_f64(in);
    return v;
}

}  // namespace

void ProxyModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out.write(kProxyMagic, 4);
    put_u32(out, 1);  // version
    put_u32(out, static_cast<std::uint32_t>(kind_));
    put_u64(out, n_features_);
    put_u64(out, n_outputs_);
    put_u64(out, split_seed_);
    if (kind_ == Kind::Linear) {
        put_vec(out, x_mean_);
        put_vec(out, y_mean_);
        put_u64(out, static_cast<std::uint64_t>(weights_.rows()));
        put_u64(out, static_cast<std::uint64_t>(weights_.cols()));
        for (Eigen::Index j = 0; j < weights_.cols(); ++j)
            for (Eigen::Index i = 0; i < weights_.rows(); ++i) put_f64(out, weights_(i, j));
    } else {
        put_f64(out, gbt_lr_);
        put_vec(out, target_lo_);
        put_vec(out, target_hi_);
        put_vec(out, gbt_base_.size() ? gbt_base_ : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_outputs_)));
        for (const auto& forest : trees_) {
            put_u64(out, forest.size());
            for (const auto& t : forest) {
                put_u64(out, t.nodes.size());
                for (const auto& nd : t.nodes) {
                    put_u32(out, static_cast<std::uint32_t>(nd.feature + 1));
                    put_f64(out, nd.threshold);
                    put_u32(out, static_cast<std::uint32_t>(nd.left + 1));
                    put_u32(out, static_cast<std::uint32_t>(nd.right + 1));
                    put_f64(out, nd.value);
                }
            }
        }
    }
}

ProxyModel ProxyModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kProxyMagic, 4) != 0)
        throw FormatError("format error: bad proxy magic");
    if (get_u32(in) != 1) throw FormatError("format error: unsupported proxy version");

    ProxyModel m;
    m.kind_ = static_cast<Kind>(get_u32(in));
    m.n_features_ = get_u64(in);
    m.n_outputs_ = get_u64(in);
    m.split_seed_ = get_u64(in);
    if (m.kind_ == Kind::Linear) {
        m.x_mean_ = get_vec(in);
        m.y_mean_ = get_vec(in);
        const auto rows = static_cast<Eigen::Index>(get_u64(in));
        const auto cols = static_cast<Eigen::Index>(get_u64(in));
        m.weights_.resize(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m.weights_(i, j) = get_f64(in);
    } else {
        m.gbt_lr_ = get_f64(in);
        m.target_lo_ = get_vec(in);
        m.target_hi_ = get_vec(in);
        m.gbt_base_ = get_vec(in);
        m.trees_.resize(m.n_outputs_);
        for (auto& forest : m.trees_) {
            forest.resize(get_u64(in));
            for (auto& t : forest) {
                t.nodes.resize(get_u64(in));
                for (auto& nd : t.nodes) {
                    nd.feature = static_cast<int>(get_u32(in)) - 1;
                    nd.threshold = get_f64(in);
                    nd.left = static_cast<int>(get_u32(in)) - 1;
                    nd.right = static_cast<int>(get_u32(in)) - 1;
                    nd.value = get_f64(in);
                }
            }
        }
    }
    return m;
}

}  // namespace chda::proxy
