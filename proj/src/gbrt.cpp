#include "popgrid/gbrt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include <json.hpp>

#include "popgrid/errors.hpp"

namespace popgrid {

using nlohmann::json;

double RegressionTree::predict(std::span<const double> x) const {
    int node = 0;
    while (!nodes[static_cast<std::size_t>(node)].is_leaf()) {
        const TreeNode& tn = nodes[static_cast<std::size_t>(node)];
        node = x[static_cast<std::size_t>(tn.feature)] < tn.threshold ? tn.left : tn.right;
    }
    return nodes[static_cast<std::size_t>(node)].value;
}

int RegressionTree::depth() const {
    // Iterative depth over the node array.
    std::vector<std::pair<int, int>> stack{{0, 0}};
    int depth = 0;
    while (!stack.empty()) {
        auto [node, d] = stack.back();
        stack.pop_back();
        depth = std::max(depth, d);
        const TreeNode& tn = nodes[static_cast<std::size_t>(node)];
        if (!tn.is_leaf()) {
            stack.push_back({tn.left, d + 1});
            stack.push_back({tn.right, d + 1});
        }
    }
    return depth;
}

double GBRTModel::predict_internal(std::span<const double> x, int rounds) const {
    if (static_cast<int>(x.size()) != n_features)
        throw DataError("feature vector has dimension " + std::to_string(x.size()) +
                        ", model expects " + std::to_string(n_features));
    double pred = base_score;
    const int limit = std::min<int>(rounds, static_cast<int>(trees.size()));
    for (int k = 0; k < limit; ++k)
        pred += shrinkage * trees[static_cast<std::size_t>(k)].predict(x);
    return pred;
}

double GBRTModel::predict(std::span<const double> x) const {
    double pred = predict_internal(x, static_cast<int>(trees.size()));
    if (log_target) pred = std::expm1(pred);
    return pred < 0.0 ? 0.0 : pred;
}

namespace {

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Exact greedy: maximize sum_L^2/n_L + sum_R^2/n_R (equivalent to variance
// reduction); candidates are midpoints between consecutive distinct sorted
// values. First hit wins among equal gains, which realizes the (lower
// feature, lower threshold) tie-break because features and thresholds are
// scanned in ascending order.
SplitChoice best_split(std::span<const double> features, int d,
                       std::span<const double> residuals,
                       const std::vector<int>& rows) {
    SplitChoice best;
    const std::size_t n = rows.size();
    if (n < 2) return best;

    double total = 0.0;
    for (int r : rows) total += residuals[static_cast<std::size_t>(r)];
    const double parent_score = total * total / static_cast<double>(n);

    std::vector<std::pair<double, double>> vt(n);  // (value, residual)
    for (int f = 0; f < d; ++f) {
        for (std::size_t k = 0; k < n; ++k) {
            int r = rows[k];
            vt[k] = {features[static_cast<std::size_t>(r) * d + f],
                     residuals[static_cast<std::size_t>(r)]};
        }
        std::sort(vt.begin(), vt.end());
        if (vt.front().first == vt.back().first) continue;  // constant feature

        double left_sum = 0.0;
        std::size_t left_n = 0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            left_sum += vt[k].second;
            ++left_n;
            if (vt[k].first == vt[k + 1].first) continue;
            double right_sum = total - left_sum;
            std::size_t right_n = n - left_n;
            double score = left_sum * left_sum / static_cast<double>(left_n) +
                           right_sum * right_sum / static_cast<double>(right_n);
            double gain = score - parent_score;
            if (gain > best.gain) {
                best.found = true;
                best.feature = f;
                best.threshold = vt[k].first + (vt[k + 1].first - vt[k].first) / 2.0;
                best.gain = gain;
            }
        }
    }
    return best;
}

int build_node(std::span<const double> features, int d,
               std::span<const double> residuals, const std::vector<int>& rows,
               int depth, int max_depth, RegressionTree& tree) {
    double sum = 0.0;
    for (int r : rows) sum += residuals[static_cast<std::size_t>(r)];
    const double mean = sum / static_cast<double>(rows.size());

    int index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});

    SplitChoice split;
    if (depth < max_depth && rows.size() >= 2)
        split = best_split(features, d, residuals, rows);

    if (!split.found) {
        tree.nodes[static_cast<std::size_t>(index)].value = mean;
        return index;
    }

    std::vector<int> left_rows;
    std::vector<int> right_rows;
    for (int r : rows) {
        if (features[static_cast<std::size_t>(r) * d + split.feature] < split.threshold)
            left_rows.push_back(r);
        else
            right_rows.push_back(r);
    }

    int left = build_node(features, d, residuals, left_rows, depth + 1, max_depth, tree);
    int right = build_node(features, d, residuals, right_rows, depth + 1, max_depth, tree);
    TreeNode& tn = tree.nodes[static_cast<std::size_t>(index)];
    tn.feature = split.feature;
    tn.threshold = split.threshold;
    tn.left = left;
    tn.right = right;
    return index;
}

}  // namespace

GBRTModel gbrt_fit(std::span<const double> features, int n, int d,
                   std::span<const double> targets, const GBRTConfig& cfg) {
    if (n < 1 || d < 1) throw DataError("gbrt_fit needs n >= 1 rows and d >= 1 features");
    if (features.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(d) ||
        targets.size() != static_cast<std::size_t>(n))
        throw DataError("gbrt_fit: feature/target sizes disagree with n, d");
    if (cfg.n_rounds < 0 || cfg.max_depth < 1 || !(cfg.shrinkage > 0.0) ||
        cfg.shrinkage > 1.0)
        throw UsageError("gbrt config: rounds >= 0, depth >= 1, shrinkage in (0, 1]");
    for (double v : features)
        if (!std::isfinite(v)) throw DataError("gbrt_fit: non-finite feature value");
    for (double v : targets)
        if (!std::isfinite(v)) throw DataError("gbrt_fit: non-finite target value");

    std::vector<double> y(targets.begin(), targets.end());
    if (cfg.log_target) {
        for (double& v : y) {
            if (v < 0.0) throw DataError("gbrt_fit: negative target under log_target");
            v = std::log1p(v);
        }
    }

    GBRTModel model;
    model.shrinkage = cfg.shrinkage;
    model.log_target = cfg.log_target;
    model.n_features = d;

    // Canonical row order: lexicographic by (features, target). Leaf and
    // split sums then accumulate in an order independent of input row order.
    std::vector<int> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    std::sort(rows.begin(), rows.end(), [&](int a, int b) {
        for (int f = 0; f < d; ++f) {
            double va = features[static_cast<std::size_t>(a) * d + f];
            double vb = features[static_cast<std::size_t>(b) * d + f];
            if (va != vb) return va < vb;
        }
        return y[static_cast<std::size_t>(a)] < y[static_cast<std::size_t>(b)];
    });

    double base = 0.0;
    for (int r : rows) base += y[static_cast<std::size_t>(r)];
    base /= static_cast<double>(n);
    model.base_score = base;

    std::vector<double> pred(static_cast<std::size_t>(n), base);
    std::vector<double> residuals(static_cast<std::size_t>(n));
    for (int round = 0; round < cfg.n_rounds; ++round) {
        for (std::size_t k = 0; k < residuals.size(); ++k)
            residuals[k] = y[k] - pred[k];

        RegressionTree tree;
        build_node(features, d, residuals, rows, 0, cfg.max_depth, tree);
        for (std::size_t k = 0; k < pred.size(); ++k)
            pred[k] += cfg.shrinkage *
                       tree.predict(features.subspan(k * static_cast<std::size_t>(d),
                                                     static_cast<std::size_t>(d)));
        model.trees.push_back(std::move(tree));

        // Canonical-order accumulation keeps this permutation-invariant too.
        double mse = 0.0;
        for (int r : rows) {
            double e = y[static_cast<std::size_t>(r)] - pred[static_cast<std::size_t>(r)];
            mse += e * e;
        }
        model.train_mse.push_back(mse / static_cast<double>(n));
    }
    return model;
}

namespace {

json tree_to_json(const RegressionTree& tree, int node) {
    const TreeNode& tn = tree.nodes[static_cast<std::size_t>(node)];
    if (tn.is_leaf()) return json{{"value", tn.value}};
    return json{{"feature", tn.feature},
                {"threshold", tn.threshold},
                {"left", tree_to_json(tree, tn.left)},
                {"right", tree_to_json(tree, tn.right)}};
}

int tree_from_json(const json& j, RegressionTree& tree) {
    int index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    if (j.contains("value")) {
        tree.nodes[static_cast<std::size_t>(index)].value = j.at("value").get<double>();
        return index;
    }
    int left = tree_from_json(j.at("left"), tree);
    int right = tree_from_json(j.at("right"), tree);
    TreeNode& tn = tree.nodes[static_cast<std::size_t>(index)];
    tn.feature = j.at("feature").get<int>();
    tn.threshold = j.at("threshold").get<double>();
    tn.left = left;
    tn.right = right;
    return index;
}

}  // namespace

void save_gbrt_json(const std::filesystem::path& path, const GBRTModel& model) {
    json trees = json::array();
    for (const auto& tree : model.trees) trees.push_back(tree_to_json(tree, 0));
    json doc{{"base_score", model.base_score},
             {"shrinkage", model.shrinkage},
             {"log_target", model.log_target},
             {"n_features", model.n_features},
             {"n_rounds", model.trees.size()},
             {"train_mse", model.train_mse},
             {"trees", std::move(trees)}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << doc.dump(1) << "\n";
}

GBRTModel load_gbrt_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open GBRT model: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("invalid GBRT JSON in " + path.string() + ": " + e.what());
    }
    GBRTModel model;
    try {
        model.base_score = doc.at("base_score").get<double>();
        model.shrinkage = doc.at("shrinkage").get<double>();
        model.log_target = doc.value("log_target", false);
        model.n_features = doc.at("n_features").get<int>();
        model.train_mse = doc.value("train_mse", std::vector<double>{});
        for (const auto& jt : doc.at("trees")) {
            RegressionTree tree;
            tree_from_json(jt, tree);
            model.trees.push_back(std::move(tree));
        }
    } catch (const json::exception& e) {
        throw DataError("malformed GBRT model " + path.string() + ": " + e.what());
    }
    return model;
}

}  // namespace popgrid
