#ifndef COALEX_EXPLAIN_HPP
#define COALEX_EXPLAIN_HPP

#include "coalex/core.hpp"
#include "coalex/datasets.hpp"
#include "coalex/error.hpp"
#include "coalex/rng.hpp"
#include "coalex/score.hpp"
#include "coalex/search.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace coalex {

/// Total deterministic map from a feature row (codes, feature order of the
/// model) to a target domain code.
using Predictor = std::function<int(const std::vector<int>&)>;

/// One-layer empirical model: the world is a latent confounder of all
/// features, the feature table is their empirical joint, and the target is a
/// deterministic predictor of the features. Interventions resample the
/// non-pinned features from the table.
struct EmpiricalModel {
    SampleTable table;               // feature columns (target column allowed, ignored)
    std::vector<int> feature_columns; // indices into table.columns
    Domain target_domain;
    Predictor predictor;
    std::string predictor_description;

    int feature_count() const { return static_cast<int>(feature_columns.size()); }

    const std::string& feature_name(int f) const {
        return table.columns[feature_columns[f]].name;
    }

    int feature_index(const std::string& name) const {
        for (int f = 0; f < feature_count(); ++f)
            if (feature_name(f) == name) return f;
        fail(Errc::UnknownFeature, "no feature named '" + name + "'");
    }

    std::vector<int> feature_row(std::size_t row) const {
        std::vector<int> out(feature_columns.size());
        for (std::size_t f = 0; f < feature_columns.size(); ++f)
            out[f] = table.rows[row][feature_columns[f]];
        return out;
    }
};

/// Wraps a sample table as an empirical model. Feature columns are the
/// table's ColumnRole::feature columns; the predictor sees them in order.
inline EmpiricalModel make_empirical_model(SampleTable table, Domain target_domain,
                                           Predictor predictor, std::string description) {
    EmpiricalModel m;
    for (std::size_t c = 0; c < table.columns.size(); ++c)
        if (table.columns[c].role == ColumnRole::feature)
            m.feature_columns.push_back(static_cast<int>(c));
    require(!m.feature_columns.empty(), Errc::InvalidArgument, "table has no feature columns");
    require(!table.rows.empty(), Errc::InvalidArgument, "feature table is empty");
    m.table = std::move(table);
    m.target_domain = std::move(target_domain);
    m.predictor = std::move(predictor);
    m.predictor_description = std::move(description);
    return m;
}

/// The synthesized two-AND-OR table with its own generating formula as the
/// predictor.
inline EmpiricalModel corral_model(SampleTable table) {
    EmpiricalModel m = make_empirical_model(std::move(table), Domain::boolean(), nullptr,
                                            "(A0 and A1) or (B0 and B1)");
    const int a0 = m.feature_index("A0"), a1 = m.feature_index("A1");
    const int b0 = m.feature_index("B0"), b1 = m.feature_index("B1");
    m.predictor = [a0, a1, b0, b1](const std::vector<int>& row) {
        return corral_predict(row[a0], row[a1], row[b0], row[b1]);
    };
    return m;
}

/// Feature-space coalition: pinned feature indices and their values.
struct FeatureCoalition {
    std::vector<int> features; // strictly increasing feature indices
    std::vector<int> values;
};

inline FeatureCoalition feature_coalition_from_row(const EmpiricalModel& model,
                                                   const std::vector<int>& row,
                                                   std::vector<int> features) {
    std::sort(features.begin(), features.end());
    FeatureCoalition c;
    for (int f : features) {
        require(f >= 0 && f < model.feature_count(), Errc::UnknownFeature,
                "feature index out of range");
        c.features.push_back(f);
        c.values.push_back(row[f]);
    }
    return c;
}

/// P[Yhat | do(coalition)] by marginal resampling: rows are drawn from the
/// empirical joint, coalition columns overwritten, the predictor applied.
/// n = 0 selects exact mode (average over every table row).
inline CategoricalDistribution empirical_interventional_distribution(
    const EmpiricalModel& model, const FeatureCoalition& coalition, std::uint64_t n,
    std::uint64_t seed) {
    for (int f : coalition.features)
        require(f >= 0 && f < model.feature_count(), Errc::UnknownFeature,
                "feature index out of range");
    std::vector<double> probs(static_cast<std::size_t>(model.target_domain.size()), 0.0);
    auto tally = [&](std::size_t row) {
        std::vector<int> features = model.feature_row(row);
        for (std::size_t i = 0; i < coalition.features.size(); ++i)
            features[coalition.features[i]] = coalition.values[i];
        int label = model.predictor(features);
        require(model.target_domain.contains(label), Errc::ValueOutOfDomain,
                "predictor returned a label outside the target domain");
        probs[static_cast<std::size_t>(label)] += 1.0;
    };
    if (n == 0) {
        for (std::size_t r = 0; r < model.table.rows.size(); ++r) tally(r);
        for (double& p : probs) p /= static_cast<double>(model.table.rows.size());
    } else {
        Stream stream(seed, 0x656d70ULL);
        for (std::uint64_t i = 0; i < n; ++i)
            tally(static_cast<std::size_t>(
                stream.substream(i).next_below(model.table.rows.size())));
        for (double& p : probs) p /= static_cast<double>(n);
    }
    CategoricalDistribution dist{model.target_domain, std::move(probs)};
    dist.validate();
    return dist;
}

/// Explanation score of a pinned feature set for the model's prediction on
/// one row, with both probabilities read off the empirical joint.
inline ExplanationScore model_explanation_score(const EmpiricalModel& model,
                                                const std::vector<int>& row,
                                                const FeatureCoalition& coalition,
                                                std::uint64_t n = 0, std::uint64_t seed = 0) {
    const int y = model.predictor(row);
    CategoricalDistribution base =
        empirical_interventional_distribution(model, FeatureCoalition{}, n, seed);
    CategoricalDistribution pinned =
        empirical_interventional_distribution(model, coalition, n, seed);
    EstimatorConfig cfg; // no flooring; mode is bookkeeping only here
    cfg.mode = n == 0 ? EstimatorMode::exact : EstimatorMode::monte_carlo;
    ExplanationScore out;
    out.value = detail::score_kl_from_probs(pinned.p(y), base.p(y), cfg);
    out.target_value = y;
    out.meta.mode = cfg.mode;
    out.meta.seed = seed;
    out.meta.sample_count = n;
    return out;
}

/// Size-ordered minimal coalition search against the empirical model.
inline SearchResult model_minimal_coalitions(const EmpiricalModel& model,
                                             const std::vector<int>& row, double alpha,
                                             std::size_t k_max = 0, std::uint64_t n = 0,
                                             std::uint64_t seed = 0) {
    require(alpha > 0.0 && alpha <= 1.0, Errc::InvalidArgument, "alpha must lie in (0, 1]");
    std::vector<VariableId> candidates(static_cast<std::size_t>(model.feature_count()));
    std::iota(candidates.begin(), candidates.end(), 0);
    auto score_fn = [&](const std::vector<VariableId>& members) {
        FeatureCoalition c =
            feature_coalition_from_row(model, row, std::vector<int>(members.begin(), members.end()));
        return model_explanation_score(model, row, c, n, seed).value;
    };
    SearchResult result = detail::search_minimal(candidates, k_max, alpha, false, score_fn);
    for (auto& sc : result.coalitions) {
        sc.coalition.values.clear();
        for (VariableId f : sc.coalition.members) sc.coalition.values.push_back(row[f]);
    }
    return result;
}

/// Normalized external importance scores, one per feature, checked against
/// the model's feature list.
inline std::vector<double> normalize_feature_scores(
    const EmpiricalModel& model, const std::vector<std::pair<std::string, double>>& raw) {
    require(raw.size() == static_cast<std::size_t>(model.feature_count()),
            Errc::ScoreFileMismatch, "score list does not cover the model's features");
    std::vector<double> scores(raw.size(), 0.0);
    std::vector<char> seen(raw.size(), 0);
    double total = 0.0;
    for (const auto& [name, value] : raw) {
        int f = model.feature_index(name); // throws UnknownFeature on mismatch
        require(!seen[f], Errc::ScoreFileMismatch, "duplicate score for '" + name + "'");
        seen[f] = 1;
        scores[f] = std::abs(value);
        total += std::abs(value);
    }
    require(total > 0.0, Errc::ScoreFileMismatch, "scores sum to zero");
    for (double& s : scores) s /= total;
    return scores;
}

struct FeatureOrdering {
    std::vector<int> randomize_order; // features in the order they get randomized
    std::string description;
};

namespace detail {

inline void check_ordering(const EmpiricalModel& model, const FeatureOrdering& ordering) {
    std::vector<char> seen(static_cast<std::size_t>(model.feature_count()), 0);
    require(ordering.randomize_order.size() == seen.size(), Errc::OrderingIncomplete,
            "ordering must list every feature exactly once");
    for (int f : ordering.randomize_order) {
        require(f >= 0 && f < model.feature_count() && !seen[f], Errc::OrderingIncomplete,
                "ordering must list every feature exactly once");
        seen[f] = 1;
    }
}

} // namespace detail

/// Features in ascending score order: the least important are randomized
/// first.
inline FeatureOrdering ordering_from_scores(const EmpiricalModel& model,
                                            const std::vector<double>& normalized_scores) {
    require(normalized_scores.size() == static_cast<std::size_t>(model.feature_count()),
            Errc::ScoreFileMismatch, "score list does not cover the model's features");
    FeatureOrdering o;
    o.randomize_order.resize(normalized_scores.size());
    std::iota(o.randomize_order.begin(), o.randomize_order.end(), 0);
    std::stable_sort(o.randomize_order.begin(), o.randomize_order.end(),
                     [&](int a, int b) { return normalized_scores[a] < normalized_scores[b]; });
    o.description = "scores-ascending";
    return o;
}

/// Coalition members are randomized last; the remainder leads in ascending
/// score order when scores are given, else in feature-index order.
inline FeatureOrdering ordering_coalition_last(
    const EmpiricalModel& model, const std::vector<int>& coalition,
    const std::optional<std::vector<double>>& normalized_scores = std::nullopt) {
    std::vector<char> in_coalition(static_cast<std::size_t>(model.feature_count()), 0);
    for (int f : coalition) {
        require(f >= 0 && f < model.feature_count(), Errc::UnknownFeature,
                "coalition feature index out of range");
        in_coalition[f] = 1;
    }
    std::vector<int> rest;
    for (int f = 0; f < model.feature_count(); ++f)
        if (!in_coalition[f]) rest.push_back(f);
    if (normalized_scores) {
        require(normalized_scores->size() == static_cast<std::size_t>(model.feature_count()),
                Errc::ScoreFileMismatch, "score list does not cover the model's features");
        std::stable_sort(rest.begin(), rest.end(), [&](int a, int b) {
            return (*normalized_scores)[a] < (*normalized_scores)[b];
        });
    }
    FeatureOrdering o;
    o.randomize_order = rest;
    std::vector<int> members(coalition.begin(), coalition.end());
    std::sort(members.begin(), members.end());
    o.randomize_order.insert(o.randomize_order.end(), members.begin(), members.end());
    o.description = "coalition-last";
    return o;
}

inline FeatureOrdering ordering_random(const EmpiricalModel& model, std::uint64_t seed) {
    FeatureOrdering o;
    o.randomize_order.resize(static_cast<std::size_t>(model.feature_count()));
    std::iota(o.randomize_order.begin(), o.randomize_order.end(), 0);
    Stream stream(seed, 0x6f7264ULL);
    for (std::size_t i = o.randomize_order.size(); i > 1; --i)
        std::swap(o.randomize_order[i - 1],
                  o.randomize_order[static_cast<std::size_t>(stream.next_below(i))]);
    o.description = "random";
    return o;
}

struct StabilityCurve {
    std::vector<double> stability; // index k = number of randomized features
    std::string ordering;
    std::uint64_t draws = 0; // 0 = exact mode
    std::uint64_t seed = 0;
};

/// Fraction of resampling draws that leave the prediction unchanged when the
/// first k features of the ordering are redrawn from the empirical joint and
/// the remaining F-k stay at their observed values, for k = 0..F.
/// n_draws = 0 selects exact mode (average over every table row per k).
inline StabilityCurve stability_curve(const EmpiricalModel& model, const std::vector<int>& row,
                                      const FeatureOrdering& ordering, std::uint64_t n_draws,
                                      std::uint64_t seed) {
    detail::check_ordering(model, ordering);
    const int y = model.predictor(row);
    const int F = model.feature_count();
    StabilityCurve curve;
    curve.ordering = ordering.description;
    curve.draws = n_draws;
    curve.seed = seed;
    curve.stability.reserve(static_cast<std::size_t>(F) + 1);
    for (int k = 0; k <= F; ++k) {
        auto predict_with = [&](std::size_t source_row) {
            std::vector<int> mixed = row;
            std::vector<int> drawn = model.feature_row(source_row);
            for (int i = 0; i < k; ++i)
                mixed[ordering.randomize_order[i]] = drawn[ordering.randomize_order[i]];
            return model.predictor(mixed) == y ? 1.0 : 0.0;
        };
        double stable = 0.0;
        if (k == 0) {
            stable = 1.0;
        } else if (n_draws == 0) {
            for (std::size_t r = 0; r < model.table.rows.size(); ++r) stable += predict_with(r);
            stable /= static_cast<double>(model.table.rows.size());
        } else {
            Stream stream(seed, 0x737461ULL);
            Stream per_k = stream.substream(static_cast<std::uint64_t>(k));
            for (std::uint64_t d = 0; d < n_draws; ++d)
                stable += predict_with(static_cast<std::size_t>(
                    per_k.substream(d).next_below(model.table.rows.size())));
            stable /= static_cast<double>(n_draws);
        }
        curve.stability.push_back(stable);
    }
    return curve;
}

} // namespace coalex

#endif
