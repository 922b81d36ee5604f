#ifndef COALEX_CORE_HPP
#define COALEX_CORE_HPP

#include "coalex/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace coalex {

using VariableId = int;

/// Finite ordered set of symbolic values. Ordinal codes follow declaration
/// order of the labels.
struct Domain {
    std::vector<std::string> labels;

    int size() const { return static_cast<int>(labels.size()); }

    int index_of(const std::string& label) const {
        for (int i = 0; i < size(); ++i)
            if (labels[i] == label) return i;
        fail(Errc::ValueOutOfDomain, "label '" + label + "' not in domain");
    }

    bool contains(int code) const { return code >= 0 && code < size(); }

    static Domain binary() { return Domain{{"0", "1"}}; }

    static Domain boolean() { return Domain{{"False", "True"}}; }

    bool operator==(const Domain&) const = default;
};

enum class VarKind { observed, noise, target };

struct VariableSpec {
    VariableId id = -1;
    std::string name;
    VarKind kind = VarKind::observed;
    Domain domain;
};

/// Total function from parent-value tuples to an output code. Outputs are
/// stored row-major over the parent list, last parent fastest.
struct TruthTable {
    std::vector<int> outputs;
};

/// Binary OR-with-threshold mechanism: value = noise OR
/// (count of observed parents at 1 >= threshold). The variable must have
/// exactly one noise parent; all involved variables are binary.
struct ThresholdGate {
    int threshold = 1;
};

/// Mechanism pinned to a fixed value (result of a hard intervention).
struct ConstantValue {
    int value = 0;
};

using Mechanism = std::variant<TruthTable, ThresholdGate, ConstantValue>;

/// Prior over one noise variable's domain.
struct NoisePrior {
    std::vector<double> probabilities;

    bool is_point_mass() const {
        for (double p : probabilities)
            if (p > 1.0 - 1e-12) return true;
        return false;
    }
};

/// Total or partial assignment of values; -1 marks "unassigned".
struct Observation {
    std::vector<int> values;

    explicit Observation(std::size_t n = 0) : values(n, -1) {}

    bool has(VariableId v) const { return values[v] >= 0; }
    int operator[](VariableId v) const { return values[v]; }
    void set(VariableId v, int code) { values[static_cast<std::size_t>(v)] = code; }
};

/// Sorted index set with pinned values; the unit the explanation score
/// evaluates. May mix observed and noise variables; never the target.
struct Coalition {
    std::vector<VariableId> members; // strictly increasing
    std::vector<int> values;         // aligned with members

    bool empty() const { return members.empty(); }
    std::size_t size() const { return members.size(); }

    bool operator==(const Coalition&) const = default;
};

/// Finite, discrete structural causal model. Immutable after build; all
/// stochasticity lives in the independent noise priors, mechanisms are
/// deterministic.
struct Scm {
    std::vector<VariableSpec> variables;
    std::vector<std::vector<VariableId>> parents;      // per variable
    std::vector<std::optional<Mechanism>> mechanisms;  // non-noise variables
    std::vector<std::optional<NoisePrior>> priors;     // noise variables
    std::vector<VariableId> topo_order;                // cached, target last
    VariableId target = -1;

    int size() const { return static_cast<int>(variables.size()); }

    const VariableSpec& var(VariableId v) const { return variables[v]; }

    bool is_noise(VariableId v) const { return variables[v].kind == VarKind::noise; }

    VariableId id_of(const std::string& name) const {
        for (const auto& v : variables)
            if (v.name == name) return v.id;
        fail(Errc::InvalidArgument, "no variable named '" + name + "'");
    }

    std::vector<VariableId> noise_ids() const {
        std::vector<VariableId> out;
        for (const auto& v : variables)
            if (v.kind == VarKind::noise) out.push_back(v.id);
        return out;
    }

    std::vector<VariableId> observed_ids() const {
        std::vector<VariableId> out;
        for (const auto& v : variables)
            if (v.kind != VarKind::noise) out.push_back(v.id);
        return out;
    }

    /// Observed (non-noise) parents of v, in parent-list order.
    std::vector<VariableId> observed_parents(VariableId v) const {
        std::vector<VariableId> out;
        for (VariableId p : parents[v])
            if (!is_noise(p)) out.push_back(p);
        return out;
    }

    /// The unique noise parent of v, or -1 if there is none.
    VariableId noise_parent(VariableId v) const {
        VariableId found = -1;
        for (VariableId p : parents[v])
            if (is_noise(p)) {
                if (found >= 0) return -1; // not unique
                found = p;
            }
        return found;
    }

    std::vector<VariableId> children(VariableId v) const {
        std::vector<VariableId> out;
        for (VariableId c = 0; c < size(); ++c)
            if (std::find(parents[c].begin(), parents[c].end(), v) != parents[c].end())
                out.push_back(c);
        return out;
    }

    /// True if there is a directed path from v to the target.
    bool is_ancestor_of_target(VariableId v) const {
        if (v == target) return true;
        for (VariableId c : children(v))
            if (is_ancestor_of_target(c)) return true;
        return false;
    }

    /// Fills all non-noise entries of `state` in topological order; noise
    /// entries must already be set. No validation, used by hot loops.
    void forward_fill(std::vector<int>& state) const {
        for (VariableId v : topo_order) {
            if (is_noise(v)) continue;
            const Mechanism& m = *mechanisms[v];
            if (const auto* c = std::get_if<ConstantValue>(&m)) {
                state[v] = c->value;
            } else if (const auto* g = std::get_if<ThresholdGate>(&m)) {
                int noise_val = 0;
                int count = 0;
                for (VariableId p : parents[v]) {
                    if (is_noise(p))
                        noise_val = state[p];
                    else
                        count += state[p];
                }
                state[v] = (noise_val == 1 || count >= g->threshold) ? 1 : 0;
            } else {
                const auto& tt = std::get<TruthTable>(m);
                std::size_t idx = 0;
                for (VariableId p : parents[v])
                    idx = idx * static_cast<std::size_t>(variables[p].domain.size()) +
                          static_cast<std::size_t>(state[p]);
                state[v] = tt.outputs[idx];
            }
        }
    }
};

namespace detail {

inline std::size_t truth_table_size(const Scm& scm, VariableId v) {
    std::size_t n = 1;
    for (VariableId p : scm.parents[v])
        n *= static_cast<std::size_t>(scm.variables[p].domain.size());
    return n;
}

inline std::vector<VariableId> topological_order(const Scm& scm) {
    const int n = scm.size();
    std::vector<int> in_degree(n, 0);
    for (VariableId v = 0; v < n; ++v)
        in_degree[v] = static_cast<int>(scm.parents[v].size());
    std::vector<VariableId> order;
    order.reserve(n);
    // Kahn's algorithm over ascending ids; target is kept last by index
    // convention (it has no children).
    std::vector<VariableId> ready;
    for (VariableId v = 0; v < n; ++v)
        if (in_degree[v] == 0) ready.push_back(v);
    while (!ready.empty()) {
        std::sort(ready.begin(), ready.end(), std::greater<>());
        VariableId v = ready.back();
        ready.pop_back();
        order.push_back(v);
        for (VariableId c : scm.children(v))
            if (--in_degree[c] == 0) ready.push_back(c);
    }
    require(static_cast<int>(order.size()) == n, Errc::CycleDetected,
            "edge relation contains a cycle");
    return order;
}

} // namespace detail

/// Incremental description of a model; build() validates and returns an Scm.
class ScmBuilder {
public:
    VariableId add_variable(const std::string& name, VarKind kind, Domain domain) {
        require(domain.size() >= 2, Errc::InvalidArgument,
                "domain of '" + name + "' needs at least 2 values");
        for (int i = 0; i < domain.size(); ++i)
            for (int j = i + 1; j < domain.size(); ++j)
                require(domain.labels[i] != domain.labels[j], Errc::InvalidArgument,
                        "duplicate label in domain of '" + name + "'");
        for (const auto& v : vars_)
            require(v.name != name, Errc::InvalidArgument,
                    "duplicate variable name '" + name + "'");
        VariableId id = static_cast<VariableId>(vars_.size());
        vars_.push_back({id, name, kind, std::move(domain)});
        parents_.emplace_back();
        mechanisms_.emplace_back();
        priors_.emplace_back();
        return id;
    }

    void add_edge(VariableId parent, VariableId child) {
        parents_[child].push_back(parent);
    }

    void add_edge(const std::string& parent, const std::string& child) {
        add_edge(id_of(parent), id_of(child));
    }

    void set_truth_table(VariableId v, std::vector<int> outputs) {
        mechanisms_[v] = TruthTable{std::move(outputs)};
    }

    void set_threshold_gate(VariableId v, int threshold) {
        mechanisms_[v] = ThresholdGate{threshold};
    }

    void set_constant(VariableId v, int value) { mechanisms_[v] = ConstantValue{value}; }

    void set_noise_prior(VariableId v, std::vector<double> probabilities) {
        priors_[v] = NoisePrior{std::move(probabilities)};
    }

    VariableId id_of(const std::string& name) const {
        for (const auto& v : vars_)
            if (v.name == name) return v.id;
        fail(Errc::InvalidArgument, "no variable named '" + name + "'");
    }

    Scm build() const {
        Scm scm;
        scm.variables = vars_;
        scm.parents = parents_;
        scm.mechanisms = mechanisms_;
        scm.priors = priors_;

        int target_count = 0;
        for (const auto& v : scm.variables)
            if (v.kind == VarKind::target) {
                scm.target = v.id;
                ++target_count;
            }
        require(target_count == 1, Errc::TargetNotUnique,
                "model must declare exactly one target variable");
        require(scm.target == scm.size() - 1, Errc::InvalidArgument,
                "target must be the last declared variable");

        // Graph shape first: a cyclic model has no meaningful mechanisms to
        // validate, so report the cycle rather than a table mismatch.
        scm.topo_order = detail::topological_order(scm);
        require(scm.topo_order.back() == scm.target, Errc::InvalidArgument,
                "no topological order ends at the target");

        for (const auto& v : scm.variables) {
            if (v.kind == VarKind::noise) {
                require(scm.parents[v.id].empty(), Errc::NoiseHasParents,
                        "noise variable '" + v.name + "' has parents");
                require(scm.priors[v.id].has_value(), Errc::InvalidArgument,
                        "noise variable '" + v.name + "' has no prior");
                validate_prior(v, *scm.priors[v.id]);
            } else {
                require(scm.mechanisms[v.id].has_value(), Errc::InvalidArgument,
                        "variable '" + v.name + "' has no mechanism");
                // Only observed variables must carry noise; the target may
                // be a deterministic function of its parents.
                require(v.kind != VarKind::observed ||
                            std::holds_alternative<ConstantValue>(*scm.mechanisms[v.id]) ||
                            count_noise_parents(scm, v.id) > 0,
                        Errc::ObservedWithoutNoiseParent,
                        "variable '" + v.name + "' has no noise parent");
                validate_mechanism(scm, v);
            }
        }

        return scm;
    }

private:
    static int count_noise_parents(const Scm& scm, VariableId v) {
        int n = 0;
        for (VariableId p : scm.parents[v])
            if (scm.is_noise(p)) ++n;
        return n;
    }

    static void validate_prior(const VariableSpec& v, const NoisePrior& prior) {
        require(static_cast<int>(prior.probabilities.size()) == v.domain.size(),
                Errc::InvalidArgument,
                "prior of '" + v.name + "' does not match its domain");
        double sum = 0.0;
        for (double p : prior.probabilities) {
            require(p >= 0.0, Errc::InvalidArgument,
                    "prior of '" + v.name + "' has a negative entry");
            sum += p;
        }
        require(std::abs(sum - 1.0) <= 1e-12, Errc::InvalidArgument,
                "prior of '" + v.name + "' does not sum to 1");
    }

    static void validate_mechanism(const Scm& scm, const VariableSpec& v) {
        const Mechanism& m = *scm.mechanisms[v.id];
        if (const auto* tt = std::get_if<TruthTable>(&m)) {
            require(tt->outputs.size() == detail::truth_table_size(scm, v.id),
                    Errc::IncompleteTruthTable,
                    "truth table of '" + v.name + "' does not cover every parent combination exactly once");
            for (int out : tt->outputs)
                require(v.domain.contains(out), Errc::ValueOutOfDomain,
                        "truth table of '" + v.name + "' outputs a value outside its domain");
        } else if (const auto* g = std::get_if<ThresholdGate>(&m)) {
            require(v.domain.size() == 2, Errc::UnsupportedMechanism,
                    "threshold gate on non-binary variable '" + v.name + "'");
            int observed = 0;
            int noise = 0;
            for (VariableId p : scm.parents[v.id]) {
                require(scm.variables[p].domain.size() == 2, Errc::UnsupportedMechanism,
                        "threshold gate parent '" + scm.variables[p].name + "' is not binary");
                if (scm.is_noise(p))
                    ++noise;
                else
                    ++observed;
            }
            require(noise == 1, Errc::UnsupportedMechanism,
                    "threshold gate on '" + v.name + "' needs exactly one noise parent");
            // A root gate may use threshold 1: the empty parent sum never
            // reaches it, so the node errs through its own noise only.
            require(g->threshold >= 0 && g->threshold <= std::max(observed, 1),
                    Errc::InvalidThreshold,
                    "threshold of '" + v.name + "' must lie in 0..max(1, #observed parents)");
        } else if (const auto* c = std::get_if<ConstantValue>(&m)) {
            require(v.domain.contains(c->value), Errc::ValueOutOfDomain,
                    "constant value of '" + v.name + "' lies outside its domain");
        }
    }

    std::vector<VariableSpec> vars_;
    std::vector<std::vector<VariableId>> parents_;
    std::vector<std::optional<Mechanism>> mechanisms_;
    std::vector<std::optional<NoisePrior>> priors_;
};

/// Deterministic forward pass of the structural equations. `noise` must
/// assign every noise variable a value from its domain.
inline Observation evaluate(const Scm& scm, const Observation& noise) {
    Observation out(static_cast<std::size_t>(scm.size()));
    for (VariableId v : scm.noise_ids()) {
        require(noise.has(v), Errc::MissingNoiseValue,
                "no value for noise variable '" + scm.var(v).name + "'");
        require(scm.var(v).domain.contains(noise[v]), Errc::ValueOutOfDomain,
                "value for '" + scm.var(v).name + "' outside its domain");
        out.set(v, noise[v]);
    }
    scm.forward_fill(out.values);
    return out;
}

/// Builds a coalition from (member, value) pairs, validating against the
/// model: members sorted, no duplicates, target excluded, values in domain.
inline Coalition make_coalition(const Scm& scm,
                                std::vector<std::pair<VariableId, int>> pins) {
    std::sort(pins.begin(), pins.end());
    Coalition c;
    for (const auto& [v, val] : pins) {
        require(v != scm.target, Errc::TargetInCoalition,
                "coalition must not contain the target");
        require(v >= 0 && v < scm.size(), Errc::InvalidArgument,
                "coalition member id out of range");
        require(c.members.empty() || c.members.back() != v, Errc::InvalidArgument,
                "duplicate coalition member");
        require(scm.var(v).domain.contains(val), Errc::ValueOutOfDomain,
                "pinned value for '" + scm.var(v).name + "' outside its domain");
        c.members.push_back(v);
        c.values.push_back(val);
    }
    return c;
}

/// Coalition over `members` with values copied from a total observation.
inline Coalition coalition_from_observation(const Scm& scm,
                                            const std::vector<VariableId>& members,
                                            const Observation& obs) {
    std::vector<std::pair<VariableId, int>> pins;
    pins.reserve(members.size());
    for (VariableId v : members) {
        require(obs.has(v), Errc::InvalidArgument,
                "observation has no value for '" + scm.var(v).name + "'");
        pins.emplace_back(v, obs[v]);
    }
    return make_coalition(scm, pins);
}

/// Hard intervention do(coalition): each member's mechanism becomes the
/// pinned constant and its in-edges disappear; pinned noise variables get a
/// point-mass prior. Non-members are untouched.
inline Scm apply_intervention(const Scm& scm, const Coalition& coalition) {
    Scm out = scm;
    for (std::size_t i = 0; i < coalition.members.size(); ++i) {
        VariableId v = coalition.members[i];
        int val = coalition.values[i];
        require(v != scm.target, Errc::TargetInCoalition,
                "cannot intervene on the target");
        require(scm.var(v).domain.contains(val), Errc::ValueOutOfDomain,
                "pinned value for '" + scm.var(v).name + "' outside its domain");
        if (scm.is_noise(v)) {
            std::vector<double> point(static_cast<std::size_t>(scm.var(v).domain.size()), 0.0);
            point[static_cast<std::size_t>(val)] = 1.0;
            out.priors[v] = NoisePrior{std::move(point)};
        } else {
            out.mechanisms[v] = ConstantValue{val};
            out.parents[v].clear();
        }
    }
    return out;
}

/// Structural equality, used by intervention algebra tests.
inline bool structurally_equal(const Scm& a, const Scm& b) {
    if (a.size() != b.size() || a.target != b.target) return false;
    for (VariableId v = 0; v < a.size(); ++v) {
        if (a.var(v).name != b.var(v).name || a.var(v).kind != b.var(v).kind ||
            !(a.var(v).domain == b.var(v).domain) || a.parents[v] != b.parents[v])
            return false;
        if (a.priors[v].has_value() != b.priors[v].has_value()) return false;
        if (a.priors[v] && a.priors[v]->probabilities != b.priors[v]->probabilities)
            return false;
        if (a.mechanisms[v].has_value() != b.mechanisms[v].has_value()) return false;
        if (a.mechanisms[v] && !(*a.mechanisms[v] == *b.mechanisms[v])) return false;
    }
    return true;
}

inline bool operator==(const TruthTable& x, const TruthTable& y) {
    return x.outputs == y.outputs;
}
inline bool operator==(const ThresholdGate& x, const ThresholdGate& y) {
    return x.threshold == y.threshold;
}
inline bool operator==(const ConstantValue& x, const ConstantValue& y) {
    return x.value == y.value;
}

} // namespace coalex

#endif
