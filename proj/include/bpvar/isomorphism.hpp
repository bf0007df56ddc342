#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bpvar/model.hpp"

namespace bpvar {

struct IsoOptions {
    /// When false, node attribute maps are ignored by the comparison. Kind,
    /// gateway kind, label and role always participate.
    bool compare_attributes = true;
};

struct IsoResult {
    bool isomorphic = false;
    std::map<std::string, std::string> witness; // node id in `a` -> node id in `b`
    std::string reason;                         // filled when not isomorphic

    explicit operator bool() const { return isomorphic; }
};

namespace detail {

inline std::string node_signature(const Node& n, const IsoOptions& opt) {
    std::string sig = std::string(to_string(n.kind)) + "|";
    if (n.gateway) sig += to_string(*n.gateway);
    sig += "|" + n.label + "|" + n.role;
    if (opt.compare_attributes) {
        for (const auto& [k, v] : n.attrs) sig += "|" + k + "=" + v;
    }
    return sig;
}

using EdgeGuards = std::map<std::pair<std::string, std::string>, std::multiset<std::string>>;

inline EdgeGuards edge_guards(const ProcessModel& m) {
    EdgeGuards eg;
    for (const auto& e : m.edges) eg[{e.from, e.to}].insert(e.guard);
    return eg;
}

} // namespace detail

/// Decides whether two models are the same process up to node renaming: a
/// bijection over nodes that preserves kind, gateway kind, label, role,
/// attributes (unless disabled) and every edge with its guard. Model ids and
/// model metadata are naming, not structure, and are not compared.
inline IsoResult find_isomorphism(const ProcessModel& a, const ProcessModel& b, IsoOptions opt = {}) {
    IsoResult result;

    if (a.nodes.size() != b.nodes.size()) {
        result.reason = "node counts differ: " + std::to_string(a.nodes.size()) + " vs " +
                        std::to_string(b.nodes.size());
        return result;
    }
    if (a.edges.size() != b.edges.size()) {
        result.reason = "edge counts differ: " + std::to_string(a.edges.size()) + " vs " +
                        std::to_string(b.edges.size());
        return result;
    }

    std::map<std::string, std::vector<const Node*>> b_by_sig;
    for (const auto& n : b.nodes) b_by_sig[detail::node_signature(n, opt)].push_back(&n);

    std::map<std::string, int> sig_balance;
    for (const auto& n : a.nodes) ++sig_balance[detail::node_signature(n, opt)];
    for (const auto& n : b.nodes) --sig_balance[detail::node_signature(n, opt)];
    for (const auto& [sig, bal] : sig_balance) {
        if (bal != 0) {
            result.reason = "node signature '" + sig + "' occurs " +
                            std::string(bal > 0 ? "more" : "fewer") + " times on the left";
            return result;
        }
    }

    const detail::EdgeGuards ea = detail::edge_guards(a);
    const detail::EdgeGuards eb = detail::edge_guards(b);

    // Most-constrained-first: nodes with the rarest signature are matched early.
    std::vector<const Node*> order;
    for (const auto& n : a.nodes) order.push_back(&n);
    std::sort(order.begin(), order.end(), [&](const Node* x, const Node* y) {
        const auto sx = b_by_sig.at(detail::node_signature(*x, opt)).size();
        const auto sy = b_by_sig.at(detail::node_signature(*y, opt)).size();
        if (sx != sy) return sx < sy;
        return x->id < y->id;
    });

    std::map<std::string, std::string> fwd; // a id -> b id
    std::set<std::string> used_b;

    auto edges_match = [&](const std::string& au, const std::string& av, const std::string& bu,
                           const std::string& bv) {
        auto ia = ea.find({au, av});
        auto ib = eb.find({bu, bv});
        const bool ha = ia != ea.end();
        const bool hb = ib != eb.end();
        if (ha != hb) return false;
        return !ha || ia->second == ib->second;
    };

    auto consistent = [&](const std::string& aid, const std::string& bid) {
        for (const auto& [pa, pb] : fwd) {
            if (!edges_match(aid, pa, bid, pb)) return false;
            if (!edges_match(pa, aid, pb, bid)) return false;
        }
        return edges_match(aid, aid, bid, bid);
    };

    auto backtrack = [&](auto&& self, std::size_t idx) -> bool {
        if (idx == order.size()) return true;
        const Node* an = order[idx];
        const auto& candidates = b_by_sig.at(detail::node_signature(*an, opt));
        for (const Node* bn : candidates) {
            if (used_b.count(bn->id)) continue;
            if (!consistent(an->id, bn->id)) continue;
            fwd[an->id] = bn->id;
            used_b.insert(bn->id);
            if (self(self, idx + 1)) return true;
            fwd.erase(an->id);
            used_b.erase(bn->id);
        }
        return false;
    };

    if (!backtrack(backtrack, 0)) {
        result.reason = "no node bijection preserves the edge structure";
        return result;
    }

    // Paranoia: re-verify the complete edge relation under the witness.
    detail::EdgeGuards mapped;
    for (const auto& e : a.edges) mapped[{fwd.at(e.from), fwd.at(e.to)}].insert(e.guard);
    if (mapped != eb) {
        result.reason = "witness verification failed";
        return result;
    }

    result.isomorphic = true;
    result.witness = std::move(fwd);
    return result;
}

inline bool isomorphic(const ProcessModel& a, const ProcessModel& b, IsoOptions opt = {}) {
    return find_isomorphism(a, b, opt).isomorphic;
}

} // namespace bpvar
